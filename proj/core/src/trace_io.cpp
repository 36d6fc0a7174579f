#include "avail/trace_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "avail/errors.hpp"

namespace avail {

namespace {

bool parse_i64(std::string_view text, std::int64_t& out) {
	const char* first = text.data();
	const char* last = text.data() + text.size();
	auto [ptr, ec] = std::from_chars(first, last, out);
	return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_fields(std::string_view line) {
	std::vector<std::string_view> fields;
	std::size_t begin = 0;
	for (std::size_t i = 0; i <= line.size(); ++i) {
		if (i == line.size() || line[i] == ',') {
			fields.push_back(line.substr(begin, i - begin));
			begin = i + 1;
		}
	}
	return fields;
}

std::string_view strip_cr(std::string_view line) {
	if (!line.empty() && line.back() == '\r')
		line.remove_suffix(1);
	return line;
}

} // namespace

std::vector<Session> read_session_csv(std::istream& in, IngestStats* stats) {
	IngestStats local;
	IngestStats& tally = stats ? *stats : local;
	std::vector<Session> sessions;

	std::string raw;
	std::size_t line_no = 0;
	bool header_seen = false;
	while (std::getline(in, raw)) {
		++line_no;
		const std::string_view line = strip_cr(raw);
		if (line.empty())
			continue;
		if (!header_seen) {
			header_seen = true;
			if (line == "user_id,start_unix,end_unix")
				continue;
			// No header: fall through and parse the first line as a record.
		}
		++tally.records_total;
		const auto fields = split_fields(line);
		if (fields.size() != 3 || fields[0].empty()) {
			++tally.records_skipped;
			tally.add_issue("line " + std::to_string(line_no) + ": expected user_id,start_unix,end_unix");
			continue;
		}
		Session s;
		s.user_id = std::string(fields[0]);
		if (!parse_i64(fields[1], s.start) || !parse_i64(fields[2], s.end)) {
			++tally.records_skipped;
			tally.add_issue("line " + std::to_string(line_no) + ": non-integer timestamp");
			continue;
		}
		if (s.start >= s.end) {
			++tally.records_skipped;
			tally.add_issue("line " + std::to_string(line_no) + ": start >= end");
			continue;
		}
		sessions.push_back(std::move(s));
	}
	return sessions;
}

std::vector<Session> read_session_csv_file(const std::string& path, IngestStats* stats) {
	std::ifstream in(path);
	if (!in)
		throw ParseError("cannot open session log: " + path);
	return read_session_csv(in, stats);
}

namespace {

constexpr char kMagic[4] = {'A', 'V', 'T', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::ostream& out, const void* data, std::size_t size) {
	out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

void put_u32(std::ostream& out, std::uint32_t v) {
	char buf[4];
	for (int i = 0; i < 4; ++i)
		buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
	put_bytes(out, buf, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
	char buf[8];
	for (int i = 0; i < 8; ++i)
		buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
	put_bytes(out, buf, 8);
}

void put_i64(std::ostream& out, std::int64_t v) { put_u64(out, static_cast<std::uint64_t>(v)); }
void put_i32(std::ostream& out, std::int32_t v) { put_u32(out, static_cast<std::uint32_t>(v)); }
void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void get_bytes(std::istream& in, void* data, std::size_t size) {
	in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
	if (static_cast<std::size_t>(in.gcount()) != size)
		throw ParseError("truncated matrix artifact");
}

std::uint32_t get_u32(std::istream& in) {
	unsigned char buf[4];
	get_bytes(in, buf, 4);
	std::uint32_t v = 0;
	for (int i = 0; i < 4; ++i)
		v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
	return v;
}

std::uint64_t get_u64(std::istream& in) {
	unsigned char buf[8];
	get_bytes(in, buf, 8);
	std::uint64_t v = 0;
	for (int i = 0; i < 8; ++i)
		v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
	return v;
}

std::int64_t get_i64(std::istream& in) { return static_cast<std::int64_t>(get_u64(in)); }
std::int32_t get_i32(std::istream& in) { return static_cast<std::int32_t>(get_u32(in)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

} // namespace

void write_matrix(const TraceMatrix& matrix, std::ostream& out) {
	put_bytes(out, kMagic, 4);
	put_u32(out, kVersion);
	put_i64(out, matrix.spec().epoch);
	put_i32(out, matrix.spec().slot_seconds);
	put_i32(out, matrix.spec().utc_offset);
	put_i64(out, matrix.slot_range().first);
	put_i64(out, matrix.slot_range().last);
	put_u64(out, static_cast<std::uint64_t>(matrix.n_users()));
	for (const std::string& user : matrix.users()) {
		put_u32(out, static_cast<std::uint32_t>(user.size()));
		put_bytes(out, user.data(), user.size());
	}
	for (std::int32_t row = 0; row < matrix.n_users(); ++row) {
		for (double value : matrix.row_cells(row))
			put_f64(out, value);
	}
	if (!out)
		throw ParseError("failed writing matrix artifact");
}

void write_matrix_file(const TraceMatrix& matrix, const std::string& path) {
	std::ofstream out(path, std::ios::binary);
	if (!out)
		throw ParseError("cannot open matrix artifact for writing: " + path);
	write_matrix(matrix, out);
}

TraceMatrix read_matrix(std::istream& in) {
	char magic[4];
	get_bytes(in, magic, 4);
	if (std::memcmp(magic, kMagic, 4) != 0)
		throw ParseError("not a matrix artifact (bad magic)");
	const std::uint32_t version = get_u32(in);
	if (version != kVersion)
		throw ParseError("unsupported matrix artifact version " + std::to_string(version));

	SlotSpec spec;
	spec.epoch = get_i64(in);
	spec.slot_seconds = get_i32(in);
	spec.utc_offset = get_i32(in);
	SlotRange range;
	range.first = get_i64(in);
	range.last = get_i64(in);
	const std::uint64_t n_users = get_u64(in);
	if (n_users > (1ULL << 32))
		throw ParseError("implausible user count in matrix artifact");

	std::vector<std::string> users;
	users.reserve(n_users);
	for (std::uint64_t i = 0; i < n_users; ++i) {
		const std::uint32_t len = get_u32(in);
		if (len > 4096)
			throw ParseError("implausible user id length in matrix artifact");
		std::string user(len, '\0');
		get_bytes(in, user.data(), len);
		users.push_back(std::move(user));
	}

	TraceMatrix matrix(spec, std::move(users), range);
	for (std::int32_t row = 0; row < matrix.n_users(); ++row) {
		for (std::int64_t slot = range.first; slot < range.last; ++slot)
			matrix.set_cell(row, slot, get_f64(in));
	}
	return matrix;
}

TraceMatrix read_matrix_file(const std::string& path) {
	std::ifstream in(path, std::ios::binary);
	if (!in)
		throw ParseError("cannot open matrix artifact: " + path);
	return read_matrix(in);
}

} // namespace avail
