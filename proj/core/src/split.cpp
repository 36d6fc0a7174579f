#include "avail/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>
#include <utility>

#include <nlohmann/json.hpp>

#include "avail/errors.hpp"
#include "avail/rng.hpp"

namespace avail {

using nlohmann::json;

MatrixView::MatrixView(const TraceMatrix& matrix, std::vector<std::int32_t> rows, SlotRange slots)
		: matrix_(&matrix), rows_(std::move(rows)), slots_(slots) {
	if (!matrix.slot_range().contains(slots_))
		throw ValidationError("view slot range outside the matrix");
	for (std::int32_t row : rows_) {
		if (row < 0 || row >= matrix.n_users())
			throw ValidationError("view row out of range");
	}
}

void QuadrantSplit::validate(const TraceMatrix& matrix) const {
	if (training_period.empty() || test_period.empty())
		throw ValidationError("split periods must be non-empty");
	if (training_period.last != test_period.first)
		throw ValidationError("training period must end where the test period begins");
	if (!matrix.slot_range().contains(training_period) || !matrix.slot_range().contains(test_period))
		throw ValidationError("split periods outside the matrix slot range");
	if (training_users.empty() || test_users.empty())
		throw ValidationError("split user groups must be non-empty");
	for (std::int32_t row : training_users) {
		if (row < 0 || row >= matrix.n_users())
			throw ValidationError("split user row out of range");
	}
	std::unordered_set<std::int32_t> seen(training_users.begin(), training_users.end());
	for (std::int32_t row : test_users) {
		if (row < 0 || row >= matrix.n_users())
			throw ValidationError("split user row out of range");
		if (seen.count(row))
			throw ValidationError("training and test users overlap");
	}
}

QuadrantSplit make_split(const TraceMatrix& matrix, std::int64_t test_start, std::int64_t training_len,
		std::int64_t test_len, double user_fraction, std::uint64_t seed,
		std::optional<std::int32_t> sample_cap) {
	if (training_len <= 0 || test_len <= 0)
		throw ValidationError("training_len and test_len must be positive");
	if (!(user_fraction > 0.0 && user_fraction < 1.0))
		throw ValidationError("user_fraction must be in (0, 1)");
	const SlotRange training_period{test_start - training_len, test_start};
	const SlotRange test_period{test_start, test_start + test_len};
	if (!matrix.slot_range().contains(training_period) || !matrix.slot_range().contains(test_period))
		throw ValidationError("split periods outside the matrix slot range");
	const std::int32_t n = matrix.n_users();
	if (n < 2)
		throw ValidationError("need at least 2 users to split");

	std::vector<std::int32_t> order(static_cast<std::size_t>(n));
	for (std::int32_t i = 0; i < n; ++i)
		order[static_cast<std::size_t>(i)] = i;
	Rng rng = Rng::derive(seed, {rng_tag::kSplit});
	for (std::size_t i = order.size() - 1; i > 0; --i) // Fisher-Yates
		std::swap(order[i], order[rng.next_below(i + 1)]);

	std::int64_t n_training = std::llround(user_fraction * static_cast<double>(n));
	n_training = std::clamp<std::int64_t>(n_training, 1, n - 1);

	QuadrantSplit split;
	split.seed = seed;
	split.training_period = training_period;
	split.test_period = test_period;
	split.training_users.assign(order.begin(), order.begin() + n_training);
	split.test_users.assign(order.begin() + n_training, order.end());
	if (sample_cap) {
		if (*sample_cap < 1)
			throw ValidationError("sample_cap must be >= 1");
		if (std::cmp_greater(split.training_users.size(), *sample_cap))
			split.training_users.resize(static_cast<std::size_t>(*sample_cap));
		if (std::cmp_greater(split.test_users.size(), *sample_cap))
			split.test_users.resize(static_cast<std::size_t>(*sample_cap));
	}
	std::sort(split.training_users.begin(), split.training_users.end());
	std::sort(split.test_users.begin(), split.test_users.end());
	split.validate(matrix);
	return split;
}

QuadrantSplit with_users(const QuadrantSplit& split, std::vector<std::int32_t> training_users,
		std::vector<std::int32_t> test_users) {
	QuadrantSplit out = split;
	out.training_users = std::move(training_users);
	out.test_users = std::move(test_users);
	std::sort(out.training_users.begin(), out.training_users.end());
	std::sort(out.test_users.begin(), out.test_users.end());
	if (out.training_users.empty() || out.test_users.empty())
		throw ValidationError("with_users: user groups must be non-empty");
	std::unordered_set<std::int32_t> seen(out.training_users.begin(), out.training_users.end());
	for (std::int32_t row : out.test_users) {
		if (seen.count(row))
			throw ValidationError("with_users: training and test users overlap");
	}
	return out;
}

void write_split(const QuadrantSplit& split, const TraceMatrix& matrix, const std::string& path) {
	json training = json::array();
	for (std::int32_t row : split.training_users)
		training.push_back(matrix.users()[static_cast<std::size_t>(row)]);
	json test = json::array();
	for (std::int32_t row : split.test_users)
		test.push_back(matrix.users()[static_cast<std::size_t>(row)]);
	const json j{{"version", 1},
			{"seed", split.seed},
			{"training_period", json{{"first", split.training_period.first}, {"last", split.training_period.last}}},
			{"test_period", json{{"first", split.test_period.first}, {"last", split.test_period.last}}},
			{"training_users", training},
			{"test_users", test}};
	std::ofstream out(path);
	if (!out)
		throw ParseError("cannot open " + path + " for writing");
	out << j.dump() << '\n';
}

QuadrantSplit read_split(const TraceMatrix& matrix, const std::string& path) {
	std::ifstream in(path);
	if (!in)
		throw ParseError("cannot open " + path);
	json j;
	try {
		in >> j;
	} catch (const json::exception& e) {
		throw ParseError(path + ": " + e.what());
	}
	QuadrantSplit split;
	try {
		if (j.value("version", 0) != 1)
			throw ParseError(path + ": unsupported split artifact version");
		split.seed = j.value("seed", std::uint64_t{0});
		split.training_period = {j.at("training_period").at("first").get<std::int64_t>(),
				j.at("training_period").at("last").get<std::int64_t>()};
		split.test_period = {j.at("test_period").at("first").get<std::int64_t>(),
				j.at("test_period").at("last").get<std::int64_t>()};
		for (const json& user : j.at("training_users")) {
			const std::int32_t row = matrix.row_of(user.get<std::string>());
			if (row < 0)
				throw ParseError(path + ": unknown user '" + user.get<std::string>() + "'");
			split.training_users.push_back(row);
		}
		for (const json& user : j.at("test_users")) {
			const std::int32_t row = matrix.row_of(user.get<std::string>());
			if (row < 0)
				throw ParseError(path + ": unknown user '" + user.get<std::string>() + "'");
			split.test_users.push_back(row);
		}
	} catch (const json::exception& e) {
		throw ParseError(path + ": " + e.what());
	}
	std::sort(split.training_users.begin(), split.training_users.end());
	std::sort(split.test_users.begin(), split.test_users.end());
	split.validate(matrix);
	return split;
}

} // namespace avail
