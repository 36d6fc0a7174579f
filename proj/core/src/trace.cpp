#include "avail/trace.hpp"

#include <algorithm>
#include <utility>

#include "avail/errors.hpp"

namespace avail {

void SlotSpec::validate() const {
	if (slot_seconds <= 0)
		throw ValidationError("slot_seconds must be positive");
	if (kSecondsPerWeek % slot_seconds != 0)
		throw ValidationError("slot_seconds must divide a week (604800 s)");
	const std::int64_t local = epoch + utc_offset;
	if (floor_mod(local, kSecondsPerDay) != 0 || weekday_of_time(local) != 0)
		throw ValidationError("epoch must fall on a Monday 00:00 in the declared timezone");
}

TraceMatrix::TraceMatrix(SlotSpec spec, std::vector<std::string> users, SlotRange slot_range)
		: spec_(spec), users_(std::move(users)), range_(slot_range) {
	spec_.validate();
	if (range_.last < range_.first)
		throw ValidationError("slot_range.last must be >= slot_range.first");
	row_index_.reserve(users_.size());
	for (std::size_t i = 0; i < users_.size(); ++i) {
		auto [it, inserted] = row_index_.emplace(users_[i], static_cast<std::int32_t>(i));
		if (!inserted)
			throw ValidationError("duplicate user id: " + users_[i]);
	}
	cells_.assign(users_.size() * static_cast<std::size_t>(range_.size()), 0.0);
}

std::int32_t TraceMatrix::row_of(std::string_view user) const {
	auto it = row_index_.find(std::string(user));
	return it == row_index_.end() ? -1 : it->second;
}

void IngestStats::add_issue(std::string message) {
	if (issues.size() < kMaxIssues)
		issues.push_back(std::move(message));
	else
		++issues_dropped;
}

void IngestStats::merge(const IngestStats& other) {
	records_total += other.records_total;
	records_skipped += other.records_skipped;
	for (const auto& issue : other.issues)
		add_issue(issue);
	issues_dropped += other.issues_dropped;
}

namespace {

struct Interval {
	std::int64_t start;
	std::int64_t end;
};

// Union of possibly overlapping intervals, sorted by start.
std::vector<Interval> merge_intervals(std::vector<Interval> intervals) {
	std::sort(intervals.begin(), intervals.end(), [](const Interval& a, const Interval& b) {
		return a.start < b.start || (a.start == b.start && a.end < b.end);
	});
	std::vector<Interval> merged;
	for (const Interval& iv : intervals) {
		if (!merged.empty() && iv.start <= merged.back().end)
			merged.back().end = std::max(merged.back().end, iv.end);
		else
			merged.push_back(iv);
	}
	return merged;
}

} // namespace

TraceMatrix ingest_sessions(std::span<const Session> sessions, const SlotSpec& spec, IngestStats* stats) {
	spec.validate();
	IngestStats local;
	IngestStats& tally = stats ? *stats : local;

	std::vector<std::string> users;
	std::unordered_map<std::string, std::size_t> user_slot; // user -> index into per_user
	std::vector<std::vector<Interval>> per_user;
	std::int64_t max_end = spec.epoch;

	for (std::size_t i = 0; i < sessions.size(); ++i) {
		const Session& s = sessions[i];
		++tally.records_total;
		if (s.start >= s.end) {
			++tally.records_skipped;
			tally.add_issue("session " + std::to_string(i) + " of user '" + s.user_id + "': start >= end");
			continue;
		}
		if (s.start < spec.epoch) {
			++tally.records_skipped;
			tally.add_issue("session " + std::to_string(i) + " of user '" + s.user_id + "': starts before the epoch");
			continue;
		}
		auto [it, inserted] = user_slot.emplace(s.user_id, per_user.size());
		if (inserted) {
			users.push_back(s.user_id);
			per_user.emplace_back();
		}
		per_user[it->second].push_back({s.start, s.end});
		max_end = std::max(max_end, s.end);
	}

	if (users.empty())
		return TraceMatrix(spec, {}, {0, 0});

	const std::int64_t last_slot = floor_div(max_end - spec.epoch - 1, spec.slot_seconds) + 1;
	TraceMatrix matrix(spec, std::move(users), {0, last_slot});

	const double slot_seconds = static_cast<double>(spec.slot_seconds);
	for (std::size_t row = 0; row < per_user.size(); ++row) {
		for (const Interval& iv : merge_intervals(std::move(per_user[row]))) {
			std::int64_t slot = spec.slot_of_time(iv.start);
			const std::int64_t end_slot = spec.slot_of_time(iv.end - 1);
			for (; slot <= end_slot; ++slot) {
				const std::int64_t slot_start = spec.time_of_slot(slot);
				const std::int64_t overlap = std::min(iv.end, slot_start + spec.slot_seconds) - std::max(iv.start, slot_start);
				matrix.set_cell(static_cast<std::int32_t>(row), slot,
						matrix.cell(static_cast<std::int32_t>(row), slot) + static_cast<double>(overlap) / slot_seconds);
			}
		}
	}
	return matrix;
}

double AvailabilitySummary::availability_of(std::int32_t row) const {
	auto it = std::lower_bound(rows.begin(), rows.end(), row);
	if (it == rows.end() || *it != row)
		throw ValidationError("row " + std::to_string(row) + " not covered by this summary");
	return availability[static_cast<std::size_t>(it - rows.begin())];
}

std::int64_t AvailabilitySummary::last_seen_of(std::int32_t row) const {
	auto it = std::lower_bound(rows.begin(), rows.end(), row);
	if (it == rows.end() || *it != row)
		throw ValidationError("row " + std::to_string(row) + " not covered by this summary");
	return last_seen[static_cast<std::size_t>(it - rows.begin())];
}

AvailabilitySummary availability(const TraceMatrix& matrix, SlotRange window, std::span<const std::int32_t> rows) {
	if (window.empty())
		throw ValidationError("availability window is empty");
	if (!matrix.slot_range().contains(window))
		throw ValidationError("availability window is outside the matrix slot range");
	if (rows.empty())
		throw ValidationError("availability user subset is empty");

	AvailabilitySummary summary;
	summary.window = window;
	summary.rows.assign(rows.begin(), rows.end());
	std::sort(summary.rows.begin(), summary.rows.end());
	summary.availability.reserve(summary.rows.size());
	summary.last_seen.reserve(summary.rows.size());

	double total = 0.0;
	for (std::int32_t row : summary.rows) {
		if (row < 0 || row >= matrix.n_users())
			throw ValidationError("row " + std::to_string(row) + " out of range");
		double sum = 0.0;
		std::int64_t last = AvailabilitySummary::kNeverSeen;
		for (std::int64_t slot = window.first; slot < window.last; ++slot) {
			const double value = matrix.cell(row, slot);
			sum += value;
			if (value > 0.0)
				last = slot;
		}
		const double mean = sum / static_cast<double>(window.size());
		summary.availability.push_back(mean);
		summary.last_seen.push_back(last);
		total += mean;
	}
	summary.mean_availability = total / static_cast<double>(summary.rows.size());
	return summary;
}

AvailabilitySummary availability(const TraceMatrix& matrix, SlotRange window) {
	std::vector<std::int32_t> rows(static_cast<std::size_t>(matrix.n_users()));
	for (std::int32_t i = 0; i < matrix.n_users(); ++i)
		rows[static_cast<std::size_t>(i)] = i;
	return availability(matrix, window, rows);
}

std::vector<std::int32_t> filter_high_availability(const AvailabilitySummary& summary, double threshold) {
	if (threshold < 0.0 || threshold > 1.0)
		throw ValidationError("availability threshold must be in [0, 1]");
	std::vector<std::int32_t> kept;
	for (std::size_t i = 0; i < summary.rows.size(); ++i) {
		if (summary.availability[i] > threshold)
			kept.push_back(summary.rows[i]);
	}
	return kept;
}

} // namespace avail
