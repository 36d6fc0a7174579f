#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace avail {

inline constexpr std::int64_t kSecondsPerDay = 86400;
inline constexpr std::int64_t kSecondsPerWeek = 604800;

/// 1970-01-05 00:00 UTC, the first Monday of the Unix era.
inline constexpr std::int64_t kDefaultEpoch = 4 * kSecondsPerDay;

/// Floor division/modulo, well-defined for negative numerators.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
	std::int64_t q = a / b;
	if ((a % b != 0) && ((a < 0) != (b < 0)))
		--q;
	return q;
}

constexpr std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
	return a - floor_div(a, b) * b;
}

/// Day of week of a UTC timestamp, 0 = Monday .. 6 = Sunday.
constexpr int weekday_of_time(std::int64_t unix_seconds) {
	return static_cast<int>(floor_mod(floor_div(unix_seconds, kSecondsPerDay) + 3, 7));
}

/// One connection interval of one user. `end` is exclusive.
struct Session {
	std::string user_id;
	std::int64_t start = 0;
	std::int64_t end = 0;
};

/// Anchors the slot grid: slot s covers [epoch + s*slot_seconds, epoch + (s+1)*slot_seconds).
///
/// The epoch must fall on a Monday 00:00 in the declared trace-wide timezone
/// (a fixed UTC offset) and slot_seconds must divide a week, so that
/// day-of-week and time-of-day classes derived from slot indices are
/// calendar-correct for every slot.
struct SlotSpec {
	std::int64_t epoch = kDefaultEpoch;
	std::int32_t slot_seconds = 3600;
	std::int32_t utc_offset = 0;

	void validate() const; // throws ValidationError

	std::int32_t slots_per_week() const { return static_cast<std::int32_t>(kSecondsPerWeek / slot_seconds); }
	bool day_aligned() const { return slot_seconds <= kSecondsPerDay && kSecondsPerDay % slot_seconds == 0; }
	std::int32_t slots_per_day() const { return static_cast<std::int32_t>(kSecondsPerDay / slot_seconds); }

	/// Position of a slot within the week, in [0, slots_per_week).
	std::int32_t week_column(std::int64_t slot) const {
		return static_cast<std::int32_t>(floor_mod(slot, slots_per_week()));
	}

	/// 0 = Monday .. 6 = Sunday, of the slot's start instant.
	int day_of_week(std::int64_t slot) const {
		return static_cast<int>(static_cast<std::int64_t>(week_column(slot)) * slot_seconds / kSecondsPerDay);
	}

	std::int64_t second_of_day(std::int64_t slot) const {
		return floor_mod(static_cast<std::int64_t>(week_column(slot)) * slot_seconds, kSecondsPerDay);
	}

	bool is_weekend(std::int64_t slot) const { return day_of_week(slot) >= 5; }

	/// Slot within its day, in [0, slots_per_day). Requires day_aligned().
	std::int32_t slot_of_day(std::int64_t slot) const {
		return static_cast<std::int32_t>(floor_mod(slot, slots_per_day()));
	}

	std::int64_t slot_of_time(std::int64_t unix_seconds) const {
		return floor_div(unix_seconds - epoch, slot_seconds);
	}

	std::int64_t time_of_slot(std::int64_t slot) const { return epoch + slot * slot_seconds; }

	/// Days (real-valued) between the starts of two slots.
	double days_between(std::int64_t from_slot, std::int64_t to_slot) const {
		return static_cast<double>(to_slot - from_slot) * slot_seconds / static_cast<double>(kSecondsPerDay);
	}

	bool operator==(const SlotSpec&) const = default;
};

/// Half-open range of slot indices [first, last).
struct SlotRange {
	std::int64_t first = 0;
	std::int64_t last = 0;

	std::int64_t size() const { return last - first; }
	bool empty() const { return last <= first; }
	bool contains(std::int64_t slot) const { return slot >= first && slot < last; }
	bool contains(const SlotRange& other) const { return other.first >= first && other.last <= last; }

	bool operator==(const SlotRange&) const = default;
};

/// Dense users x slots matrix of fractional occupancy: each cell holds the
/// ratio of a slot a user spent online, in [0, 1]. Immutable once built;
/// downstream code shares it read-only.
class TraceMatrix {
public:
	TraceMatrix() = default;
	TraceMatrix(SlotSpec spec, std::vector<std::string> users, SlotRange slot_range);

	const SlotSpec& spec() const { return spec_; }
	const std::vector<std::string>& users() const { return users_; }
	SlotRange slot_range() const { return range_; }
	std::int32_t n_users() const { return static_cast<std::int32_t>(users_.size()); }
	std::int64_t n_slots() const { return range_.size(); }
	bool empty() const { return users_.empty() || range_.empty(); }

	double cell(std::int32_t row, std::int64_t slot) const {
		return cells_[static_cast<std::size_t>(row) * static_cast<std::size_t>(range_.size()) + static_cast<std::size_t>(slot - range_.first)];
	}

	void set_cell(std::int32_t row, std::int64_t slot, double value) {
		cells_[static_cast<std::size_t>(row) * static_cast<std::size_t>(range_.size()) + static_cast<std::size_t>(slot - range_.first)] = value;
	}

	std::span<const double> row_cells(std::int32_t row) const {
		return {cells_.data() + static_cast<std::size_t>(row) * static_cast<std::size_t>(range_.size()), static_cast<std::size_t>(range_.size())};
	}

	/// Row of a user id, or -1 when absent.
	std::int32_t row_of(std::string_view user) const;

	bool operator==(const TraceMatrix& other) const {
		return spec_ == other.spec_ && users_ == other.users_ && range_ == other.range_ && cells_ == other.cells_;
	}

private:
	SlotSpec spec_;
	std::vector<std::string> users_;
	std::unordered_map<std::string, std::int32_t> row_index_;
	SlotRange range_;
	std::vector<double> cells_;
};

/// Ingestion tally: how many records were seen and how many were dropped.
/// `issues` keeps the first few human-readable reasons (with source line
/// numbers when the record came from a CSV log).
struct IngestStats {
	std::size_t records_total = 0;
	std::size_t records_skipped = 0;
	std::vector<std::string> issues;
	std::size_t issues_dropped = 0;

	static constexpr std::size_t kMaxIssues = 32;
	void add_issue(std::string message);
	void merge(const IngestStats& other);
};

/// Builds the slotted availability matrix from raw sessions. Overlapping
/// sessions of one user are unioned before slotting, so a cell is exactly
/// (seconds online in slot) / slot_seconds and never exceeds 1. Sessions
/// with start >= end or starting before the epoch are skipped and counted.
/// Users appear in first-appearance order; an empty input yields an empty
/// matrix with slot_range [0, 0).
TraceMatrix ingest_sessions(std::span<const Session> sessions, const SlotSpec& spec, IngestStats* stats = nullptr);

/// Per-user and aggregate availability over a window.
struct AvailabilitySummary {
	SlotRange window;
	std::vector<std::int32_t> rows;          // matrix rows, ascending
	std::vector<double> availability;        // aligned with rows, in [0, 1]
	std::vector<std::int64_t> last_seen;     // last slot with a nonzero cell, kNeverSeen if none
	double mean_availability = 0.0;          // unweighted mean over rows

	static constexpr std::int64_t kNeverSeen = -1;

	double availability_of(std::int32_t row) const;
	std::int64_t last_seen_of(std::int32_t row) const;
};

/// Mean cell value per user over `window`, restricted to `rows` (all rows
/// when empty span is passed is NOT allowed: an empty subset is an error).
AvailabilitySummary availability(const TraceMatrix& matrix, SlotRange window, std::span<const std::int32_t> rows);

/// Convenience overload over every user of the matrix.
AvailabilitySummary availability(const TraceMatrix& matrix, SlotRange window);

/// Users retained for analysis: availability strictly greater than the
/// threshold (the filter drops "less or equal", so retention is strict).
std::vector<std::int32_t> filter_high_availability(const AvailabilitySummary& summary, double threshold);

} // namespace avail
