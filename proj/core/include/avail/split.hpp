#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avail/trace.hpp"

namespace avail {

/// Test-only hook: observes every cell read going through a MatrixView.
/// The protocol-fidelity suite uses it to prove evaluation observations are
/// never touched before the scoring phase.
class AccessProbe {
public:
	virtual ~AccessProbe() = default;
	virtual void on_cell_access(std::int32_t matrix_row, std::int64_t slot) const = 0;
};

/// Read-only window into a TraceMatrix: a user subset crossed with a slot
/// range. Cheap to copy; rows are matrix row indices.
class MatrixView {
public:
	MatrixView() = default;
	MatrixView(const TraceMatrix& matrix, std::vector<std::int32_t> rows, SlotRange slots);

	const TraceMatrix& matrix() const { return *matrix_; }
	const std::vector<std::int32_t>& rows() const { return rows_; }
	SlotRange slots() const { return slots_; }
	std::int32_t n_rows() const { return static_cast<std::int32_t>(rows_.size()); }
	std::int64_t n_slots() const { return slots_.size(); }
	std::int64_t n_cells() const { return static_cast<std::int64_t>(rows_.size()) * slots_.size(); }

	/// Cell of the i-th selected user at an absolute slot index.
	double cell(std::int32_t i, std::int64_t slot) const {
		const std::int32_t row = rows_[static_cast<std::size_t>(i)];
		if (probe_)
			probe_->on_cell_access(row, slot);
		return matrix_->cell(row, slot);
	}

	std::int32_t matrix_row(std::int32_t i) const { return rows_[static_cast<std::size_t>(i)]; }

	void set_probe(const AccessProbe* probe) { probe_ = probe; }

private:
	const TraceMatrix* matrix_ = nullptr;
	std::vector<std::int32_t> rows_;
	SlotRange slots_;
	const AccessProbe* probe_ = nullptr;
};

/// The four-way partition of users x time used by the evaluation protocol:
/// disjoint training/test user groups crossed with contiguous training and
/// test periods. Q1 = training users x training period (train), Q2 =
/// training users x test period (fit), Q3 = test users x training period
/// (retrain), Q4 = test users x test period (score).
struct QuadrantSplit {
	std::vector<std::int32_t> training_users; // matrix rows, ascending
	std::vector<std::int32_t> test_users;     // matrix rows, ascending
	SlotRange training_period;
	SlotRange test_period;
	std::uint64_t seed = 0;

	void validate(const TraceMatrix& matrix) const;

	MatrixView q1(const TraceMatrix& m) const { return {m, training_users, training_period}; }
	MatrixView q2(const TraceMatrix& m) const { return {m, training_users, test_period}; }
	MatrixView q3(const TraceMatrix& m) const { return {m, test_users, training_period}; }
	MatrixView q4(const TraceMatrix& m) const { return {m, test_users, test_period}; }
};

/// Chops the matrix for one experiment: the training period is the
/// `training_len` slots immediately before `test_start` (going backwards in
/// time from the test period), the test period the `test_len` slots from
/// `test_start` on. Users are partitioned uniformly at random by `seed`;
/// `user_fraction` of them train, the rest test, each side optionally capped
/// at `sample_cap`. Deterministic for a fixed seed.
QuadrantSplit make_split(const TraceMatrix& matrix, std::int64_t test_start, std::int64_t training_len,
		std::int64_t test_len, double user_fraction, std::uint64_t seed,
		std::optional<std::int32_t> sample_cap = std::nullopt);

/// Replaces a split's user groups (after availability filtering) keeping the
/// periods; enforces disjointness and re-sorts.
QuadrantSplit with_users(const QuadrantSplit& split, std::vector<std::int32_t> training_users,
		std::vector<std::int32_t> test_users);

/// Small replayable text artifact (JSON) describing a split.
void write_split(const QuadrantSplit& split, const TraceMatrix& matrix, const std::string& path);
QuadrantSplit read_split(const TraceMatrix& matrix, const std::string& path);

} // namespace avail
