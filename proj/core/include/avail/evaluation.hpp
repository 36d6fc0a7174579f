#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avail/predictors.hpp"
#include "avail/split.hpp"
#include "avail/trace.hpp"

namespace avail {

/// Squared-error accumulator over (prediction, observation) cells. With a
/// fractional observation x the per-cell error is x(1-p)^2 + (1-x)p^2, which
/// reduces to the usual two-case rule when x is 0 or 1 and makes p = 0.5
/// score exactly 0.25 against anything.
class MseAccumulator {
public:
	void add(double p, double x) {
		const double online = 1.0 - p;
		sum_ += static_cast<long double>(x * online * online + (1.0 - x) * p * p);
		++n_;
	}

	std::int64_t count() const { return n_; }

	double value() const;

private:
	long double sum_ = 0.0L;
	std::int64_t n_ = 0;
};

/// MSE of aligned prediction/observation sequences (canonical order is the
/// order given).
double mse(std::span<const double> predictions, std::span<const double> observations);

/// Per-user availability/last-seen statistics computed through a view, so
/// the reads are visible to any attached AccessProbe.
AvailabilitySummary availability(const MatrixView& view);

/// Everything one experiment row needs: periods come from the split, the
/// rest from here.
struct EvalConfig {
	std::vector<std::int64_t> training_lengths; // slots, one report row each
	std::int64_t test_start = 0;                // absolute slot
	std::int64_t test_len = 0;                  // slots
	double user_fraction = 0.5;
	std::optional<std::int32_t> sample_cap;
	double availability_threshold = 0.17;
	double grace_days = 7.0;
	double r_floor = 1e-6;
	std::int64_t stride = 1; // sample every stride-th test slot when fitting/scoring
	std::uint64_t seed = 0;

	void validate() const;
};

/// The four protocol phases plus the initial availability filter. Hooks see
/// each phase exactly once, in order, before the phase body runs.
enum class ProtocolPhase {
	kFiltering = 0,
	kTraining = 1,
	kFitting = 2,
	kRetraining = 3,
	kScoring = 4,
};

const char* to_string(ProtocolPhase phase);

/// Test instrumentation for run_protocol: `probe` is attached to every
/// matrix view the protocol reads through, `on_phase` fires at each phase
/// boundary.
struct ProtocolHooks {
	std::function<void(ProtocolPhase)> on_phase;
	const AccessProbe* probe = nullptr;
};

/// Outcome of one four-phase run. q4_mse is the headline score; the fitting
/// quadrant MSEs are kept as diagnostics because the least-squares
/// optimality guarantees hold there.
struct ProtocolResult {
	QuadrantSplit split; // after availability filtering
	PredictorBundle bundle; // scoring-side pipelines (retrained tables)
	std::array<double, kNumPredictors> q4_mse{};
	std::array<double, kNumPredictors> q2_mse{};
	std::array<double, kNumBases> q2_uncalibrated_mse{};
	std::array<PredictStats, kNumPredictors> scoring_stats{};
	std::int32_t training_users_before = 0;
	std::int32_t training_users_after = 0;
	std::int32_t test_users_before = 0;
	std::int32_t test_users_after = 0;
	std::int64_t scored_cells = 0;
};

/// Runs the four-phase protocol on one split: filter both user groups by
/// training-period availability, train the bases and the mortality rate on
/// the training users' training period, fit calibrations and combined
/// weights on the training users' test period, retrain tables on the test
/// users' training period, and finally score the test users' test period.
/// The tuned parameters (r, calibrations, combined weights) transfer from
/// the training-user side; observations of the scoring quadrant are only
/// ever read in the scoring phase.
ProtocolResult run_protocol(const TraceMatrix& matrix, const QuadrantSplit& split, const EvalConfig& config,
		const ProtocolHooks* hooks = nullptr);

/// One row of the training-length experiment grid.
struct EvalRow {
	std::int64_t training_length = 0;
	bool available = false;
	std::string note; // why the row is unavailable, empty otherwise
	std::array<double, kNumPredictors> mse{};
	std::array<PredictStats, kNumPredictors> scoring_stats{};
	std::int32_t training_users_before = 0;
	std::int32_t training_users_after = 0;
	std::int32_t test_users_before = 0;
	std::int32_t test_users_after = 0;
};

struct EvalReport {
	EvalConfig config;
	std::vector<EvalRow> rows;
};

/// Builds one split per training length (same seed, so the user partition
/// is shared across rows) and runs the protocol on each. A length that does
/// not fit the trace, or a filter that empties a user group, marks the row
/// unavailable and the run continues.
EvalReport run_grid(const TraceMatrix& matrix, const EvalConfig& config);

/// CSV report: one row per training length, one column per predictor (the
/// eight bases in canonical order, combined, uninformed); unavailable rows
/// carry "na" cells.
void write_report_csv(const EvalReport& report, const std::string& path);

/// Full report with user counts, prediction statistics and notes.
void write_report_json(const EvalReport& report, const std::string& path);

/// k-means clustering of users by weekly availability profile.
struct ClusterResult {
	std::int32_t k = 0;
	std::vector<std::int32_t> assignment;       // per view row
	std::vector<std::vector<double>> centroids; // k x slots-per-week
	std::vector<std::int32_t> sizes;            // members per cluster
	double wcss = 0.0;                          // within-cluster sum of squares
	std::vector<double> wcss_trace;             // objective after each iteration
	std::int32_t iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding over per-user weekly profiles,
/// deterministic per seed. An emptied cluster is re-seeded from the point
/// farthest from its centroid. Ties in every argmin break toward the lower
/// index.
ClusterResult cluster_users(const MatrixView& view, std::int32_t k, std::uint64_t seed,
		std::int32_t max_iterations = 100);

/// Plot data: per absolute slot of the view window, the number of each
/// cluster's members online in that slot (columns slot, time_unix,
/// cluster_0..cluster_{k-1}). A member is online iff its cell is nonzero.
void write_cluster_csv(const ClusterResult& result, const MatrixView& view, const std::string& path);

/// Assignments, sizes and centroids as a JSON artifact.
void write_cluster_json(const ClusterResult& result, const MatrixView& view, const std::string& path);

} // namespace avail
