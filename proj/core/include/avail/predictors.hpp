#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "avail/split.hpp"
#include "avail/trace.hpp"

namespace avail {

/// The four seasonal shapes a basis predictor can assume. Flat ignores time
/// entirely; Weekly keys on the (day-of-week, time-of-day) column; Daily keys
/// on time-of-day only; WeekendDaily keeps two daily tables, one for Mon-Fri
/// and one for Sat-Sun.
enum class BasisForm : std::int8_t {
	kFlat = 0,
	kWeekly = 1,
	kDaily = 2,
	kWeekendDaily = 3,
};

/// Global statistics pool every user; Individual keeps one table per user,
/// falling back to the global table where a user has no history.
enum class BasisScope : std::int8_t {
	kGlobal = 0,
	kIndividual = 1,
};

struct BasisKind {
	BasisForm form = BasisForm::kFlat;
	BasisScope scope = BasisScope::kGlobal;

	friend bool operator==(const BasisKind&, const BasisKind&) = default;
};

inline constexpr int kNumBases = 8;

/// Canonical basis order used everywhere (reports, weight vectors,
/// serialized artifacts): the form-major, global-before-individual listing.
constexpr int basis_index(BasisKind kind) {
	return static_cast<int>(kind.form) * 2 + static_cast<int>(kind.scope);
}

constexpr BasisKind basis_kind(int index) {
	return {static_cast<BasisForm>(index / 2), static_cast<BasisScope>(index % 2)};
}

constexpr std::array<BasisKind, kNumBases> all_basis_kinds() {
	std::array<BasisKind, kNumBases> kinds{};
	for (int i = 0; i < kNumBases; ++i)
		kinds[static_cast<std::size_t>(i)] = basis_kind(i);
	return kinds;
}

/// "flat_global", "weekend_individual", ...
std::string basis_name(BasisKind kind);
std::optional<BasisKind> basis_from_name(const std::string& name);

/// Counters describing how often prediction had to leave the happy path.
/// `queries` counts emitted predictions; the fallback counters count table
/// lookups (a combined prediction performs one lookup per basis).
struct PredictStats {
	std::uint64_t queries = 0;
	std::uint64_t user_fallbacks = 0;  ///< individual lookup for an untrained user
	std::uint64_t class_fallbacks = 0; ///< table class with no training data
	std::uint64_t clamps = 0;          ///< linear stage output left [0,1]

	void merge(const PredictStats& other) {
		queries += other.queries;
		user_fallbacks += other.user_fallbacks;
		class_fallbacks += other.class_fallbacks;
		clamps += other.clamps;
	}
};

/// Number of column classes a form distinguishes under a slot spec.
std::int32_t class_count(BasisForm form, const SlotSpec& spec);

/// Maps an absolute slot index to the form's column class.
std::int32_t class_of_slot(BasisForm form, const SlotSpec& spec, std::int64_t slot);

/// One trained seasonal-average table. Individual scope additionally keeps a
/// per-user table; lookups fall back individual-class -> global-class ->
/// grand mean, so the predictor always answers with a probability.
class BasisPredictor {
public:
	BasisPredictor() = default;

	BasisKind kind() const { return kind_; }
	const SlotSpec& slot_spec() const { return spec_; }
	std::int32_t n_classes() const { return static_cast<std::int32_t>(global_.size()); }
	double grand_mean() const { return grand_mean_; }
	const std::vector<std::string>& trained_users() const { return users_; }

	/// Mean availability stored for a column class, already fallen back to
	/// the grand mean if the class had no training cells.
	double global_value(std::int32_t cls) const {
		return global_present_[static_cast<std::size_t>(cls)] ? global_[static_cast<std::size_t>(cls)]
		                                                      : grand_mean_;
	}

	/// Raw probability for a matrix row at an absolute slot, before
	/// mortality and calibration.
	double raw(std::int32_t row, std::int64_t slot, PredictStats* stats = nullptr) const;

	/// Re-attaches a deserialized predictor to a matrix: trained users are
	/// matched by id, users missing from the matrix are dropped (queries for
	/// them take the global fallback).
	void bind(const TraceMatrix& matrix);

private:
	friend BasisPredictor train_basis(const MatrixView& view, BasisKind kind);
	friend struct BasisIo; // serialization, defined with the artifact code

	BasisKind kind_;
	SlotSpec spec_;
	double grand_mean_ = 0.5;
	std::vector<double> global_;               // one value per class
	std::vector<std::uint8_t> global_present_; // class had >= 1 training cell
	// Individual scope only: row-major users x classes, user order = users_.
	std::vector<std::string> users_;
	std::vector<double> individual_;
	std::vector<std::uint8_t> individual_present_;
	std::unordered_map<std::int32_t, std::int32_t> row_index_; // bound matrix row -> users_ index
};

/// Trains one basis table from a training view (all cells of all selected
/// users). Daily and weekend forms require day-aligned slots.
BasisPredictor train_basis(const MatrixView& view, BasisKind kind);

/// Population-level per-day survival rate and the slot where the future
/// begins. Predictions for slot t decay by r^days(t - t0).
struct MortalityModel {
	double r = 1.0;
	std::int64_t t0 = 0;

	/// Decay factor for an absolute slot >= t0; the exponent counts
	/// real-valued days.
	double decay(std::int64_t slot, const SlotSpec& spec) const {
		if (r == 1.0)
			return 1.0;
		const double days =
				static_cast<double>(slot - t0) * static_cast<double>(spec.slot_seconds) / kSecondsPerDay;
		return std::pow(r, days);
	}
};

/// Estimates r from a training view: a user counts as dead when their last
/// activity precedes (training end - grace_days); r is the per-day survival
/// rate that reproduces the observed death fraction over the observable part
/// of the window, observed_days = training_days - grace_days. Deaths inside
/// the final grace window are undetectable, which is exactly why those days
/// do not count as observed. r = 1 when nobody died; never below r_floor.
MortalityModel estimate_mortality(const MatrixView& view, double grace_days = 7.0, double r_floor = 1e-6);

/// Validated single-value decay: p * r^days, days real-valued since t0.
double apply_mortality(double p, const MortalityModel& model, std::int64_t slot, const SlotSpec& spec);

/// Affine output correction p'' = a*p' + b, clamped to [0,1] as the final
/// step.
struct LinearCalibration {
	double a = 1.0;
	double b = 0.0;

	double apply(double p, PredictStats* stats = nullptr) const {
		const double v = a * p + b;
		if (v < 0.0 || v > 1.0) {
			if (stats)
				++stats->clamps;
			return v < 0.0 ? 0.0 : 1.0;
		}
		return v;
	}
};

/// Coefficients of the combined predictor: one weight per basis in canonical
/// order plus a trailing intercept.
struct CombinedWeights {
	std::vector<double> c = std::vector<double>(kNumBases + 1, 0.0);

	double intercept() const { return c.back(); }
};

/// Streaming least-squares state over the fitting quadrant. One pass feeding
/// per-cell basis values and the observed cell yields both the combined
/// weights (normal equations, minimum-norm on rank deficiency) and the
/// per-basis ordinary-least-squares calibrations, all read from the same
/// Gram matrix.
class CombinedFitter {
public:
	explicit CombinedFitter(int n_bases = kNumBases);

	int n_bases() const { return n_bases_; }
	std::int64_t n_samples() const { return n_; }

	/// Adds one (basis values, observation) sample; `values` length must be
	/// n_bases.
	void add(std::span<const double> values, double observation);

	/// Minimum-norm least-squares weights (n_bases coefficients plus
	/// intercept). Eigenvalues below tolerance * lambda_max are treated as
	/// null directions; exact duplicates among bases then share their weight
	/// evenly instead of blowing up.
	CombinedWeights solve(double tolerance = 1e-12) const;

	/// OLS of observations on basis `i` alone: slope cov/var, intercept from
	/// the means; zero-variance inputs degrade to a = 0, b = mean(obs).
	LinearCalibration calibration(int i) const;

	/// Mean squared error of the *unclamped* linear combination on the
	/// accumulated samples; used to compare candidate weight vectors.
	double objective(const CombinedWeights& weights) const;

	/// Mean of the accumulated observations.
	double mean_observation() const;

private:
	int n_bases_;
	int dim_; // n_bases + intercept
	std::int64_t n_ = 0;
	std::vector<long double> gram_; // dim x dim, row-major, symmetric
	std::vector<long double> rhs_;  // dim
	long double yy_ = 0.0L;
};

/// Convenience wrapper over CombinedFitter for plain span inputs.
LinearCalibration fit_calibration(std::span<const double> predictions, std::span<const double> observations);
CombinedWeights fit_combined(const std::vector<std::vector<double>>& basis_predictions,
		std::span<const double> observations, double tolerance = 1e-12);

/// The ten predictors a report row carries: the eight bases in canonical
/// order, the combined predictor, and the constant-0.5 uninformed baseline.
inline constexpr int kPredictorCombined = kNumBases;
inline constexpr int kPredictorUninformed = kNumBases + 1;
inline constexpr int kNumPredictors = kNumBases + 2;

std::string predictor_name(int predictor);
inline constexpr double kUninformedPrediction = 0.5;

/// A fully fitted predictor family ready to score one user group: trained
/// tables, the transferred mortality rate, per-basis calibrations and the
/// combined weights.
class PredictorBundle {
public:
	MortalityModel mortality;
	std::array<BasisPredictor, kNumBases> bases;
	std::array<LinearCalibration, kNumBases> calibrations;
	CombinedWeights combined;

	const SlotSpec& slot_spec() const { return bases[0].slot_spec(); }

	/// Calibrated probability of one basis pipeline: clamp(a * raw * decay + b).
	double predict_basis(int basis, std::int32_t row, std::int64_t slot, PredictStats* stats = nullptr) const;

	/// Combined probability: clamp(sum_i c_i * raw_i * decay + intercept).
	double predict_combined(std::int32_t row, std::int64_t slot, PredictStats* stats = nullptr) const;

	/// Dispatch by predictor index (basis, combined or uninformed).
	double predict(int predictor, std::int32_t row, std::int64_t slot, PredictStats* stats = nullptr) const;

	/// Rebinds every basis to a matrix after deserialization.
	void bind(const TraceMatrix& matrix);
};

/// Versioned JSON artifact holding a whole bundle with exact double
/// round-trip; see the file-format notes in the README.
void write_bundle(const PredictorBundle& bundle, const std::string& path);
PredictorBundle read_bundle(const std::string& path);

} // namespace avail
