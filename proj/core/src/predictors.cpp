#include "avail/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <utility>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "avail/errors.hpp"

namespace avail {

using nlohmann::json;

namespace {

constexpr const char* form_names[] = {"flat", "weekly", "daily", "weekend"};
constexpr const char* scope_names[] = {"global", "individual"};

// Relative variance below which a regressor counts as constant; see
// CombinedFitter::calibration.
constexpr long double kDegenerateVariance = 1e-14L;

double clamp_unit(double v, PredictStats* stats) {
	if (v < 0.0 || v > 1.0) {
		if (stats)
			++stats->clamps;
		return v < 0.0 ? 0.0 : 1.0;
	}
	return v;
}

} // namespace

std::string basis_name(BasisKind kind) {
	return std::string(form_names[static_cast<int>(kind.form)]) + '_' +
			scope_names[static_cast<int>(kind.scope)];
}

std::optional<BasisKind> basis_from_name(const std::string& name) {
	for (BasisKind kind : all_basis_kinds()) {
		if (basis_name(kind) == name)
			return kind;
	}
	return std::nullopt;
}

std::string predictor_name(int predictor) {
	if (predictor >= 0 && predictor < kNumBases)
		return basis_name(basis_kind(predictor));
	if (predictor == kPredictorCombined)
		return "combined";
	if (predictor == kPredictorUninformed)
		return "uninformed";
	throw ValidationError("predictor index out of range");
}

std::int32_t class_count(BasisForm form, const SlotSpec& spec) {
	switch (form) {
	case BasisForm::kFlat:
		return 1;
	case BasisForm::kWeekly:
		return spec.slots_per_week();
	case BasisForm::kDaily:
	case BasisForm::kWeekendDaily:
		if (!spec.day_aligned())
			throw ValidationError("daily predictor forms need slot_seconds to divide a day");
		return form == BasisForm::kDaily ? spec.slots_per_day() : 2 * spec.slots_per_day();
	}
	throw ValidationError("unknown basis form");
}

std::int32_t class_of_slot(BasisForm form, const SlotSpec& spec, std::int64_t slot) {
	switch (form) {
	case BasisForm::kFlat:
		return 0;
	case BasisForm::kWeekly:
		return spec.week_column(slot);
	case BasisForm::kDaily:
		return spec.slot_of_day(slot);
	case BasisForm::kWeekendDaily:
		return spec.slot_of_day(slot) + (spec.is_weekend(slot) ? spec.slots_per_day() : 0);
	}
	throw ValidationError("unknown basis form");
}

double BasisPredictor::raw(std::int32_t row, std::int64_t slot, PredictStats* stats) const {
	const auto cls = static_cast<std::size_t>(class_of_slot(kind_.form, spec_, slot));
	if (kind_.scope == BasisScope::kIndividual) {
		const auto it = row_index_.find(row);
		if (it == row_index_.end()) {
			if (stats)
				++stats->user_fallbacks;
		} else {
			const std::size_t at = static_cast<std::size_t>(it->second) * global_.size() + cls;
			if (individual_present_[at])
				return individual_[at];
			if (stats)
				++stats->class_fallbacks;
		}
	}
	if (global_present_[cls])
		return global_[cls];
	if (stats)
		++stats->class_fallbacks;
	return grand_mean_;
}

void BasisPredictor::bind(const TraceMatrix& matrix) {
	row_index_.clear();
	for (std::size_t i = 0; i < users_.size(); ++i) {
		const std::int32_t row = matrix.row_of(users_[i]);
		if (row >= 0)
			row_index_.emplace(row, static_cast<std::int32_t>(i));
	}
}

BasisPredictor train_basis(const MatrixView& view, BasisKind kind) {
	if (view.n_rows() == 0 || view.n_slots() == 0)
		throw ValidationError("cannot train a basis on an empty view");
	const SlotSpec& spec = view.matrix().spec();
	const std::int32_t nc = class_count(kind.form, spec);

	BasisPredictor p;
	p.kind_ = kind;
	p.spec_ = spec;

	const SlotRange slots = view.slots();
	std::vector<std::int32_t> cls(static_cast<std::size_t>(slots.size()));
	for (std::int64_t k = 0; k < slots.size(); ++k)
		cls[static_cast<std::size_t>(k)] = class_of_slot(kind.form, spec, slots.first + k);

	std::vector<double> gsum(static_cast<std::size_t>(nc), 0.0);
	std::vector<std::int64_t> gcnt(static_cast<std::size_t>(nc), 0);
	const bool individual = kind.scope == BasisScope::kIndividual;
	std::vector<double> isum;
	std::vector<std::int64_t> icnt;
	if (individual) {
		isum.assign(static_cast<std::size_t>(view.n_rows()) * static_cast<std::size_t>(nc), 0.0);
		icnt.assign(isum.size(), 0);
	}

	long double total = 0.0L;
	for (std::int32_t i = 0; i < view.n_rows(); ++i) {
		double* irow = individual ? &isum[static_cast<std::size_t>(i) * static_cast<std::size_t>(nc)] : nullptr;
		std::int64_t* irow_n = individual ? &icnt[static_cast<std::size_t>(i) * static_cast<std::size_t>(nc)] : nullptr;
		for (std::int64_t k = 0; k < slots.size(); ++k) {
			const double cell = view.cell(i, slots.first + k);
			const auto c = static_cast<std::size_t>(cls[static_cast<std::size_t>(k)]);
			gsum[c] += cell;
			++gcnt[c];
			if (individual) {
				irow[c] += cell;
				++irow_n[c];
			}
			total += cell;
		}
	}

	p.grand_mean_ = static_cast<double>(total / static_cast<long double>(view.n_cells()));
	p.global_.assign(static_cast<std::size_t>(nc), 0.0);
	p.global_present_.assign(static_cast<std::size_t>(nc), 0);
	for (std::size_t c = 0; c < p.global_.size(); ++c) {
		if (gcnt[c] > 0) {
			p.global_[c] = gsum[c] / static_cast<double>(gcnt[c]);
			p.global_present_[c] = 1;
		}
	}

	if (individual) {
		p.users_.reserve(static_cast<std::size_t>(view.n_rows()));
		p.individual_.assign(isum.size(), 0.0);
		p.individual_present_.assign(isum.size(), 0);
		for (std::int32_t i = 0; i < view.n_rows(); ++i) {
			const std::int32_t row = view.matrix_row(i);
			p.users_.push_back(view.matrix().users()[static_cast<std::size_t>(row)]);
			p.row_index_.emplace(row, i);
			for (std::size_t c = 0; c < static_cast<std::size_t>(nc); ++c) {
				const std::size_t at = static_cast<std::size_t>(i) * static_cast<std::size_t>(nc) + c;
				if (icnt[at] > 0) {
					p.individual_[at] = isum[at] / static_cast<double>(icnt[at]);
					p.individual_present_[at] = 1;
				}
			}
		}
	}
	return p;
}

MortalityModel estimate_mortality(const MatrixView& view, double grace_days, double r_floor) {
	if (view.n_rows() == 0 || view.n_slots() == 0)
		throw ValidationError("cannot estimate mortality on an empty view");
	if (!(grace_days >= 0.0))
		throw ValidationError("grace_days must be >= 0");
	if (!(r_floor > 0.0 && r_floor <= 1.0))
		throw ValidationError("r_floor must be in (0,1]");
	const SlotSpec& spec = view.matrix().spec();
	const double training_days =
			static_cast<double>(view.n_slots()) * static_cast<double>(spec.slot_seconds) / kSecondsPerDay;
	if (training_days < 2.0 * grace_days)
		throw ValidationError("training period must cover at least twice the grace window");
	const double observed_days = training_days - grace_days;

	const SlotRange slots = view.slots();
	const double cutoff = static_cast<double>(slots.last) - grace_days * kSecondsPerDay / spec.slot_seconds;
	std::int64_t dead = 0;
	for (std::int32_t i = 0; i < view.n_rows(); ++i) {
		bool seen_after_cutoff = false;
		for (std::int64_t s = slots.last - 1; s >= slots.first; --s) {
			if (static_cast<double>(s) < cutoff)
				break; // everything further back is before the cutoff anyway
			if (view.cell(i, s) > 0.0) {
				seen_after_cutoff = true;
				break;
			}
		}
		if (!seen_after_cutoff)
			++dead;
	}

	MortalityModel model;
	model.t0 = slots.last;
	if (dead == 0) {
		model.r = 1.0;
	} else {
		const double alive = 1.0 - static_cast<double>(dead) / static_cast<double>(view.n_rows());
		model.r = std::max(std::pow(alive, 1.0 / observed_days), r_floor);
	}
	return model;
}

double apply_mortality(double p, const MortalityModel& model, std::int64_t slot, const SlotSpec& spec) {
	if (!(model.r > 0.0 && model.r <= 1.0))
		throw ValidationError("mortality rate outside (0,1]");
	if (slot < model.t0)
		throw ValidationError("mortality decay queried before the end of training");
	return p * model.decay(slot, spec);
}

CombinedFitter::CombinedFitter(int n_bases) : n_bases_(n_bases), dim_(n_bases + 1) {
	if (n_bases < 1)
		throw ValidationError("combined fit needs at least one basis");
	gram_.assign(static_cast<std::size_t>(dim_) * static_cast<std::size_t>(dim_), 0.0L);
	rhs_.assign(static_cast<std::size_t>(dim_), 0.0L);
}

void CombinedFitter::add(std::span<const double> values, double observation) {
	if (static_cast<int>(values.size()) != n_bases_)
		throw ValidationError("basis value count does not match the fitter");
	// Upper triangle only; the intercept is an implicit constant-1 column.
	for (int i = 0; i < dim_; ++i) {
		const long double xi = i < n_bases_ ? values[static_cast<std::size_t>(i)] : 1.0L;
		long double* row = &gram_[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim_)];
		for (int j = i; j < dim_; ++j) {
			const long double xj = j < n_bases_ ? values[static_cast<std::size_t>(j)] : 1.0L;
			row[j] += xi * xj;
		}
		rhs_[static_cast<std::size_t>(i)] += xi * static_cast<long double>(observation);
	}
	yy_ += static_cast<long double>(observation) * observation;
	++n_;
}

namespace {

inline long double gram_at(const std::vector<long double>& gram, int dim, int i, int j) {
	return i <= j ? gram[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)]
	              : gram[static_cast<std::size_t>(j) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i)];
}

} // namespace

CombinedWeights CombinedFitter::solve(double tolerance) const {
	if (n_ == 0)
		throw ValidationError("no samples accumulated");
	if (!(tolerance >= 0.0))
		throw ValidationError("tolerance must be >= 0");
	Eigen::MatrixXd g(dim_, dim_);
	Eigen::VectorXd h(dim_);
	const long double inv_n = 1.0L / static_cast<long double>(n_);
	for (int i = 0; i < dim_; ++i) {
		h(i) = static_cast<double>(rhs_[static_cast<std::size_t>(i)] * inv_n);
		for (int j = 0; j < dim_; ++j)
			g(i, j) = static_cast<double>(gram_at(gram_, dim_, i, j) * inv_n);
	}
	// Minimum-norm solution of g c = h: invert only along eigendirections
	// that carry signal. Exact duplicates among bases land in the null space
	// and share their weight evenly instead of producing huge cancelling
	// coefficients.
	Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
	if (es.info() != Eigen::Success)
		throw ValidationError("eigendecomposition of the normal equations failed");
	const double lambda_max = std::max(es.eigenvalues()(dim_ - 1), 0.0);
	const double cut = lambda_max * tolerance;
	Eigen::VectorXd c = Eigen::VectorXd::Zero(dim_);
	for (int k = 0; k < dim_; ++k) {
		const double lambda = es.eigenvalues()(k);
		if (lambda > cut && lambda > 0.0)
			c += es.eigenvectors().col(k) * (es.eigenvectors().col(k).dot(h) / lambda);
	}
	CombinedWeights weights;
	weights.c.assign(c.data(), c.data() + dim_);
	return weights;
}

LinearCalibration CombinedFitter::calibration(int i) const {
	if (i < 0 || i >= n_bases_)
		throw ValidationError("basis index out of range");
	if (n_ == 0)
		throw ValidationError("no samples accumulated");
	const auto n = static_cast<long double>(n_);
	const long double sx = gram_at(gram_, dim_, i, dim_ - 1);
	const long double sxx = gram_at(gram_, dim_, i, i);
	const long double sy = rhs_[static_cast<std::size_t>(dim_ - 1)];
	const long double sxy = rhs_[static_cast<std::size_t>(i)];
	const long double mean_y = sy / n;
	const long double var_n = sxx - sx * sx / n;
	if (!(var_n > kDegenerateVariance * sxx) || !(var_n > 0.0L))
		return {0.0, static_cast<double>(mean_y)};
	const long double a = (sxy - sx * sy / n) / var_n;
	const long double b = mean_y - a * sx / n;
	const LinearCalibration fit{static_cast<double>(a), static_cast<double>(b)};
	if (!std::isfinite(fit.a) || !std::isfinite(fit.b))
		return {0.0, static_cast<double>(mean_y)};
	return fit;
}

double CombinedFitter::objective(const CombinedWeights& weights) const {
	if (static_cast<int>(weights.c.size()) != dim_)
		throw ValidationError("weight vector length does not match the fitter");
	if (n_ == 0)
		throw ValidationError("no samples accumulated");
	long double acc = yy_;
	for (int i = 0; i < dim_; ++i) {
		acc -= 2.0L * static_cast<long double>(weights.c[static_cast<std::size_t>(i)]) *
				rhs_[static_cast<std::size_t>(i)];
		for (int j = 0; j < dim_; ++j)
			acc += static_cast<long double>(weights.c[static_cast<std::size_t>(i)]) *
					static_cast<long double>(weights.c[static_cast<std::size_t>(j)]) * gram_at(gram_, dim_, i, j);
	}
	return static_cast<double>(acc / static_cast<long double>(n_));
}

double CombinedFitter::mean_observation() const {
	if (n_ == 0)
		throw ValidationError("no samples accumulated");
	return static_cast<double>(rhs_.back() / static_cast<long double>(n_));
}

LinearCalibration fit_calibration(std::span<const double> predictions, std::span<const double> observations) {
	if (predictions.size() != observations.size())
		throw ValidationError("predictions and observations differ in length");
	if (predictions.empty())
		throw ValidationError("cannot fit a calibration on zero samples");
	CombinedFitter fitter(1);
	for (std::size_t k = 0; k < predictions.size(); ++k)
		fitter.add(std::span<const double>(&predictions[k], 1), observations[k]);
	return fitter.calibration(0);
}

CombinedWeights fit_combined(const std::vector<std::vector<double>>& basis_predictions,
		std::span<const double> observations, double tolerance) {
	if (basis_predictions.empty())
		throw ValidationError("need at least one basis");
	for (const auto& column : basis_predictions) {
		if (column.size() != observations.size())
			throw ValidationError("basis predictions and observations differ in length");
	}
	if (observations.empty())
		throw ValidationError("cannot fit combined weights on zero samples");
	CombinedFitter fitter(static_cast<int>(basis_predictions.size()));
	std::vector<double> values(basis_predictions.size());
	for (std::size_t k = 0; k < observations.size(); ++k) {
		for (std::size_t i = 0; i < basis_predictions.size(); ++i)
			values[i] = basis_predictions[i][k];
		fitter.add(values, observations[k]);
	}
	return fitter.solve(tolerance);
}

double PredictorBundle::predict_basis(int basis, std::int32_t row, std::int64_t slot,
		PredictStats* stats) const {
	if (basis < 0 || basis >= kNumBases)
		throw ValidationError("basis index out of range");
	if (stats)
		++stats->queries;
	const BasisPredictor& bp = bases[static_cast<std::size_t>(basis)];
	const double decayed = bp.raw(row, slot, stats) * mortality.decay(slot, bp.slot_spec());
	return calibrations[static_cast<std::size_t>(basis)].apply(decayed, stats);
}

double PredictorBundle::predict_combined(std::int32_t row, std::int64_t slot, PredictStats* stats) const {
	if (stats)
		++stats->queries;
	const double decay = mortality.decay(slot, slot_spec());
	double v = combined.c[kNumBases];
	for (int i = 0; i < kNumBases; ++i)
		v += combined.c[static_cast<std::size_t>(i)] * bases[static_cast<std::size_t>(i)].raw(row, slot, stats) * decay;
	return clamp_unit(v, stats);
}

double PredictorBundle::predict(int predictor, std::int32_t row, std::int64_t slot, PredictStats* stats) const {
	if (predictor == kPredictorUninformed) {
		if (stats)
			++stats->queries;
		return kUninformedPrediction;
	}
	if (predictor == kPredictorCombined)
		return predict_combined(row, slot, stats);
	return predict_basis(predictor, row, slot, stats);
}

void PredictorBundle::bind(const TraceMatrix& matrix) {
	for (BasisPredictor& basis : bases)
		basis.bind(matrix);
}

// ---- serialized artifact ----------------------------------------------

struct BasisIo {
	static json to_json(const BasisPredictor& p) {
		json j;
		j["kind"] = basis_name(p.kind_);
		j["grand_mean"] = p.grand_mean_;
		j["global"] = p.global_;
		j["global_present"] = json::array();
		for (std::uint8_t flag : p.global_present_)
			j["global_present"].push_back(static_cast<int>(flag));
		j["users"] = p.users_;
		j["individual"] = p.individual_;
		j["individual_present"] = json::array();
		for (std::uint8_t flag : p.individual_present_)
			j["individual_present"].push_back(static_cast<int>(flag));
		return j;
	}

	static BasisPredictor from_json(const json& j, const SlotSpec& spec) {
		BasisPredictor p;
		const auto kind = basis_from_name(j.at("kind").get<std::string>());
		if (!kind)
			throw ParseError("unknown basis kind '" + j.at("kind").get<std::string>() + "'");
		p.kind_ = *kind;
		p.spec_ = spec;
		p.grand_mean_ = j.at("grand_mean").get<double>();
		p.global_ = j.at("global").get<std::vector<double>>();
		for (const json& flag : j.at("global_present"))
			p.global_present_.push_back(static_cast<std::uint8_t>(flag.get<int>() != 0));
		p.users_ = j.at("users").get<std::vector<std::string>>();
		p.individual_ = j.at("individual").get<std::vector<double>>();
		for (const json& flag : j.at("individual_present"))
			p.individual_present_.push_back(static_cast<std::uint8_t>(flag.get<int>() != 0));

		if (p.global_.empty() || p.global_present_.size() != p.global_.size())
			throw ParseError("basis artifact: malformed global table");
		if (static_cast<std::int64_t>(class_count(p.kind_.form, spec)) !=
				static_cast<std::int64_t>(p.global_.size()))
			throw ParseError("basis artifact: table size does not match the slot spec");
		if (p.kind_.scope == BasisScope::kIndividual) {
			const std::size_t want = p.users_.size() * p.global_.size();
			if (p.individual_.size() != want || p.individual_present_.size() != want)
				throw ParseError("basis artifact: malformed individual table");
		} else if (!p.users_.empty() || !p.individual_.empty()) {
			throw ParseError("basis artifact: global scope with individual payload");
		}
		return p;
	}
};

void write_bundle(const PredictorBundle& bundle, const std::string& path) {
	const SlotSpec& spec = bundle.slot_spec();
	for (const BasisPredictor& basis : bundle.bases) {
		if (basis.n_classes() == 0)
			throw ValidationError("bundle holds an untrained basis");
		const SlotSpec& s = basis.slot_spec();
		if (s.epoch != spec.epoch || s.slot_seconds != spec.slot_seconds || s.utc_offset != spec.utc_offset)
			throw ValidationError("bundle bases disagree on the slot spec");
	}
	if (static_cast<int>(bundle.combined.c.size()) != kNumBases + 1)
		throw ValidationError("combined weight vector has the wrong length");

	json j;
	j["version"] = 1;
	j["slot"] = {{"epoch", spec.epoch}, {"slot_seconds", spec.slot_seconds}, {"utc_offset", spec.utc_offset}};
	j["mortality"] = {{"r", bundle.mortality.r}, {"t0", bundle.mortality.t0}};
	j["bases"] = json::array();
	for (const BasisPredictor& basis : bundle.bases)
		j["bases"].push_back(BasisIo::to_json(basis));
	j["calibrations"] = json::array();
	for (const LinearCalibration& cal : bundle.calibrations)
		j["calibrations"].push_back(json{{"a", cal.a}, {"b", cal.b}});
	j["combined"] = bundle.combined.c;

	std::ofstream out(path);
	if (!out)
		throw ParseError("cannot open " + path + " for writing");
	out << j.dump() << '\n';
}

PredictorBundle read_bundle(const std::string& path) {
	std::ifstream in(path);
	if (!in)
		throw ParseError("cannot open " + path);
	json j;
	try {
		in >> j;
	} catch (const json::exception& e) {
		throw ParseError(path + ": " + e.what());
	}
	PredictorBundle bundle;
	try {
		if (j.at("version").get<int>() != 1)
			throw ParseError(path + ": unsupported bundle version");
		SlotSpec spec;
		spec.epoch = j.at("slot").at("epoch").get<std::int64_t>();
		spec.slot_seconds = j.at("slot").at("slot_seconds").get<std::int32_t>();
		spec.utc_offset = j.at("slot").at("utc_offset").get<std::int32_t>();
		spec.validate();
		bundle.mortality.r = j.at("mortality").at("r").get<double>();
		bundle.mortality.t0 = j.at("mortality").at("t0").get<std::int64_t>();
		const json& bases = j.at("bases");
		if (bases.size() != kNumBases)
			throw ParseError(path + ": expected exactly 8 bases");
		for (int i = 0; i < kNumBases; ++i) {
			bundle.bases[static_cast<std::size_t>(i)] = BasisIo::from_json(bases.at(i), spec);
			if (!(bundle.bases[static_cast<std::size_t>(i)].kind() == basis_kind(i)))
				throw ParseError(path + ": bases out of canonical order");
		}
		const json& cals = j.at("calibrations");
		if (cals.size() != kNumBases)
			throw ParseError(path + ": expected exactly 8 calibrations");
		for (int i = 0; i < kNumBases; ++i) {
			bundle.calibrations[static_cast<std::size_t>(i)].a = cals.at(i).at("a").get<double>();
			bundle.calibrations[static_cast<std::size_t>(i)].b = cals.at(i).at("b").get<double>();
		}
		bundle.combined.c = j.at("combined").get<std::vector<double>>();
		if (static_cast<int>(bundle.combined.c.size()) != kNumBases + 1)
			throw ParseError(path + ": combined weight vector has the wrong length");
	} catch (const json::exception& e) {
		throw ParseError(path + ": " + e.what());
	}
	return bundle;
}

} // namespace avail
