#include "avail/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <utility>

#include <nlohmann/json.hpp>

#include "avail/errors.hpp"
#include "avail/rng.hpp"
#include "avail/text.hpp"

namespace avail {

using nlohmann::json;

double MseAccumulator::value() const {
	if (n_ == 0)
		throw ValidationError("empty evaluation set");
	return static_cast<double>(sum_ / static_cast<long double>(n_));
}

double mse(std::span<const double> predictions, std::span<const double> observations) {
	if (predictions.size() != observations.size())
		throw ValidationError("predictions and observations differ in length");
	MseAccumulator acc;
	for (std::size_t i = 0; i < predictions.size(); ++i)
		acc.add(predictions[i], observations[i]);
	return acc.value();
}

AvailabilitySummary availability(const MatrixView& view) {
	if (view.n_rows() == 0)
		throw ValidationError("empty user subset");
	if (view.n_slots() <= 0)
		throw ValidationError("empty window");
	std::vector<std::int32_t> order(static_cast<std::size_t>(view.n_rows()));
	std::iota(order.begin(), order.end(), 0);
	std::sort(order.begin(), order.end(),
			[&](std::int32_t a, std::int32_t b) { return view.matrix_row(a) < view.matrix_row(b); });
	for (std::size_t i = 1; i < order.size(); ++i) {
		if (view.matrix_row(order[i]) == view.matrix_row(order[i - 1]))
			throw ValidationError("duplicate row in view");
	}

	AvailabilitySummary summary;
	summary.window = view.slots();
	summary.rows.reserve(order.size());
	summary.availability.reserve(order.size());
	summary.last_seen.reserve(order.size());
	long double total = 0.0L;
	for (std::int32_t i : order) {
		long double sum = 0.0L;
		std::int64_t last = AvailabilitySummary::kNeverSeen;
		for (std::int64_t slot = view.slots().first; slot < view.slots().last; ++slot) {
			const double cell = view.cell(i, slot);
			sum += cell;
			if (cell > 0.0)
				last = slot;
		}
		const double user_avail = static_cast<double>(sum / static_cast<long double>(view.n_slots()));
		summary.rows.push_back(view.matrix_row(i));
		summary.availability.push_back(user_avail);
		summary.last_seen.push_back(last);
		total += user_avail;
	}
	summary.mean_availability = static_cast<double>(total / static_cast<long double>(view.n_rows()));
	return summary;
}

void EvalConfig::validate() const {
	if (training_lengths.empty())
		throw ValidationError("need at least one training length");
	for (std::int64_t len : training_lengths) {
		if (len <= 0)
			throw ValidationError("training lengths must be positive");
	}
	if (test_len <= 0)
		throw ValidationError("test_len must be positive");
	if (!(user_fraction > 0.0 && user_fraction < 1.0))
		throw ValidationError("user_fraction must be in (0, 1)");
	if (!(availability_threshold >= 0.0 && availability_threshold <= 1.0))
		throw ValidationError("availability_threshold must be in [0, 1]");
	if (!(grace_days >= 0.0))
		throw ValidationError("grace_days must be >= 0");
	if (!(r_floor > 0.0 && r_floor <= 1.0))
		throw ValidationError("r_floor must be in (0, 1]");
	if (stride < 1)
		throw ValidationError("stride must be >= 1");
	if (sample_cap && *sample_cap < 1)
		throw ValidationError("sample_cap must be >= 1");
}

const char* to_string(ProtocolPhase phase) {
	switch (phase) {
	case ProtocolPhase::kFiltering:
		return "filtering";
	case ProtocolPhase::kTraining:
		return "training";
	case ProtocolPhase::kFitting:
		return "fitting";
	case ProtocolPhase::kRetraining:
		return "retraining";
	case ProtocolPhase::kScoring:
		return "scoring";
	}
	return "?";
}

namespace {

CombinedWeights embed_basis(int basis, const LinearCalibration& cal) {
	CombinedWeights w;
	w.c.assign(kNumBases + 1, 0.0);
	w.c[static_cast<std::size_t>(basis)] = cal.a;
	w.c[kNumBases] = cal.b;
	return w;
}

} // namespace

ProtocolResult run_protocol(const TraceMatrix& matrix, const QuadrantSplit& split, const EvalConfig& config,
		const ProtocolHooks* hooks) {
	config.validate();
	split.validate(matrix);

	const auto phase = [&](ProtocolPhase p) {
		if (hooks && hooks->on_phase)
			hooks->on_phase(p);
	};
	const AccessProbe* probe = hooks ? hooks->probe : nullptr;
	const auto view_of = [&](const std::vector<std::int32_t>& rows, SlotRange slots) {
		MatrixView view(matrix, rows, slots);
		view.set_probe(probe);
		return view;
	};
	const SlotSpec& spec = matrix.spec();

	ProtocolResult result;
	result.training_users_before = static_cast<std::int32_t>(split.training_users.size());
	result.test_users_before = static_cast<std::int32_t>(split.test_users.size());

	// Both user groups are filtered on their *training-period* behavior; the
	// test period stays untouched until scoring.
	phase(ProtocolPhase::kFiltering);
	const AvailabilitySummary training_summary = availability(view_of(split.training_users, split.training_period));
	const AvailabilitySummary test_summary = availability(view_of(split.test_users, split.training_period));
	const QuadrantSplit filtered = with_users(split,
			filter_high_availability(training_summary, config.availability_threshold),
			filter_high_availability(test_summary, config.availability_threshold));
	if (filtered.training_users.empty() || filtered.test_users.empty())
		throw ValidationError("availability filter leaves an empty user group");
	result.split = filtered;
	result.training_users_after = static_cast<std::int32_t>(filtered.training_users.size());
	result.test_users_after = static_cast<std::int32_t>(filtered.test_users.size());

	phase(ProtocolPhase::kTraining);
	const MatrixView q1 = view_of(filtered.training_users, filtered.training_period);
	std::array<BasisPredictor, kNumBases> q1_bases;
	for (int b = 0; b < kNumBases; ++b)
		q1_bases[static_cast<std::size_t>(b)] = train_basis(q1, basis_kind(b));
	const MortalityModel mortality = estimate_mortality(q1, config.grace_days, config.r_floor);

	phase(ProtocolPhase::kFitting);
	const MatrixView q2 = view_of(filtered.training_users, filtered.test_period);
	const auto for_each_q2 = [&](auto&& fn) {
		std::array<double, kNumBases> features;
		for (std::int32_t i = 0; i < q2.n_rows(); ++i) {
			const std::int32_t row = q2.matrix_row(i);
			for (std::int64_t s = q2.slots().first; s < q2.slots().last; s += config.stride) {
				const double decay = mortality.decay(s, spec);
				for (int b = 0; b < kNumBases; ++b)
					features[static_cast<std::size_t>(b)] = q1_bases[static_cast<std::size_t>(b)].raw(row, s) * decay;
				fn(features, q2.cell(i, s));
			}
		}
	};

	CombinedFitter fitter(kNumBases);
	for_each_q2([&](const std::array<double, kNumBases>& f, double obs) { fitter.add(f, obs); });
	if (fitter.n_samples() == 0)
		throw ValidationError("fitting quadrant has no samples");
	const CombinedWeights ls_weights = fitter.solve();
	const double mean_obs = fitter.mean_observation();
	std::array<LinearCalibration, kNumBases> ols;
	for (int b = 0; b < kNumBases; ++b)
		ols[static_cast<std::size_t>(b)] = fitter.calibration(b);

	// Second pass: measure every candidate's clamped MSE on the fitting
	// quadrant, then keep per basis the best of {OLS fit, no correction,
	// constant mean} and for the combined predictor the best of {LS weights,
	// best single calibrated basis}. The floating-point solves practically
	// always win; the comparison turns "least squares cannot lose to a
	// sub-model" from a numerical hope into an invariant.
	std::array<MseAccumulator, kNumBases> acc_ols;
	std::array<MseAccumulator, kNumBases> acc_raw;
	std::array<MseAccumulator, kNumBases> acc_mean;
	MseAccumulator acc_ls;
	for_each_q2([&](const std::array<double, kNumBases>& f, double obs) {
		for (int b = 0; b < kNumBases; ++b) {
			const auto bi = static_cast<std::size_t>(b);
			acc_ols[bi].add(ols[bi].apply(f[bi]), obs);
			acc_raw[bi].add(f[bi], obs); // raw * decay is already in [0, 1]
			acc_mean[bi].add(mean_obs, obs);
		}
		double v = ls_weights.c[kNumBases];
		for (int b = 0; b < kNumBases; ++b)
			v += ls_weights.c[static_cast<std::size_t>(b)] * f[static_cast<std::size_t>(b)];
		acc_ls.add(std::clamp(v, 0.0, 1.0), obs);
	});

	std::array<LinearCalibration, kNumBases> calibrations;
	std::array<double, kNumBases> q2_cal_mse{};
	for (int b = 0; b < kNumBases; ++b) {
		const auto bi = static_cast<std::size_t>(b);
		result.q2_uncalibrated_mse[bi] = acc_raw[bi].value();
		LinearCalibration best = ols[bi];
		double best_mse = acc_ols[bi].value();
		if (result.q2_uncalibrated_mse[bi] < best_mse) {
			best = {1.0, 0.0};
			best_mse = result.q2_uncalibrated_mse[bi];
		}
		if (acc_mean[bi].value() < best_mse) {
			best = {0.0, mean_obs};
			best_mse = acc_mean[bi].value();
		}
		calibrations[bi] = best;
		q2_cal_mse[bi] = best_mse;
		result.q2_mse[bi] = best_mse;
	}
	int best_basis = 0;
	for (int b = 1; b < kNumBases; ++b) {
		if (q2_cal_mse[static_cast<std::size_t>(b)] < q2_cal_mse[static_cast<std::size_t>(best_basis)])
			best_basis = b;
	}
	CombinedWeights combined = ls_weights;
	double combined_q2_mse = acc_ls.value();
	if (q2_cal_mse[static_cast<std::size_t>(best_basis)] < combined_q2_mse) {
		combined = embed_basis(best_basis, calibrations[static_cast<std::size_t>(best_basis)]);
		combined_q2_mse = q2_cal_mse[static_cast<std::size_t>(best_basis)];
	}
	result.q2_mse[kPredictorCombined] = combined_q2_mse;
	result.q2_mse[kPredictorUninformed] = 0.25; // x/4 + (1-x)/4, exactly, for any x

	phase(ProtocolPhase::kRetraining);
	const MatrixView q3 = view_of(filtered.test_users, filtered.training_period);
	PredictorBundle bundle;
	bundle.mortality = mortality;
	for (int b = 0; b < kNumBases; ++b)
		bundle.bases[static_cast<std::size_t>(b)] = train_basis(q3, basis_kind(b));
	bundle.calibrations = calibrations;
	bundle.combined = combined;

	phase(ProtocolPhase::kScoring);
	const MatrixView q4 = view_of(filtered.test_users, filtered.test_period);
	std::array<MseAccumulator, kNumPredictors> acc;
	for (std::int32_t i = 0; i < q4.n_rows(); ++i) {
		const std::int32_t row = q4.matrix_row(i);
		for (std::int64_t s = q4.slots().first; s < q4.slots().last; s += config.stride) {
			const double obs = q4.cell(i, s);
			for (int p = 0; p < kNumPredictors; ++p) {
				const auto pi = static_cast<std::size_t>(p);
				acc[pi].add(bundle.predict(p, row, s, &result.scoring_stats[pi]), obs);
			}
		}
	}
	result.scored_cells = acc[0].count();
	for (int p = 0; p < kNumPredictors; ++p)
		result.q4_mse[static_cast<std::size_t>(p)] = acc[static_cast<std::size_t>(p)].value();
	result.bundle = std::move(bundle);
	return result;
}

EvalReport run_grid(const TraceMatrix& matrix, const EvalConfig& config) {
	config.validate();
	if (config.training_lengths.empty())
		throw ValidationError("no training lengths configured");
	const SlotRange test_period{config.test_start, config.test_start + config.test_len};
	if (!matrix.slot_range().contains(test_period))
		throw ValidationError("test period outside the matrix slot range");

	EvalReport report;
	report.config = config;
	for (std::int64_t len : config.training_lengths) {
		EvalRow row;
		row.training_length = len;
		const SlotRange training_period{config.test_start - len, config.test_start};
		if (!matrix.slot_range().contains(training_period)) {
			row.note = "training length exceeds available history";
			report.rows.push_back(std::move(row));
			continue;
		}
		try {
			const QuadrantSplit split = make_split(matrix, config.test_start, len, config.test_len,
					config.user_fraction, config.seed, config.sample_cap);
			const ProtocolResult res = run_protocol(matrix, split, config);
			row.available = true;
			row.mse = res.q4_mse;
			row.scoring_stats = res.scoring_stats;
			row.training_users_before = res.training_users_before;
			row.training_users_after = res.training_users_after;
			row.test_users_before = res.test_users_before;
			row.test_users_after = res.test_users_after;
		} catch (const ValidationError& e) {
			row.available = false;
			row.note = e.what();
		}
		report.rows.push_back(std::move(row));
	}
	return report;
}

void write_report_csv(const EvalReport& report, const std::string& path) {
	std::ofstream out(path);
	if (!out)
		throw ParseError("cannot open " + path + " for writing");
	out << "training_length";
	for (int p = 0; p < kNumPredictors; ++p)
		out << ',' << predictor_name(p);
	out << '\n';
	for (const EvalRow& row : report.rows) {
		out << row.training_length;
		for (int p = 0; p < kNumPredictors; ++p) {
			out << ',';
			if (row.available)
				out << double_to_string(row.mse[static_cast<std::size_t>(p)]);
			else
				out << "na";
		}
		out << '\n';
	}
}

namespace {

json stats_to_json(const PredictStats& stats) {
	return json{{"queries", stats.queries},
			{"user_fallbacks", stats.user_fallbacks},
			{"class_fallbacks", stats.class_fallbacks},
			{"clamps", stats.clamps}};
}

} // namespace

void write_report_json(const EvalReport& report, const std::string& path) {
	json j;
	j["version"] = 1;
	j["config"] = {{"training_lengths", report.config.training_lengths},
			{"test_start", report.config.test_start},
			{"test_len", report.config.test_len},
			{"user_fraction", report.config.user_fraction},
			{"sample_cap", report.config.sample_cap ? json(*report.config.sample_cap) : json(nullptr)},
			{"availability_threshold", report.config.availability_threshold},
			{"grace_days", report.config.grace_days},
			{"r_floor", report.config.r_floor},
			{"stride", report.config.stride},
			{"seed", report.config.seed}};
	j["rows"] = json::array();
	for (const EvalRow& row : report.rows) {
		json rj;
		rj["training_length"] = row.training_length;
		rj["available"] = row.available;
		if (!row.available) {
			rj["note"] = row.note;
		} else {
			json mse_obj;
			json stats_obj;
			for (int p = 0; p < kNumPredictors; ++p) {
				mse_obj[predictor_name(p)] = row.mse[static_cast<std::size_t>(p)];
				stats_obj[predictor_name(p)] = stats_to_json(row.scoring_stats[static_cast<std::size_t>(p)]);
			}
			rj["mse"] = std::move(mse_obj);
			rj["scoring_stats"] = std::move(stats_obj);
			rj["users"] = {{"training_before", row.training_users_before},
					{"training_after", row.training_users_after},
					{"test_before", row.test_users_before},
					{"test_after", row.test_users_after}};
		}
		j["rows"].push_back(std::move(rj));
	}
	std::ofstream out(path);
	if (!out)
		throw ParseError("cannot open " + path + " for writing");
	out << j.dump(1, '\t') << '\n';
}

// ---- k-means ------------------------------------------------------------

namespace {

double dist2(const double* a, const double* b, std::int32_t dim) {
	double acc = 0.0;
	for (std::int32_t c = 0; c < dim; ++c) {
		const double d = a[c] - b[c];
		acc += d * d;
	}
	return acc;
}

} // namespace

ClusterResult cluster_users(const MatrixView& view, std::int32_t k, std::uint64_t seed,
		std::int32_t max_iterations) {
	if (k < 1)
		throw ValidationError("k must be >= 1");
	if (view.n_rows() < k)
		throw ValidationError("fewer users than clusters");
	if (view.n_slots() <= 0)
		throw ValidationError("empty window");
	if (max_iterations < 1)
		throw ValidationError("max_iterations must be >= 1");

	const SlotSpec& spec = view.matrix().spec();
	const std::int32_t dim = spec.slots_per_week();
	const auto n = static_cast<std::size_t>(view.n_rows());
	const auto udim = static_cast<std::size_t>(dim);

	// Feature vector: the user's mean availability per week column. Columns
	// the window never samples (window < one week) fall back to the user's
	// overall mean so they do not pull everyone toward zero.
	std::vector<double> features(n * udim, 0.0);
	{
		std::vector<double> sum(udim);
		std::vector<std::int64_t> cnt(udim);
		for (std::size_t i = 0; i < n; ++i) {
			std::fill(sum.begin(), sum.end(), 0.0);
			std::fill(cnt.begin(), cnt.end(), 0);
			long double total = 0.0L;
			for (std::int64_t s = view.slots().first; s < view.slots().last; ++s) {
				const auto c = static_cast<std::size_t>(spec.week_column(s));
				const double cell = view.cell(static_cast<std::int32_t>(i), s);
				sum[c] += cell;
				++cnt[c];
				total += cell;
			}
			const double user_mean = static_cast<double>(total / static_cast<long double>(view.n_slots()));
			for (std::size_t c = 0; c < udim; ++c)
				features[i * udim + c] = cnt[c] > 0 ? sum[c] / static_cast<double>(cnt[c]) : user_mean;
		}
	}
	const auto feature = [&](std::size_t i) { return &features[i * udim]; };

	// k-means++ seeding: each next centroid drawn with probability
	// proportional to the squared distance to the nearest chosen one.
	Rng rng = Rng::derive(seed, {rng_tag::kCluster});
	const auto uk = static_cast<std::size_t>(k);
	std::vector<double> centroids(uk * udim);
	const auto centroid = [&](std::size_t c) { return &centroids[c * udim]; };
	{
		std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
		std::size_t first = rng.next_below(n);
		std::copy_n(feature(first), udim, centroid(0));
		for (std::size_t c = 1; c < uk; ++c) {
			long double total = 0.0L;
			for (std::size_t i = 0; i < n; ++i) {
				nearest[i] = std::min(nearest[i], dist2(feature(i), centroid(c - 1), dim));
				total += nearest[i];
			}
			std::size_t pick = 0;
			if (total > 0.0L) {
				const long double u = static_cast<long double>(rng.next_double()) * total;
				long double cum = 0.0L;
				pick = n - 1; // in case of trailing rounding
				for (std::size_t i = 0; i < n; ++i) {
					cum += nearest[i];
					if (u < cum) {
						pick = i;
						break;
					}
				}
			} else {
				pick = rng.next_below(n); // all points coincide with a centroid
			}
			std::copy_n(feature(pick), udim, centroid(c));
		}
	}

	ClusterResult result;
	result.k = k;
	result.assignment.assign(n, -1);
	std::vector<double> csum(uk * udim);
	std::vector<std::int64_t> ccnt(uk);
	std::vector<std::uint8_t> reseeded(n);
	bool changed = true;
	while (changed && result.iterations < max_iterations) {
		++result.iterations;
		changed = false;
		for (std::size_t i = 0; i < n; ++i) {
			std::int32_t best = 0;
			double best_d = dist2(feature(i), centroid(0), dim);
			for (std::int32_t c = 1; c < k; ++c) {
				const double d = dist2(feature(i), centroid(static_cast<std::size_t>(c)), dim);
				if (d < best_d) {
					best_d = d;
					best = c;
				}
			}
			if (best != result.assignment[i]) {
				result.assignment[i] = best;
				changed = true;
			}
		}

		std::fill(csum.begin(), csum.end(), 0.0);
		std::fill(ccnt.begin(), ccnt.end(), 0);
		for (std::size_t i = 0; i < n; ++i) {
			const auto c = static_cast<std::size_t>(result.assignment[i]);
			++ccnt[c];
			const double* f = feature(i);
			for (std::size_t d = 0; d < udim; ++d)
				csum[c * udim + d] += f[d];
		}
		std::fill(reseeded.begin(), reseeded.end(), 0);
		for (std::size_t c = 0; c < uk; ++c) {
			if (ccnt[c] > 0) {
				for (std::size_t d = 0; d < udim; ++d)
					centroids[c * udim + d] = csum[c * udim + d] / static_cast<double>(ccnt[c]);
			}
		}
		for (std::size_t c = 0; c < uk; ++c) {
			if (ccnt[c] > 0)
				continue;
			// Empty cluster: restart it at the point farthest from its own
			// centroid, ignoring points already spent on a restart this round.
			std::size_t far = n;
			double far_d = -1.0;
			for (std::size_t i = 0; i < n; ++i) {
				if (reseeded[i])
					continue;
				const double d = dist2(feature(i), centroid(static_cast<std::size_t>(result.assignment[i])), dim);
				if (d > far_d) {
					far_d = d;
					far = i;
				}
			}
			if (far == n)
				break; // fewer distinct points than clusters
			reseeded[far] = 1;
			std::copy_n(feature(far), udim, centroid(c));
			changed = true;
		}

		long double wcss = 0.0L;
		for (std::size_t i = 0; i < n; ++i)
			wcss += dist2(feature(i), centroid(static_cast<std::size_t>(result.assignment[i])), dim);
		result.wcss_trace.push_back(static_cast<double>(wcss));
	}

	result.sizes.assign(uk, 0);
	for (std::size_t i = 0; i < n; ++i)
		++result.sizes[static_cast<std::size_t>(result.assignment[i])];
	result.centroids.assign(uk, std::vector<double>(udim));
	for (std::size_t c = 0; c < uk; ++c)
		std::copy_n(centroid(c), udim, result.centroids[c].begin());
	result.wcss = result.wcss_trace.back();
	return result;
}

void write_cluster_csv(const ClusterResult& result, const MatrixView& view, const std::string& path) {
	if (result.assignment.size() != static_cast<std::size_t>(view.n_rows()))
		throw ValidationError("cluster result does not match the view");
	std::ofstream out(path);
	if (!out)
		throw ParseError("cannot open " + path + " for writing");
	out << "slot,time_unix";
	for (std::int32_t c = 0; c < result.k; ++c)
		out << ",cluster_" << c;
	out << '\n';
	const SlotSpec& spec = view.matrix().spec();
	std::vector<std::int64_t> online(static_cast<std::size_t>(result.k));
	for (std::int64_t s = view.slots().first; s < view.slots().last; ++s) {
		std::fill(online.begin(), online.end(), 0);
		for (std::int32_t i = 0; i < view.n_rows(); ++i)
			if (view.cell(i, s) > 0.0)
				++online[static_cast<std::size_t>(result.assignment[static_cast<std::size_t>(i)])];
		out << s << ',' << spec.time_of_slot(s);
		for (std::int32_t c = 0; c < result.k; ++c)
			out << ',' << online[static_cast<std::size_t>(c)];
		out << '\n';
	}
}

void write_cluster_json(const ClusterResult& result, const MatrixView& view, const std::string& path) {
	if (result.assignment.size() != static_cast<std::size_t>(view.n_rows()))
		throw ValidationError("cluster result does not match the view");
	json j;
	j["version"] = 1;
	j["k"] = result.k;
	j["wcss"] = result.wcss;
	j["iterations"] = result.iterations;
	j["sizes"] = result.sizes;
	j["centroids"] = result.centroids;
	j["assignment"] = json::array();
	for (std::int32_t i = 0; i < view.n_rows(); ++i) {
		const std::int32_t row = view.matrix_row(i);
		j["assignment"].push_back(json{{"user", view.matrix().users()[static_cast<std::size_t>(row)]},
				{"cluster", result.assignment[static_cast<std::size_t>(i)]}});
	}
	std::ofstream out(path);
	if (!out)
		throw ParseError("cannot open " + path + " for writing");
	out << j.dump(1, '\t') << '\n';
}

} // namespace avail
