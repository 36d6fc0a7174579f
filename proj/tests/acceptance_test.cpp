/// End-to-end acceptance suite. Each test is one acceptance criterion and
/// prints its own pass/fail line through the test runner; tolerances are
/// stated inline next to the assertions.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "avail/dht.hpp"
#include "avail/errors.hpp"
#include "avail/evaluation.hpp"
#include "avail/experiment.hpp"
#include "avail/predictors.hpp"
#include "avail/rng.hpp"
#include "avail/split.hpp"
#include "avail/synth.hpp"
#include "avail/trace.hpp"
#include "avail/trace_io.hpp"

#include "support.hpp"

namespace {

using avail::EvalConfig;
using avail::MatrixView;
using avail::NodePredictions;
using avail::ProtocolResult;
using avail::RingAllocation;
using avail::SlotRange;
using avail::TraceMatrix;
using avail_test::TempDir;
using avail_test::slurp;

class Stopwatch {
public:
	double seconds() const {
		return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
	}

private:
	std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void announce(int criterion, const char* what) {
	std::cout << "[criterion " << criterion << "] " << what << std::endl;
}

/// Extracts each key's neighbor set through the public API: predicting
/// p = 1 for exactly one node makes per-key availability the 0/1 membership
/// indicator of that node, exactly representable in floating point.
std::vector<std::vector<std::int32_t>> neighbor_sets(const RingAllocation& alloc, std::int64_t probe_slot) {
	std::vector<std::vector<std::int32_t>> sets(static_cast<std::size_t>(alloc.n_keys()));
	for (std::int32_t node = 0; node < alloc.n_nodes(); ++node) {
		NodePredictions probe;
		probe.slots = {probe_slot};
		probe.p.assign(static_cast<std::size_t>(alloc.n_nodes()), 0.0);
		probe.p[static_cast<std::size_t>(node)] = 1.0;
		avail::PredictedAvailability hit = avail::predicted_data_availability(alloc, probe);
		for (std::int32_t k = 0; k < alloc.n_keys(); ++k)
			if (hit.per_key[static_cast<std::size_t>(k)] > 0.5)
				sets[static_cast<std::size_t>(k)].push_back(node);
	}
	return sets;
}

/// Day/night closed-form prediction grid: nodes in the first half are
/// online with probability `high` during working hours, the second half
/// during the rest, mirroring the two synthetic archetypes.
NodePredictions day_night_predictions(std::int32_t n_nodes, std::int32_t n_samples, double high, double low) {
	NodePredictions preds;
	preds.slots.resize(static_cast<std::size_t>(n_samples));
	std::iota(preds.slots.begin(), preds.slots.end(), 0);
	preds.p.resize(static_cast<std::size_t>(n_nodes) * static_cast<std::size_t>(n_samples));
	for (std::int32_t node = 0; node < n_nodes; ++node) {
		const bool day = node < n_nodes / 2;
		for (std::int32_t t = 0; t < n_samples; ++t) {
			const std::int64_t hour = preds.slots[static_cast<std::size_t>(t)] % 24;
			const bool working_hours = hour >= 8 && hour < 20;
			preds.p[static_cast<std::size_t>(node) * preds.slots.size() + static_cast<std::size_t>(t)] =
					(day == working_hours) ? high : low;
		}
	}
	return preds;
}

TEST(Acceptance, C01UninformedBaselineScoresOneQuarter) {
	announce(1, "uninformed predictor scores 0.25 +- 0.002 on a coin-flip population");
	Stopwatch timer;

	avail::SynthConfig config = avail_test::flat_config(0.5, 10000, 4, 101);
	TraceMatrix matrix = avail::generate_trace(config).matrix;

	EvalConfig eval;
	eval.training_lengths = {336};
	eval.test_start = 336;
	eval.test_len = 336;
	eval.seed = 101;
	avail::EvalReport report = avail::run_grid(matrix, eval);

	ASSERT_EQ(report.rows.size(), 1u);
	ASSERT_TRUE(report.rows[0].available);
	EXPECT_NEAR(report.rows[0].mse[avail::kPredictorUninformed], 0.25, 0.002);
	EXPECT_LT(timer.seconds(), 10.0);
}

TEST(Acceptance, C02WeeklyIndividualApproachesTheBayesFloor) {
	announce(2, "weekly-individual MSE within 0.005 of the irreducible floor after 8 training weeks");
	Stopwatch timer;

	avail::SynthConfig config;
	config.slot_spec = avail::SlotSpec{};
	avail::UserArchetype archetype;
	archetype.name = "sine";
	archetype.weekly_profile = avail_test::profile_from(config.slot_spec,
			[](std::int32_t c) { return 0.35 + 0.08 * std::sin(2.0 * std::numbers::pi * c / 168.0); });
	archetype.population_weight = 1.0;
	archetype.daily_survival = 1.0;
	config.archetypes = {archetype};
	config.n_users = 5000;
	config.n_weeks = 9;
	config.seed = 202;
	avail::SynthResult synth = avail::generate_trace(config);

	EvalConfig eval;
	eval.training_lengths = {1344}; // 8 weeks
	eval.test_start = 1344;
	eval.test_len = 168;
	eval.seed = 202;
	avail::QuadrantSplit split =
			avail::make_split(synth.matrix, eval.test_start, 1344, eval.test_len, 0.5, eval.seed, std::nullopt);
	ProtocolResult protocol = avail::run_protocol(synth.matrix, split, eval);

	const double floor = avail::bayes_mse(synth.truth, protocol.split.test_users,
			{eval.test_start, eval.test_start + eval.test_len});
	const int weekly_individual = avail::predictor_from_name("weekly_individual");
	EXPECT_LE(protocol.q4_mse[weekly_individual], floor + 0.005);
	for (int p = 0; p < avail::kNumPredictors; ++p)
		EXPECT_GE(protocol.q4_mse[p], floor - 0.005) << avail::predictor_name(p);
	EXPECT_LT(timer.seconds(), 60.0);
}

TEST(Acceptance, C03LeastSquaresOptimalityIsExactOnEveryFixture) {
	announce(3, "fitting-quadrant calibration and combination never lose to their own inputs (1e-12)");

	struct Fixture {
		avail::SynthConfig config;
		std::int64_t test_start;
		std::int64_t test_len;
	};
	std::vector<Fixture> fixtures;
	fixtures.push_back({avail_test::flat_config(0.5, 60, 4, 31), 336, 336});
	fixtures.push_back({avail_test::day_night_config(40, 4, 32), 504, 168});
	fixtures.push_back({avail_test::flat_config(0.7, 50, 6, 33, 0.98), 672, 336});
	fixtures.push_back({avail_test::day_night_config(48, 6, 34, 0.995), 672, 336});

	for (std::size_t f = 0; f < fixtures.size(); ++f) {
		const Fixture& fx = fixtures[f];
		TraceMatrix matrix = avail::generate_trace(fx.config).matrix;
		EvalConfig eval;
		eval.training_lengths = {fx.test_start};
		eval.test_start = fx.test_start;
		eval.test_len = fx.test_len;
		eval.seed = 1000 + static_cast<std::uint64_t>(f);
		avail::QuadrantSplit split = avail::make_split(matrix, fx.test_start, fx.test_start, fx.test_len, 0.5,
				eval.seed, std::nullopt);
		ProtocolResult protocol = avail::run_protocol(matrix, split, eval);

		double best_basis = protocol.q2_mse[0];
		for (int b = 0; b < avail::kNumBases; ++b) {
			EXPECT_LE(protocol.q2_mse[b], protocol.q2_uncalibrated_mse[b] + 1e-12)
					<< "fixture " << f << " basis " << avail::predictor_name(b);
			best_basis = std::min(best_basis, protocol.q2_mse[b]);
		}
		EXPECT_LE(protocol.q2_mse[avail::kPredictorCombined], best_basis + 1e-12) << "fixture " << f;
		EXPECT_LE(protocol.q2_mse[avail::kPredictorCombined],
				protocol.q2_mse[avail::kPredictorUninformed] + 1e-12)
				<< "fixture " << f;
	}
}

TEST(Acceptance, C04MortalityRateIsRecoveredFromTheTrace) {
	announce(4, "daily survival 0.99 over 60 observed days is estimated within [0.987, 0.993]");

	avail::SynthConfig config = avail_test::flat_config(0.7, 10000, 9, 404, 0.99);
	TraceMatrix matrix = avail::generate_trace(config).matrix;

	MatrixView view(matrix, avail_test::iota_rows(matrix.n_users()), {0, 60 * 24});
	avail::MortalityModel model = avail::estimate_mortality(view, 7.0, 1e-6);
	EXPECT_GE(model.r, 0.987);
	EXPECT_LE(model.r, 0.993);

	// Predictions decay geometrically from the end of the window.
	const avail::SlotSpec& spec = matrix.spec();
	for (std::int64_t days : {1, 7, 30, 90}) {
		const double direct = avail::apply_mortality(0.7, model, model.t0 + days * 24, spec);
		EXPECT_NEAR(direct, 0.7 * std::pow(model.r, static_cast<double>(days)), 1e-9) << days;
	}
}

TEST(Acceptance, C05ReplicationFactorMatchesBruteForceEverywhere) {
	announce(5, "replication factor equals brute-force integer search on the whole grid");

	const std::array<double, 3> targets{0.9, 0.99, 0.999};
	int checked = 0;
	for (int i = 1; i <= 99; ++i) {
		const double a_bar = i / 100.0;
		for (double target : targets) {
			std::int32_t expected = 1;
			while (1.0L - std::pow(1.0L - static_cast<long double>(a_bar), expected) <
					static_cast<long double>(target))
				++expected;
			ASSERT_EQ(avail::replication_factor(a_bar, target), expected)
					<< "a_bar=" << a_bar << " target=" << target;
			++checked;
		}
	}
	EXPECT_EQ(checked, 99 * 3);
	EXPECT_EQ(avail::replication_factor(0.5, 0.99), 7);
}

TEST(Acceptance, C06PredictedAvailabilityMatchesExhaustiveEnumeration) {
	announce(6, "ring availability formula equals enumeration over all online/offline outcomes (1e-12)");

	struct Instance {
		std::int32_t n_nodes;
		std::int32_t replication_n;
		std::int32_t n_samples;
	};
	const std::vector<Instance> instances = {{4, 2, 3}, {3, 3, 4}, {5, 1, 2}, {4, 3, 2}};
	avail::Rng rng(606);

	for (const Instance& inst : instances) {
		RingAllocation alloc = avail::make_allocation(inst.n_nodes, 6, 8, inst.replication_n, 607);
		std::vector<std::vector<std::int32_t>> sets = neighbor_sets(alloc, 0);

		NodePredictions preds;
		preds.slots.resize(static_cast<std::size_t>(inst.n_samples));
		std::iota(preds.slots.begin(), preds.slots.end(), 0);
		preds.p.resize(static_cast<std::size_t>(inst.n_nodes) * static_cast<std::size_t>(inst.n_samples));
		for (double& p : preds.p)
			p = 0.05 + 0.9 * rng.next_double();

		avail::PredictedAvailability predicted = avail::predicted_data_availability(alloc, preds);

		const int cells = inst.n_nodes * inst.n_samples;
		ASSERT_LE(cells, 20);
		std::vector<long double> expected(static_cast<std::size_t>(alloc.n_keys()), 0.0L);
		for (std::uint32_t mask = 0; mask < (1u << cells); ++mask) {
			long double prob = 1.0L;
			for (int c = 0; c < cells; ++c) {
				const long double p = preds.p[static_cast<std::size_t>(c)];
				prob *= (mask >> c & 1u) ? p : 1.0L - p;
			}
			for (std::int32_t k = 0; k < alloc.n_keys(); ++k) {
				int covered = 0;
				for (std::int32_t t = 0; t < inst.n_samples; ++t) {
					bool any = false;
					for (std::int32_t node : sets[static_cast<std::size_t>(k)]) {
						const int c = node * inst.n_samples + t;
						any = any || (mask >> c & 1u);
					}
					covered += any ? 1 : 0;
				}
				expected[static_cast<std::size_t>(k)] +=
						prob * covered / static_cast<long double>(inst.n_samples);
			}
		}

		long double expected_mean = 0.0L;
		for (std::int32_t k = 0; k < alloc.n_keys(); ++k) {
			EXPECT_NEAR(predicted.per_key[static_cast<std::size_t>(k)],
					static_cast<double>(expected[static_cast<std::size_t>(k)]), 1e-12)
					<< "nodes=" << inst.n_nodes << " key=" << k;
			expected_mean += expected[static_cast<std::size_t>(k)];
		}
		expected_mean /= alloc.n_keys();
		EXPECT_NEAR(predicted.mean, static_cast<double>(expected_mean), 1e-12);
	}
}

TEST(Acceptance, C07OptimizerReachesNearOptimalAndBeatsRandomRings) {
	announce(7, "hill climbing is within 1% of the 8-node exhaustive optimum and beats random ids 9/10");
	Stopwatch timer;

	// Part one: exhaustive oracle. Positions on the ring are the sorted
	// ids; every assignment of the eight nodes to those positions is
	// scored directly from the neighbor-set formula.
	RingAllocation small = avail::make_allocation(8, 64, 8, 2, 701);
	NodePredictions small_preds = day_night_predictions(8, 24, 0.95, 0.05);

	std::vector<std::vector<std::int32_t>> sets = neighbor_sets(small, 0);
	std::vector<std::uint64_t> sorted_ids = small.node_ids;
	std::sort(sorted_ids.begin(), sorted_ids.end());
	std::vector<std::int32_t> position_of_node(8);
	for (std::int32_t node = 0; node < 8; ++node)
		position_of_node[static_cast<std::size_t>(node)] = static_cast<std::int32_t>(
				std::lower_bound(sorted_ids.begin(), sorted_ids.end(),
						small.node_ids[static_cast<std::size_t>(node)]) -
				sorted_ids.begin());
	// Key -> the two ring positions replicating it, independent of who
	// owns them.
	std::vector<std::array<std::int32_t, 2>> key_positions(static_cast<std::size_t>(small.n_keys()));
	for (std::int32_t k = 0; k < small.n_keys(); ++k) {
		const std::vector<std::int32_t>& owners = sets[static_cast<std::size_t>(k)];
		ASSERT_EQ(owners.size(), 2u);
		for (std::size_t i = 0; i < 2; ++i)
			key_positions[static_cast<std::size_t>(k)][i] =
					position_of_node[static_cast<std::size_t>(owners[i])];
	}

	const std::int32_t n_samples = small_preds.n_samples();
	std::vector<std::int32_t> owner(8); // owner[position] = node
	std::iota(owner.begin(), owner.end(), 0);
	long double best = -1.0L;
	do {
		long double total = 0.0L;
		for (const std::array<std::int32_t, 2>& kp : key_positions) {
			long double covered = 0.0L;
			const std::int32_t a = owner[static_cast<std::size_t>(kp[0])];
			const std::int32_t b = owner[static_cast<std::size_t>(kp[1])];
			for (std::int32_t t = 0; t < n_samples; ++t)
				covered += 1.0L - (1.0L - small_preds.at(a, t)) * (1.0L - small_preds.at(b, t));
			total += covered / n_samples;
		}
		best = std::max(best, total / small.n_keys());
	} while (std::next_permutation(owner.begin(), owner.end()));

	avail::OptimizeResult small_opt = avail::optimize_ids(small, small_preds, {1e-12, 3000, 701});
	EXPECT_GE(small_opt.final_mean, 0.99 * static_cast<double>(best));
	EXPECT_LE(small_opt.final_mean, static_cast<double>(best) + 1e-9);

	// Part two: full pipeline on 64 nodes; the optimized ring must beat
	// freshly drawn random ids in at least nine of ten paired runs.
	TraceMatrix matrix = avail::generate_trace(avail_test::day_night_config(128, 4, 77)).matrix;
	EvalConfig eval;
	eval.training_lengths = {504};
	eval.test_start = 504;
	eval.test_len = 168;
	eval.seed = 77;
	avail::QuadrantSplit split = avail::make_split(matrix, 504, 504, 168, 0.5, 77, std::nullopt);
	ProtocolResult protocol = avail::run_protocol(matrix, split, eval);
	const std::vector<std::int32_t>& node_rows = protocol.split.test_users;
	ASSERT_EQ(node_rows.size(), 64u);

	std::vector<std::int64_t> horizon(168);
	std::iota(horizon.begin(), horizon.end(), 504);
	NodePredictions preds = avail::make_node_predictions(protocol.bundle, avail::kPredictorCombined,
			node_rows, horizon);

	RingAllocation initial = avail::make_allocation(64, 2000, 32, 2, 77);
	avail::OptimizeResult opt = avail::optimize_ids(initial, preds, {1e-9, 400, 77});
	EXPECT_GT(opt.final_mean, opt.initial_mean);

	const std::vector<std::int64_t> week{168};
	avail::SimulatedAvailability optimized =
			avail::simulate_availability(opt.allocation, matrix, node_rows, 504, week);
	int wins = 0;
	for (std::uint64_t run = 0; run < 10; ++run) {
		RingAllocation random = avail::with_random_ids(opt.allocation, avail::Rng::derive_key(77, {run}));
		avail::SimulatedAvailability baseline =
				avail::simulate_availability(random, matrix, node_rows, 504, week);
		if (optimized.availability[0] > baseline.availability[0])
			++wins;
	}
	EXPECT_GE(wins, 9);
	EXPECT_LT(timer.seconds(), 300.0);
}

TEST(Acceptance, C08ReductionShrinksAsTheHorizonGrows) {
	announce(8, "unavailability reduction is positive at one week and non-increasing over {1,4,8} weeks");

	TraceMatrix matrix = avail::generate_trace(avail_test::day_night_config(96, 12, 88, 0.99)).matrix;
	EvalConfig eval;
	eval.training_lengths = {672};
	eval.test_start = 672;
	eval.test_len = 1344;
	eval.seed = 88;
	avail::QuadrantSplit split = avail::make_split(matrix, 672, 672, 1344, 0.5, 88, std::nullopt);
	ProtocolResult protocol = avail::run_protocol(matrix, split, eval);
	const std::vector<std::int32_t>& node_rows = protocol.split.test_users;
	ASSERT_GE(node_rows.size(), 8u);

	std::vector<std::int64_t> horizon(168);
	std::iota(horizon.begin(), horizon.end(), 672);
	NodePredictions preds = avail::make_node_predictions(protocol.bundle, avail::kPredictorCombined,
			node_rows, horizon);
	RingAllocation initial = avail::make_allocation(static_cast<std::int32_t>(node_rows.size()), 1500, 32, 2, 88);
	avail::OptimizeResult opt = avail::optimize_ids(initial, preds, {1e-9, 300, 88});

	avail::PredictedAvailability predicted = avail::predicted_data_availability(opt.allocation, preds);
	const std::vector<std::int64_t> lengths{168, 672, 1344}; // 1, 4 and 8 weeks
	avail::AvailabilityOutcome outcome = avail::evaluate_allocation(opt.allocation, predicted.mean, matrix,
			node_rows, 672, lengths, 10, 88);

	ASSERT_EQ(outcome.unavailability_reduction.size(), 3u);
	EXPECT_GT(outcome.unavailability_reduction[0], 0.0);
	EXPECT_LE(outcome.unavailability_reduction[1], outcome.unavailability_reduction[0] * 1.10);
	EXPECT_LE(outcome.unavailability_reduction[2], outcome.unavailability_reduction[1] * 1.10);
}

/// Counts scoring-quadrant reads and flags any that happen before the
/// scoring phase begins.
class QuadrantGuard : public avail::AccessProbe {
public:
	QuadrantGuard(std::vector<std::int32_t> test_users, std::int64_t test_start)
			: test_users_(std::move(test_users)), test_start_(test_start) {}

	void on_cell_access(std::int32_t row, std::int64_t slot) const override {
		if (slot < test_start_ || !std::binary_search(test_users_.begin(), test_users_.end(), row))
			return;
		++q4_reads_;
		if (phase_ != avail::ProtocolPhase::kScoring)
			++premature_reads_;
	}

	void enter(avail::ProtocolPhase phase) {
		phases_.push_back(phase);
		phase_ = phase;
	}

	std::int64_t q4_reads() const { return q4_reads_; }
	std::int64_t premature_reads() const { return premature_reads_; }
	const std::vector<avail::ProtocolPhase>& phases() const { return phases_; }

private:
	std::vector<std::int32_t> test_users_;
	std::int64_t test_start_;
	avail::ProtocolPhase phase_ = avail::ProtocolPhase::kFiltering;
	std::vector<avail::ProtocolPhase> phases_;
	mutable std::int64_t q4_reads_ = 0;
	mutable std::int64_t premature_reads_ = 0;
};

TEST(Acceptance, C09ProtocolNeverPeeksAtTheScoringQuadrant) {
	announce(9, "scoring observations are read only in the scoring phase; reports carry the full grid");

	TraceMatrix matrix = avail::generate_trace(avail_test::day_night_config(30, 4, 99)).matrix;
	EvalConfig eval;
	eval.training_lengths = {336};
	eval.test_start = 336;
	eval.test_len = 336;
	eval.seed = 99;
	avail::QuadrantSplit split = avail::make_split(matrix, 336, 336, 336, 0.5, 99, std::nullopt);

	QuadrantGuard guard(split.test_users, 336);
	avail::ProtocolHooks hooks;
	hooks.probe = &guard;
	hooks.on_phase = [&guard](avail::ProtocolPhase phase) { guard.enter(phase); };
	avail::run_protocol(matrix, split, eval, &hooks);

	EXPECT_EQ(guard.premature_reads(), 0);
	EXPECT_GT(guard.q4_reads(), 0);
	ASSERT_EQ(guard.phases().size(), 5u);
	for (int i = 0; i < 5; ++i)
		EXPECT_EQ(static_cast<int>(guard.phases()[static_cast<std::size_t>(i)]), i);

	// The report table is exactly the 4x2 basis grid plus the combined
	// and uninformed columns.
	avail::EvalReport report = avail::run_grid(matrix, eval);
	TempDir dir;
	avail::write_report_csv(report, dir.file("report.csv"));
	const std::string csv = slurp(dir.file("report.csv"));
	EXPECT_EQ(csv.substr(0, csv.find('\n')),
			"training_length,flat_global,flat_individual,weekly_global,weekly_individual,daily_global,"
			"daily_individual,weekend_global,weekend_individual,combined,uninformed");
}

TEST(Acceptance, C10ManifestRunsAreByteIdenticalAndReplayable) {
	announce(10, "re-running every command on one manifest reproduces each artifact byte for byte");

	TempDir dir;
	avail::save_synth_config(avail_test::day_night_config(20, 4, 55, 0.995), dir.file("synth.json"));

	std::ostringstream sink;
	avail::SynthRunResult synth_a = avail::run_synth(dir.file("synth.json"), dir.file("synth_a"), sink);
	avail::SynthRunResult synth_b = avail::run_synth(dir.file("synth.json"), dir.file("synth_b"), sink);
	EXPECT_EQ(slurp(synth_a.matrix_path), slurp(synth_b.matrix_path));
	EXPECT_EQ(slurp(synth_a.truth_path), slurp(synth_b.truth_path));

	const auto manifest_json = [&dir](const std::string& out_dir) {
		return std::string("{\"version\":1,\"seed\":55,\"output_dir\":\"") + out_dir +
				"\",\"trace\":{\"matrix\":\"synth_a/trace.avtm\"},"
				"\"split\":{\"test_start\":504,\"test_len\":168},"
				"\"eval\":{\"training_lengths\":[336,504]},"
				"\"dht\":{\"training_len\":504,\"replication_target\":0.9,\"horizon_samples\":24,"
				"\"epsilon\":1e-9,\"patience\":100,\"id_space_bits\":16,\"n_keys\":150,"
				"\"baseline_runs\":2,\"test_lengths_days\":[1,3],\"max_nodes\":8}}";
	};
	const auto write_text = [&dir](const std::string& name, const std::string& text) {
		std::ofstream out(dir.file(name));
		out << text;
		return dir.file(name);
	};

	avail::ExperimentManifest eval_a = avail::load_manifest(write_text("ma.json", manifest_json("run_a")));
	avail::ExperimentManifest eval_b = avail::load_manifest(write_text("mb.json", manifest_json("run_b")));
	avail::run_eval(eval_a, sink);
	avail::run_eval(eval_b, sink);
	avail::run_dht(eval_a, sink);
	avail::run_dht(eval_b, sink);

	for (const char* name : {"report.csv", "report.json", "split.json", "bundle.json",
				 "initial_allocation.json", "allocation.json", "swap_log.json", "outcome.csv",
				 "outcome.json"})
		EXPECT_EQ(slurp(eval_a.output_dir + "/" + name), slurp(eval_b.output_dir + "/" + name)) << name;

	// The recorded swap log rebuilds the final ring exactly.
	RingAllocation initial = avail::read_allocation(eval_a.output_dir + "/initial_allocation.json");
	RingAllocation final_alloc = avail::read_allocation(eval_a.output_dir + "/allocation.json");
	std::vector<avail::SwapRecord> swaps = avail::read_swap_log(eval_a.output_dir + "/swap_log.json");
	EXPECT_TRUE(avail::replay_swaps(initial, swaps) == final_alloc);
}

} // namespace
