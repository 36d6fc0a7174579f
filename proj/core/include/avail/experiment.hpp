#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "avail/dht.hpp"
#include "avail/evaluation.hpp"
#include "avail/trace.hpp"

namespace avail {

/// Where an experiment's matrix comes from: a raw session log to ingest, a
/// synthetic-trace config to generate from, or a previously written matrix
/// artifact.
struct TraceSource {
	enum class Kind { kLog, kSynth, kMatrix };

	Kind kind = Kind::kMatrix;
	std::string path;
};

/// Split geometry shared by the eval and dht commands. The test period is
/// [test_start, test_start + test_len); every training period ends at
/// test_start.
struct SplitParams {
	std::int64_t test_start = 0;
	std::int64_t test_len = 0;
	double user_fraction = 0.5;
	std::optional<std::int32_t> sample_cap;
};

/// Grid parameters for the eval command; merged with SplitParams into an
/// EvalConfig.
struct EvalParams {
	std::vector<std::int64_t> training_lengths; // slots, one report row each
	double availability_threshold = 0.17;
	double grace_days = 7.0;
	double r_floor = 1e-6;
	std::int64_t stride = 1;
};

/// Ring-experiment parameters for the dht command. Test lengths are given
/// in days (the horizontal axis of the outcome table); the horizon is the
/// number of leading test-period slots the optimizer's predictions sample.
struct DhtParams {
	std::int64_t training_len = 0; // slots before test_start
	double replication_target = 0.99;
	std::int32_t horizon_samples = 168;
	double epsilon = 1e-6;
	std::int64_t patience = 1000;
	std::int32_t id_space_bits = 32;
	std::int32_t n_keys = 10000;
	std::int32_t baseline_runs = 10;
	std::vector<std::int64_t> test_lengths_days = {7, 30, 60, 120};
	std::optional<std::int32_t> max_nodes; // cap on the node population
	std::string predictor = "combined";
};

/// Parameters for the report command's behavioral clustering.
struct ReportParams {
	std::int32_t k = 6;
	std::int32_t max_iterations = 100;
};

/// One declarative experiment: trace source, split geometry, per-command
/// parameter blocks, output directory, and the single seed every randomized
/// stage derives its streams from. Loaded from JSON; relative paths resolve
/// against the manifest's directory.
struct ExperimentManifest {
	std::uint64_t seed = 0;
	std::string output_dir;
	SlotSpec slot; // applied when the trace source is a session log
	TraceSource trace;
	std::optional<SplitParams> split;
	std::optional<EvalParams> eval;
	std::optional<DhtParams> dht;
	ReportParams report;
};

ExperimentManifest load_manifest(const std::string& path);

/// Materializes the manifest's trace: reads the matrix artifact, ingests
/// the session log under the manifest slot spec, or generates the synthetic
/// trace from its config. A synthetic trace is a pure function of the
/// config file (including the config's own seed), so the same config always
/// yields the same matrix no matter which manifest references it.
TraceMatrix load_trace(const ExperimentManifest& manifest);

/// Predictor index for a name as printed by predictor_name (one of the
/// eight bases, "combined", or "uninformed").
int predictor_from_name(const std::string& name);

struct IngestRunResult {
	IngestStats stats;
	std::int32_t n_users = 0;
	std::int64_t n_slots = 0;
	double mean_availability = 0.0;
	std::string matrix_path;
};

/// Slots a session log into a matrix artifact (`trace.avtm` in out_dir) and
/// logs a summary. An empty or fully skipped log still writes the (empty)
/// artifact and merely warns.
IngestRunResult run_ingest(const std::string& log_path, const SlotSpec& spec, const std::string& out_dir,
		std::ostream& log);

struct SynthRunResult {
	std::int32_t n_users = 0;
	std::int64_t n_slots = 0;
	double mean_availability = 0.0;
	std::int32_t users_departed = 0; // users with a death day inside the trace
	std::string matrix_path;
	std::string truth_path;
};

/// Generates a synthetic trace from a config file and writes the matrix
/// (`trace.avtm`) plus its ground truth (`truth.json`) into out_dir.
SynthRunResult run_synth(const std::string& config_path, const std::string& out_dir, std::ostream& log);

/// Runs the training-length grid of the manifest and writes `report.csv`
/// and `report.json` into the output directory.
EvalReport run_eval(const ExperimentManifest& manifest, std::ostream& log);

struct DhtRunResult {
	std::int32_t n_nodes = 0;
	double a_bar = 0.0; // mean training-period availability of the nodes
	std::int32_t replication_n = 0;
	OptimizeResult optimize;
	AvailabilityOutcome outcome;
};

/// Full ring experiment: four-phase protocol for the scoring-side bundle,
/// replication factor from the nodes' training-period availability, ID
/// optimization against predicted availability over the horizon, and the
/// optimized-vs-random trace simulation. Writes split.json, bundle.json,
/// initial_allocation.json, allocation.json, swap_log.json, outcome.csv and
/// outcome.json; the swap log is re-applied to the initial allocation and
/// checked against the optimized one before anything is written.
DhtRunResult run_dht(const ExperimentManifest& manifest, std::ostream& log);

struct ReportRunResult {
	std::int32_t n_users = 0;
	std::int64_t n_slots = 0;
	double mean_availability = 0.0;
	ClusterResult clusters;
};

/// Trace summary plus behavioral clustering: writes summary.json,
/// availability.csv (per-user availability and last-seen slot),
/// clusters.csv (per-slot online counts per cluster) and clusters.json.
ReportRunResult run_report(const ExperimentManifest& manifest, std::ostream& log);

} // namespace avail
