#include "avail/experiment.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avail/errors.hpp"
#include "avail/predictors.hpp"
#include "avail/split.hpp"
#include "avail/synth.hpp"
#include "avail/text.hpp"
#include "avail/trace_io.hpp"

namespace avail {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string join(const std::string& dir, const char* name) {
	return (fs::path(dir) / name).string();
}

/// Resolves a manifest-relative path against the manifest's directory.
std::string resolve_path(const fs::path& base, const std::string& path) {
	fs::path p(path);
	if (p.is_absolute())
		return p.lexically_normal().string();
	return (base / p).lexically_normal().string();
}

void log_issues(const IngestStats& stats, std::ostream& log) {
	for (const std::string& issue : stats.issues)
		log << "  skipped: " << issue << '\n';
	if (stats.issues_dropped > 0)
		log << "  ... and " << stats.issues_dropped << " more skipped records\n";
}

} // namespace

ExperimentManifest load_manifest(const std::string& path) {
	std::ifstream in(path);
	if (!in)
		throw ParseError("cannot open " + path);
	json j;
	try {
		in >> j;
	} catch (const json::exception& e) {
		throw ParseError(path + ": " + e.what());
	}

	ExperimentManifest m;
	const fs::path base = fs::path(path).parent_path();
	try {
		if (j.at("version").get<int>() != 1)
			throw ParseError(path + ": unsupported manifest version");
		m.seed = j.at("seed").get<std::uint64_t>();
		m.output_dir = resolve_path(base, j.at("output_dir").get<std::string>());

		if (j.contains("slot")) {
			const json& s = j.at("slot");
			if (s.contains("epoch"))
				m.slot.epoch = s.at("epoch").get<std::int64_t>();
			if (s.contains("slot_seconds"))
				m.slot.slot_seconds = s.at("slot_seconds").get<std::int32_t>();
			if (s.contains("utc_offset"))
				m.slot.utc_offset = s.at("utc_offset").get<std::int32_t>();
		}

		const json& tr = j.at("trace");
		int sources = static_cast<int>(tr.contains("log")) + static_cast<int>(tr.contains("synth")) +
				static_cast<int>(tr.contains("matrix"));
		if (sources != 1)
			throw ParseError(path + ": trace must name exactly one of log, synth, matrix");
		if (tr.contains("log")) {
			m.trace.kind = TraceSource::Kind::kLog;
			m.trace.path = resolve_path(base, tr.at("log").get<std::string>());
		} else if (tr.contains("synth")) {
			m.trace.kind = TraceSource::Kind::kSynth;
			m.trace.path = resolve_path(base, tr.at("synth").get<std::string>());
		} else {
			m.trace.kind = TraceSource::Kind::kMatrix;
			m.trace.path = resolve_path(base, tr.at("matrix").get<std::string>());
		}

		if (j.contains("split")) {
			const json& s = j.at("split");
			SplitParams sp;
			sp.test_start = s.at("test_start").get<std::int64_t>();
			sp.test_len = s.at("test_len").get<std::int64_t>();
			if (s.contains("user_fraction"))
				sp.user_fraction = s.at("user_fraction").get<double>();
			if (s.contains("sample_cap") && !s.at("sample_cap").is_null())
				sp.sample_cap = s.at("sample_cap").get<std::int32_t>();
			m.split = sp;
		}

		if (j.contains("eval")) {
			const json& e = j.at("eval");
			EvalParams ep;
			ep.training_lengths = e.at("training_lengths").get<std::vector<std::int64_t>>();
			if (e.contains("availability_threshold"))
				ep.availability_threshold = e.at("availability_threshold").get<double>();
			if (e.contains("grace_days"))
				ep.grace_days = e.at("grace_days").get<double>();
			if (e.contains("r_floor"))
				ep.r_floor = e.at("r_floor").get<double>();
			if (e.contains("stride"))
				ep.stride = e.at("stride").get<std::int64_t>();
			m.eval = ep;
		}

		if (j.contains("dht")) {
			const json& d = j.at("dht");
			DhtParams dp;
			dp.training_len = d.at("training_len").get<std::int64_t>();
			if (d.contains("replication_target"))
				dp.replication_target = d.at("replication_target").get<double>();
			if (d.contains("horizon_samples"))
				dp.horizon_samples = d.at("horizon_samples").get<std::int32_t>();
			if (d.contains("epsilon"))
				dp.epsilon = d.at("epsilon").get<double>();
			if (d.contains("patience"))
				dp.patience = d.at("patience").get<std::int64_t>();
			if (d.contains("id_space_bits"))
				dp.id_space_bits = d.at("id_space_bits").get<std::int32_t>();
			if (d.contains("n_keys"))
				dp.n_keys = d.at("n_keys").get<std::int32_t>();
			if (d.contains("baseline_runs"))
				dp.baseline_runs = d.at("baseline_runs").get<std::int32_t>();
			if (d.contains("test_lengths_days"))
				dp.test_lengths_days = d.at("test_lengths_days").get<std::vector<std::int64_t>>();
			if (d.contains("max_nodes") && !d.at("max_nodes").is_null())
				dp.max_nodes = d.at("max_nodes").get<std::int32_t>();
			if (d.contains("predictor"))
				dp.predictor = d.at("predictor").get<std::string>();
			m.dht = dp;
		}

		if (j.contains("report")) {
			const json& r = j.at("report");
			if (r.contains("k"))
				m.report.k = r.at("k").get<std::int32_t>();
			if (r.contains("max_iterations"))
				m.report.max_iterations = r.at("max_iterations").get<std::int32_t>();
		}
	} catch (const json::exception& e) {
		throw ParseError(path + ": " + e.what());
	}

	m.slot.validate();
	return m;
}

TraceMatrix load_trace(const ExperimentManifest& manifest) {
	switch (manifest.trace.kind) {
	case TraceSource::Kind::kMatrix:
		return read_matrix_file(manifest.trace.path);
	case TraceSource::Kind::kLog: {
		std::vector<Session> sessions = read_session_csv_file(manifest.trace.path);
		return ingest_sessions(sessions, manifest.slot);
	}
	case TraceSource::Kind::kSynth:
		return generate_trace(load_synth_config(manifest.trace.path)).matrix;
	}
	throw ValidationError("unknown trace source");
}

int predictor_from_name(const std::string& name) {
	for (int i = 0; i < kNumPredictors; ++i)
		if (predictor_name(i) == name)
			return i;
	throw ValidationError("unknown predictor '" + name + "'");
}

IngestRunResult run_ingest(const std::string& log_path, const SlotSpec& spec, const std::string& out_dir,
		std::ostream& log) {
	spec.validate();
	IngestStats parse_stats;
	std::vector<Session> sessions = read_session_csv_file(log_path, &parse_stats);
	IngestStats slot_stats;
	TraceMatrix matrix = ingest_sessions(sessions, spec, &slot_stats);

	fs::create_directories(out_dir);
	IngestRunResult r;
	r.matrix_path = join(out_dir, "trace.avtm");
	write_matrix_file(matrix, r.matrix_path);

	// The slotter re-counts the sessions the parser already tallied, so only
	// its skips are merged, not its totals.
	r.stats = parse_stats;
	r.stats.records_skipped += slot_stats.records_skipped;
	for (const std::string& issue : slot_stats.issues)
		r.stats.add_issue(issue);
	r.stats.issues_dropped += slot_stats.issues_dropped;
	r.n_users = matrix.n_users();
	r.n_slots = matrix.n_slots();

	log << "ingested " << (r.stats.records_total - r.stats.records_skipped) << " of " << r.stats.records_total
		<< " records (" << r.stats.records_skipped << " skipped)\n";
	log_issues(r.stats, log);
	if (matrix.empty()) {
		log << "warning: no usable records; wrote an empty matrix\n";
	} else {
		r.mean_availability = availability(matrix, matrix.slot_range()).mean_availability;
		log << "users=" << r.n_users << " slots=" << r.n_slots << " mean_availability="
			<< double_to_string(r.mean_availability) << '\n';
	}
	log << "wrote " << r.matrix_path << '\n';
	return r;
}

SynthRunResult run_synth(const std::string& config_path, const std::string& out_dir, std::ostream& log) {
	SynthConfig config = load_synth_config(config_path);
	SynthResult synth = generate_trace(config);

	fs::create_directories(out_dir);
	SynthRunResult r;
	r.matrix_path = join(out_dir, "trace.avtm");
	r.truth_path = join(out_dir, "truth.json");
	write_matrix_file(synth.matrix, r.matrix_path);
	write_ground_truth(synth.truth, r.truth_path);

	r.n_users = synth.matrix.n_users();
	r.n_slots = synth.matrix.n_slots();
	r.mean_availability = availability(synth.matrix, synth.matrix.slot_range()).mean_availability;
	for (std::int64_t day : synth.truth.death_day)
		if (day != GroundTruth::kNoDeath)
			++r.users_departed;

	log << "users=" << r.n_users << " slots=" << r.n_slots << " mean_availability="
		<< double_to_string(r.mean_availability) << " departed=" << r.users_departed << '\n';
	log << "wrote " << r.matrix_path << " and " << r.truth_path << '\n';
	return r;
}

EvalReport run_eval(const ExperimentManifest& manifest, std::ostream& log) {
	if (!manifest.split)
		throw ValidationError("manifest has no split section");
	if (!manifest.eval)
		throw ValidationError("manifest has no eval section");
	TraceMatrix matrix = load_trace(manifest);

	EvalConfig config;
	config.training_lengths = manifest.eval->training_lengths;
	config.test_start = manifest.split->test_start;
	config.test_len = manifest.split->test_len;
	config.user_fraction = manifest.split->user_fraction;
	config.sample_cap = manifest.split->sample_cap;
	config.availability_threshold = manifest.eval->availability_threshold;
	config.grace_days = manifest.eval->grace_days;
	config.r_floor = manifest.eval->r_floor;
	config.stride = manifest.eval->stride;
	config.seed = manifest.seed;

	EvalReport report = run_grid(matrix, config);

	fs::create_directories(manifest.output_dir);
	const std::string csv_path = join(manifest.output_dir, "report.csv");
	const std::string json_path = join(manifest.output_dir, "report.json");
	write_report_csv(report, csv_path);
	write_report_json(report, json_path);

	for (const EvalRow& row : report.rows) {
		if (!row.available) {
			log << "training_length=" << row.training_length << " unavailable: " << row.note << '\n';
			continue;
		}
		log << "training_length=" << row.training_length << " combined="
			<< double_to_string(row.mse[kPredictorCombined]) << " uninformed="
			<< double_to_string(row.mse[kPredictorUninformed]) << " test_users=" << row.test_users_after << '\n';
	}
	log << "wrote " << csv_path << " and " << json_path << '\n';
	return report;
}

DhtRunResult run_dht(const ExperimentManifest& manifest, std::ostream& log) {
	if (!manifest.split)
		throw ValidationError("manifest has no split section");
	if (!manifest.dht)
		throw ValidationError("manifest has no dht section");
	const SplitParams& sp = *manifest.split;
	const DhtParams& d = *manifest.dht;
	if (d.horizon_samples < 1)
		throw ValidationError("horizon must contain at least one sample");
	if (d.test_lengths_days.empty())
		throw ValidationError("need at least one test length");
	for (std::int64_t days : d.test_lengths_days)
		if (days < 1)
			throw ValidationError("test lengths must be >= 1 days");

	TraceMatrix matrix = load_trace(manifest);
	const SlotSpec& spec = matrix.spec();
	if (!spec.day_aligned())
		throw ValidationError("dht test lengths are given in days; slot_seconds must divide a day");

	EvalConfig config;
	config.training_lengths = {d.training_len};
	config.test_start = sp.test_start;
	config.test_len = sp.test_len;
	config.user_fraction = sp.user_fraction;
	config.sample_cap = sp.sample_cap;
	if (manifest.eval) {
		config.availability_threshold = manifest.eval->availability_threshold;
		config.grace_days = manifest.eval->grace_days;
		config.r_floor = manifest.eval->r_floor;
		config.stride = manifest.eval->stride;
	}
	config.seed = manifest.seed;
	config.validate();

	QuadrantSplit split = make_split(matrix, sp.test_start, d.training_len, sp.test_len, sp.user_fraction,
			manifest.seed, sp.sample_cap);
	ProtocolResult protocol = run_protocol(matrix, split, config);

	std::vector<std::int32_t> node_rows = protocol.split.test_users;
	if (d.max_nodes && *d.max_nodes < static_cast<std::int32_t>(node_rows.size()))
		node_rows.resize(static_cast<std::size_t>(*d.max_nodes));
	DhtRunResult r;
	r.n_nodes = static_cast<std::int32_t>(node_rows.size());
	if (r.n_nodes < 2)
		throw ValidationError("need at least two nodes after availability filtering");

	r.a_bar = availability(matrix, protocol.split.training_period, node_rows).mean_availability;
	// Filtered nodes can in principle all be perfectly available; one
	// replica then already meets any target.
	r.replication_n = r.a_bar >= 1.0 ? 1 : replication_factor(r.a_bar, d.replication_target);
	if (r.replication_n > r.n_nodes)
		throw ValidationError("replication factor " + std::to_string(r.replication_n) +
				" exceeds the node count " + std::to_string(r.n_nodes));
	log << "nodes=" << r.n_nodes << " a_bar=" << double_to_string(r.a_bar) << " replication_n="
		<< r.replication_n << " keys=" << d.n_keys << '\n';

	std::vector<std::int64_t> horizon(static_cast<std::size_t>(d.horizon_samples));
	std::iota(horizon.begin(), horizon.end(), sp.test_start);
	NodePredictions preds =
			make_node_predictions(protocol.bundle, predictor_from_name(d.predictor), node_rows, horizon);

	RingAllocation initial = make_allocation(r.n_nodes, d.n_keys, d.id_space_bits, r.replication_n, manifest.seed);
	OptimizerConfig optimizer{d.epsilon, d.patience, manifest.seed};
	r.optimize = optimize_ids(initial, preds, optimizer);
	if (!(replay_swaps(initial, r.optimize.swaps) == r.optimize.allocation))
		throw std::runtime_error("swap log does not replay to the optimized allocation");
	log << "optimizer: candidates=" << r.optimize.candidates << " accepted=" << r.optimize.swaps.size()
		<< " predicted " << double_to_string(r.optimize.initial_mean) << " -> "
		<< double_to_string(r.optimize.final_mean) << '\n';
	log << "replay check: ok\n";

	PredictedAvailability predicted = predicted_data_availability(r.optimize.allocation, preds);

	std::vector<std::int64_t> test_lengths;
	test_lengths.reserve(d.test_lengths_days.size());
	for (std::int64_t days : d.test_lengths_days)
		test_lengths.push_back(days * spec.slots_per_day());
	r.outcome = evaluate_allocation(r.optimize.allocation, predicted.mean, matrix, node_rows, sp.test_start,
			test_lengths, d.baseline_runs, manifest.seed);
	if (r.outcome.truncated)
		log << "warning: test window exceeds the trace; lengths truncated\n";
	for (std::size_t i = 0; i < r.outcome.test_lengths.size(); ++i) {
		log << "test_length_days="
			<< double_to_string(static_cast<double>(r.outcome.test_lengths[i]) / spec.slots_per_day())
			<< " optimized=" << double_to_string(r.outcome.simulated_optimized[i]) << " random="
			<< double_to_string(r.outcome.simulated_random[i]) << " reduction="
			<< double_to_string(r.outcome.unavailability_reduction[i]) << '\n';
	}

	fs::create_directories(manifest.output_dir);
	write_split(protocol.split, matrix, join(manifest.output_dir, "split.json"));
	write_bundle(protocol.bundle, join(manifest.output_dir, "bundle.json"));
	write_allocation(initial, join(manifest.output_dir, "initial_allocation.json"));
	write_allocation(r.optimize.allocation, join(manifest.output_dir, "allocation.json"));
	write_swap_log(r.optimize, optimizer, join(manifest.output_dir, "swap_log.json"));
	write_outcome_csv(r.outcome, spec, join(manifest.output_dir, "outcome.csv"));
	write_outcome_json(r.outcome, spec, join(manifest.output_dir, "outcome.json"));
	log << "wrote " << manifest.output_dir << '\n';
	return r;
}

ReportRunResult run_report(const ExperimentManifest& manifest, std::ostream& log) {
	TraceMatrix matrix = load_trace(manifest);
	if (matrix.empty())
		throw ValidationError("trace is empty");

	AvailabilitySummary summary = availability(matrix, matrix.slot_range());
	std::vector<std::int32_t> rows(static_cast<std::size_t>(matrix.n_users()));
	std::iota(rows.begin(), rows.end(), 0);
	MatrixView view(matrix, rows, matrix.slot_range());

	ReportRunResult r;
	r.n_users = matrix.n_users();
	r.n_slots = matrix.n_slots();
	r.mean_availability = summary.mean_availability;
	r.clusters = cluster_users(view, manifest.report.k, manifest.seed, manifest.report.max_iterations);

	fs::create_directories(manifest.output_dir);
	const std::string avail_path = join(manifest.output_dir, "availability.csv");
	{
		std::ofstream out(avail_path);
		if (!out)
			throw ParseError("cannot open " + avail_path + " for writing");
		out << "user,availability,last_seen\n";
		for (std::size_t i = 0; i < summary.rows.size(); ++i) {
			out << matrix.users()[static_cast<std::size_t>(summary.rows[i])] << ','
				<< double_to_string(summary.availability[i]) << ',' << summary.last_seen[i] << '\n';
		}
	}
	write_cluster_csv(r.clusters, view, join(manifest.output_dir, "clusters.csv"));
	write_cluster_json(r.clusters, view, join(manifest.output_dir, "clusters.json"));

	const std::string summary_path = join(manifest.output_dir, "summary.json");
	{
		json j;
		j["version"] = 1;
		j["users"] = r.n_users;
		j["slots"] = r.n_slots;
		j["first_slot"] = matrix.slot_range().first;
		j["last_slot"] = matrix.slot_range().last;
		j["slot_seconds"] = matrix.spec().slot_seconds;
		j["epoch"] = matrix.spec().epoch;
		j["utc_offset"] = matrix.spec().utc_offset;
		j["mean_availability"] = r.mean_availability;
		j["clusters"] = {{"k", r.clusters.k}, {"wcss", r.clusters.wcss}, {"iterations", r.clusters.iterations},
				{"sizes", r.clusters.sizes}};
		std::ofstream out(summary_path);
		if (!out)
			throw ParseError("cannot open " + summary_path + " for writing");
		out << j.dump() << '\n';
	}

	log << "users=" << r.n_users << " slots=" << r.n_slots << " mean_availability="
		<< double_to_string(r.mean_availability) << '\n';
	log << "clusters: k=" << r.clusters.k << " wcss=" << double_to_string(r.clusters.wcss) << " sizes=[";
	for (std::size_t c = 0; c < r.clusters.sizes.size(); ++c)
		log << (c == 0 ? "" : " ") << r.clusters.sizes[c];
	log << "]\n";
	log << "wrote " << manifest.output_dir << '\n';
	return r;
}

} // namespace avail
