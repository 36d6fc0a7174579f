#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "avail/errors.hpp"
#include "avail/experiment.hpp"
#include "avail/trace.hpp"

namespace {

/// Exit codes: 0 on success, then one code per failure class so scripts can
/// tell a malformed artifact from an infeasible experiment from a crash.
constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitRuntime = 4;

} // namespace

int main(int argc, char** argv) {
	CLI::App app{"availability prediction and ring-placement toolkit"};
	app.require_subcommand(1);

	std::string log_path;
	std::string ingest_out;
	std::int64_t epoch = avail::kDefaultEpoch;
	std::int32_t slot_seconds = 3600;
	std::int32_t utc_offset = 0;
	CLI::App* ingest = app.add_subcommand("ingest", "slot a session log into a matrix artifact");
	ingest->add_option("--log", log_path, "session CSV (user_id,start_unix,end_unix)")->required();
	ingest->add_option("--out", ingest_out, "output directory")->required();
	ingest->add_option("--slot-seconds", slot_seconds, "slot width in seconds")->capture_default_str();
	ingest->add_option("--epoch", epoch, "unix time of slot 0")->capture_default_str();
	ingest->add_option("--utc-offset", utc_offset, "seconds added before calendar mapping")
			->capture_default_str();

	std::string synth_config;
	std::string synth_out;
	CLI::App* synth = app.add_subcommand("synth", "generate a synthetic trace from a config");
	synth->add_option("--config", synth_config, "synthetic-trace config (JSON)")->required();
	synth->add_option("--out", synth_out, "output directory")->required();

	std::string manifest_path;
	CLI::App* eval = app.add_subcommand("eval", "run the training-length evaluation grid");
	eval->add_option("--manifest", manifest_path, "experiment manifest (JSON)")->required();
	CLI::App* dht = app.add_subcommand("dht", "optimize ring ids and simulate data availability");
	dht->add_option("--manifest", manifest_path, "experiment manifest (JSON)")->required();
	CLI::App* report = app.add_subcommand("report", "summarize a trace and cluster user behavior");
	report->add_option("--manifest", manifest_path, "experiment manifest (JSON)")->required();

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError& e) {
		int code = app.exit(e); // prints help or the parse message
		return code == 0 ? 0 : kExitParse;
	}

	try {
		if (ingest->parsed()) {
			avail::SlotSpec spec;
			spec.epoch = epoch;
			spec.slot_seconds = slot_seconds;
			spec.utc_offset = utc_offset;
			avail::run_ingest(log_path, spec, ingest_out, std::cout);
		} else if (synth->parsed()) {
			avail::run_synth(synth_config, synth_out, std::cout);
		} else if (eval->parsed()) {
			avail::run_eval(avail::load_manifest(manifest_path), std::cout);
		} else if (dht->parsed()) {
			avail::run_dht(avail::load_manifest(manifest_path), std::cout);
		} else if (report->parsed()) {
			avail::run_report(avail::load_manifest(manifest_path), std::cout);
		}
	} catch (const avail::ParseError& e) {
		std::cerr << "error: " << e.what() << '\n';
		return kExitParse;
	} catch (const avail::ValidationError& e) {
		std::cerr << "error: " << e.what() << '\n';
		return kExitValidation;
	} catch (const std::exception& e) {
		std::cerr << "error: " << e.what() << '\n';
		return kExitRuntime;
	}
	return 0;
}
