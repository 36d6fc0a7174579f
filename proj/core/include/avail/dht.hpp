#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "avail/predictors.hpp"
#include "avail/trace.hpp"

namespace avail {

/// A ring of nodes plus the key population stored on it. Ring positions are
/// the sorted node identifiers and never move; an ID swap only exchanges
/// which node *owns* two positions, so every key's neighbor set, viewed as a
/// set of positions, is fixed once and for all.
struct RingAllocation {
	std::int32_t id_space_bits = 32;
	std::int32_t replication_n = 1;
	std::vector<std::uint64_t> node_ids; // per node, pairwise distinct, < 2^bits
	std::vector<std::uint64_t> keys;     // key hashes, < 2^bits

	std::int32_t n_nodes() const { return static_cast<std::int32_t>(node_ids.size()); }
	std::int32_t n_keys() const { return static_cast<std::int32_t>(keys.size()); }

	void validate() const;

	bool operator==(const RingAllocation&) const = default;
};

/// Fresh allocation with uniformly drawn unique node ids and uniform key
/// hashes, deterministic per seed.
RingAllocation make_allocation(std::int32_t n_nodes, std::int32_t n_keys, std::int32_t id_space_bits,
		std::int32_t replication_n, std::uint64_t seed);

/// Same keys and parameters, node ids redrawn from a fresh stream; the
/// random baseline of the simulation comparisons.
RingAllocation with_random_ids(const RingAllocation& alloc, std::uint64_t seed);

/// Smallest n with 1 - (1 - a_bar)^n >= target, found by walking n upward
/// with a cumulative product (no floating log rounding).
std::int32_t replication_factor(double a_bar, double target);

/// Per-node online probabilities over a fixed sample set T of absolute
/// slots; the materialized (predictor, horizon) pair the DHT math consumes.
struct NodePredictions {
	std::vector<std::int64_t> slots; // T, ascending
	std::vector<double> p;           // n_nodes x |T|, row-major

	std::int32_t n_nodes() const {
		return slots.empty() ? 0 : static_cast<std::int32_t>(p.size() / slots.size());
	}
	std::int32_t n_samples() const { return static_cast<std::int32_t>(slots.size()); }

	double at(std::int32_t node, std::int32_t t) const {
		return p[static_cast<std::size_t>(node) * slots.size() + static_cast<std::size_t>(t)];
	}
};

/// Evaluates one predictor of a trained bundle for every node over the
/// sample slots. `node_rows` maps node index to matrix row.
NodePredictions make_node_predictions(const PredictorBundle& bundle, int predictor,
		std::span<const std::int32_t> node_rows, std::span<const std::int64_t> slots);

/// Predicted availability of every key's data: per key with neighbor set N,
/// 1 - mean over t of prod_{n in N} (1 - p_{n,t}); assumes independence
/// across nodes.
struct PredictedAvailability {
	std::vector<double> per_key;
	double mean = 0.0;
};

PredictedAvailability predicted_data_availability(const RingAllocation& alloc, const NodePredictions& preds);

struct OptimizerConfig {
	double epsilon = 1e-6;       // minimum accepted mean improvement
	std::int64_t patience = 1000; // consecutive non-improving candidates before stopping
	std::uint64_t seed = 0;
};

/// One accepted exchange of ring identifiers between two nodes.
struct SwapRecord {
	std::int32_t a = 0;
	std::int32_t b = 0;
	double gain = 0.0; // mean availability gain over the involved neighbor sets
};

struct OptimizeResult {
	RingAllocation allocation;
	std::vector<SwapRecord> swaps;
	std::int64_t candidates = 0; // pairs examined, accepted or not
	double initial_mean = 0.0;   // global mean predicted availability before
	double final_mean = 0.0;     // ... and after
};

/// Random-pair hill climbing: repeatedly draw a node pair, tentatively
/// exchange their identifiers and keep the swap iff the mean predicted
/// availability over the neighbor sets containing either node improves by
/// more than epsilon. Stops after `patience` consecutive rejected
/// candidates. The global mean never decreases across accepted swaps.
OptimizeResult optimize_ids(const RingAllocation& alloc, const NodePredictions& preds,
		const OptimizerConfig& config);

/// Re-applies a recorded swap sequence to an allocation; bit-exact.
RingAllocation replay_swaps(const RingAllocation& initial, std::span<const SwapRecord> swaps);

/// Trace-driven simulation: at every slot of the test window a node is
/// online iff its cell is nonzero, a key is covered iff at least one owner
/// of its neighbor set is online. Per requested test length the
/// availability is the mean covered-key fraction over the first that many
/// slots.
struct SimulatedAvailability {
	std::vector<std::int64_t> test_lengths; // slots actually evaluated per request
	std::vector<double> availability;       // aligned with test_lengths
	bool truncated = false;                 // a request exceeded the trace and was cut
};

SimulatedAvailability simulate_availability(const RingAllocation& alloc, const TraceMatrix& matrix,
		std::span<const std::int32_t> node_rows, std::int64_t test_start,
		std::span<const std::int64_t> test_lengths);

/// Optimized-vs-random comparison: the random baseline keeps the keys and
/// redraws node ids `baseline_runs` times, simulated availabilities are
/// averaged, and the headline number is the unavailability reduction
/// 1 - (1 - A_opt)/(1 - A_rand) per test length (0 when the baseline is
/// already perfect).
struct AvailabilityOutcome {
	double predicted_availability = 0.0;   // optimized allocation, over the horizon
	std::vector<std::int64_t> test_lengths; // slots
	std::vector<double> simulated_optimized;
	std::vector<double> simulated_random;
	std::vector<double> unavailability_reduction;
	bool truncated = false;
};

AvailabilityOutcome evaluate_allocation(const RingAllocation& optimized, double predicted_mean,
		const TraceMatrix& matrix, std::span<const std::int32_t> node_rows, std::int64_t test_start,
		std::span<const std::int64_t> test_lengths, std::int32_t baseline_runs, std::uint64_t seed);

/// Replayable artifacts: allocation and swap log as JSON, outcome as a
/// plot-ready CSV (test length in days vs availabilities and reduction).
void write_allocation(const RingAllocation& alloc, const std::string& path);
RingAllocation read_allocation(const std::string& path);
void write_swap_log(const OptimizeResult& result, const OptimizerConfig& config, const std::string& path);
std::vector<SwapRecord> read_swap_log(const std::string& path);
void write_outcome_csv(const AvailabilityOutcome& outcome, const SlotSpec& spec, const std::string& path);
void write_outcome_json(const AvailabilityOutcome& outcome, const SlotSpec& spec, const std::string& path);

} // namespace avail
