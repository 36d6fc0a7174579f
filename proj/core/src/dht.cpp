#include "avail/dht.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "avail/errors.hpp"
#include "avail/rng.hpp"
#include "avail/text.hpp"

namespace avail {

using json = nlohmann::json;

namespace {

/// Largest value an id may take: 2^bits - 1.
std::uint64_t id_mask(std::int32_t bits) {
	if (bits == 64)
		return ~std::uint64_t{0};
	return (std::uint64_t{1} << bits) - 1;
}

/// Draws `count` pairwise distinct ids uniformly from [0, mask] by
/// rejection. Callers guarantee count <= (mask + 1) / 2, so each draw
/// succeeds with probability >= 1/2 and the loop terminates quickly.
std::vector<std::uint64_t> draw_unique_ids(Rng& rng, std::int32_t count, std::uint64_t mask) {
	std::vector<std::uint64_t> ids;
	ids.reserve(static_cast<std::size_t>(count));
	std::unordered_set<std::uint64_t> used;
	used.reserve(static_cast<std::size_t>(count) * 2);
	while (static_cast<std::int32_t>(ids.size()) < count) {
		std::uint64_t id = rng.next_u64() & mask;
		if (used.insert(id).second)
			ids.push_back(id);
	}
	return ids;
}

/// The frozen geometry of a ring: positions are the node ids in ascending
/// order and every key's neighbor set is a fixed tuple of positions. Swaps
/// only permute `owner` (and its inverse `node_position`); nothing keyed by
/// position ever needs recomputing.
struct RingIndex {
	std::int32_t n_nodes = 0;
	std::int32_t n_keys = 0;
	std::int32_t replication_n = 1;
	std::vector<std::uint64_t> positions;                // ascending ids
	std::vector<std::int32_t> owner;                     // position -> node
	std::vector<std::int32_t> node_position;             // node -> position
	std::vector<std::int32_t> key_positions;             // n_keys x n, row-major
	std::vector<std::vector<std::int32_t>> keys_at_position;

	explicit RingIndex(const RingAllocation& alloc) {
		n_nodes = alloc.n_nodes();
		n_keys = alloc.n_keys();
		replication_n = alloc.replication_n;

		positions = alloc.node_ids;
		std::sort(positions.begin(), positions.end());

		owner.assign(static_cast<std::size_t>(n_nodes), -1);
		node_position.assign(static_cast<std::size_t>(n_nodes), -1);
		for (std::int32_t node = 0; node < n_nodes; ++node) {
			auto it = std::lower_bound(positions.begin(), positions.end(), alloc.node_ids[static_cast<std::size_t>(node)]);
			std::int32_t pos = static_cast<std::int32_t>(it - positions.begin());
			owner[static_cast<std::size_t>(pos)] = node;
			node_position[static_cast<std::size_t>(node)] = pos;
		}

		// A key lives on its successor position (first id >= key, wrapping
		// past the top of the id space) and the n - 1 following positions.
		key_positions.resize(static_cast<std::size_t>(n_keys) * static_cast<std::size_t>(replication_n));
		keys_at_position.assign(static_cast<std::size_t>(n_nodes), {});
		for (std::int32_t k = 0; k < n_keys; ++k) {
			auto it = std::lower_bound(positions.begin(), positions.end(), alloc.keys[static_cast<std::size_t>(k)]);
			std::int32_t start = static_cast<std::int32_t>(it - positions.begin());
			if (start == n_nodes)
				start = 0;
			for (std::int32_t j = 0; j < replication_n; ++j) {
				std::int32_t pos = (start + j) % n_nodes;
				key_positions[static_cast<std::size_t>(k) * static_cast<std::size_t>(replication_n) + static_cast<std::size_t>(j)] = pos;
				keys_at_position[static_cast<std::size_t>(pos)].push_back(k);
			}
		}
	}

	std::int32_t key_position(std::int32_t key, std::int32_t j) const {
		return key_positions[static_cast<std::size_t>(key) * static_cast<std::size_t>(replication_n) + static_cast<std::size_t>(j)];
	}

	/// Predicted availability of one key under the current owners:
	/// 1 - mean over T of the product of the owners' offline probabilities.
	double key_availability(std::int32_t key, const NodePredictions& preds) const {
		std::int32_t samples = preds.n_samples();
		long double unavailable = 0.0L;
		for (std::int32_t t = 0; t < samples; ++t) {
			long double miss = 1.0L;
			for (std::int32_t j = 0; j < replication_n; ++j) {
				std::int32_t node = owner[static_cast<std::size_t>(key_position(key, j))];
				miss *= 1.0L - static_cast<long double>(preds.at(node, t));
			}
			unavailable += miss;
		}
		return static_cast<double>(1.0L - unavailable / samples);
	}

	/// Node ids implied by the current owner permutation, in node order.
	std::vector<std::uint64_t> ids() const {
		std::vector<std::uint64_t> out(static_cast<std::size_t>(n_nodes));
		for (std::int32_t node = 0; node < n_nodes; ++node)
			out[static_cast<std::size_t>(node)] = positions[static_cast<std::size_t>(node_position[static_cast<std::size_t>(node)])];
		return out;
	}
};

void check_node_rows(const TraceMatrix& matrix, std::span<const std::int32_t> node_rows, std::int32_t n_nodes) {
	if (static_cast<std::int32_t>(node_rows.size()) != n_nodes)
		throw ValidationError("node_rows does not match the allocation's node count");
	for (std::int32_t row : node_rows)
		if (row < 0 || row >= matrix.n_users())
			throw ValidationError("node_rows references a row outside the matrix");
}

} // namespace

void RingAllocation::validate() const {
	if (id_space_bits < 1 || id_space_bits > 64)
		throw ValidationError("id_space_bits must be in [1, 64]");
	if (node_ids.empty())
		throw ValidationError("allocation needs at least one node");
	if (keys.empty())
		throw ValidationError("allocation needs at least one key");
	if (replication_n < 1 || replication_n > n_nodes())
		throw ValidationError("replication_n must be in [1, n_nodes]");
	std::uint64_t mask = id_mask(id_space_bits);
	for (std::uint64_t id : node_ids)
		if (id > mask)
			throw ValidationError("node id outside the id space");
	for (std::uint64_t key : keys)
		if (key > mask)
			throw ValidationError("key outside the id space");
	std::unordered_set<std::uint64_t> seen(node_ids.begin(), node_ids.end());
	if (seen.size() != node_ids.size())
		throw ValidationError("node ids must be pairwise distinct");
}

RingAllocation make_allocation(std::int32_t n_nodes, std::int32_t n_keys, std::int32_t id_space_bits,
		std::int32_t replication_n, std::uint64_t seed) {
	if (id_space_bits < 1 || id_space_bits > 64)
		throw ValidationError("id_space_bits must be in [1, 64]");
	if (n_nodes < 1)
		throw ValidationError("need at least one node");
	if (n_keys < 1)
		throw ValidationError("need at least one key");
	if (replication_n < 1 || replication_n > n_nodes)
		throw ValidationError("replication_n must be in [1, n_nodes]");
	// Keep the id space at least half empty so rejection sampling of
	// distinct ids terminates quickly.
	if (id_space_bits < 64 && static_cast<std::uint64_t>(n_nodes) > (std::uint64_t{1} << (id_space_bits - 1)))
		throw ValidationError("id space too small: need n_nodes <= 2^(id_space_bits - 1)");

	RingAllocation alloc;
	alloc.id_space_bits = id_space_bits;
	alloc.replication_n = replication_n;
	std::uint64_t mask = id_mask(id_space_bits);

	Rng ids = Rng::derive(seed, {rng_tag::kRingIds});
	alloc.node_ids = draw_unique_ids(ids, n_nodes, mask);

	Rng keys = Rng::derive(seed, {rng_tag::kRingKeys});
	alloc.keys.reserve(static_cast<std::size_t>(n_keys));
	for (std::int32_t k = 0; k < n_keys; ++k)
		alloc.keys.push_back(keys.next_u64() & mask);

	alloc.validate();
	return alloc;
}

RingAllocation with_random_ids(const RingAllocation& alloc, std::uint64_t seed) {
	alloc.validate();
	RingAllocation fresh = alloc;
	Rng ids = Rng::derive(seed, {rng_tag::kRingIds});
	fresh.node_ids = draw_unique_ids(ids, alloc.n_nodes(), id_mask(alloc.id_space_bits));
	fresh.validate();
	return fresh;
}

std::int32_t replication_factor(double a_bar, double target) {
	if (!(a_bar > 0.0) || !(a_bar < 1.0))
		throw ValidationError("mean availability must be strictly inside (0, 1)");
	if (!(target > 0.0) || !(target < 1.0))
		throw ValidationError("target availability must be strictly inside (0, 1)");
	constexpr std::int32_t kMaxFactor = 10'000'000;
	long double miss = 1.0L - static_cast<long double>(a_bar);
	long double prod = 1.0L;
	for (std::int32_t n = 1; n <= kMaxFactor; ++n) {
		prod *= miss;
		if (1.0L - prod >= static_cast<long double>(target))
			return n;
	}
	throw ValidationError("replication factor exceeds 10^7; availability too low for the target");
}

NodePredictions make_node_predictions(const PredictorBundle& bundle, int predictor,
		std::span<const std::int32_t> node_rows, std::span<const std::int64_t> slots) {
	if (predictor < 0 || predictor >= kNumPredictors)
		throw ValidationError("predictor index out of range");
	if (node_rows.empty())
		throw ValidationError("need at least one node");
	if (slots.empty())
		throw ValidationError("need at least one sample slot");
	for (std::size_t t = 1; t < slots.size(); ++t)
		if (slots[t] <= slots[t - 1])
			throw ValidationError("sample slots must be strictly increasing");

	NodePredictions preds;
	preds.slots.assign(slots.begin(), slots.end());
	preds.p.reserve(node_rows.size() * slots.size());
	for (std::int32_t row : node_rows)
		for (std::int64_t slot : slots)
			preds.p.push_back(bundle.predict(predictor, row, slot));
	return preds;
}

PredictedAvailability predicted_data_availability(const RingAllocation& alloc, const NodePredictions& preds) {
	alloc.validate();
	if (preds.n_nodes() != alloc.n_nodes())
		throw ValidationError("predictions do not match the allocation's node count");
	if (preds.n_samples() < 1)
		throw ValidationError("need at least one sample slot");

	RingIndex ring(alloc);
	PredictedAvailability out;
	out.per_key.resize(static_cast<std::size_t>(alloc.n_keys()));
	long double total = 0.0L;
	for (std::int32_t k = 0; k < alloc.n_keys(); ++k) {
		double a = ring.key_availability(k, preds);
		out.per_key[static_cast<std::size_t>(k)] = a;
		total += a;
	}
	out.mean = static_cast<double>(total / alloc.n_keys());
	return out;
}

OptimizeResult optimize_ids(const RingAllocation& alloc, const NodePredictions& preds,
		const OptimizerConfig& config) {
	alloc.validate();
	if (preds.n_nodes() != alloc.n_nodes())
		throw ValidationError("predictions do not match the allocation's node count");
	if (preds.n_samples() < 1)
		throw ValidationError("need at least one sample slot");
	if (!(config.epsilon > 0.0) || !std::isfinite(config.epsilon))
		throw ValidationError("epsilon must be a positive finite number");
	if (config.patience < 1)
		throw ValidationError("patience must be >= 1");

	RingIndex ring(alloc);
	std::int32_t n_nodes = ring.n_nodes;
	std::int32_t n_keys = ring.n_keys;

	std::vector<double> per_key(static_cast<std::size_t>(n_keys));
	long double initial_total = 0.0L;
	for (std::int32_t k = 0; k < n_keys; ++k) {
		per_key[static_cast<std::size_t>(k)] = ring.key_availability(k, preds);
		initial_total += per_key[static_cast<std::size_t>(k)];
	}

	OptimizeResult result;
	result.initial_mean = static_cast<double>(initial_total / n_keys);

	if (n_nodes < 2) {
		result.allocation = alloc;
		result.final_mean = result.initial_mean;
		return result;
	}

	Rng rng = Rng::derive(config.seed, {rng_tag::kOptimizer});
	std::vector<std::int64_t> stamp(static_cast<std::size_t>(n_keys), -1);
	std::vector<std::int32_t> affected;
	std::vector<double> updated;
	std::int64_t rejections = 0;

	while (rejections < config.patience) {
		std::int64_t candidate = result.candidates++;
		std::int32_t a = static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(n_nodes)));
		std::int32_t b = static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(n_nodes - 1)));
		if (b >= a)
			++b;
		std::int32_t pa = ring.node_position[static_cast<std::size_t>(a)];
		std::int32_t pb = ring.node_position[static_cast<std::size_t>(b)];

		affected.clear();
		for (std::int32_t k : ring.keys_at_position[static_cast<std::size_t>(pa)]) {
			if (stamp[static_cast<std::size_t>(k)] != candidate) {
				stamp[static_cast<std::size_t>(k)] = candidate;
				affected.push_back(k);
			}
		}
		for (std::int32_t k : ring.keys_at_position[static_cast<std::size_t>(pb)]) {
			if (stamp[static_cast<std::size_t>(k)] != candidate) {
				stamp[static_cast<std::size_t>(k)] = candidate;
				affected.push_back(k);
			}
		}
		if (affected.empty()) {
			++rejections;
			continue;
		}

		long double before = 0.0L;
		for (std::int32_t k : affected)
			before += per_key[static_cast<std::size_t>(k)];

		std::swap(ring.owner[static_cast<std::size_t>(pa)], ring.owner[static_cast<std::size_t>(pb)]);
		std::swap(ring.node_position[static_cast<std::size_t>(a)], ring.node_position[static_cast<std::size_t>(b)]);

		updated.clear();
		long double after = 0.0L;
		for (std::int32_t k : affected) {
			double v = ring.key_availability(k, preds);
			updated.push_back(v);
			after += v;
		}

		double gain = static_cast<double>((after - before) / affected.size());
		if (gain > config.epsilon) {
			for (std::size_t i = 0; i < affected.size(); ++i)
				per_key[static_cast<std::size_t>(affected[i])] = updated[i];
			result.swaps.push_back(SwapRecord{a, b, gain});
			rejections = 0;
		} else {
			std::swap(ring.owner[static_cast<std::size_t>(pa)], ring.owner[static_cast<std::size_t>(pb)]);
			std::swap(ring.node_position[static_cast<std::size_t>(a)], ring.node_position[static_cast<std::size_t>(b)]);
			++rejections;
		}
	}

	result.allocation = alloc;
	result.allocation.node_ids = ring.ids();
	long double final_total = 0.0L;
	for (double v : per_key)
		final_total += v;
	result.final_mean = static_cast<double>(final_total / n_keys);
	return result;
}

RingAllocation replay_swaps(const RingAllocation& initial, std::span<const SwapRecord> swaps) {
	initial.validate();
	RingAllocation alloc = initial;
	for (const SwapRecord& swap : swaps) {
		if (swap.a < 0 || swap.a >= alloc.n_nodes() || swap.b < 0 || swap.b >= alloc.n_nodes())
			throw ValidationError("swap log references a node outside the allocation");
		if (swap.a == swap.b)
			throw ValidationError("swap log pairs a node with itself");
		std::swap(alloc.node_ids[static_cast<std::size_t>(swap.a)], alloc.node_ids[static_cast<std::size_t>(swap.b)]);
	}
	return alloc;
}

SimulatedAvailability simulate_availability(const RingAllocation& alloc, const TraceMatrix& matrix,
		std::span<const std::int32_t> node_rows, std::int64_t test_start,
		std::span<const std::int64_t> test_lengths) {
	alloc.validate();
	check_node_rows(matrix, node_rows, alloc.n_nodes());
	if (test_lengths.empty())
		throw ValidationError("need at least one test length");
	for (std::int64_t len : test_lengths)
		if (len < 1)
			throw ValidationError("test lengths must be >= 1 slots");
	SlotRange range = matrix.slot_range();
	if (test_start < range.first || test_start >= range.last)
		throw ValidationError("test window starts outside the trace");

	std::int64_t available = range.last - test_start;
	std::int64_t longest = *std::max_element(test_lengths.begin(), test_lengths.end());

	SimulatedAvailability sim;
	sim.truncated = longest > available;
	std::int64_t horizon = std::min(longest, available);

	// Owners of every key's neighbor set, frozen for this allocation.
	RingIndex ring(alloc);
	std::int32_t n_keys = ring.n_keys;
	std::int32_t repl = ring.replication_n;
	std::vector<std::int32_t> key_owner_rows(static_cast<std::size_t>(n_keys) * static_cast<std::size_t>(repl));
	for (std::int32_t k = 0; k < n_keys; ++k)
		for (std::int32_t j = 0; j < repl; ++j) {
			std::int32_t node = ring.owner[static_cast<std::size_t>(ring.key_position(k, j))];
			key_owner_rows[static_cast<std::size_t>(k) * static_cast<std::size_t>(repl) + static_cast<std::size_t>(j)] =
					node_rows[static_cast<std::size_t>(node)];
		}

	// Prefix sums of the per-slot covered-key fraction; one pass serves
	// every requested length.
	std::vector<long double> prefix;
	prefix.reserve(static_cast<std::size_t>(horizon) + 1);
	prefix.push_back(0.0L);
	std::vector<char> online(static_cast<std::size_t>(matrix.n_users()), 0);
	for (std::int64_t s = test_start; s < test_start + horizon; ++s) {
		for (std::int32_t row : node_rows)
			online[static_cast<std::size_t>(row)] = matrix.cell(row, s) > 0.0 ? 1 : 0;
		std::int64_t covered = 0;
		for (std::int32_t k = 0; k < n_keys; ++k) {
			const std::int32_t* rows = key_owner_rows.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(repl);
			for (std::int32_t j = 0; j < repl; ++j)
				if (online[static_cast<std::size_t>(rows[j])]) {
					++covered;
					break;
				}
		}
		prefix.push_back(prefix.back() + static_cast<long double>(covered) / n_keys);
	}

	for (std::int64_t requested : test_lengths) {
		std::int64_t evaluated = std::min(requested, horizon);
		sim.test_lengths.push_back(evaluated);
		sim.availability.push_back(static_cast<double>(prefix[static_cast<std::size_t>(evaluated)] / evaluated));
	}
	return sim;
}

AvailabilityOutcome evaluate_allocation(const RingAllocation& optimized, double predicted_mean,
		const TraceMatrix& matrix, std::span<const std::int32_t> node_rows, std::int64_t test_start,
		std::span<const std::int64_t> test_lengths, std::int32_t baseline_runs, std::uint64_t seed) {
	if (baseline_runs < 1)
		throw ValidationError("need at least one baseline run");

	SimulatedAvailability opt = simulate_availability(optimized, matrix, node_rows, test_start, test_lengths);

	std::vector<long double> random_sum(opt.test_lengths.size(), 0.0L);
	for (std::int32_t run = 0; run < baseline_runs; ++run) {
		RingAllocation redrawn =
				with_random_ids(optimized, Rng::derive_key(seed, {rng_tag::kBaseline, static_cast<std::uint64_t>(run)}));
		SimulatedAvailability sim = simulate_availability(redrawn, matrix, node_rows, test_start, test_lengths);
		for (std::size_t i = 0; i < random_sum.size(); ++i)
			random_sum[i] += sim.availability[i];
	}

	AvailabilityOutcome outcome;
	outcome.predicted_availability = predicted_mean;
	outcome.test_lengths = opt.test_lengths;
	outcome.simulated_optimized = opt.availability;
	outcome.truncated = opt.truncated;
	outcome.simulated_random.reserve(random_sum.size());
	outcome.unavailability_reduction.reserve(random_sum.size());
	for (std::size_t i = 0; i < random_sum.size(); ++i) {
		double rand_avail = static_cast<double>(random_sum[i] / baseline_runs);
		outcome.simulated_random.push_back(rand_avail);
		double denom = 1.0 - rand_avail;
		double reduction = denom > 0.0 ? 1.0 - (1.0 - outcome.simulated_optimized[i]) / denom : 0.0;
		outcome.unavailability_reduction.push_back(reduction);
	}
	return outcome;
}

void write_allocation(const RingAllocation& alloc, const std::string& path) {
	alloc.validate();
	json j;
	j["version"] = 1;
	j["id_space_bits"] = alloc.id_space_bits;
	j["replication_n"] = alloc.replication_n;
	j["node_ids"] = alloc.node_ids;
	j["keys"] = alloc.keys;
	std::ofstream out(path);
	if (!out)
		throw ParseError("cannot open " + path + " for writing");
	out << j.dump() << '\n';
}

RingAllocation read_allocation(const std::string& path) {
	std::ifstream in(path);
	if (!in)
		throw ParseError("cannot open " + path);
	json j;
	try {
		in >> j;
	} catch (const json::exception& e) {
		throw ParseError(path + ": " + e.what());
	}
	RingAllocation alloc;
	try {
		if (j.at("version").get<int>() != 1)
			throw ParseError(path + ": unsupported allocation version");
		alloc.id_space_bits = j.at("id_space_bits").get<std::int32_t>();
		alloc.replication_n = j.at("replication_n").get<std::int32_t>();
		alloc.node_ids = j.at("node_ids").get<std::vector<std::uint64_t>>();
		alloc.keys = j.at("keys").get<std::vector<std::uint64_t>>();
	} catch (const json::exception& e) {
		throw ParseError(path + ": " + e.what());
	}
	try {
		alloc.validate();
	} catch (const ValidationError& e) {
		throw ParseError(path + ": " + e.what());
	}
	return alloc;
}

void write_swap_log(const OptimizeResult& result, const OptimizerConfig& config, const std::string& path) {
	json j;
	j["version"] = 1;
	j["seed"] = config.seed;
	j["epsilon"] = config.epsilon;
	j["patience"] = config.patience;
	j["candidates"] = result.candidates;
	j["initial_mean"] = result.initial_mean;
	j["final_mean"] = result.final_mean;
	j["swaps"] = json::array();
	for (const SwapRecord& swap : result.swaps)
		j["swaps"].push_back(json{{"a", swap.a}, {"b", swap.b}, {"gain", swap.gain}});
	std::ofstream out(path);
	if (!out)
		throw ParseError("cannot open " + path + " for writing");
	out << j.dump() << '\n';
}

std::vector<SwapRecord> read_swap_log(const std::string& path) {
	std::ifstream in(path);
	if (!in)
		throw ParseError("cannot open " + path);
	json j;
	try {
		in >> j;
	} catch (const json::exception& e) {
		throw ParseError(path + ": " + e.what());
	}
	std::vector<SwapRecord> swaps;
	try {
		if (j.at("version").get<int>() != 1)
			throw ParseError(path + ": unsupported swap log version");
		for (const json& entry : j.at("swaps")) {
			SwapRecord swap;
			swap.a = entry.at("a").get<std::int32_t>();
			swap.b = entry.at("b").get<std::int32_t>();
			swap.gain = entry.at("gain").get<double>();
			swaps.push_back(swap);
		}
	} catch (const json::exception& e) {
		throw ParseError(path + ": " + e.what());
	}
	return swaps;
}

namespace {

double slots_to_days(std::int64_t slots, const SlotSpec& spec) {
	return static_cast<double>(slots) * static_cast<double>(spec.slot_seconds) / static_cast<double>(kSecondsPerDay);
}

} // namespace

void write_outcome_csv(const AvailabilityOutcome& outcome, const SlotSpec& spec, const std::string& path) {
	std::ofstream out(path);
	if (!out)
		throw ParseError("cannot open " + path + " for writing");
	out << "test_length_days,simulated_optimized,simulated_random,unavailability_reduction\n";
	for (std::size_t i = 0; i < outcome.test_lengths.size(); ++i) {
		out << double_to_string(slots_to_days(outcome.test_lengths[i], spec)) << ','
			<< double_to_string(outcome.simulated_optimized[i]) << ','
			<< double_to_string(outcome.simulated_random[i]) << ','
			<< double_to_string(outcome.unavailability_reduction[i]) << '\n';
	}
}

void write_outcome_json(const AvailabilityOutcome& outcome, const SlotSpec& spec, const std::string& path) {
	json rows = json::array();
	for (std::size_t i = 0; i < outcome.test_lengths.size(); ++i) {
		rows.push_back(json{
				{"test_length_slots", outcome.test_lengths[i]},
				{"test_length_days", slots_to_days(outcome.test_lengths[i], spec)},
				{"simulated_optimized", outcome.simulated_optimized[i]},
				{"simulated_random", outcome.simulated_random[i]},
				{"unavailability_reduction", outcome.unavailability_reduction[i]},
		});
	}
	json j;
	j["version"] = 1;
	j["predicted_availability"] = outcome.predicted_availability;
	j["truncated"] = outcome.truncated;
	j["rows"] = rows;
	std::ofstream out(path);
	if (!out)
		throw ParseError("cannot open " + path + " for writing");
	out << j.dump() << '\n';
}

} // namespace avail
