#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "avail/trace.hpp"

namespace avail {

/// A connectivity class: the true per-week-column online probability of its
/// members, plus the per-day probability of not abandoning the system.
struct UserArchetype {
	std::string name;
	std::vector<double> weekly_profile; // one value per week column, in [0, 1]
	double population_weight = 0.0;
	double daily_survival = 1.0;        // in (0, 1]
};

struct SynthConfig {
	std::vector<UserArchetype> archetypes;
	std::int32_t n_users = 0;
	std::int32_t n_weeks = 0;
	std::uint64_t seed = 0;
	SlotSpec slot_spec;

	void validate() const; // throws ValidationError
};

/// What the generator knows and a predictor does not: each user's archetype,
/// true per-column probability, and the day the user abandoned the system.
struct GroundTruth {
	static constexpr std::int64_t kNoDeath = std::numeric_limits<std::int64_t>::max();

	SlotSpec slot_spec;
	SlotRange slot_range;
	std::vector<UserArchetype> archetypes;
	std::vector<std::string> users;          // aligned with matrix rows
	std::vector<std::int32_t> user_archetype;
	std::vector<std::int64_t> death_day;     // days since slot 0; kNoDeath if the user never leaves

	/// Day index (since slot 0) containing the given slot.
	std::int64_t day_of_slot(std::int64_t slot) const {
		return floor_div(slot * slot_spec.slot_seconds, kSecondsPerDay);
	}

	bool alive_at(std::int32_t row, std::int64_t slot) const {
		return day_of_slot(slot) < death_day[static_cast<std::size_t>(row)];
	}

	/// True online probability of a user at a slot; 0 once the user has left.
	double true_probability(std::int32_t row, std::int64_t slot) const;
};

struct SynthResult {
	TraceMatrix matrix;
	GroundTruth truth;
};

/// Draws a trace: each user gets an archetype by population weight and a
/// geometrically distributed abandonment day; every slot before death is
/// online with the profile's column probability, independently. Cells are
/// 0/1 (a synthetic user is online for whole slots). Bit-identical output
/// for identical configs; each user consumes a private RNG stream derived
/// from (seed, user index), so the result does not depend on generation
/// order.
SynthResult generate_trace(const SynthConfig& config);

/// Irreducible mean squared error over (rows x window): the expected MSE of
/// the predictor that outputs the true probability, E[p(1-p)], with p = 0
/// after a user's death. No predictor can beat this in expectation.
double bayes_mse(const GroundTruth& truth, std::span<const std::int32_t> rows, SlotRange window);

/// Five documented stock profiles (always-on, office-hours, evening-home,
/// weekend-only, sporadic-churner) mixing very high, very low, and strongly
/// periodic behavior. Weights sum to 1.
std::vector<UserArchetype> default_archetypes(const SlotSpec& spec);

/// Declarative JSON config (see README for the schema).
SynthConfig load_synth_config(const std::string& path);
void save_synth_config(const SynthConfig& config, const std::string& path);

GroundTruth read_ground_truth(const std::string& path);
void write_ground_truth(const GroundTruth& truth, const std::string& path);

} // namespace avail
