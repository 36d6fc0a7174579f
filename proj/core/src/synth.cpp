#include "avail/synth.hpp"

#include <cmath>
#include <fstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "avail/errors.hpp"
#include "avail/rng.hpp"

namespace avail {

using nlohmann::json;

void SynthConfig::validate() const {
	slot_spec.validate();
	if (n_users < 1)
		throw ValidationError("n_users must be >= 1");
	if (n_weeks < 1)
		throw ValidationError("n_weeks must be >= 1");
	if (archetypes.empty())
		throw ValidationError("at least one archetype is required");
	const std::size_t spw = static_cast<std::size_t>(slot_spec.slots_per_week());
	double weight_sum = 0.0;
	for (const UserArchetype& a : archetypes) {
		if (a.weekly_profile.size() != spw)
			throw ValidationError("archetype '" + a.name + "': weekly_profile must have " + std::to_string(spw) + " entries");
		for (double p : a.weekly_profile) {
			if (!(p >= 0.0 && p <= 1.0))
				throw ValidationError("archetype '" + a.name + "': profile values must be in [0, 1]");
		}
		if (!(a.daily_survival > 0.0 && a.daily_survival <= 1.0))
			throw ValidationError("archetype '" + a.name + "': daily_survival must be in (0, 1]");
		if (a.population_weight < 0.0)
			throw ValidationError("archetype '" + a.name + "': negative population weight");
		weight_sum += a.population_weight;
	}
	if (std::abs(weight_sum - 1.0) > 1e-6)
		throw ValidationError("archetype population weights must sum to 1");
}

double GroundTruth::true_probability(std::int32_t row, std::int64_t slot) const {
	if (!alive_at(row, slot))
		return 0.0;
	const UserArchetype& a = archetypes[static_cast<std::size_t>(user_archetype[static_cast<std::size_t>(row)])];
	return a.weekly_profile[static_cast<std::size_t>(slot_spec.week_column(slot))];
}

namespace {

std::string synth_user_id(std::int32_t index) {
	char buf[16];
	std::snprintf(buf, sizeof(buf), "u%06d", index);
	return buf;
}

std::int32_t pick_archetype(const SynthConfig& config, double u) {
	double cumulative = 0.0;
	for (std::size_t i = 0; i < config.archetypes.size(); ++i) {
		cumulative += config.archetypes[i].population_weight;
		if (u < cumulative)
			return static_cast<std::int32_t>(i);
	}
	return static_cast<std::int32_t>(config.archetypes.size() - 1);
}

} // namespace

SynthResult generate_trace(const SynthConfig& config) {
	config.validate();
	const std::int64_t total_days = static_cast<std::int64_t>(config.n_weeks) * 7;
	const std::int64_t n_slots = static_cast<std::int64_t>(config.n_weeks) * config.slot_spec.slots_per_week();

	std::vector<std::string> users;
	users.reserve(static_cast<std::size_t>(config.n_users));
	for (std::int32_t u = 0; u < config.n_users; ++u)
		users.push_back(synth_user_id(u));

	SynthResult result{TraceMatrix(config.slot_spec, std::move(users), {0, n_slots}), {}};
	GroundTruth& truth = result.truth;
	truth.slot_spec = config.slot_spec;
	truth.slot_range = {0, n_slots};
	truth.archetypes = config.archetypes;
	truth.users = result.matrix.users();
	truth.user_archetype.resize(static_cast<std::size_t>(config.n_users));
	truth.death_day.resize(static_cast<std::size_t>(config.n_users));

	for (std::int32_t u = 0; u < config.n_users; ++u) {
		Rng life = Rng::derive(config.seed, {rng_tag::kSynthUser, static_cast<std::uint64_t>(u), 0});
		Rng cells = Rng::derive(config.seed, {rng_tag::kSynthUser, static_cast<std::uint64_t>(u), 1});

		const std::int32_t archetype = pick_archetype(config, life.next_double());
		truth.user_archetype[static_cast<std::size_t>(u)] = archetype;
		const UserArchetype& a = config.archetypes[static_cast<std::size_t>(archetype)];

		std::int64_t death = GroundTruth::kNoDeath;
		if (a.daily_survival < 1.0) {
			for (std::int64_t day = 1; day <= total_days; ++day) {
				if (!life.next_bernoulli(a.daily_survival)) {
					death = day;
					break;
				}
			}
		}
		truth.death_day[static_cast<std::size_t>(u)] = death;

		for (std::int64_t slot = 0; slot < n_slots; ++slot) {
			const bool alive = truth.day_of_slot(slot) < death;
			if (!alive)
				break; // death is permanent; remaining cells stay 0
			const double p = a.weekly_profile[static_cast<std::size_t>(config.slot_spec.week_column(slot))];
			if (cells.next_bernoulli(p))
				result.matrix.set_cell(u, slot, 1.0);
		}
	}
	return result;
}

double bayes_mse(const GroundTruth& truth, std::span<const std::int32_t> rows, SlotRange window) {
	if (rows.empty())
		throw ValidationError("bayes_mse: empty user subset");
	if (window.empty() || !truth.slot_range.contains(window))
		throw ValidationError("bayes_mse: window outside the generated range");
	double sum = 0.0;
	for (std::int32_t row : rows) {
		for (std::int64_t slot = window.first; slot < window.last; ++slot) {
			const double p = truth.true_probability(row, slot);
			sum += p * (1.0 - p);
		}
	}
	return sum / (static_cast<double>(rows.size()) * static_cast<double>(window.size()));
}

namespace {

// Builds a weekly profile from a base probability plus (day set, hour range,
// probability) blocks. Later blocks win on overlap.
struct ProfileBlock {
	std::vector<int> days;
	int start_hour = 0;
	int end_hour = 0; // exclusive
	double p = 0.0;
};

std::vector<double> build_profile(const SlotSpec& spec, double base, const std::vector<ProfileBlock>& blocks) {
	std::vector<double> profile(static_cast<std::size_t>(spec.slots_per_week()), base);
	for (std::int32_t column = 0; column < spec.slots_per_week(); ++column) {
		const int dow = spec.day_of_week(column);
		const double hour = static_cast<double>(spec.second_of_day(column)) / 3600.0;
		for (const ProfileBlock& b : blocks) {
			bool day_match = false;
			for (int d : b.days)
				day_match = day_match || d == dow;
			if (day_match && hour >= b.start_hour && hour < b.end_hour)
				profile[static_cast<std::size_t>(column)] = b.p;
		}
	}
	return profile;
}

const std::vector<int> kWeekdays = {0, 1, 2, 3, 4};
const std::vector<int> kWeekendDays = {5, 6};
const std::vector<int> kAllDays = {0, 1, 2, 3, 4, 5, 6};

} // namespace

std::vector<UserArchetype> default_archetypes(const SlotSpec& spec) {
	std::vector<UserArchetype> archetypes;

	archetypes.push_back({"always_on", build_profile(spec, 0.97, {}), 0.15, 1.0});

	{
		std::vector<ProfileBlock> blocks = {{kWeekdays, 9, 18, 0.85}, {kWeekendDays, 0, 24, 0.02}};
		archetypes.push_back({"office_hours", build_profile(spec, 0.05, blocks), 0.25, 0.999});
	}
	{
		std::vector<ProfileBlock> blocks = {{kAllDays, 18, 24, 0.70}};
		archetypes.push_back({"evening_home", build_profile(spec, 0.08, blocks), 0.25, 0.998});
	}
	{
		std::vector<ProfileBlock> blocks = {{kWeekendDays, 10, 23, 0.75}};
		archetypes.push_back({"weekend_only", build_profile(spec, 0.03, blocks), 0.15, 0.997});
	}

	archetypes.push_back({"sporadic_churner", build_profile(spec, 0.12, {}), 0.20, 0.97});
	return archetypes;
}

namespace {

SlotSpec slot_spec_from_json(const json& j) {
	SlotSpec spec;
	if (j.contains("epoch"))
		spec.epoch = j.at("epoch").get<std::int64_t>();
	if (j.contains("slot_seconds"))
		spec.slot_seconds = j.at("slot_seconds").get<std::int32_t>();
	if (j.contains("utc_offset"))
		spec.utc_offset = j.at("utc_offset").get<std::int32_t>();
	return spec;
}

json slot_spec_to_json(const SlotSpec& spec) {
	return json{{"epoch", spec.epoch}, {"slot_seconds", spec.slot_seconds}, {"utc_offset", spec.utc_offset}};
}

UserArchetype archetype_from_json(const SlotSpec& spec, const json& j) {
	UserArchetype a;
	a.name = j.at("name").get<std::string>();
	a.population_weight = j.at("weight").get<double>();
	a.daily_survival = j.value("daily_survival", 1.0);
	if (j.contains("weekly_profile")) {
		a.weekly_profile = j.at("weekly_profile").get<std::vector<double>>();
	} else if (j.contains("profile")) {
		const json& p = j.at("profile");
		std::vector<ProfileBlock> blocks;
		for (const json& jb : p.value("blocks", json::array())) {
			ProfileBlock b;
			b.days = jb.at("days").get<std::vector<int>>();
			b.start_hour = jb.at("start_hour").get<int>();
			b.end_hour = jb.at("end_hour").get<int>();
			b.p = jb.at("p").get<double>();
			blocks.push_back(std::move(b));
		}
		a.weekly_profile = build_profile(spec, p.value("base", 0.0), blocks);
	} else {
		throw ParseError("archetype '" + a.name + "': needs weekly_profile or profile");
	}
	return a;
}

json load_json_file(const std::string& path) {
	std::ifstream in(path);
	if (!in)
		throw ParseError("cannot open " + path);
	json j;
	try {
		in >> j;
	} catch (const json::exception& e) {
		throw ParseError(path + ": " + e.what());
	}
	return j;
}

} // namespace

SynthConfig load_synth_config(const std::string& path) {
	const json j = load_json_file(path);
	SynthConfig config;
	try {
		config.seed = j.value("seed", std::uint64_t{0});
		config.n_users = j.at("n_users").get<std::int32_t>();
		config.n_weeks = j.at("n_weeks").get<std::int32_t>();
		if (j.contains("slot"))
			config.slot_spec = slot_spec_from_json(j.at("slot"));
		const json& ja = j.at("archetypes");
		if (ja.is_string() && ja.get<std::string>() == "default") {
			config.archetypes = default_archetypes(config.slot_spec);
		} else {
			for (const json& a : ja)
				config.archetypes.push_back(archetype_from_json(config.slot_spec, a));
		}
	} catch (const json::exception& e) {
		throw ParseError(path + ": " + e.what());
	}
	config.validate();
	return config;
}

void save_synth_config(const SynthConfig& config, const std::string& path) {
	json ja = json::array();
	for (const UserArchetype& a : config.archetypes) {
		ja.push_back(json{{"name", a.name},
				{"weight", a.population_weight},
				{"daily_survival", a.daily_survival},
				{"weekly_profile", a.weekly_profile}});
	}
	const json j{{"seed", config.seed},
			{"n_users", config.n_users},
			{"n_weeks", config.n_weeks},
			{"slot", slot_spec_to_json(config.slot_spec)},
			{"archetypes", ja}};
	std::ofstream out(path);
	if (!out)
		throw ParseError("cannot open " + path + " for writing");
	out << j.dump(2) << '\n';
}

void write_ground_truth(const GroundTruth& truth, const std::string& path) {
	json ja = json::array();
	for (const UserArchetype& a : truth.archetypes) {
		ja.push_back(json{{"name", a.name},
				{"weight", a.population_weight},
				{"daily_survival", a.daily_survival},
				{"weekly_profile", a.weekly_profile}});
	}
	json deaths = json::array();
	for (std::int64_t d : truth.death_day)
		deaths.push_back(d == GroundTruth::kNoDeath ? std::int64_t{-1} : d);
	const json j{{"version", 1},
			{"slot", slot_spec_to_json(truth.slot_spec)},
			{"slot_range", json{{"first", truth.slot_range.first}, {"last", truth.slot_range.last}}},
			{"archetypes", ja},
			{"users", truth.users},
			{"user_archetype", truth.user_archetype},
			{"death_day", deaths}};
	std::ofstream out(path);
	if (!out)
		throw ParseError("cannot open " + path + " for writing");
	out << j.dump() << '\n';
}

GroundTruth read_ground_truth(const std::string& path) {
	const json j = load_json_file(path);
	GroundTruth truth;
	try {
		if (j.at("version").get<int>() != 1)
			throw ParseError(path + ": unsupported ground-truth version");
		truth.slot_spec = slot_spec_from_json(j.at("slot"));
		truth.slot_range = {j.at("slot_range").at("first").get<std::int64_t>(), j.at("slot_range").at("last").get<std::int64_t>()};
		for (const json& a : j.at("archetypes")) {
			UserArchetype archetype;
			archetype.name = a.at("name").get<std::string>();
			archetype.population_weight = a.at("weight").get<double>();
			archetype.daily_survival = a.at("daily_survival").get<double>();
			archetype.weekly_profile = a.at("weekly_profile").get<std::vector<double>>();
			truth.archetypes.push_back(std::move(archetype));
		}
		truth.users = j.at("users").get<std::vector<std::string>>();
		truth.user_archetype = j.at("user_archetype").get<std::vector<std::int32_t>>();
		for (const json& d : j.at("death_day")) {
			const std::int64_t v = d.get<std::int64_t>();
			truth.death_day.push_back(v < 0 ? GroundTruth::kNoDeath : v);
		}
	} catch (const json::exception& e) {
		throw ParseError(path + ": " + e.what());
	}
	return truth;
}

} // namespace avail
