#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "avail/synth.hpp"
#include "avail/trace.hpp"

namespace avail_test {

/// Self-deleting scratch directory for artifact round-trip tests.
class TempDir {
public:
	TempDir() {
		static std::atomic<std::uint64_t> counter{0};
		path_ = std::filesystem::temp_directory_path() /
				("avail_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
		std::filesystem::create_directories(path_);
	}

	~TempDir() {
		std::error_code ec;
		std::filesystem::remove_all(path_, ec);
	}

	TempDir(const TempDir&) = delete;
	TempDir& operator=(const TempDir&) = delete;

	const std::filesystem::path& path() const { return path_; }
	std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
	std::filesystem::path path_;
};

/// Dense matrix with users "u0".."u{n-1}" and cells from a formula.
inline avail::TraceMatrix make_matrix(std::int32_t n_users, avail::SlotRange range,
		const std::function<double(std::int32_t, std::int64_t)>& cell,
		const avail::SlotSpec& spec = avail::SlotSpec{}) {
	std::vector<std::string> users;
	users.reserve(static_cast<std::size_t>(n_users));
	for (std::int32_t u = 0; u < n_users; ++u)
		users.push_back("u" + std::to_string(u));
	avail::TraceMatrix matrix(spec, std::move(users), range);
	for (std::int32_t u = 0; u < n_users; ++u)
		for (std::int64_t s = range.first; s < range.last; ++s)
			matrix.set_cell(u, s, cell(u, s));
	return matrix;
}

inline std::vector<std::int32_t> iota_rows(std::int32_t n) {
	std::vector<std::int32_t> rows(static_cast<std::size_t>(n));
	std::iota(rows.begin(), rows.end(), 0);
	return rows;
}

/// Weekly profile built from a per-column formula.
inline std::vector<double> profile_from(const avail::SlotSpec& spec,
		const std::function<double(std::int32_t)>& value) {
	std::vector<double> profile(static_cast<std::size_t>(spec.slots_per_week()));
	for (std::int32_t c = 0; c < spec.slots_per_week(); ++c)
		profile[static_cast<std::size_t>(c)] = value(c);
	return profile;
}

/// One-archetype population with a constant online probability.
inline avail::SynthConfig flat_config(double p, std::int32_t n_users, std::int32_t n_weeks,
		std::uint64_t seed, double daily_survival = 1.0) {
	avail::SynthConfig config;
	config.slot_spec = avail::SlotSpec{};
	avail::UserArchetype archetype;
	archetype.name = "flat";
	archetype.weekly_profile = profile_from(config.slot_spec, [p](std::int32_t) { return p; });
	archetype.population_weight = 1.0;
	archetype.daily_survival = daily_survival;
	config.archetypes = {archetype};
	config.n_users = n_users;
	config.n_weeks = n_weeks;
	config.seed = seed;
	return config;
}

/// Complementary day/night population: the day half is reliably online
/// during working hours, the night half during the rest, so interleaving
/// them around the ring is the clear placement optimum.
inline avail::SynthConfig day_night_config(std::int32_t n_users, std::int32_t n_weeks, std::uint64_t seed,
		double daily_survival = 1.0, double high = 0.95, double low = 0.05) {
	avail::SynthConfig config;
	config.slot_spec = avail::SlotSpec{};
	const std::int32_t per_day = config.slot_spec.slots_per_day();
	auto day_hours = [&](std::int32_t column) {
		std::int32_t hour = column % per_day;
		return hour >= per_day / 3 && hour < 5 * per_day / 6; // roughly 08:00-20:00
	};
	avail::UserArchetype day;
	day.name = "day";
	day.weekly_profile = profile_from(config.slot_spec, [&](std::int32_t c) { return day_hours(c) ? high : low; });
	day.population_weight = 0.5;
	day.daily_survival = daily_survival;
	avail::UserArchetype night;
	night.name = "night";
	night.weekly_profile =
			profile_from(config.slot_spec, [&](std::int32_t c) { return day_hours(c) ? low : high; });
	night.population_weight = 0.5;
	night.daily_survival = daily_survival;
	config.archetypes = {day, night};
	config.n_users = n_users;
	config.n_weeks = n_weeks;
	config.seed = seed;
	return config;
}

/// Reads a whole file; artifact byte-identity checks compare these.
inline std::string slurp(const std::string& path) {
	std::ifstream in(path, std::ios::binary);
	std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
	return data;
}

} // namespace avail_test
