#pragma once

#include <cstdint>
#include <initializer_list>

namespace avail {

/// Deterministic PRNG used everywhere randomness is needed.
///
/// Experiments must replay bit-identically across platforms and standard
/// library versions, so no std:: distribution is used anywhere: xoshiro256**
/// state transitions and the uniform-double mapping below are fully pinned.
class Rng {
public:
	explicit Rng(std::uint64_t seed) {
		std::uint64_t sm = seed;
		for (auto& word : state_)
			word = splitmix64(sm);
	}

	/// Mixes (seed, path) into a child seed. Components such as per-user
	/// generators derive their streams this way so parallel generation stays
	/// deterministic regardless of scheduling order.
	static std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
		std::uint64_t sm = seed;
		std::uint64_t mixed = splitmix64(sm);
		for (std::uint64_t word : path) {
			sm = mixed ^ (word + 0x9e3779b97f4a7c15ULL);
			mixed = splitmix64(sm);
		}
		return mixed;
	}

	/// Independent stream seeded from (seed, path).
	static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
		return Rng(derive_key(seed, path));
	}

	std::uint64_t next_u64() {
		const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
		const std::uint64_t t = state_[1] << 17;
		state_[2] ^= state_[0];
		state_[3] ^= state_[1];
		state_[1] ^= state_[2];
		state_[0] ^= state_[3];
		state_[2] ^= t;
		state_[3] = rotl(state_[3], 45);
		return result;
	}

	/// Uniform double in [0, 1), 53 significant bits.
	double next_double() {
		return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
	}

	/// Uniform integer in [0, n), unbiased (rejection sampling). n must be > 0.
	std::uint64_t next_below(std::uint64_t n) {
		const std::uint64_t threshold = (0 - n) % n;
		for (;;) {
			const std::uint64_t x = next_u64();
			if (x >= threshold)
				return x % n;
		}
	}

	/// Bernoulli draw with success probability p.
	bool next_bernoulli(double p) {
		return next_double() < p;
	}

private:
	static std::uint64_t splitmix64(std::uint64_t& x) {
		std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
		z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
		z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
		return z ^ (z >> 31);
	}

	static std::uint64_t rotl(std::uint64_t x, int k) {
		return (x << k) | (x >> (64 - k));
	}

	std::uint64_t state_[4];
};

/// Stream tags for Rng::derive paths, one per randomized subsystem.
namespace rng_tag {
inline constexpr std::uint64_t kSynthUser = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kCluster = 3;
inline constexpr std::uint64_t kRingIds = 4;
inline constexpr std::uint64_t kRingKeys = 5;
inline constexpr std::uint64_t kOptimizer = 6;
inline constexpr std::uint64_t kBaseline = 7;
} // namespace rng_tag

} // namespace avail
