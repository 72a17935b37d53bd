#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

namespace lpmbrw {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Stateless: maps (counter, key) to 128 random bits.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Separates the independent random inputs of one replicate.
enum class StreamRole : std::uint8_t {
  tree = 0,        // branching and displacements
  leaf = 1,        // last-generation exponential perturbations
  coupling = 2,    // the independent draw of the coupling arm
  population = 3,  // smoothing-transform population dynamics
  reference = 4,   // reference samples drawn by statistical tests
  model = 5,       // Monte Carlo cumulant tables
};

/// Seed-addressable random stream: stream(master_seed, index, role).
///
/// The address is resolved counter-style: Philox4x32-10 keyed by the master
/// seed, evaluated at counters whose upper words hold (index, role), yields
/// the 256-bit state of a xoshiro256++ generator that produces the stream.
/// Distinct addresses therefore start from independent states without any
/// sequential seeding. Satisfies UniformRandomBitGenerator.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t max_index = (std::uint64_t{1} << 56) - 1;

  RandomStream(std::uint64_t master_seed, std::uint64_t index, StreamRole role) noexcept {
    const std::uint64_t k = splitmix64(master_seed);
    const Philox4x32::Key key{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    const std::uint64_t id = ((index & max_index) << 8) | static_cast<std::uint64_t>(role);
    for (std::uint32_t block = 0; block < 2; ++block) {
      const auto out = Philox4x32::block(
          {block, 0u, static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)}, key);
      state_[2 * block] = (std::uint64_t{out[1]} << 32) | out[0];
      state_[2 * block + 1] = (std::uint64_t{out[3]} << 32) | out[2];
    }
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 0x9E3779B97F4A7C15ull;
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound), bound > 0 (Lemire's multiply-shift with rejection).
  std::uint64_t below(std::uint64_t bound) noexcept {
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t floor = (0 - bound) % bound;
      while (low < floor) {
        m = static_cast<unsigned __int128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double normal() noexcept { return boost::random::normal_distribution<double>{}(*this); }

  /// Exponential(1).
  double exponential() noexcept { return boost::random::exponential_distribution<double>{}(*this); }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace lpmbrw
