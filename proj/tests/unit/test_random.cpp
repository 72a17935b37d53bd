#include "doctest.h"

#include <cmath>
#include <set>

#include "lpmbrw/random.hpp"

using namespace lpmbrw;

TEST_CASE("philox known-answer vectors") {
  using P = Philox4x32;
  CHECK(P::block({0, 0, 0, 0}, {0, 0}) == P::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(P::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        P::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(P::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        P::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are addressable and reproducible") {
  RandomStream a(7, 3, StreamRole::tree);
  RandomStream b(7, 3, StreamRole::tree);
  for (int i = 0; i < 100; ++i) REQUIRE(a() == b());

  std::set<std::uint64_t> firsts;
  for (std::uint64_t seed : {0ull, 1ull})
    for (std::uint64_t index : {0ull, 1ull, 2ull, 1ull << 40})
      for (auto role : {StreamRole::tree, StreamRole::leaf, StreamRole::coupling, StreamRole::reference})
        firsts.insert(RandomStream(seed, index, role)());
  CHECK(firsts.size() == 2 * 4 * 4);
}

TEST_CASE("uniform, below and exponential draws") {
  RandomStream s(11, 0, StreamRole::reference);
  double sum = 0.0;
  double esum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    REQUIRE(s.below(7) < 7);
    esum += s.exponential();
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(esum / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(s.below(1) == 0);
}

TEST_CASE("splitmix64 reference values") {
  // First outputs of the reference generator seeded with 0.
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafull);
  CHECK(splitmix64(0x9E3779B97F4A7C15ull) == 0x6e789e6aa1b965f4ull);
}
