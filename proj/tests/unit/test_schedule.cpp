#include "doctest.h"

#include <vector>

#include "lpmbrw/error.hpp"
#include "lpmbrw/schedule.hpp"

using namespace lpmbrw;

TEST_CASE("proportional rounding sends the remainder to the last block") {
  const std::vector<double> half{0.5, 0.5};
  CHECK(proportional_schedule(half, 32) == Schedule({16, 16}));
  CHECK(proportional_schedule(half, 33) == Schedule({16, 17}));
  const std::vector<double> thirds{1.0 / 3, 1.0 / 3, 1.0 / 3};
  for (std::uint64_t n = 3; n < 50; ++n) {
    const auto s = proportional_schedule(thirds, n);
    CHECK(s.n() == n);
  }
}

TEST_CASE("slow-first uses floor(sqrt n) for the first block") {
  const std::vector<double> rest{1.0};
  CHECK(slow_first_schedule(rest, 100) == Schedule({10, 90}));
  CHECK(slow_first_schedule(rest, 20) == Schedule({4, 16}));
  const std::vector<double> two{0.5, 0.5};
  CHECK(slow_first_schedule(two, 101) == Schedule({10, 45, 46}));
  CHECK_THROWS_AS(slow_first_schedule(std::vector<double>{}, 100), ConfigError);
}

TEST_CASE("weights must sum to one") {
  const std::vector<double> bad{0.5, 0.4};
  CHECK_THROWS_AS(proportional_schedule(bad, 10), ConfigError);
}

TEST_CASE("boundaries and block lookup") {
  const Schedule s({3, 2, 4});
  CHECK(s.n() == 9);
  CHECK(s.boundary(0) == 0);
  CHECK(s.boundary(1) == 3);
  CHECK(s.boundary(2) == 5);
  CHECK(s.boundary(3) == 9);
  CHECK(s.block_of(1) == 0);
  CHECK(s.block_of(3) == 0);
  CHECK(s.block_of(4) == 1);
  CHECK(s.block_of(9) == 2);
  CHECK(s.then(Schedule({1})) == Schedule({3, 2, 4, 1}));
}
