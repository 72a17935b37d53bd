#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lpmbrw/error.hpp"
#include "lpmbrw/simulator.hpp"
#include "lpmbrw/verify.hpp"

using namespace lpmbrw;

namespace {
RunConfig one_block(DisplacementModel m, std::uint64_t n, double theta, std::size_t topk = 8) {
  RunConfig c;
  c.models = {std::move(m)};
  c.schedule = Schedule({n});
  c.theta = theta;
  c.topk = topk;
  return c;
}

std::string csv(std::span<const RunResult> r, std::size_t topk) {
  std::ostringstream os;
  write_csv(os, r, topk);
  return os.str();
}
}  // namespace

TEST_CASE("root-only tree") {
  const auto r = simulate(one_block(DisplacementModel::gaussian_binary(1.0), 0, 1.0), {9, 4});
  CHECK(r.n == 0);
  CHECK(r.r_n == 0.0);
  CHECK(r.log_w == 0.0);
  CHECK(r.leaf_count == 1);
  REQUIRE(r.top_scores.size() == 1);
  RandomStream leaf(9, 4, StreamRole::leaf);
  CHECK(r.r_star == doctest::Approx(-std::log(leaf.exponential())));
}

TEST_CASE("deterministic two-point tree by hand") {
  const double e = std::exp(1.0);
  const auto r = simulate(one_block(DisplacementModel::two_point(1.0, -1.0), 2, 1.0), {1, 0});
  CHECK(r.leaf_count == 4);
  CHECK(r.r_n == 2.0);
  CHECK(r.log_w == doctest::Approx(2.25385602209).epsilon(1e-10));
  CHECK(r.log_w == doctest::Approx(std::log(e * e + 2 + 1 / (e * e))).epsilon(1e-14));
  CHECK(r.first_block_log_w == doctest::Approx(r.log_w).epsilon(1e-14));
  CHECK(r.m_share == doctest::Approx(e * e / (e * e + 2 + 1 / (e * e))).epsilon(1e-12));

  const double offset = 2.0 * std::log(e + 1 / e);
  double d = 0.0;
  for (double s : {2.0, 0.0, 0.0, -2.0}) d -= (s - offset) * std::exp(s - offset);
  CHECK(r.d_stat == doctest::Approx(d).epsilon(1e-12));

  // Both partition functions are deterministic: normalized W is exactly one.
  const std::vector<double> nus{nu(DisplacementModel::two_point(1.0, -1.0), 1.0)};
  const auto w = normalized_w(std::span(&r, 1), nus, Schedule({2}));
  CHECK(std::abs(w[0] - 1.0) < 1e-14);
}

TEST_CASE("single-pass statistics are consistent") {
  RunConfig c;
  c.models = {DisplacementModel::gaussian_binary(1.5), DisplacementModel::gaussian_binary(0.5)};
  c.schedule = Schedule({3, 4});
  c.theta = 0.6;
  c.topk = 5;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const auto r = simulate(c, {3, rep});
    CHECK(r.leaf_count == 128);
    REQUIRE(r.top_scores.size() == 5);
    CHECK(std::is_sorted(r.top_scores.rbegin(), r.top_scores.rend()));
    CHECK(r.top_scores[0] == doctest::Approx(c.theta * r.r_star).epsilon(1e-14));
    CHECK(r.log_w >= c.theta * r.r_n);
    CHECK(r.m_share > 0.0);
    CHECK(r.m_share <= 1.0);
    CHECK(std::isfinite(r.d_stat));
  }
}

TEST_CASE("top-k pruning keeps the exact top scores") {
  auto full = one_block(DisplacementModel::gaussian_binary(1.0), 6, 0.7, 64);
  auto small = full;
  small.topk = 4;
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    const auto a = simulate(full, {21, rep});
    const auto b = simulate(small, {21, rep});
    REQUIRE(a.top_scores.size() == 64);
    for (std::size_t j = 0; j < 4; ++j) CHECK(b.top_scores[j] == a.top_scores[j]);
    CHECK(a.log_w == b.log_w);
  }
}

TEST_CASE("first-block statistics can be switched off") {
  auto c = one_block(DisplacementModel::gaussian_binary(1.0), 4, 0.5);
  c.record_first_block = false;
  const auto r = simulate(c, {1, 1});
  CHECK(std::isnan(r.first_block_log_w));
  CHECK(std::isnan(r.d_stat));
  CHECK_THROWS_AS(ratio_check(std::span(&r, 1), 0.5, std::vector<double>{0.0}, Schedule({4}), 0.25), ConfigError);
}

TEST_CASE("batches are reproducible for any worker count") {
  RunConfig c;
  c.models = {DisplacementModel::gaussian_binary(2.0), DisplacementModel::gaussian_binary(1.0)};
  c.schedule = Schedule({4, 4});
  c.theta = 0.5;
  const auto one = batch(c, 40, 77, 1);
  const auto four = batch(c, 40, 77, 4);
  CHECK(csv(one, c.topk) == csv(four, c.topk));
  CHECK(csv(one, c.topk).rfind("rep,r_n,r_star,log_w,first_block_log_w,d_stat,m_share,leaf_count,top_1,", 0) == 0);
  const auto single = simulate(c, {77, 0});
  CHECK(single.log_w == one[0].log_w);
  const auto tail = batch_range(c, 30, 10, 77, 3);
  CHECK(csv(tail, c.topk) == csv(std::span(one).subspan(30), c.topk));
  CHECK_THROWS_AS(batch(c, 0, 77), ConfigError);
}

TEST_CASE("particle budget") {
  auto c = one_block(DisplacementModel::gaussian_binary(1.0), 10, 0.5);
  c.particle_budget = 100;
  try {
    batch(c, 3, 1, 2);
    FAIL("expected a budget error");
  } catch (const BudgetExceededError& e) {
    CHECK(e.replicate() == 0);
  }
  c.particle_budget = 1024;
  CHECK_NOTHROW(simulate(c, {1, 0}));
}

TEST_CASE("coupling arm") {
  RandomStream s(1, 0, StreamRole::coupling);
  RandomStream t(1, 0, StreamRole::coupling);
  const double e = t.exponential();
  CHECK(coupled_rightmost(std::log(2.0), 1.0, s) == doctest::Approx(std::log(2.0) - std::log(e)));

  // The coupling holds in law at every n.
  const auto c = one_block(DisplacementModel::gaussian_binary(1.0), 4, 0.5);
  const auto a = batch(c, 3000, 5);
  const auto b = batch_range(c, 3000, 3000, 5);
  std::vector<double> direct;
  for (const auto& r : a) direct.push_back(r.r_star);
  const auto coupled = coupled_rightmost(b, 5);
  CHECK(ks_two_sample(EmpiricalDistribution(direct), EmpiricalDistribution(coupled), Alpha{0.01}).pass);
}

TEST_CASE("normalized partition function has mean one") {
  const auto c = one_block(DisplacementModel::gaussian_binary(1.0), 6, 0.5);
  const auto r = batch(c, 4000, 8);
  const std::vector<double> nus{nu(c.models[0], 0.5)};
  CHECK(mean_check(normalized_w(r, nus, c.schedule), 1.0, 3.0).pass);
}

TEST_CASE("centered maximum") {
  const auto c = one_block(DisplacementModel::gaussian_binary(1.0), 3, 0.5);
  const auto r = simulate(c, {2, 2});
  CenteringSpec zero;
  zero.theta = 0.5;
  zero.n = 3;
  CHECK(centered_r_star(r, zero) == r.r_star);
  zero.n = 4;
  CHECK_THROWS_AS(centered_r_star(r, zero), RegimeError);
  zero.n = 3;
  zero.theta = 0.4;
  CHECK_THROWS_AS(centered_r_star(r, zero), RegimeError);
}
