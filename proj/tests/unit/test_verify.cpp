#include "doctest.h"

#include <cmath>
#include <sstream>

#include "lpmbrw/error.hpp"
#include "lpmbrw/verify.hpp"

using namespace lpmbrw;

namespace {
std::vector<double> exponentials(std::size_t n, std::uint64_t seed) {
  RandomStream s(seed, 0, StreamRole::reference);
  std::vector<double> out(n);
  for (auto& v : out) v = s.exponential();
  return out;
}

RunResult with_scores(std::vector<double> scores) {
  RunResult r;
  r.top_scores = std::move(scores);
  return r;
}
}  // namespace

TEST_CASE("empirical distribution") {
  const EmpiricalDistribution d({3.0, 1.0, 2.0, 2.0});
  CHECK(d.cdf(0.0) == 0.0);
  CHECK(d.cdf(2.0) == 0.75);
  CHECK(d.cdf(10.0) == 1.0);
  CHECK(d.quantile(0.25) == 1.0);
  CHECK(d.quantile(0.5) == 2.0);
  CHECK(d.quantile(1.0) == 3.0);
  CHECK(d.mean() == 2.0);
  CHECK_THROWS_AS(EmpiricalDistribution({}), EmptySampleError);
  CHECK_THROWS_AS(EmpiricalDistribution({std::nan("")}), DomainError);
}

TEST_CASE("two-sample KS") {
  const EmpiricalDistribution a({1.0, 2.0, 3.0});
  CHECK(ks_two_sample_statistic(a, a) == 0.0);
  CHECK(ks_two_sample(a, a, Alpha{0.01}).pass);
  CHECK(ks_two_sample_statistic(EmpiricalDistribution({0.0}), EmpiricalDistribution({1.0})) == 1.0);
  CHECK(ks_two_sample_statistic(EmpiricalDistribution({1.0, 2.0}), EmpiricalDistribution({2.0, 3.0})) == 0.5);

  const EmpiricalDistribution x(exponentials(5000, 1));
  const EmpiricalDistribution y(exponentials(5000, 2));
  const auto r = ks_two_sample(x, y, Alpha{0.01});
  CHECK(r.pass);
  CHECK(r.threshold == doctest::Approx(1.6276 * std::sqrt(2.0 / 5000)).epsilon(1e-3));
  CHECK(ks_two_sample_statistic(x, y) == ks_two_sample_statistic(y, x));

  // Invariant under a strictly increasing transform of both samples.
  std::vector<double> lx, ly;
  for (double v : x.values()) lx.push_back(std::log(v) * 3 + 1);
  for (double v : y.values()) ly.push_back(std::log(v) * 3 + 1);
  CHECK(ks_two_sample_statistic(EmpiricalDistribution(lx), EmpiricalDistribution(ly)) ==
        doctest::Approx(ks_two_sample_statistic(x, y)).epsilon(1e-14));
  CHECK(ks_coefficient(0.05) == doctest::Approx(1.3581).epsilon(1e-4));
}

TEST_CASE("one-sample KS against the exponential law") {
  const EmpiricalDistribution x(exponentials(5000, 3));
  CHECK(ks_one_sample(x, exponential_cdf, Alpha{0.01}).pass);
  std::vector<double> shifted;
  for (double v : x.values()) shifted.push_back(v + 0.3);
  CHECK_FALSE(ks_one_sample(EmpiricalDistribution(shifted), exponential_cdf, Alpha{0.01}).pass);
  CHECK(ks_one_sample_statistic(EmpiricalDistribution({0.0}), exponential_cdf) == 1.0);
}

TEST_CASE("gap test on a synthetic Poisson skeleton") {
  RandomStream s(4, 0, StreamRole::reference);
  std::vector<RunResult> results;
  std::size_t above[3] = {0, 0, 0};
  const double g[3] = {0.5, 1.0, 2.0};
  const std::size_t n = 5000;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = s.exponential();
    const double b = a + s.exponential();
    results.push_back(with_scores({-std::log(a), -std::log(b)}));
    for (int k = 0; k < 3; ++k) above[k] += (-std::log(a) + std::log(b)) > g[k];
  }
  CHECK(gap_test(results, Alpha{0.01}).pass);
  for (int k = 0; k < 3; ++k) {
    const double p = std::exp(-g[k]);
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(static_cast<double>(above[k]) / n - p) < 3 * se);
  }
}

TEST_CASE("degenerate gap inputs") {
  std::vector<RunResult> equal(10, with_scores({1.0, 1.0}));
  const auto r = gap_test(equal, Alpha{0.01});
  CHECK(r.statistic == 1.0);
  CHECK_FALSE(r.pass);
  std::vector<RunResult> short_top(3, with_scores({1.0}));
  CHECK_THROWS_AS(gap_test(short_top, Alpha{0.01}), ConfigError);
}

TEST_CASE("law-of-large-numbers report") {
  const std::vector<LlnPoint> good{{8, 2.3}, {12, 2.2}, {16, 2.1}};
  const auto r = lln_check(good, 2.0, 0.15);
  CHECK(r.non_increasing);
  CHECK(r.final_within_eps);
  CHECK(r.deviations[0] == doctest::Approx(0.3));

  const std::vector<LlnPoint> bumpy{{8, 2.1, 0.05}, {12, 2.12, 0.05}, {16, 2.05, 0.05}};
  CHECK_FALSE(lln_check(bumpy, 2.0, 0.1).non_increasing);
  CHECK(lln_check(bumpy, 2.0, 0.1, 1.0).non_increasing);

  const std::vector<LlnPoint> single{{8, 2.0}};
  CHECK_THROWS_AS(lln_check(single, 2.0, 0.1), ConfigError);
  const std::vector<LlnPoint> unordered{{8, 2.0}, {8, 2.0}, {12, 2.0}};
  CHECK_THROWS_AS(lln_check(unordered, 2.0, 0.1), ConfigError);
}

TEST_CASE("constant process: max of 2^n exponentials") {
  // N = 2, zero steps, θ = 1: R*_n = -log(min of 2^n exponentials), so
  // E R*_n = n log 2 + γ exactly, and the deviation of R*_n / n from the
  // target log 2 is γ / n.
  const double gamma = 0.57721566490153286;
  std::vector<LlnPoint> points;
  for (std::uint64_t n : {8, 12, 16, 20}) points.push_back({n, (n * std::log(2.0) + gamma) / n});
  const auto r = lln_check(points, std::log(2.0), 0.1);
  CHECK(r.non_increasing);
  CHECK(r.deviations.back() == doctest::Approx(gamma / 20));
}

TEST_CASE("limit stability") {
  const CenteredSample a{EmpiricalDistribution(exponentials(100, 5)), 0.5, false};
  const CenteredSample b{EmpiricalDistribution(exponentials(100, 6)), 0.5, false};
  CHECK(limit_stability(a, a, Alpha{0.05}).statistic == 0.0);
  CHECK(limit_stability(a, b, Alpha{0.05}).statistic == limit_stability(b, a, Alpha{0.05}).statistic);
  const CenteredSample c{EmpiricalDistribution(exponentials(100, 6)), 0.6, false};
  const CenteredSample d{EmpiricalDistribution(exponentials(100, 6)), 0.5, true};
  CHECK_THROWS_AS(limit_stability(a, c, Threshold{0.1}), RegimeError);
  CHECK_THROWS_AS(limit_stability(a, d, Threshold{0.1}), RegimeError);
}

TEST_CASE("ratio report") {
  RunResult r;
  r.theta = 0.5;
  r.log_w = 3.0;
  r.first_block_log_w = 1.0;
  const std::vector<double> nus{1.0, 1.0};
  const auto rep = ratio_check(std::span(&r, 1), 0.5, nus, Schedule({1, 2}), 0.25);
  CHECK(rep.ratios[0] == doctest::Approx(1.0));
  CHECK(rep.fraction_exceeding == 0.0);

  // One block: the two partition functions coincide.
  RunResult k1;
  k1.theta = 0.5;
  k1.log_w = k1.first_block_log_w = 2.7;
  CHECK(ratio_check(std::span(&k1, 1), 0.5, std::vector<double>{0.9}, Schedule({4}), 0.25).ratios[0] == 1.0);
  CHECK_THROWS_AS(ratio_check(std::span(&r, 1), 0.6, nus, Schedule({1, 2}), 0.25), RegimeError);
  CHECK_THROWS_AS(ratio_check(std::span(&r, 1), 0.5, std::vector<double>{1.0}, Schedule({1, 2}), 0.25),
                  ConfigError);
}

TEST_CASE("mean check and records") {
  const std::vector<double> v{0.9, 1.1, 1.0, 1.0};
  CHECK(mean_check(v, 1.0).pass);
  CHECK_FALSE(mean_check(std::vector<double>{2.0, 2.1, 1.9}, 1.0).pass);
  CHECK_THROWS_AS(mean_check(std::vector<double>{1.0}, 1.0), EmptySampleError);

  const CheckRecord rec{"coupling_ks", 0.01, 0.04, true, true, {}};
  CHECK(to_json_line(rec) ==
        R"({"test":"coupling_ks","statistic":0.01,"threshold":0.04,"pass":true,"mandatory":true})");
  std::ostringstream os;
  const std::vector<CheckRecord> records{rec};
  write_table(os, records);
  CHECK(os.str().find("PASS") != std::string::npos);
}
