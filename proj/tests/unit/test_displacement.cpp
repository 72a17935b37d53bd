#include "doctest.h"

#include <cmath>

#include "lpmbrw/displacement.hpp"
#include "lpmbrw/error.hpp"

using namespace lpmbrw;

namespace {
GenericIid constant_law(std::uint32_t n, double step) { return {OffspringLaw::fixed(n), ConstantStep{step}}; }
}  // namespace

TEST_CASE("sampling fixed laws") {
  RandomStream s(1, 0, StreamRole::tree);
  const auto det = DisplacementModel::two_point(1.0, -1.0);
  for (int i = 0; i < 5; ++i) CHECK(sample(det, s) == std::vector<double>{1.0, -1.0});
  const auto zeros = DisplacementModel::generic(constant_law(3, 0.0));
  CHECK(sample(zeros, s) == std::vector<double>{0.0, 0.0, 0.0});

  const auto g = DisplacementModel::gaussian_binary(2.0);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto xi = sample(g, s);
    REQUIRE(xi.size() == 2);
    for (double x : xi) {
      sum += x;
      sq += x * x;
    }
  }
  CHECK(std::abs(sum / (2 * n)) < 0.03);
  CHECK(sq / (2 * n) == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("cumulant closed forms") {
  CHECK(nu(DisplacementModel::gaussian_binary(1.0), 0.0) == doctest::Approx(0.69314718056).epsilon(1e-10));
  CHECK(nu(DisplacementModel::gaussian_binary(2.0), 0.5) == doctest::Approx(1.19314718056).epsilon(1e-10));
  CHECK(nu(DisplacementModel::two_point(1.0, -1.0), 1.0) == doctest::Approx(1.12692801104).epsilon(1e-10));

  const auto g = nu_derivatives(DisplacementModel::gaussian_binary(1.0), 0.5);
  CHECK(g.d1 == doctest::Approx(0.5));
  CHECK(g.d2 == doctest::Approx(1.0));
  const auto d = nu_derivatives(DisplacementModel::two_point(1.0, -1.0), 1.0);
  CHECK(d.d1 == doctest::Approx(0.76159415596).epsilon(1e-10));
  CHECK(nu_derivatives(DisplacementModel::two_point(1.0, -1.0), 0.0).d1 == doctest::Approx(0.0));
  CHECK(nu_estimate(DisplacementModel::gaussian_binary(1.0), 0.3).standard_error == 0.0);
}

TEST_CASE("derivatives agree with finite differences and nu is convex") {
  const double h = 1e-5;
  for (const auto& m : {DisplacementModel::gaussian_binary(0.7), DisplacementModel::two_point(0.5, -2.0)}) {
    for (double a : {-1.0, 0.1, 0.9, 2.5}) {
      const auto c = nu_derivatives(m, a);
      CHECK(c.nu == doctest::Approx(nu(m, a)));
      CHECK(c.d1 == doctest::Approx((nu(m, a + h) - nu(m, a - h)) / (2 * h)).epsilon(1e-6));
      CHECK(c.d2 > 0.0);
      CHECK(c.d2 == doctest::Approx((nu_derivatives(m, a + h).d1 - nu_derivatives(m, a - h).d1) / (2 * h))
                        .epsilon(1e-5));
    }
  }
}

TEST_CASE("generic law reproduces the Gaussian cumulant within its standard error") {
  GenericIid law{OffspringLaw::fixed(2), NormalStep{0.0, 1.0}};
  law.mc_draws = 200000;
  const auto m = DisplacementModel::generic(law);
  const auto exact = DisplacementModel::gaussian_binary(1.0);
  for (double a : {0.25, 0.5, 1.0}) {
    const auto e = nu_estimate(m, a);
    CHECK(e.standard_error > 0.0);
    CHECK(std::abs(e.value - nu(exact, a)) < 4 * e.standard_error);
    const auto c = nu_derivatives(m, a);
    CHECK(c.d1 == doctest::Approx(a).epsilon(0.05));
    CHECK(c.d2 == doctest::Approx(1.0).epsilon(0.1));
  }
  CHECK(nu(m, 0.5) == nu(m, 0.5));
}

TEST_CASE("structural errors are thrown at construction") {
  CHECK_THROWS_AS(DisplacementModel::gaussian_binary(0.0), InvalidModelError);
  CHECK_THROWS_AS(DisplacementModel::gaussian_binary(-1.0), InvalidModelError);
  CHECK_THROWS_AS(DisplacementModel::generic({{{0, 2}, {0.5, 0.5}}, ConstantStep{0.0}}), InvalidModelError);
  CHECK_THROWS_AS(DisplacementModel::generic({{{1, 2}, {0.5, 0.6}}, ConstantStep{0.0}}), InvalidModelError);
  CHECK_THROWS_AS(DisplacementModel::generic({OffspringLaw::fixed(2), NormalStep{0.0, 0.0}}), InvalidModelError);
}

TEST_CASE("cumulant domain") {
  GenericIid law{OffspringLaw::fixed(2), UniformStep{0.0, 1.0}};
  law.domain_bound = 2.0;
  law.mc_draws = 1000;
  const auto m = DisplacementModel::generic(law);
  CHECK_THROWS_AS(nu(m, -2.0), DomainError);
  CHECK_NOTHROW(nu(m, -1.9));
  CHECK_THROWS_AS(nu(DisplacementModel::gaussian_binary(1.0), std::nan("")), DomainError);
}

TEST_CASE("assumption checks") {
  CHECK(validate(DisplacementModel::gaussian_binary(1.0)).all_ok());

  const auto single = validate(DisplacementModel::generic({OffspringLaw::fixed(1), NormalStep{0.0, 1.0}}));
  CHECK_FALSE(single.a2.ok);
  CHECK(single.a2.failed_clause == "P(N_i=1)<1");

  const auto flat = validate(DisplacementModel::two_point(0.0, 0.0));
  CHECK_FALSE(flat.a2.ok);
  CHECK(flat.a2.failed_clause == "P(Z_i({a})=N_i)<1");
  CHECK_FALSE(flat.messages.empty());

  const auto stacked = validate(DisplacementModel::generic({{{1, 3}, {0.5, 0.5}}, ConstantStep{1.0}}));
  CHECK(stacked.a2.failed_clause == "P(Z_i({a})=N_i)<1");

  GenericIid law{{{1, 3}, {0.5, 0.5}}, NormalStep{0.0, 1.0}};
  law.mc_draws = 1000;
  const auto mixed = validate(DisplacementModel::generic(law));
  CHECK(mixed.a2.ok);
  CHECK(mixed.a3.ok);
  CHECK(mixed.a3_moment == doctest::Approx(0.5 * 1 + 0.5 * 9));
}
