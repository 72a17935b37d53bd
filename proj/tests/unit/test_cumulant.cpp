#include "doctest.h"

#include <cmath>
#include <vector>

#include "lpmbrw/cumulant.hpp"
#include "lpmbrw/error.hpp"

using namespace lpmbrw;

namespace {
const double root2log2 = std::sqrt(2.0 * std::log(2.0));
}

TEST_CASE("critical tilt of the Gaussian binary walk") {
  CHECK(theta_star(DisplacementModel::gaussian_binary(1.0)).value == doctest::Approx(1.1774100).epsilon(1e-7));
  CHECK(theta_star(DisplacementModel::gaussian_binary(2.0)).value == doctest::Approx(0.5887050).epsilon(1e-7));
  for (double sigma : {0.5, 1.0, 2.0, 4.0}) {
    const auto t = theta_star(DisplacementModel::gaussian_binary(sigma));
    REQUIRE(t.finite);
    CHECK(std::abs(t.value * sigma - root2log2) < 1e-8 * std::max(1.0, sigma));
    CHECK(t.lo <= t.value);
    CHECK(t.value <= t.hi);
    CHECK(t.hi - t.lo <= default_tilt_tolerance);
  }
}

TEST_CASE("tangency holds at the root") {
  for (const auto& m : {DisplacementModel::gaussian_binary(0.8), DisplacementModel::two_point(1.0, 0.0)}) {
    const auto t = theta_star(m);
    if (!t.finite) continue;
    const auto c = nu_derivatives(m, t.value);
    CHECK(std::abs(c.nu / t.value - c.d1) < 10 * default_tilt_tolerance);
  }
}

TEST_CASE("a flat cumulant has no finite critical tilt") {
  // nu = log 2 for every a: g(a) = -log 2 never changes sign.
  const auto t = detail::solve_tangency([](double) { return CumulantValues{std::log(2.0), 0.0, 0.0}; }, 64.0, 1e-10);
  CHECK_FALSE(t.finite);
  CHECK(t.cap == 64.0);
  CHECK(t.below(1e6));
  // The model itself fails the standing assumptions and is refused.
  CHECK_THROWS_AS(theta_star(DisplacementModel::generic({OffspringLaw::fixed(2), ConstantStep{0.0}})),
                  InvalidModelError);
  CHECK_FALSE(theta_star(DisplacementModel::two_point(1.0, -1.0)).finite);
}

TEST_CASE("centering examples") {
  const std::vector models{DisplacementModel::gaussian_binary(2.0), DisplacementModel::gaussian_binary(1.0)};
  const Schedule q({16, 16});
  const auto sub = centering(models, q, 0.5, false);
  CHECK(sub.total == doctest::Approx(64.3614195558).epsilon(1e-11));
  CHECK_FALSE(sub.critical);
  CHECK(sub.n == 32);

  const double t1 = theta_star(models[0]).value;
  const auto crit = centering(models, q, t1, true);
  double part = 0.0;
  for (double t : crit.terms) part += t;
  CHECK(crit.log_correction == doctest::Approx(-2.3548200).epsilon(1e-7));
  CHECK(crit.total == doctest::Approx(part - 2.3548200).epsilon(1e-9));

  const std::vector one{DisplacementModel::two_point(0.3, -0.1)};
  const auto homo = centering(one, Schedule({7}), 0.8, false);
  CHECK(homo.total == doctest::Approx(7 * nu(one[0], 0.8) / 0.8));
}

TEST_CASE("centering is additive over concatenated schedules") {
  const std::vector a{DisplacementModel::gaussian_binary(1.0), DisplacementModel::gaussian_binary(0.5)};
  const std::vector b{DisplacementModel::gaussian_binary(0.7)};
  const std::vector ab{a[0], a[1], b[0]};
  const Schedule sa({4, 5});
  const Schedule sb({6});
  const auto whole = centering(ab, sa.then(sb), 0.4, false);
  const auto left = centering(a, sa, 0.4, false);
  const auto right = centering(b, sb, 0.4, false);
  REQUIRE(whole.terms.size() == 3);
  CHECK(whole.terms[0] == left.terms[0]);
  CHECK(whole.terms[1] == left.terms[1]);
  CHECK(whole.terms[2] == right.terms[0]);
}

TEST_CASE("centering regime errors") {
  const std::vector models{DisplacementModel::gaussian_binary(2.0), DisplacementModel::gaussian_binary(1.0)};
  const Schedule q({8, 8});
  CHECK_THROWS_AS(centering(models, q, 0.7, false), RegimeError);
  CHECK_THROWS_AS(centering(models, q, 0.5, true), RegimeError);
  const std::vector reversed{models[1], models[0]};
  CHECK_THROWS_AS(centering(reversed, q, theta_star(reversed[0]).value, true), RegimeError);
  CHECK_THROWS_AS(centering(models, Schedule({16}), 0.5, false), ConfigError);
  CHECK_THROWS_AS(centering({}, Schedule({16}), 0.5, false), ConfigError);
}

TEST_CASE("sigma1 squared") {
  for (double sigma : {0.5, 1.0, 3.0}) {
    const auto m = DisplacementModel::gaussian_binary(sigma);
    CHECK(sigma1_sq(m, theta_star(m).value).value == doctest::Approx(2 * std::log(2.0)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(sigma1_sq(DisplacementModel::gaussian_binary(1.0), 1.0), RegimeError);

  // Second derivative identity at the critical tilt.
  const auto m = DisplacementModel::gaussian_binary(1.3);
  const double t = theta_star(m).value;
  CHECK(t * t * nu_derivatives(m, t).d2 == doctest::Approx(sigma1_sq(m, t).value).epsilon(1e-9));

  // Monte Carlo path within 3 standard errors of the closed form.
  RandomStream s(5, 0, StreamRole::model);
  const auto mc = sigma1_sq(m, t, 200000, s);
  CHECK(std::abs(mc.value - 2 * std::log(2.0)) < 3 * mc.standard_error);
  CHECK_THROWS_AS(sigma1_sq(m, t, 100, s), DomainError);

  // theta = 0 with a deterministic offspring count gives (log E N)^2.
  CHECK(tilted_square_moment(DisplacementModel::two_point(1.0, -1.0), 0.0).value ==
        doctest::Approx(std::log(2.0) * std::log(2.0)));
}

TEST_CASE("two-point tilted moment is an exact two-term sum") {
  // A two-point law never touches its tangent from the origin, so there is
  // no critical tilt; the moment itself is still an exact enumeration.
  const auto m = DisplacementModel::two_point(1.0, -1.0);
  REQUIRE_FALSE(theta_star(m).finite);
  CHECK_THROWS_AS(sigma1_sq(m, 1.0), RegimeError);
  for (double theta : {0.3, 1.0, 2.0}) {
    const double v = nu(m, theta);
    double expect = 0.0;
    for (double x : {1.0, -1.0}) {
      const double y = theta * x - v;
      expect += y * y * std::exp(y);
    }
    const auto e = tilted_square_moment(m, theta);
    CHECK(e.value == doctest::Approx(expect).epsilon(1e-12));
    CHECK(e.standard_error == 0.0);
  }
}

TEST_CASE("closed-form constants of the Gaussian example") {
  // 30-digit evaluations of the closed forms.
  const auto k = fz_constants(2.0, 1.0);
  CHECK(k.lpm_linear == doctest::Approx(1.91329128658764637).epsilon(1e-12));
  CHECK(k.lpm_log == doctest::Approx(0.84932180028801904).epsilon(1e-12));
  CHECK(k.fz_linear == doctest::Approx(1.76611503377321204).epsilon(1e-12));
  CHECK(k.fz_log == doctest::Approx(3.82194810129608569).epsilon(1e-12));
  CHECK_THROWS_AS(fz_constants(1.0, 1.0), RegimeError);
  CHECK_THROWS_AS(fz_constants(1.0, 2.0), RegimeError);
}
