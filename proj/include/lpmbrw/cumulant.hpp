#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "lpmbrw/displacement.hpp"
#include "lpmbrw/schedule.hpp"

namespace lpmbrw {

inline constexpr double default_tilt_cap = 64.0;
inline constexpr double default_tilt_tolerance = 1e-10;
/// |θ - θ_(1)| below this counts as "θ equals the critical tilt".
inline constexpr double critical_band = 1e-8;

/// θ_(i): the unique a > 0 with a ν'(a) = ν(a), or "infinite" when the
/// tangent from the origin never touches ν on (0, cap].
struct CriticalTilt {
  bool finite = false;
  double value = infinity;  // meaningful only when finite
  double lo = 0.0;          // final bracket
  double hi = 0.0;
  double residual = 0.0;  // |g(value)| when finite, g(cap) otherwise
  double cap = default_tilt_cap;

  bool below(double theta) const { return !finite || theta < value; }
};

CriticalTilt theta_star(const DisplacementModel& model, double cap = default_tilt_cap,
                        double tol = default_tilt_tolerance);

namespace detail {
/// Root of g(a) = a ν'(a) - ν(a) by doubling bracket expansion and bisection.
/// Assumes g strictly increasing with g(0) < 0; no model validation.
CriticalTilt solve_tangency(const std::function<CumulantValues(double)>& cumulant, double cap, double tol);
}  // namespace detail

/// Deterministic part of the limit theorem centering at generation n.
struct CenteringSpec {
  double theta = 0.0;
  std::vector<double> terms;  // q_i ν_i(θ) / θ
  bool critical = false;
  double log_correction = 0.0;  // -(1/(2θ)) log q_1 when critical
  double total = 0.0;
  std::uint64_t n = 0;
};

/// Throws RegimeError when (theta, critical) violates the hypotheses:
/// subcritical needs θ < min_i θ_(i); critical needs |θ - θ_(1)| < 1e-8 and
/// θ_(1) < min_{i≠1} θ_(i).
CenteringSpec centering(std::span<const DisplacementModel> models, const Schedule& schedule, double theta,
                        bool critical);
CenteringSpec centering(std::span<const DisplacementModel> models, std::span<const CriticalTilt> tilts,
                        const Schedule& schedule, double theta, bool critical);

/// E[Σ_{|v|=1} (θ S_v - ν(θ))² e^{θ S_v - ν(θ)}], exact for the closed-form
/// models (two-term enumeration for the two-point law); Monte Carlo on the
/// cumulant table for generic models.
Estimate tilted_square_moment(const DisplacementModel& model, double theta);

/// The same moment estimated from `draws` fresh one-generation realizations.
Estimate tilted_square_moment_monte_carlo(const DisplacementModel& model, double theta, std::uint64_t draws,
                                          RandomStream& stream);

/// σ₁² at θ_(1). Checks that theta1 is the model's critical tilt.
Estimate sigma1_sq(const DisplacementModel& model, double theta1);
Estimate sigma1_sq(const DisplacementModel& model, double theta1, std::uint64_t mc_budget, RandomStream& stream);

/// Centering coefficients of the binary Gaussian example with σ₁ > σ₂, and
/// the Fang-Zeitouni coefficients for the unmodified maximum.
struct FzConstants {
  double lpm_linear;
  double lpm_log;
  double fz_linear;
  double fz_log;
};

FzConstants fz_constants(double sigma1, double sigma2);

}  // namespace lpmbrw
