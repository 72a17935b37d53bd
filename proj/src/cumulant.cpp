#include "lpmbrw/cumulant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lpmbrw/error.hpp"

namespace lpmbrw {

namespace detail {

CriticalTilt solve_tangency(const std::function<CumulantValues(double)>& cumulant, double cap, double tol) {
  if (!(cap > 0.0) || !(tol > 0.0)) throw DomainError("tilt search needs cap > 0 and tol > 0");
  auto g = [&](double a) {
    const auto c = cumulant(a);
    return a * c.d1 - c.nu;
  };

  CriticalTilt out;
  out.cap = cap;
  double lo = 0.0;
  double hi = std::min(tol, cap);
  double g_hi = g(hi);
  // g <= 0 continues the search: laws with a single top atom approach the
  // tangency only at infinity, where g rounds to zero.
  while (g_hi <= 0.0) {
    if (hi >= cap) {
      out.lo = lo;
      out.hi = hi;
      out.residual = g_hi;  // certificate: g(cap) <= 0
      return out;
    }
    lo = hi;
    hi = std::min(2.0 * hi, cap);
    g_hi = g(hi);
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  out.finite = true;
  out.lo = lo;
  out.hi = hi;
  out.value = 0.5 * (lo + hi);
  out.residual = std::abs(g(out.value));
  return out;
}

}  // namespace detail

CriticalTilt theta_star(const DisplacementModel& model, double cap, double tol) {
  const auto report = validate(model);
  if (!report.a2.ok)
    throw InvalidModelError(model.describe() + " violates (A2) clause " + report.a2.failed_clause +
                            "; the tangency equation has no unique root");
  return detail::solve_tangency([&model](double a) { return nu_derivatives(model, a); }, cap, tol);
}

CenteringSpec centering(std::span<const DisplacementModel> models, const Schedule& schedule, double theta,
                        bool critical) {
  std::vector<CriticalTilt> tilts;
  tilts.reserve(models.size());
  for (const auto& m : models) tilts.push_back(theta_star(m));
  return centering(models, tilts, schedule, theta, critical);
}

CenteringSpec centering(std::span<const DisplacementModel> models, std::span<const CriticalTilt> tilts,
                        const Schedule& schedule, double theta, bool critical) {
  if (models.empty()) throw ConfigError("models", "model list is empty");
  if (models.size() != schedule.blocks() || tilts.size() != models.size())
    throw ConfigError("schedule", "block count must equal the number of models");
  if (!(theta > 0.0) || !std::isfinite(theta)) throw RegimeError("theta must be positive and finite");

  if (critical) {
    if (!tilts[0].finite) throw RegimeError("critical centering needs a finite critical tilt for block 1");
    if (std::abs(theta - tilts[0].value) >= critical_band) {
      std::ostringstream os;
      os.precision(12);
      os << "theta = " << theta << " is not the block-1 critical tilt " << tilts[0].value;
      throw RegimeError(os.str());
    }
    for (std::size_t i = 1; i < tilts.size(); ++i)
      if (!tilts[i].below(tilts[0].value))
        throw RegimeError("critical centering needs theta_(1) < theta_(i) for every later block");
    if (schedule.q(0) == 0) throw RegimeError("critical centering needs q_1 >= 1");
  } else {
    for (std::size_t i = 0; i < tilts.size(); ++i)
      if (!tilts[i].below(theta)) {
        std::ostringstream os;
        os.precision(12);
        os << "theta = " << theta << " is not below the critical tilt " << tilts[i].value << " of block "
           << (i + 1);
        throw RegimeError(os.str());
      }
  }

  CenteringSpec spec;
  spec.theta = theta;
  spec.critical = critical;
  spec.n = schedule.n();
  double total = 0.0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const double term = static_cast<double>(schedule.q(i)) * nu(models[i], theta) / theta;
    spec.terms.push_back(term);
    total += term;
  }
  if (critical) spec.log_correction = -std::log(static_cast<double>(schedule.q(0))) / (2.0 * theta);
  spec.total = total + spec.log_correction;
  return spec;
}

Estimate tilted_square_moment(const DisplacementModel& model, double theta) {
  const double v = nu(model, theta);
  if (const auto* g = std::get_if<GaussianBinary>(&model.kind())) {
    // Each child's tilted law is Normal(σ²θ, σ²) with total weight 1.
    const double s2 = g->sigma * g->sigma;
    const double shift = s2 * theta * theta - v;
    return {shift * shift + theta * theta * s2, 0.0};
  }
  if (const auto* d = std::get_if<DeterministicTwoPoint>(&model.kind())) {
    double sum = 0.0;
    for (double x : {d->a, d->b}) {
      const double y = theta * x - v;
      sum += y * y * std::exp(y);
    }
    return {sum, 0.0};
  }
  const auto& table = *model.table();
  const std::size_t reps = table.realizations();
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    double x = 0.0;
    for (auto i = table.offsets[r]; i < table.offsets[r + 1]; ++i) {
      const double y = theta * table.steps[i] - v;
      x += y * y * std::exp(y);
    }
    const double delta = x - mean;
    mean += delta / static_cast<double>(r + 1);
    m2 += delta * (x - mean);
  }
  return {mean, std::sqrt(m2 / static_cast<double>(reps - 1) / static_cast<double>(reps))};
}

Estimate tilted_square_moment_monte_carlo(const DisplacementModel& model, double theta, std::uint64_t draws,
                                          RandomStream& stream) {
  if (draws < 2) throw DomainError("Monte Carlo estimate needs at least 2 draws");
  const double v = nu(model, theta);
  std::vector<double> xi;
  double mean = 0.0;
  double m2 = 0.0;
  for (std::uint64_t r = 0; r < draws; ++r) {
    sample(model, stream, xi);
    double x = 0.0;
    for (double s : xi) {
      const double y = theta * s - v;
      x += y * y * std::exp(y);
    }
    const double delta = x - mean;
    mean += delta / static_cast<double>(r + 1);
    m2 += delta * (x - mean);
  }
  return {mean, std::sqrt(m2 / static_cast<double>(draws - 1) / static_cast<double>(draws))};
}

namespace {
void check_critical(const DisplacementModel& model, double theta1) {
  const auto tilt = theta_star(model);
  if (!tilt.finite || std::abs(theta1 - tilt.value) >= critical_band)
    throw RegimeError("sigma1_sq needs theta1 equal to the critical tilt of the model");
}
}  // namespace

Estimate sigma1_sq(const DisplacementModel& model, double theta1) {
  check_critical(model, theta1);
  return tilted_square_moment(model, theta1);
}

Estimate sigma1_sq(const DisplacementModel& model, double theta1, std::uint64_t mc_budget, RandomStream& stream) {
  if (mc_budget < 10'000) throw DomainError("sigma1_sq Monte Carlo budget must be at least 1e4");
  check_critical(model, theta1);
  return tilted_square_moment_monte_carlo(model, theta1, mc_budget, stream);
}

FzConstants fz_constants(double sigma1, double sigma2) {
  if (!(sigma2 > 0.0) || !(sigma1 > sigma2))
    throw RegimeError("the Gaussian example is handled only for sigma1 > sigma2 > 0");
  const double log2 = std::log(2.0);
  const double root = std::sqrt(2.0 * log2);
  return {
      sigma1 * std::sqrt(log2 / 2.0) + root / (4.0 * sigma1) * (sigma1 * sigma1 + sigma2 * sigma2),
      sigma1 / (2.0 * root),
      (sigma1 + sigma2) * std::sqrt(log2 / 2.0),
      3.0 * (sigma1 + sigma2) / (2.0 * root),
  };
}

}  // namespace lpmbrw
