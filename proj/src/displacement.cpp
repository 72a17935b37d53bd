#include "lpmbrw/displacement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lpmbrw/error.hpp"

namespace lpmbrw {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kLog2 = 0.69314718055994530942;
constexpr double kDifferenceStep = 1e-4;

std::uint32_t sample_count(const OffspringLaw& law, RandomStream& stream) {
  if (law.counts.size() == 1) return law.counts.front();
  const double u = stream.uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i + 1 < law.counts.size(); ++i) {
    cumulative += law.probabilities[i];
    if (u < cumulative) return law.counts[i];
  }
  return law.counts.back();
}

double sample_step(const StepLaw& law, RandomStream& stream) {
  return std::visit(overloaded{
                        [](const ConstantStep& s) { return s.value; },
                        [&](const NormalStep& s) { return s.mean + s.sd * stream.normal(); },
                        [&](const UniformStep& s) { return s.lo + (s.hi - s.lo) * stream.uniform(); },
                    },
                    law);
}

void check_structure(const GenericIid& g) {
  const auto& law = g.offspring;
  if (law.counts.empty() || law.counts.size() != law.probabilities.size())
    throw InvalidModelError("offspring law needs matching, non-empty counts and probabilities");
  double total = 0.0;
  for (std::size_t i = 0; i < law.counts.size(); ++i) {
    const double p = law.probabilities[i];
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidModelError("offspring probabilities must be finite and >= 0");
    if (law.counts[i] == 0 && p > 0.0) throw InvalidModelError("P(N = 0) > 0: extinction is not supported");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidModelError("offspring probabilities must sum to 1");
  std::visit(overloaded{
                 [](const ConstantStep& s) {
                   if (!std::isfinite(s.value)) throw InvalidModelError("constant step must be finite");
                 },
                 [](const NormalStep& s) {
                   if (!std::isfinite(s.mean) || !(s.sd > 0.0) || !std::isfinite(s.sd))
                     throw InvalidModelError("normal step needs a finite mean and sd > 0");
                 },
                 [](const UniformStep& s) {
                   if (!std::isfinite(s.lo) || !std::isfinite(s.hi) || !(s.lo < s.hi))
                     throw InvalidModelError("uniform step needs finite lo < hi");
                 },
             },
             g.step);
  if (!(g.domain_bound > 0.0)) throw InvalidModelError("declared domain bound must be positive");
  if (g.mc_draws < 2) throw InvalidModelError("Monte Carlo budget must be at least 2 draws");
}

std::shared_ptr<const detail::CumulantTable> build_table(const GenericIid& g) {
  auto table = std::make_shared<detail::CumulantTable>();
  RandomStream stream(g.mc_seed, 0, StreamRole::model);
  table->offsets.reserve(g.mc_draws + 1);
  table->steps.reserve(static_cast<std::size_t>(static_cast<double>(g.mc_draws) * g.offspring.mean()) + 16);
  table->offsets.push_back(0);
  double lo = infinity;
  double hi = -infinity;
  for (std::uint64_t r = 0; r < g.mc_draws; ++r) {
    const std::uint32_t count = sample_count(g.offspring, stream);
    for (std::uint32_t j = 0; j < count; ++j) {
      const double x = sample_step(g.step, stream);
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      table->steps.push_back(x);
    }
    table->offsets.push_back(table->steps.size());
  }
  table->min_step = lo;
  table->max_step = hi;
  return table;
}

void check_domain(const DisplacementModel& model, double a) {
  if (std::isnan(a)) throw DomainError("cumulant argument is NaN");
  const double bound = model.domain_bound();
  if (!(a > -bound)) {
    std::ostringstream os;
    os << "a = " << a << " is outside the finiteness domain (" << -bound << ", inf) of " << model.describe();
    throw DomainError(os.str());
  }
}

Estimate table_estimate(const detail::CumulantTable& table, double a) {
  // Shift by the largest exponent so that every term is <= 1.
  const double shift = std::max(a * table.min_step, a * table.max_step);
  const std::size_t reps = table.realizations();
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    double x = 0.0;
    for (auto i = table.offsets[r]; i < table.offsets[r + 1]; ++i) x += std::exp(a * table.steps[i] - shift);
    const double delta = x - mean;
    mean += delta / static_cast<double>(r + 1);
    m2 += delta * (x - mean);
  }
  const double var = m2 / static_cast<double>(reps - 1);
  return {std::log(mean) + shift, std::sqrt(var / static_cast<double>(reps)) / mean};
}

}  // namespace

double OffspringLaw::mean() const { return moment(1.0); }

double OffspringLaw::moment(double order) const {
  double m = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) m += probabilities[i] * std::pow(double(counts[i]), order);
  return m;
}

double OffspringLaw::probability_of(std::uint32_t n) const {
  double p = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] == n) p += probabilities[i];
  return p;
}

DisplacementModel::DisplacementModel(Kind kind) : kind_(std::move(kind)) {
  std::visit(overloaded{
                 [](const GaussianBinary& g) {
                   if (!(g.sigma > 0.0) || !std::isfinite(g.sigma))
                     throw InvalidModelError("gaussian_binary needs finite sigma > 0");
                 },
                 [](const DeterministicTwoPoint& d) {
                   if (!std::isfinite(d.a) || !std::isfinite(d.b))
                     throw InvalidModelError("two_point displacements must be finite");
                 },
                 [this](const GenericIid& g) {
                   check_structure(g);
                   table_ = build_table(g);
                 },
             },
             kind_);
}

double DisplacementModel::domain_bound() const noexcept {
  if (const auto* g = std::get_if<GenericIid>(&kind_)) return g->domain_bound;
  return infinity;
}

std::uint32_t DisplacementModel::max_offspring() const noexcept {
  if (const auto* g = std::get_if<GenericIid>(&kind_))
    return *std::max_element(g->offspring.counts.begin(), g->offspring.counts.end());
  return 2;
}

std::string DisplacementModel::describe() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const GaussianBinary& g) { os << "gaussian_binary(sigma=" << g.sigma << ")"; },
                 [&](const DeterministicTwoPoint& d) { os << "two_point(a=" << d.a << ", b=" << d.b << ")"; },
                 [&](const GenericIid& g) {
                   os << "generic_iid(E[N]=" << g.offspring.mean() << ", step=";
                   std::visit(overloaded{
                                  [&](const ConstantStep& s) { os << "constant(" << s.value << ")"; },
                                  [&](const NormalStep& s) { os << "normal(" << s.mean << ", " << s.sd << ")"; },
                                  [&](const UniformStep& s) { os << "uniform(" << s.lo << ", " << s.hi << ")"; },
                              },
                              g.step);
                   os << ")";
                 },
             },
             kind_);
  return os.str();
}

void sample(const DisplacementModel& model, RandomStream& stream, std::vector<double>& out) {
  out.clear();
  std::visit(overloaded{
                 [&](const GaussianBinary& g) {
                   out.push_back(g.sigma * stream.normal());
                   out.push_back(g.sigma * stream.normal());
                 },
                 [&](const DeterministicTwoPoint& d) {
                   out.push_back(d.a);
                   out.push_back(d.b);
                 },
                 [&](const GenericIid& g) {
                   const std::uint32_t count = sample_count(g.offspring, stream);
                   for (std::uint32_t j = 0; j < count; ++j) out.push_back(sample_step(g.step, stream));
                 },
             },
             model.kind());
}

std::vector<double> sample(const DisplacementModel& model, RandomStream& stream) {
  std::vector<double> out;
  sample(model, stream, out);
  return out;
}

Estimate nu_estimate(const DisplacementModel& model, double a) {
  check_domain(model, a);
  return std::visit(overloaded{
                        [&](const GaussianBinary& g) { return Estimate{kLog2 + 0.5 * g.sigma * g.sigma * a * a, 0.0}; },
                        [&](const DeterministicTwoPoint& d) {
                          const double x = a * d.a;
                          const double y = a * d.b;
                          const double m = std::max(x, y);
                          return Estimate{m + std::log(std::exp(x - m) + std::exp(y - m)), 0.0};
                        },
                        [&](const GenericIid&) { return table_estimate(*model.table(), a); },
                    },
                    model.kind());
}

double nu(const DisplacementModel& model, double a) { return nu_estimate(model, a).value; }

CumulantValues nu_derivatives(const DisplacementModel& model, double a) {
  check_domain(model, a);
  return std::visit(overloaded{
                        [&](const GaussianBinary& g) {
                          const double s2 = g.sigma * g.sigma;
                          return CumulantValues{kLog2 + 0.5 * s2 * a * a, s2 * a, s2};
                        },
                        [&](const DeterministicTwoPoint& d) {
                          const double x = a * d.a;
                          const double y = a * d.b;
                          const double m = std::max(x, y);
                          const double ex = std::exp(x - m);
                          const double ey = std::exp(y - m);
                          const double p = ex / (ex + ey);
                          const double spread = d.a - d.b;
                          return CumulantValues{m + std::log(ex + ey), p * d.a + (1.0 - p) * d.b,
                                                p * (1.0 - p) * spread * spread};
                        },
                        [&](const GenericIid&) {
                          const double h = kDifferenceStep;
                          check_domain(model, a - h);
                          const double lo = nu(model, a - h);
                          const double mid = nu(model, a);
                          const double hi = nu(model, a + h);
                          return CumulantValues{mid, (hi - lo) / (2.0 * h), (hi - 2.0 * mid + lo) / (h * h)};
                        },
                    },
                    model.kind());
}

AssumptionReport validate(const DisplacementModel& model, double moment_order) {
  AssumptionReport report;
  report.a3_moment_order = moment_order;
  report.a1_domain_bound = model.domain_bound();

  auto fail = [&report](AssumptionCheck& check, const std::string& clause, const std::string& message) {
    if (check.ok) {
      check.ok = false;
      check.failed_clause = clause;
    }
    report.messages.push_back(message);
  };

  std::visit(overloaded{
                 [&](const GaussianBinary&) { report.a3_moment = std::pow(2.0, 1.0 + moment_order); },
                 [&](const DeterministicTwoPoint& d) {
                   report.a3_moment = std::pow(2.0, 1.0 + moment_order);
                   if (d.a == d.b)
                     fail(report.a2, "P(Z_i({a})=N_i)<1", "both children land on the same point: Z is a single atom");
                 },
                 [&](const GenericIid& g) {
                   const auto& law = g.offspring;
                   if (law.probability_of(0) > 0.0) fail(report.a2, "P(N_i>=1)=1", "offspring count can be zero");
                   if (law.probability_of(1) >= 1.0) fail(report.a2, "P(N_i=1)<1", "exactly one child almost surely");
                   if (std::holds_alternative<ConstantStep>(g.step) || law.probability_of(1) >= 1.0)
                     fail(report.a2, "P(Z_i({a})=N_i)<1", "all children share one position almost surely");
                   report.a3_moment = law.moment(1.0 + moment_order);
                   for (double a : {-0.5 * std::min(1.0, g.domain_bound), 0.0, 1.0, 4.0}) {
                     if (!std::isfinite(nu(model, a))) {
                       fail(report.a1, "nu finite on (-theta, inf)", "Monte Carlo cumulant is not finite");
                       break;
                     }
                   }
                 },
             },
             model.kind());

  if (!(report.a1_domain_bound > 0.0)) fail(report.a1, "nu finite on (-theta, inf)", "declared domain bound <= 0");
  if (!(moment_order > 0.0) || !std::isfinite(report.a3_moment))
    fail(report.a3, "E[N^(1+p)]<inf", "offspring moment of order 1+p is not finite");
  return report;
}

}  // namespace lpmbrw
