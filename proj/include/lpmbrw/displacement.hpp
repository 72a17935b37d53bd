#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "lpmbrw/random.hpp"

namespace lpmbrw {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// Two children, displacements i.i.d. Normal(0, sigma^2).
struct GaussianBinary {
  double sigma;
};

/// Two children, one displaced by `a`, the other by `b`.
struct DeterministicTwoPoint {
  double a;
  double b;
};

/// Law of the offspring count N on a finite support.
struct OffspringLaw {
  std::vector<std::uint32_t> counts;
  std::vector<double> probabilities;

  static OffspringLaw fixed(std::uint32_t n) { return {{n}, {1.0}}; }

  double mean() const;
  double moment(double order) const;
  double probability_of(std::uint32_t n) const;
};

struct ConstantStep {
  double value;
};
struct NormalStep {
  double mean;
  double sd;
};
struct UniformStep {
  double lo;
  double hi;
};
using StepLaw = std::variant<ConstantStep, NormalStep, UniformStep>;

/// N ~ offspring law, then N i.i.d. displacements from `step`.
///
/// The cumulant function is estimated from a fixed table of `mc_draws`
/// realizations drawn once at construction (seeded by `mc_seed`), so that
/// nu is a deterministic smooth function of its argument.
struct GenericIid {
  OffspringLaw offspring;
  StepLaw step;
  double domain_bound = infinity;  // the declared (A1) bound: nu finite on (-bound, inf)
  std::uint64_t mc_draws = 1'000'000;
  std::uint64_t mc_seed = 0x6c706d6272770001ull;
};

/// ν(a), ν'(a), ν''(a).
struct CumulantValues {
  double nu;
  double d1;
  double d2;
};

struct Estimate {
  double value;
  double standard_error;
};

/// Pass/fail for one standing assumption.
struct AssumptionCheck {
  bool ok = true;
  std::string failed_clause;  // empty when ok
};

struct AssumptionReport {
  AssumptionCheck a1;
  double a1_domain_bound = infinity;
  AssumptionCheck a2;
  AssumptionCheck a3;
  double a3_moment_order = 1.0;
  double a3_moment = 0.0;  // E[N^(1+p)]
  std::vector<std::string> messages;

  bool all_ok() const { return a1.ok && a2.ok && a3.ok; }
};

namespace detail {
/// Flattened realizations (ξ_{r,1..N_r}) of a generic model.
struct CumulantTable {
  std::vector<double> steps;
  std::vector<std::uint64_t> offsets;  // realization r owns steps[offsets[r], offsets[r+1])
  double min_step = 0.0;
  double max_step = 0.0;

  std::size_t realizations() const { return offsets.size() - 1; }
};
}  // namespace detail

/// One generation's reproduction-and-displacement law. Immutable and cheap
/// to copy; the Monte Carlo table of a generic model is shared.
class DisplacementModel {
 public:
  using Kind = std::variant<GaussianBinary, DeterministicTwoPoint, GenericIid>;

  /// Throws InvalidModelError on structural problems (sigma <= 0,
  /// probabilities not summing to one, P(N = 0) > 0, ...). Assumption (A2)
  /// violations are not structural; they are reported by validate().
  explicit DisplacementModel(Kind kind);

  static DisplacementModel gaussian_binary(double sigma) { return DisplacementModel{GaussianBinary{sigma}}; }
  static DisplacementModel two_point(double a, double b) { return DisplacementModel{DeterministicTwoPoint{a, b}}; }
  static DisplacementModel generic(GenericIid law) { return DisplacementModel{std::move(law)}; }

  const Kind& kind() const noexcept { return kind_; }
  bool has_closed_form() const noexcept { return !std::holds_alternative<GenericIid>(kind_); }
  /// Declared (A1) bound: ν is finite on (-bound, +inf).
  double domain_bound() const noexcept;
  std::uint32_t max_offspring() const noexcept;
  std::string describe() const;

  const detail::CumulantTable* table() const noexcept { return table_.get(); }

 private:
  Kind kind_;
  std::shared_ptr<const detail::CumulantTable> table_;
};

/// Appends one realization (ξ_1, ..., ξ_N) to `out` after clearing it.
void sample(const DisplacementModel& model, RandomStream& stream, std::vector<double>& out);
std::vector<double> sample(const DisplacementModel& model, RandomStream& stream);

/// ν(a) = log E[Σ_j exp(a ξ_j)].
double nu(const DisplacementModel& model, double a);

/// ν with its derivatives. Closed forms where available, central differences
/// at h = 1e-4 of the Monte Carlo estimate otherwise.
CumulantValues nu_derivatives(const DisplacementModel& model, double a);

/// ν(a) with its standard error. Exact models report zero error.
Estimate nu_estimate(const DisplacementModel& model, double a);

/// Checks (A1)-(A3). Failures are reported, never thrown.
AssumptionReport validate(const DisplacementModel& model, double moment_order = 1.0);

}  // namespace lpmbrw
