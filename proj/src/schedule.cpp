#include "lpmbrw/schedule.hpp"

#include <cmath>
#include <numeric>

#include "lpmbrw/error.hpp"

namespace lpmbrw {

namespace {

void check_weights(std::span<const double> alpha, const char* what) {
  if (alpha.empty()) throw ConfigError(what, "needs at least one weight");
  double total = 0.0;
  for (double a : alpha) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError(what, "weights must be finite and non-negative");
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError(what, "weights must sum to 1");
}

std::vector<std::uint64_t> split(std::span<const double> alpha, std::uint64_t n) {
  std::vector<std::uint64_t> q(alpha.size());
  std::uint64_t used = 0;
  for (std::size_t i = 0; i + 1 < alpha.size(); ++i) {
    q[i] = static_cast<std::uint64_t>(std::floor(alpha[i] * static_cast<double>(n)));
    used += q[i];
  }
  if (used > n) throw ConfigError("alpha", "rounded blocks exceed n");
  q.back() = n - used;
  return q;
}

}  // namespace

Schedule::Schedule(std::vector<std::uint64_t> blocks) : q_(std::move(blocks)) {
  if (q_.empty()) throw ConfigError("schedule", "needs at least one block");
  t_.reserve(q_.size() + 1);
  t_.push_back(0);
  for (auto q : q_) t_.push_back(t_.back() + q);
}

std::size_t Schedule::block_of(std::uint64_t generation) const {
  for (std::size_t i = 0; i < q_.size(); ++i)
    if (generation <= t_[i + 1] && generation > t_[i]) return i;
  throw ConfigError("schedule", "generation outside (0, n]");
}

Schedule Schedule::then(const Schedule& next) const {
  auto blocks = q_;
  blocks.insert(blocks.end(), next.q_.begin(), next.q_.end());
  return Schedule(std::move(blocks));
}

Schedule proportional_schedule(std::span<const double> alpha, std::uint64_t n) {
  check_weights(alpha, "alpha");
  return Schedule(split(alpha, n));
}

Schedule slow_first_schedule(std::span<const double> rest_alpha, std::uint64_t n) {
  check_weights(rest_alpha, "alpha");
  auto q1 = static_cast<std::uint64_t>(std::floor(std::sqrt(static_cast<double>(n))));
  while (q1 * q1 > n) --q1;
  while ((q1 + 1) * (q1 + 1) <= n) ++q1;
  std::vector<std::uint64_t> blocks{q1};
  const auto rest = split(rest_alpha, n - q1);
  blocks.insert(blocks.end(), rest.begin(), rest.end());
  return Schedule(std::move(blocks));
}

}  // namespace lpmbrw
