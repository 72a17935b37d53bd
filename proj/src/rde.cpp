#include "lpmbrw/rde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lpmbrw/cumulant.hpp"
#include "lpmbrw/error.hpp"

namespace lpmbrw {

Population Population::constant(std::size_t size, double value) {
  if (size == 0) throw EmptySampleError("population needs at least one entry");
  if (!(value > 0.0) || !std::isfinite(value)) throw DomainError("population entries must be positive");
  Population p;
  p.pool_.assign(size, value);
  return p;
}

Population Population::from_values(std::vector<double> values) {
  if (values.empty()) throw EmptySampleError("population needs at least one entry");
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("population entries must be positive and finite");
  Population p;
  p.pool_ = std::move(values);
  return p;
}

double Population::mean() const {
  double s = 0.0;
  for (double v : pool_) s += v;
  return s / static_cast<double>(pool_.size());
}

double Population::mean_log() const {
  double s = 0.0;
  for (double v : pool_) s += std::log(v);
  return s / static_cast<double>(pool_.size());
}

double Population::mean_standard_error() const { return std::sqrt(accumulated_variance_); }

SmoothingTransform::SmoothingTransform(DisplacementModel model, double theta)
    : model_(std::move(model)), theta_(theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw RegimeError("smoothing transform needs theta > 0");
  const auto tilt = theta_star(model_);
  if (!tilt.below(theta)) {
    std::ostringstream os;
    os.precision(12);
    os << "smoothing transform needs theta < theta_(1) = " << tilt.value << ", got " << theta;
    throw RegimeError(os.str());
  }
  nu_theta_ = nu(model_, theta);
}

Population SmoothingTransform::step(const Population& pop, RandomStream& stream) const {
  const std::size_t m = pop.pool_.size();
  Population next;
  next.pool_.resize(m);
  next.generation_ = pop.generation_ + 1;
  std::vector<double> xi;
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sample(model_, stream, xi);
    double entry = 0.0;
    for (double x : xi) entry += std::exp(theta_ * x - nu_theta_) * pop.pool_[stream.below(m)];
    next.pool_[i] = entry;
    const double delta = entry - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (entry - mean);
  }
  const double var = m > 1 ? m2 / static_cast<double>(m - 1) : 0.0;
  next.accumulated_variance_ = pop.accumulated_variance_ + var / static_cast<double>(m);
  return next;
}

Population smoothing_step(const Population& pop, const DisplacementModel& model, double theta,
                          RandomStream& stream) {
  return SmoothingTransform(model, theta).step(pop, stream);
}

Population iterate(Population pop, const SmoothingTransform& transform, std::uint64_t steps,
                   std::uint64_t master_seed, std::span<const std::uint64_t> snapshot_at,
                   std::vector<Population>* snapshots) {
  auto wanted = [&](std::uint64_t g) {
    return snapshots && std::find(snapshot_at.begin(), snapshot_at.end(), g) != snapshot_at.end();
  };
  if (wanted(pop.generation())) snapshots->push_back(pop);
  for (std::uint64_t t = 0; t < steps; ++t) {
    RandomStream stream(master_seed, pop.generation(), StreamRole::population);
    pop = transform.step(pop, stream);
    if (wanted(pop.generation())) snapshots->push_back(pop);
  }
  return pop;
}

std::vector<double> h_hat_subcritical(std::span<const double> d_samples, double theta) {
  if (!(theta > 0.0)) throw RegimeError("theta must be positive");
  std::vector<double> out;
  out.reserve(d_samples.size());
  for (double d : d_samples) out.push_back(std::log(d) / theta);
  return out;
}

std::vector<double> h_hat_subcritical(const Population& pop, double theta) {
  return h_hat_subcritical(pop.pool(), theta);
}

CriticalHatSample h_hat_critical(std::span<const double> d_samples, double theta1, double sigma1_sq) {
  if (!(theta1 > 0.0)) throw RegimeError("theta1 must be positive");
  if (!(sigma1_sq > 0.0)) throw DomainError("sigma1_sq must be positive");
  const double shift = 0.5 * std::log(2.0 / (std::numbers::pi * sigma1_sq));
  CriticalHatSample out;
  out.values.reserve(d_samples.size());
  for (double d : d_samples) {
    if (d > 0.0 && std::isfinite(d))
      out.values.push_back((std::log(d) + shift) / theta1);
    else
      ++out.rejected;
  }
  if (out.values.empty()) throw EmptySampleError("every derivative-statistic draw was rejected (<= 0)");
  out.rejected_fraction = static_cast<double>(out.rejected) / static_cast<double>(d_samples.size());
  return out;
}

}  // namespace lpmbrw
