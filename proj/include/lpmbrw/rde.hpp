#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lpmbrw/displacement.hpp"
#include "lpmbrw/random.hpp"

namespace lpmbrw {

/// Pool approximating the law of the mean-one fixed point D of the
/// smoothing transform Δ ↦ Σ_j e^{θ ξ_j - ν(θ)} Δ_j.
class Population {
 public:
  /// `size` copies of `value` (the pool ≡ 1 start reproduces the law of the
  /// normalized partition function generation by generation).
  static Population constant(std::size_t size, double value = 1.0);
  static Population from_values(std::vector<double> values);

  std::span<const double> pool() const noexcept { return pool_; }
  std::size_t size() const noexcept { return pool_.size(); }
  std::uint64_t generation() const noexcept { return generation_; }
  double mean() const;
  /// Mean of log(entry).
  double mean_log() const;
  /// Standard error of the pool mean around its starting mean, accumulated
  /// over every step as Σ_t s_t² / M with s_t² the sample variance of the
  /// entries built at step t.
  double mean_standard_error() const;

 private:
  friend class SmoothingTransform;
  std::vector<double> pool_;
  std::uint64_t generation_ = 0;
  double accumulated_variance_ = 0.0;
};

/// One smoothing-transform law at a fixed subcritical tilt.
class SmoothingTransform {
 public:
  /// Throws RegimeError unless 0 < theta < θ_(1) of `model`.
  SmoothingTransform(DisplacementModel model, double theta);

  double theta() const noexcept { return theta_; }
  double nu_theta() const noexcept { return nu_theta_; }

  /// New pool: entry i is Σ_{j ≤ N} e^{θ ξ_j - ν(θ)} Δ_j for a fresh
  /// realization (N, ξ) and Δ_j drawn with replacement from `pop`.
  Population step(const Population& pop, RandomStream& stream) const;

 private:
  DisplacementModel model_;
  double theta_;
  double nu_theta_;
};

Population smoothing_step(const Population& pop, const DisplacementModel& model, double theta,
                          RandomStream& stream);

/// Runs `steps` iterations; step t draws from stream(master_seed, t, population).
/// `snapshots` (if given) receives copies of the pool at the listed generations.
Population iterate(Population pop, const SmoothingTransform& transform, std::uint64_t steps,
                   std::uint64_t master_seed, std::span<const std::uint64_t> snapshot_at = {},
                   std::vector<Population>* snapshots = nullptr);

/// (1/θ) log D elementwise.
std::vector<double> h_hat_subcritical(const Population& pop, double theta);
std::vector<double> h_hat_subcritical(std::span<const double> d_samples, double theta);

struct CriticalHatSample {
  std::vector<double> values;
  std::size_t rejected = 0;  // draws <= 0 (or non-finite) dropped
  double rejected_fraction = 0.0;
};

/// (1/θ₁)(log d + ½ log(2 / (π σ₁²))) for every positive d. Throws
/// EmptySampleError when no draw is positive.
CriticalHatSample h_hat_critical(std::span<const double> d_samples, double theta1, double sigma1_sq);

}  // namespace lpmbrw
