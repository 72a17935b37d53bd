#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lpmbrw {

/// Block lengths q_1, ..., q_k of a time-inhomogeneous walk; block i drives
/// generations (t_{i-1}, t_i].
class Schedule {
 public:
  explicit Schedule(std::vector<std::uint64_t> blocks);

  std::size_t blocks() const noexcept { return q_.size(); }
  std::uint64_t q(std::size_t i) const { return q_.at(i); }
  std::span<const std::uint64_t> lengths() const noexcept { return q_; }
  /// t_m for m = 0..k.
  std::uint64_t boundary(std::size_t m) const { return t_.at(m); }
  std::uint64_t n() const noexcept { return t_.back(); }
  /// Zero-based block driving generation `generation` (1..n).
  std::size_t block_of(std::uint64_t generation) const;

  /// Concatenation of two schedules.
  Schedule then(const Schedule& next) const;

  friend bool operator==(const Schedule&, const Schedule&) = default;

 private:
  std::vector<std::uint64_t> q_;
  std::vector<std::uint64_t> t_;
};

/// q_i = floor(α_i n), remainder to the last block.
Schedule proportional_schedule(std::span<const double> alpha, std::uint64_t n);

/// q_1 = floor(sqrt n); the rest n - q_1 split over blocks 2..k by
/// `rest_alpha` (length k - 1), remainder to the last block.
Schedule slow_first_schedule(std::span<const double> rest_alpha, std::uint64_t n);

}  // namespace lpmbrw
