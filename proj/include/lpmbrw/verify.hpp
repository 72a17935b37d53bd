#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lpmbrw/schedule.hpp"
#include "lpmbrw/simulator.hpp"

namespace lpmbrw {

/// Sorted sample with CDF / quantile queries.
class EmpiricalDistribution {
 public:
  /// Throws EmptySampleError on an empty sample, DomainError on NaN.
  explicit EmpiricalDistribution(std::vector<double> values);

  std::size_t size() const noexcept { return sorted_.size(); }
  std::span<const double> values() const noexcept { return sorted_; }
  /// Fraction of the sample <= x.
  double cdf(double x) const;
  /// Smallest sample value v with cdf(v) >= p, p in (0, 1].
  double quantile(double p) const;
  double mean() const;
  double standard_error() const;

 private:
  std::vector<double> sorted_;
};

/// Significance level; the threshold becomes c(α) √((m+n)/(mn)) with
/// c(α) = √(-ln(α/2)/2) (1.628 at 0.01, 1.358 at 0.05).
struct Alpha {
  double value;
};
/// A fixed threshold on the KS statistic.
struct Threshold {
  double value;
};

struct KsResult {
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;  // statistic < threshold
  std::size_t m = 0;
  std::size_t n = 0;
};

double ks_coefficient(double alpha);

double ks_two_sample_statistic(const EmpiricalDistribution& a, const EmpiricalDistribution& b);
KsResult ks_two_sample(const EmpiricalDistribution& a, const EmpiricalDistribution& b, Alpha alpha);
KsResult ks_two_sample(const EmpiricalDistribution& a, const EmpiricalDistribution& b, Threshold threshold);

using Cdf = std::function<double(double)>;
double ks_one_sample_statistic(const EmpiricalDistribution& a, const Cdf& cdf);
KsResult ks_one_sample(const EmpiricalDistribution& a, const Cdf& cdf, Alpha alpha);
KsResult ks_one_sample(const EmpiricalDistribution& a, const Cdf& cdf, Threshold threshold);

/// 1 - e^{-x} for x >= 0.
double exponential_cdf(double x);

/// Top-two gap of the perturbed scores against Exponential(1).
/// Throws ConfigError when a replicate carries fewer than two scores.
std::vector<double> top_gaps(std::span<const RunResult> results);
KsResult gap_test(std::span<const RunResult> results, Alpha alpha);
KsResult gap_test(std::span<const RunResult> results, Threshold threshold);

struct LlnPoint {
  std::uint64_t n;
  double mean;  // mean of r_star / n
  double standard_error = 0.0;
};

struct LlnReport {
  double target = 0.0;
  std::vector<std::uint64_t> n;
  std::vector<double> deviations;  // |mean - target|
  bool non_increasing = false;     // within `allowance` standard errors
  bool final_within_eps = false;
  double eps = 0.0;
};

/// Throws ConfigError unless at least three strictly increasing n are given.
LlnReport lln_check(std::span<const LlnPoint> points, double target, double eps, double allowance = 0.0);

/// A centered sample tagged with the regime it was centered for.
struct CenteredSample {
  EmpiricalDistribution values;
  double theta;
  bool critical;
};

/// Two-sample KS between centered samples; RegimeError if θ or regime differ.
KsResult limit_stability(const CenteredSample& a, const CenteredSample& b, Alpha alpha);
KsResult limit_stability(const CenteredSample& a, const CenteredSample& b, Threshold threshold);

struct RatioReport {
  std::uint64_t n = 0;
  double eps = 0.0;
  double fraction_exceeding = 0.0;
  double max_abs_deviation = 0.0;
  std::vector<double> ratios;
};

/// Normalized W_n over normalized W_{q_1} per replicate. `nus` holds ν_i(θ).
RatioReport ratio_check(std::span<const RunResult> results, double theta, std::span<const double> nus,
                        const Schedule& schedule, double eps);

struct MeanCheck {
  double mean = 0.0;
  double standard_error = 0.0;
  double target = 1.0;
  bool pass = false;  // |mean - target| < sigmas * standard_error
};

/// W_n e^{-Σ q_i ν_i(θ)} per replicate.
std::vector<double> normalized_w(std::span<const RunResult> results, std::span<const double> nus,
                                 const Schedule& schedule);
MeanCheck mean_check(std::span<const double> values, double target, double sigmas = 3.0);

/// One line of a verification report.
struct CheckRecord {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  bool mandatory = true;
  std::string detail;
};

std::string to_json_line(const CheckRecord& record);
void write_table(std::ostream& os, std::span<const CheckRecord> records);

}  // namespace lpmbrw
