#include "lpmbrw/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "lpmbrw/error.hpp"

namespace lpmbrw {

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> values) : sorted_(std::move(values)) {
  if (sorted_.empty()) throw EmptySampleError("empirical distribution needs at least one value");
  for (double v : sorted_)
    if (std::isnan(v)) throw DomainError("empirical distribution received NaN");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalDistribution::cdf(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalDistribution::quantile(double p) const {
  if (!(p > 0.0) || p > 1.0) throw DomainError("quantile level must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted_.size())));
  return sorted_[std::max<std::size_t>(k, 1) - 1];
}

double EmpiricalDistribution::mean() const {
  double s = 0.0;
  for (double v : sorted_) s += v;
  return s / static_cast<double>(sorted_.size());
}

double EmpiricalDistribution::standard_error() const {
  if (sorted_.size() < 2) return 0.0;
  const double m = mean();
  double ss = 0.0;
  for (double v : sorted_) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(sorted_.size() - 1) / static_cast<double>(sorted_.size()));
}

double ks_coefficient(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw DomainError("significance level must lie in (0, 1)");
  return std::sqrt(-std::log(alpha / 2.0) / 2.0);
}

double ks_two_sample_statistic(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
  const auto x = a.values();
  const auto y = b.values();
  const double m = static_cast<double>(x.size());
  const double n = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / m - static_cast<double>(j) / n));
  }
  return d;
}

namespace {
KsResult finish(double statistic, double threshold, std::size_t m, std::size_t n) {
  return {statistic, threshold, statistic < threshold, m, n};
}
}  // namespace

KsResult ks_two_sample(const EmpiricalDistribution& a, const EmpiricalDistribution& b, Alpha alpha) {
  const double m = static_cast<double>(a.size());
  const double n = static_cast<double>(b.size());
  return finish(ks_two_sample_statistic(a, b), ks_coefficient(alpha.value) * std::sqrt((m + n) / (m * n)),
                a.size(), b.size());
}

KsResult ks_two_sample(const EmpiricalDistribution& a, const EmpiricalDistribution& b, Threshold threshold) {
  return finish(ks_two_sample_statistic(a, b), threshold.value, a.size(), b.size());
}

double ks_one_sample_statistic(const EmpiricalDistribution& a, const Cdf& cdf) {
  const auto x = a.values();
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < x.size()) {
    const double v = x[i];
    const double below = static_cast<double>(i) / n;
    while (i < x.size() && x[i] == v) ++i;
    const double f = cdf(v);
    d = std::max({d, static_cast<double>(i) / n - f, f - below});
  }
  return d;
}

KsResult ks_one_sample(const EmpiricalDistribution& a, const Cdf& cdf, Alpha alpha) {
  return finish(ks_one_sample_statistic(a, cdf),
                ks_coefficient(alpha.value) / std::sqrt(static_cast<double>(a.size())), a.size(), 0);
}

KsResult ks_one_sample(const EmpiricalDistribution& a, const Cdf& cdf, Threshold threshold) {
  return finish(ks_one_sample_statistic(a, cdf), threshold.value, a.size(), 0);
}

double exponential_cdf(double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); }

std::vector<double> top_gaps(std::span<const RunResult> results) {
  std::vector<double> gaps;
  gaps.reserve(results.size());
  for (const auto& r : results) {
    if (r.top_scores.size() < 2) throw ConfigError("topk", "gap test needs at least two top scores per replicate");
    gaps.push_back(r.top_scores[0] - r.top_scores[1]);
  }
  return gaps;
}

KsResult gap_test(std::span<const RunResult> results, Alpha alpha) {
  return ks_one_sample(EmpiricalDistribution(top_gaps(results)), exponential_cdf, alpha);
}

KsResult gap_test(std::span<const RunResult> results, Threshold threshold) {
  return ks_one_sample(EmpiricalDistribution(top_gaps(results)), exponential_cdf, threshold);
}

LlnReport lln_check(std::span<const LlnPoint> points, double target, double eps, double allowance) {
  if (points.size() < 3) throw ConfigError("n", "law-of-large-numbers check needs at least three generation counts");
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].n <= points[i - 1].n) throw ConfigError("n", "generation counts must be strictly increasing");
  LlnReport report;
  report.target = target;
  report.eps = eps;
  report.non_increasing = true;
  for (std::size_t i = 0; i < points.size(); ++i) {
    report.n.push_back(points[i].n);
    report.deviations.push_back(std::abs(points[i].mean - target));
    if (i > 0) {
      const double slack = allowance * std::hypot(points[i].standard_error, points[i - 1].standard_error);
      if (report.deviations[i] > report.deviations[i - 1] + slack) report.non_increasing = false;
    }
  }
  report.final_within_eps = report.deviations.back() < eps;
  return report;
}

namespace {
void check_same_regime(const CenteredSample& a, const CenteredSample& b) {
  if (a.theta != b.theta || a.critical != b.critical)
    throw RegimeError("limit stability compares samples centered for different regimes");
}
}  // namespace

KsResult limit_stability(const CenteredSample& a, const CenteredSample& b, Alpha alpha) {
  check_same_regime(a, b);
  return ks_two_sample(a.values, b.values, alpha);
}

KsResult limit_stability(const CenteredSample& a, const CenteredSample& b, Threshold threshold) {
  check_same_regime(a, b);
  return ks_two_sample(a.values, b.values, threshold);
}

RatioReport ratio_check(std::span<const RunResult> results, double theta, std::span<const double> nus,
                        const Schedule& schedule, double eps) {
  if (nus.size() != schedule.blocks()) throw ConfigError("nus", "one cumulant value per block is required");
  double total = 0.0;
  for (std::size_t i = 0; i < nus.size(); ++i) total += static_cast<double>(schedule.q(i)) * nus[i];
  const double first = static_cast<double>(schedule.q(0)) * nus[0];
  RatioReport report;
  report.n = schedule.n();
  report.eps = eps;
  std::size_t exceeding = 0;
  for (const auto& r : results) {
    if (r.theta != theta) throw RegimeError("ratio check received a result simulated at another theta");
    if (std::isnan(r.first_block_log_w)) throw ConfigError("record_first_block", "first-block statistics were not recorded");
    const double ratio = std::exp((r.log_w - total) - (r.first_block_log_w - first));
    report.ratios.push_back(ratio);
    const double dev = std::abs(ratio - 1.0);
    report.max_abs_deviation = std::max(report.max_abs_deviation, dev);
    if (dev > eps) ++exceeding;
  }
  report.fraction_exceeding =
      results.empty() ? 0.0 : static_cast<double>(exceeding) / static_cast<double>(results.size());
  return report;
}

std::vector<double> normalized_w(std::span<const RunResult> results, std::span<const double> nus,
                                 const Schedule& schedule) {
  if (nus.size() != schedule.blocks()) throw ConfigError("nus", "one cumulant value per block is required");
  double total = 0.0;
  for (std::size_t i = 0; i < nus.size(); ++i) total += static_cast<double>(schedule.q(i)) * nus[i];
  std::vector<double> out;
  out.reserve(results.size());
  for (const auto& r : results) out.push_back(std::exp(r.log_w - total));
  return out;
}

MeanCheck mean_check(std::span<const double> values, double target, double sigmas) {
  if (values.size() < 2) throw EmptySampleError("mean check needs at least two values");
  const EmpiricalDistribution dist({values.begin(), values.end()});
  MeanCheck out;
  out.mean = dist.mean();
  out.standard_error = dist.standard_error();
  out.target = target;
  out.pass = std::abs(out.mean - target) < sigmas * out.standard_error;
  return out;
}

std::string to_json_line(const CheckRecord& record) {
  nlohmann::ordered_json j;
  j["test"] = record.name;
  j["statistic"] = record.statistic;
  j["threshold"] = record.threshold;
  j["pass"] = record.pass;
  j["mandatory"] = record.mandatory;
  if (!record.detail.empty()) j["detail"] = record.detail;
  return j.dump();
}

void write_table(std::ostream& os, std::span<const CheckRecord> records) {
  std::size_t width = 4;
  for (const auto& r : records) width = std::max(width, r.name.size());
  os << std::left << std::setw(static_cast<int>(width)) << "test" << "  " << std::setw(12) << "statistic"
     << std::setw(12) << "threshold" << "verdict\n";
  for (const auto& r : records) {
    os << std::left << std::setw(static_cast<int>(width)) << r.name << "  " << std::setw(12) << std::setprecision(6)
       << r.statistic << std::setw(12) << r.threshold << (r.pass ? "PASS" : (r.mandatory ? "FAIL" : "fail (info)"));
    if (!r.detail.empty()) os << "  " << r.detail;
    os << '\n';
  }
}

}  // namespace lpmbrw
