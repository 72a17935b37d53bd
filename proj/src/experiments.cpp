#include "lpmbrw/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "lpmbrw/cumulant.hpp"
#include "lpmbrw/error.hpp"
#include "lpmbrw/rde.hpp"

namespace lpmbrw {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::string hex(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

std::string signature(const DisplacementModel& model) {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const GaussianBinary& g) { os << "G" << hex(g.sigma); },
                 [&](const DeterministicTwoPoint& d) { os << "D" << hex(d.a) << ',' << hex(d.b); },
                 [&](const GenericIid& g) {
                   os << "I";
                   for (std::size_t i = 0; i < g.offspring.counts.size(); ++i)
                     os << g.offspring.counts[i] << ':' << hex(g.offspring.probabilities[i]) << ',';
                   std::visit(overloaded{
                                  [&](const ConstantStep& s) { os << "c" << hex(s.value); },
                                  [&](const NormalStep& s) { os << "n" << hex(s.mean) << ',' << hex(s.sd); },
                                  [&](const UniformStep& s) { os << "u" << hex(s.lo) << ',' << hex(s.hi); },
                              },
                              g.step);
                   os << ';' << hex(g.domain_bound) << ';' << g.mc_draws << ';' << g.mc_seed;
                 },
             },
             model.kind());
  return os.str();
}

std::string signature(const RunConfig& run) {
  std::ostringstream os;
  for (const auto& m : run.models) os << signature(m) << '|';
  for (auto q : run.schedule.lengths()) os << q << ',';
  os << '|' << hex(run.theta) << '|' << run.topk << '|' << run.particle_budget << '|' << run.record_first_block;
  return os.str();
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string fmt(double x, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << x;
  return os.str();
}

std::string schedule_text(const Schedule& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.blocks(); ++i) out += (i ? "," : "") + std::to_string(s.q(i));
  return out + ")";
}

CheckRecord ks_record(std::string name, const KsResult& ks, std::string detail = {}, bool mandatory = true) {
  return {std::move(name), ks.statistic, ks.threshold, ks.pass, mandatory, std::move(detail)};
}

// State shared by the preset bodies.
class Session {
 public:
  Session(const ExperimentConfig& config, RunCache& cache, std::string name)
      : config_(config), cache_(cache) {
    out_.preset = std::move(name);
    out_.config_hash = config.hash();
  }

  const ExperimentConfig& config() const { return config_; }
  PresetOutcome& out() { return out_; }

  RunConfig run_config(const std::vector<DisplacementModel>& models, const Schedule& schedule, double theta) const {
    if (models.size() != schedule.blocks())
      throw ConfigError("models", "needs one model per schedule block (" + std::to_string(schedule.blocks()) +
                                      "), got " + std::to_string(models.size()));
    RunConfig run;
    run.models = models;
    run.schedule = schedule;
    run.theta = theta;
    run.topk = config_.topk;
    run.particle_budget = config_.particle_budget;
    run.record_first_block = true;
    return run;
  }

  // Replicates [first, first + reps) of the arm; their table becomes an artifact.
  std::vector<RunResult> simulate(const RunConfig& run, const std::string& label, std::uint64_t first = 0,
                                  std::uint64_t reps = 0) {
    if (reps == 0) reps = config_.reps;
    auto results = cache_.get(run, first, reps, arm_seed(config_.seed, run), config_.workers);
    std::ostringstream os;
    if (config_.format == OutputFormat::csv)
      write_csv(os, results, config_.topk);
    else
      write_json_lines(os, results, config_.topk);
    add_artifact(out_.preset + "_runs_" + label + extension(), os.str());
    return results;
  }

  void add_column(const std::string& label, const std::string& column, std::span<const double> values) {
    std::ostringstream os;
    char buf[32];
    if (config_.format == OutputFormat::csv) os << column << '\n';
    for (double v : values) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      if (config_.format == OutputFormat::csv)
        os << buf << '\n';
      else
        os << "{\"" << column << "\":" << buf << "}\n";
    }
    add_artifact(out_.preset + "_" + label + extension(), os.str());
  }

  void add_artifact(std::string name, std::string content) {
    out_.artifacts.push_back({std::move(name), std::move(content)});
  }

  void check(CheckRecord record) { out_.checks.push_back(std::move(record)); }
  void value(std::string name, double v) { out_.values.emplace_back(std::move(name), v); }

  std::vector<double> centered(std::span<const RunResult> results, const std::vector<DisplacementModel>& models,
                               const Schedule& schedule, double theta, bool critical) const {
    const auto spec = centering(models, schedule, theta, critical);
    std::vector<double> out;
    out.reserve(results.size());
    for (const auto& r : results) out.push_back(centered_r_star(r, spec));
    return out;
  }

 private:
  std::string extension() const { return config_.format == OutputFormat::csv ? ".csv" : ".jsonl"; }

  const ExperimentConfig& config_;
  RunCache& cache_;
  PresetOutcome out_;
};

std::vector<double> nus_at(const std::vector<DisplacementModel>& models, double theta) {
  std::vector<double> out;
  for (const auto& m : models) out.push_back(nu(m, theta));
  return out;
}

std::vector<Schedule> ladder(const ExperimentConfig& config, std::size_t minimum, const char* why) {
  auto schedules = resolve_schedules(config.schedule);
  if (schedules.size() < minimum)
    throw ConfigError("schedule", std::string(why) + " needs at least " + std::to_string(minimum) + " schedules");
  for (std::size_t i = 1; i < schedules.size(); ++i)
    if (schedules[i].n() <= schedules[i - 1].n())
      throw ConfigError("schedule", "generation counts must be strictly increasing");
  return schedules;
}

std::string nlabel(const Schedule& s) { return "n" + std::to_string(s.n()); }

double subcritical_theta(const ExperimentConfig& config) {
  if (config.theta.critical) throw ConfigError("theta", "preset " + config.preset + " needs a numeric theta");
  return config.theta.value;
}

// ---------------------------------------------------------------------------

void theta_star_preset(Session& s) {
  const auto& models = s.config().models;
  const double tol = default_tilt_tolerance;
  std::ostringstream table;
  table << "model,description,finite,theta_star,lo,hi,residual\n";
  char buf[256];
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto tilt = theta_star(models[i]);
    const std::string tag = "[" + std::to_string(i) + "]";
    std::snprintf(buf, sizeof buf, "%zu,\"%s\",%d,%.17g,%.17g,%.17g,%.17g\n", i, models[i].describe().c_str(),
                  tilt.finite ? 1 : 0, tilt.value, tilt.lo, tilt.hi, tilt.residual);
    table << buf;
    s.value("theta_star" + tag, tilt.value);
    if (!tilt.finite) {
      s.check({"theta_star_finite" + tag, tilt.cap, tilt.cap, true, false, "no tangency point below the cap"});
      continue;
    }
    const auto c = nu_derivatives(models[i], tilt.value);
    const double tangency = std::abs(c.nu / tilt.value - c.d1);
    s.check({"tangency" + tag, tangency, 10.0 * tol, tangency < 10.0 * tol, true, {}});
    if (const auto* g = std::get_if<GaussianBinary>(&models[i].kind())) {
      const double closed = std::sqrt(2.0 * std::log(2.0)) / g->sigma;
      const double err = std::abs(tilt.value - closed);
      s.check({"closed_form" + tag, err, s.config().thresholds.tilt_tolerance,
               err < s.config().thresholds.tilt_tolerance, true, "sqrt(2 log 2)/sigma = " + fmt(closed, 12)});
    }
  }
  s.add_artifact(s.out().preset + "_table.csv", table.str());
}

void coupling_preset(Session& s) {
  const auto& c = s.config();
  const double theta = subcritical_theta(c);
  const auto schedule = resolve_schedules(c.schedule).front();
  const auto run = s.run_config(c.models, schedule, theta);
  // Independent replicates for the two arms.
  const auto direct = s.simulate(run, nlabel(schedule) + "_direct", 0, c.reps);
  const auto other = s.simulate(run, nlabel(schedule) + "_coupled", c.reps, c.reps);
  std::vector<double> a;
  for (const auto& r : direct) a.push_back(r.r_star);
  const auto b = coupled_rightmost(other, arm_seed(c.seed, run));
  s.add_column("coupled_arm", "r_star_coupled", b);
  const EmpiricalDistribution da(a), db(b);
  s.check(ks_record("coupling_ks", ks_two_sample(da, db, Threshold{c.thresholds.coupling_ks}),
                    "R*_n vs (log W_n - log E)/theta, " + std::to_string(c.reps) + " reps per arm"));
  s.check(ks_record("coupling_ks_alpha_0.01", ks_two_sample(da, db, Alpha{0.01}), {}, false));
}

void mean_one_preset(Session& s) {
  const auto& c = s.config();
  const double theta = subcritical_theta(c);
  for (const auto& schedule : resolve_schedules(c.schedule)) {
    const auto run = s.run_config(c.models, schedule, theta);
    const auto results = s.simulate(run, nlabel(schedule));
    const auto nus = nus_at(c.models, theta);
    const auto w = normalized_w(results, nus, schedule);
    const auto m = mean_check(w, 1.0, c.thresholds.mean_sigmas);
    const double z = std::abs(m.mean - 1.0) / m.standard_error;
    s.check({"normalized_w_mean_" + nlabel(schedule), z, c.thresholds.mean_sigmas, m.pass, true,
             "mean " + fmt(m.mean) + ", se " + fmt(m.standard_error) + ", q " + schedule_text(schedule)});
    s.value("normalized_w_mean_" + nlabel(schedule), m.mean);
  }
}

void lln_preset(Session& s) {
  const auto& c = s.config();
  const double theta = subcritical_theta(c);
  if (c.schedule.kind != ScheduleSpec::Kind::proportional)
    throw ConfigError("schedule.type", "the lln preset needs a proportional schedule");
  const auto schedules = ladder(c, 3, "the lln preset");
  const auto nus = nus_at(c.models, theta);
  double target = 0.0;
  for (std::size_t i = 0; i < nus.size(); ++i) target += c.schedule.alpha[i] * nus[i] / theta;
  s.value("lln_target", target);

  std::vector<LlnPoint> points;
  for (const auto& schedule : schedules) {
    const auto results = s.simulate(s.run_config(c.models, schedule, theta), nlabel(schedule));
    std::vector<double> scaled;
    for (const auto& r : results) scaled.push_back(r.r_star / static_cast<double>(schedule.n()));
    const EmpiricalDistribution d(scaled);
    points.push_back({schedule.n(), d.mean(), d.standard_error()});
    s.value("lln_mean_" + nlabel(schedule), d.mean());
  }
  const auto report = lln_check(points, target, c.thresholds.lln_eps, c.thresholds.lln_allowance);
  double worst_increase = -infinity;
  for (std::size_t i = 0; i < points.size(); ++i) {
    s.check({"lln_deviation_n" + std::to_string(points[i].n), report.deviations[i], c.thresholds.lln_eps,
             report.deviations[i] < c.thresholds.lln_eps, false,
             "mean " + fmt(points[i].mean) + ", se " + fmt(points[i].standard_error)});
    if (i > 0) worst_increase = std::max(worst_increase, report.deviations[i] - report.deviations[i - 1]);
  }
  s.check({"lln_final_deviation", report.deviations.back(), c.thresholds.lln_eps, report.final_within_eps, true,
           "target " + fmt(target, 10)});
  s.check({"lln_non_increasing", worst_increase, 0.0, report.non_increasing, true,
           "largest step-to-step change of the deviation"});
}

void ratio_preset(Session& s) {
  const auto& c = s.config();
  const double theta = subcritical_theta(c);
  const auto schedules = ladder(c, 2, "the ratio preset");
  const auto nus = nus_at(c.models, theta);
  std::vector<double> fractions;
  for (const auto& schedule : schedules) {
    const auto results = s.simulate(s.run_config(c.models, schedule, theta), nlabel(schedule));
    const auto report = ratio_check(results, theta, nus, schedule, c.thresholds.ratio_eps);
    fractions.push_back(report.fraction_exceeding);
    s.check({"ratio_fraction_" + nlabel(schedule), report.fraction_exceeding, c.thresholds.ratio_max_fraction,
             report.fraction_exceeding < c.thresholds.ratio_max_fraction, false,
             "|ratio - 1| > " + fmt(c.thresholds.ratio_eps)});
  }
  double worst = -infinity;
  for (std::size_t i = 1; i < fractions.size(); ++i) worst = std::max(worst, fractions[i] - fractions[i - 1]);
  s.check({"ratio_non_increasing", worst, 0.0, worst <= 0.0, true, "largest step-to-step change of the fraction"});
  s.check({"ratio_final_fraction", fractions.back(), c.thresholds.ratio_max_fraction,
           fractions.back() < c.thresholds.ratio_max_fraction, true, {}});

  if (c.compare_models.empty()) return;
  const auto det_nus = nus_at(c.compare_models, theta);
  double max_dev = 0.0;
  for (const auto& schedule : schedules) {
    const auto run = s.run_config(c.compare_models, schedule, theta);
    const auto results = s.simulate(run, nlabel(schedule) + "_compare", 0, std::min<std::uint64_t>(c.reps, 4));
    const auto report = ratio_check(results, theta, det_nus, schedule, c.thresholds.ratio_eps);
    max_dev = std::max(max_dev, report.max_abs_deviation);
  }
  s.check({"ratio_exact_compare_models", max_dev, 1e-9, max_dev < 1e-9, true,
           "max |ratio - 1| over the ladder for the comparison models"});
}

void limit_stability_preset(Session& s) {
  const auto& c = s.config();
  const double theta = subcritical_theta(c);
  const auto schedules = ladder(c, 2, "the limit-stability preset");
  const auto& small = schedules.front();
  const auto& large = schedules.back();
  const auto rs = s.simulate(s.run_config(c.models, small, theta), nlabel(small));
  const auto rl = s.simulate(s.run_config(c.models, large, theta), nlabel(large));
  const CenteredSample a{EmpiricalDistribution(s.centered(rs, c.models, small, theta, false)), theta, false};
  const CenteredSample b{EmpiricalDistribution(s.centered(rl, c.models, large, theta, false)), theta, false};
  s.check(ks_record("stability_ks_" + nlabel(small) + "_" + nlabel(large),
                    limit_stability(a, b, Threshold{c.thresholds.stability_ks})));
  s.value("centered_mean_" + nlabel(large), b.values.mean());
  if (c.compare_models.empty()) return;
  const auto rc = s.simulate(s.run_config(c.compare_models, large, theta), nlabel(large) + "_compare");
  const CenteredSample d{EmpiricalDistribution(s.centered(rc, c.compare_models, large, theta, false)), theta, false};
  s.check(ks_record("z1_only_ks_" + nlabel(large), limit_stability(b, d, Threshold{c.thresholds.z1_ks}),
                    "same first-block law, other later blocks"));
}

void critical_stability_preset(Session& s) {
  const auto& c = s.config();
  if (!c.theta.critical) throw ConfigError("theta", "the critical-stability preset needs theta = \"critical\"");
  const double theta = resolve_theta(c);
  s.value("theta1", theta);
  const auto schedules = ladder(c, 2, "the critical-stability preset");
  const auto& small = schedules.front();
  const auto& large = schedules.back();
  const auto rs = s.simulate(s.run_config(c.models, small, theta), nlabel(small));
  const auto rl = s.simulate(s.run_config(c.models, large, theta), nlabel(large));
  const CenteredSample a{EmpiricalDistribution(s.centered(rs, c.models, small, theta, true)), theta, true};
  const CenteredSample b{EmpiricalDistribution(s.centered(rl, c.models, large, theta, true)), theta, true};
  s.check(ks_record("critical_stability_ks_" + nlabel(small) + "_" + nlabel(large),
                    limit_stability(a, b, Threshold{c.thresholds.critical_ks})));

  // The limit law built from the derivative statistic of the smaller run,
  // compared with the centered sample of the larger one.
  const double s1 = sigma1_sq(c.models[0], theta).value;
  std::vector<double> d;
  for (const auto& r : rs) d.push_back(r.d_stat);
  const auto hat = h_hat_critical(d, theta, s1);
  RandomStream stream(arm_seed(c.seed, s.run_config(c.models, small, theta)), 0, StreamRole::reference);
  std::vector<double> limit;
  for (double h : hat.values) limit.push_back(h - std::log(stream.exponential()) / theta);
  s.add_column("h_hat_" + nlabel(small), "h_hat", hat.values);
  s.check(ks_record("critical_h_hat_ks", ks_two_sample(EmpiricalDistribution(limit), b.values, Threshold{c.thresholds.critical_ks}),
                    "rejected fraction " + fmt(hat.rejected_fraction) + " (d <= 0) at q1 = " +
                        std::to_string(small.q(0)),
                    false));
  s.value("critical_rejected_fraction", hat.rejected_fraction);
}

void rde_match_preset(Session& s) {
  const auto& c = s.config();
  const double theta = subcritical_theta(c);
  const SmoothingTransform transform(c.models[0], theta);
  const std::uint64_t pop_seed = fnv1a("population|" + std::to_string(c.seed) + "|" + signature(c.models[0]) +
                                       "|" + hex(theta));
  std::vector<Population> snaps;
  const std::uint64_t at[] = {c.population.compare_step, c.population.steps};
  const auto pop = iterate(Population::constant(c.population.size), transform, c.population.steps, pop_seed, at,
                           &snaps);
  const double se = pop.mean_standard_error();
  const double z = std::abs(pop.mean() - 1.0) / se;
  s.check({"rde_mean_one", z, c.thresholds.mean_sigmas, z < c.thresholds.mean_sigmas, true,
           "pool mean " + fmt(pop.mean()) + ", se " + fmt(se) + " after " + std::to_string(pop.generation()) +
               " steps"});
  s.value("rde_pool_mean", pop.mean());
  s.check(ks_record("rde_iterate_ks",
                    ks_two_sample(EmpiricalDistribution({snaps.front().pool().begin(), snaps.front().pool().end()}),
                                  EmpiricalDistribution({pop.pool().begin(), pop.pool().end()}),
                                  Threshold{c.thresholds.rde_iterate_ks}),
                    "step " + std::to_string(c.population.compare_step) + " vs " +
                        std::to_string(c.population.steps)));

  const auto h = h_hat_subcritical(pop, theta);
  RandomStream stream(pop_seed, 0, StreamRole::reference);
  std::vector<double> limit;
  limit.reserve(h.size());
  for (double v : h) limit.push_back(v - std::log(stream.exponential()) / theta);
  s.add_column("pool", "d", pop.pool());
  s.add_column("h_hat", "h_hat", h);

  const auto large = resolve_schedules(c.schedule).back();
  const auto results = s.simulate(s.run_config(c.models, large, theta), nlabel(large));
  const auto centered = s.centered(results, c.models, large, theta, false);
  s.check(ks_record("rde_match_ks_" + nlabel(large),
                    ks_two_sample(EmpiricalDistribution(limit), EmpiricalDistribution(centered), Threshold{c.thresholds.rde_match_ks}),
                    "H - (1/theta) log E vs centered R*_n"));
}

void gap_preset(Session& s) {
  const auto& c = s.config();
  const double theta = subcritical_theta(c);
  // Oracle self-test on the Poisson skeleton: points -log(Γ_j) with Γ_j the
  // arrival times of a unit-rate Poisson process.
  std::vector<RunResult> synthetic(c.reps);
  const std::uint64_t self_seed = fnv1a("gap-self-test|" + std::to_string(c.seed));
  for (std::uint64_t r = 0; r < c.reps; ++r) {
    RandomStream stream(self_seed, r, StreamRole::reference);
    const double g1 = stream.exponential();
    const double g2 = g1 + stream.exponential();
    synthetic[r].top_scores = {-std::log(g1), -std::log(g2)};
  }
  const auto self = gap_test(synthetic, Alpha{c.thresholds.gap_self_alpha});
  s.check(ks_record("gap_self_test", self, "synthetic Poisson skeleton, alpha " + fmt(c.thresholds.gap_self_alpha)));
  if (!self.pass) {
    s.check({"gap_ks", infinity, c.thresholds.gap_ks, false, true, "skipped: the oracle self-test failed"});
    return;
  }
  for (const auto& schedule : resolve_schedules(c.schedule)) {
    const auto results = s.simulate(s.run_config(c.models, schedule, theta), nlabel(schedule));
    s.check(ks_record("gap_ks_" + nlabel(schedule), gap_test(results, Threshold{c.thresholds.gap_ks}),
                      "top-two gap vs Exponential(1)"));
  }
}

void fz_example_preset(Session& s) {
  const auto& c = s.config();
  if (c.models.size() != 2) throw ConfigError("models", "the fz-example preset needs two gaussian_binary models");
  const auto* g1 = std::get_if<GaussianBinary>(&c.models[0].kind());
  const auto* g2 = std::get_if<GaussianBinary>(&c.models[1].kind());
  if (!g1 || !g2) throw ConfigError("models", "the fz-example preset needs two gaussian_binary models");
  const auto k = fz_constants(g1->sigma, g2->sigma);
  s.value("lpm_linear", k.lpm_linear);
  s.value("lpm_log", k.lpm_log);
  s.value("fz_linear", k.fz_linear);
  s.value("fz_log", k.fz_log);

  const auto tilt = theta_star(c.models[0]);
  const double closed = std::sqrt(2.0 * std::log(2.0)) / g1->sigma;
  s.value("theta1", tilt.value);
  s.check({"theta1_closed_form", std::abs(tilt.value - closed), c.thresholds.tilt_tolerance,
           std::abs(tilt.value - closed) < c.thresholds.tilt_tolerance, true, {}});

  const double exact = 2.0 * std::log(2.0);
  RandomStream stream(c.seed, 0, StreamRole::model);
  const auto mc = sigma1_sq(c.models[0], tilt.value, c.mc_draws, stream);
  const double rel = std::abs(mc.value - exact) / exact;
  s.value("sigma1_sq_monte_carlo", mc.value);
  s.check({"sigma1_sq_monte_carlo", rel, c.thresholds.sigma1_rel, rel < c.thresholds.sigma1_rel, true,
           "estimate " + fmt(mc.value, 8) + " (se " + fmt(mc.standard_error, 3) + ") vs 2 log 2, " +
               std::to_string(c.mc_draws) + " draws"});

  // The critical centering of an even split reproduces the closed-form
  // coefficients: n L - K log n + K log 2.
  double worst = 0.0;
  std::size_t used = 0;
  for (const auto& schedule : resolve_schedules(c.schedule)) {
    if (schedule.blocks() != 2 || schedule.q(0) != schedule.q(1)) continue;
    const auto spec = centering(c.models, schedule, tilt.value, true);
    const double n = static_cast<double>(schedule.n());
    const double expect = n * k.lpm_linear - k.lpm_log * std::log(n) + k.lpm_log * std::log(2.0);
    worst = std::max(worst, std::abs(spec.total - expect) / std::max(1.0, std::abs(expect)));
    ++used;
  }
  if (used > 0)
    s.check({"centering_matches_constants", worst, 1e-8, worst < 1e-8, true,
             "relative error over " + std::to_string(used) + " even splits"});
  s.check({"lpm_faster_than_fz", k.lpm_linear - k.fz_linear, 0.0, k.lpm_linear > k.fz_linear, false,
           "difference of linear speeds"});
}

void sheave_preset(Session& s) {
  const auto& c = s.config();
  const double theta = subcritical_theta(c);
  if (!c.compare_schedule) throw ConfigError("compare_schedule", "the sheave preset needs a comparison schedule");
  const auto main = resolve_schedules(c.schedule).back();
  const auto other = resolve_schedule(*c.compare_schedule, main.n());
  const auto ra = s.simulate(s.run_config(c.models, main, theta), nlabel(main) + "_" + "main");
  const auto rb = s.simulate(s.run_config(c.models, other, theta), nlabel(other) + "_" + "compare");
  const CenteredSample a{EmpiricalDistribution(s.centered(ra, c.models, main, theta, false)), theta, false};
  const CenteredSample b{EmpiricalDistribution(s.centered(rb, c.models, other, theta, false)), theta, false};
  s.check(ks_record("sheave_ks_" + nlabel(main), limit_stability(a, b, Threshold{c.thresholds.sheave_ks}),
                    "q " + schedule_text(main) + " vs " + schedule_text(other)));
}

void finalize(Session& s) {
  auto& out = s.out();
  const auto& c = s.config();
  nlohmann::ordered_json summary;
  summary["preset"] = out.preset;
  summary["config_hash"] = out.config_hash;
  summary["seed"] = c.seed;
  summary["reps"] = c.reps;
  summary["config"] = c.effective;
  summary["config"].erase("workers");
  summary["config"].erase("output");
  summary["values"] = nlohmann::ordered_json::object();
  for (const auto& [name, v] : out.values) summary["values"][name] = v;
  summary["checks"] = nlohmann::ordered_json::array();
  for (const auto& r : out.checks) summary["checks"].push_back(nlohmann::ordered_json::parse(to_json_line(r)));
  summary["verdict"] = out.passed() ? "PASS" : "FAIL";
  s.add_artifact(out.preset + "_summary.json", summary.dump(2) + "\n");

  std::ostringstream table;
  write_table(table, out.checks);
  table << "verdict: " << (out.passed() ? "PASS" : "FAIL") << '\n';
  s.add_artifact(out.preset + "_verdict.txt", table.str());
}

}  // namespace

bool PresetOutcome::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& r) { return r.pass || !r.mandatory; });
}

const CheckRecord* PresetOutcome::find(const std::string& name) const {
  for (const auto& r : checks)
    if (r.name == name) return &r;
  return nullptr;
}

std::vector<RunResult> RunCache::get(const RunConfig& run, std::uint64_t first, std::uint64_t reps,
                                     std::uint64_t seed, unsigned workers) {
  auto& stored = runs_[signature(run) + "#" + std::to_string(seed)];
  const std::uint64_t need = first + reps;
  if (stored.size() < need) {
    auto more = batch_range(run, stored.size(), need - stored.size(), seed, workers);
    stored.insert(stored.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  }
  return {stored.begin() + static_cast<std::ptrdiff_t>(first), stored.begin() + static_cast<std::ptrdiff_t>(need)};
}

std::uint64_t arm_seed(std::uint64_t seed, const RunConfig& run) {
  return fnv1a(std::to_string(seed) + "|" + signature(run));
}

double resolve_theta(const ExperimentConfig& config) {
  if (!config.theta.critical) return config.theta.value;
  const auto tilt = theta_star(config.models.at(0));
  if (!tilt.finite) throw RegimeError("theta = \"critical\" but the first block has no finite critical tilt");
  return tilt.value;
}

PresetOutcome run_preset(const ExperimentConfig& config, RunCache* cache) {
  RunCache local;
  Session s(config, cache ? *cache : local, config.preset);
  const auto& p = config.preset;
  if (p == "theta-star")
    theta_star_preset(s);
  else if (p == "coupling")
    coupling_preset(s);
  else if (p == "mean-one")
    mean_one_preset(s);
  else if (p == "lln")
    lln_preset(s);
  else if (p == "ratio")
    ratio_preset(s);
  else if (p == "limit-stability")
    limit_stability_preset(s);
  else if (p == "critical-stability")
    critical_stability_preset(s);
  else if (p == "rde-match")
    rde_match_preset(s);
  else if (p == "gap")
    gap_preset(s);
  else if (p == "fz-example")
    fz_example_preset(s);
  else if (p == "sheave")
    sheave_preset(s);
  else
    throw ConfigError("preset", "'" + p + "' is not a verification preset");
  finalize(s);
  return std::move(s.out());
}

PresetOutcome run_simulate(const ExperimentConfig& config) {
  RunCache cache;
  Session s(config, cache, "simulate");
  const double theta = resolve_theta(config);
  s.value("theta", theta);
  for (const auto& schedule : resolve_schedules(config.schedule)) {
    const auto results = s.simulate(s.run_config(config.models, schedule, theta), nlabel(schedule));
    std::vector<double> r;
    for (const auto& x : results) r.push_back(x.r_star);
    s.value("mean_r_star_" + nlabel(schedule), EmpiricalDistribution(r).mean());
  }
  finalize(s);
  return std::move(s.out());
}

PresetOutcome run_rde(const ExperimentConfig& config) {
  RunCache cache;
  Session s(config, cache, "rde");
  const double theta = subcritical_theta(config);
  const SmoothingTransform transform(config.models[0], theta);
  const auto pop = iterate(Population::constant(config.population.size), transform, config.population.steps,
                           config.seed);
  s.value("pool_mean", pop.mean());
  s.value("pool_mean_standard_error", pop.mean_standard_error());
  s.value("pool_mean_log", pop.mean_log());
  s.add_column("pool", "d", pop.pool());
  s.add_column("h_hat", "h_hat", h_hat_subcritical(pop, theta));
  finalize(s);
  return std::move(s.out());
}

void write_artifacts(const PresetOutcome& outcome, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const auto& a : outcome.artifacts) {
    std::ofstream os(fs::path(dir) / a.name, std::ios::binary);
    if (!os) throw ConfigError("output.dir", "cannot write " + (fs::path(dir) / a.name).string());
    os << a.content;
  }
}

}  // namespace lpmbrw
