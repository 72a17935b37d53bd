// lpmbrw: command-line front end for the simulator and the verification presets.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lpmbrw/config.hpp"
#include "lpmbrw/cumulant.hpp"
#include "lpmbrw/error.hpp"
#include "lpmbrw/experiments.hpp"

namespace {

using nlohmann::json;
using namespace lpmbrw;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out;
  std::string format;
};

void add_common(CLI::App* app, CommonOptions& opt) {
  app->add_option("--config", opt.config_path, "Experiment configuration (JSON)")->check(CLI::ExistingFile);
  app->add_option("--seed", opt.seed, "Master seed (overrides LPMBRW_SEED and the config)");
  app->add_option("--workers", opt.workers, "Worker threads (overrides LPMBRW_WORKERS and the config)")
      ->check(CLI::Range(1u, 1024u));
  app->add_option("--out", opt.out, "Output directory");
  app->add_option("--format", opt.format, "Per-replicate output format")
      ->check(CLI::IsMember({"csv", "json-lines"}));
}

json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config", "cannot open " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", path + ": " + e.what());
  }
}

std::uint64_t env_u64(const char* name) {
  const char* text = std::getenv(name);
  std::uint64_t v = 0;
  const std::string s(text);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw ConfigError(name, "environment value '" + s + "' is not a non-negative integer");
  return v;
}

// Precedence: command-line flag, then environment, then config file.
ExperimentConfig load(const CommonOptions& opt, std::optional<std::string> preset) {
  json user = opt.config_path.empty() ? json::object() : read_json(opt.config_path);
  if (!user.is_object()) throw ConfigError("", "configuration must be an object");
  if (std::getenv("LPMBRW_SEED")) user["seed"] = env_u64("LPMBRW_SEED");
  if (std::getenv("LPMBRW_WORKERS")) user["workers"] = env_u64("LPMBRW_WORKERS");
  if (opt.seed) user["seed"] = *opt.seed;
  if (opt.workers) user["workers"] = *opt.workers;
  if (!opt.out.empty()) user["output"]["dir"] = opt.out;
  if (!opt.format.empty()) user["output"]["format"] = opt.format;
  if (preset && user.contains("preset") && user["preset"] != *preset)
    throw ConfigError("preset", "config names preset " + user["preset"].dump() + " but verify was asked for " + *preset);
  auto config = parse_config(user, preset ? std::optional<std::string_view>(*preset) : std::nullopt);
  if (config.out_dir.empty()) config.out_dir = "lpmbrw-out";
  return config;
}

void print_values(const PresetOutcome& outcome) {
  for (const auto& [name, v] : outcome.values) std::printf("%-28s %.10g\n", name.c_str(), v);
}

int finish(const PresetOutcome& outcome, const ExperimentConfig& config) {
  write_artifacts(outcome, config.out_dir);
  print_values(outcome);
  if (!outcome.checks.empty()) write_table(std::cout, outcome.checks);
  std::cout << outcome.preset << ": " << (outcome.passed() ? "PASS" : "FAIL") << "  (config " << outcome.config_hash
            << ", artifacts in " << config.out_dir << ")\n";
  return outcome.passed() ? 0 : 1;
}

std::vector<DisplacementModel> models_from(const std::vector<std::string>& shorthand, const CommonOptions& opt) {
  std::vector<DisplacementModel> models;
  for (const auto& s : shorthand) models.push_back(parse_model_shorthand(s));
  if (models.empty()) {
    if (opt.config_path.empty()) throw ConfigError("models", "give --model or --config");
    models = load(opt, std::nullopt).models;
  }
  return models;
}

int report(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ConfigError("out", dir + " is not a directory");
  std::vector<fs::path> summaries;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > 13 && name.ends_with("_summary.json")) summaries.push_back(entry.path());
  }
  std::sort(summaries.begin(), summaries.end());
  if (summaries.empty()) {
    std::cout << "no summaries in " << dir << "\n";
    return 1;
  }
  bool all = true;
  for (const auto& path : summaries) {
    const auto j = read_json(path.string());
    std::vector<CheckRecord> checks;
    for (const auto& c : j.at("checks")) {
      CheckRecord r;
      r.name = c.at("test").get<std::string>();
      r.statistic = c.at("statistic").is_number() ? c.at("statistic").get<double>() : NAN;
      r.threshold = c.at("threshold").is_number() ? c.at("threshold").get<double>() : NAN;
      r.pass = c.at("pass").get<bool>();
      r.mandatory = c.at("mandatory").get<bool>();
      if (c.contains("detail")) r.detail = c.at("detail").get<std::string>();
      checks.push_back(std::move(r));
    }
    const auto verdict = j.at("verdict").get<std::string>();
    all = all && verdict != "FAIL";
    std::cout << "== " << j.at("preset").get<std::string>() << " (config " << j.at("config_hash").get<std::string>()
              << ") " << verdict << "\n";
    if (!checks.empty()) write_table(std::cout, checks);
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Last-progeny-modified branching random walk: simulation and limit-theorem checks"};
  app.require_subcommand(1);

  CommonOptions opt;

  auto* ts = app.add_subcommand("theta-star", "Critical tilt of each model");
  std::vector<std::string> ts_models;
  double cap = default_tilt_cap;
  double tol = default_tilt_tolerance;
  ts->add_option("--model", ts_models, "gaussian:SIGMA, two-point:A,B, or a JSON model");
  ts->add_option("--cap", cap, "Upper end of the bracket search");
  ts->add_option("--tol", tol, "Bisection tolerance");
  add_common(ts, opt);

  auto* nu_cmd = app.add_subcommand("nu", "Cumulant function and derivatives");
  std::vector<std::string> nu_models;
  std::vector<double> points;
  nu_cmd->add_option("--model", nu_models, "gaussian:SIGMA, two-point:A,B, or a JSON model");
  nu_cmd->add_option("--at", points, "Arguments a")->required();
  add_common(nu_cmd, opt);

  auto* constants = app.add_subcommand("constants", "Centering constants of the binary Gaussian example");
  double sigma1 = 2.0;
  double sigma2 = 1.0;
  constants->add_option("--sigma1", sigma1, "First-block standard deviation");
  constants->add_option("--sigma2", sigma2, "Second-block standard deviation");

  auto* simulate = app.add_subcommand("simulate", "Simulate batches for every schedule of the config");
  add_common(simulate, opt);

  auto* rde = app.add_subcommand("rde", "Population dynamics for the first model of the config");
  add_common(rde, opt);

  auto* verify = app.add_subcommand("verify", "Run a verification preset");
  std::string preset;
  verify->add_option("preset", preset, "Preset name")->required()->check(CLI::IsMember(preset_names()));
  add_common(verify, opt);

  auto* rep = app.add_subcommand("report", "Summarize the verdicts stored in an output directory");
  std::string report_dir = "lpmbrw-out";
  rep->add_option("--out", report_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ts) {
      for (const auto& m : models_from(ts_models, opt)) {
        const auto tilt = theta_star(m, cap, tol);
        json rec = {{"model", m.describe()}, {"finite", tilt.finite}, {"cap", tilt.cap}};
        if (tilt.finite) {
          std::printf("%.10f\n", tilt.value);
          rec["theta_star"] = tilt.value;
          rec["bracket"] = {tilt.lo, tilt.hi};
          rec["residual"] = tilt.residual;
        } else {
          std::printf("inf\n");
          rec["theta_star"] = "inf";
        }
        std::cout << rec.dump() << "\n";
      }
      return 0;
    }
    if (*nu_cmd) {
      for (const auto& m : models_from(nu_models, opt)) {
        for (double a : points) {
          const auto c = nu_derivatives(m, a);
          const auto e = nu_estimate(m, a);
          std::printf("%.10f %.10f %.10f\n", c.nu, c.d1, c.d2);
          json rec = {{"model", m.describe()}, {"a", a},       {"nu", c.nu},
                      {"d1", c.d1},            {"d2", c.d2}, {"standard_error", e.standard_error}};
          std::cout << rec.dump() << "\n";
        }
      }
      return 0;
    }
    if (*constants) {
      const auto k = fz_constants(sigma1, sigma2);
      std::printf("lpm_linear %.7f\nlpm_log %.7f\nfz_linear %.7f\nfz_log %.7f\n", k.lpm_linear, k.lpm_log,
                  k.fz_linear, k.fz_log);
      json rec = {{"sigma1", sigma1},       {"sigma2", sigma2},   {"lpm_linear", k.lpm_linear},
                  {"lpm_log", k.lpm_log}, {"fz_linear", k.fz_linear}, {"fz_log", k.fz_log}};
      std::cout << rec.dump() << "\n";
      return 0;
    }
    if (*simulate) {
      const auto config = load(opt, std::nullopt);
      return finish(run_simulate(config), config);
    }
    if (*rde) {
      const auto config = load(opt, std::nullopt);
      return finish(run_rde(config), config);
    }
    if (*verify) {
      const auto config = load(opt, preset);
      return finish(run_preset(config), config);
    }
    if (*rep) return report(report_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const BudgetExceededError& e) {
    std::cerr << "budget exceeded (replicate " << e.replicate() << "): " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
