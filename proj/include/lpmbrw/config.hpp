#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "lpmbrw/displacement.hpp"
#include "lpmbrw/schedule.hpp"

namespace lpmbrw {

struct ScheduleSpec {
  enum class Kind { explicit_blocks, proportional, slow_first };
  Kind kind = Kind::explicit_blocks;
  std::vector<std::vector<std::uint64_t>> blocks;  // explicit: one schedule per entry
  std::vector<double> alpha;                       // proportional: all k; slow_first: blocks 2..k
  std::vector<std::uint64_t> ladder;               // n values for proportional / slow_first
};

/// Resolves one n of a proportional or slow-first spec.
Schedule resolve_schedule(const ScheduleSpec& spec, std::uint64_t n);
/// Every schedule of the spec, in ladder order.
std::vector<Schedule> resolve_schedules(const ScheduleSpec& spec);

struct ThetaSpec {
  bool critical = false;
  double value = 0.5;
};

enum class OutputFormat { csv, json_lines };

/// Test thresholds; every preset reads the ones it needs.
struct Thresholds {
  double coupling_ks = 0.04;
  double mean_sigmas = 3.0;
  double lln_eps = 0.1;
  double lln_allowance = 0.0;  // noise allowance in standard errors for the trend
  double stability_ks = 0.05;
  double z1_ks = 0.06;
  double critical_ks = 0.07;
  double gap_ks = 0.05;
  double gap_self_alpha = 0.01;
  double ratio_eps = 0.25;
  double ratio_max_fraction = 0.2;
  double rde_iterate_ks = 0.02;
  double rde_match_ks = 0.08;
  double sheave_ks = 0.05;
  double tilt_tolerance = 1e-8;
  double sigma1_rel = 0.01;
};

struct PopulationSpec {
  std::size_t size = 100'000;
  std::uint64_t steps = 50;
  std::uint64_t compare_step = 40;
};

struct ExperimentConfig {
  std::string preset;
  std::vector<DisplacementModel> models;
  std::vector<DisplacementModel> compare_models;
  ScheduleSpec schedule;
  std::optional<ScheduleSpec> compare_schedule;
  ThetaSpec theta;
  std::uint64_t reps = 1000;
  std::uint64_t seed = 20240601;
  unsigned workers = 1;
  std::size_t topk = 8;
  std::uint64_t particle_budget = std::uint64_t{1} << 26;
  std::uint64_t mc_draws = 1'000'000;
  std::string out_dir;
  OutputFormat format = OutputFormat::csv;
  Thresholds thresholds;
  PopulationSpec population;
  bool waive_assumptions = false;

  /// Effective configuration (defaults merged) used for hashing.
  nlohmann::ordered_json effective;
  /// FNV-1a hash of `effective` without workers and output settings.
  std::string hash() const;
};

/// Names accepted by `verify`.
const std::vector<std::string>& preset_names();

/// Default JSON configuration of a preset. Throws ConfigError for an unknown name.
nlohmann::json preset_defaults(std::string_view preset);

/// Parses `user` merged over the preset defaults. Unknown keys and invalid
/// values raise ConfigError naming the offending field path.
ExperimentConfig parse_config(const nlohmann::json& user, std::optional<std::string_view> preset = std::nullopt);

DisplacementModel parse_model(const nlohmann::json& spec, const std::string& path = "model");

/// Shorthand model specs for the CLI: "gaussian:SIGMA", "two-point:A,B", or
/// a JSON object.
DisplacementModel parse_model_shorthand(std::string_view text);

}  // namespace lpmbrw
