#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lpmbrw/config.hpp"
#include "lpmbrw/simulator.hpp"
#include "lpmbrw/verify.hpp"

namespace lpmbrw {

/// A file produced by a run, written by write_artifacts.
struct Artifact {
  std::string name;
  std::string content;
};

struct PresetOutcome {
  std::string preset;
  std::string config_hash;
  std::vector<CheckRecord> checks;
  std::vector<std::pair<std::string, double>> values;
  std::vector<Artifact> artifacts;

  /// True when every mandatory check passed.
  bool passed() const;
  const CheckRecord* find(const std::string& name) const;
};

/// Memoizes simulated batches by run signature and seed so that presets
/// sharing a run (same models, schedule, θ, ...) simulate it once. Replicate
/// r is the same tree however the batch was first requested.
class RunCache {
 public:
  std::vector<RunResult> get(const RunConfig& run, std::uint64_t first, std::uint64_t reps, std::uint64_t seed,
                             unsigned workers);
  void clear() { runs_.clear(); }

 private:
  std::map<std::string, std::vector<RunResult>> runs_;
};

/// Master seed of one simulated arm: a hash of the config seed and the run
/// signature, so distinct arms use independent streams while presets that
/// share a run share its seed.
std::uint64_t arm_seed(std::uint64_t seed, const RunConfig& run);

/// θ of the config: the numeric value, or θ_(1) of the first model.
double resolve_theta(const ExperimentConfig& config);

/// Runs a preset and collects its checks, reported values and artifacts
/// (per-replicate tables, `<preset>_summary.json`, `<preset>_verdict.txt`).
PresetOutcome run_preset(const ExperimentConfig& config, RunCache* cache = nullptr);

/// Plain batches for every schedule of the config; no checks.
PresetOutcome run_simulate(const ExperimentConfig& config);

/// Population dynamics for the first model; final pool and (1/θ) log D.
PresetOutcome run_rde(const ExperimentConfig& config);

/// Writes every artifact under `dir` (created if needed).
void write_artifacts(const PresetOutcome& outcome, const std::string& dir);

}  // namespace lpmbrw
