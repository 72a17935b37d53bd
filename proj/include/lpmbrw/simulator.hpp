#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "lpmbrw/cumulant.hpp"
#include "lpmbrw/displacement.hpp"
#include "lpmbrw/random.hpp"
#include "lpmbrw/schedule.hpp"

namespace lpmbrw {

inline constexpr std::uint64_t default_particle_budget = std::uint64_t{1} << 26;

struct RunConfig {
  std::vector<DisplacementModel> models;  // one per block
  Schedule schedule{{0}};
  double theta = 1.0;
  std::size_t topk = 8;
  std::uint64_t particle_budget = default_particle_budget;
  bool record_first_block = true;
};

/// Statistics of one simulated last-progeny-modified tree.
struct RunResult {
  double theta = 0.0;
  std::uint64_t n = 0;             ///< generation count
  double r_n = 0.0;                ///< max_{|v|=n} S(v)
  double r_star = 0.0;             ///< max_{|v|=n} S(v) - log(E_v)/θ
  double log_w = 0.0;              ///< log Σ_{|v|=n} e^{θ S(v)}
  std::vector<double> top_scores;  ///< largest θ S(v) - log E_v, descending
  double first_block_log_w = 0.0;  ///< log W over generation t_1
  double d_stat = 0.0;             ///< -Σ_{|v|=t_1} y_v e^{y_v}, y_v = θ S(v) - q_1 ν_1(θ)
  double m_share = 0.0;            ///< max weight share at generation t_1
  std::uint64_t leaf_count = 0;
};

/// Address of one replicate's random streams.
struct ReplicateSeed {
  std::uint64_t master;
  std::uint64_t replicate;
};

/// Simulates one tree depth-first with an explicit stack, computing every
/// RunResult field in a single pass. Memory is O(n * max offspring).
/// Throws BudgetExceededError when a generation outgrows the particle budget.
RunResult simulate(const RunConfig& config, ReplicateSeed seed);

/// Coupling arm: (log_w - log E) / θ for a fresh Exponential(1) draw E.
double coupled_rightmost(double log_w, double theta, RandomStream& stream);

/// Coupling arm for every replicate, each with its own coupling-role stream.
std::vector<double> coupled_rightmost(std::span<const RunResult> results, std::uint64_t master_seed);

/// r_star minus the centering total. Throws RegimeError on a θ or n mismatch.
double centered_r_star(const RunResult& result, const CenteringSpec& centering);

/// Replicates 0..reps-1 of (config, master_seed) on `workers` threads.
/// Results are in replicate order and identical for every worker count.
std::vector<RunResult> batch(const RunConfig& config, std::uint64_t reps, std::uint64_t master_seed,
                             unsigned workers = 1);
/// Replicates first..first+reps-1; replicate r is the same tree as in batch().
std::vector<RunResult> batch_range(const RunConfig& config, std::uint64_t first, std::uint64_t reps,
                                   std::uint64_t master_seed, unsigned workers = 1);

/// Per-replicate CSV: rep, r_n, r_star, log_w, first_block_log_w, d_stat,
/// m_share, leaf_count, top_1..top_k with 17 significant digits.
void write_csv(std::ostream& os, std::span<const RunResult> results, std::size_t topk);
void write_json_lines(std::ostream& os, std::span<const RunResult> results, std::size_t topk);

}  // namespace lpmbrw
