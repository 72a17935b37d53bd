#include "lpmbrw/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "lpmbrw/error.hpp"

namespace lpmbrw {

namespace {

/// Running log Σ e^{x} with rescaling whenever a new maximum arrives.
struct LogSumExp {
  double max = -infinity;
  double sum = 0.0;

  /// Adds x and returns e^{x - max} relative to the updated maximum.
  double add(double x) {
    if (x > max) {
      sum = sum * std::exp(max - x) + 1.0;
      max = x;
      return 1.0;
    }
    const double w = std::exp(x - max);
    sum += w;
    return w;
  }

  double value() const { return max + std::log(sum); }
};

class TreeWalker {
 public:
  TreeWalker(const RunConfig& config, ReplicateSeed seed)
      : config_(config),
        seed_(seed),
        tree_(seed.master, seed.replicate, StreamRole::tree),
        leaf_(seed.master, seed.replicate, StreamRole::leaf),
        n_(config.schedule.n()),
        t1_(config.schedule.boundary(1)),
        theta_(config.theta) {
    if (config.models.size() != config.schedule.blocks())
      throw ConfigError("models", "one model per schedule block is required");
    if (!(theta_ > 0.0) || !std::isfinite(theta_)) throw RegimeError("theta must be positive and finite");
    if (config.topk < 1) throw ConfigError("topk", "must be at least 1");
    model_at_.resize(n_ + 1, nullptr);
    sigma_at_.resize(n_ + 1, 0.0);
    for (std::uint64_t g = 1; g <= n_; ++g) {
      model_at_[g] = &config.models[config.schedule.block_of(g)];
      if (const auto* gauss = std::get_if<GaussianBinary>(&model_at_[g]->kind()))
        sigma_at_[g] = gauss->sigma;
      else
        all_gaussian_ = false;
    }
    population_.assign(n_ + 1, 0);
    if (config.record_first_block)
      first_block_offset_ = static_cast<double>(config.schedule.q(0)) * nu(config.models[0], theta_);
    std::uint32_t width = 1;
    for (const auto& m : config.models) width = std::max(width, m.max_offspring());
    stack_.reserve(static_cast<std::size_t>(n_ + 1) * width);
    heap_.reserve(config.topk);
  }

  RunResult run() {
    population_[0] = 1;
    if (t1_ == 0) first_block(0.0);
    if (n_ == 0) {
      leaf(0.0);
    } else {
      stack_.push_back({0.0, 0});
    }
    if (all_gaussian_)
      walk<true>();
    else
      walk<false>();
    return finish();
  }

 private:
  struct Frame {
    double position;
    std::uint64_t depth;
  };

  template <bool Gaussian>
  void walk() {
    while (!stack_.empty()) {
      const Frame frame = stack_.back();
      stack_.pop_back();
      const std::uint64_t gen = frame.depth + 1;
      if constexpr (Gaussian) {
        const double sigma = sigma_at_[gen];
        children_.resize(2);
        children_[0] = sigma * tree_.normal();
        children_[1] = sigma * tree_.normal();
      } else {
        sample(*model_at_[gen], tree_, children_);
      }
      population_[gen] += children_.size();
      if (population_[gen] > config_.particle_budget) {
        std::ostringstream os;
        os << "generation " << gen << " exceeds the particle budget of " << config_.particle_budget;
        throw BudgetExceededError(os.str(), seed_.replicate);
      }
      const bool at_first = gen == t1_;
      if (gen == n_) {
        for (double step : children_) {
          const double pos = frame.position + step;
          if (at_first) first_block(pos);
          leaf(pos);
        }
      } else {
        for (double step : children_) {
          const double pos = frame.position + step;
          if (at_first) first_block(pos);
          stack_.push_back({pos, gen});
        }
      }
    }
  }

  void leaf(double pos) {
    ++leaves_;
    if (pos > r_n_) r_n_ = pos;
    const double x = theta_ * pos;
    const bool new_max = x > lse_.max;
    const double w = lse_.add(x);
    if (new_max) refresh_bound();
    const double e = leaf_.exponential();
    if (heap_.size() < config_.topk) {
      heap_.push_back(x - std::log(e));
      std::push_heap(heap_.begin(), heap_.end(), std::greater<>{});
      if (heap_.size() == config_.topk) {
        threshold_ = heap_.front();
        refresh_bound();
      }
      return;
    }
    // x - log e > threshold  <=>  e < e^{x - max} e^{max - threshold}; the
    // logarithm is taken only for candidates.
    if (e < w * bound_scale_ * (1.0 + 1e-12)) {
      const double score = x - std::log(e);
      if (score > threshold_) {
        std::pop_heap(heap_.begin(), heap_.end(), std::greater<>{});
        heap_.back() = score;
        std::push_heap(heap_.begin(), heap_.end(), std::greater<>{});
        threshold_ = heap_.front();
        refresh_bound();
      }
    }
  }

  void refresh_bound() {
    if (heap_.size() == config_.topk) bound_scale_ = std::exp(lse_.max - threshold_);
  }

  void first_block(double pos) {
    if (!config_.record_first_block) return;
    const double x = theta_ * pos;
    const double previous = first_.max;
    const double w = first_.add(x);
    const double centered = x - first_block_offset_;
    if (x > previous)
      first_weighted_ = first_weighted_ * std::exp(previous - x) + centered;
    else
      first_weighted_ += centered * w;
  }

  RunResult finish() {
    RunResult out;
    out.theta = theta_;
    out.n = n_;
    out.r_n = r_n_;
    out.log_w = lse_.value();
    std::sort(heap_.begin(), heap_.end(), std::greater<>{});
    out.top_scores = heap_;
    out.r_star = out.top_scores.front() / theta_;
    out.leaf_count = leaves_;
    if (config_.record_first_block) {
      out.first_block_log_w = first_.value();
      out.m_share = 1.0 / first_.sum;
      out.d_stat = -first_weighted_ * std::exp(first_.max - first_block_offset_);
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      out.first_block_log_w = out.m_share = out.d_stat = nan;
    }
    return out;
  }

  const RunConfig& config_;
  ReplicateSeed seed_;
  RandomStream tree_;
  RandomStream leaf_;
  std::uint64_t n_;
  std::uint64_t t1_;
  double theta_;
  std::vector<const DisplacementModel*> model_at_;
  std::vector<double> sigma_at_;
  bool all_gaussian_ = true;
  std::vector<std::uint64_t> population_;
  std::vector<Frame> stack_;
  std::vector<double> children_;

  double r_n_ = -infinity;
  std::uint64_t leaves_ = 0;
  LogSumExp lse_;
  std::vector<double> heap_;  // min-heap of the top scores
  double threshold_ = -infinity;
  double bound_scale_ = infinity;

  LogSumExp first_;
  double first_weighted_ = 0.0;
  double first_block_offset_ = 0.0;
};

void put(std::ostream& os, double x) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  os.write(buf, end - buf);
}

}  // namespace

RunResult simulate(const RunConfig& config, ReplicateSeed seed) { return TreeWalker(config, seed).run(); }

double coupled_rightmost(double log_w, double theta, RandomStream& stream) {
  if (!(theta > 0.0)) throw RegimeError("theta must be positive");
  return (log_w - std::log(stream.exponential())) / theta;
}

std::vector<double> coupled_rightmost(std::span<const RunResult> results, std::uint64_t master_seed) {
  std::vector<double> out;
  out.reserve(results.size());
  for (std::size_t r = 0; r < results.size(); ++r) {
    RandomStream stream(master_seed, r, StreamRole::coupling);
    out.push_back(coupled_rightmost(results[r].log_w, results[r].theta, stream));
  }
  return out;
}

double centered_r_star(const RunResult& result, const CenteringSpec& centering) {
  if (result.theta != centering.theta) throw RegimeError("centering computed for a different theta");
  if (result.n != centering.n) throw RegimeError("centering computed for a different generation count");
  return result.r_star - centering.total;
}

std::vector<RunResult> batch(const RunConfig& config, std::uint64_t reps, std::uint64_t master_seed,
                             unsigned workers) {
  if (reps < 1) throw ConfigError("reps", "must be at least 1");
  return batch_range(config, 0, reps, master_seed, workers);
}

std::vector<RunResult> batch_range(const RunConfig& config, std::uint64_t first, std::uint64_t reps,
                                   std::uint64_t master_seed, unsigned workers) {
  std::vector<RunResult> results(reps);
  if (reps == 0) return results;
  workers = std::max(1u, static_cast<unsigned>(std::min<std::uint64_t>(workers, reps)));

  std::atomic<std::uint64_t> next{0};
  std::mutex failure_mutex;
  std::uint64_t failed_rep = std::numeric_limits<std::uint64_t>::max();
  std::exception_ptr failure;

  auto work = [&] {
    for (;;) {
      const std::uint64_t r = next.fetch_add(1);
      if (r >= reps) return;
      try {
        results[r] = simulate(config, {master_seed, first + r});
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (first + r < failed_rep) {
          failed_rep = first + r;
          failure = std::current_exception();
        }
        next.store(reps);
        return;
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

void write_csv(std::ostream& os, std::span<const RunResult> results, std::size_t topk) {
  os << "rep,r_n,r_star,log_w,first_block_log_w,d_stat,m_share,leaf_count";
  for (std::size_t j = 1; j <= topk; ++j) os << ",top_" << j;
  os << '\n';
  for (std::size_t r = 0; r < results.size(); ++r) {
    const auto& res = results[r];
    os << r;
    for (double x : {res.r_n, res.r_star, res.log_w, res.first_block_log_w, res.d_stat, res.m_share}) {
      os << ',';
      put(os, x);
    }
    os << ',' << res.leaf_count;
    for (std::size_t j = 0; j < topk; ++j) {
      os << ',';
      if (j < res.top_scores.size()) put(os, res.top_scores[j]);
    }
    os << '\n';
  }
}

void write_json_lines(std::ostream& os, std::span<const RunResult> results, std::size_t topk) {
  for (std::size_t r = 0; r < results.size(); ++r) {
    const auto& res = results[r];
    nlohmann::ordered_json j;
    j["rep"] = r;
    j["r_n"] = res.r_n;
    j["r_star"] = res.r_star;
    j["log_w"] = res.log_w;
    j["first_block_log_w"] = res.first_block_log_w;
    j["d_stat"] = res.d_stat;
    j["m_share"] = res.m_share;
    j["leaf_count"] = res.leaf_count;
    std::vector<double> top(res.top_scores.begin(),
                            res.top_scores.begin() + static_cast<std::ptrdiff_t>(std::min(topk, res.top_scores.size())));
    j["top"] = top;
    os << j.dump() << '\n';
  }
}

}  // namespace lpmbrw
