#include "blie/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "blie/error.hpp"
#include "blie/rng.hpp"

namespace blie {

const char* to_string(BaselineKind kind) noexcept {
  switch (kind) {
    case BaselineKind::Uniform: return "uniform";
    case BaselineKind::Random: return "random";
    case BaselineKind::SuccessiveHalving: return "sh";
    case BaselineKind::Hyperband: return "hyperband";
  }
  return "unknown";
}

const char* to_string(RandomPolicy policy) noexcept {
  return policy == RandomPolicy::Even ? "even" : "sh";
}

namespace {

Point uniform_point(std::size_t d, Rng& rng) {
  Point x(d);
  for (auto& v : x) v = uniform01(rng);
  return x;
}

RunTrace start_trace(const char* name, const BaselineConfig& config) {
  if (config.total_budget == 0) throw Error(ErrorKind::InvalidArgument, "total budget must be positive");
  RunTrace t;
  t.algorithm = name;
  t.total_budget = config.total_budget;
  return t;
}

void finish(RunTrace& trace, const Instance& instance, Executor& executor, std::size_t batches_before) {
  trace.output_index = argmin_candidate(trace.candidates);
  trace.output = trace.candidates[trace.output_index].arm;
  trace.output_loss = trace.candidates[trace.output_index].loss;
  trace.leftover = trace.total_budget - trace.total_spent;
  trace.executor_batches = executor.batches() - batches_before;
  if (instance.has_regret()) trace.simple_regret = instance.gap(trace.output);
}

// Evaluates `arms` at cumulative budget `budget` (from `prior`) as one batch.
BatchRecord play(std::vector<ArmRecord> arms, Executor& executor, RunTrace& trace, std::string label) {
  std::vector<Executor::Query> queries;
  queries.reserve(arms.size());
  std::uint64_t cost = 0;
  for (const auto& a : arms) {
    queries.push_back({a.arm, a.budget, a.prior_budget});
    cost += a.budget - a.prior_budget;
  }
  const auto losses = executor.evaluate(std::move(queries));
  BatchRecord b;
  b.index = trace.batches.size() + 1;
  b.label = std::move(label);
  b.budget_per_arm = arms.empty() ? 0 : arms.front().budget - arms.front().prior_budget;
  b.cost = cost;
  trace.total_spent += cost;
  b.grid_point = trace.total_spent;
  for (std::size_t i = 0; i < arms.size(); ++i) arms[i].loss = losses[i];
  b.arms = std::move(arms);
  return b;
}

// Indices of the `keep` smallest losses, stable on ties.
std::vector<std::size_t> best_indices(const std::vector<ArmRecord>& arms, std::size_t keep) {
  std::vector<std::size_t> idx(arms.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return arms[a].loss < arms[b].loss; });
  idx.resize(std::min(keep, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

void successive_halving_over(std::vector<Point> points, std::uint64_t eta, RunTrace& trace, Executor& executor) {
  const std::uint64_t total = trace.total_budget;
  const std::uint64_t n = points.size();
  if (eta < 2) throw Error(ErrorKind::InvalidArgument, "successive halving needs eta >= 2");
  if (n < eta) throw Error(ErrorKind::InvalidArgument, "successive halving needs at least eta arms");
  const int rounds = ceil_log(n, eta);

  std::vector<ArmRecord> current;
  for (auto& p : points) current.push_back({std::nullopt, std::move(p), 0, 0, 0.0, true});
  std::uint64_t divisor = 1;
  for (int k = 0; k < rounds; ++k) {
    const std::size_t size = static_cast<std::size_t>((n + divisor - 1) / divisor);
    if (k > 0) {
      const auto keep = best_indices(current, size);
      auto& prev = trace.batches.back().arms;
      std::vector<ArmRecord> next;
      std::size_t j = 0;
      for (std::size_t i = 0; i < current.size(); ++i) {
        if (j < keep.size() && keep[j] == i) {
          next.push_back(current[i]);
          ++j;
        } else {
          prev[i].survived = false;
        }
      }
      current = std::move(next);
    }
    const std::uint64_t increment = total / (static_cast<std::uint64_t>(current.size()) * rounds);
    if (increment == 0)
      throw Error(ErrorKind::BudgetTooSmall, "round " + std::to_string(k) + " of successive halving gets zero budget per arm");
    for (auto& a : current) {
      a.prior_budget = a.budget;
      a.budget += increment;
    }
    trace.batches.push_back(play(current, executor, trace, "round " + std::to_string(k)));
    current = trace.batches.back().arms;
    divisor *= eta;
  }
  for (const auto& a : current) trace.candidates.push_back({std::nullopt, a.arm, a.budget, a.loss});
}

}  // namespace

int ceil_log(std::uint64_t n, std::uint64_t eta) {
  if (eta < 2 || n == 0) throw Error(ErrorKind::InvalidArgument, "ceil_log needs eta >= 2 and n >= 1");
  int k = 0;
  std::uint64_t p = 1;
  while (p < n) {
    ++k;
    if (p > n / eta) break;  // next power passes n
    p *= eta;
  }
  return k;
}

RunTrace uniform_search(const BaselineConfig& config, const Instance& instance, Executor& executor) {
  RunTrace trace = start_trace("uniform", config);
  const std::size_t before = executor.batches();
  const int level = config.uniform_level;
  if (level < 0 || level > kMaxLevel) throw Error(ErrorKind::InvalidArgument, "grid level out of range");
  const std::uint64_t cubes = dyadic_count(instance.dim(), level);
  const std::uint64_t n = config.total_budget / cubes;
  if (n == 0)
    throw Error(ErrorKind::BudgetTooSmall, std::to_string(cubes) + " cubes exceed the total budget " +
                                               std::to_string(config.total_budget));
  Rng rng = make_rng(config.seed, 0x756e6966);
  std::vector<ArmRecord> arms;
  for (auto& cube : level_cubes(instance.dim(), level)) {
    Point x = sample_point(cube, rng);
    arms.push_back({std::move(cube), std::move(x), n, 0, 0.0, true});
  }
  BatchRecord b = play(std::move(arms), executor, trace, "uniform");
  b.level = level;
  for (const auto& a : b.arms) trace.candidates.push_back({a.cube, a.arm, a.budget, a.loss});
  trace.batches.push_back(std::move(b));
  finish(trace, instance, executor, before);
  return trace;
}

RunTrace random_search(const BaselineConfig& config, const Instance& instance, Executor& executor) {
  RunTrace trace = start_trace("random", config);
  const std::size_t before = executor.batches();
  if (config.arms == 0 || config.arms > config.total_budget)
    throw Error(ErrorKind::InvalidArgument, "random search needs 1 <= N <= T");
  Rng rng = make_rng(config.seed, 0x72616e64);
  std::vector<Point> points;
  points.reserve(config.arms);
  for (std::uint64_t i = 0; i < config.arms; ++i) points.push_back(uniform_point(instance.dim(), rng));
  if (config.policy == RandomPolicy::SuccessiveHalving) {
    trace.algorithm = "random-sh";
    successive_halving_over(std::move(points), config.sh_eta, trace, executor);
  } else {
    const std::uint64_t n = config.total_budget / config.arms;
    std::vector<ArmRecord> arms;
    for (auto& p : points) arms.push_back({std::nullopt, std::move(p), n, 0, 0.0, true});
    trace.batches.push_back(play(std::move(arms), executor, trace, "even"));
    for (const auto& a : trace.batches.back().arms) trace.candidates.push_back({std::nullopt, a.arm, a.budget, a.loss});
  }
  finish(trace, instance, executor, before);
  return trace;
}

RunTrace successive_halving(const BaselineConfig& config, const Instance& instance, Executor& executor) {
  RunTrace trace = start_trace("sh", config);
  const std::size_t before = executor.batches();
  Rng rng = make_rng(config.seed, 0x7368);
  std::vector<Point> points;
  for (std::uint64_t i = 0; i < config.arms; ++i) points.push_back(uniform_point(instance.dim(), rng));
  successive_halving_over(std::move(points), config.sh_eta, trace, executor);
  finish(trace, instance, executor, before);
  return trace;
}

std::vector<HyperbandBracket> hyperband_brackets(std::uint64_t max_budget, std::uint64_t eta) {
  if (eta < 2) throw Error(ErrorKind::InvalidArgument, "hyperband needs eta >= 2");
  if (max_budget < eta) throw Error(ErrorKind::InvalidArgument, "hyperband needs R >= eta");
  int s_max = 0;
  for (std::uint64_t p = eta; p <= max_budget; p *= eta) ++s_max;
  std::vector<HyperbandBracket> out;
  for (int s = s_max; s >= 0; --s) {
    const double pow_s = std::pow(static_cast<double>(eta), s);
    // The ratio is exact for integer data, so ceil is taken on an exact value.
    const std::uint64_t num = static_cast<std::uint64_t>(s_max + 1) * static_cast<std::uint64_t>(pow_s);
    const std::uint64_t den = static_cast<std::uint64_t>(s + 1);
    out.push_back({s, (num + den - 1) / den, static_cast<double>(max_budget) / pow_s});
  }
  return out;
}

RunTrace hyperband(const BaselineConfig& config, const Instance& instance, Executor& executor) {
  RunTrace trace = start_trace("hyperband", config);
  const std::size_t before = executor.batches();
  const std::uint64_t eta = config.hb_eta;
  const std::uint64_t R = config.hb_max_budget;
  if (R > config.total_budget)
    throw Error(ErrorKind::BudgetTooSmall, "max per-arm budget R = " + std::to_string(R) + " exceeds T");
  const auto brackets = hyperband_brackets(R, eta);
  Rng rng = make_rng(config.seed, 0x6862);

  bool exhausted = false;
  for (std::size_t pass = 0; !exhausted; ++pass) {
    for (const auto& br : brackets) {
      const std::size_t first_batch = trace.batches.size();
      std::vector<ArmRecord> current;
      for (std::uint64_t i = 0; i < br.arms; ++i)
        current.push_back({std::nullopt, uniform_point(instance.dim(), rng), 0, 0, 0.0, true});
      for (int i = 0; i <= br.s && !current.empty(); ++i) {
        if (i > 0) {
          const std::size_t keep = static_cast<std::size_t>(std::floor(
              static_cast<double>(br.arms) / std::pow(static_cast<double>(eta), i)));
          const auto idx = best_indices(current, std::max<std::size_t>(keep, 1));
          auto& prev = trace.batches.back().arms;
          std::vector<ArmRecord> next;
          for (std::size_t j = 0, k = 0; j < current.size(); ++j) {
            if (k < idx.size() && idx[k] == j) {
              next.push_back(current[j]);
              ++k;
            } else {
              prev[j].survived = false;
            }
          }
          current = std::move(next);
        }
        const double r_i = br.min_budget * std::pow(static_cast<double>(eta), i);
        const std::uint64_t target = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(r_i + 1e-9)));
        const std::uint64_t prior = current.front().budget;
        std::uint64_t increment = target > prior ? target - prior : 0;
        if (increment == 0) continue;
        const std::uint64_t remaining = config.total_budget - trace.total_spent;
        const std::uint64_t size = current.size();
        std::string label = "pass " + std::to_string(pass) + " bracket " + std::to_string(br.s) + " round " + std::to_string(i);
        if (increment * size > remaining) {
          increment = remaining / size;
          exhausted = true;
          if (increment == 0) break;
          trace.notes.push_back(label + " truncated to " + std::to_string(increment) + " per arm");
        }
        for (auto& a : current) {
          a.prior_budget = a.budget;
          a.budget += increment;
        }
        trace.batches.push_back(play(current, executor, trace, std::move(label)));
        current = trace.batches.back().arms;
        if (exhausted) break;
      }
      // Bracket-final arms: whatever survived to the last evaluated round.
      if (!current.empty() && current.front().budget > 0) {
        const std::size_t best = best_indices(current, 1).front();
        const auto& a = current[best];
        trace.candidates.push_back({std::nullopt, a.arm, a.budget, a.loss});
      }
      if (!config.record_arms) {
        for (std::size_t b = first_batch; b < trace.batches.size(); ++b) trace.batches[b].arms = {};
      }
      if (exhausted) break;
    }
  }
  if (trace.candidates.empty()) throw Error(ErrorKind::BudgetTooSmall, "budget too small for any hyperband round");
  finish(trace, instance, executor, before);
  return trace;
}

RunTrace run_baseline(const BaselineConfig& config, const Instance& instance, Executor& executor) {
  switch (config.kind) {
    case BaselineKind::Uniform: return uniform_search(config, instance, executor);
    case BaselineKind::Random: return random_search(config, instance, executor);
    case BaselineKind::SuccessiveHalving: return successive_halving(config, instance, executor);
    case BaselineKind::Hyperband: return hyperband(config, instance, executor);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown baseline");
}

}  // namespace blie
