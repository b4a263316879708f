#include "blie/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "blie/error.hpp"
#include "blie/rng.hpp"

namespace blie {

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw Error(ErrorKind::ArithmeticOverflow, "budget exceeds 64 bits");
  return out;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) throw Error(ErrorKind::ArithmeticOverflow, "budget exceeds 64 bits");
  return out;
}

}  // namespace

Elimination eliminate(std::span<const double> losses, double width) {
  if (losses.empty()) throw Error(ErrorKind::InvalidArgument, "no losses to compare");
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (!std::isfinite(losses[i])) throw Error(ErrorKind::InvalidLoss, "cube " + std::to_string(i) + " has a non-finite loss");
  }
  Elimination e;
  e.min_loss = *std::min_element(losses.begin(), losses.end());
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (losses[i] - e.min_loss > width) {
      e.eliminated.push_back(i);
    } else {
      e.survivors.push_back(i);
    }
  }
  return e;
}

std::uint64_t budget_for_edge(int level, double beta) {
  if (level < 0) throw Error(ErrorKind::InvalidArgument, "negative level");
  if (!(beta > 0.0)) throw Error(ErrorKind::InvalidArgument, "beta must be positive");
  const double exponent = static_cast<double>(level) * beta;
  if (exponent >= 63.0) throw Error(ErrorKind::ArithmeticOverflow, "per-arm budget exceeds 2^63");
  const double n = std::ceil(std::exp2(exponent));
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(n));
}

std::uint64_t next_grid_point(std::uint64_t t, int level, int next_level, std::size_t dim, std::uint64_t survivors,
                              std::uint64_t n_next) {
  if (next_level <= level) throw Error(ErrorKind::InvalidArgument, "next edge must be strictly smaller");
  if (survivors == 0) throw Error(ErrorKind::InvalidArgument, "at least one survivor required");
  const std::uint64_t children = dyadic_count(dim, next_level - level);
  return checked_add(t, checked_mul(checked_mul(children, survivors), n_next));
}

CleanupResult cleanup(std::vector<Candidate>& candidates, std::uint64_t remaining, Executor& executor) {
  if (candidates.empty()) throw Error(ErrorKind::InvalidArgument, "clean-up needs at least one candidate");
  CleanupResult out;
  out.per_arm = remaining / candidates.size();
  out.leftover = remaining - out.per_arm * candidates.size();
  if (out.per_arm > 0) {
    std::vector<Executor::Query> queries;
    queries.reserve(candidates.size());
    for (const auto& c : candidates) queries.push_back({c.arm, checked_add(c.budget, out.per_arm), c.budget});
    const auto losses = executor.evaluate(std::move(queries));
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      candidates[i].budget += out.per_arm;
      candidates[i].loss = losses[i];
    }
    out.spent = out.per_arm * candidates.size();
    out.evaluated = true;
  }
  out.chosen = argmin_candidate(candidates);
  return out;
}

RunTrace run_blie(const BlieConfig& config, const Instance& instance, Executor& executor) {
  if (!(config.alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "alpha must be positive");
  if (config.total_budget == 0) throw Error(ErrorKind::InvalidArgument, "total budget must be positive");
  const std::size_t d = instance.dim();
  const auto first = config.schedule.level(1);
  if (!first) throw Error(ErrorKind::InvalidArgument, "empty edge-length schedule");

  RunTrace trace;
  trace.algorithm = "blie";
  trace.total_budget = config.total_budget;
  const std::size_t batches_before = executor.batches();

  int level = *first;
  std::uint64_t n = budget_for_edge(level, config.beta);
  const std::uint64_t first_cost = checked_mul(dyadic_count(d, level), n);
  if (first_cost > config.total_budget)
    throw Error(ErrorKind::BudgetTooSmall,
                "the first batch costs " + std::to_string(first_cost) + "; minimum feasible T is " + std::to_string(first_cost));

  Rng rng = make_rng(config.seed, 0x626c6965);
  std::vector<Cube> active = level_cubes(d, level);
  std::vector<Candidate> survivors;
  std::uint64_t spent = 0;

  for (std::size_t m = 1;; ++m) {
    BatchRecord batch;
    batch.index = m;
    batch.level = level;
    batch.budget_per_arm = n;
    std::vector<Executor::Query> queries;
    queries.reserve(active.size());
    batch.arms.reserve(active.size());
    for (const auto& cube : active) {
      Point x = sample_point(cube, rng);
      queries.push_back({x, n, 0});
      batch.arms.push_back({cube, std::move(x), n, 0, 0.0, true});
    }
    const auto losses = executor.evaluate(std::move(queries));
    batch.cost = checked_mul(n, active.size());
    spent = checked_add(spent, batch.cost);
    batch.grid_point = spent;

    const double r = std::ldexp(1.0, -level);
    const Elimination elim = eliminate(losses, config.alpha * r);
    for (std::size_t i = 0; i < losses.size(); ++i) batch.arms[i].loss = losses[i];
    for (std::size_t i : elim.eliminated) batch.arms[i].survived = false;
    survivors.clear();
    for (std::size_t i : elim.survivors) {
      const auto& a = batch.arms[i];
      survivors.push_back({a.cube, a.arm, a.budget, a.loss});
    }
    trace.batches.push_back(std::move(batch));

    const auto next = config.schedule.level(m + 1);
    if (!next) {
      trace.stop_reason = "schedule-exhausted";
      break;
    }
    std::uint64_t next_n = 0;
    std::uint64_t projected = 0;
    try {
      next_n = budget_for_edge(*next, config.beta);
      projected = next_grid_point(spent, level, *next, d, survivors.size(), next_n);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ArithmeticOverflow) throw;
      trace.stop_reason = "budget";
      trace.notes.push_back("projected grid point after batch " + std::to_string(m) + " overflows 64 bits");
      break;
    }
    if (projected >= config.total_budget) {
      trace.stop_reason = "budget";
      trace.projected_grid_point = projected;
      break;
    }

    std::vector<Cube> children;
    children.reserve(survivors.size() * static_cast<std::size_t>(dyadic_count(d, *next - level)));
    for (const auto& s : survivors) {
      auto part = partition(*s.cube, *next);
      children.insert(children.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    std::sort(children.begin(), children.end());
    active = std::move(children);
    level = *next;
    n = next_n;
  }

  const CleanupResult done = cleanup(survivors, config.total_budget - spent, executor);
  if (done.evaluated) {
    BatchRecord batch;
    batch.index = trace.batches.size() + 1;
    batch.level = level;
    batch.budget_per_arm = done.per_arm;
    batch.cost = done.spent;
    batch.label = "cleanup";
    for (const auto& c : survivors) batch.arms.push_back({c.cube, c.arm, c.budget, c.budget - done.per_arm, c.loss, true});
    spent += done.spent;
    batch.grid_point = spent;
    trace.batches.push_back(std::move(batch));
  }
  trace.cleanup_budget = done.per_arm;
  trace.leftover = done.leftover;
  trace.total_spent = spent;
  trace.output_index = done.chosen;
  trace.output = survivors[done.chosen].arm;
  trace.output_loss = survivors[done.chosen].loss;
  trace.candidates = std::move(survivors);
  trace.executor_batches = executor.batches() - batches_before;
  if (instance.has_regret()) trace.simple_regret = instance.gap(trace.output);
  return trace;
}

}  // namespace blie
