#pragma once

// Batched Lipschitz exploration (BLiE).
//
// Batch m plays one uniformly sampled arm per active cube of edge r_m at
// budget n_m = ceil(r_m^-beta), drops every cube whose loss exceeds the batch
// minimum by more than alpha * r_m, and splits the survivors into cubes of
// edge r_{m+1}. The loop stops once the projected grid point
// t_{m+1} = t_m + (r_m / r_{m+1})^d * |survivors| * n_{m+1} reaches T; the
// remaining budget is spread over the last survivors and the best of them is
// returned.

#include <cstdint>
#include <span>
#include <vector>

#include "blie/executor.hpp"
#include "blie/instance.hpp"
#include "blie/schedule.hpp"
#include "blie/trace.hpp"

namespace blie {

struct BlieConfig {
  double alpha = 4.0;  // 2L + 2 for L = 1
  double beta = 2.0;
  EdgeLengthSchedule schedule = EdgeLengthSchedule::doubling();
  std::uint64_t total_budget = 0;
  std::uint64_t seed = 0;  // arm sampling
};

struct Elimination {
  std::vector<std::size_t> survivors;
  std::vector<std::size_t> eliminated;
  double min_loss = 0.0;
};

// Keeps i when losses[i] - min <= width. Throws invalid-loss naming the first
// non-finite entry.
Elimination eliminate(std::span<const double> losses, double width);

// ceil(2^(level * beta)); arithmetic-overflow past 2^63.
std::uint64_t budget_for_edge(int level, double beta);

// t + 2^((next_level - level) * dim) * survivors * n_next, with overflow checks.
std::uint64_t next_grid_point(std::uint64_t t, int level, int next_level, std::size_t dim, std::uint64_t survivors,
                              std::uint64_t n_next);

struct CleanupResult {
  std::uint64_t per_arm = 0;  // n_f
  std::uint64_t leftover = 0;
  std::uint64_t spent = 0;
  std::size_t chosen = 0;
  bool evaluated = false;
};

// Tops every candidate up by floor(remaining / |candidates|) in one batch and
// picks the argmin of the final losses. Candidates are updated in place.
CleanupResult cleanup(std::vector<Candidate>& candidates, std::uint64_t remaining, Executor& executor);

RunTrace run_blie(const BlieConfig& config, const Instance& instance, Executor& executor);

}  // namespace blie
