#pragma once

#include <cstdint>
#include <string>

#include "blie/executor.hpp"
#include "blie/instance.hpp"
#include "blie/trace.hpp"

namespace blie {

enum class BaselineKind { Uniform, Random, SuccessiveHalving, Hyperband };
enum class RandomPolicy { Even, SuccessiveHalving };

const char* to_string(BaselineKind kind) noexcept;
const char* to_string(RandomPolicy policy) noexcept;

struct BaselineConfig {
  BaselineKind kind = BaselineKind::Uniform;
  std::uint64_t total_budget = 0;
  std::uint64_t seed = 0;
  int uniform_level = 1;           // grid edge r = 2^-uniform_level
  std::uint64_t arms = 1;          // random search and SH
  RandomPolicy policy = RandomPolicy::Even;
  std::uint64_t sh_eta = 2;
  std::uint64_t hb_eta = 3;
  std::uint64_t hb_max_budget = 81;  // R
  bool record_arms = true;  // hyperband: false keeps only batch summaries
};

// One arm per cube of edge 2^-level, each at budget floor(T / 2^(level d)).
RunTrace uniform_search(const BaselineConfig& config, const Instance& instance, Executor& executor);
// N uniform arms; "even" gives each floor(T / N) in one batch, "sh" runs
// successive halving over them.
RunTrace random_search(const BaselineConfig& config, const Instance& instance, Executor& executor);
RunTrace successive_halving(const BaselineConfig& config, const Instance& instance, Executor& executor);
// Brackets s = s_max..0 are repeated until T is used up; the round that would
// overrun T is truncated to the remaining budget.
RunTrace hyperband(const BaselineConfig& config, const Instance& instance, Executor& executor);

RunTrace run_baseline(const BaselineConfig& config, const Instance& instance, Executor& executor);

struct HyperbandBracket {
  int s = 0;
  std::uint64_t arms = 0;     // n_s
  double min_budget = 0.0;    // R * eta^-s
};

std::vector<HyperbandBracket> hyperband_brackets(std::uint64_t max_budget, std::uint64_t eta);

// ceil(log_eta n) in exact integer arithmetic.
int ceil_log(std::uint64_t n, std::uint64_t eta);

}  // namespace blie
