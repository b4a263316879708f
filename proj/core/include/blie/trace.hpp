#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blie/geometry.hpp"

namespace blie {

struct ArmRecord {
  std::optional<Cube> cube;  // set for partition-based algorithms
  Point arm;
  std::uint64_t budget = 0;  // cumulative budget of this evaluation
  std::uint64_t prior_budget = 0;
  double loss = 0.0;
  bool survived = true;
};

struct BatchRecord {
  std::size_t index = 0;         // 1-based
  std::optional<int> level;      // BLiE and uniform search: edge 2^-level
  std::uint64_t budget_per_arm = 0;
  std::uint64_t grid_point = 0;  // cumulative spend once this batch completes
  std::uint64_t cost = 0;
  std::string label;             // e.g. "cleanup", "bracket 2 round 0"
  std::vector<ArmRecord> arms;

  std::size_t survivors() const noexcept;
  double edge() const noexcept;  // 0 when level is unset
};

struct Candidate {
  std::optional<Cube> cube;
  Point arm;
  std::uint64_t budget = 0;
  double loss = 0.0;
};

struct RunTrace {
  std::string algorithm;
  std::uint64_t total_budget = 0;
  std::uint64_t total_spent = 0;
  std::vector<BatchRecord> batches;
  std::vector<Candidate> candidates;
  std::uint64_t cleanup_budget = 0;  // n_f
  std::uint64_t leftover = 0;        // budget left unspent after clean-up
  std::size_t executor_batches = 0;
  std::string stop_reason;
  std::optional<std::uint64_t> projected_grid_point;  // t_{m+1} that ended the loop
  std::size_t output_index = 0;                       // into candidates
  Point output;
  double output_loss = 0.0;
  std::optional<double> simple_regret;
  std::vector<std::string> notes;
};

// Serialized with the cube, arm and loss of every evaluation.
std::string trace_to_json(const RunTrace& trace, int indent = 1);

// Index of the smallest loss; ties go to the lexicographically smallest cube,
// then to the lowest index.
std::size_t argmin_candidate(const std::vector<Candidate>& candidates);

}  // namespace blie
