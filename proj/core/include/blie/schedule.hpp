#pragma once

// Edge-length sequences {r_m}, m = 1, 2, ... that drive BLiE's batches.
//
// Every edge is dyadic, so a schedule is stored as integer levels with
// r_m = 2^-level(m). Emitted levels are strictly increasing.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace blie {

enum class ScheduleKind { Doubling, Ace, Explicit };

const char* to_string(ScheduleKind kind) noexcept;

struct AceParams {
  int dim = 1;
  double zooming_dim = 0.0;
  double beta = 2.0;
  double log2_budget = 1.0;  // log2 T; kept real so projected schedules past 2^64 work
};

// Intermediate quantities of the ACE construction, exposed for inspection.
struct AceTerms {
  double first_increment = 0.0;      // c_1
  double contraction = 0.0;          // eta
  std::vector<double> partial_sums;  // s_k = c_1 + ... + c_k
  std::vector<int> raw_levels;       // r_1, r_2, ... before skipping (as levels)
};

AceTerms ace_terms(const AceParams& params, std::size_t max_pairs);

class EdgeLengthSchedule {
 public:
  // r_m = 2^-m, unbounded.
  static EdgeLengthSchedule doubling();
  static EdgeLengthSchedule ace(int dim, double zooming_dim, double beta, std::uint64_t total_budget);
  static EdgeLengthSchedule ace(const AceParams& params);
  static EdgeLengthSchedule from_levels(std::vector<int> levels);
  // Each edge must be an exact power 2^-i; the list must be strictly decreasing.
  static EdgeLengthSchedule from_edges(const std::vector<double>& edges);

  ScheduleKind kind() const noexcept { return kind_; }
  bool bounded() const noexcept { return kind_ != ScheduleKind::Doubling; }

  // Level of r_m for m >= 1; nullopt once a finite schedule is exhausted.
  std::optional<int> level(std::size_t m) const;
  std::optional<double> edge(std::size_t m) const;

  // The first `max_count` levels (fewer if the schedule ends earlier).
  std::vector<int> levels(std::size_t max_count) const;

  const std::optional<AceParams>& ace_params() const noexcept { return ace_; }

 private:
  EdgeLengthSchedule(ScheduleKind kind, std::vector<int> levels, std::optional<AceParams> ace)
      : kind_(kind), levels_(std::move(levels)), ace_(ace) {}

  ScheduleKind kind_;
  std::vector<int> levels_;
  std::optional<AceParams> ace_;
};

// Smallest i >= 0 with 2^-i == edge, or nullopt when edge is not dyadic.
std::optional<int> dyadic_level(double edge) noexcept;

}  // namespace blie
