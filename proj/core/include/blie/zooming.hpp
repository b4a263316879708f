#pragma once

// Zooming numbers N_r and a least-squares estimate of the zooming dimension.
//
// N_r counts the standard cubes of edge r lying entirely inside the
// near-optimal set {x : mu(x) - mu* <= (8L + 8) r}. Fitting log2 N_r against
// -log2 r over several scales gives the slope d_z and the constant C_z with
// N_r ~= C_z r^(-d_z).

#include <cstddef>
#include <cstdint>
#include <vector>

#include "blie/instance.hpp"

namespace blie {

// Largest number of cubes enumerated by zooming_number.
inline constexpr std::uint64_t kMaxZoomingCubes = std::uint64_t{1} << 26;

struct ZoomingPoint {
  int level = 0;
  double r = 1.0;
  std::uint64_t count = 0;
};

struct ZoomingStats {
  std::vector<ZoomingPoint> points;
  double fitted_d_z = 0.0;  // slope clamped to [0, d]
  double fitted_C_z = 0.0;  // 2^intercept
  double raw_slope = 0.0;
  // False when mu's cube ranges came from probing, in which case the counts
  // are upper-bound estimates.
  bool exact = true;
};

// N_r for r = 2^-level. Requires an analytic mu and a known optimum.
std::uint64_t zooming_number(const Instance& instance, int level);

// Needs at least three distinct levels.
ZoomingStats fit_zooming_dimension(const Instance& instance, const std::vector<int>& levels);

struct MeasureEstimate {
  double fraction = 0.0;
  double standard_error = 0.0;
  std::uint64_t samples = 0;
};

// Monte-Carlo estimate of the Lebesgue measure of {x : mu(x) - mu* < eps}.
MeasureEstimate near_optimal_measure(const Instance& instance, double eps, std::uint64_t samples,
                                     std::uint64_t seed);

}  // namespace blie
