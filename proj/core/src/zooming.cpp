#include "blie/zooming.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "blie/error.hpp"
#include "blie/rng.hpp"

namespace blie {

namespace {

void require_oracle(const Instance& instance) {
  if (!instance.has_regret())
    throw Error(ErrorKind::InvalidArgument,
                "zooming statistics need an analytic limit loss and a known optimum ('" + instance.name() + "')");
}

}  // namespace

std::uint64_t zooming_number(const Instance& instance, int level) {
  require_oracle(instance);
  if (level < 0 || level > kMaxLevel) throw Error(ErrorKind::InvalidArgument, "level out of range");
  const std::size_t d = instance.dim();
  if (static_cast<std::uint64_t>(level) * d > 26)
    throw Error(ErrorKind::ResourceLimit, "zooming number at r = 2^-" + std::to_string(level) + " in d = " +
                                              std::to_string(d) + " needs more than 2^26 cubes");
  const double r = std::ldexp(1.0, -level);
  const double threshold = (8.0 * instance.lipschitz() + 8.0) * r;
  const std::uint64_t side = std::uint64_t{1} << level;

  std::uint64_t count = 0;
  std::vector<std::uint64_t> coords(d, 0);
  for (bool done = false; !done;) {
    if (instance.sup_gap(Cube(level, coords)) <= threshold) ++count;
    done = true;
    for (std::size_t j = d; j-- > 0;) {
      if (++coords[j] < side) {
        done = false;
        break;
      }
      coords[j] = 0;
    }
  }
  return count;
}

ZoomingStats fit_zooming_dimension(const Instance& instance, const std::vector<int>& levels) {
  require_oracle(instance);
  const std::set<int> distinct(levels.begin(), levels.end());
  if (distinct.size() < 3) throw Error(ErrorKind::InvalidArgument, "zooming fit needs at least three distinct r");

  ZoomingStats stats;
  stats.exact = instance.limit()->exact_range();
  std::vector<double> xs;
  std::vector<double> ys;
  for (int level : distinct) {
    const std::uint64_t n = zooming_number(instance, level);
    stats.points.push_back({level, std::ldexp(1.0, -level), n});
    if (n > 0) {
      xs.push_back(static_cast<double>(level));  // -log2 r
      ys.push_back(std::log2(static_cast<double>(n)));
    }
  }
  if (xs.size() < 2)
    throw Error(ErrorKind::FitFailed, "fewer than two scales have a non-zero zooming number");

  const double k = static_cast<double>(xs.size());
  double xm = 0.0;
  double ym = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xm += xs[i];
    ym += ys[i];
  }
  xm /= k;
  ym /= k;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - xm) * (xs[i] - xm);
    sxy += (xs[i] - xm) * (ys[i] - ym);
  }
  stats.raw_slope = sxy / sxx;
  stats.fitted_d_z = std::clamp(stats.raw_slope, 0.0, static_cast<double>(instance.dim()));
  stats.fitted_C_z = std::exp2(ym - stats.raw_slope * xm);
  return stats;
}

MeasureEstimate near_optimal_measure(const Instance& instance, double eps, std::uint64_t samples,
                                     std::uint64_t seed) {
  require_oracle(instance);
  if (samples == 0) throw Error(ErrorKind::InvalidArgument, "measure estimate needs samples");
  Rng rng = make_rng(seed, 0x6d656173);
  Point x(instance.dim());
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    for (double& v : x) v = uniform01(rng);
    if (instance.gap(x) < eps) ++hits;
  }
  MeasureEstimate est;
  est.samples = samples;
  est.fraction = static_cast<double>(hits) / static_cast<double>(samples);
  est.standard_error = std::sqrt(est.fraction * (1.0 - est.fraction) / static_cast<double>(samples));
  return est;
}

}  // namespace blie
