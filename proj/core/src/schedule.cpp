#include "blie/schedule.hpp"

#include <cmath>
#include <string>

#include "blie/error.hpp"
#include "blie/geometry.hpp"

namespace blie {

const char* to_string(ScheduleKind kind) noexcept {
  switch (kind) {
    case ScheduleKind::Doubling: return "doubling";
    case ScheduleKind::Ace: return "ace";
    case ScheduleKind::Explicit: return "explicit";
  }
  return "unknown";
}

std::optional<int> dyadic_level(double edge) noexcept {
  if (!(edge > 0.0 && edge <= 1.0)) return std::nullopt;
  int exp = 0;
  const double mant = std::frexp(edge, &exp);  // edge = mant * 2^exp, mant in [0.5, 1)
  if (mant != 0.5) return std::nullopt;
  return 1 - exp;
}

namespace {

void validate(const AceParams& p) {
  if (p.dim < 1) throw Error(ErrorKind::InvalidArgument, "ACE schedule needs dim >= 1");
  if (!(p.zooming_dim >= 0.0) || p.zooming_dim > p.dim)
    throw Error(ErrorKind::InvalidArgument, "ACE schedule needs 0 <= d_z <= d");
  if (!(p.beta > 0.0)) throw Error(ErrorKind::InvalidArgument, "ACE schedule needs beta > 0");
  if (!(p.zooming_dim + p.beta > 1.0))
    throw Error(ErrorKind::InvalidArgument, "ACE schedule needs d_z + beta > 1");
  if (!(p.log2_budget >= 1.0) || !std::isfinite(p.log2_budget))
    throw Error(ErrorKind::InvalidArgument, "ACE schedule needs T >= 2");
}

// The increments decay geometrically; past this size the partial sums no
// longer move in double precision and the levels are frozen.
constexpr double kNegligibleIncrement = 1e-13;
constexpr std::size_t kMaxAcePairs = 1 << 16;

}  // namespace

AceTerms ace_terms(const AceParams& p, std::size_t max_pairs) {
  validate(p);
  const double d = p.dim;
  const double dz = p.zooming_dim;
  AceTerms t;
  t.first_increment = (dz + p.beta - 1.0) / ((dz + p.beta) * (d + p.beta)) * p.log2_budget;
  t.contraction = (d + 1.0 - dz) / (d + p.beta);

  double c = t.first_increment;
  double s = 0.0;
  int previous = 0;  // r_0 = 1
  for (std::size_t k = 0; k < max_pairs; ++k) {
    s += c;
    c *= t.contraction;
    t.partial_sums.push_back(s);
    const int floor_level = static_cast<int>(std::floor(s));
    const int ceil_level = static_cast<int>(std::ceil(s));
    // r_{2k-1} = min(r_{2k-2}, 2^-floor(s_k)), r_{2k} = 2^-ceil(s_k).
    const int odd = std::max(previous, floor_level);
    t.raw_levels.push_back(odd);
    t.raw_levels.push_back(ceil_level);
    previous = ceil_level;
    if (c < kNegligibleIncrement) break;
  }
  return t;
}

EdgeLengthSchedule EdgeLengthSchedule::doubling() {
  return EdgeLengthSchedule(ScheduleKind::Doubling, {}, std::nullopt);
}

EdgeLengthSchedule EdgeLengthSchedule::ace(int dim, double zooming_dim, double beta,
                                           std::uint64_t total_budget) {
  if (total_budget < 2) throw Error(ErrorKind::InvalidArgument, "ACE schedule needs T >= 2");
  return ace(AceParams{dim, zooming_dim, beta, std::log2(static_cast<double>(total_budget))});
}

EdgeLengthSchedule EdgeLengthSchedule::ace(const AceParams& params) {
  const AceTerms terms = ace_terms(params, kMaxAcePairs);
  std::vector<int> emitted;
  int previous = 0;
  for (int level : terms.raw_levels) {
    // A term equal to its predecessor is a skipped batch.
    if (level > previous) {
      emitted.push_back(level);
      previous = level;
    }
  }
  if (!emitted.empty() && emitted.back() > kMaxLevel)
    throw Error(ErrorKind::InvalidArgument, "ACE schedule reaches levels beyond " + std::to_string(kMaxLevel));
  return EdgeLengthSchedule(ScheduleKind::Ace, std::move(emitted), params);
}

EdgeLengthSchedule EdgeLengthSchedule::from_levels(std::vector<int> levels) {
  if (levels.empty()) throw Error(ErrorKind::InvalidArgument, "explicit schedule is empty");
  int previous = -1;
  for (int level : levels) {
    if (level <= previous)
      throw Error(ErrorKind::InvalidArgument, "explicit schedule must be strictly decreasing in edge length");
    if (level > kMaxLevel)
      throw Error(ErrorKind::InvalidArgument, "explicit schedule level exceeds " + std::to_string(kMaxLevel));
    previous = level;
  }
  return EdgeLengthSchedule(ScheduleKind::Explicit, std::move(levels), std::nullopt);
}

EdgeLengthSchedule EdgeLengthSchedule::from_edges(const std::vector<double>& edges) {
  std::vector<int> levels;
  levels.reserve(edges.size());
  for (double e : edges) {
    auto level = dyadic_level(e);
    if (!level) throw Error(ErrorKind::InvalidArgument, "edge length " + std::to_string(e) + " is not 2^-i");
    levels.push_back(*level);
  }
  return from_levels(std::move(levels));
}

std::optional<int> EdgeLengthSchedule::level(std::size_t m) const {
  if (m == 0) throw Error(ErrorKind::InvalidArgument, "schedule index starts at 1");
  if (kind_ == ScheduleKind::Doubling) {
    if (m > static_cast<std::size_t>(kMaxLevel)) return std::nullopt;
    return static_cast<int>(m);
  }
  if (m > levels_.size()) return std::nullopt;
  return levels_[m - 1];
}

std::optional<double> EdgeLengthSchedule::edge(std::size_t m) const {
  auto l = level(m);
  if (!l) return std::nullopt;
  return std::ldexp(1.0, -*l);
}

std::vector<int> EdgeLengthSchedule::levels(std::size_t max_count) const {
  std::vector<int> out;
  for (std::size_t m = 1; m <= max_count; ++m) {
    auto l = level(m);
    if (!l) break;
    out.push_back(*l);
  }
  return out;
}

}  // namespace blie
