#pragma once

// Dyadic ("standard") cubes of [0,1]^d under the sup-norm.
//
// A cube at level i with integer coordinates c has edge r = 2^-i and occupies
// the half-open box prod_j [c_j r, (c_j + 1) r). The top face along axis j is
// closed when c_j = 2^i - 1, so the cubes of one level tile [0,1]^d exactly
// and every point of the unit cube belongs to exactly one of them.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "blie/rng.hpp"

namespace blie {

using Point = std::vector<double>;

inline constexpr int kMaxLevel = 52;

double sup_norm(std::span<const double> x) noexcept;
double sup_distance(std::span<const double> a, std::span<const double> b) noexcept;

class Cube {
 public:
  Cube(int level, std::vector<std::uint64_t> coords);

  // The whole space [0,1]^d (level 0).
  static Cube unit(std::size_t dim);

  std::size_t dim() const noexcept { return coords_.size(); }
  int level() const noexcept { return level_; }
  const std::vector<std::uint64_t>& coords() const noexcept { return coords_; }

  double edge() const noexcept;
  double lower(std::size_t axis) const noexcept;
  double upper(std::size_t axis) const noexcept;
  Point lower_corner() const;
  Point upper_corner() const;
  double volume() const noexcept;

  bool contains(std::span<const double> x) const noexcept;
  // True when `other` lies inside this cube (same or finer level).
  bool contains(const Cube& other) const noexcept;

  Cube ancestor(int level) const;

  // Level first, then lexicographic coordinates.
  friend auto operator<=>(const Cube&, const Cube&) = default;
  friend bool operator==(const Cube&, const Cube&) = default;

 private:
  int level_;
  std::vector<std::uint64_t> coords_;
};

// Children of `cube` at `target_level`, lexicographic by coordinates.
// Throws invalid-argument unless target_level > cube.level().
std::vector<Cube> partition(const Cube& cube, int target_level);

// All cubes of one level, lexicographic. Level 0 yields the unit cube.
std::vector<Cube> level_cubes(std::size_t dim, int level);

// The unique level-`level` cube containing x (x must lie in [0,1]^d).
Cube locate(std::span<const double> x, int level);

// A point drawn uniformly from the cube's box.
Point sample_point(const Cube& cube, Rng& rng);

// 2^(dim * levels) as an exact integer; throws arithmetic-overflow past 2^63.
std::uint64_t dyadic_count(std::size_t dim, int levels);

}  // namespace blie
