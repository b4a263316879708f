#include "blie/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "blie/error.hpp"

namespace blie {

double sup_norm(std::span<const double> x) noexcept {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

double sup_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double m = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t j = 0; j < n; ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

Cube::Cube(int level, std::vector<std::uint64_t> coords) : level_(level), coords_(std::move(coords)) {
  if (coords_.empty()) throw Error(ErrorKind::InvalidArgument, "cube dimension must be positive");
  if (level_ < 0 || level_ > kMaxLevel)
    throw Error(ErrorKind::InvalidArgument, "cube level out of range: " + std::to_string(level_));
  const std::uint64_t side = std::uint64_t{1} << level_;
  for (std::uint64_t c : coords_) {
    if (c >= side)
      throw Error(ErrorKind::InvalidArgument,
                  "cube coordinate " + std::to_string(c) + " outside level " + std::to_string(level_));
  }
}

Cube Cube::unit(std::size_t dim) { return Cube(0, std::vector<std::uint64_t>(dim, 0)); }

double Cube::edge() const noexcept { return std::ldexp(1.0, -level_); }

double Cube::lower(std::size_t axis) const noexcept {
  return std::ldexp(static_cast<double>(coords_[axis]), -level_);
}

double Cube::upper(std::size_t axis) const noexcept {
  return std::ldexp(static_cast<double>(coords_[axis] + 1), -level_);
}

Point Cube::lower_corner() const {
  Point p(dim());
  for (std::size_t j = 0; j < dim(); ++j) p[j] = lower(j);
  return p;
}

Point Cube::upper_corner() const {
  Point p(dim());
  for (std::size_t j = 0; j < dim(); ++j) p[j] = upper(j);
  return p;
}

double Cube::volume() const noexcept {
  return std::ldexp(1.0, -level_ * static_cast<int>(dim()));
}

bool Cube::contains(std::span<const double> x) const noexcept {
  if (x.size() != dim()) return false;
  const std::uint64_t last = (std::uint64_t{1} << level_) - 1;
  for (std::size_t j = 0; j < dim(); ++j) {
    if (x[j] < lower(j)) return false;
    if (coords_[j] == last) {
      if (x[j] > 1.0) return false;
    } else if (x[j] >= upper(j)) {
      return false;
    }
  }
  return true;
}

bool Cube::contains(const Cube& other) const noexcept {
  if (other.dim() != dim() || other.level_ < level_) return false;
  const int shift = other.level_ - level_;
  for (std::size_t j = 0; j < dim(); ++j) {
    if ((other.coords_[j] >> shift) != coords_[j]) return false;
  }
  return true;
}

Cube Cube::ancestor(int level) const {
  if (level < 0 || level > level_)
    throw Error(ErrorKind::InvalidArgument, "ancestor level must be in [0, " + std::to_string(level_) + "]");
  std::vector<std::uint64_t> c(coords_);
  for (auto& v : c) v >>= (level_ - level);
  return Cube(level, std::move(c));
}

std::uint64_t dyadic_count(std::size_t dim, int levels) {
  if (levels < 0) throw Error(ErrorKind::InvalidArgument, "negative level difference");
  const std::uint64_t bits = static_cast<std::uint64_t>(levels) * dim;
  if (bits > 63)
    throw Error(ErrorKind::ArithmeticOverflow,
                "2^" + std::to_string(bits) + " cubes do not fit in a 64-bit count");
  return std::uint64_t{1} << bits;
}

namespace {

// Children are capped well below what fits in memory.
constexpr int kMaxPartitionBits = 30;

}  // namespace

std::vector<Cube> partition(const Cube& cube, int target_level) {
  if (target_level <= cube.level())
    throw Error(ErrorKind::InvalidArgument, "partition target level " + std::to_string(target_level) +
                                                " must exceed cube level " + std::to_string(cube.level()));
  if (target_level > kMaxLevel)
    throw Error(ErrorKind::InvalidArgument, "partition target level exceeds " + std::to_string(kMaxLevel));
  const int shift = target_level - cube.level();
  const std::size_t d = cube.dim();
  if (static_cast<std::uint64_t>(shift) * d > kMaxPartitionBits)
    throw Error(ErrorKind::ResourceLimit, "partition would create 2^" + std::to_string(shift * d) + " cubes");
  const std::uint64_t per_axis = std::uint64_t{1} << shift;
  const std::uint64_t total = dyadic_count(d, shift);

  std::vector<Cube> children;
  children.reserve(total);
  std::vector<std::uint64_t> offset(d, 0);
  std::vector<std::uint64_t> base(d);
  for (std::size_t j = 0; j < d; ++j) base[j] = cube.coords()[j] << shift;
  for (std::uint64_t k = 0; k < total; ++k) {
    std::vector<std::uint64_t> c(d);
    for (std::size_t j = 0; j < d; ++j) c[j] = base[j] + offset[j];
    children.emplace_back(target_level, std::move(c));
    // Odometer with the last axis fastest keeps the output lexicographic.
    for (std::size_t j = d; j-- > 0;) {
      if (++offset[j] < per_axis) break;
      offset[j] = 0;
    }
  }
  return children;
}

std::vector<Cube> level_cubes(std::size_t dim, int level) {
  if (level == 0) return {Cube::unit(dim)};
  return partition(Cube::unit(dim), level);
}

Cube locate(std::span<const double> x, int level) {
  if (x.empty()) throw Error(ErrorKind::InvalidArgument, "cannot locate an empty point");
  const std::uint64_t last = (std::uint64_t{1} << level) - 1;
  std::vector<std::uint64_t> c(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(x[j] >= 0.0 && x[j] <= 1.0))
      throw Error(ErrorKind::InvalidArgument, "point coordinate outside [0,1]");
    const double scaled = std::floor(std::ldexp(x[j], level));
    c[j] = std::min(static_cast<std::uint64_t>(scaled), last);
  }
  return Cube(level, std::move(c));
}

Point sample_point(const Cube& cube, Rng& rng) {
  Point p(cube.dim());
  for (std::size_t j = 0; j < cube.dim(); ++j) {
    const double u = uniform01(rng);
    p[j] = std::ldexp(static_cast<double>(cube.coords()[j]) + u, -cube.level());
    // Rounding of c + u can land on the upper face; pull it back inside.
    if (!(p[j] < cube.upper(j))) p[j] = std::nextafter(cube.upper(j), 0.0);
  }
  return p;
}

}  // namespace blie
