#pragma once

// Objectives with a limit loss mu and a budgeted loss process l(x, n).
//
// The built-in limit losses are increasing functions of ||x||_inf (or of x_1),
// so their range over a closed cube is attained at the near and far corners.
// That makes sup-gap and zooming computations exact for every built-in.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "blie/geometry.hpp"

namespace blie {

enum class NoiseMode { Certified, GaussianMean, Adversarial, External };
enum class Adversary { WorstUp, WorstDown, RandomSign, None };
enum class ToyVariant { Mu1, Mu2 };

const char* to_string(NoiseMode mode) noexcept;
const char* to_string(Adversary adversary) noexcept;
const char* to_string(ToyVariant variant) noexcept;
Adversary parse_adversary(const std::string& name);
ToyVariant parse_toy_variant(const std::string& name);

struct LimitRange {
  double lo = 0.0;
  double hi = 0.0;
};

class LimitLoss {
 public:
  using Function = std::function<double(std::span<const double>)>;

  // offset + ||x||_inf^exponent, exponent >= 1.
  static LimitLoss sup_norm_power(double exponent, double offset = 0.0);
  // offset + x_1.
  static LimitLoss linear(double offset = 0.0);
  static LimitLoss constant(double value);
  // Arbitrary mu; ranges over cubes come from corner/center/grid probing and
  // are only estimates.
  static LimitLoss custom(Function fn, std::string name);

  double operator()(std::span<const double> x) const;
  LimitRange range_over(const Cube& cube) const;
  bool exact_range() const noexcept { return shape_ != Shape::Custom; }
  const std::string& name() const noexcept { return name_; }

 private:
  enum class Shape { SupNormPower, Linear, Constant, Custom };

  LimitLoss(Shape shape, double exponent, double offset, Function fn, std::string name)
      : shape_(shape), exponent_(exponent), offset_(offset), fn_(std::move(fn)), name_(std::move(name)) {}

  Shape shape_;
  double exponent_;
  double offset_;
  Function fn_;
  std::string name_;
};

struct InstanceInfo {
  std::string name;
  std::size_t dim = 1;
  double lipschitz = 1.0;
  double beta = 2.0;  // exponent of the |l(x,n) - mu(x)| <= n^(-1/beta) bound
  NoiseMode mode = NoiseMode::Certified;
  std::optional<Point> optimum_point;
  std::optional<double> optimum_value;
  std::optional<double> zooming_dim;  // known analytically for the toy objectives
};

class Instance {
 public:
  Instance(InstanceInfo info, std::optional<LimitLoss> limit);
  virtual ~Instance() = default;

  Instance(const Instance&) = delete;
  Instance& operator=(const Instance&) = delete;

  const InstanceInfo& info() const noexcept { return info_; }
  std::size_t dim() const noexcept { return info_.dim; }
  double lipschitz() const noexcept { return info_.lipschitz; }
  double beta() const noexcept { return info_.beta; }
  const std::string& name() const noexcept { return info_.name; }

  const std::optional<LimitLoss>& limit() const noexcept { return limit_; }
  bool has_regret() const noexcept { return limit_.has_value() && info_.optimum_value.has_value(); }

  double limit_loss(std::span<const double> x) const;
  // mu(x) - mu*.
  double gap(std::span<const double> x) const;
  // sup over the closed cube of mu(x) - mu*.
  double sup_gap(const Cube& cube) const;

  // l(x, n). Safe to call concurrently; repeated queries return the same value.
  virtual double loss(std::span<const double> x, std::uint64_t budget) const = 0;

 protected:
  void check_point(std::span<const double> x, std::uint64_t budget) const;

 private:
  InstanceInfo info_;
  std::optional<LimitLoss> limit_;
};

// l(x, n) is the mean of n i.i.d. N(mu(x), sigma^2) draws. Each arm owns one
// random walk W(n) = sum_i (Y_i - mu(x)); queried budgets are filled in
// exactly (extension or Brownian bridge), so any query order is coherent with
// a single sample path.
class GaussianMeanInstance final : public Instance {
 public:
  GaussianMeanInstance(InstanceInfo info, LimitLoss limit, double sigma, std::uint64_t seed);

  double loss(std::span<const double> x, std::uint64_t budget) const override;
  double sigma() const noexcept { return sigma_; }
  std::size_t memoized_arms() const;

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::uint64_t>& k) const noexcept;
  };

  double sigma_;
  std::uint64_t seed_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::vector<std::uint64_t>, std::map<std::uint64_t, double>, KeyHash> paths_;
};

// l(x, n) = mu(x) + s * n^(-1/beta) with s fixed by the adversary policy, so
// the error bound holds deterministically (with equality unless s = 0).
class CertifiedInstance final : public Instance {
 public:
  CertifiedInstance(InstanceInfo info, LimitLoss limit, Adversary adversary, std::uint64_t seed);

  double loss(std::span<const double> x, std::uint64_t budget) const override;
  int sign(std::span<const double> x) const noexcept;
  Adversary adversary() const noexcept { return adversary_; }

 private:
  Adversary adversary_;
  std::uint64_t seed_;
};

// mu(x) = 1 + ||x||_inf with losses that defeat uniform search on a grid of
// edge r under budget T. When r < T^(-1/(d+beta)) arms inside [0, g)^d are
// pushed up by n^(-1/beta) and all others down, where g = k0 * r is the first
// grid point with T^(-1/(d+beta))/2 <= g <= T^(-1/(d+beta)). Otherwise
// l(x, n) = mu(x).
class UniformSearchAdversary final : public Instance {
 public:
  UniformSearchAdversary(std::size_t dim, double beta, std::uint64_t total_budget, int grid_level);

  double loss(std::span<const double> x, std::uint64_t budget) const override;

  bool adversarial() const noexcept { return k0_.has_value(); }
  std::optional<std::uint64_t> k0() const noexcept { return k0_; }
  // g = k0 * r, or 0 when the losses are noiseless.
  double threshold() const noexcept { return threshold_; }
  // T^(-1/(d+beta)).
  double critical_edge() const noexcept { return critical_; }
  int grid_level() const noexcept { return grid_level_; }

 private:
  int grid_level_;
  double critical_;
  std::optional<std::uint64_t> k0_;
  double threshold_ = 0.0;
};

// Objective known only through an external evaluator; it has no analytic mu.
class BlackBoxInstance final : public Instance {
 public:
  BlackBoxInstance(std::string name, std::size_t dim);
  double loss(std::span<const double> x, std::uint64_t budget) const override;
};

std::unique_ptr<Instance> toy_instance(ToyVariant variant, std::size_t dim, double sigma, std::uint64_t seed);
std::unique_ptr<Instance> certified_instance(const Instance& base, Adversary adversary, std::uint64_t seed);
std::unique_ptr<UniformSearchAdversary> uniform_search_adversary(std::size_t dim, double beta,
                                                                 std::uint64_t total_budget, int grid_level);
// mu(x) = x_1, noiseless, L = 1.
std::unique_ptr<Instance> linear_instance(std::size_t dim);
// mu(x) = value, noiseless.
std::unique_ptr<Instance> constant_instance(std::size_t dim, double value);

}  // namespace blie
