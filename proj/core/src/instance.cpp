#include "blie/instance.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "blie/error.hpp"
#include "blie/rng.hpp"

namespace blie {

const char* to_string(NoiseMode mode) noexcept {
  switch (mode) {
    case NoiseMode::Certified: return "certified";
    case NoiseMode::GaussianMean: return "gaussian-mean";
    case NoiseMode::Adversarial: return "adversarial";
    case NoiseMode::External: return "external";
  }
  return "unknown";
}

const char* to_string(Adversary adversary) noexcept {
  switch (adversary) {
    case Adversary::WorstUp: return "worst_up";
    case Adversary::WorstDown: return "worst_down";
    case Adversary::RandomSign: return "random_sign";
    case Adversary::None: return "none";
  }
  return "unknown";
}

const char* to_string(ToyVariant variant) noexcept {
  return variant == ToyVariant::Mu1 ? "mu1" : "mu2";
}

Adversary parse_adversary(const std::string& name) {
  if (name == "worst_up") return Adversary::WorstUp;
  if (name == "worst_down") return Adversary::WorstDown;
  if (name == "random_sign") return Adversary::RandomSign;
  if (name == "none" || name == "zero") return Adversary::None;
  throw Error(ErrorKind::InvalidArgument, "unknown adversary '" + name + "'");
}

ToyVariant parse_toy_variant(const std::string& name) {
  if (name == "mu1") return ToyVariant::Mu1;
  if (name == "mu2") return ToyVariant::Mu2;
  throw Error(ErrorKind::InvalidArgument, "unknown toy variant '" + name + "'");
}

// ---------------------------------------------------------------------------
// LimitLoss

LimitLoss LimitLoss::sup_norm_power(double exponent, double offset) {
  if (!(exponent >= 1.0)) throw Error(ErrorKind::InvalidArgument, "sup-norm exponent must be >= 1");
  std::string name = exponent == 1.0 ? "||x||_inf" : "||x||_inf^" + std::to_string(exponent);
  if (offset != 0.0) name = std::to_string(offset) + " + " + name;
  return LimitLoss(Shape::SupNormPower, exponent, offset, nullptr, std::move(name));
}

LimitLoss LimitLoss::linear(double offset) {
  return LimitLoss(Shape::Linear, 1.0, offset, nullptr, "x_1");
}

LimitLoss LimitLoss::constant(double value) {
  return LimitLoss(Shape::Constant, 0.0, value, nullptr, "constant");
}

LimitLoss LimitLoss::custom(Function fn, std::string name) {
  if (!fn) throw Error(ErrorKind::InvalidArgument, "custom limit loss needs a callable");
  return LimitLoss(Shape::Custom, 0.0, 0.0, std::move(fn), std::move(name));
}

double LimitLoss::operator()(std::span<const double> x) const {
  switch (shape_) {
    case Shape::SupNormPower: {
      const double t = sup_norm(x);
      return offset_ + (exponent_ == 1.0 ? t : std::pow(t, exponent_));
    }
    case Shape::Linear: return offset_ + x[0];
    case Shape::Constant: return offset_;
    case Shape::Custom: return fn_(x);
  }
  return 0.0;
}

namespace {

constexpr std::size_t kMaxProbes = 4096;

LimitRange probe_range(const LimitLoss::Function& fn, const Cube& cube) {
  const std::size_t d = cube.dim();
  LimitRange range{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  auto visit = [&](const Point& p) {
    const double v = fn(p);
    range.lo = std::min(range.lo, v);
    range.hi = std::max(range.hi, v);
  };
  std::size_t per_axis = 2;
  while (true) {
    const double next = std::pow(static_cast<double>(per_axis + 1), static_cast<double>(d));
    if (next > kMaxProbes) break;
    ++per_axis;
  }
  // Regular grid including both faces; per_axis >= 2 always covers the corners
  // when 2^d fits the probe budget.
  std::vector<std::size_t> idx(d, 0);
  Point p(d);
  const double total = std::pow(static_cast<double>(per_axis), static_cast<double>(d));
  if (total <= static_cast<double>(kMaxProbes)) {
    for (bool done = false; !done;) {
      for (std::size_t j = 0; j < d; ++j) {
        const double t = static_cast<double>(idx[j]) / static_cast<double>(per_axis - 1);
        p[j] = cube.lower(j) + t * (cube.upper(j) - cube.lower(j));
      }
      visit(p);
      done = true;
      for (std::size_t j = d; j-- > 0;) {
        if (++idx[j] < per_axis) {
          done = false;
          break;
        }
        idx[j] = 0;
      }
    }
  }
  for (std::size_t j = 0; j < d; ++j) p[j] = 0.5 * (cube.lower(j) + cube.upper(j));
  visit(p);
  return range;
}

}  // namespace

LimitRange LimitLoss::range_over(const Cube& cube) const {
  switch (shape_) {
    case Shape::SupNormPower: {
      double near = 0.0;
      double far = 0.0;
      for (std::size_t j = 0; j < cube.dim(); ++j) {
        near = std::max(near, cube.lower(j));
        far = std::max(far, cube.upper(j));
      }
      if (exponent_ != 1.0) {
        near = std::pow(near, exponent_);
        far = std::pow(far, exponent_);
      }
      return {offset_ + near, offset_ + far};
    }
    case Shape::Linear: return {offset_ + cube.lower(0), offset_ + cube.upper(0)};
    case Shape::Constant: return {offset_, offset_};
    case Shape::Custom: return probe_range(fn_, cube);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Instance

Instance::Instance(InstanceInfo info, std::optional<LimitLoss> limit)
    : info_(std::move(info)), limit_(std::move(limit)) {
  if (info_.dim == 0) throw Error(ErrorKind::InvalidArgument, "instance dimension must be positive");
  if (!(info_.lipschitz > 0.0)) throw Error(ErrorKind::InvalidArgument, "Lipschitz constant must be positive");
  if (!(info_.beta > 0.0)) throw Error(ErrorKind::InvalidArgument, "beta must be positive");
}

double Instance::limit_loss(std::span<const double> x) const {
  if (!limit_) throw Error(ErrorKind::InvalidArgument, "instance '" + name() + "' has no analytic limit loss");
  return (*limit_)(x);
}

double Instance::gap(std::span<const double> x) const {
  if (!has_regret()) throw Error(ErrorKind::InvalidArgument, "instance '" + name() + "' has no known optimum");
  return limit_loss(x) - *info_.optimum_value;
}

double Instance::sup_gap(const Cube& cube) const {
  if (!has_regret()) throw Error(ErrorKind::InvalidArgument, "instance '" + name() + "' has no known optimum");
  return limit_->range_over(cube).hi - *info_.optimum_value;
}

void Instance::check_point(std::span<const double> x, std::uint64_t budget) const {
  if (x.size() != dim())
    throw Error(ErrorKind::InvalidArgument, "point has dimension " + std::to_string(x.size()) + ", instance '" +
                                                name() + "' expects " + std::to_string(dim()));
  for (double v : x)
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::InvalidArgument, "point lies outside [0,1]^d");
  if (budget == 0) throw Error(ErrorKind::InvalidArgument, "budget must be positive");
}

// ---------------------------------------------------------------------------
// GaussianMeanInstance

GaussianMeanInstance::GaussianMeanInstance(InstanceInfo info, LimitLoss limit, double sigma, std::uint64_t seed)
    : Instance(std::move(info), std::move(limit)), sigma_(sigma), seed_(seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw Error(ErrorKind::InvalidArgument, "sigma must be finite and non-negative");
}

std::size_t GaussianMeanInstance::KeyHash::operator()(const std::vector<std::uint64_t>& k) const noexcept {
  std::uint64_t h = k.size();
  for (std::uint64_t v : k) h = derive_seed(h, v);
  return static_cast<std::size_t>(h);
}

double GaussianMeanInstance::loss(std::span<const double> x, std::uint64_t budget) const {
  check_point(x, budget);
  const double mu = limit_loss(x);
  if (sigma_ == 0.0) return mu;

  std::vector<std::uint64_t> key(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) key[j] = std::bit_cast<std::uint64_t>(x[j]);
  const double z = standard_normal(derive_seed(hash_point(seed_, x), budget));
  const double n = static_cast<double>(budget);

  std::lock_guard lock(mutex_);
  auto& path = paths_[key];
  if (auto hit = path.find(budget); hit != path.end()) return mu + hit->second / n;

  // W is Brownian at integer times with Var W(n) = sigma^2 n and W(0) = 0.
  double walk = 0.0;
  auto above = path.upper_bound(budget);
  const std::uint64_t lo_n = above == path.begin() ? 0 : std::prev(above)->first;
  const double lo_w = above == path.begin() ? 0.0 : std::prev(above)->second;
  if (above == path.end()) {
    walk = lo_w + sigma_ * std::sqrt(n - static_cast<double>(lo_n)) * z;
  } else {
    const double a = static_cast<double>(lo_n);
    const double b = static_cast<double>(above->first);
    const double mean = lo_w + (n - a) / (b - a) * (above->second - lo_w);
    const double var = sigma_ * sigma_ * (n - a) * (b - n) / (b - a);
    walk = mean + std::sqrt(var) * z;
  }
  path.emplace(budget, walk);
  return mu + walk / n;
}

std::size_t GaussianMeanInstance::memoized_arms() const {
  std::lock_guard lock(mutex_);
  return paths_.size();
}

// ---------------------------------------------------------------------------
// CertifiedInstance

CertifiedInstance::CertifiedInstance(InstanceInfo info, LimitLoss limit, Adversary adversary, std::uint64_t seed)
    : Instance(std::move(info), std::move(limit)), adversary_(adversary), seed_(seed) {}

int CertifiedInstance::sign(std::span<const double> x) const noexcept {
  switch (adversary_) {
    case Adversary::WorstUp: return 1;
    case Adversary::WorstDown: return -1;
    case Adversary::RandomSign: return (hash_point(seed_, x) & 1U) ? 1 : -1;
    case Adversary::None: return 0;
  }
  return 0;
}

double CertifiedInstance::loss(std::span<const double> x, std::uint64_t budget) const {
  check_point(x, budget);
  const int s = sign(x);
  const double mu = limit_loss(x);
  if (s == 0) return mu;
  return mu + s * std::pow(static_cast<double>(budget), -1.0 / beta());
}

// ---------------------------------------------------------------------------
// UniformSearchAdversary

namespace {

InstanceInfo adversary_info(std::size_t dim, double beta) {
  InstanceInfo info;
  info.name = "uniform-search-adversary";
  info.dim = dim;
  info.lipschitz = 1.0;
  info.beta = beta;
  info.mode = NoiseMode::Adversarial;
  info.optimum_point = Point(dim, 0.0);
  info.optimum_value = 1.0;
  info.zooming_dim = 0.0;
  return info;
}

}  // namespace

UniformSearchAdversary::UniformSearchAdversary(std::size_t dim, double beta, std::uint64_t total_budget,
                                               int grid_level)
    : Instance(adversary_info(dim, beta), LimitLoss::sup_norm_power(1.0, 1.0)), grid_level_(grid_level) {
  if (grid_level < 0 || grid_level > kMaxLevel)
    throw Error(ErrorKind::InvalidArgument, "grid level out of range");
  if (total_budget == 0) throw Error(ErrorKind::InvalidArgument, "total budget must be positive");
  const std::uint64_t cells = dyadic_count(dim, grid_level);
  if (cells > total_budget)
    throw Error(ErrorKind::InvalidArgument, "grid has " + std::to_string(cells) + " cubes, more than T = " +
                                                std::to_string(total_budget));
  const double d = static_cast<double>(dim);
  const double log2_critical = -std::log2(static_cast<double>(total_budget)) / (d + beta);
  critical_ = std::exp2(log2_critical);
  const double r = std::ldexp(1.0, -grid_level);
  // r >= T^(-1/(d+beta)) compared on log2 scale so that exact powers of two
  // land on the noiseless side.
  if (-static_cast<double>(grid_level) >= log2_critical - 1e-12) return;

  const std::uint64_t marginal = std::uint64_t{1} << grid_level;
  const auto first = static_cast<std::uint64_t>(std::ceil(0.5 * critical_ / r));
  for (std::uint64_t k = std::max<std::uint64_t>(first, 1); k <= marginal; ++k) {
    const double g = static_cast<double>(k) * r;  // f(g) - mu* = g
    if (g > critical_) break;
    if (g >= 0.5 * critical_) {
      k0_ = k;
      threshold_ = g;
      return;
    }
  }
  throw Error(ErrorKind::ConstructionInfeasible,
              "no grid point k*r in [T^(-1/(d+beta))/2, T^(-1/(d+beta))] for r = 2^-" + std::to_string(grid_level) +
                  ", T^(-1/(d+beta)) = " + std::to_string(critical_));
}

double UniformSearchAdversary::loss(std::span<const double> x, std::uint64_t budget) const {
  check_point(x, budget);
  const double mu = limit_loss(x);
  if (!k0_) return mu;
  const double bump = std::pow(static_cast<double>(budget), -1.0 / beta());
  return sup_norm(x) < threshold_ ? mu + bump : mu - bump;
}

// ---------------------------------------------------------------------------
// BlackBoxInstance

BlackBoxInstance::BlackBoxInstance(std::string name, std::size_t dim)
    : Instance(InstanceInfo{std::move(name), dim, 1.0, 2.0, NoiseMode::External, {}, {}, {}}, std::nullopt) {}

double BlackBoxInstance::loss(std::span<const double>, std::uint64_t) const {
  throw Error(ErrorKind::InvalidArgument, "instance '" + name() + "' is only evaluable through an external evaluator");
}

// ---------------------------------------------------------------------------
// Factories

std::unique_ptr<Instance> toy_instance(ToyVariant variant, std::size_t dim, double sigma, std::uint64_t seed) {
  if (dim == 0) throw Error(ErrorKind::InvalidArgument, "toy instance needs d >= 1");
  InstanceInfo info;
  info.name = to_string(variant);
  info.dim = dim;
  info.beta = 2.0;
  info.mode = NoiseMode::GaussianMean;
  info.optimum_point = Point(dim, 0.0);
  info.optimum_value = 0.0;
  const bool first = variant == ToyVariant::Mu1;
  // t^1.5 has derivative 1.5 at t = 1, which is the tight constant on [0,1].
  info.lipschitz = first ? 1.0 : 1.5;
  info.zooming_dim = first ? 0.0 : static_cast<double>(dim) / 3.0;
  auto limit = LimitLoss::sup_norm_power(first ? 1.0 : 1.5);
  return std::make_unique<GaussianMeanInstance>(std::move(info), std::move(limit), sigma, seed);
}

std::unique_ptr<Instance> certified_instance(const Instance& base, Adversary adversary, std::uint64_t seed) {
  if (!base.limit())
    throw Error(ErrorKind::InvalidArgument, "certified instance needs a base with analytic limit loss");
  InstanceInfo info = base.info();
  info.name = "certified(" + base.name() + "," + to_string(adversary) + ")";
  info.mode = NoiseMode::Certified;
  return std::make_unique<CertifiedInstance>(std::move(info), *base.limit(), adversary, seed);
}

std::unique_ptr<UniformSearchAdversary> uniform_search_adversary(std::size_t dim, double beta,
                                                                 std::uint64_t total_budget, int grid_level) {
  return std::make_unique<UniformSearchAdversary>(dim, beta, total_budget, grid_level);
}

std::unique_ptr<Instance> linear_instance(std::size_t dim) {
  InstanceInfo info;
  info.name = "linear";
  info.dim = dim;
  info.lipschitz = 1.0;
  info.mode = NoiseMode::Certified;
  info.optimum_point = Point(dim, 0.0);
  info.optimum_value = 0.0;
  info.zooming_dim = 0.0;
  return std::make_unique<CertifiedInstance>(std::move(info), LimitLoss::linear(), Adversary::None, 0);
}

std::unique_ptr<Instance> constant_instance(std::size_t dim, double value) {
  InstanceInfo info;
  info.name = "constant";
  info.dim = dim;
  info.lipschitz = 1.0;
  info.mode = NoiseMode::Certified;
  info.optimum_point = Point(dim, 0.0);
  info.optimum_value = value;
  info.zooming_dim = static_cast<double>(dim);
  return std::make_unique<CertifiedInstance>(std::move(info), LimitLoss::constant(value), Adversary::None, 0);
}

}  // namespace blie
