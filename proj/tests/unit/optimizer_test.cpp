#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <limits>

#include "blie/baselines.hpp"
#include "blie/error.hpp"
#include "blie/optimizer.hpp"

using namespace blie;

namespace {

struct Run {
  std::unique_ptr<Instance> instance;
  RunTrace trace;
};

Run run(std::unique_ptr<Instance> inst, double alpha, std::uint64_t T, std::uint64_t seed,
        EdgeLengthSchedule schedule = EdgeLengthSchedule::doubling()) {
  InProcessBackend backend(*inst);
  Executor ex(backend, 1);
  BlieConfig c;
  c.alpha = alpha;
  c.total_budget = T;
  c.seed = seed;
  c.schedule = std::move(schedule);
  RunTrace t = run_blie(c, *inst, ex);
  return {std::move(inst), std::move(t)};
}

std::unique_ptr<Instance> certified(ToyVariant v, std::size_t d, Adversary adv, std::uint64_t seed) {
  const auto base = toy_instance(v, d, 0.0, 0);
  return certified_instance(*base, adv, seed);
}

}  // namespace

TEST(Eliminate, DirectRule) {
  const double losses[] = {0.10, 0.20, 0.30};
  const auto e = eliminate(losses, 0.15);
  EXPECT_EQ(e.survivors, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(e.eliminated, (std::vector<std::size_t>{2}));
  EXPECT_DOUBLE_EQ(e.min_loss, 0.10);
}

TEST(Eliminate, EqualLossesAndSingleCubeSurvive) {
  const double equal[] = {0.4, 0.4, 0.4};
  EXPECT_EQ(eliminate(equal, 0.0).survivors.size(), 3u);
  const double one[] = {7.0};
  EXPECT_EQ(eliminate(one, 0.0).survivors, (std::vector<std::size_t>{0}));
}

TEST(Eliminate, StrictInequality) {
  const double losses[] = {0.0, 0.5};
  EXPECT_EQ(eliminate(losses, 0.5).survivors.size(), 2u);
}

TEST(Eliminate, NanNamesTheCube) {
  const double losses[] = {0.1, std::nan(""), 0.3};
  try {
    eliminate(losses, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidLoss);
    EXPECT_NE(std::string(e.what()).find("cube 1"), std::string::npos);
  }
}

TEST(BudgetForEdge, CeilingOfPower) {
  EXPECT_EQ(budget_for_edge(3, 2.0), 64u);
  EXPECT_EQ(budget_for_edge(1, 2.5), 6u);
  EXPECT_EQ(budget_for_edge(0, 2.0), 1u);
  EXPECT_THROW(budget_for_edge(32, 2.0), Error);
}

TEST(NextGridPoint, Formula) {
  EXPECT_EQ(next_grid_point(0, 1, 2, 2, 3, 16), 192u);
  EXPECT_EQ(next_grid_point(100, 4, 5, 1, 1, 4), 108u);
  EXPECT_THROW(next_grid_point(0, 2, 2, 1, 1, 4), Error);
  EXPECT_THROW(next_grid_point(0, 2, 3, 1, 0, 4), Error);
}

TEST(NextGridPoint, AgreesWithBigIntegerArithmetic) {
  using boost::multiprecision::cpp_int;
  const cpp_int limit = cpp_int(std::numeric_limits<std::uint64_t>::max());
  Rng rng = make_rng(2024);
  int overflowed = 0;
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t t = rng() >> (rng() % 64);
    const std::uint64_t survivors = 1 + (rng() >> (20 + rng() % 44));
    const std::uint64_t n = 1 + (rng() >> (20 + rng() % 44));
    const int level = static_cast<int>(rng() % 5);
    const int jump = 1 + static_cast<int>(rng() % 3);
    const std::size_t d = 8;
    const cpp_int expected = cpp_int(t) + (cpp_int(1) << (jump * 8)) * survivors * n;
    if (expected > limit) {
      ++overflowed;
      try {
        next_grid_point(t, level, level + jump, d, survivors, n);
        FAIL() << "expected overflow";
      } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ArithmeticOverflow);
      }
    } else {
      EXPECT_EQ(cpp_int(next_grid_point(t, level, level + jump, d, survivors, n)), expected);
    }
  }
  EXPECT_GT(overflowed, 100);
  EXPECT_EQ(next_grid_point(0, 0, 3, 8, 1 << 20, 1 << 19), std::uint64_t{1} << 63);
}

TEST(Cleanup, ZeroRemainingKeepsLastLosses) {
  const auto inst = toy_instance(ToyVariant::Mu1, 1, 0.1, 1);
  InProcessBackend backend(*inst);
  Executor ex(backend, 1);
  std::vector<Candidate> c{{Cube(1, {1}), {0.7}, 4, 0.3}, {Cube(1, {0}), {0.2}, 4, 0.1}};
  const auto r = cleanup(c, 0, ex);
  EXPECT_EQ(r.per_arm, 0u);
  EXPECT_FALSE(r.evaluated);
  EXPECT_EQ(r.chosen, 1u);
  EXPECT_EQ(ex.batches(), 0u);
}

TEST(Cleanup, FloorDivisionAndLeftover) {
  const auto inst = toy_instance(ToyVariant::Mu1, 1, 0.1, 1);
  InProcessBackend backend(*inst);
  Executor ex(backend, 1);
  std::vector<Candidate> c;
  for (std::uint64_t i = 0; i < 4; ++i) c.push_back({Cube(2, {i}), {0.25 * i + 0.1}, 16, 0.0});
  const auto r = cleanup(c, 10, ex);
  EXPECT_EQ(r.per_arm, 2u);
  EXPECT_EQ(r.leftover, 2u);
  EXPECT_EQ(r.spent, 8u);
  EXPECT_EQ(ex.consumed(), 8u);
  for (const auto& k : c) EXPECT_EQ(k.budget, 18u);
}

TEST(Cleanup, TiesGoToTheSmallestCube) {
  const auto inst = constant_instance(1, 0.5);
  InProcessBackend backend(*inst);
  Executor ex(backend, 1);
  std::vector<Candidate> c{{Cube(2, {3}), {0.9}, 4, 0.5}, {Cube(2, {1}), {0.3}, 4, 0.5}, {Cube(2, {2}), {0.6}, 4, 0.5}};
  EXPECT_EQ(cleanup(c, 9, ex).chosen, 1u);
}

TEST(Cleanup, TopUpShrinksTheErrorAndKeepsTheBound) {
  // Certified worst_up mu1, d = 1: after the top-up every candidate's error
  // n^(-1/2) is smaller and the chosen arm is within (4L+4) r_{B-1}.
  auto r = run(certified(ToyVariant::Mu1, 1, Adversary::WorstUp, 3), 4.0, 1 << 12, 3);
  const auto& t = r.trace;
  ASSERT_GT(t.cleanup_budget, 0u);
  const auto& last = t.batches[t.batches.size() - 2];
  for (const auto& c : t.candidates) {
    EXPECT_GT(c.budget, last.budget_per_arm);
    EXPECT_NEAR(c.loss - r.instance->limit_loss(c.arm), 1.0 / std::sqrt(static_cast<double>(c.budget)), 1e-12);
    EXPECT_LT(1.0 / std::sqrt(static_cast<double>(c.budget)), 1.0 / std::sqrt(static_cast<double>(last.budget_per_arm)));
  }
  double best = INFINITY;
  for (const auto& c : t.candidates) best = std::min(best, r.instance->gap(c.arm));
  const double r_prev = std::ldexp(1.0, -(*last.level - 1));
  EXPECT_LE(*t.simple_regret, 8.0 * r_prev);
  EXPECT_GE(*t.simple_regret, best);
}

TEST(RunBlie, OptimalCubeSurvivesAndRegretIsBounded) {
  auto r = run(certified(ToyVariant::Mu1, 1, Adversary::WorstUp, 1), 4.0, 1 << 12, 1);
  const auto& t = r.trace;
  const Point origin{0.0};
  int last_level = 0;
  for (const auto& b : t.batches) {
    if (b.label == "cleanup") continue;
    bool found = false;
    for (const auto& a : b.arms) {
      if (a.cube->contains(origin)) {
        EXPECT_TRUE(a.survived);
        found = true;
      }
    }
    EXPECT_TRUE(found) << "batch " << b.index;
    last_level = *b.level;
  }
  EXPECT_LE(*t.simple_regret, 8.0 * std::ldexp(1.0, -(last_level - 1)));
}

TEST(RunBlie, ConstantObjectiveNeverEliminates) {
  auto r = run(constant_instance(2, 0.5), 4.0, 1 << 14, 5);
  const auto& t = r.trace;
  for (const auto& b : t.batches)
    for (const auto& a : b.arms) EXPECT_TRUE(a.survived);
  EXPECT_EQ(t.stop_reason, "budget");
  EXPECT_DOUBLE_EQ(*t.simple_regret, 0.0);
}

TEST(RunBlie, ChildrenOfSurvivorsBecomeTheNextActiveSet) {
  auto r = run(toy_instance(ToyVariant::Mu1, 2, 0.1, 9), 1.0, 1 << 16, 9);
  const auto& bs = r.trace.batches;
  for (std::size_t m = 0; m + 1 < bs.size() && bs[m + 1].label != "cleanup"; ++m) {
    std::vector<Cube> expected;
    for (const auto& a : bs[m].arms) {
      if (!a.survived) continue;
      auto kids = partition(*a.cube, *bs[m + 1].level);
      expected.insert(expected.end(), kids.begin(), kids.end());
    }
    std::sort(expected.begin(), expected.end());
    std::vector<Cube> actual;
    for (const auto& a : bs[m + 1].arms) actual.push_back(*a.cube);
    EXPECT_EQ(actual, expected);
    // Children draw fresh arms rather than inheriting the parent's.
    for (const auto& a : bs[m + 1].arms) {
      EXPECT_TRUE(a.cube->contains(a.arm));
      EXPECT_EQ(a.budget, budget_for_edge(*bs[m + 1].level, 2.0));
    }
  }
}

TEST(RunBlie, ConcentrationTransferInCertifiedMode) {
  for (auto adv : {Adversary::WorstUp, Adversary::WorstDown, Adversary::RandomSign}) {
    auto r = run(certified(ToyVariant::Mu2, 2, adv, 4), 5.0, 1 << 16, 4);
    const double L = r.instance->lipschitz();
    for (const auto& b : r.trace.batches) {
      if (b.label == "cleanup") continue;
      const double bound = L * b.edge() + std::pow(static_cast<double>(b.budget_per_arm), -0.5);
      for (const auto& a : b.arms) {
        const auto range = r.instance->limit()->range_over(*a.cube);
        EXPECT_LE(std::max(std::abs(a.loss - range.lo), std::abs(a.loss - range.hi)), bound + 1e-12);
      }
    }
  }
}

TEST(RunBlie, BudgetCapAndLeftover) {
  for (std::uint64_t T : {16u, 100u, 1000u, 4096u, 65537u, 300000u}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      auto r = run(toy_instance(ToyVariant::Mu1, 2, 0.1, seed), 4.0, T, seed);
      EXPECT_LE(r.trace.total_spent, T);
      EXPECT_LT(r.trace.leftover, r.trace.candidates.size());
      EXPECT_EQ(r.trace.total_spent + r.trace.leftover, T);
      std::uint64_t sum = 0;
      for (const auto& b : r.trace.batches) sum += b.cost;
      EXPECT_EQ(sum, r.trace.total_spent);
    }
  }
}

TEST(RunBlie, FirstBatchTooExpensive) {
  try {
    run(toy_instance(ToyVariant::Mu1, 2, 0.1, 0), 4.0, 15, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BudgetTooSmall);
    EXPECT_NE(std::string(e.what()).find("minimum feasible T is 16"), std::string::npos) << e.what();
  }
}

TEST(RunBlie, ExhaustedScheduleGoesToCleanup) {
  auto r = run(toy_instance(ToyVariant::Mu1, 2, 0.1, 2), 4.0, 1 << 20, 2, EdgeLengthSchedule::from_levels({1, 2}));
  EXPECT_EQ(r.trace.stop_reason, "schedule-exhausted");
  EXPECT_EQ(r.trace.batches.back().label, "cleanup");
  EXPECT_EQ(r.trace.total_spent + r.trace.leftover, std::uint64_t{1} << 20);
}

TEST(RunBlie, DoublingBatchCount) {
  for (int e = 10; e <= 22; e += 2) {
    const std::uint64_t T = std::uint64_t{1} << e;
    auto r = run(toy_instance(ToyVariant::Mu1, 2, 0.1, 7), 4.0, T, 7);
    std::size_t batches = 0;
    for (const auto& b : r.trace.batches) batches += b.label == "cleanup" ? 0 : 1;
    EXPECT_LE(batches, static_cast<std::size_t>(std::ceil(e / 2.0)) + 2) << "T=2^" << e;
  }
}

TEST(RunBlie, AceScheduleRuns) {
  auto r = run(toy_instance(ToyVariant::Mu1, 2, 0.1, 7), 4.0, 1 << 20, 7,
               EdgeLengthSchedule::ace(2, 0.0, 2.0, 1 << 20));
  EXPECT_LE(r.trace.total_spent, std::uint64_t{1} << 20);
  int prev = 0;
  for (const auto& b : r.trace.batches) {
    if (b.label == "cleanup") continue;
    EXPECT_GT(*b.level, prev);
    prev = *b.level;
  }
}

TEST(RunBlie, Deterministic) {
  auto a = run(toy_instance(ToyVariant::Mu2, 3, 0.1, 11), 2.0, 1 << 18, 11);
  auto b = run(toy_instance(ToyVariant::Mu2, 3, 0.1, 11), 2.0, 1 << 18, 11);
  EXPECT_EQ(trace_to_json(a.trace), trace_to_json(b.trace));
}

TEST(RunBlie, BeatsUniformSearchOnMu1) {
  // d = 2, sigma = 0.1, T = 2^16, 64 paired seeds.
  double blie_sum = 0.0;
  double uniform_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    blie_sum += *run(toy_instance(ToyVariant::Mu1, 2, 0.1, seed), 1.0, 1 << 16, seed).trace.simple_regret;
    const auto inst = toy_instance(ToyVariant::Mu1, 2, 0.1, seed);
    InProcessBackend backend(*inst);
    Executor ex(backend, 1);
    BaselineConfig c;
    c.total_budget = 1 << 16;
    c.seed = seed;
    c.uniform_level = 4;
    uniform_sum += *uniform_search(c, *inst, ex).simple_regret;
  }
  EXPECT_LT(blie_sum, uniform_sum);
}
