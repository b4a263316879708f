// Acceptance suite: criteria 1-10, one PASS/FAIL line each.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "blie/baselines.hpp"
#include "blie/error.hpp"
#include "blie/executor.hpp"
#include "blie/experiment.hpp"
#include "blie/external_evaluator.hpp"
#include "blie/optimizer.hpp"
#include "blie/rng.hpp"
#include "blie/schedule.hpp"
#include "blie/zooming.hpp"
#include "json.hpp"

using namespace blie;

namespace {

// Criterion 9 bookkeeping, filled by every run in 2-7.
struct BudgetLedger {
  std::size_t runs = 0;
  std::size_t over_budget = 0;
  std::size_t bad_leftover = 0;
  std::size_t exceptions = 0;
  std::vector<std::string> first_errors;

  void record(const RunTrace& t, bool blie) {
    ++runs;
    if (t.total_spent > t.total_budget) ++over_budget;
    if (blie && !(t.leftover < t.candidates.size())) ++bad_leftover;
  }
  void fail(const std::string& what) {
    ++runs;
    ++exceptions;
    if (first_errors.size() < 3) first_errors.push_back(what);
  }
};

BudgetLedger ledger;
int failures = 0;

void report(int id, bool pass, const std::string& detail, double seconds) {
  std::printf("criterion %2d: %s  %s  [%.1fs]\n", id, pass ? "PASS" : "FAIL", detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++failures;
}

double since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::optional<RunTrace> blie_run(const Instance& inst, double alpha, std::uint64_t T, std::uint64_t seed,
                                 EdgeLengthSchedule schedule = EdgeLengthSchedule::doubling()) {
  try {
    InProcessBackend backend(inst);
    Executor ex(backend, 1);
    BlieConfig c;
    c.alpha = alpha;
    c.beta = inst.beta();
    c.total_budget = T;
    c.seed = seed;
    c.schedule = std::move(schedule);
    RunTrace t = run_blie(c, inst, ex);
    ledger.record(t, true);
    return t;
  } catch (const std::exception& e) {
    ledger.fail(std::string("blie: ") + e.what());
    return std::nullopt;
  }
}

std::optional<RunTrace> baseline_run(const BaselineConfig& c, const Instance& inst) {
  try {
    InProcessBackend backend(inst);
    Executor ex(backend, 1);
    RunTrace t = run_baseline(c, inst, ex);
    ledger.record(t, false);
    return t;
  } catch (const std::exception& e) {
    ledger.fail(std::string(to_string(c.kind)) + ": " + e.what());
    return std::nullopt;
  }
}

std::uint64_t bench_seed(std::uint64_t T, std::uint64_t rep) { return derive_seed(derive_seed(0, T), rep); }

// ---------------------------------------------------------------------------

void criterion1() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> edges;
  for (int i = 4; i <= 10; ++i) edges.push_back(std::ldexp(1.0, -i));
  std::ostringstream out, err;
  const int rc = cmd_zoom(R"({"kind": "linear", "d": 1})", edges, out, err);
  const double secs = since(start);
  bool ok = rc == 0;
  std::string detail = "exit " + std::to_string(rc);
  if (ok) {
    std::istringstream lines(out.str());
    std::string line;
    for (std::string l; std::getline(lines, l);)
      if (!l.empty()) line = l;
    const auto j = nlohmann::json::parse(line);
    bool counts = j["points"].size() == 7;
    for (const auto& p : j["points"]) counts = counts && p["N_r"].get<std::uint64_t>() == 16;
    const double dz = j["fitted_d_z"].get<double>();
    const double cz = j["fitted_C_z"].get<double>();
    ok = counts && std::abs(dz) <= 1e-9 && std::abs(cz - 16.0) <= 1e-9 && secs < 1.0;
    detail = fmt("N_r all 16: %s, d_z=%.3g, C_z=%.12g", counts ? "yes" : "no", dz, cz);
  }
  report(1, ok, detail, secs);
}

void criteria2and3() {
  const auto start = std::chrono::steady_clock::now();
  std::size_t runs = 0, violations = 0, survived = 0, checked_cubes = 0;
  for (auto variant : {ToyVariant::Mu1, ToyVariant::Mu2}) {
    for (std::size_t d = 1; d <= 3; ++d) {
      const std::uint64_t T = std::uint64_t{1} << (4 * (d + 2));
      for (auto adv : {Adversary::WorstUp, Adversary::WorstDown, Adversary::RandomSign}) {
        for (std::uint64_t s = 0; s < 12; ++s) {
          const std::uint64_t seed = derive_seed(1000 + d, s);
          const auto base = toy_instance(variant, d, 0.0, 0);
          const auto inst = certified_instance(*base, adv, seed);
          const double L = inst->lipschitz();
          const auto t = blie_run(*inst, 2 * L + 2, T, seed);
          ++runs;
          if (!t) continue;
          bool optimum_alive = true;
          double r_prev = 1.0;
          for (const auto& b : t->batches) {
            if (b.label == "cleanup") continue;
            bool seen = false;
            for (const auto& a : b.arms) {
              if (!a.survived) {
                if (a.cube->contains(*inst->info().optimum_point)) optimum_alive = false;
                continue;
              }
              ++checked_cubes;
              if (inst->sup_gap(*a.cube) > (4 * L + 4) * r_prev) ++violations;
              seen = seen || a.cube->contains(*inst->info().optimum_point);
            }
            optimum_alive = optimum_alive && seen;
            r_prev = b.edge();
          }
          if (optimum_alive) ++survived;
        }
      }
    }
  }
  const double secs = since(start);
  report(2, violations == 0 && runs >= 200 && secs < 120.0,
         fmt("%zu runs, %zu surviving cubes checked, %zu violations", runs, checked_cubes, violations), secs);
  report(3, survived == runs, fmt("optimal cube survived in %zu/%zu runs", survived, runs), secs);
}

std::vector<RunTrace> criterion4_runs;

void criterion4() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> xs, ys;
  std::string detail;
  for (int e = 12; e <= 22; e += 2) {
    const std::uint64_t T = std::uint64_t{1} << e;
    double sum = 0.0;
    int n = 0;
    for (std::uint64_t rep = 0; rep < 64; ++rep) {
      const std::uint64_t seed = bench_seed(T, rep);
      const auto inst = toy_instance(ToyVariant::Mu1, 2, 0.1, seed);
      const auto t = blie_run(*inst, 4.0, T, derive_seed(seed, 1));
      if (!t) continue;
      sum += *t->simple_regret;
      ++n;
      criterion4_runs.push_back(*t);
    }
    xs.push_back(e);
    ys.push_back(std::log2(sum / n));
    detail += fmt("2^%d:%.4g ", e, sum / n);
  }
  const double slope = fit_slope(xs, ys);
  const double secs = since(start);
  report(4, slope >= -0.70 && slope <= -0.30 && secs < 600.0, fmt("slope %.3f; mean regret %s", slope, detail.c_str()),
         secs);
}

void criterion5() {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t T = std::uint64_t{1} << 20;
  int wins = 0, losses = 0;
  double blie_sum = 0.0, hb_sum = 0.0;
  for (std::uint64_t rep = 0; rep < 64; ++rep) {
    const std::uint64_t seed = bench_seed(T, rep);
    const auto inst = toy_instance(ToyVariant::Mu1, 4, 0.1, seed);
    const auto b = blie_run(*inst, 1.0, T, derive_seed(seed, 1));
    BaselineConfig hc;
    hc.kind = BaselineKind::Hyperband;
    hc.total_budget = T;
    hc.seed = derive_seed(seed, 1);
    hc.record_arms = false;
    const auto h = baseline_run(hc, *inst);
    if (!b || !h) continue;
    blie_sum += *b->simple_regret;
    hb_sum += *h->simple_regret;
    if (*b->simple_regret < *h->simple_regret) ++wins;
    if (*b->simple_regret > *h->simple_regret) ++losses;
  }
  // One-sided sign test, ties dropped: P(Bin(n, 1/2) >= wins).
  const int n = wins + losses;
  double p = 0.0;
  for (int k = wins; k <= n; ++k)
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  const double secs = since(start);
  report(5, blie_sum < hb_sum && p < 0.05,
         fmt("BLiE mean %.4g vs Hyperband %.4g, wins %d/%d, sign-test p=%.3g", blie_sum / 64, hb_sum / 64, wins, n, p),
         secs);
}

void criterion6() {
  const auto start = std::chrono::steady_clock::now();
  std::size_t worst_excess = 0;
  bool ok = !criterion4_runs.empty();
  for (const auto& t : criterion4_runs) {
    const double log2T = std::log2(static_cast<double>(t.total_budget));
    const auto limit = static_cast<std::size_t>(std::ceil(log2T / 2.0)) + 2;
    if (t.batches.size() > limit) {
      ok = false;
      worst_excess = std::max(worst_excess, t.batches.size() - limit);
    }
  }
  std::string detail = fmt("doubling: %zu runs within ceil(log2 T/2)+2 (incl. clean-up)", criterion4_runs.size());
  for (int d = 1; d <= 3; ++d) {
    for (int e : {10, 20, 40}) {
      const double log2T = e;
      const double bound = 2 * std::log2(log2T) / std::log2((d + 2.0) / (d + 1.0)) + 2;
      const auto schedule = EdgeLengthSchedule::ace(d, 0.0, 2.0, std::uint64_t{1} << e);
      const auto levels = schedule.levels(1000);
      std::size_t distinct = levels.size();
      if (e <= 20 && d == 2) {
        // Also count the edges a real run emits.
        const auto inst = toy_instance(ToyVariant::Mu1, 2, 0.1, 5);
        const auto t = blie_run(*inst, 4.0, std::uint64_t{1} << e, 5, schedule);
        if (!t) {
          ok = false;
          continue;
        }
        std::vector<int> used;
        for (const auto& b : t->batches)
          if (b.level) used.push_back(*b.level);
        used.erase(std::unique(used.begin(), used.end()), used.end());
        ok = ok && used.size() <= bound;
        detail += fmt("; run d=2 T=2^%d: %zu edges", e, used.size());
      }
      ok = ok && distinct <= bound;
      if (d == 2) detail += fmt("; ace d=2 T=2^%d: %zu <= %.1f", e, distinct, bound);
    }
  }
  if (worst_excess) detail += fmt("; worst excess %zu", worst_excess);
  report(6, ok, detail, since(start));
}

void criterion7() {
  const auto start = std::chrono::steady_clock::now();
  bool uniform_ok = true, blie_ok = true;
  std::string detail;
  for (int e : {12, 16, 20}) {
    const std::uint64_t T = std::uint64_t{1} << e;
    const int coarse = e / 3;
    for (int level : {coarse, coarse + 2}) {
      const auto adv = uniform_search_adversary(1, 2.0, T, level);
      const double tau = adv->critical_edge();
      const double r = std::ldexp(1.0, -level);
      double u_sum = 0.0, b_sum = 0.0;
      int u_bad = 0;
      for (std::uint64_t rep = 0; rep < 64; ++rep) {
        const std::uint64_t seed = derive_seed(7, rep);
        BaselineConfig uc;
        uc.kind = BaselineKind::Uniform;
        uc.total_budget = T;
        uc.seed = seed;
        uc.uniform_level = level;
        const auto u = baseline_run(uc, *adv);
        const auto b = blie_run(*adv, 1.0, T, seed);
        if (!u || !b) {
          uniform_ok = blie_ok = false;
          continue;
        }
        const double gap = *u->simple_regret;
        u_sum += gap;
        b_sum += *b->simple_regret;
        if (adv->adversarial()) {
          if (gap < 0.5 * tau) ++u_bad;
        } else {
          // Noiseless regime: the output is a uniform draw from C_1 = [0, r),
          // whose expected gap d/(d+1) r must clear tau/2.
          const auto& cube = *u->candidates[u->output_index].cube;
          if (cube.coords()[0] != 0 || 0.5 * r < 0.5 * tau) ++u_bad;
        }
      }
      uniform_ok = uniform_ok && u_bad == 0;
      if (e >= 16) blie_ok = blie_ok && b_sum < u_sum;
      detail += fmt("T=2^%d r=2^-%d %s: uniform %.4g (bad %d) blie %.4g; ", e, level,
                    adv->adversarial() ? "adv" : "noiseless", u_sum / 64, u_bad, b_sum / 64);
    }
  }
  report(7, uniform_ok && blie_ok, detail, since(start));
}

void criterion8() {
  const auto start = std::chrono::steady_clock::now();
  const auto inst = toy_instance(ToyVariant::Mu1, 2, 0.1, 0);
  const auto stats = fit_zooming_dimension(*inst, {5, 6, 7, 8});
  const double L = inst->lipschitz();
  bool ok = true;
  std::string detail = fmt("d_z=%.3g C_z=%.6g;", stats.fitted_d_z, stats.fitted_C_z);
  for (int k = 2; k <= 6; ++k) {
    const double eps = std::ldexp(1.0, -k);
    const auto m = near_optimal_measure(*inst, eps, 1000000, 80 + k);
    const double bound = stats.fitted_C_z * std::pow(eps / (8 * L + 8), 2.0 - stats.fitted_d_z);
    ok = ok && m.fraction <= bound + 3 * m.standard_error;
    detail += fmt(" eps=2^-%d: %.5g <= %.5g+3*%.2g", k, m.fraction, bound, m.standard_error);
  }
  report(8, ok, detail, since(start));
}

void criterion9() {
  const bool ok = ledger.runs > 0 && ledger.over_budget == 0 && ledger.bad_leftover == 0 && ledger.exceptions == 0;
  std::string detail = fmt("%zu runs: %zu over budget, %zu leftover >= |X_c|, %zu exceptions", ledger.runs,
                           ledger.over_budget, ledger.bad_leftover, ledger.exceptions);
  for (const auto& e : ledger.first_errors) detail += "; " + e;
  report(9, ok, detail, 0.0);
}

void criterion10() {
  const auto start = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  try {
    const auto base = toy_instance(ToyVariant::Mu1, 3, 0.0, 0);
    const auto local = certified_instance(*base, Adversary::None, 0);
    ExternalSpec spec;
    spec.command = {BLIE_STUB_EVALUATOR};
    spec.timeout = std::chrono::seconds(30);
    ExternalBackend external(spec);
    InProcessBackend in_process(*local);

    Rng rng = make_rng(10);
    std::vector<EvalRequest> reqs;
    for (std::uint64_t i = 0; i < 100; ++i) {
      EvalRequest r;
      r.request_id = i;
      r.point = {uniform01(rng), uniform01(rng), uniform01(rng)};
      r.prior_budget = rng() % 1000;
      r.cumulative_budget = r.prior_budget + 1 + rng() % 1000;
      reqs.push_back(std::move(r));
    }
    const auto a = run_batch(reqs, external, 1);
    const auto b = run_batch(reqs, in_process, 1);
    std::size_t same = 0;
    for (std::size_t i = 0; i < reqs.size(); ++i)
      same += a[i].request_id == b[i].request_id && std::bit_cast<std::uint64_t>(a[i].loss) ==
                                                        std::bit_cast<std::uint64_t>(b[i].loss);
    ok = same == reqs.size();
    detail = fmt("%zu/100 bit-identical", same);
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  report(10, ok, detail, since(start));
}

}  // namespace

int main() {
  criterion1();
  criteria2and3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
