#pragma once

// Config files, single runs, benchmark suites and zooming reports: the layer
// behind the `blie` command-line tool.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "blie/baselines.hpp"
#include "blie/executor.hpp"
#include "blie/instance.hpp"
#include "blie/schedule.hpp"
#include "blie/trace.hpp"
#include "blie/zooming.hpp"

namespace blie {

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::Doubling;
  double zooming_dim = 0.0;  // ace
  std::vector<int> levels;   // explicit

  friend bool operator==(const ScheduleSpec&, const ScheduleSpec&) = default;
};

struct AlgorithmSpec {
  std::string name = "blie";  // blie | uniform | random | sh | hyperband
  double alpha = 4.0;
  double beta = 2.0;
  ScheduleSpec schedule;
  std::optional<int> level;           // uniform; default floor(log2 T / (d + beta))
  std::optional<std::uint64_t> arms;  // random, sh; default 2^(level d)
  RandomPolicy policy = RandomPolicy::Even;
  std::optional<std::uint64_t> eta;   // sh default 2, hyperband default 3
  std::uint64_t max_budget = 81;      // hyperband R

  friend bool operator==(const AlgorithmSpec&, const AlgorithmSpec&) = default;
};

struct InstanceSpec {
  std::string kind = "toy";  // toy | certified | adversary | linear | constant
  std::string variant = "mu1";
  std::size_t dim = 2;
  double sigma = 0.1;
  std::string base = "toy";  // certified: toy | linear | constant
  Adversary adversary = Adversary::WorstUp;
  double value = 0.5;        // constant
  double beta = 2.0;         // adversary
  std::optional<int> level;  // adversary grid level

  friend bool operator==(const InstanceSpec&, const InstanceSpec&) = default;
};

struct EvaluatorSpec {
  std::vector<std::string> command;
  std::string workdir;
  double timeout_s = 3600.0;
  std::size_t dim = 1;

  friend bool operator==(const EvaluatorSpec&, const EvaluatorSpec&) = default;
};

struct ExperimentConfig {
  AlgorithmSpec algorithm;
  std::optional<InstanceSpec> instance;
  std::optional<EvaluatorSpec> evaluator;
  std::uint64_t budget = 0;
  std::uint64_t seed = 0;
  std::uint64_t replicates = 1;
  std::vector<std::uint64_t> t_grid;
  std::string output = ".";
  std::optional<std::size_t> parallelism;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// All parse failures raise invalid-config.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);
InstanceSpec parse_instance_spec(const std::string& text);

std::unique_ptr<Instance> make_instance(const InstanceSpec& spec, std::uint64_t total_budget, std::uint64_t seed);
// Short identifier used in run ids, e.g. "mu1-d2".
std::string instance_label(const InstanceSpec& spec);

// Dispatches to BLiE or a baseline, filling in size-dependent defaults.
RunTrace run_algorithm(const AlgorithmSpec& spec, const Instance& instance, Executor& executor,
                       std::uint64_t total_budget, std::uint64_t seed);

struct ResultRow {
  std::string run_id;
  std::string algorithm;
  std::string instance;
  std::uint64_t T = 0;
  std::uint64_t seed = 0;
  std::size_t batches = 0;
  std::uint64_t total_spent = 0;
  std::optional<double> best_loss;  // empty for failed runs
  std::optional<double> simple_regret;
  std::uint64_t wall_time_ms = 0;
};

std::string csv_header();
std::string to_csv(const ResultRow& row);
ResultRow make_row(std::string run_id, std::string instance, std::uint64_t T, std::uint64_t seed,
                   const RunTrace& trace, std::uint64_t wall_time_ms);

// Least-squares slope of ys against xs.
double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys);

// Exit status: 0 ok, 1 run error, 2 invalid config.
int cmd_run(const std::string& config_path, std::ostream& out, std::ostream& err);

struct BenchOptions {
  std::string suite = "toy";  // toy | adversary | schedules
  std::vector<std::uint64_t> t_grid;
  std::uint64_t replicates = 64;
  std::vector<std::string> algos;
  std::string out_dir = "bench-out";
  std::size_t dim = 2;
  std::string variant = "mu1";
  double sigma = 0.1;
  double alpha = 4.0;
  std::uint64_t seed = 0;
  bool full_scale = false;
  bool write_traces = false;
  std::size_t parallelism = 1;
};

struct BenchCell {
  std::string algorithm;
  std::string instance;
  std::uint64_t T = 0;
  std::size_t runs = 0;
  std::size_t failures = 0;
  double mean_regret = 0.0;
  double std_regret = 0.0;
  double mean_batches = 0.0;
  std::size_t max_batches = 0;
};

struct BenchResult {
  std::vector<ResultRow> rows;
  std::vector<BenchCell> cells;
  std::map<std::string, double> slopes;  // per algorithm/instance series
  std::vector<std::string> failures;
};

// Fills in suite defaults for empty fields.
BenchOptions resolve_bench_options(BenchOptions options);
BenchResult run_bench(const BenchOptions& options, std::ostream* progress = nullptr);
int cmd_bench(const BenchOptions& options, std::ostream& out, std::ostream& err);

std::string zoom_report_json(const ZoomingStats& stats);
int cmd_zoom(const std::string& instance_json, const std::vector<double>& edges, std::ostream& out, std::ostream& err);

}  // namespace blie
