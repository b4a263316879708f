#include "blie/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "blie/error.hpp"
#include "blie/external_evaluator.hpp"
#include "blie/optimizer.hpp"
#include "blie/rng.hpp"
#include "json.hpp"

namespace blie {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); }

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
      bad("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key + " has the wrong type");
  }
}

std::uint64_t get_count(const json& j, const char* key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) bad(where + "." + key + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

double get_number(const json& j, const char* key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number()) bad(where + "." + key + " must be a number");
  return v.get<double>();
}

ScheduleSpec parse_schedule(json j) {
  ScheduleSpec s;
  if (j.is_string()) j = json{{"kind", j}};
  allow_keys(j, "schedule", {"kind", "zooming_dim", "levels"});
  const auto kind = get<std::string>(j, "kind", "schedule");
  if (kind == "doubling") {
    s.kind = ScheduleKind::Doubling;
  } else if (kind == "ace") {
    s.kind = ScheduleKind::Ace;
    if (j.contains("zooming_dim")) s.zooming_dim = get_number(j, "zooming_dim", "schedule");
  } else if (kind == "explicit") {
    s.kind = ScheduleKind::Explicit;
    if (!j.contains("levels")) bad("explicit schedule needs levels");
    s.levels = get<std::vector<int>>(j, "levels", "schedule");
    if (s.levels.empty()) bad("explicit schedule needs at least one level");
  } else {
    bad("unknown schedule kind '" + kind + "'");
  }
  return s;
}

AlgorithmSpec parse_algorithm(const json& j) {
  const std::string w = "algorithm";
  allow_keys(j, w, {"name", "alpha", "beta", "schedule", "level", "arms", "policy", "eta", "R"});
  AlgorithmSpec a;
  if (!j.contains("name")) bad("algorithm.name is required");
  a.name = get<std::string>(j, "name", w);
  static const std::set<std::string> names{"blie", "uniform", "random", "sh", "hyperband"};
  if (!names.contains(a.name)) bad("unknown algorithm '" + a.name + "'");
  if (j.contains("alpha")) a.alpha = get_number(j, "alpha", w);
  if (j.contains("beta")) a.beta = get_number(j, "beta", w);
  if (!(a.alpha > 0.0)) bad("algorithm.alpha must be positive");
  if (!(a.beta > 0.0)) bad("algorithm.beta must be positive");
  if (j.contains("schedule")) a.schedule = parse_schedule(j.at("schedule"));
  if (j.contains("level")) a.level = static_cast<int>(get_count(j, "level", w));
  if (j.contains("arms")) {
    a.arms = get_count(j, "arms", w);
    if (*a.arms == 0) bad("algorithm.arms must be positive");
  }
  if (j.contains("policy")) {
    const auto p = get<std::string>(j, "policy", w);
    if (p == "even") {
      a.policy = RandomPolicy::Even;
    } else if (p == "sh") {
      a.policy = RandomPolicy::SuccessiveHalving;
    } else {
      bad("unknown random-search policy '" + p + "'");
    }
  }
  if (j.contains("eta")) {
    a.eta = get_count(j, "eta", w);
    if (*a.eta < 2) bad("algorithm.eta must be at least 2");
  }
  if (j.contains("R")) {
    a.max_budget = get_count(j, "R", w);
    if (a.max_budget == 0) bad("algorithm.R must be positive");
  }
  return a;
}

InstanceSpec parse_instance(const json& j) {
  const std::string w = "instance";
  allow_keys(j, w, {"kind", "variant", "d", "sigma", "base", "adversary", "value", "beta", "level"});
  InstanceSpec s;
  if (!j.contains("kind")) bad("instance.kind is required");
  s.kind = get<std::string>(j, "kind", w);
  static const std::set<std::string> kinds{"toy", "certified", "adversary", "linear", "constant"};
  if (!kinds.contains(s.kind)) bad("unknown instance kind '" + s.kind + "'");
  if (j.contains("variant")) s.variant = get<std::string>(j, "variant", w);
  if (s.variant != "mu1" && s.variant != "mu2") bad("unknown toy variant '" + s.variant + "'");
  s.dim = s.kind == "adversary" || s.kind == "linear" ? 1 : 2;
  if (j.contains("d")) s.dim = static_cast<std::size_t>(get_count(j, "d", w));
  if (s.dim == 0) bad("instance.d must be positive");
  if (j.contains("sigma")) s.sigma = get_number(j, "sigma", w);
  if (!(s.sigma >= 0.0)) bad("instance.sigma must be non-negative");
  if (j.contains("base")) s.base = get<std::string>(j, "base", w);
  if (s.base != "toy" && s.base != "linear" && s.base != "constant") bad("unknown certified base '" + s.base + "'");
  if (j.contains("adversary")) {
    try {
      s.adversary = parse_adversary(get<std::string>(j, "adversary", w));
    } catch (const Error& e) {
      bad(e.detail());
    }
  }
  if (j.contains("value")) s.value = get_number(j, "value", w);
  if (j.contains("beta")) s.beta = get_number(j, "beta", w);
  if (!(s.beta > 0.0)) bad("instance.beta must be positive");
  if (j.contains("level")) s.level = static_cast<int>(get_count(j, "level", w));
  return s;
}

EvaluatorSpec parse_evaluator(const json& j) {
  const std::string w = "evaluator";
  allow_keys(j, w, {"command", "workdir", "timeout_s", "d"});
  EvaluatorSpec e;
  if (!j.contains("command")) bad("evaluator.command is required");
  const json& c = j.at("command");
  if (c.is_string()) {
    e.command = {c.get<std::string>()};
  } else {
    e.command = get<std::vector<std::string>>(j, "command", w);
  }
  if (e.command.empty() || e.command.front().empty()) bad("evaluator.command is empty");
  if (j.contains("workdir")) e.workdir = get<std::string>(j, "workdir", w);
  if (j.contains("timeout_s")) e.timeout_s = get_number(j, "timeout_s", w);
  if (!(e.timeout_s > 0.0)) bad("evaluator.timeout_s must be positive");
  if (!j.contains("d")) bad("evaluator.d is required");
  e.dim = static_cast<std::size_t>(get_count(j, "d", w));
  if (e.dim == 0) bad("evaluator.d must be positive");
  return e;
}

ojson schedule_json(const ScheduleSpec& s) {
  ojson j;
  j["kind"] = to_string(s.kind);
  if (s.kind == ScheduleKind::Ace) j["zooming_dim"] = s.zooming_dim;
  if (s.kind == ScheduleKind::Explicit) j["levels"] = s.levels;
  return j;
}

ojson instance_json(const InstanceSpec& s) {
  ojson j;
  j["kind"] = s.kind;
  j["d"] = s.dim;
  if (s.kind == "toy" || (s.kind == "certified" && s.base == "toy")) j["variant"] = s.variant;
  if (s.kind == "toy") j["sigma"] = s.sigma;
  if (s.kind == "certified") {
    j["base"] = s.base;
    j["adversary"] = to_string(s.adversary);
  }
  if (s.kind == "constant" || (s.kind == "certified" && s.base == "constant")) j["value"] = s.value;
  if (s.kind == "adversary") {
    j["beta"] = s.beta;
    if (s.level) j["level"] = *s.level;
  }
  return j;
}

int default_grid_level(std::uint64_t T, std::size_t d, double beta) {
  return static_cast<int>(std::floor(std::log2(static_cast<double>(T)) / (static_cast<double>(d) + beta) + 1e-12));
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::uint64_t elapsed_ms(std::chrono::steady_clock::time_point start) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count());
}

std::size_t resolve_parallelism(std::optional<std::size_t> configured) {
  if (std::getenv("BLIE_PARALLELISM") != nullptr || !configured) return default_parallelism();
  return *configured;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
  f << content;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) bad("config is not valid JSON");
  allow_keys(j, "config",
             {"algorithm", "instance", "evaluator", "budget", "seed", "replicates", "t_grid", "output", "parallelism"});
  ExperimentConfig c;
  if (!j.contains("algorithm")) bad("config.algorithm is required");
  c.algorithm = parse_algorithm(j.at("algorithm"));
  const bool has_instance = j.contains("instance");
  const bool has_evaluator = j.contains("evaluator");
  if (has_instance == has_evaluator) bad("exactly one of instance and evaluator must be given");
  if (has_instance) c.instance = parse_instance(j.at("instance"));
  if (has_evaluator) c.evaluator = parse_evaluator(j.at("evaluator"));
  if (j.contains("budget")) c.budget = get_count(j, "budget", "config");
  if (j.contains("seed")) c.seed = get_count(j, "seed", "config");
  if (j.contains("replicates")) c.replicates = get_count(j, "replicates", "config");
  if (c.replicates == 0) bad("config.replicates must be at least 1");
  if (j.contains("t_grid")) {
    const json& g = j.at("t_grid");
    if (!g.is_array() || g.empty()) bad("config.t_grid must be a non-empty array");
    for (const auto& v : g) {
      if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) bad("config.t_grid entries must be positive integers");
      c.t_grid.push_back(v.get<std::uint64_t>());
    }
    for (std::size_t i = 1; i < c.t_grid.size(); ++i)
      if (c.t_grid[i] <= c.t_grid[i - 1]) bad("config.t_grid must be strictly increasing");
  }
  if (c.budget == 0 && c.t_grid.empty()) bad("config.budget must be positive");
  if (j.contains("output")) c.output = get<std::string>(j, "output", "config");
  if (j.contains("parallelism")) {
    c.parallelism = static_cast<std::size_t>(get_count(j, "parallelism", "config"));
    if (*c.parallelism == 0) bad("config.parallelism must be positive");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) bad("cannot read config file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

InstanceSpec parse_instance_spec(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) bad("instance descriptor is not valid JSON");
  return parse_instance(j);
}

std::string serialize_config(const ExperimentConfig& c) {
  ojson j;
  ojson a;
  const auto& al = c.algorithm;
  a["name"] = al.name;
  if (al.name == "blie") {
    a["alpha"] = al.alpha;
    a["beta"] = al.beta;
    a["schedule"] = schedule_json(al.schedule);
  } else if (al.name == "uniform") {
    a["beta"] = al.beta;
    if (al.level) a["level"] = *al.level;
  } else if (al.name == "random" || al.name == "sh") {
    a["beta"] = al.beta;
    if (al.level) a["level"] = *al.level;
    if (al.arms) a["arms"] = *al.arms;
    if (al.name == "random") a["policy"] = to_string(al.policy);
    if (al.eta) a["eta"] = *al.eta;
  } else {
    if (al.eta) a["eta"] = *al.eta;
    a["R"] = al.max_budget;
  }
  j["algorithm"] = std::move(a);
  if (c.instance) j["instance"] = instance_json(*c.instance);
  if (c.evaluator) {
    ojson e;
    e["command"] = c.evaluator->command;
    if (!c.evaluator->workdir.empty()) e["workdir"] = c.evaluator->workdir;
    e["timeout_s"] = c.evaluator->timeout_s;
    e["d"] = c.evaluator->dim;
    j["evaluator"] = std::move(e);
  }
  if (c.budget > 0) j["budget"] = c.budget;
  j["seed"] = c.seed;
  j["replicates"] = c.replicates;
  if (!c.t_grid.empty()) j["t_grid"] = c.t_grid;
  j["output"] = c.output;
  if (c.parallelism) j["parallelism"] = *c.parallelism;
  return j.dump(2);
}

std::unique_ptr<Instance> make_instance(const InstanceSpec& s, std::uint64_t total_budget, std::uint64_t seed) {
  if (s.kind == "toy") return toy_instance(parse_toy_variant(s.variant), s.dim, s.sigma, seed);
  if (s.kind == "linear") return linear_instance(s.dim);
  if (s.kind == "constant") return constant_instance(s.dim, s.value);
  if (s.kind == "certified") {
    std::unique_ptr<Instance> base;
    if (s.base == "toy") {
      base = toy_instance(parse_toy_variant(s.variant), s.dim, 0.0, seed);
    } else if (s.base == "linear") {
      base = linear_instance(s.dim);
    } else {
      base = constant_instance(s.dim, s.value);
    }
    return certified_instance(*base, s.adversary, seed);
  }
  if (s.kind == "adversary") {
    const int level = s.level ? *s.level : default_grid_level(total_budget, s.dim, s.beta);
    return uniform_search_adversary(s.dim, s.beta, total_budget, level);
  }
  throw Error(ErrorKind::InvalidConfig, "unknown instance kind '" + s.kind + "'");
}

std::string instance_label(const InstanceSpec& s) {
  const std::string d = "d" + std::to_string(s.dim);
  if (s.kind == "toy") return s.variant + "-" + d;
  if (s.kind == "certified") {
    const std::string base = s.base == "toy" ? s.variant : s.base;
    return "certified-" + base + "-" + to_string(s.adversary) + "-" + d;
  }
  if (s.kind == "adversary") return "adversary-" + d + (s.level ? "-L" + std::to_string(*s.level) : "");
  return s.kind + "-" + d;
}

RunTrace run_algorithm(const AlgorithmSpec& spec, const Instance& instance, Executor& executor,
                       std::uint64_t total_budget, std::uint64_t seed) {
  const std::size_t d = instance.dim();
  if (spec.name == "blie") {
    BlieConfig c;
    c.alpha = spec.alpha;
    c.beta = spec.beta;
    c.total_budget = total_budget;
    c.seed = seed;
    switch (spec.schedule.kind) {
      case ScheduleKind::Doubling: c.schedule = EdgeLengthSchedule::doubling(); break;
      case ScheduleKind::Ace:
        c.schedule = EdgeLengthSchedule::ace(static_cast<int>(d), spec.schedule.zooming_dim, spec.beta, total_budget);
        break;
      case ScheduleKind::Explicit: c.schedule = EdgeLengthSchedule::from_levels(spec.schedule.levels); break;
    }
    RunTrace t = run_blie(c, instance, executor);
    if (spec.schedule.kind != ScheduleKind::Doubling) t.algorithm += std::string("-") + to_string(spec.schedule.kind);
    return t;
  }
  BaselineConfig b;
  b.total_budget = total_budget;
  b.seed = seed;
  const int level = spec.level ? *spec.level : default_grid_level(total_budget, d, spec.beta);
  b.uniform_level = level;
  if (spec.name == "uniform") {
    b.kind = BaselineKind::Uniform;
  } else if (spec.name == "random" || spec.name == "sh") {
    b.kind = spec.name == "random" ? BaselineKind::Random : BaselineKind::SuccessiveHalving;
    b.policy = spec.policy;
    b.sh_eta = spec.eta.value_or(2);
    std::uint64_t arms = spec.arms ? *spec.arms : dyadic_count(d, level);
    if (b.kind == BaselineKind::SuccessiveHalving || b.policy == RandomPolicy::SuccessiveHalving)
      arms = std::max(arms, b.sh_eta);
    b.arms = std::min(arms, total_budget);
  } else if (spec.name == "hyperband") {
    b.kind = BaselineKind::Hyperband;
    b.hb_eta = spec.eta.value_or(3);
    b.hb_max_budget = spec.max_budget;
    b.record_arms = false;
  } else {
    throw Error(ErrorKind::InvalidConfig, "unknown algorithm '" + spec.name + "'");
  }
  return run_baseline(b, instance, executor);
}

std::string csv_header() {
  return "run_id,algorithm,instance,T,seed,batches,total_spent,best_loss,simple_regret,wall_time_ms";
}

std::string to_csv(const ResultRow& r) {
  std::ostringstream os;
  os << r.run_id << ',' << r.algorithm << ',' << r.instance << ',' << r.T << ',' << r.seed << ',' << r.batches << ','
     << r.total_spent << ',' << (r.best_loss ? fmt(*r.best_loss) : "") << ','
     << (r.simple_regret ? fmt(*r.simple_regret) : "") << ',' << r.wall_time_ms;
  return os.str();
}

ResultRow make_row(std::string run_id, std::string instance, std::uint64_t T, std::uint64_t seed,
                   const RunTrace& trace, std::uint64_t wall_time_ms) {
  ResultRow r;
  r.run_id = std::move(run_id);
  r.algorithm = trace.algorithm;
  r.instance = std::move(instance);
  r.T = T;
  r.seed = seed;
  r.batches = trace.executor_batches;
  r.total_spent = trace.total_spent;
  r.best_loss = trace.output_loss;
  r.simple_regret = trace.simple_regret;
  r.wall_time_ms = wall_time_ms;
  return r;
}

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw Error(ErrorKind::FitFailed, "need at least two points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) throw Error(ErrorKind::FitFailed, "all x values coincide");
  return sxy / sxx;
}

int cmd_run(const std::string& config_path, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  try {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output);
    fs::create_directories(dir);
    const std::size_t parallelism = resolve_parallelism(cfg.parallelism);
    const std::vector<std::uint64_t> grid = cfg.t_grid.empty() ? std::vector<std::uint64_t>{cfg.budget} : cfg.t_grid;

    std::unique_ptr<ExternalBackend> external;
    std::unique_ptr<Instance> black_box;
    if (cfg.evaluator) {
      ExternalSpec spec;
      spec.command = cfg.evaluator->command;
      spec.working_dir = cfg.evaluator->workdir;
      spec.timeout = std::chrono::milliseconds(static_cast<long long>(cfg.evaluator->timeout_s * 1000.0));
      external = std::make_unique<ExternalBackend>(std::move(spec));
      black_box = std::make_unique<BlackBoxInstance>("external", cfg.evaluator->dim);
    }
    const std::string label = cfg.instance ? instance_label(*cfg.instance) : "external-d" + std::to_string(cfg.evaluator->dim);

    std::vector<ResultRow> rows;
    out << csv_header() << '\n';
    for (std::uint64_t T : grid) {
      for (std::uint64_t rep = 0; rep < cfg.replicates; ++rep) {
        const std::uint64_t seed = cfg.seed + rep;
        std::unique_ptr<Instance> owned;
        const Instance* inst = black_box.get();
        if (cfg.instance) {
          owned = make_instance(*cfg.instance, T, seed);
          inst = owned.get();
        }
        std::unique_ptr<InProcessBackend> local;
        Backend* backend = external.get();
        if (!backend) {
          local = std::make_unique<InProcessBackend>(*inst);
          backend = local.get();
        }
        Executor executor(*backend, parallelism);
        const auto start = std::chrono::steady_clock::now();
        const RunTrace trace = run_algorithm(cfg.algorithm, *inst, executor, T, derive_seed(seed, 1));
        const std::string run_id = cfg.algorithm.name + "-" + label + "-T" + std::to_string(T) + "-s" + std::to_string(seed);
        ResultRow row = make_row(run_id, label, T, seed, trace, elapsed_ms(start));
        write_file(dir / ("trace-" + run_id + ".json"), trace_to_json(trace));
        out << to_csv(row) << '\n';
        rows.push_back(std::move(row));
      }
    }
    std::string csv = csv_header() + "\n";
    for (const auto& r : rows) csv += to_csv(r) + "\n";
    write_file(dir / "results.csv", csv);
    ojson summary;
    summary["runs"] = rows.size();
    summary["config"] = ojson::parse(serialize_config(cfg));
    ojson list = ojson::array();
    for (const auto& r : rows) {
      list.push_back(ojson{{"run_id", r.run_id},
                           {"T", r.T},
                           {"total_spent", r.total_spent},
                           {"best_loss", r.best_loss ? ojson(*r.best_loss) : ojson(nullptr)},
                           {"simple_regret", r.simple_regret ? ojson(*r.simple_regret) : ojson(nullptr)}});
    }
    summary["results"] = std::move(list);
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::InvalidConfig ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

// ---------------------------------------------------------------------------
// Benchmark suites

namespace {

struct BenchJob {
  std::string algorithm;  // bench-level name
  AlgorithmSpec spec;
  InstanceSpec instance;
};

AlgorithmSpec bench_algorithm(const std::string& name, const BenchOptions& o) {
  AlgorithmSpec a;
  a.alpha = o.alpha;
  if (name == "blie") {
    a.name = "blie";
  } else if (name == "blie-ace") {
    a.name = "blie";
    a.schedule.kind = ScheduleKind::Ace;
  } else if (name == "uniform" || name == "random" || name == "sh" || name == "hyperband") {
    a.name = name;
  } else if (name == "random-sh") {
    a.name = "random";
    a.policy = RandomPolicy::SuccessiveHalving;
  } else {
    throw Error(ErrorKind::InvalidConfig, "unknown bench algorithm '" + name + "'");
  }
  return a;
}

std::vector<BenchJob> bench_jobs(const BenchOptions& o, std::uint64_t T) {
  std::vector<BenchJob> jobs;
  if (o.suite == "toy" || o.suite == "schedules") {
    InstanceSpec inst;
    inst.kind = "toy";
    inst.variant = o.variant;
    inst.dim = o.dim;
    inst.sigma = o.sigma;
    for (const auto& a : o.algos) jobs.push_back({a, bench_algorithm(a, o), inst});
  } else if (o.suite == "adversary") {
    // One grid at or above T^(-1/(d+beta)) and one well below it.
    const int coarse = default_grid_level(T, o.dim, 2.0);
    for (int level : {coarse, coarse + 2}) {
      InstanceSpec inst;
      inst.kind = "adversary";
      inst.dim = o.dim;
      inst.beta = 2.0;
      inst.level = level;
      for (const auto& a : o.algos) {
        BenchJob job{a, bench_algorithm(a, o), inst};
        if (job.spec.name == "uniform") job.spec.level = level;
        jobs.push_back(std::move(job));
      }
    }
  } else {
    throw Error(ErrorKind::InvalidConfig, "unknown suite '" + o.suite + "'");
  }
  return jobs;
}

}  // namespace

BenchOptions resolve_bench_options(BenchOptions o) {
  if (o.suite != "toy" && o.suite != "adversary" && o.suite != "schedules")
    throw Error(ErrorKind::InvalidConfig, "unknown suite '" + o.suite + "'");
  if (o.full_scale) {
    o.dim = 8;
    if (o.t_grid.empty()) o.t_grid = {std::uint64_t{1} << 28};
    o.replicates = 256;
  }
  if (o.suite == "adversary") o.dim = 1;
  if (o.t_grid.empty()) {
    if (o.suite == "adversary") {
      o.t_grid = {std::uint64_t{1} << 12, std::uint64_t{1} << 16, std::uint64_t{1} << 20};
    } else {
      for (int e = 12; e <= 22; e += 2) o.t_grid.push_back(std::uint64_t{1} << e);
    }
  }
  if (o.algos.empty()) {
    if (o.suite == "toy") o.algos = {"blie", "hyperband", "uniform", "random"};
    if (o.suite == "adversary") o.algos = {"uniform", "blie"};
    if (o.suite == "schedules") o.algos = {"blie", "blie-ace"};
  }
  if (o.replicates == 0) throw Error(ErrorKind::InvalidConfig, "replicates must be at least 1");
  for (std::size_t i = 1; i < o.t_grid.size(); ++i)
    if (o.t_grid[i] <= o.t_grid[i - 1]) throw Error(ErrorKind::InvalidConfig, "T grid must be strictly increasing");
  if (o.parallelism == 0) o.parallelism = 1;
  return o;
}

BenchResult run_bench(const BenchOptions& options, std::ostream* progress) {
  const BenchOptions o = resolve_bench_options(options);
  BenchResult result;
  std::map<std::pair<std::string, std::string>, std::map<std::uint64_t, BenchCell>> cells;
  std::map<std::tuple<std::string, std::string, std::uint64_t>, std::vector<double>> regrets;

  for (std::uint64_t T : o.t_grid) {
    for (std::uint64_t rep = 0; rep < o.replicates; ++rep) {
      // Common random numbers: every algorithm in this (T, replicate) cell
      // sees the same noise and the same sampling seed.
      const std::uint64_t seed = derive_seed(derive_seed(o.seed, T), rep);
      for (const auto& job : bench_jobs(o, T)) {
        const std::string label = instance_label(job.instance);
        const std::string run_id = o.suite + "-" + job.algorithm + "-" + label + "-T" + std::to_string(T) + "-r" +
                                   std::to_string(rep);
        BenchCell& cell = cells[{job.algorithm, label}][T];
        cell.algorithm = job.algorithm;
        cell.instance = label;
        cell.T = T;
        ++cell.runs;
        const auto start = std::chrono::steady_clock::now();
        try {
          auto instance = make_instance(job.instance, T, seed);
          InProcessBackend backend(*instance);
          Executor executor(backend, o.parallelism);
          RunTrace trace = run_algorithm(job.spec, *instance, executor, T, derive_seed(seed, 1));
          trace.algorithm = job.algorithm;
          ResultRow row = make_row(run_id, label, T, seed, trace, elapsed_ms(start));
          if (o.write_traces) {
            std::filesystem::create_directories(o.out_dir);
            write_file(std::filesystem::path(o.out_dir) / ("trace-" + run_id + ".json"), trace_to_json(trace));
          }
          if (row.simple_regret) regrets[{job.algorithm, label, T}].push_back(*row.simple_regret);
          cell.mean_batches += static_cast<double>(row.batches);
          cell.max_batches = std::max(cell.max_batches, row.batches);
          result.rows.push_back(std::move(row));
        } catch (const Error& e) {
          ++cell.failures;
          result.failures.push_back(run_id + ": " + e.what());
          ResultRow row;
          row.run_id = run_id;
          row.algorithm = job.algorithm;
          row.instance = label;
          row.T = T;
          row.seed = seed;
          row.wall_time_ms = elapsed_ms(start);
          result.rows.push_back(std::move(row));
        }
      }
    }
    if (progress) *progress << "T=" << T << " done\n";
  }

  for (auto& [key, by_t] : cells) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (auto& [T, cell] : by_t) {
      const auto& r = regrets[{key.first, key.second, T}];
      const std::size_t ok = cell.runs - cell.failures;
      if (ok > 0) cell.mean_batches /= static_cast<double>(ok);
      if (!r.empty()) {
        const double n = static_cast<double>(r.size());
        cell.mean_regret = std::accumulate(r.begin(), r.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : r) ss += (v - cell.mean_regret) * (v - cell.mean_regret);
        cell.std_regret = r.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        if (cell.mean_regret > 0.0) {
          xs.push_back(std::log2(static_cast<double>(T)));
          ys.push_back(std::log2(cell.mean_regret));
        }
      }
      result.cells.push_back(cell);
    }
    if (xs.size() >= 2) result.slopes[key.first + "/" + key.second] = fit_slope(xs, ys);
  }
  return result;
}

int cmd_bench(const BenchOptions& options, std::ostream& out, std::ostream& err) {
  BenchOptions o;
  try {
    o = resolve_bench_options(options);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  BenchResult res;
  try {
    res = run_bench(o, &err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::InvalidConfig ? 2 : 1;
  }
  namespace fs = std::filesystem;
  fs::create_directories(o.out_dir);
  std::string csv = csv_header() + "\n";
  for (const auto& r : res.rows) csv += to_csv(r) + "\n";
  write_file(fs::path(o.out_dir) / "results.csv", csv);

  ojson summary;
  summary["suite"] = o.suite;
  summary["t_grid"] = o.t_grid;
  summary["replicates"] = o.replicates;
  summary["algorithms"] = o.algos;
  summary["dim"] = o.dim;
  summary["alpha"] = o.alpha;
  ojson cells = ojson::array();
  out << std::left << std::setw(12) << "algorithm" << std::setw(26) << "instance" << std::setw(12) << "T"
      << std::setw(14) << "mean_regret" << std::setw(14) << "std_regret" << std::setw(10) << "batches"
      << "failed\n";
  for (const auto& c : res.cells) {
    cells.push_back(ojson{{"algorithm", c.algorithm},
                          {"instance", c.instance},
                          {"T", c.T},
                          {"runs", c.runs},
                          {"failures", c.failures},
                          {"mean_regret", c.mean_regret},
                          {"std_regret", c.std_regret},
                          {"mean_batches", c.mean_batches},
                          {"max_batches", c.max_batches}});
    out << std::left << std::setw(12) << c.algorithm << std::setw(26) << c.instance << std::setw(12) << c.T
        << std::setw(14) << std::setprecision(5) << c.mean_regret << std::setw(14) << c.std_regret << std::setw(10)
        << c.mean_batches << c.failures << '\n';
  }
  summary["cells"] = std::move(cells);
  ojson slopes = ojson::object();
  for (const auto& [k, v] : res.slopes) {
    slopes[k] = v;
    out << "slope " << k << ": " << std::setprecision(4) << v << '\n';
  }
  summary["slopes"] = std::move(slopes);
  summary["failures"] = res.failures;
  write_file(fs::path(o.out_dir) / "summary.json", summary.dump(2) + "\n");
  for (const auto& f : res.failures) err << "failed: " << f << '\n';
  return res.failures.empty() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Zooming report

std::string zoom_report_json(const ZoomingStats& stats) {
  ojson j;
  ojson pts = ojson::array();
  for (const auto& p : stats.points) pts.push_back(ojson{{"level", p.level}, {"r", p.r}, {"N_r", p.count}});
  j["points"] = std::move(pts);
  j["fitted_d_z"] = stats.fitted_d_z;
  j["fitted_C_z"] = stats.fitted_C_z;
  j["raw_slope"] = stats.raw_slope;
  j["exact"] = stats.exact;
  return j.dump();
}

int cmd_zoom(const std::string& instance_json_text, const std::vector<double>& edges, std::ostream& out,
             std::ostream& err) {
  InstanceSpec spec;
  std::vector<int> levels;
  try {
    spec = parse_instance_spec(instance_json_text);
    for (double r : edges) {
      const auto level = dyadic_level(r);
      if (!level) throw Error(ErrorKind::InvalidConfig, "edge " + fmt(r) + " is not a power of 1/2");
      levels.push_back(*level);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  try {
    // Zooming numbers only depend on mu, so a large nominal budget is fine.
    const auto instance = make_instance(spec, std::uint64_t{1} << 62, 0);
    const ZoomingStats stats = fit_zooming_dimension(*instance, levels);
    out << std::left << std::setw(8) << "level" << std::setw(16) << "r" << "N_r\n";
    for (const auto& p : stats.points)
      out << std::left << std::setw(8) << p.level << std::setw(16) << p.r << p.count << '\n';
    out << "fitted_d_z = " << fmt(stats.fitted_d_z) << "\nfitted_C_z = " << fmt(stats.fitted_C_z) << '\n';
    out << zoom_report_json(stats) << '\n';
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace blie
