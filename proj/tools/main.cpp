#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "blie/error.hpp"
#include "blie/experiment.hpp"

namespace {

// Accepts plain numbers and powers written as 2^k.
double parse_number(const std::string& s) {
  const auto caret = s.find('^');
  if (caret != std::string::npos) {
    const double base = std::stod(s.substr(0, caret));
    const double exp = std::stod(s.substr(caret + 1));
    return std::pow(base, exp);
  }
  return std::stod(s);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batched Lipschitz exploration for budget-constrained hyperparameter search"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run one configured optimization");
  run->add_option("--config", config_path, "JSON config file")->required();

  blie::BenchOptions bench_opts;
  std::string t_grid;
  std::string algos;
  auto* bench = app.add_subcommand("bench", "Run a benchmark suite over a T grid");
  bench->add_option("--suite", bench_opts.suite, "toy | adversary | schedules")->required();
  bench->add_option("--t-grid", t_grid, "comma-separated budgets, e.g. 2^12,2^14");
  bench->add_option("--replicates", bench_opts.replicates, "replicates per T");
  bench->add_option("--algos", algos, "comma-separated: blie,blie-ace,hyperband,uniform,random,random-sh,sh");
  bench->add_option("--out", bench_opts.out_dir, "output directory");
  bench->add_option("--dim", bench_opts.dim, "dimension of the toy objective");
  bench->add_option("--variant", bench_opts.variant, "mu1 | mu2");
  bench->add_option("--sigma", bench_opts.sigma, "Gaussian noise level");
  bench->add_option("--alpha", bench_opts.alpha, "BLiE elimination width");
  bench->add_option("--seed", bench_opts.seed, "base seed");
  bench->add_flag("--full-scale", bench_opts.full_scale, "d=8, T=2^28, 256 replicates");
  bench->add_flag("--traces", bench_opts.write_traces, "write one trace file per run");

  std::string instance_json;
  std::string edges;
  auto* zoom = app.add_subcommand("zoom", "Zooming numbers and fitted zooming dimension");
  zoom->add_option("--instance", instance_json, "instance descriptor (JSON text or @file)")->required();
  zoom->add_option("--r", edges, "comma-separated dyadic edges, e.g. 2^-4,2^-5")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) return blie::cmd_run(config_path, std::cout, std::cerr);
    if (*bench) {
      for (const auto& t : split(t_grid)) bench_opts.t_grid.push_back(static_cast<std::uint64_t>(parse_number(t)));
      bench_opts.algos = split(algos);
      bench_opts.parallelism = blie::default_parallelism();
      return blie::cmd_bench(bench_opts, std::cout, std::cerr);
    }
    if (*zoom) {
      if (!instance_json.empty() && instance_json.front() == '@') {
        std::ifstream f(instance_json.substr(1));
        if (!f) {
          std::cerr << "error: cannot read " << instance_json.substr(1) << '\n';
          return 2;
        }
        std::stringstream ss;
        ss << f.rdbuf();
        instance_json = ss.str();
      }
      std::vector<double> rs;
      for (const auto& r : split(edges)) rs.push_back(parse_number(r));
      return blie::cmd_zoom(instance_json, rs, std::cout, std::cerr);
    }
  } catch (const std::invalid_argument&) {
    std::cerr << "error: malformed number in arguments\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
