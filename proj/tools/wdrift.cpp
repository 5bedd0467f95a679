#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include <wdrift/experiment.hpp>

namespace ex = wdrift::experiment;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  std::string param;
  std::string grid;
};

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("--config", opt.config, "experiment config file")->required();
  cmd->add_option("--seed", opt.seed, "base seed (overrides montecarlo.seed)");
  cmd->add_option("--workers", opt.workers, "Monte Carlo worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", opt.out, "output directory (overrides output.dir)");
}

ex::ExperimentConfig load(const Options& opt) {
  auto kv = ex::KeyValues::load(opt.config);
  if (!opt.param.empty()) kv.set("sweep.parameter", opt.param);
  if (!opt.grid.empty()) kv.set("sweep.grid", opt.grid);
  auto c = ex::from_key_values(kv);
  if (opt.seed) c.seed = *opt.seed;
  if (opt.workers) c.workers = *opt.workers;
  if (opt.out) c.output_dir = *opt.out;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online proximal-gradient tracking under Wasserstein drift"};
  app.require_subcommand(1);
  Options opt;
  auto* run = app.add_subcommand("run", "Monte Carlo tracking experiment: metrics.csv, report.txt");
  auto* drift = app.add_subcommand("estimate-drift", "data-driven drift rate: drift.csv");
  auto* bnds = app.add_subcommand("bounds", "closed-form bound report: bounds.txt");
  auto* sweep = app.add_subcommand("sweep", "summary metrics over a parameter grid: sweep.csv");
  for (auto* cmd : {run, drift, bnds, sweep}) add_common(cmd, opt);
  sweep->add_option("--param", opt.param, "alpha, m, q, theta or lambda_pen");
  sweep->add_option("--grid", opt.grid, "comma-separated values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const auto c = load(opt);
    if (run->parsed()) {
      ex::cmd_run(c, std::cerr);
    } else if (drift->parsed()) {
      ex::cmd_estimate_drift(c, std::cout);
    } else if (bnds->parsed()) {
      ex::cmd_bounds(c, std::cout);
    } else {
      ex::cmd_sweep(c, std::cerr);
    }
  } catch (const ex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
