#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "plantbp/config.hpp"
#include "plantbp/dataset_csv.hpp"
#include "plantbp/error.hpp"
#include "plantbp/experiment.hpp"
#include "plantbp/identifiability.hpp"
#include "plantbp/phi_fit.hpp"
#include "plantbp/report.hpp"

using namespace plantbp;

namespace {

struct SimulateArgs {
  std::string params;
  int last_cycle = 4;
  int populations = 300;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out;
};

struct PathArgs {
  std::string in;
  std::string out;
  std::string diagnostics;
};

struct IncompleteArgs : PathArgs {
  std::string mode = "reduced";
  std::optional<double> survival;
  std::optional<double> carryover;
  int starts = 8;
  std::uint64_t seed = 20240917;
  unsigned threads = 1;
};

struct ExperimentArgs {
  std::string config;
  std::string out;
  std::optional<unsigned> threads;
};

int run_simulate(const SimulateArgs& args) {
  DemographicParams params = reference_params();
  if (!args.params.empty()) {
    const auto kv = KeyValueConfig::load(args.params);
    kv.require_known(demographic_keys());
    params = demographic_params_from_config(kv);
  }
  save_complete_csv(args.out, simulate(params, args.last_cycle, args.populations, args.seed,
                                       args.threads));
  return 0;
}

int run_observe(const PathArgs& args) {
  save_observed_csv(args.out, observe(load_complete_csv(args.in)));
  return 0;
}

int run_estimate_complete(const PathArgs& args) {
  const auto data = load_complete_csv(args.in);
  const auto est = estimate_complete(data);
  std::ostringstream table;
  write_complete_report_csv(table, est);
  save_text(args.out, table.str());
  if (!args.diagnostics.empty()) {
    std::ostringstream diag;
    write_complete_diagnostics(diag, est, data);
    save_text(args.diagnostics, diag.str());
  }
  for (const auto& w : est.warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

int run_estimate_incomplete(const IncompleteArgs& args) {
  const auto data = load_observed_csv(args.in);
  PhiEstimateReport rep;
  if (args.mode == "reduced") {
    if (!args.survival || !args.carryover) {
      throw domain_error("reduced mode needs the known values --a and --g");
    }
    rep = fit_phi_reduced(data, *args.survival, *args.carryover);
  } else {
    FullFitOptions options;
    options.starts = args.starts;
    options.seed = args.seed;
    options.threads = args.threads;
    rep = fit_phi_full(data, options);
  }
  std::ostringstream table;
  write_phi_report_csv(table, rep);
  save_text(args.out, table.str());
  if (!args.diagnostics.empty()) {
    std::ostringstream diag;
    write_phi_diagnostics(diag, rep, args.mode);
    save_text(args.diagnostics, diag.str());
  }
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  return rep.converged ? 0 : 3;
}

int run_experiment(const ExperimentArgs& args) {
  auto config = load_experiment_config(args.config);
  if (args.threads) config.threads = *args.threads;
  const auto rows = run_table_experiment(config);
  std::ostringstream table;
  write_experiment_csv(table, rows);
  save_text(args.out, table.str());
  for (const auto& row : rows) {
    if (row.flagged) {
      std::cerr << "warning: ratio " << row.ratio << ": " << row.failures << " of "
                << config.replicates << " fits failed\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and inference for a five-stage annual plant branching process"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate complete trajectories to CSV");
  simulate_cmd->add_option("--params", sim.params, "key = value parameter file")->check(CLI::ExistingFile);
  simulate_cmd->add_option("-n,--last-cycle", sim.last_cycle, "last observed cycle index n");
  simulate_cmd->add_option("-K,--populations", sim.populations, "number of populations");
  simulate_cmd->add_option("--seed", sim.seed, "master seed");
  simulate_cmd->add_option("--threads", sim.threads, "worker threads");
  simulate_cmd->add_option("-o,--out", sim.out, "output CSV")->required();

  PathArgs obs;
  auto* observe_cmd = app.add_subcommand("observe", "Drop the seed stages of a complete dataset");
  observe_cmd->add_option("-i,--in", obs.in, "complete dataset CSV")->required()->check(CLI::ExistingFile);
  observe_cmd->add_option("-o,--out", obs.out, "observed dataset CSV")->required();

  PathArgs comp;
  auto* complete_cmd = app.add_subcommand("estimate-complete", "Estimate all parameters from complete data");
  complete_cmd->add_option("-i,--in", comp.in, "complete dataset CSV")->required()->check(CLI::ExistingFile);
  complete_cmd->add_option("-o,--out", comp.out, "estimate CSV")->required();
  complete_cmd->add_option("--diagnostics", comp.diagnostics, "key = value diagnostics file");

  IncompleteArgs inc;
  auto* incomplete_cmd =
      app.add_subcommand("estimate-incomplete", "Maximum likelihood for phi from observed data");
  incomplete_cmd->add_option("-i,--in", inc.in, "observed dataset CSV")->required()->check(CLI::ExistingFile);
  incomplete_cmd->add_option("-o,--out", inc.out, "estimate CSV")->required();
  incomplete_cmd->add_option("--diagnostics", inc.diagnostics, "key = value diagnostics file");
  incomplete_cmd->add_option("--mode", inc.mode, "reduced (a, g known) or full")
      ->check(CLI::IsMember({"reduced", "full"}));
  incomplete_cmd->add_option("--a", inc.survival, "known a (reduced mode)");
  incomplete_cmd->add_option("--g", inc.carryover, "known a'b/b' (reduced mode)");
  incomplete_cmd->add_option("--starts", inc.starts, "starting points (full mode)");
  incomplete_cmd->add_option("--seed", inc.seed, "seed for start perturbations (full mode)");
  incomplete_cmd->add_option("--threads", inc.threads, "concurrent starts (full mode)");

  int horizon = 0;
  auto* ident_cmd = app.add_subcommand("identifiability", "List what cycles 0..n identify");
  ident_cmd->add_option("--n", horizon, "last observed cycle index")->required()->check(CLI::NonNegativeNumber);

  ExperimentArgs exp;
  auto* experiment_cmd = app.add_subcommand("experiment", "Run the robustness table experiment");
  experiment_cmd->add_option("--config", exp.config, "key = value experiment file")->required()->check(CLI::ExistingFile);
  experiment_cmd->add_option("-o,--out", exp.out, "output CSV")->required();
  experiment_cmd->add_option("--threads", exp.threads, "worker threads (overrides the config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate_cmd) return run_simulate(sim);
    if (*observe_cmd) return run_observe(obs);
    if (*complete_cmd) return run_estimate_complete(comp);
    if (*incomplete_cmd) return run_estimate_incomplete(inc);
    if (*ident_cmd) {
      std::cout << describe(identifiable_set(horizon));
      return 0;
    }
    if (*experiment_cmd) return run_experiment(exp);
  } catch (const parse_error& e) {
    std::cerr << "error: parse: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
