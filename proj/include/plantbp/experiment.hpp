#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "plantbp/config.hpp"
#include "plantbp/params.hpp"

namespace plantbp {

enum class Deviation { offspring, immigration, none };
enum class FitMode { reduced, full };

std::string to_string(Deviation d);
std::string to_string(FitMode m);

/// Robustness study: Poisson-based estimation of (bm, bu, bs, bt) on data
/// whose offspring or immigration law is negative binomial.
struct ExperimentConfig {
  DemographicParams params = reference_params();
  Deviation deviation = Deviation::offspring;
  std::vector<double> ratios = {2, 5, 10, 50, 100, 500, 1000};  // variance / mean
  int replicates = 100;                                          // M
  int populations = 300;                                         // K
  int last_cycle = 4;                                            // n
  std::uint64_t seed = 1;
  FitMode fit = FitMode::reduced;
  unsigned threads = 1;

  // Throws domain_error naming the violated invariant.
  void validate() const;
};

/// Keys: the demographic keys plus deviation, ratios, replicates,
/// populations, last_cycle, seed, fit, threads.
ExperimentConfig experiment_config_from(const KeyValueConfig& config);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Mean and standard deviation (divisor M - 1) of each estimate over the
/// replicates whose fit succeeded, in the order bm, bu, bs, bt.
struct ExperimentRow {
  double ratio = 1.0;
  std::array<double, 4> mean{};
  std::array<double, 4> sd{};
  int completed = 0;
  int failures = 0;
  bool flagged = false;  // more than 10% of replicates failed
};

/// The parameters a replicate at `ratio` is simulated under.
DemographicParams deviated_params(const ExperimentConfig& config, double ratio);

/// Replicate r of ratio index j uses master seed derive_seed(seed, {j, r}).
/// With deviation `none` there is a single row with ratio 1.
std::vector<ExperimentRow> run_table_experiment(const ExperimentConfig& config);

/// Header `ratio,bm_est,bm_sd,bu_est,bu_sd,bs_est,bs_sd,bt_est,bt_sd,failures`.
void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);

}  // namespace plantbp
