#include "plantbp/experiment.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>

#include "plantbp/csv.hpp"
#include "plantbp/error.hpp"
#include "plantbp/parallel.hpp"
#include "plantbp/phi_fit.hpp"
#include "plantbp/rng.hpp"

namespace plantbp {

namespace {

constexpr double kFlagFraction = 0.10;

using Estimate = std::array<double, 4>;

std::optional<Estimate> run_replicate(const ExperimentConfig& config, const DemographicParams& params,
                                      std::uint64_t seed) {
  const auto data = observe(simulate(params, config.last_cycle, config.populations, seed));
  const auto phi = identifiable_params(params);
  try {
    const auto rep = config.fit == FitMode::reduced
                         ? fit_phi_reduced(data, phi.bank_survival, phi.carryover)
                         : fit_phi_full(data);
    if (!rep.converged || rep.partial) return std::nullopt;
    return Estimate{rep.phi_hat.offspring_rate, rep.phi_hat.immigration_rate,
                    rep.phi_hat.initial_bank_rate, rep.phi_hat.initial_new_rate};
  } catch (const collinearity_error&) {
    return std::nullopt;
  }
}

}  // namespace

std::string to_string(Deviation d) {
  switch (d) {
    case Deviation::offspring: return "offspring";
    case Deviation::immigration: return "immigration";
    case Deviation::none: return "none";
  }
  return "?";
}

std::string to_string(FitMode m) { return m == FitMode::reduced ? "reduced" : "full"; }

void ExperimentConfig::validate() const {
  params.validate();
  if (replicates < 1) throw domain_error("replicates M must be >= 1");
  if (populations < 1) throw domain_error("populations K must be >= 1");
  if (last_cycle < 0) throw domain_error("last_cycle n must be >= 0");
  if (deviation != Deviation::none) {
    if (ratios.empty()) throw domain_error("ratio list must not be empty");
    for (double r : ratios) {
      if (!(r >= 1.0)) throw domain_error("variance/mean ratios must be >= 1");
    }
  }
}

ExperimentConfig experiment_config_from(const KeyValueConfig& kv) {
  auto known = demographic_keys();
  known.insert({"deviation", "ratios", "replicates", "populations", "last_cycle", "seed", "fit",
                "threads"});
  kv.require_known(known);

  ExperimentConfig c;
  c.params = demographic_params_from_config(kv);
  const auto deviation = kv.get_choice("deviation", "offspring", {"offspring", "immigration", "none"});
  c.deviation = deviation == "offspring"     ? Deviation::offspring
                : deviation == "immigration" ? Deviation::immigration
                                             : Deviation::none;
  c.ratios = kv.get_double_list("ratios", c.ratios);
  c.replicates = static_cast<int>(kv.get_int("replicates", c.replicates));
  c.populations = static_cast<int>(kv.get_int("populations", c.populations));
  c.last_cycle = static_cast<int>(kv.get_int("last_cycle", c.last_cycle));
  c.seed = kv.get_uint("seed", c.seed);
  c.fit = kv.get_choice("fit", "reduced", {"reduced", "full"}) == "reduced" ? FitMode::reduced
                                                                          : FitMode::full;
  c.threads = static_cast<unsigned>(kv.get_uint("threads", c.threads));
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from(KeyValueConfig::load(path));
}

DemographicParams deviated_params(const ExperimentConfig& config, double ratio) {
  DemographicParams p = config.params;
  if (config.deviation == Deviation::offspring) {
    p.offspring = DistributionSpec::with_dispersion_ratio(p.offspring.mean, ratio);
  } else if (config.deviation == Deviation::immigration) {
    p.immigration = DistributionSpec::with_dispersion_ratio(p.immigration.mean, ratio);
  }
  return p;
}

std::vector<ExperimentRow> run_table_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::vector<double> ratios =
      config.deviation == Deviation::none ? std::vector<double>{1.0} : config.ratios;
  const auto m = static_cast<std::size_t>(config.replicates);

  std::vector<ExperimentRow> rows;
  for (std::size_t j = 0; j < ratios.size(); ++j) {
    const DemographicParams params = deviated_params(config, ratios[j]);
    std::vector<std::optional<Estimate>> results(m);
    parallel_for(m, config.threads, [&](std::size_t r) {
      results[r] = run_replicate(config, params, derive_seed(config.seed, {j, r}));
    });

    ExperimentRow row;
    row.ratio = ratios[j];
    std::array<double, 4> sum{}, sum_sq{};
    for (const auto& res : results) {
      if (!res) {
        ++row.failures;
        continue;
      }
      ++row.completed;
      for (int q = 0; q < 4; ++q) sum[q] += (*res)[q];
    }
    for (int q = 0; q < 4; ++q) {
      row.mean[q] = row.completed > 0 ? sum[q] / row.completed
                                      : std::numeric_limits<double>::quiet_NaN();
    }
    for (const auto& res : results) {
      if (!res) continue;
      for (int q = 0; q < 4; ++q) sum_sq[q] += ((*res)[q] - row.mean[q]) * ((*res)[q] - row.mean[q]);
    }
    for (int q = 0; q < 4; ++q) {
      row.sd[q] = row.completed > 1 ? std::sqrt(sum_sq[q] / (row.completed - 1))
                                    : std::numeric_limits<double>::quiet_NaN();
    }
    row.flagged = row.failures > kFlagFraction * config.replicates;
    rows.push_back(row);
  }
  return rows;
}

void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  out << "ratio,bm_est,bm_sd,bu_est,bu_sd,bs_est,bs_sd,bt_est,bt_sd,failures\n";
  for (const auto& row : rows) {
    out << csv::format_number(row.ratio);
    for (int q = 0; q < 4; ++q) {
      out << ',' << csv::format_number(row.mean[q]) << ',' << csv::format_number(row.sd[q]);
    }
    out << ',' << row.failures << '\n';
  }
}

}  // namespace plantbp
