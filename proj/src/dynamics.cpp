#include "plantbp/dynamics.hpp"

#include <array>
#include <string>

#include "plantbp/error.hpp"
#include "plantbp/parallel.hpp"

namespace plantbp {

namespace {

}  // namespace

PopulationState develop(const DemographicParams& params, count_t old_seeds, count_t new_seeds,
                        RandomStream& rng) {
  PopulationState x;
  x.old_seeds = old_seeds;
  x.new_seeds = new_seeds;
  const std::array<double, 2> bank_probs{params.bank_survival, params.bank_germination};
  const std::array<double, 2> new_probs{params.new_survival, params.new_germination};
  const auto from_bank = sample_multinomial(x.old_seeds, bank_probs, rng);
  const auto from_new = sample_multinomial(x.new_seeds, new_probs, rng);
  x.next_bank = from_bank[0] + from_new[0];
  x.rosettes = from_bank[1] + from_new[1];
  x.vernalized = sample_binomial(x.rosettes, params.vernalization, rng);
  x.mature = sample_binomial(x.vernalized, params.maturation, rng);
  return x;
}

namespace {

count_t shed_seeds(const DemographicParams& params, count_t mature, RandomStream& rng) {
  const count_t offspring = sample_offspring_total(mature, params.offspring, rng);
  return offspring + sample(params.immigration, rng);
}

template <class Column>
void require_length(const Column& column, std::size_t expected, std::size_t pop,
                    const char* name) {
  if (column.size() != expected) {
    throw domain_error("population " + std::to_string(pop) + ": column " + name + " has " +
                       std::to_string(column.size()) + " cycles, expected " +
                       std::to_string(expected));
  }
  for (count_t v : column) {
    if (v < 0) {
      throw domain_error("population " + std::to_string(pop) + ": negative count in " + name);
    }
  }
}

}  // namespace

PopulationState init_population(const DemographicParams& params, RandomStream& rng) {
  const count_t old_seeds = sample_poisson(params.initial_bank, rng);
  const count_t new_seeds = sample_poisson(params.initial_new, rng);
  return develop(params, old_seeds, new_seeds, rng);
}

PopulationState step(const DemographicParams& params, const PopulationState& state,
                     RandomStream& rng) {
  const count_t new_seeds = shed_seeds(params, state.mature, rng);
  return develop(params, state.next_bank, new_seeds, rng);
}

CompleteDataset simulate(const DemographicParams& params, int last_cycle, int populations,
                         std::uint64_t master_seed, unsigned threads) {
  params.validate();
  if (last_cycle < 0) throw domain_error("last cycle index n must be >= 0");
  if (populations < 1) throw domain_error("population count K must be >= 1");

  CompleteDataset data;
  data.last_cycle = last_cycle;
  data.populations.resize(static_cast<std::size_t>(populations));
  const auto cycles = static_cast<std::size_t>(last_cycle) + 1;

  parallel_for(data.populations.size(), threads, [&](std::size_t k) {
    RandomStream rng(master_seed, k);
    Trajectory& traj = data.populations[k];
    for (auto* column : {&traj.old_seeds, &traj.new_seeds, &traj.rosettes, &traj.vernalized,
                         &traj.mature}) {
      column->reserve(cycles);
    }
    PopulationState x = init_population(params, rng);
    for (std::size_t i = 0;; ++i) {
      traj.old_seeds.push_back(x.old_seeds);
      traj.new_seeds.push_back(x.new_seeds);
      traj.rosettes.push_back(x.rosettes);
      traj.vernalized.push_back(x.vernalized);
      traj.mature.push_back(x.mature);
      if (i + 1 == cycles) break;
      x = step(params, x, rng);
    }
    traj.terminal_old_seeds = x.next_bank;
    traj.terminal_new_seeds = shed_seeds(params, x.mature, rng);
  });
  return data;
}

ObservedDataset observe(const CompleteDataset& data) {
  ObservedDataset out;
  out.last_cycle = data.last_cycle;
  out.populations.reserve(data.populations.size());
  for (const auto& traj : data.populations) {
    out.populations.push_back({traj.rosettes, traj.vernalized, traj.mature});
  }
  return out;
}

void CompleteDataset::validate() const {
  if (last_cycle < 0) throw domain_error("last cycle index must be >= 0");
  const auto cycles = static_cast<std::size_t>(last_cycle) + 1;
  for (std::size_t k = 0; k < populations.size(); ++k) {
    const auto& t = populations[k];
    require_length(t.old_seeds, cycles, k, "S");
    require_length(t.new_seeds, cycles, k, "T");
    require_length(t.rosettes, cycles, k, "R");
    require_length(t.vernalized, cycles, k, "V");
    require_length(t.mature, cycles, k, "F");
    if (t.terminal_old_seeds < 0 || t.terminal_new_seeds < 0) {
      throw domain_error("population " + std::to_string(k) + ": negative terminal seed count");
    }
  }
}

void ObservedDataset::validate() const {
  if (last_cycle < 0) throw domain_error("last cycle index must be >= 0");
  const auto cycles = static_cast<std::size_t>(last_cycle) + 1;
  for (std::size_t k = 0; k < populations.size(); ++k) {
    const auto& t = populations[k];
    require_length(t.rosettes, cycles, k, "R");
    require_length(t.vernalized, cycles, k, "V");
    require_length(t.mature, cycles, k, "F");
  }
}

}  // namespace plantbp
