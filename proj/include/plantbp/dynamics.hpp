#pragma once

#include <cstdint>
#include <vector>

#include "plantbp/distributions.hpp"
#include "plantbp/params.hpp"
#include "plantbp/rng.hpp"

namespace plantbp {

/// Stage counts of one population in one cycle: old seeds S, new seeds T,
/// rosettes R, vernalized rosettes V, mature plants F.
///
/// Rosettes of cycle i and the seed bank of cycle i+1 come out of the same
/// multinomial split of (S_i, T_i), so the bank carried into the next cycle is
/// realized together with R_i and stored in `next_bank`.
struct PopulationState {
  count_t old_seeds = 0;
  count_t new_seeds = 0;
  count_t rosettes = 0;
  count_t vernalized = 0;
  count_t mature = 0;
  count_t next_bank = 0;

  bool operator==(const PopulationState&) const = default;
};

/// Within-cycle draws given the seed pools (S_i, T_i): the multinomial split
/// of each pool into (stay in bank, emerge), then V_i and F_i.
PopulationState develop(const DemographicParams& params, count_t old_seeds, count_t new_seeds,
                        RandomStream& rng);

/// Draws (S_0, T_0) from independent Poissons, then R_0, V_0, F_0.
PopulationState init_population(const DemographicParams& params, RandomStream& rng);

/// One full life cycle: S_{i+1} is the carried bank, T_{i+1} is offspring of
/// F_i plus immigrants, then R_{i+1} (with the next bank), V_{i+1}, F_{i+1}.
PopulationState step(const DemographicParams& params, const PopulationState& state,
                     RandomStream& rng);

/// Full trajectory X_0..X_n of one population, stored column-per-stage, plus
/// the terminal seed pair (S_{n+1}, T_{n+1}).
struct Trajectory {
  std::vector<count_t> old_seeds;
  std::vector<count_t> new_seeds;
  std::vector<count_t> rosettes;
  std::vector<count_t> vernalized;
  std::vector<count_t> mature;
  count_t terminal_old_seeds = 0;
  count_t terminal_new_seeds = 0;

  std::size_t length() const { return rosettes.size(); }
  bool operator==(const Trajectory&) const = default;
};

struct CompleteDataset {
  int last_cycle = 0;  // n; each trajectory holds cycles 0..n
  std::vector<Trajectory> populations;

  std::size_t population_count() const { return populations.size(); }
  bool operator==(const CompleteDataset&) const = default;
  // Throws domain_error when lengths disagree or a count is negative.
  void validate() const;
};

/// Observed part (R, V, F) of a trajectory.
struct ObservedTrajectory {
  std::vector<count_t> rosettes;
  std::vector<count_t> vernalized;
  std::vector<count_t> mature;

  std::size_t length() const { return rosettes.size(); }
  bool operator==(const ObservedTrajectory&) const = default;
};

struct ObservedDataset {
  int last_cycle = 0;
  std::vector<ObservedTrajectory> populations;

  std::size_t population_count() const { return populations.size(); }
  bool operator==(const ObservedDataset&) const = default;
  void validate() const;
};

/// K independent trajectories over cycles 0..n; population k draws from
/// stream (master_seed, k). Output is identical for every thread count.
CompleteDataset simulate(const DemographicParams& params, int last_cycle, int populations,
                         std::uint64_t master_seed, unsigned threads = 1);

/// Drops the seed stages and the terminal seed pair.
ObservedDataset observe(const CompleteDataset& data);

}  // namespace plantbp
