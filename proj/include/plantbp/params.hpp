#pragma once

#include "plantbp/distributions.hpp"

namespace plantbp {

/// Parameters of one annual-plant life cycle.
///
/// Seeds live in two pools: the soil seed bank ("old" seeds) and seeds freshly
/// shed or immigrated onto the surface ("new" seeds). Each cycle an old seed
/// stays in the bank with probability `bank_survival`, emerges as a rosette
/// with probability `bank_germination`, or dies; a new seed enters the bank
/// with probability `new_survival`, emerges with `new_germination`, or dies.
/// Rosettes vernalize with probability `vernalization`, vernalized rosettes
/// mature with probability `maturation`, and each mature plant sheds
/// `offspring` new seeds. `immigration` new seeds arrive every cycle. Initial
/// pools are Poisson with means `initial_bank` and `initial_new`.
struct DemographicParams {
  double bank_survival = 0.0;
  double bank_germination = 0.0;
  double new_survival = 0.0;
  double new_germination = 0.0;
  double vernalization = 0.0;
  double maturation = 0.0;
  DistributionSpec offspring;
  DistributionSpec immigration;
  double initial_bank = 0.0;
  double initial_new = 0.0;

  // Throws domain_error naming the violated invariant.
  void validate() const;
};

/// The feral oilseed rape values used for the robustness study: a = 0.15,
/// a' = 0.006, b = b' = 0.5, c = 0.21, d = 0.01, Poisson offspring with mean 13,
/// Poisson immigration with mean 80, initial means 50 and 50.
DemographicParams reference_params();

}  // namespace plantbp
