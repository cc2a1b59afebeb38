#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "plantbp/rng.hpp"

namespace plantbp {

using count_t = std::int64_t;

enum class DistributionKind { poisson, negative_binomial };

std::string to_string(DistributionKind kind);

/// Count law given by its first two moments. For Poisson the variance field
/// is ignored (variance == mean). A negative binomial must be strictly
/// overdispersed.
struct DistributionSpec {
  DistributionKind kind = DistributionKind::poisson;
  double mean = 0.0;
  double variance = 0.0;

  static DistributionSpec poisson(double mean) {
    return {DistributionKind::poisson, mean, mean};
  }
  static DistributionSpec negative_binomial(double mean, double variance) {
    return {DistributionKind::negative_binomial, mean, variance};
  }
  /// Negative binomial with variance = ratio * mean; ratio 1 gives Poisson.
  static DistributionSpec with_dispersion_ratio(double mean, double ratio);

  double effective_variance() const {
    return kind == DistributionKind::poisson ? mean : variance;
  }

  // Throws domain_error when the invariants do not hold.
  void validate() const;
};

/// Moment-matched negative binomial: shape r = mean^2 / (variance - mean) and
/// success probability p = mean / variance. r need not be an integer.
struct NegativeBinomialShape {
  double shape;
  double success_prob;
};

NegativeBinomialShape negative_binomial_shape(const DistributionSpec& spec);

count_t sample_binomial(count_t trials, double prob, RandomStream& rng);

/// Draws the explicit cells of Multinomial(trials; probs..., 1 - sum(probs)).
/// The residual cell is implicit and not returned.
std::vector<count_t> sample_multinomial(count_t trials, std::span<const double> probs,
                                        RandomStream& rng);

count_t sample_poisson(double mean, RandomStream& rng);

/// Gamma-Poisson mixture; spec.kind must be negative_binomial.
count_t sample_negative_binomial(const DistributionSpec& spec, RandomStream& rng);

count_t sample(const DistributionSpec& spec, RandomStream& rng);

/// Sum of `parents` independent draws from `spec`.
count_t sample_offspring_total(count_t parents, const DistributionSpec& spec, RandomStream& rng);

}  // namespace plantbp
