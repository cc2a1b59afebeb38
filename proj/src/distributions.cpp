#include "plantbp/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "plantbp/error.hpp"

namespace plantbp {

namespace {

constexpr double kProbabilitySumTolerance = 1e-12;

// Gamma(shape, scale) mixed Poisson; shape > 0.
count_t sample_gamma_poisson(double shape, double scale, RandomStream& rng) {
  boost::random::gamma_distribution<double> gamma(shape, scale);
  return sample_poisson(gamma(rng), rng);
}

}  // namespace

std::string to_string(DistributionKind kind) {
  return kind == DistributionKind::poisson ? "poisson" : "negative_binomial";
}

DistributionSpec DistributionSpec::with_dispersion_ratio(double mean, double ratio) {
  if (!(ratio >= 1.0)) {
    throw domain_error("variance/mean ratio must be >= 1, got " + std::to_string(ratio));
  }
  if (ratio == 1.0) return poisson(mean);
  return negative_binomial(mean, ratio * mean);
}

void DistributionSpec::validate() const {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw domain_error("distribution mean must be finite and >= 0, got " + std::to_string(mean));
  }
  if (kind == DistributionKind::negative_binomial) {
    if (!(mean > 0.0)) {
      throw domain_error("negative binomial mean must be > 0");
    }
    if (!(variance > mean) || !std::isfinite(variance)) {
      throw domain_error("negative binomial requires variance > mean (got mean " +
                         std::to_string(mean) + ", variance " + std::to_string(variance) +
                         "); use a Poisson law instead");
    }
  }
}

NegativeBinomialShape negative_binomial_shape(const DistributionSpec& spec) {
  if (spec.kind != DistributionKind::negative_binomial) {
    throw domain_error("negative_binomial_shape called on a Poisson spec");
  }
  spec.validate();
  return {spec.mean * spec.mean / (spec.variance - spec.mean), spec.mean / spec.variance};
}

count_t sample_binomial(count_t trials, double prob, RandomStream& rng) {
  if (trials < 0) throw domain_error("binomial trial count must be >= 0");
  if (!(prob >= 0.0 && prob <= 1.0)) {
    throw domain_error("binomial probability must lie in [0,1], got " + std::to_string(prob));
  }
  if (trials == 0 || prob == 0.0) return 0;
  if (prob == 1.0) return trials;
  boost::random::binomial_distribution<count_t, double> dist(trials, prob);
  return dist(rng);
}

std::vector<count_t> sample_multinomial(count_t trials, std::span<const double> probs,
                                        RandomStream& rng) {
  if (trials < 0) throw domain_error("multinomial trial count must be >= 0");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw domain_error("multinomial cell probability must be >= 0");
    total += p;
  }
  if (total > 1.0 + kProbabilitySumTolerance) {
    throw domain_error("multinomial cell probabilities sum to " + std::to_string(total) + " > 1");
  }

  // Sequential conditional binomials: cell j gets Bin(remaining, p_j / mass_j)
  // where mass_j is the probability not yet assigned to earlier cells.
  std::vector<count_t> cells(probs.size(), 0);
  count_t remaining = trials;
  double mass = 1.0;
  for (std::size_t j = 0; j < probs.size() && remaining > 0; ++j) {
    if (mass <= 0.0) break;
    const double conditional = std::min(1.0, probs[j] / mass);
    cells[j] = sample_binomial(remaining, conditional, rng);
    remaining -= cells[j];
    mass -= probs[j];
  }
  return cells;
}

count_t sample_poisson(double mean, RandomStream& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw domain_error("Poisson mean must be finite and >= 0, got " + std::to_string(mean));
  }
  if (mean == 0.0) return 0;
  boost::random::poisson_distribution<count_t, double> dist(mean);
  return dist(rng);
}

count_t sample_negative_binomial(const DistributionSpec& spec, RandomStream& rng) {
  const auto [shape, p] = negative_binomial_shape(spec);
  return sample_gamma_poisson(shape, (1.0 - p) / p, rng);
}

count_t sample(const DistributionSpec& spec, RandomStream& rng) {
  if (spec.kind == DistributionKind::poisson) return sample_poisson(spec.mean, rng);
  return sample_negative_binomial(spec, rng);
}

// Uses closure under convolution: a sum of f Poisson(m) draws is Poisson(f m),
// and a sum of f NB(r, p) draws is NB(f r, p).
count_t sample_offspring_total(count_t parents, const DistributionSpec& spec, RandomStream& rng) {
  if (parents < 0) throw domain_error("parent count must be >= 0");
  if (parents == 0) return 0;
  if (spec.kind == DistributionKind::poisson) {
    spec.validate();
    return sample_poisson(static_cast<double>(parents) * spec.mean, rng);
  }
  const auto [shape, p] = negative_binomial_shape(spec);
  return sample_gamma_poisson(static_cast<double>(parents) * shape, (1.0 - p) / p, rng);
}

}  // namespace plantbp
