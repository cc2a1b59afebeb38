#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plantbp/identifiability.hpp"
#include "plantbp/intensity.hpp"

namespace plantbp {

struct FitOptions {
  ParameterBox box;
  int max_iterations = 200;
  double loglik_tolerance = 1e-10;  // relative change of the log-likelihood
  double step_tolerance = 1e-8;     // norm of the accepted step
  double max_condition = kMaxFisherCondition;
};

struct FullFitOptions : FitOptions {
  FullFitOptions() { max_iterations = 500; }

  /// Total starting points: the seed plus Latin-hypercube perturbations of it.
  int starts = 8;
  std::uint64_t seed = 20240917;
  /// Coarse grid for (a, a'b/b'); the reduced fit at each grid point gives a
  /// candidate seed and the best log-likelihood wins.
  std::vector<double> survival_grid = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35,
                                       0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70,
                                       0.75, 0.80, 0.85, 0.90, 0.95};
  std::vector<double> carryover_grid = {1e-3, 1e-2, 1e-1, 1.0, 10.0};
  /// Replaces the grid seed when set.
  std::optional<IdentifiableParams> initial;
  /// |a - g| < degeneracy_tolerance * a flags near non-identifiability.
  double degeneracy_tolerance = 1e-3;
  /// Starts run concurrently; the result does not depend on this.
  unsigned threads = 1;
};

struct PhiEstimateReport {
  IdentifiableParams phi_hat;
  std::array<bool, 6> estimated{};  // false for components held at known values
  double loglik = 0.0;              // without the -log r! terms
  PhiMatrix fisher = PhiMatrix::Zero();  // empirical information per population at phi_hat
  /// Inverse information of the estimated block divided by K; rows and
  /// columns of fixed components are zero. Absent when the information is
  /// singular or worse conditioned than the threshold.
  std::optional<PhiMatrix> covariance;
  double condition_number = 0.0;  // of the estimated block of `fisher`
  int iterations = 0;
  bool converged = false;
  std::array<bool, 6> at_lower{};
  std::array<bool, 6> at_upper{};
  int populations = 0;

  IdentifiabilityDescription identifiable;
  /// Set when the data identify less than the estimated components (n < 3 or
  /// a == a'b/b'); `reported` then lists what is identified.
  bool partial = false;
  std::vector<IdentifiableFunctional> reported;
  std::vector<double> reported_values;

  int starts_tried = 0;
  int starts_converged = 0;
  std::vector<double> loglik_trace;  // after each accepted iteration
  std::vector<std::string> warnings;

  /// NaN when no covariance is available or the component was fixed.
  double standard_error(PhiIndex p) const;
};

/// Fits (b'm, b'u, b sigma, b' tau) with a and a'b/b' held at known values.
/// Lambda is then linear in the four rates, so this is an identity-link
/// Poisson regression solved by Fisher scoring with an active-set projection
/// onto the box and step halving to keep the log-likelihood non-decreasing.
/// `init` orders the rates as (bm, bu, bs, bt); defaults to projected least
/// squares. Throws collinearity_error when the design has rank < 4.
PhiEstimateReport fit_phi_reduced(const ObservedDataset& data, double survival, double carryover,
                                  const std::optional<std::array<double, 4>>& init = std::nullopt,
                                  const FitOptions& options = {});

/// Maximizes the log-likelihood over all six components inside the box by
/// projected Fisher scoring with analytic gradients and a backtracking line
/// search, from several starts. For
/// n < 3 the result carries the identifiable functionals of the horizon
/// instead of a covariance.
PhiEstimateReport fit_phi_full(const ObservedDataset& data, const FullFitOptions& options = {});

}  // namespace plantbp
