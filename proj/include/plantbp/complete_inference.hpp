#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "plantbp/dynamics.hpp"
#include "plantbp/params.hpp"

namespace plantbp {

// Estimators for fully observed trajectories. Every estimator reduces over
// populations in index order, so results are bit-reproducible.

/// Binomial thinning rates: c = sum V / sum R and d = sum F / sum V, with
/// plug-in asymptotic variances c(1-c) / sum R and d(1-d) / sum V.
struct ThinningEstimate {
  double vernalization = 0.0;
  double maturation = 0.0;
  double vernalization_variance = 0.0;
  double maturation_variance = 0.0;
};

/// Throws inestimable_error when sum R or sum V is zero.
ThinningEstimate estimate_cd(const CompleteDataset& data);

struct ProportionEstimate {
  double value = 0.0;
  double variance = 0.0;
};

/// The two halves of estimate_cd; c is estimable whenever sum R > 0, even if
/// d is not.
ProportionEstimate estimate_vernalization(const CompleteDataset& data);
ProportionEstimate estimate_maturation(const CompleteDataset& data);

/// Two coefficients of a conditional least squares fit with their sandwich
/// covariance (already divided by K).
struct PairEstimate {
  double first = 0.0;
  double second = 0.0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();

  double first_se() const;
  double second_se() const;
};

/// (a, a') from regressing S_{i+1} on (S_i, T_i). Variance weights are
/// a(1-a) S_i + a'(1-a') T_i at the estimate. Throws collinearity_error.
PairEstimate cls_survival(const CompleteDataset& data);

/// (b, b') from regressing R_i on (S_i, T_i).
PairEstimate cls_germination(const CompleteDataset& data);

/// (m, u) from regressing T_{i+1} on (F_i, 1). Variance weights
/// delta^2 F_i + rho^2 use plug-ins from regressing squared residuals on
/// (F_i, 1), each clamped at zero.
struct ReproductionEstimate : PairEstimate {
  double offspring_variance = 0.0;   // delta^2 plug-in
  double immigration_variance = 0.0; // rho^2 plug-in
};

ReproductionEstimate cls_reproduction(const CompleteDataset& data);

/// Poisson MLE of the initial seed means: sample means of S_0 and T_0.
struct InitialEstimate {
  double initial_bank = 0.0;
  double initial_new = 0.0;
  double initial_bank_variance = 0.0;  // sigma / K
  double initial_new_variance = 0.0;   // tau / K
};

InitialEstimate estimate_initial(const CompleteDataset& data);

struct CompleteEstimates {
  ThinningEstimate thinning;
  PairEstimate survival;
  PairEstimate germination;
  ReproductionEstimate reproduction;
  InitialEstimate initial;
  /// Probability estimates outside (0,1) are reported, not clamped.
  std::vector<std::string> warnings;
};

CompleteEstimates estimate_complete(const CompleteDataset& data);

/// Exact complete-data log-likelihood under Poisson offspring, immigration and
/// initial laws, split by parameter group. All normalizing constants included.
struct CompleteLoglik {
  double initial = 0.0;       // S_0, T_0 Poisson terms
  double seed_fate = 0.0;     // joint (S_{i+1}, R_i) given (S_i, T_i)
  double vernalization = 0.0; // V_i given R_i
  double maturation = 0.0;    // F_i given V_i
  double reproduction = 0.0;  // T_{i+1} given F_i

  double total() const {
    return initial + seed_fate + vernalization + maturation + reproduction;
  }
};

/// Largest count accepted by the seed-fate convolution.
inline constexpr count_t kMaxConvolutionCount = 1000;

/// Throws domain_error for invalid or non-Poisson params, or when a count
/// entering the seed-fate convolution exceeds kMaxConvolutionCount.
CompleteLoglik complete_loglik_poisson(const CompleteDataset& data,
                                       const DemographicParams& params);

}  // namespace plantbp
