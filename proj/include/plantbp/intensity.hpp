#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "plantbp/distributions.hpp"
#include "plantbp/dynamics.hpp"
#include "plantbp/params.hpp"

namespace plantbp {

using PhiVector = Eigen::Matrix<double, 6, 1>;
using PhiMatrix = Eigen::Matrix<double, 6, 6>;

/// Component order used by every 6-vector and 6x6 matrix over phi.
enum PhiIndex : Eigen::Index {
  kSurvival = 0,    // a
  kCarryover = 1,   // a' b / b'
  kOffspring = 2,   // b' m
  kImmigration = 3, // b' u
  kInitialBank = 4, // b sigma
  kInitialNew = 5,  // b' tau
};

/// Short labels used in reports and CSV files, in PhiIndex order.
inline constexpr std::array<std::string_view, 6> kPhiNames = {"a", "g", "bm", "bu", "bs", "bt"};

/// The functions of the demographic parameters that govern the law of the
/// observed (R, V, F) process under Poisson offspring, immigration and
/// initial seeds.
struct IdentifiableParams {
  double bank_survival = 0.0;      // a
  double carryover = 0.0;          // a' b / b'
  double offspring_rate = 0.0;     // b' m
  double immigration_rate = 0.0;   // b' u
  double initial_bank_rate = 0.0;  // b sigma
  double initial_new_rate = 0.0;   // b' tau

  PhiVector to_vector() const;
  static IdentifiableParams from_vector(const PhiVector& v);
  bool operator==(const IdentifiableParams&) const = default;
};

IdentifiableParams identifiable_params(const DemographicParams& params);

/// Compact search box: rates in [rate_lower, rate_upper], a in
/// [survival_lower, survival_upper].
struct ParameterBox {
  double rate_lower = 1e-6;
  double rate_upper = 1e6;
  double survival_lower = 1e-3;
  double survival_upper = 1.0 - 1e-3;

  PhiVector lower() const;
  PhiVector upper() const;
  bool contains(const IdentifiableParams& phi) const;
  PhiVector project(const PhiVector& v) const;
  // Throws domain_error naming the first component outside the box.
  void require(const IdentifiableParams& phi) const;
};

/// Conditional rosette intensity along one observed history. Entry i holds
/// the expected rosettes from the bank (b Gamma_i), from new seeds
/// (b' Gamma'_i) and their sum Lambda_i.
struct IntensityPath {
  std::vector<double> from_bank;
  std::vector<double> from_new;
  std::vector<double> intensity;
};

/// Lambda_0..Lambda_n for the mature-plant history F_0..F_{n-1}; the result
/// has f_history.size() + 1 entries. O(n) via the two-pool recursion.
IntensityPath lambda_sequence(const IdentifiableParams& phi, std::span<const count_t> f_history);

/// Intensity of cycle i with an all-zero mature history (the deterministic
/// part of Lambda_i).
double baseline_intensity(const IdentifiableParams& phi, int cycle);

/// d Lambda_i / d phi for i = 0..n, from the closed-form derivative
/// expressions (not from the recursion).
std::vector<PhiVector> lambda_gradient(const IdentifiableParams& phi,
                                       std::span<const count_t> f_history);

/// Poisson log-likelihood of the rosette counts,
/// sum_k sum_i (r_i log Lambda_i - Lambda_i). The phi-free -log r! terms are
/// omitted, so values are comparable only between evaluations on the same
/// data. Throws domain_error when phi lies outside the box.
double incomplete_loglik(const IdentifiableParams& phi, const ObservedDataset& data,
                         const ParameterBox& box = {});

/// Log-likelihood together with its gradient in phi.
struct LoglikGradient {
  double loglik = 0.0;
  PhiVector gradient = PhiVector::Zero();
};

LoglikGradient incomplete_loglik_gradient(const IdentifiableParams& phi,
                                          const ObservedDataset& data,
                                          const ParameterBox& box = {});

/// Empirical information per population:
/// (1/K) sum_k sum_i (1/Lambda_i^k) dLambda_i^k/dphi_p dLambda_i^k/dphi_q.
PhiMatrix fisher_matrix(const IdentifiableParams& phi, const ObservedDataset& data);

/// Eigen-decomposition based inverse of a symmetric PSD matrix. The inverse
/// is withheld when the smallest eigenvalue is not positive or the condition
/// number exceeds `max_condition`.
struct SymmetricInverse {
  std::optional<Eigen::MatrixXd> inverse;
  Eigen::VectorXd eigenvalues;
  double condition_number = 0.0;
  int rank = 0;
};

inline constexpr double kMaxFisherCondition = 1e12;

SymmetricInverse invert_symmetric(const Eigen::MatrixXd& m,
                                  double max_condition = kMaxFisherCondition);

/// Simulates the observed process directly: R_i ~ Poisson(Lambda_i) given the
/// realized mature history, V_i ~ Bin(R_i, c), F_i ~ Bin(V_i, d). Population
/// k uses stream (master_seed, k).
ObservedDataset simulate_via_intensity(const IdentifiableParams& phi, int last_cycle,
                                       int populations, std::uint64_t master_seed,
                                       double vernalization, double maturation,
                                       unsigned threads = 1);

}  // namespace plantbp
