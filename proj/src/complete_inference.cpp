#include "plantbp/complete_inference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "plantbp/error.hpp"

namespace plantbp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kSingularTolerance = 1e-12;

// x * log(p) with the 0 * log(0) = 0 convention.
double xlogp(double x, double p) {
  if (x == 0.0) return 0.0;
  if (p <= 0.0) return kNegInf;
  return x * std::log(p);
}

double log_factorial(count_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }

double log_poisson_pmf(count_t k, double mean) {
  if (mean == 0.0) return k == 0 ? 0.0 : kNegInf;
  return xlogp(static_cast<double>(k), mean) - mean - log_factorial(k);
}

double log_binomial_pmf(count_t k, count_t n, double p) {
  if (k < 0 || k > n) return kNegInf;
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k) +
         xlogp(static_cast<double>(k), p) + xlogp(static_cast<double>(n - k), 1.0 - p);
}

// Multinomial(n; p1, p2, 1 - p1 - p2) at (k1, k2, n - k1 - k2).
double log_trinomial_pmf(count_t k1, count_t k2, count_t n, double p1, double p2) {
  const count_t rest = n - k1 - k2;
  if (k1 < 0 || k2 < 0 || rest < 0) return kNegInf;
  return log_factorial(n) - log_factorial(k1) - log_factorial(k2) - log_factorial(rest) +
         xlogp(static_cast<double>(k1), p1) + xlogp(static_cast<double>(k2), p2) +
         xlogp(static_cast<double>(rest), 1.0 - p1 - p2);
}

// log of (M(s; a, b) * M(t; a', b'))(next_bank, rosettes): sum over how many
// of the carried seeds and the rosettes come from the old pool.
double log_seed_fate(count_t s, count_t t, count_t next_bank, count_t rosettes,
                     const DemographicParams& p) {
  for (count_t v : {s, t, next_bank, rosettes}) {
    if (v > kMaxConvolutionCount) {
      throw domain_error("seed-fate convolution refused: count " + std::to_string(v) +
                         " exceeds " + std::to_string(kMaxConvolutionCount));
    }
  }
  std::vector<double> terms;
  for (count_t bank_old = 0; bank_old <= std::min(s, next_bank); ++bank_old) {
    const count_t bank_new = next_bank - bank_old;
    if (bank_new > t) continue;
    for (count_t ros_old = 0; ros_old <= std::min(s - bank_old, rosettes); ++ros_old) {
      const count_t ros_new = rosettes - ros_old;
      if (bank_new + ros_new > t) continue;
      const double term =
          log_trinomial_pmf(bank_old, ros_old, s, p.bank_survival, p.bank_germination) +
          log_trinomial_pmf(bank_new, ros_new, t, p.new_survival, p.new_germination);
      if (term > kNegInf) terms.push_back(term);
    }
  }
  if (terms.empty()) return kNegInf;
  const double top = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (double v : terms) acc += std::exp(v - top);
  return top + std::log(acc);
}

struct Regression2 {
  Eigen::Matrix2d gram = Eigen::Matrix2d::Zero();
  Eigen::Vector2d cross = Eigen::Vector2d::Zero();
  void add(double x0, double x1, double y) {
    gram(0, 0) += x0 * x0;
    gram(0, 1) += x0 * x1;
    gram(1, 1) += x1 * x1;
    cross(0) += x0 * y;
    cross(1) += x1 * y;
  }
};

// Explicit inverse of the symmetric 2x2 Gram matrix. `names` label the two
// coefficients and `regressors` the two design columns, for diagnostics.
Eigen::Matrix2d invert_gram(const Eigen::Matrix2d& g, const std::array<const char*, 2>& names,
                            const std::array<const char*, 2>& regressors) {
  const double g00 = g(0, 0), g01 = g(0, 1), g11 = g(1, 1);
  if (g00 == 0.0 || g11 == 0.0) {
    const int zero = g00 == 0.0 ? 0 : 1;
    throw collinearity_error({names[zero]}, std::string(names[zero]) +
                                                " is unidentified: regressor " +
                                                regressors[zero] + " is zero in every row");
  }
  const double det = g00 * g11 - g01 * g01;
  if (!(det > kSingularTolerance * g00 * g11)) {
    throw collinearity_error({names[0], names[1]},
                             std::string(names[0]) + " and " + names[1] +
                                 " are not separately identified: regressors " + regressors[0] +
                                 " and " + regressors[1] + " are collinear");
  }
  Eigen::Matrix2d inv;
  inv << g11, -g01, -g01, g00;
  return inv / det;
}

Eigen::Matrix2d symmetrized(const Eigen::Matrix2d& m) { return 0.5 * (m + m.transpose()); }

double binomial_weight(double p) { return std::max(0.0, p * (1.0 - p)); }

template <class Response>
PairEstimate seed_regression(const CompleteDataset& data, Response response,
                             const std::array<const char*, 2>& names) {
  Regression2 reg;
  for (const auto& t : data.populations) {
    for (std::size_t i = 0; i < t.length(); ++i) {
      reg.add(static_cast<double>(t.old_seeds[i]), static_cast<double>(t.new_seeds[i]),
              static_cast<double>(response(t, i)));
    }
  }
  const Eigen::Matrix2d inv = invert_gram(reg.gram.selfadjointView<Eigen::Upper>(), names,
                                          {"S_i", "T_i"});
  const Eigen::Vector2d coef = inv * reg.cross;

  const double w_old = binomial_weight(coef(0));
  const double w_new = binomial_weight(coef(1));
  Eigen::Matrix2d meat = Eigen::Matrix2d::Zero();
  for (const auto& t : data.populations) {
    for (std::size_t i = 0; i < t.length(); ++i) {
      const Eigen::Vector2d z(static_cast<double>(t.old_seeds[i]),
                              static_cast<double>(t.new_seeds[i]));
      meat += (w_old * z(0) + w_new * z(1)) * z * z.transpose();
    }
  }
  PairEstimate out;
  out.first = coef(0);
  out.second = coef(1);
  out.covariance = symmetrized(inv * meat * inv);
  return out;
}

void require_poisson_params(const DemographicParams& params) {
  params.validate();
  if (params.offspring.kind != DistributionKind::poisson ||
      params.immigration.kind != DistributionKind::poisson) {
    throw domain_error("complete_loglik_poisson requires Poisson offspring and immigration");
  }
}

void warn_if_outside_unit(std::vector<std::string>& warnings, const char* name, double v) {
  if (!(v > 0.0 && v < 1.0)) {
    warnings.push_back(std::string(name) + " estimate " + std::to_string(v) +
                       " lies outside (0,1)");
  }
}

}  // namespace

double PairEstimate::first_se() const { return std::sqrt(std::max(0.0, covariance(0, 0))); }
double PairEstimate::second_se() const { return std::sqrt(std::max(0.0, covariance(1, 1))); }

namespace {

struct StageSums {
  double rosettes = 0.0, vernalized = 0.0, mature = 0.0;
};

StageSums stage_sums(const CompleteDataset& data) {
  StageSums s;
  for (const auto& t : data.populations) {
    for (std::size_t i = 0; i < t.length(); ++i) {
      s.rosettes += static_cast<double>(t.rosettes[i]);
      s.vernalized += static_cast<double>(t.vernalized[i]);
      s.mature += static_cast<double>(t.mature[i]);
    }
  }
  return s;
}

ProportionEstimate proportion(double hits, double trials) {
  const double p = hits / trials;
  return {p, p * (1.0 - p) / trials};
}

}  // namespace

ProportionEstimate estimate_vernalization(const CompleteDataset& data) {
  const auto s = stage_sums(data);
  if (s.rosettes == 0.0) {
    throw inestimable_error("vernalization", "c is inestimable: no rosettes (sum R = 0)");
  }
  return proportion(s.vernalized, s.rosettes);
}

ProportionEstimate estimate_maturation(const CompleteDataset& data) {
  const auto s = stage_sums(data);
  if (s.vernalized == 0.0) {
    throw inestimable_error("maturation", "d is inestimable: no vernalized rosettes (sum V = 0)");
  }
  return proportion(s.mature, s.vernalized);
}

ThinningEstimate estimate_cd(const CompleteDataset& data) {
  const auto c = estimate_vernalization(data);
  const auto d = estimate_maturation(data);
  return {c.value, d.value, c.variance, d.variance};
}

PairEstimate cls_survival(const CompleteDataset& data) {
  return seed_regression(
      data,
      [](const Trajectory& t, std::size_t i) {
        return i + 1 < t.length() ? t.old_seeds[i + 1] : t.terminal_old_seeds;
      },
      {"a", "a'"});
}

PairEstimate cls_germination(const CompleteDataset& data) {
  return seed_regression(
      data, [](const Trajectory& t, std::size_t i) { return t.rosettes[i]; }, {"b", "b'"});
}

ReproductionEstimate cls_reproduction(const CompleteDataset& data) {
  auto next_new = [](const Trajectory& t, std::size_t i) {
    return static_cast<double>(i + 1 < t.length() ? t.new_seeds[i + 1] : t.terminal_new_seeds);
  };

  Regression2 reg;
  for (const auto& t : data.populations) {
    for (std::size_t i = 0; i < t.length(); ++i) {
      reg.add(static_cast<double>(t.mature[i]), 1.0, next_new(t, i));
    }
  }
  const Eigen::Matrix2d inv =
      invert_gram(reg.gram.selfadjointView<Eigen::Upper>(), {"m", "u"}, {"F_i", "1"});
  const Eigen::Vector2d coef = inv * reg.cross;

  // Squared residuals have conditional mean delta^2 F_i + rho^2.
  Eigen::Vector2d resid_cross = Eigen::Vector2d::Zero();
  for (const auto& t : data.populations) {
    for (std::size_t i = 0; i < t.length(); ++i) {
      const double f = static_cast<double>(t.mature[i]);
      const double e = next_new(t, i) - coef(0) * f - coef(1);
      resid_cross += Eigen::Vector2d(f, 1.0) * (e * e);
    }
  }
  const Eigen::Vector2d moments = inv * resid_cross;
  const double delta2 = std::max(0.0, moments(0));
  const double rho2 = std::max(0.0, moments(1));

  Eigen::Matrix2d meat = Eigen::Matrix2d::Zero();
  for (const auto& t : data.populations) {
    for (std::size_t i = 0; i < t.length(); ++i) {
      const double f = static_cast<double>(t.mature[i]);
      const Eigen::Vector2d z(f, 1.0);
      meat += (delta2 * f + rho2) * z * z.transpose();
    }
  }
  ReproductionEstimate out;
  out.first = coef(0);
  out.second = coef(1);
  out.covariance = symmetrized(inv * meat * inv);
  out.offspring_variance = delta2;
  out.immigration_variance = rho2;
  return out;
}

InitialEstimate estimate_initial(const CompleteDataset& data) {
  if (data.populations.empty()) throw domain_error("estimate_initial needs K >= 1");
  double sum_s = 0.0, sum_t = 0.0;
  for (const auto& t : data.populations) {
    sum_s += static_cast<double>(t.old_seeds.at(0));
    sum_t += static_cast<double>(t.new_seeds.at(0));
  }
  const auto k = static_cast<double>(data.populations.size());
  InitialEstimate out;
  out.initial_bank = sum_s / k;
  out.initial_new = sum_t / k;
  out.initial_bank_variance = out.initial_bank / k;
  out.initial_new_variance = out.initial_new / k;
  return out;
}

CompleteEstimates estimate_complete(const CompleteDataset& data) {
  data.validate();
  CompleteEstimates out;
  out.thinning = estimate_cd(data);
  out.survival = cls_survival(data);
  out.germination = cls_germination(data);
  out.reproduction = cls_reproduction(data);
  out.initial = estimate_initial(data);
  warn_if_outside_unit(out.warnings, "c", out.thinning.vernalization);
  warn_if_outside_unit(out.warnings, "d", out.thinning.maturation);
  warn_if_outside_unit(out.warnings, "a", out.survival.first);
  warn_if_outside_unit(out.warnings, "a'", out.survival.second);
  warn_if_outside_unit(out.warnings, "b", out.germination.first);
  warn_if_outside_unit(out.warnings, "b'", out.germination.second);
  return out;
}

CompleteLoglik complete_loglik_poisson(const CompleteDataset& data,
                                       const DemographicParams& params) {
  require_poisson_params(params);
  data.validate();
  const double m = params.offspring.mean;
  const double u = params.immigration.mean;

  CompleteLoglik ll;
  for (const auto& t : data.populations) {
    ll.initial += log_poisson_pmf(t.old_seeds[0], params.initial_bank) +
                  log_poisson_pmf(t.new_seeds[0], params.initial_new);
    for (std::size_t i = 0; i < t.length(); ++i) {
      const bool last = i + 1 == t.length();
      const count_t next_bank = last ? t.terminal_old_seeds : t.old_seeds[i + 1];
      const count_t next_new = last ? t.terminal_new_seeds : t.new_seeds[i + 1];
      ll.seed_fate += log_seed_fate(t.old_seeds[i], t.new_seeds[i], next_bank, t.rosettes[i],
                                    params);
      ll.vernalization += log_binomial_pmf(t.vernalized[i], t.rosettes[i], params.vernalization);
      ll.maturation += log_binomial_pmf(t.mature[i], t.vernalized[i], params.maturation);
      ll.reproduction +=
          log_poisson_pmf(next_new, m * static_cast<double>(t.mature[i]) + u);
    }
  }
  return ll;
}

}  // namespace plantbp
