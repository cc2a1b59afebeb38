#pragma once

// Independent oracles and statistics used by the unit and acceptance tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "plantbp/distributions.hpp"
#include "plantbp/intensity.hpp"
#include "plantbp/rng.hpp"

namespace testsupport {

using plantbp::count_t;

struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double variance = 0.0;  // divisor n - 1
  double fourth = 0.0;    // central fourth moment, divisor n

  double se_mean() const { return std::sqrt(variance / n); }
  // Large-sample standard error of the sample variance.
  double se_variance() const {
    return std::sqrt(std::max(0.0, fourth - variance * variance) / n);
  }
};

template <class T>
Moments moments(const std::vector<T>& xs) {
  Moments m;
  m.n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (auto x : xs) sum += static_cast<double>(x);
  m.mean = sum / m.n;
  double s2 = 0.0, s4 = 0.0;
  for (auto x : xs) {
    const double d = static_cast<double>(x) - m.mean;
    s2 += d * d;
    s4 += d * d * d * d;
  }
  m.variance = s2 / (m.n - 1.0);
  m.fourth = s4 / m.n;
  return m;
}

template <class T, class U>
double correlation(const std::vector<T>& x, const std::vector<U>& y) {
  const auto mx = moments(x), my = moments(y);
  double c = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    c += (static_cast<double>(x[i]) - mx.mean) * (static_cast<double>(y[i]) - my.mean);
  }
  c /= static_cast<double>(x.size()) - 1.0;
  return c / std::sqrt(mx.variance * my.variance);
}

struct ChiSquare {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

inline double chi_square_upper(double statistic, int df) {
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), statistic));
}

/// Goodness of fit of counts to Poisson(lambda). Consecutive values are
/// pooled into cells with expected count >= 5; the last cell is the upper tail.
inline ChiSquare poisson_gof(const std::vector<count_t>& draws, double lambda) {
  const boost::math::poisson_distribution<> law(lambda);
  const double n = static_cast<double>(draws.size());
  std::vector<count_t> starts{0};
  std::vector<double> expected{0.0};
  double assigned = 0.0;
  for (count_t k = 0;; ++k) {
    const double tail_after = n * boost::math::cdf(boost::math::complement(law, static_cast<double>(k)));
    expected.back() += n * boost::math::pdf(law, static_cast<double>(k));
    if (tail_after < 5.0) break;
    if (expected.back() >= 5.0) {
      assigned += expected.back();
      starts.push_back(k + 1);
      expected.push_back(0.0);
    }
  }
  expected.back() = n - assigned;  // close the last cell as the upper tail
  if (expected.size() > 1 && expected.back() < 5.0) {
    expected[expected.size() - 2] += expected.back();
    expected.pop_back();
    starts.pop_back();
  }
  std::vector<double> observed(expected.size(), 0.0);
  for (auto x : draws) {
    const auto it = std::upper_bound(starts.begin(), starts.end(), x);
    observed[static_cast<std::size_t>(it - starts.begin()) - 1] += 1.0;
  }
  ChiSquare out;
  for (std::size_t c = 0; c < expected.size(); ++c) {
    out.statistic += (observed[c] - expected[c]) * (observed[c] - expected[c]) / expected[c];
  }
  out.df = static_cast<int>(expected.size()) - 1;
  out.p_value = out.df > 0 ? chi_square_upper(out.statistic, out.df) : 1.0;
  return out;
}

/// Pearson test of independence on a contingency table.
inline ChiSquare independence_test(const std::vector<std::vector<double>>& table) {
  const std::size_t rows = table.size(), cols = table.front().size();
  std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      row_sum[r] += table[r][c];
      col_sum[c] += table[r][c];
      total += table[r][c];
    }
  }
  ChiSquare out;
  int used_rows = 0, used_cols = 0;
  for (double v : row_sum) used_rows += v > 0.0;
  for (double v : col_sum) used_cols += v > 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double e = row_sum[r] * col_sum[c] / total;
      if (e > 0.0) out.statistic += (table[r][c] - e) * (table[r][c] - e) / e;
    }
  }
  out.df = (used_rows - 1) * (used_cols - 1);
  out.p_value = out.df > 0 ? chi_square_upper(out.statistic, out.df) : 1.0;
  return out;
}

/// Two-sample chi-square homogeneity test of two count samples over shared
/// cells pooled so that each pooled expected count is at least 5.
inline ChiSquare homogeneity_test(const std::vector<count_t>& x, const std::vector<count_t>& y) {
  const auto top = std::max(*std::max_element(x.begin(), x.end()), *std::max_element(y.begin(), y.end()));
  std::vector<double> hx(static_cast<std::size_t>(top) + 1, 0.0), hy(hx.size(), 0.0);
  for (auto v : x) hx[static_cast<std::size_t>(v)] += 1.0;
  for (auto v : y) hy[static_cast<std::size_t>(v)] += 1.0;
  std::vector<std::vector<double>> table(2);
  double ax = 0.0, ay = 0.0;
  for (std::size_t v = 0; v < hx.size(); ++v) {
    ax += hx[v];
    ay += hy[v];
    if (ax + ay >= 20.0) {
      table[0].push_back(ax);
      table[1].push_back(ay);
      ax = ay = 0.0;
    }
  }
  if (ax + ay > 0.0) {
    if (table[0].empty()) {
      table[0].push_back(0.0);
      table[1].push_back(0.0);
    }
    table[0].back() += ax;
    table[1].back() += ay;
  }
  return independence_test(table);
}

/// Lambda_i from the expanded sum formula (not the two-pool recursion).
template <class Real = double>
Real lambda_closed_form(const std::array<Real, 6>& phi, const std::vector<count_t>& f,
                        std::size_t i) {
  const Real a = phi[0], g = phi[1], bm = phi[2], bu = phi[3], bs = phi[4], bt = phi[5];
  if (i == 0) return bs + bt;
  auto power = [&](std::size_t k) {
    Real x = 1;
    for (std::size_t j = 0; j < k; ++j) x *= a;
    return x;
  };
  Real history = 0;
  for (std::size_t j = 0; j + 2 <= i; ++j) history += power(i - 2 - j) * static_cast<Real>(f[j]);
  const Real ai = power(i);
  const Real aim1 = power(i - 1);
  return bm * static_cast<Real>(f[i - 1]) + g * bm * history + ai * bs + aim1 * g * bt +
         g * bu * (1 - aim1) / (1 - a) + bu;
}

inline double lambda_closed_form(const plantbp::IdentifiableParams& phi,
                                 const std::vector<count_t>& f, std::size_t i) {
  const auto v = phi.to_vector();
  return lambda_closed_form<double>({v(0), v(1), v(2), v(3), v(4), v(5)}, f, i);
}

/// Central differences of lambda_closed_form in 50-digit arithmetic with step
/// 1e-6 * max(1, |phi_p|).
inline plantbp::PhiVector lambda_fd_gradient(const plantbp::IdentifiableParams& phi,
                                             const std::vector<count_t>& f, std::size_t i) {
  using Real = boost::multiprecision::cpp_bin_float_50;
  const auto v = phi.to_vector();
  const std::array<Real, 6> base{v(0), v(1), v(2), v(3), v(4), v(5)};
  plantbp::PhiVector grad;
  for (int p = 0; p < 6; ++p) {
    const Real h = Real(1e-6) * std::max(1.0, std::abs(v(p)));
    auto up = base, down = base;
    up[p] += h;
    down[p] -= h;
    grad(p) = static_cast<double>((lambda_closed_form<Real>(up, f, i) - lambda_closed_form<Real>(down, f, i)) / (2 * h));
  }
  return grad;
}

inline double relative_error(double analytic, double reference) {
  const double scale = std::max(std::abs(analytic), std::abs(reference));
  return scale == 0.0 ? 0.0 : std::abs(analytic - reference) / scale;
}

/// Hand-rolled generator for property tests: uniform doubles and integers from
/// a dedicated stream.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed, 0) {}
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng_() >> 11) * 0x1.0p-53);
  }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  count_t integer(count_t lo, count_t hi) {
    return lo + static_cast<count_t>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  plantbp::RandomStream rng_;
};

/// A different phi sharing every functional identifiable from cycles 0..n,
/// for n <= 2. Returns nullopt when the draw leaves the positive orthant.
inline std::optional<plantbp::IdentifiableParams> flat_partner(const plantbp::IdentifiableParams& phi,
                                                               int n, Gen& gen) {
  auto out = phi;
  const double c0 = phi.initial_bank_rate + phi.initial_new_rate;
  const double c1 = plantbp::baseline_intensity(phi, 1);
  const double c2 = plantbp::baseline_intensity(phi, 2);
  if (n == 0) {
    out.initial_bank_rate = gen.uniform(0.05, 0.95) * c0;
    out.initial_new_rate = c0 - out.initial_bank_rate;
  } else if (n == 1) {
    out.bank_survival = std::min(0.99, phi.bank_survival * gen.uniform(0.5, 1.5));
    out.carryover = phi.carryover * gen.uniform(0.5, 1.5);
    out.initial_bank_rate = gen.uniform(0.05, 0.95) * c0;
    out.initial_new_rate = c0 - out.initial_bank_rate;
    out.immigration_rate = c1 - out.bank_survival * out.initial_bank_rate -
                           out.carryover * out.initial_new_rate;
  } else if (n == 2) {
    const double a = std::min(0.99, phi.bank_survival * gen.uniform(0.8, 1.2));
    const double g = phi.carryover;
    Eigen::Matrix3d m;
    m << 1, 1, 0, a, g, 1, a * a, a * g, 1 + g;
    const Eigen::Vector3d x = m.fullPivLu().solve(Eigen::Vector3d(c0, c1, c2));
    out.bank_survival = a;
    out.initial_bank_rate = x(0);
    out.initial_new_rate = x(1);
    out.immigration_rate = x(2);
  } else {
    return std::nullopt;
  }
  const auto v = out.to_vector();
  if ((v.array() <= 0.0).any() || out.bank_survival >= 1.0) return std::nullopt;
  return out;
}

inline plantbp::IdentifiableParams reference_phi() { return {0.15, 0.006, 6.5, 40.0, 25.0, 25.0}; }

}  // namespace testsupport
