#include "plantbp/phi_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <boost/random/uniform_int_distribution.hpp>

#include "plantbp/error.hpp"
#include "plantbp/parallel.hpp"
#include "plantbp/rng.hpp"

namespace plantbp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr Eigen::Index kRateOffset = kOffspring;  // rates occupy indices 2..5
constexpr double kNullTolerance = 1e-10;
constexpr int kMaxHalvings = 60;

using Vector4 = Eigen::Vector4d;
using Matrix4 = Eigen::Matrix4d;

std::span<const count_t> driving_history(const ObservedTrajectory& t) {
  return std::span<const count_t>(t.mature).first(t.length() - 1);
}

// Lambda is linear in the four rates once a and g are fixed; the rows of the
// design are the rate components of dLambda_i/dphi, which do not depend on
// the rates themselves.
struct LinearDesign {
  Eigen::MatrixXd x;
  Eigen::VectorXd r;
};

LinearDesign linear_design(const ObservedDataset& data, double a, double g) {
  std::size_t rows = 0;
  for (const auto& t : data.populations) rows += t.length();
  LinearDesign d;
  d.x.resize(static_cast<Eigen::Index>(rows), 4);
  d.r.resize(static_cast<Eigen::Index>(rows));
  const IdentifiableParams probe{a, g, 1.0, 1.0, 1.0, 1.0};
  Eigen::Index row = 0;
  for (const auto& t : data.populations) {
    const auto grads = lambda_gradient(probe, driving_history(t));
    for (std::size_t i = 0; i < t.length(); ++i, ++row) {
      d.x.row(row) = grads[i].segment<4>(kRateOffset).transpose();
      d.r(row) = static_cast<double>(t.rosettes[i]);
    }
  }
  return d;
}

void require_full_rank(const Eigen::MatrixXd& x) {
  const Matrix4 gram = x.transpose() * x;
  std::vector<std::string> involved;
  std::array<bool, 4> flagged{};
  Eigen::Vector4d scale;
  for (int j = 0; j < 4; ++j) {
    if (gram(j, j) == 0.0) {
      flagged[j] = true;
      scale(j) = 0.0;
    } else {
      scale(j) = 1.0 / std::sqrt(gram(j, j));
    }
  }
  const Matrix4 corr = scale.asDiagonal() * gram * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix4> eig(corr);
  for (int e = 0; e < 4; ++e) {
    if (eig.eigenvalues()(e) > kNullTolerance) continue;
    const Vector4 v = eig.eigenvectors().col(e);
    for (int j = 0; j < 4; ++j) {
      if (scale(j) != 0.0 && std::abs(v(j)) > 1e-3) flagged[j] = true;
    }
  }
  for (int j = 0; j < 4; ++j) {
    if (flagged[j]) involved.emplace_back(kPhiNames[kRateOffset + j]);
  }
  if (involved.empty()) return;
  std::string list;
  for (const auto& name : involved) list += (list.empty() ? "" : ", ") + name;
  throw collinearity_error(involved, "design columns are linearly dependent; " + list +
                                         " are not separately identified by these data");
}

double linear_loglik(const LinearDesign& d, const Vector4& beta) {
  const Eigen::VectorXd lambda = d.x * beta;
  double ll = 0.0;
  for (Eigen::Index j = 0; j < lambda.size(); ++j) {
    if (!(lambda(j) > 0.0)) return -std::numeric_limits<double>::infinity();
    ll += (d.r(j) > 0.0 ? d.r(j) * std::log(lambda(j)) : 0.0) - lambda(j);
  }
  return ll;
}

// Newton-type direction restricted to components not pinned at a bound by
// the gradient (gradient of the quantity being maximized).
template <int N>
Eigen::Matrix<double, N, 1> free_direction(const Eigen::Matrix<double, N, N>& metric_inverse_or_hessian,
                                           const Eigen::Matrix<double, N, 1>& grad,
                                           const Eigen::Matrix<double, N, 1>& x,
                                           const Eigen::Matrix<double, N, 1>& lo,
                                           const Eigen::Matrix<double, N, 1>& hi, bool solve) {
  std::vector<int> free;
  for (int j = 0; j < N; ++j) {
    const bool pinned_low = x(j) <= lo(j) && grad(j) <= 0.0;
    const bool pinned_high = x(j) >= hi(j) && grad(j) >= 0.0;
    if (!pinned_low && !pinned_high) free.push_back(j);
  }
  Eigen::Matrix<double, N, 1> dir = Eigen::Matrix<double, N, 1>::Zero();
  if (free.empty()) return dir;
  const auto m = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd sub(m, m);
  Eigen::VectorXd gf(m);
  for (Eigen::Index p = 0; p < m; ++p) {
    gf(p) = grad(free[p]);
    for (Eigen::Index q = 0; q < m; ++q) sub(p, q) = metric_inverse_or_hessian(free[p], free[q]);
  }
  const Eigen::VectorXd df = solve ? Eigen::VectorXd(sub.ldlt().solve(gf)) : Eigen::VectorXd(sub * gf);
  for (Eigen::Index p = 0; p < m; ++p) dir(free[p]) = df(p);
  return dir;
}

bool near(double v, double bound) { return std::abs(v - bound) <= 1e-12 * std::max(1.0, std::abs(bound)); }

void finish_bounds(PhiEstimateReport& rep, const ParameterBox& box) {
  const PhiVector v = rep.phi_hat.to_vector();
  const PhiVector lo = box.lower(), hi = box.upper();
  for (int p = 0; p < 6; ++p) {
    if (!rep.estimated[p]) continue;
    rep.at_lower[p] = near(v(p), lo(p));
    rep.at_upper[p] = near(v(p), hi(p));
    if (rep.at_lower[p] || rep.at_upper[p]) {
      rep.warnings.push_back(std::string(kPhiNames[p]) + " estimate is at the " +
                             (rep.at_lower[p] ? "lower" : "upper") + " bound of the search box");
    }
  }
}

// Inverse of the information restricted to the estimated components, scaled
// to the whole sample and embedded into a 6x6 matrix.
void finish_covariance(PhiEstimateReport& rep, double max_condition) {
  std::vector<int> idx;
  for (int p = 0; p < 6; ++p) {
    if (rep.estimated[p]) idx.push_back(p);
  }
  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd block(m, m);
  for (Eigen::Index p = 0; p < m; ++p) {
    for (Eigen::Index q = 0; q < m; ++q) block(p, q) = rep.fisher(idx[p], idx[q]);
  }
  const auto inv = invert_symmetric(block, max_condition);
  rep.condition_number = inv.condition_number;
  if (!inv.inverse) {
    rep.warnings.push_back("information matrix is singular or ill-conditioned (condition number " +
                           std::to_string(inv.condition_number) + "); covariance withheld");
    return;
  }
  PhiMatrix cov = PhiMatrix::Zero();
  for (Eigen::Index p = 0; p < m; ++p) {
    for (Eigen::Index q = 0; q < m; ++q) {
      cov(idx[p], idx[q]) = (*inv.inverse)(p, q) / static_cast<double>(rep.populations);
    }
  }
  rep.covariance = cov;
}

void require_fit_inputs(const ObservedDataset& data) {
  if (data.populations.empty()) throw domain_error("observed dataset has no populations");
  data.validate();
}

// ---- full fit ------------------------------------------------------------

struct LocalFit {
  PhiVector x;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Expected information per population, with a tiny ridge so that the
// scoring direction exists where the information is singular (n < 3).
PhiMatrix scoring_metric(const PhiVector& x, const ObservedDataset& data) {
  PhiMatrix info = fisher_matrix(IdentifiableParams::from_vector(x), data);
  const double ridge = 1e-12 * std::max(info.diagonal().maxCoeff(), 1e-300);
  info.diagonal().array() += ridge;
  return info;
}

// Projected Fisher scoring on the log-likelihood per population, with an
// Armijo backtracking search along the projected path.
LocalFit maximize_from(const PhiVector& start, const ObservedDataset& data,
                       const FullFitOptions& options) {
  const ParameterBox& box = options.box;
  const PhiVector lo = box.lower(), hi = box.upper();
  const double k = static_cast<double>(data.populations.size());
  auto evaluate = [&](const PhiVector& x) {
    const auto lg = incomplete_loglik_gradient(IdentifiableParams::from_vector(x), data, box);
    return std::pair<double, PhiVector>(lg.loglik / k, lg.gradient / k);
  };

  LocalFit out;
  PhiVector x = box.project(start);
  auto [f, score] = evaluate(x);

  for (out.iterations = 0; out.iterations < options.max_iterations;) {
    const PhiVector dir = free_direction<6>(scoring_metric(x, data), score, x, lo, hi, true);
    const double decrement = score.dot(dir);
    if (!std::isfinite(decrement)) break;
    if (0.5 * decrement <= options.loglik_tolerance * std::max(1.0, std::abs(f))) {
      out.converged = true;
      break;
    }

    double t = 1.0;
    bool accepted = false;
    PhiVector x_new;
    double f_new = 0.0;
    PhiVector s_new;
    for (int h = 0; h < kMaxHalvings; ++h, t *= 0.5) {
      x_new = box.project(x + t * dir);
      std::tie(f_new, s_new) = evaluate(x_new);
      if (std::isfinite(f_new) && f_new >= f + 1e-4 * score.dot(x_new - x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.converged = 0.5 * decrement <= 1e-6 * std::max(1.0, std::abs(f));
      break;
    }
    ++out.iterations;
    const double step = (x_new - x).norm();
    const double change = std::abs(f_new - f) / std::max(1.0, std::abs(f));
    x = x_new;
    f = f_new;
    score = s_new;
    if ((t == 1.0 && change < options.loglik_tolerance) ||
        step < options.step_tolerance * (1.0 + x.norm())) {
      out.converged = true;
      break;
    }
  }
  out.x = x;
  out.loglik = f * k;
  return out;
}

double unit_uniform(RandomStream& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Seed + (count - 1) Latin-hypercube perturbations of it, each component
// scaled by a factor in [1/2, 2] and projected into the box.
std::vector<PhiVector> start_points(const PhiVector& seed, int count, std::uint64_t master,
                                    const ParameterBox& box) {
  std::vector<PhiVector> starts{box.project(seed)};
  const int extra = count - 1;
  if (extra <= 0) return starts;
  RandomStream rng(master, 0);
  std::vector<std::vector<int>> strata(6);
  for (auto& perm : strata) {
    perm.resize(static_cast<std::size_t>(extra));
    std::iota(perm.begin(), perm.end(), 0);
    for (int j = extra - 1; j > 0; --j) {
      boost::random::uniform_int_distribution<int> pick(0, j);
      std::swap(perm[static_cast<std::size_t>(j)], perm[static_cast<std::size_t>(pick(rng))]);
    }
  }
  for (int s = 0; s < extra; ++s) {
    PhiVector v = seed;
    for (int p = 0; p < 6; ++p) {
      const double u = (strata[p][static_cast<std::size_t>(s)] + unit_uniform(rng)) / extra;
      v(p) *= std::exp(std::log(2.0) * (2.0 * u - 1.0));
    }
    starts.push_back(box.project(v));
  }
  return starts;
}

double mean_rosettes(const ObservedDataset& data, int cycle_from, int cycle_to) {
  double sum = 0.0;
  double count = 0.0;
  for (const auto& t : data.populations) {
    for (int i = cycle_from; i <= cycle_to && i < static_cast<int>(t.length()); ++i) {
      sum += static_cast<double>(t.rosettes[static_cast<std::size_t>(i)]);
      count += 1.0;
    }
  }
  return count > 0.0 ? sum / count : 0.0;
}

// Best reduced fit over the (a, g) grid; a crude moment guess when the design
// is rank deficient everywhere (n < 2).
PhiVector grid_seed(const ObservedDataset& data, const FullFitOptions& options) {
  double best_ll = -std::numeric_limits<double>::infinity();
  PhiVector best = PhiVector::Zero();
  bool found = false;
  FitOptions inner = options;
  inner.max_iterations = 50;
  for (double a : options.survival_grid) {
    for (double g : options.carryover_grid) {
      try {
        const auto rep = fit_phi_reduced(data, a, g, std::nullopt, inner);
        if (rep.loglik > best_ll) {
          best_ll = rep.loglik;
          best = rep.phi_hat.to_vector();
          found = true;
        }
      } catch (const collinearity_error&) {
      } catch (const domain_error&) {
      }
    }
  }
  if (found) return best;
  const double c0 = std::max(mean_rosettes(data, 0, 0), 2.0 * options.box.rate_lower);
  const double later = std::max(mean_rosettes(data, 1, data.last_cycle), 2.0 * options.box.rate_lower);
  PhiVector guess;
  guess << 0.5, 0.5, 1.0, 0.5 * later, 0.5 * c0, 0.5 * c0;
  return guess;
}

}  // namespace

double PhiEstimateReport::standard_error(PhiIndex p) const {
  if (!covariance || !estimated[static_cast<std::size_t>(p)]) return kNaN;
  return std::sqrt(std::max(0.0, (*covariance)(p, p)));
}

PhiEstimateReport fit_phi_reduced(const ObservedDataset& data, double survival, double carryover,
                                  const std::optional<std::array<double, 4>>& init,
                                  const FitOptions& options) {
  require_fit_inputs(data);
  const ParameterBox& box = options.box;
  if (!(survival >= box.survival_lower && survival <= box.survival_upper)) {
    throw domain_error("known a = " + std::to_string(survival) + " lies outside the box");
  }
  if (!(carryover >= box.rate_lower && carryover <= box.rate_upper)) {
    throw domain_error("known g = " + std::to_string(carryover) + " lies outside the box");
  }

  const LinearDesign design = linear_design(data, survival, carryover);
  require_full_rank(design.x);

  const Vector4 lo = Vector4::Constant(box.rate_lower);
  const Vector4 hi = Vector4::Constant(box.rate_upper);
  Vector4 beta;
  if (init) {
    beta = Vector4((*init)[0], (*init)[1], (*init)[2], (*init)[3]);
  } else {
    const Matrix4 gram = design.x.transpose() * design.x;
    beta = gram.ldlt().solve(design.x.transpose() * design.r);
  }
  beta = beta.cwiseMax(lo).cwiseMin(hi);

  PhiEstimateReport rep;
  rep.populations = static_cast<int>(data.populations.size());
  rep.estimated = {false, false, true, true, true, true};
  double ll = linear_loglik(design, beta);
  rep.loglik_trace.push_back(ll);

  for (rep.iterations = 0; rep.iterations < options.max_iterations;) {
    const Eigen::VectorXd lambda = design.x * beta;
    const Eigen::VectorXd resid = design.r.cwiseQuotient(lambda).array() - 1.0;
    const Vector4 score = design.x.transpose() * resid;
    const Matrix4 info = design.x.transpose() * lambda.cwiseInverse().asDiagonal() * design.x;
    const Vector4 dir = free_direction<4>(info, score, beta, lo, hi, true);
    const double decrement = score.dot(dir);
    if (!(decrement > 0.0) || 0.5 * decrement <= options.loglik_tolerance * std::max(1.0, std::abs(ll))) {
      rep.converged = true;
      break;
    }
    double t = 1.0;
    bool accepted = false;
    Vector4 candidate;
    double ll_new = 0.0;
    for (int h = 0; h < kMaxHalvings; ++h, t *= 0.5) {
      candidate = (beta + t * dir).cwiseMax(lo).cwiseMin(hi);
      ll_new = linear_loglik(design, candidate);
      if (ll_new >= ll) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      rep.converged = 0.5 * decrement <= 1e-6 * std::max(1.0, std::abs(ll));
      break;
    }
    ++rep.iterations;
    const double step = (candidate - beta).norm();
    const double change = std::abs(ll_new - ll) / std::max(1.0, std::abs(ll));
    beta = candidate;
    ll = ll_new;
    rep.loglik_trace.push_back(ll);
    if ((t == 1.0 && change < options.loglik_tolerance) || step < options.step_tolerance) {
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged) rep.warnings.push_back("Fisher scoring did not converge");

  rep.phi_hat = {survival, carryover, beta(0), beta(1), beta(2), beta(3)};
  rep.loglik = ll;
  rep.fisher = fisher_matrix(rep.phi_hat, data);
  rep.identifiable = identifiable_set(data.last_cycle);
  finish_bounds(rep, box);
  finish_covariance(rep, options.max_condition);
  rep.starts_tried = 1;
  rep.starts_converged = rep.converged ? 1 : 0;
  return rep;
}

PhiEstimateReport fit_phi_full(const ObservedDataset& data, const FullFitOptions& options) {
  require_fit_inputs(data);
  if (options.starts < 1) throw domain_error("at least one starting point is required");
  const ParameterBox& box = options.box;

  PhiVector seed;
  if (options.initial) {
    box.require(*options.initial);
    seed = options.initial->to_vector();
  } else {
    seed = grid_seed(data, options);
  }

  PhiEstimateReport rep;
  rep.populations = static_cast<int>(data.populations.size());
  rep.estimated = {true, true, true, true, true, true};

  const auto starts = start_points(seed, options.starts, options.seed, box);
  std::vector<LocalFit> fits(starts.size());
  parallel_for(starts.size(), options.threads,
               [&](std::size_t s) { fits[s] = maximize_from(starts[s], data, options); });

  std::optional<LocalFit> best;
  for (const auto& fit : fits) {
    ++rep.starts_tried;
    if (fit.converged) ++rep.starts_converged;
    const bool better = !best || (fit.converged && !best->converged) ||
                        (fit.converged == best->converged && fit.loglik > best->loglik);
    if (better) best = fit;
  }

  rep.phi_hat = IdentifiableParams::from_vector(best->x);
  rep.loglik = best->loglik;
  rep.iterations = best->iterations;
  rep.converged = best->converged;
  if (!rep.converged) rep.warnings.push_back("optimizer did not converge from any start");
  rep.fisher = fisher_matrix(rep.phi_hat, data);
  rep.identifiable = identifiable_set(data.last_cycle);
  finish_bounds(rep, box);

  const double a = rep.phi_hat.bank_survival;
  const double g = rep.phi_hat.carryover;
  if (!rep.identifiable.full) {
    rep.partial = true;
    rep.reported = rep.identifiable.functionals;
    rep.warnings.push_back("observations over cycles 0.." + std::to_string(data.last_cycle) +
                           " identify only the reported functionals of phi");
  } else if (std::abs(a - g) < options.degeneracy_tolerance * a) {
    rep.partial = true;
    rep.reported = rep.identifiable.degenerate;
    rep.warnings.push_back("estimated a and g nearly coincide; phi is not identifiable there, "
                           "reporting a, bm, bu and c0 only");
  }
  if (rep.partial) {
    const auto inv = invert_symmetric(rep.fisher, options.max_condition);
    rep.condition_number = inv.condition_number;
    for (const auto& f : rep.reported) rep.reported_values.push_back(f.evaluate(rep.phi_hat));
  } else {
    finish_covariance(rep, options.max_condition);
  }
  return rep;
}

}  // namespace plantbp
