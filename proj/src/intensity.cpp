#include "plantbp/intensity.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "plantbp/error.hpp"
#include "plantbp/parallel.hpp"

namespace plantbp {

namespace {

// Per-population intensities and gradients for cycles 0..n (F_0..F_{n-1}
// drive them; F_n does not enter).
std::span<const count_t> driving_history(const ObservedTrajectory& t) {
  return std::span<const count_t>(t.mature).first(t.length() - 1);
}

void require_nonempty(const ObservedDataset& data) {
  if (data.populations.empty()) throw domain_error("observed dataset has no populations");
  data.validate();
}

}  // namespace

PhiVector IdentifiableParams::to_vector() const {
  PhiVector v;
  v << bank_survival, carryover, offspring_rate, immigration_rate, initial_bank_rate,
      initial_new_rate;
  return v;
}

IdentifiableParams IdentifiableParams::from_vector(const PhiVector& v) {
  return {v(kSurvival), v(kCarryover), v(kOffspring), v(kImmigration), v(kInitialBank),
          v(kInitialNew)};
}

IdentifiableParams identifiable_params(const DemographicParams& p) {
  p.validate();
  return {p.bank_survival,
          p.new_survival * p.bank_germination / p.new_germination,
          p.new_germination * p.offspring.mean,
          p.new_germination * p.immigration.mean,
          p.bank_germination * p.initial_bank,
          p.new_germination * p.initial_new};
}

PhiVector ParameterBox::lower() const {
  PhiVector v = PhiVector::Constant(rate_lower);
  v(kSurvival) = survival_lower;
  return v;
}

PhiVector ParameterBox::upper() const {
  PhiVector v = PhiVector::Constant(rate_upper);
  v(kSurvival) = survival_upper;
  return v;
}

bool ParameterBox::contains(const IdentifiableParams& phi) const {
  const PhiVector v = phi.to_vector();
  return (v.array() >= lower().array()).all() && (v.array() <= upper().array()).all();
}

PhiVector ParameterBox::project(const PhiVector& v) const {
  return v.cwiseMax(lower()).cwiseMin(upper());
}

void ParameterBox::require(const IdentifiableParams& phi) const {
  const PhiVector v = phi.to_vector();
  const PhiVector lo = lower(), hi = upper();
  for (Eigen::Index p = 0; p < 6; ++p) {
    if (!(v(p) >= lo(p) && v(p) <= hi(p))) {
      throw domain_error("phi component " + std::string(kPhiNames[p]) + " = " +
                         std::to_string(v(p)) + " lies outside the box [" +
                         std::to_string(lo(p)) + ", " + std::to_string(hi(p)) + "]");
    }
  }
}

IntensityPath lambda_sequence(const IdentifiableParams& phi, std::span<const count_t> f_history) {
  IntensityPath path;
  const std::size_t cycles = f_history.size() + 1;
  path.from_bank.reserve(cycles);
  path.from_new.reserve(cycles);
  path.intensity.reserve(cycles);
  double bank = phi.initial_bank_rate;
  double fresh = phi.initial_new_rate;
  for (std::size_t i = 0;; ++i) {
    path.from_bank.push_back(bank);
    path.from_new.push_back(fresh);
    path.intensity.push_back(bank + fresh);
    if (i == f_history.size()) break;
    bank = phi.bank_survival * bank + phi.carryover * fresh;
    fresh = phi.offspring_rate * static_cast<double>(f_history[i]) + phi.immigration_rate;
  }
  return path;
}

double baseline_intensity(const IdentifiableParams& phi, int cycle) {
  const std::vector<count_t> zeros(static_cast<std::size_t>(cycle), 0);
  return lambda_sequence(phi, zeros).intensity.back();
}

std::vector<PhiVector> lambda_gradient(const IdentifiableParams& phi,
                                       std::span<const count_t> f_history) {
  const double a = phi.bank_survival;
  const double g = phi.carryover;
  const double bm = phi.offspring_rate;
  const double bu = phi.immigration_rate;
  const double bs = phi.initial_bank_rate;
  const double bt = phi.initial_new_rate;
  auto f = [&](std::size_t j) { return static_cast<double>(f_history[j]); };

  std::vector<PhiVector> grads;
  grads.reserve(f_history.size() + 1);
  PhiVector g0 = PhiVector::Zero();
  g0(kInitialBank) = 1.0;
  g0(kInitialNew) = 1.0;
  grads.push_back(g0);

  for (std::size_t i = 1; i <= f_history.size(); ++i) {
    // history = F_{i-2} + a F_{i-3} + ... + a^{i-2} F_0 and its a-derivative
    // F_{i-3} + 2a F_{i-4} + ... + (i-2) a^{i-3} F_0.
    double history = 0.0, d_history = 0.0;
    // geometric = 1 + a + ... + a^{i-2} = (1 - a^{i-1}) / (1 - a), and its
    // a-derivative.
    double geometric = 0.0, d_geometric = 0.0;
    for (std::size_t j = 0; j + 2 <= i; ++j) {
      const auto power = static_cast<int>(i - 2 - j);
      history += std::pow(a, power) * f(j);
      if (power >= 1) d_history += power * std::pow(a, power - 1) * f(j);
      const auto jp = static_cast<int>(j);
      geometric += std::pow(a, jp);
      if (jp >= 1) d_geometric += jp * std::pow(a, jp - 1);
    }
    const auto ii = static_cast<int>(i);
    const double a_pow_i = std::pow(a, ii);
    const double a_pow_im1 = std::pow(a, ii - 1);
    const double d_a_pow_im1 = ii >= 2 ? (ii - 1) * std::pow(a, ii - 2) : 0.0;

    PhiVector grad;
    grad(kSurvival) = g * bm * d_history + bs * ii * a_pow_im1 + g * bu * d_geometric +
                      g * bt * d_a_pow_im1;
    grad(kCarryover) = bm * history + bt * a_pow_im1 + bu * geometric;
    grad(kOffspring) = f(i - 1) + g * history;
    grad(kImmigration) = 1.0 + g * geometric;
    grad(kInitialBank) = a_pow_i;
    grad(kInitialNew) = g * a_pow_im1;
    grads.push_back(grad);
  }
  return grads;
}

double incomplete_loglik(const IdentifiableParams& phi, const ObservedDataset& data,
                         const ParameterBox& box) {
  box.require(phi);
  require_nonempty(data);
  double ll = 0.0;
  for (const auto& t : data.populations) {
    const auto path = lambda_sequence(phi, driving_history(t));
    for (std::size_t i = 0; i < t.length(); ++i) {
      const double lambda = path.intensity[i];
      const auto r = static_cast<double>(t.rosettes[i]);
      ll += (r > 0.0 ? r * std::log(lambda) : 0.0) - lambda;
    }
  }
  return ll;
}

LoglikGradient incomplete_loglik_gradient(const IdentifiableParams& phi,
                                          const ObservedDataset& data, const ParameterBox& box) {
  box.require(phi);
  require_nonempty(data);
  LoglikGradient out;
  for (const auto& t : data.populations) {
    const auto history = driving_history(t);
    const auto path = lambda_sequence(phi, history);
    const auto grads = lambda_gradient(phi, history);
    for (std::size_t i = 0; i < t.length(); ++i) {
      const double lambda = path.intensity[i];
      const auto r = static_cast<double>(t.rosettes[i]);
      out.loglik += (r > 0.0 ? r * std::log(lambda) : 0.0) - lambda;
      out.gradient += (r / lambda - 1.0) * grads[i];
    }
  }
  return out;
}

PhiMatrix fisher_matrix(const IdentifiableParams& phi, const ObservedDataset& data) {
  require_nonempty(data);
  PhiMatrix info = PhiMatrix::Zero();
  for (const auto& t : data.populations) {
    const auto history = driving_history(t);
    const auto path = lambda_sequence(phi, history);
    const auto grads = lambda_gradient(phi, history);
    for (std::size_t i = 0; i < t.length(); ++i) {
      info.selfadjointView<Eigen::Lower>().rankUpdate(grads[i], 1.0 / path.intensity[i]);
    }
  }
  const PhiMatrix full = info.selfadjointView<Eigen::Lower>();
  return full / static_cast<double>(data.populations.size());
}

SymmetricInverse invert_symmetric(const Eigen::MatrixXd& m, double max_condition) {
  SymmetricInverse out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  out.eigenvalues = eig.eigenvalues();
  const double largest = out.eigenvalues.cwiseAbs().maxCoeff();
  const double smallest = out.eigenvalues.minCoeff();
  for (Eigen::Index j = 0; j < out.eigenvalues.size(); ++j) {
    if (out.eigenvalues(j) > largest / max_condition) ++out.rank;
  }
  out.condition_number =
      smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity();
  if (smallest > 0.0 && out.condition_number <= max_condition) {
    const Eigen::MatrixXd& v = eig.eigenvectors();
    out.inverse = v * out.eigenvalues.cwiseInverse().asDiagonal() * v.transpose();
  }
  return out;
}

ObservedDataset simulate_via_intensity(const IdentifiableParams& phi, int last_cycle,
                                       int populations, std::uint64_t master_seed,
                                       double vernalization, double maturation,
                                       unsigned threads) {
  ParameterBox{}.require(phi);
  if (last_cycle < 0) throw domain_error("last cycle index n must be >= 0");
  if (populations < 1) throw domain_error("population count K must be >= 1");
  for (double p : {vernalization, maturation}) {
    if (!(p >= 0.0 && p <= 1.0)) throw domain_error("thinning probabilities must lie in [0,1]");
  }

  ObservedDataset data;
  data.last_cycle = last_cycle;
  data.populations.resize(static_cast<std::size_t>(populations));
  parallel_for(data.populations.size(), threads, [&](std::size_t k) {
    RandomStream rng(master_seed, k);
    ObservedTrajectory& t = data.populations[k];
    double bank = phi.initial_bank_rate;
    double fresh = phi.initial_new_rate;
    for (int i = 0; i <= last_cycle; ++i) {
      const count_t r = sample_poisson(bank + fresh, rng);
      const count_t v = sample_binomial(r, vernalization, rng);
      const count_t f = sample_binomial(v, maturation, rng);
      t.rosettes.push_back(r);
      t.vernalized.push_back(v);
      t.mature.push_back(f);
      bank = phi.bank_survival * bank + phi.carryover * fresh;
      fresh = phi.offspring_rate * static_cast<double>(f) + phi.immigration_rate;
    }
  });
  return data;
}

}  // namespace plantbp
