#include "plantbp/report.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "plantbp/csv.hpp"

namespace plantbp {

namespace {

using csv::format_number;

void row(std::ostream& out, std::string_view name, double estimate, double variance) {
  out << name << ',' << format_number(estimate) << ','
      << format_number(std::sqrt(std::max(0.0, variance))) << '\n';
}

void warnings(std::ostream& out, const std::vector<std::string>& list) {
  out << "warnings = " << list.size() << '\n';
  for (std::size_t i = 0; i < list.size(); ++i) out << "warning." << i + 1 << " = " << list[i] << '\n';
}

const char* flag(bool b) { return b ? "true" : "false"; }

}  // namespace

void write_complete_report_csv(std::ostream& out, const CompleteEstimates& est) {
  out << "parameter,estimate,std_error\n";
  row(out, "c", est.thinning.vernalization, est.thinning.vernalization_variance);
  row(out, "d", est.thinning.maturation, est.thinning.maturation_variance);
  row(out, "a", est.survival.first, est.survival.covariance(0, 0));
  row(out, "a_prime", est.survival.second, est.survival.covariance(1, 1));
  row(out, "b", est.germination.first, est.germination.covariance(0, 0));
  row(out, "b_prime", est.germination.second, est.germination.covariance(1, 1));
  row(out, "m", est.reproduction.first, est.reproduction.covariance(0, 0));
  row(out, "u", est.reproduction.second, est.reproduction.covariance(1, 1));
  row(out, "sigma", est.initial.initial_bank, est.initial.initial_bank_variance);
  row(out, "tau", est.initial.initial_new, est.initial.initial_new_variance);
}

void write_complete_diagnostics(std::ostream& out, const CompleteEstimates& est,
                                const CompleteDataset& data) {
  out << "estimator = conditional least squares\n";
  out << "populations = " << data.population_count() << '\n';
  out << "last_cycle = " << data.last_cycle << '\n';
  out << "cov.a.a_prime = " << format_number(est.survival.covariance(0, 1)) << '\n';
  out << "cov.b.b_prime = " << format_number(est.germination.covariance(0, 1)) << '\n';
  out << "cov.m.u = " << format_number(est.reproduction.covariance(0, 1)) << '\n';
  out << "offspring_variance = " << format_number(est.reproduction.offspring_variance) << '\n';
  out << "immigration_variance = " << format_number(est.reproduction.immigration_variance) << '\n';
  warnings(out, est.warnings);
}

void write_phi_report_csv(std::ostream& out, const PhiEstimateReport& rep) {
  out << "parameter,estimate,std_error\n";
  if (rep.partial) {
    for (std::size_t j = 0; j < rep.reported.size(); ++j) {
      out << rep.reported[j].name << ',' << format_number(rep.reported_values[j]) << ",\n";
    }
    return;
  }
  const PhiVector v = rep.phi_hat.to_vector();
  for (int p = 0; p < 6; ++p) {
    out << kPhiNames[p] << ',' << format_number(v(p)) << ','
        << format_number(rep.standard_error(static_cast<PhiIndex>(p))) << '\n';
  }
}

void write_phi_diagnostics(std::ostream& out, const PhiEstimateReport& rep, const std::string& mode) {
  out << "mode = " << mode << '\n';
  out << "populations = " << rep.populations << '\n';
  out << "last_cycle = " << rep.identifiable.last_cycle << '\n';
  out << "loglik = " << format_number(rep.loglik) << '\n';
  out << "converged = " << flag(rep.converged) << '\n';
  out << "iterations = " << rep.iterations << '\n';
  out << "starts_tried = " << rep.starts_tried << '\n';
  out << "starts_converged = " << rep.starts_converged << '\n';
  out << "condition_number = " << format_number(rep.condition_number) << '\n';
  out << "covariance_available = " << flag(rep.covariance.has_value()) << '\n';
  out << "partial = " << flag(rep.partial) << '\n';
  const PhiVector v = rep.phi_hat.to_vector();
  for (int p = 0; p < 6; ++p) {
    const std::string name(kPhiNames[p]);
    out << "phi." << name << " = " << format_number(v(p)) << '\n';
    out << "estimated." << name << " = " << flag(rep.estimated[p]) << '\n';
    if (rep.at_lower[p]) out << "at_lower." << name << " = true\n";
    if (rep.at_upper[p]) out << "at_upper." << name << " = true\n";
  }
  for (int p = 0; p < 6; ++p) {
    for (int q = p; q < 6; ++q) {
      out << "fisher." << kPhiNames[p] << '.' << kPhiNames[q] << " = "
          << format_number(rep.fisher(p, q)) << '\n';
    }
  }
  const auto& id = rep.identifiable;
  out << "identifiable.full = " << flag(id.full) << '\n';
  for (const auto& f : id.functionals) out << "identifiable." << f.name << " = " << f.expression << '\n';
  if (!id.degenerate.empty()) {
    out << "degenerate.condition = " << id.degeneracy_condition << '\n';
    for (const auto& f : id.degenerate) out << "degenerate." << f.name << " = " << f.expression << '\n';
  }
  for (std::size_t j = 0; j < rep.reported.size(); ++j) {
    out << "reported." << rep.reported[j].name << " = " << format_number(rep.reported_values[j])
        << '\n';
  }
  warnings(out, rep.warnings);
}

void save_text(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace plantbp
