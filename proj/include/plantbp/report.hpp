#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "plantbp/complete_inference.hpp"
#include "plantbp/phi_fit.hpp"

namespace plantbp {

// Estimate tables have the header `parameter,estimate,std_error`; diagnostics
// files are flat `key = value` text readable by KeyValueConfig.

/// Ten rows: c, d, a, a_prime, b, b_prime, m, u, sigma, tau.
void write_complete_report_csv(std::ostream& out, const CompleteEstimates& est);
void write_complete_diagnostics(std::ostream& out, const CompleteEstimates& est,
                                const CompleteDataset& data);

/// Rows a, g, bm, bu, bs, bt. A partial report lists the identified
/// functionals instead, with empty standard errors. Standard errors of held
/// or unavailable components are written as `nan`.
void write_phi_report_csv(std::ostream& out, const PhiEstimateReport& rep);
void write_phi_diagnostics(std::ostream& out, const PhiEstimateReport& rep, const std::string& mode);

void save_text(const std::filesystem::path& path, const std::string& contents);

}  // namespace plantbp
