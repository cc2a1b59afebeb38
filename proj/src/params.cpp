#include "plantbp/params.hpp"

#include <cmath>
#include <string>

#include "plantbp/error.hpp"

namespace plantbp {

namespace {

void require_open_probability(double p, const char* name) {
  if (!(p > 0.0 && p < 1.0)) {
    throw domain_error(std::string(name) + " must lie in (0,1), got " + std::to_string(p));
  }
}

}  // namespace

void DemographicParams::validate() const {
  require_open_probability(bank_survival, "bank_survival (a)");
  require_open_probability(bank_germination, "bank_germination (b)");
  require_open_probability(new_survival, "new_survival (a')");
  require_open_probability(new_germination, "new_germination (b')");
  require_open_probability(vernalization, "vernalization (c)");
  require_open_probability(maturation, "maturation (d)");
  if (bank_survival + bank_germination > 1.0) {
    throw domain_error("a + b must be <= 1");
  }
  if (new_survival + new_germination > 1.0) {
    throw domain_error("a' + b' must be <= 1");
  }
  offspring.validate();
  immigration.validate();
  if (!(initial_bank >= 0.0) || !std::isfinite(initial_bank)) {
    throw domain_error("initial_bank (sigma) must be finite and >= 0");
  }
  if (!(initial_new >= 0.0) || !std::isfinite(initial_new)) {
    throw domain_error("initial_new (tau) must be finite and >= 0");
  }
}

DemographicParams reference_params() {
  DemographicParams p;
  p.bank_survival = 0.15;
  p.bank_germination = 0.5;
  p.new_survival = 0.006;
  p.new_germination = 0.5;
  p.vernalization = 0.21;
  p.maturation = 0.01;
  p.offspring = DistributionSpec::poisson(13.0);
  p.immigration = DistributionSpec::poisson(80.0);
  p.initial_bank = 50.0;
  p.initial_new = 50.0;
  return p;
}

}  // namespace plantbp
