#include "plantbp/identifiability.hpp"

#include <sstream>

#include "plantbp/error.hpp"

namespace plantbp {

namespace {

IdentifiableFunctional component(PhiIndex p) {
  static const char* expressions[] = {"a", "a'*b/b'", "b'*m", "b'*u", "b*sigma", "b'*tau"};
  IdentifiableFunctional f;
  f.kind = IdentifiableFunctional::Kind::component;
  f.component = p;
  f.name = std::string(kPhiNames[p]);
  f.expression = expressions[p];
  return f;
}

IdentifiableFunctional baseline(int cycle) {
  IdentifiableFunctional f;
  f.kind = IdentifiableFunctional::Kind::baseline;
  f.cycle = cycle;
  f.name = "c" + std::to_string(cycle);
  if (cycle == 0) {
    f.expression = "b*sigma + b'*tau";
  } else if (cycle == 1) {
    f.expression = "a*b*sigma + a'*b*tau + b'*u";
  } else {
    const auto i = std::to_string(cycle);
    const auto im1 = std::to_string(cycle - 1);
    f.expression = "a^" + i + "*b*sigma + a^" + im1 + "*a'*b*tau + a'*b*u*(1-a^" + im1 +
                   ")/(1-a) + b'*u";
  }
  return f;
}

}  // namespace

double IdentifiableFunctional::evaluate(const IdentifiableParams& phi) const {
  if (kind == Kind::component) return phi.to_vector()(component);
  return baseline_intensity(phi, cycle);
}

IdentifiabilityDescription identifiable_set(int last_cycle) {
  if (last_cycle < 0) throw domain_error("last cycle index n must be >= 0");
  IdentifiabilityDescription d;
  d.last_cycle = last_cycle;
  switch (last_cycle) {
    case 0:
      d.functionals = {baseline(0)};
      break;
    case 1:
      d.functionals = {component(kOffspring), baseline(0), baseline(1)};
      break;
    case 2:
      d.functionals = {component(kCarryover), component(kOffspring), baseline(0), baseline(1),
                       baseline(2)};
      break;
    default:
      // Cycles beyond the fourth add precision, not new functionals.
      d.full = true;
      for (auto p : {kSurvival, kCarryover, kOffspring, kImmigration, kInitialBank, kInitialNew}) {
        d.functionals.push_back(component(p));
      }
      d.degeneracy_condition = "a = a'*b/b'";
      d.degenerate = {component(kSurvival), component(kOffspring), component(kImmigration),
                      baseline(0)};
      break;
  }
  return d;
}

std::string describe(const IdentifiabilityDescription& d) {
  std::ostringstream out;
  out << "observed cycles: 0.." << d.last_cycle << '\n';
  out << (d.full ? "identifiable (when a != a'*b/b'):" : "identifiable functionals:") << '\n';
  for (const auto& f : d.functionals) out << "  " << f.name << " = " << f.expression << '\n';
  if (!d.degenerate.empty()) {
    out << "if " << d.degeneracy_condition << ", only:" << '\n';
    for (const auto& f : d.degenerate) out << "  " << f.name << " = " << f.expression << '\n';
  }
  return out.str();
}

}  // namespace plantbp
