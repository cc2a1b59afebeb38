#pragma once

#include <string>
#include <vector>

#include "plantbp/intensity.hpp"

namespace plantbp {

/// One function of phi recoverable from observed (R, V, F) data.
struct IdentifiableFunctional {
  enum class Kind {
    component,  // a single phi component
    baseline,   // c_i: the intensity of cycle i with zero mature history
  };
  Kind kind = Kind::component;
  PhiIndex component = kSurvival;  // for Kind::component
  int cycle = 0;                   // for Kind::baseline
  std::string name;
  std::string expression;  // in demographic parameters

  double evaluate(const IdentifiableParams& phi) const;
};

/// What observations over cycles 0..n determine. For n >= 3 the full phi is
/// identifiable unless a == a'b/b', in which case only `degenerate` is.
struct IdentifiabilityDescription {
  int last_cycle = 0;
  std::vector<IdentifiableFunctional> functionals;
  bool full = false;
  std::vector<IdentifiableFunctional> degenerate;
  std::string degeneracy_condition;
};

IdentifiabilityDescription identifiable_set(int last_cycle);

/// Multi-line human-readable rendering used by the CLI and report files.
std::string describe(const IdentifiabilityDescription& description);

}  // namespace plantbp
