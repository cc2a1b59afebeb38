#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace plantbp {

// Parameter outside its admissible domain (probability not in [0,1], negative
// count, non-overdispersed negative binomial, point outside the search box).
class domain_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An estimator whose denominator vanishes on the given data.
class inestimable_error : public std::runtime_error {
 public:
  inestimable_error(std::string stage, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Singular or rank-deficient design; `parameters` names the unidentified ones.
class collinearity_error : public std::runtime_error {
 public:
  collinearity_error(std::vector<std::string> parameters, const std::string& what)
      : std::runtime_error(what), parameters_(std::move(parameters)) {}
  const std::vector<std::string>& parameters() const noexcept { return parameters_; }

 private:
  std::vector<std::string> parameters_;
};

class parse_error : public std::runtime_error {
 public:
  parse_error(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace plantbp
