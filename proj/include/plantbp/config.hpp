#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "plantbp/params.hpp"

namespace plantbp {

/// Flat `key = value` text: one entry per line, `#` starts a comment, blank
/// lines are ignored. Keys are [A-Za-z0-9_.]+ and may appear once. Every
/// error is a parse_error carrying the line of the offending entry.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig parse_string(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::size_t line_of(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  /// Comma-separated list of numbers.
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;
  /// Value must be one of `choices`.
  std::string get_choice(const std::string& key, const std::string& fallback,
                         const std::vector<std::string>& choices) const;

  /// Rejects the first key (in file order) not in `known`.
  void require_known(const std::set<std::string>& known) const;

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  const Entry* find(const std::string& key) const;
  std::map<std::string, Entry> entries_;
};

/// Keys read by demographic_params_from_config.
const std::set<std::string>& demographic_keys();

/// Reads a, a_prime, b, b_prime, c, d, m, u, sigma, tau, offspring_ratio and
/// immigration_ratio (variance/mean; 1 means Poisson) over the reference
/// values. Domain violations are reported as parse errors at the key's line.
DemographicParams demographic_params_from_config(const KeyValueConfig& config);

}  // namespace plantbp
