#include "plantbp/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "plantbp/csv.hpp"
#include "plantbp/error.hpp"

namespace plantbp {

namespace {

bool valid_key(std::string_view key) {
  return !key.empty() && std::all_of(key.begin(), key.end(), [](unsigned char ch) {
    return std::isalnum(ch) || ch == '_' || ch == '.';
  });
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig config;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text(raw);
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = csv::trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw parse_error(line, "expected `key = value`");
    const std::string key(csv::trim(text.substr(0, eq)));
    const std::string value(csv::trim(text.substr(eq + 1)));
    if (!valid_key(key)) throw parse_error(line, "invalid key '" + key + "'");
    if (value.empty()) throw parse_error(line, "missing value for '" + key + "'");
    if (const auto* previous = config.find(key)) {
      throw parse_error(line, "duplicate key '" + key + "' (first set on line " +
                                  std::to_string(previous->line) + ")");
    }
    config.entries_.emplace(key, Entry{value, line});
  }
  return config;
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse(in);
}

const KeyValueConfig::Entry* KeyValueConfig::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::size_t KeyValueConfig::line_of(const std::string& key) const {
  const auto* e = find(key);
  return e ? e->line : 0;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto* e = find(key);
  return e ? e->value : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto* e = find(key);
  return e ? csv::parse_double(e->value, e->line, key) : fallback;
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
  const auto* e = find(key);
  return e ? csv::parse_int(e->value, e->line, key) : fallback;
}

std::uint64_t KeyValueConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
  const auto* e = find(key);
  if (!e) return fallback;
  std::uint64_t value = 0;
  const auto* first = e->value.data();
  const auto* last = first + e->value.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw parse_error(e->line, key + ": expected a non-negative integer, got '" + e->value + "'");
  }
  return value;
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key,
                                                    const std::vector<double>& fallback) const {
  const auto* e = find(key);
  if (!e) return fallback;
  std::vector<double> out;
  for (const auto& field : csv::split(e->value)) out.push_back(csv::parse_double(field, e->line, key));
  return out;
}

std::string KeyValueConfig::get_choice(const std::string& key, const std::string& fallback,
                                       const std::vector<std::string>& choices) const {
  const auto* e = find(key);
  if (!e) return fallback;
  if (std::find(choices.begin(), choices.end(), e->value) == choices.end()) {
    std::string list;
    for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
    throw parse_error(e->line, key + ": '" + e->value + "' is not one of {" + list + "}");
  }
  return e->value;
}

void KeyValueConfig::require_known(const std::set<std::string>& known) const {
  const Entry* first = nullptr;
  std::string first_key;
  for (const auto& [key, entry] : entries_) {
    if (known.count(key)) continue;
    if (!first || entry.line < first->line) {
      first = &entry;
      first_key = key;
    }
  }
  if (first) throw parse_error(first->line, "unknown key '" + first_key + "'");
}

const std::set<std::string>& demographic_keys() {
  static const std::set<std::string> keys = {
      "a", "a_prime", "b", "b_prime", "c", "d", "m", "u", "sigma", "tau",
      "offspring_ratio", "immigration_ratio"};
  return keys;
}

DemographicParams demographic_params_from_config(const KeyValueConfig& config) {
  const DemographicParams ref = reference_params();
  DemographicParams p = ref;
  p.bank_survival = config.get_double("a", ref.bank_survival);
  p.new_survival = config.get_double("a_prime", ref.new_survival);
  p.bank_germination = config.get_double("b", ref.bank_germination);
  p.new_germination = config.get_double("b_prime", ref.new_germination);
  p.vernalization = config.get_double("c", ref.vernalization);
  p.maturation = config.get_double("d", ref.maturation);
  p.initial_bank = config.get_double("sigma", ref.initial_bank);
  p.initial_new = config.get_double("tau", ref.initial_new);

  auto spec = [&](const char* mean_key, const char* ratio_key, double mean_default) {
    const double mean = config.get_double(mean_key, mean_default);
    const double ratio = config.get_double(ratio_key, 1.0);
    try {
      return DistributionSpec::with_dispersion_ratio(mean, ratio);
    } catch (const domain_error& e) {
      const std::size_t line =
          config.has(ratio_key) ? config.line_of(ratio_key) : config.line_of(mean_key);
      throw parse_error(line, e.what());
    }
  };
  p.offspring = spec("m", "offspring_ratio", ref.offspring.mean);
  p.immigration = spec("u", "immigration_ratio", ref.immigration.mean);

  try {
    p.validate();
  } catch (const domain_error& e) {
    std::size_t line = 0;
    for (const auto& key : demographic_keys()) {
      if (config.has(key)) line = std::max(line, config.line_of(key));
    }
    throw parse_error(line, e.what());
  }
  return p;
}

}  // namespace plantbp
