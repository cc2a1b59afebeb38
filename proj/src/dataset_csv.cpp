#include "plantbp/dataset_csv.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <string>

#include "plantbp/csv.hpp"
#include "plantbp/error.hpp"

namespace plantbp {

namespace {

constexpr std::string_view kCompleteHeader = "pop,cycle,S,T,R,V,F";
constexpr std::string_view kObservedHeader = "pop,cycle,R,V,F";

struct Row {
  std::size_t line;
  std::int64_t cycle;
  std::vector<std::optional<count_t>> values;
};

// Reads header and data rows, grouping rows by population label in input order.
std::map<std::int64_t, std::vector<Row>> read_rows(std::istream& in, std::string_view header) {
  const auto columns = csv::split(header);
  std::string text;
  std::size_t line_no = 0;
  bool seen_header = false;
  std::map<std::int64_t, std::vector<Row>> groups;
  while (std::getline(in, text)) {
    ++line_no;
    const auto trimmed = csv::trim(text);
    if (trimmed.empty()) continue;
    if (!seen_header) {
      if (trimmed != header) {
        throw parse_error(line_no, "expected header '" + std::string(header) + "', got '" +
                                       std::string(trimmed) + "'");
      }
      seen_header = true;
      continue;
    }
    const auto fields = csv::split(trimmed);
    if (fields.size() != columns.size()) {
      throw parse_error(line_no, "expected " + std::to_string(columns.size()) + " fields, got " +
                                     std::to_string(fields.size()));
    }
    Row row{line_no, csv::parse_int(fields[1], line_no, "cycle"), {}};
    const auto pop = csv::parse_int(fields[0], line_no, "pop");
    for (std::size_t c = 2; c < fields.size(); ++c) {
      if (fields[c].empty()) {
        row.values.emplace_back(std::nullopt);
        continue;
      }
      const auto v = csv::parse_int(fields[c], line_no, columns[c]);
      if (v < 0) throw parse_error(line_no, "negative count in column " + columns[c]);
      row.values.emplace_back(v);
    }
    groups[pop].push_back(std::move(row));
  }
  if (!seen_header) throw parse_error(line_no + 1, "missing header '" + std::string(header) + "'");
  if (groups.empty()) throw parse_error(line_no, "no data rows");
  return groups;
}

count_t require_value(const Row& row, std::size_t index, const char* column) {
  if (!row.values[index]) {
    throw parse_error(row.line, std::string("missing value in column ") + column);
  }
  return *row.values[index];
}

void require_cycle(const Row& row, std::int64_t expected) {
  if (row.cycle != expected) {
    throw parse_error(row.line, "expected cycle " + std::to_string(expected) + ", got " +
                                    std::to_string(row.cycle));
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return in;
}

}  // namespace

void write_complete_csv(std::ostream& out, const CompleteDataset& data) {
  out << kCompleteHeader << '\n';
  for (std::size_t k = 0; k < data.populations.size(); ++k) {
    const auto& t = data.populations[k];
    for (std::size_t i = 0; i < t.length(); ++i) {
      out << k << ',' << i << ',' << t.old_seeds[i] << ',' << t.new_seeds[i] << ','
          << t.rosettes[i] << ',' << t.vernalized[i] << ',' << t.mature[i] << '\n';
    }
    out << k << ',' << t.length() << ',' << t.terminal_old_seeds << ',' << t.terminal_new_seeds
        << ",,,\n";
  }
}

void write_observed_csv(std::ostream& out, const ObservedDataset& data) {
  out << kObservedHeader << '\n';
  for (std::size_t k = 0; k < data.populations.size(); ++k) {
    const auto& t = data.populations[k];
    for (std::size_t i = 0; i < t.length(); ++i) {
      out << k << ',' << i << ',' << t.rosettes[i] << ',' << t.vernalized[i] << ','
          << t.mature[i] << '\n';
    }
  }
}

CompleteDataset read_complete_csv(std::istream& in) {
  const auto groups = read_rows(in, kCompleteHeader);
  CompleteDataset data;
  std::optional<std::int64_t> last_cycle;
  for (const auto& [pop, rows] : groups) {
    // rows: cycles 0..n followed by the terminal row n+1.
    const auto n = static_cast<std::int64_t>(rows.size()) - 2;
    if (n < 0) {
      throw parse_error(rows.back().line,
                        "population " + std::to_string(pop) + " has no terminal seed row");
    }
    if (last_cycle && *last_cycle != n) {
      throw parse_error(rows.back().line, "population " + std::to_string(pop) + " has " +
                                              std::to_string(n + 1) + " cycles, expected " +
                                              std::to_string(*last_cycle + 1));
    }
    last_cycle = n;
    Trajectory t;
    for (std::int64_t i = 0; i <= n; ++i) {
      const Row& row = rows[static_cast<std::size_t>(i)];
      require_cycle(row, i);
      t.old_seeds.push_back(require_value(row, 0, "S"));
      t.new_seeds.push_back(require_value(row, 1, "T"));
      t.rosettes.push_back(require_value(row, 2, "R"));
      t.vernalized.push_back(require_value(row, 3, "V"));
      t.mature.push_back(require_value(row, 4, "F"));
    }
    const Row& terminal = rows.back();
    require_cycle(terminal, n + 1);
    if (terminal.values[2] || terminal.values[3] || terminal.values[4]) {
      throw parse_error(terminal.line, "terminal seed row must leave R,V,F empty");
    }
    t.terminal_old_seeds = require_value(terminal, 0, "S");
    t.terminal_new_seeds = require_value(terminal, 1, "T");
    data.populations.push_back(std::move(t));
  }
  data.last_cycle = static_cast<int>(*last_cycle);
  return data;
}

ObservedDataset read_observed_csv(std::istream& in) {
  const auto groups = read_rows(in, kObservedHeader);
  ObservedDataset data;
  std::optional<std::int64_t> last_cycle;
  for (const auto& [pop, rows] : groups) {
    const auto n = static_cast<std::int64_t>(rows.size()) - 1;
    if (last_cycle && *last_cycle != n) {
      throw parse_error(rows.back().line, "population " + std::to_string(pop) + " has " +
                                              std::to_string(n + 1) + " cycles, expected " +
                                              std::to_string(*last_cycle + 1));
    }
    last_cycle = n;
    ObservedTrajectory t;
    for (std::int64_t i = 0; i <= n; ++i) {
      const Row& row = rows[static_cast<std::size_t>(i)];
      require_cycle(row, i);
      t.rosettes.push_back(require_value(row, 0, "R"));
      t.vernalized.push_back(require_value(row, 1, "V"));
      t.mature.push_back(require_value(row, 2, "F"));
    }
    data.populations.push_back(std::move(t));
  }
  data.last_cycle = static_cast<int>(*last_cycle);
  return data;
}

void save_complete_csv(const std::filesystem::path& path, const CompleteDataset& data) {
  auto out = open_out(path);
  write_complete_csv(out, data);
}

void save_observed_csv(const std::filesystem::path& path, const ObservedDataset& data) {
  auto out = open_out(path);
  write_observed_csv(out, data);
}

CompleteDataset load_complete_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_complete_csv(in);
}

ObservedDataset load_observed_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_observed_csv(in);
}

}  // namespace plantbp
