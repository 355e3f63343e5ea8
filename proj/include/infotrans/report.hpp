#pragma once

/// \file report.hpp
/// Tabular run reports with a CSV rendering (metadata as `# key: value`
/// comment lines) and a JSON mirror.

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "infotrans/errors.hpp"

namespace infotrans {

using Cell = std::variant<std::monostate, double, long long, std::string>;

/// 17 significant digits round-trip every double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
      fail(ErrorKind::kLengthMismatch, "row width " + std::to_string(row.size()) +
                                           " does not match table '" + name + "' (" +
                                           std::to_string(columns.size()) + " columns)");
    }
    rows.push_back(std::move(row));
  }
};

struct Report {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<Table> tables;

  void set(std::string key, std::string value) {
    for (auto& [k, v] : metadata) {
      if (k == key) {
        v = std::move(value);
        return;
      }
    }
    metadata.emplace_back(std::move(key), std::move(value));
  }

  const std::string* get(const std::string& key) const {
    for (const auto& [k, v] : metadata) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  Table& add_table(std::string name, std::vector<std::string> columns) {
    tables.push_back(Table{std::move(name), std::move(columns), {}});
    return tables.back();
  }

  const Table* find(const std::string& name) const {
    for (const auto& t : tables) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }
};

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string cell_text(const Cell& cell) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(long long v) const { return std::to_string(v); }
    std::string operator()(const std::string& v) const { return csv_field(v); }
  };
  return std::visit(Visitor{}, cell);
}

inline nlohmann::ordered_json cell_json(const Cell& cell) {
  struct Visitor {
    nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
    nlohmann::ordered_json operator()(double v) const {
      // JSON has no inf/nan; keep the text form.
      if (!std::isfinite(v)) return format_double(v);
      return v;
    }
    nlohmann::ordered_json operator()(long long v) const { return v; }
    nlohmann::ordered_json operator()(const std::string& v) const { return v; }
  };
  return std::visit(Visitor{}, cell);
}

}  // namespace detail

/// Metadata block, then per table a `# table: name` line, the header row, the
/// data rows and a blank separator line.
inline std::string to_csv(const Report& report) {
  std::string out;
  for (const auto& [k, v] : report.metadata) out += "# " + k + ": " + v + "\n";
  for (const auto& t : report.tables) {
    out += "# table: " + t.name + "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      if (i) out += ',';
      out += detail::csv_field(t.columns[i]);
    }
    out += '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += detail::cell_text(row[i]);
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json to_json(const Report& report) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.metadata) meta[k] = v;
  j["metadata"] = std::move(meta);
  nlohmann::ordered_json tables = nlohmann::ordered_json::array();
  for (const auto& t : report.tables) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
      nlohmann::ordered_json r = nlohmann::ordered_json::array();
      for (const auto& cell : row) r.push_back(detail::cell_json(cell));
      rows.push_back(std::move(r));
    }
    tables.push_back({{"name", t.name}, {"columns", t.columns}, {"rows", std::move(rows)}});
  }
  j["tables"] = std::move(tables);
  return j;
}

}  // namespace infotrans
