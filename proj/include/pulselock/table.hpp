#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace pulselock {

enum class OutputFormat { csv, json };

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw std::runtime_error("unknown output format '" + s + "' (expected csv or json)");
}

// Scientific notation, 9 significant digits.
inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.8e", v);
  return buf;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row) { rows.push_back(std::move(row)); }
};

using MetaEntries = std::vector<std::pair<std::string, std::string>>;

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const MetaEntries& entries) {
  std::string blob;
  for (const auto& [k, v] : entries) blob += k + "=" + v + "\n";
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(blob)));
  return buf;
}

inline void write_csv(std::ostream& os, const MetaEntries& meta, const Table& table) {
  for (const auto& [k, v] : meta) os << "# " << k << " = " << v << "\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) os << ",";
    os << table.columns[c];
  }
  os << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) os << ",";
      os << format_value(row[c]);
    }
    os << "\n";
  }
}

inline void write_json(std::ostream& os, const MetaEntries& meta, const Table& table) {
  nlohmann::ordered_json j;
  for (const auto& [k, v] : meta) j["meta"][k] = v;
  j["columns"] = table.columns;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) j["rows"].push_back(row);
  os << j.dump(2) << "\n";
}

inline void write_table(std::ostream& os, OutputFormat fmt, const MetaEntries& meta,
                        const Table& table) {
  if (fmt == OutputFormat::csv)
    write_csv(os, meta, table);
  else
    write_json(os, meta, table);
}

}  // namespace pulselock
