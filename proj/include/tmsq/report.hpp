// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tmsq/common.hpp"
#include "tmsq/version.hpp"

namespace tmsq {

/// Tabular command output plus provenance metadata. The same Dataset
/// serializes to CSV and JSON with value-identical numbers.
struct Dataset {
  std::string command;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::map<std::string, std::string> meta;  // provenance + derived scalars
};

inline std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hash_string(const std::string& text) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a_hash(text)));
  return buf;
}

/// Shortest round-trippable decimal form.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  double back = std::strtod(buf, nullptr);
  if (back == v) {
    // try shorter representations for readability
    for (int prec = 6; prec < 17; ++prec) {
      char trial[40];
      std::snprintf(trial, sizeof trial, "%.*g", prec, v);
      if (std::strtod(trial, nullptr) == v) return trial;
    }
  }
  return buf;
}

inline std::string to_csv(const Dataset& d) {
  std::string out;
  for (const auto& [key, value] : d.meta) out += "# " + key + " = " + value + "\n";
  for (std::size_t c = 0; c < d.columns.size(); ++c)
    out += d.columns[c] + (c + 1 < d.columns.size() ? "," : "\n");
  for (const auto& row : d.rows)
    for (std::size_t c = 0; c < row.size(); ++c)
      out += format_double(row[c]) + (c + 1 < row.size() ? "," : "\n");
  return out;
}

inline std::string to_json(const Dataset& d) {
  nlohmann::ordered_json j;
  j["meta"] = nlohmann::ordered_json::object();
  j["meta"]["command"] = d.command;
  for (const auto& [key, value] : d.meta) j["meta"][key] = value;
  j["data"]["columns"] = d.columns;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : d.rows) rows.push_back(row);
  j["data"]["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

/// Parse back a CSV produced by to_csv (round-trip checks and tests).
inline Dataset from_csv(const std::string& text) {
  Dataset d;
  std::size_t pos = 0;
  bool header_done = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string key = line.substr(2, eq - 3);
        d.meta[key] = line.substr(eq + 2);
      }
      continue;
    }
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos
                                                                    : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!header_done) {
      d.columns = cells;
      header_done = true;
    } else {
      std::vector<double> row;
      for (const auto& cell : cells) row.push_back(std::strtod(cell.c_str(), nullptr));
      d.rows.push_back(std::move(row));
    }
  }
  return d;
}

}  // namespace tmsq
