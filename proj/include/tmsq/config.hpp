// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "tmsq/protocol.hpp"

namespace tmsq {

enum class OutputFormat { csv, json };
enum class GammaSource { explicit_rate, paper_calibrated, beam_derived };

/// gamma matched to the squeezed-target benchmark: two protocol steps
/// from an empty cavity at mu = 0.97 down to n_inf = 0.01 take 19 ms.
inline double paper_calibrated_gamma() {
  const double mu = 0.97;
  const double n0 = mu * mu / (1.0 - mu * mu);
  return 2.0 * std::log(n0 / 0.01) / 19.0e-3;
}

/// Fully parsed run configuration for the command-line tool.
struct RunConfig {
  ProtocolConfig protocol;
  GammaSource gamma_source = GammaSource::paper_calibrated;
  std::optional<double> delta;  // alternative to mu
  OutputFormat format = OutputFormat::csv;
  std::string out_path;  // empty = stdout
  // fig2b grid
  double mu_min = 0.05, mu_max = 0.97;
  int mu_points = 24;
  double fig2b_thermal_n = 0.0;
  // validate knobs
  double leakage_threshold = kLeakageThreshold;
  std::string canonical_text;  // normalized key=value dump for hashing
  Diagnostics parse_diag;
};

namespace detail {

struct ConfigEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

using ConfigTable = std::map<std::string, ConfigEntry>;  // "section.key"

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  return (b == std::string::npos) ? "" : s.substr(b, e - b + 1);
}

inline ConfigTable parse_ini(const std::string& text, const std::string& origin) {
  ConfigTable table;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key or value");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any [section]");
    std::string full = section + "." + key;
    if (table.count(full))
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + full + "'");
    table[full] = ConfigEntry{value, lineno, false};
  }
  return table;
}

class ConfigReader {
 public:
  ConfigReader(ConfigTable table, std::string origin)
      : table_(std::move(table)), origin_(std::move(origin)) {}

  bool has(const std::string& key) { return table_.count(key) > 0; }

  std::optional<std::string> get_string(const std::string& key) {
    auto it = table_.find(key);
    if (it == table_.end()) return {};
    it->second.used = true;
    return it->second.value;
  }

  std::optional<double> get_double(const std::string& key) {
    auto s = get_string(key);
    if (!s) return {};
    try {
      std::size_t pos = 0;
      double v = std::stod(*s, &pos);
      if (pos != s->size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(where(key) + ": '" + *s + "' is not a number");
    }
  }

  std::optional<long> get_int(const std::string& key) {
    auto s = get_string(key);
    if (!s) return {};
    try {
      std::size_t pos = 0;
      long v = std::stol(*s, &pos);
      if (pos != s->size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(where(key) + ": '" + *s + "' is not an integer");
    }
  }

  std::optional<std::uint64_t> get_seed(const std::string& key) {
    auto s = get_string(key);
    if (!s) return {};
    try {
      return static_cast<std::uint64_t>(std::stoull(*s));
    } catch (const std::exception&) {
      throw ConfigError(where(key) + ": '" + *s + "' is not a valid seed");
    }
  }

  std::string where(const std::string& key) const {
    auto it = table_.find(key);
    int line = (it != table_.end()) ? it->second.line : 0;
    return origin_ + ":" + std::to_string(line);
  }

  void reject_unknown() const {
    for (const auto& [key, entry] : table_)
      if (!entry.used)
        throw ConfigError(origin_ + ":" + std::to_string(entry.line) + ": unknown key '" + key +
                          "'");
  }

  std::string canonical() const {
    std::string out;
    for (const auto& [key, entry] : table_) out += key + " = " + entry.value + "\n";
    return out;
  }

 private:
  ConfigTable table_;
  std::string origin_;
};

}  // namespace detail

/// Parse the line-oriented `key = value` format with [section] headers.
/// Unknown keys, missing required keys and an over- or under-determined
/// gamma specification are rejected with line-numbered diagnostics.
inline RunConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
  detail::ConfigReader r(detail::parse_ini(text, origin), origin);
  RunConfig rc;
  ProtocolConfig& p = rc.protocol;
  Diagnostics& diag = rc.parse_diag;

  // [drive]
  if (auto v = r.get_double("drive.omega")) p.Omega = *v;
  else throw ConfigError(origin + ": missing required key 'drive.omega'");
  if (auto v = r.get_double("drive.g")) p.g = *v;
  else throw ConfigError(origin + ": missing required key 'drive.g'");
  std::optional<double> omega0 = r.get_double("drive.omega0");
  std::optional<double> omegaL = r.get_double("drive.omegaL");
  rc.delta = r.get_double("drive.delta");

  // [protocol]
  std::optional<double> mu = r.get_double("protocol.mu");
  if (mu && rc.delta)
    throw ConfigError(r.where("protocol.mu") + ": give either mu or drive.delta, not both");
  if (!mu && !rc.delta)
    throw ConfigError(origin + ": one of 'protocol.mu' or 'drive.delta' is required");
  if (rc.delta) {
    if (*rc.delta == 0.0)
      throw RegimeError(r.where("drive.delta") + ": Delta = 0 gives mu = 1 (divergent squeezing)");
    DressedParams dp = squeeze_params(*rc.delta, p.Omega, p.g, &diag);
    p.mu = dp.mu;
  } else {
    if (!(*mu > 0.0 && *mu < 1.0))
      throw RegimeError(r.where("protocol.mu") +
                        ": mu must lie strictly inside (0, 1); mu -> 1 has divergent squeezing");
    p.mu = *mu;
  }
  if (auto v = r.get_double("protocol.n_bar_inf")) {
    if (*v <= 0) throw RegimeError(r.where("protocol.n_bar_inf") + ": n_bar_inf must be > 0");
    p.n_bar_inf = *v;
  }
  if (auto v = r.get_string("protocol.initial")) {
    if (*v == "vacuum") {
      p.initial = InitialState::vacuum();
    } else if (v->rfind("thermal:", 0) == 0) {
      double n_th = 0;
      try {
        n_th = std::stod(v->substr(8));
      } catch (const std::exception&) {
        throw ConfigError(r.where("protocol.initial") + ": malformed thermal occupation");
      }
      p.initial = InitialState::thermal(n_th);
    } else {
      throw ConfigError(r.where("protocol.initial") + ": expected 'vacuum' or 'thermal:<n>'");
    }
  }
  if (auto v = r.get_string("protocol.engine")) {
    if (*v == "master-equation") p.engine = Engine::master_equation;
    else if (*v == "stochastic") p.engine = Engine::stochastic;
    else throw ConfigError(r.where("protocol.engine") + ": expected 'master-equation' or 'stochastic'");
  }
  if (auto v = r.get_string("protocol.basis")) {
    if (*v == "b") p.sim_basis = Basis::b;
    else if (*v == "a") p.sim_basis = Basis::a;
    else throw ConfigError(r.where("protocol.basis") + ": expected 'a' or 'b'");
  }
  if (auto v = r.get_seed("protocol.seed")) p.seed = *v;
  else throw ConfigError(origin + ": missing required key 'protocol.seed'");
  if (auto v = r.get_int("protocol.trajectories")) {
    if (*v < 1) throw ConfigError(r.where("protocol.trajectories") + ": must be >= 1");
    p.trajectories = static_cast<int>(*v);
  }
  if (auto v = r.get_int("protocol.records_per_step")) {
    if (*v < 2) throw ConfigError(r.where("protocol.records_per_step") + ": must be >= 2");
    p.records_per_step = static_cast<int>(*v);
  }

  // [reservoir] -- exactly one gamma source
  std::optional<double> gamma = r.get_double("reservoir.gamma");
  std::optional<std::string> calibration = r.get_string("reservoir.calibration");
  std::optional<double> r_at = r.get_double("reservoir.r_at");
  std::optional<double> tau = r.get_double("reservoir.tau");
  if (r_at.has_value() != tau.has_value())
    throw ConfigError(origin + ": reservoir r_at and tau must be given together");
  int sources = (gamma ? 1 : 0) + (calibration ? 1 : 0) + (r_at ? 1 : 0);
  if (sources == 0) {
    calibration = "paper";  // documented default
    sources = 1;
  }
  if (sources > 1)
    throw ConfigError(origin + ": give exactly one gamma source (reservoir.gamma, "
                               "reservoir.calibration, or reservoir.r_at + reservoir.tau)");
  if (calibration) {
    if (*calibration != "paper")
      throw ConfigError(r.where("reservoir.calibration") + ": the only calibration is 'paper'");
    p.reservoir.gamma_explicit = paper_calibrated_gamma();
    rc.gamma_source = GammaSource::paper_calibrated;
  } else if (gamma) {
    if (*gamma <= 0) throw RegimeError(r.where("reservoir.gamma") + ": gamma must be > 0");
    p.reservoir.gamma_explicit = *gamma;
    rc.gamma_source = GammaSource::explicit_rate;
  } else {
    if (*r_at <= 0 || *tau <= 0)
      throw RegimeError(origin + ": reservoir r_at and tau must be > 0");
    p.reservoir.r_at = r_at;
    p.reservoir.tau = tau;
    rc.gamma_source = GammaSource::beam_derived;
  }
  if (auto v = r.get_double("reservoir.jitter_std")) {
    if (*v < 0) throw ConfigError(r.where("reservoir.jitter_std") + ": must be >= 0");
    p.reservoir.jitter_std = *v;
  }
  if (p.engine == Engine::stochastic && rc.gamma_source != GammaSource::beam_derived)
    throw ConfigError(origin + ": the stochastic engine needs reservoir.r_at and reservoir.tau");

  // [numerics]
  if (auto v = r.get_int("numerics.n_max1")) p.n_max1 = static_cast<int>(*v);
  if (auto v = r.get_int("numerics.n_max2")) p.n_max2 = static_cast<int>(*v);
  if (auto v = r.get_int("numerics.max_joint_dim")) p.max_joint_dim = *v;
  if (auto v = r.get_double("numerics.rel_tol")) p.ode.rel_tol = *v;
  if (auto v = r.get_double("numerics.abs_tol")) p.ode.abs_tol = *v;
  if (auto v = r.get_double("numerics.leakage_threshold")) rc.leakage_threshold = *v;

  // [output]
  if (auto v = r.get_string("output.format")) {
    if (*v == "csv") rc.format = OutputFormat::csv;
    else if (*v == "json") rc.format = OutputFormat::json;
    else throw ConfigError(r.where("output.format") + ": expected 'csv' or 'json'");
  }
  if (auto v = r.get_string("output.path")) rc.out_path = *v;

  // [fig2b]
  if (auto v = r.get_double("fig2b.mu_min")) rc.mu_min = *v;
  if (auto v = r.get_double("fig2b.mu_max")) rc.mu_max = *v;
  if (auto v = r.get_int("fig2b.mu_points")) rc.mu_points = static_cast<int>(*v);
  if (auto v = r.get_double("fig2b.thermal_n")) rc.fig2b_thermal_n = *v;
  if (!(rc.mu_min > 0.0 && rc.mu_max < 1.0 && rc.mu_min <= rc.mu_max) || rc.mu_points < 1)
    throw RegimeError(origin + ": fig2b mu grid must satisfy 0 < mu_min <= mu_max < 1");

  r.reject_unknown();
  rc.canonical_text = r.canonical();

  // Physical consistency warnings surfaced at parse time.
  DriveParams drive{p.Omega, p.g, rc.delta ? *rc.delta : drive_for_mu(p.mu, p.Omega, +1), omega0,
                    omegaL};
  drive.validate(&diag);
  DressedParams dp = squeeze_params(drive.Delta, p.Omega, p.g, &diag);
  p.reservoir.gamma_for(dp.Omega_b, &diag);
  return rc;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace tmsq
