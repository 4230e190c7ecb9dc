// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: reproduces the relaxation curves and timing
// tables of the atomic-reservoir two-mode-squeezing protocol and exposes
// the parameter maps and the cross-module validation suite.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tmsq/commands.hpp"

namespace {

void write_output(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tmsq::ConfigError("cannot open output file '" + path + "'");
  out << text;
}

int run(int argc, char** argv) {
  CLI::App app{"atomic-reservoir two-mode squeezing simulator"};
  app.require_subcommand(1);

  std::string config_path, out_path, format;
  std::optional<std::uint64_t> seed;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run configuration file")->required();
    cmd->add_option("--seed", seed, "override the configured RNG seed");
    cmd->add_option("--out", out_path, "output path (default: stdout)");
    cmd->add_option("--format", format, "csv | json (default: from config)");
  };

  CLI::App* c_params = app.add_subcommand("params", "derived parameter report");
  CLI::App* c_fig2a = app.add_subcommand("fig2a", "two-step relaxation curves");
  CLI::App* c_fig2b = app.add_subcommand("fig2b", "photon number and timing vs mu");
  CLI::App* c_protocol = app.add_subcommand("protocol", "full protocol run");
  CLI::App* c_validate = app.add_subcommand("validate", "cross-module property suite");
  for (CLI::App* cmd : {c_params, c_fig2a, c_fig2b, c_protocol, c_validate}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  tmsq::RunConfig rc = tmsq::parse_config_file(config_path);
  if (seed) rc.protocol.seed = *seed;
  if (!out_path.empty()) rc.out_path = out_path;
  if (!format.empty()) {
    if (format == "csv") rc.format = tmsq::OutputFormat::csv;
    else if (format == "json") rc.format = tmsq::OutputFormat::json;
    else throw tmsq::ConfigError("--format must be csv or json");
  }
  for (const std::string& w : rc.parse_diag.warnings) std::cerr << "warning: " << w << "\n";

  if (c_validate->parsed()) {
    auto results = tmsq::run_validation_suite(rc);
    bool all_pass = true;
    std::string text;
    for (const auto& r : results) {
      all_pass = all_pass && r.pass;
      text += std::string(r.pass ? "PASS" : "FAIL") + "  " + r.name +
              (r.detail.empty() ? "" : "  (" + r.detail + ")") + "\n";
    }
    text += std::string(all_pass ? "OK" : "FAILED") + "  " + std::to_string(results.size()) +
            " properties\n";
    if (rc.format == tmsq::OutputFormat::json) {
      nlohmann::ordered_json j;
      j["meta"]["command"] = "validate";
      j["meta"]["version"] = tmsq::kVersion;
      j["meta"]["config_hash"] = tmsq::hash_string(rc.canonical_text);
      j["properties"] = nlohmann::ordered_json::array();
      for (const auto& r : results)
        j["properties"].push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
      j["all_pass"] = all_pass;
      write_output(j.dump(2) + "\n", rc.out_path);
    } else {
      write_output(text, rc.out_path);
    }
    if (rc.out_path.empty() == false) std::cerr << text;  // keep the terminal summary
    return all_pass ? 0 : 3;
  }

  tmsq::Dataset d;
  if (c_params->parsed()) d = tmsq::cmd_params(rc);
  else if (c_fig2a->parsed()) d = tmsq::cmd_fig2a(rc);
  else if (c_fig2b->parsed()) d = tmsq::cmd_fig2b(rc);
  else d = tmsq::cmd_protocol(rc);

  write_output(rc.format == tmsq::OutputFormat::json ? tmsq::to_json(d) : tmsq::to_csv(d),
               rc.out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const tmsq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const tmsq::RegimeError& e) {
    std::cerr << "regime error: " << e.what() << "\n";
    return 2;
  } catch (const tmsq::NumericsError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
