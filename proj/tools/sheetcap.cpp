// sheetcap: experiment harness for Brownian-sheet hitting bounds and
// Bessel-Riesz capacities.
//
//   sheetcap <experiment> --config <file> [--seed N] [--out DIR] [--set k=v]
//   sheetcap suite --config <file> [--out DIR]
//
// Exit codes: 0 all verdicts pass, 1 some verdict failed, 2 bad config.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sheetcap/experiments.hpp"

namespace {

// --set key=value overrides a config key; dots descend into objects and the
// value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& cfg, const std::string& assignment) {
  const auto pos = assignment.find('=');
  if (pos == std::string::npos || pos == 0) {
    throw sheetcap::ConfigError({"--set expects key=value, got: " + assignment});
  }
  const std::string key = assignment.substr(0, pos);
  const std::string value = assignment.substr(pos + 1);

  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    parsed = value;
  }

  nlohmann::json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw sheetcap::ConfigError({"--set key has an empty segment: " + key});
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

void print_verdicts(const sheetcap::ExperimentOutput& out) {
  for (const auto& v : out.report["verdicts"]) {
    std::cout << (v["pass"].get<bool>() ? "[PASS] " : "[FAIL] ") << v["name"].get<std::string>()
              << "  lhs=" << v["lhs"].get<double>() << "  rhs=" << v["rhs"].get<double>()
              << "  slack=" << v["slack"].get<double>() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Brownian sheet hitting bounds and Bessel-Riesz capacities"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_given = false;

  std::vector<CLI::App*> subs;
  for (const std::string& name : sheetcap::experiment_names()) {
    subs.push_back(app.add_subcommand(name, "run the " + name + " experiment"));
  }
  CLI::App* suite = app.add_subcommand("suite", "run a list of experiments from one config");
  subs.push_back(suite);

  for (CLI::App* sub : subs) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--out", out_dir, "output directory for reports, CSV tables and plots");
    if (sub != suite) {
      sub->add_option("--set", overrides, "override a config key (key=value, repeatable)");
      sub->add_option_function<std::uint64_t>(
          "--seed", [&](std::uint64_t v) { seed = v; seed_given = true; },
          "override the master seed");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (suite->parsed()) {
      if (config_path.empty()) throw sheetcap::ConfigError({"suite requires --config"});
      const sheetcap::SuiteResult result = sheetcap::run_suite_file(config_path, out_dir);
      for (const auto& f : result.files) std::cout << "wrote " << f << "\n";
      if (result.exit_code != 0) {
        std::cerr << "failed verdicts:\n";
        for (const auto& f : result.failures) std::cerr << "  " << f << "\n";
      }
      return result.exit_code;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    nlohmann::json cfg = config_path.empty() ? nlohmann::json::object()
                                             : sheetcap::load_json_file(config_path);
    for (const std::string& assignment : overrides) apply_override(cfg, assignment);
    if (seed_given) cfg["seed"] = seed;  // flags win over config keys

    const sheetcap::ExperimentOutput out = sheetcap::run_experiment(name, cfg);
    for (const auto& f : sheetcap::write_experiment_outputs(out, out_dir)) {
      std::cout << "wrote " << f << "\n";
    }
    print_verdicts(out);
    return out.pass ? 0 : 1;
  } catch (const sheetcap::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
