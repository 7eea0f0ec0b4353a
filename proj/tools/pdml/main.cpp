#include <iostream>

#include "CLI11.hpp"
#include "commands.h"
#include "config.h"
#include "json.hpp"
#include "pdml/script/diagnostic.h"
#include "pdml/surrogate/train.h"

namespace {

enum Exit { kOk = 0, kConfig = 1, kValidation = 2, kNumeric = 3 };

void add_common(CLI::App* app, pdml::cli::Overrides& o, bool config_required = true) {
  app->add_option("-c,--config", o.config, "JSON config file")->required(config_required)->check(CLI::ExistingFile);
  app->add_option("-o,--output", o.output, "output directory (overrides /output)");
  app->add_option("--threads", o.threads, "worker thread cap (0: all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pdml: scripted Monte Carlo, derivative-aware surrogates and Cheyette calibration"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PDML_VERSION);

  std::string script;
  std::vector<std::string> params;
  auto* check = app.add_subcommand("check", "parse and validate a script");
  check->add_option("script", script, "script file")->required()->check(CLI::ExistingFile);
  check->add_option("--params", params, "external parameter names (default: inferred)")->delimiter(',');

  pdml::cli::Overrides o;
  auto* simulate = app.add_subcommand("simulate", "simulate payoffs and pathwise derivatives");
  add_common(simulate, o);
  simulate->add_option("--paths", o.paths, "number of paths (overrides /sim/paths)");
  simulate->add_option("--seed", o.seed, "simulation seed (overrides /sim/seed)");

  auto* train = app.add_subcommand("train", "train a surrogate network");
  add_common(train, o);
  train->add_option("--loss", o.loss, "vml, dml or pdml")->check(CLI::IsMember({"vml", "dml", "pdml"}));
  train->add_option("--lambda", o.lambda, "weight of every derivative term");
  train->add_option("--reference", o.reference, "CSV of inputs and reference price to compare against");
  train->add_option("--paths", o.paths, "samples when simulating inline");
  train->add_option("--seed", o.seed, "simulation seed when simulating inline");

  auto* calibrate = app.add_subcommand("calibrate", "calibrate Cheyette volatility to caplet targets");
  add_common(calibrate, o);
  calibrate->add_option("--robust", o.robust, "none, best-seed or ensemble")
      ->check(CLI::IsMember({"none", "best-seed", "ensemble"}));
  calibrate->add_option("--seeds", o.seeds, "replication seeds, comma separated")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*check) return pdml::cli::cmd_check(script, params);
    if (*simulate) return pdml::cli::cmd_simulate(o);
    if (*train) return pdml::cli::cmd_train(o);
    if (*calibrate) return pdml::cli::cmd_calibrate(o);
  } catch (const pdml::script::ScriptError& e) {
    std::cerr << "error: script validation failed\n";
    return kValidation;
  } catch (const pdml::cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const pdml::surrogate::TrainError& e) {
    std::cerr << "error: training diverged: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  }
  return kConfig;
}
