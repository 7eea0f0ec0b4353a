#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pdml::cli {

/// Command-line overrides; set values replace the config file's.
struct Overrides {
  std::string config;
  std::string output;
  std::optional<std::size_t> paths;
  std::optional<std::uint64_t> seed;
  std::string loss;
  std::optional<double> lambda;
  std::string reference;
  std::string robust;
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> threads;
};

int cmd_check(const std::string& script_file, const std::vector<std::string>& params);
int cmd_simulate(const Overrides& o);
int cmd_train(const Overrides& o);
int cmd_calibrate(const Overrides& o);

}  // namespace pdml::cli
