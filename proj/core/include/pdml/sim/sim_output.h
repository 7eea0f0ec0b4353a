#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pdml::sim {

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Per-path payoff samples and samplewise derivatives.
///
/// Y is row-major [path][payoff]; DY is [path][payoff][param].
struct SimOutput {
  std::size_t n_paths = 0;
  std::vector<std::string> payoff_names;
  std::vector<std::string> diff_names;
  std::vector<double> Y;
  std::vector<double> DY;

  std::uint64_t seed = 0;
  std::vector<double> grid;

  [[nodiscard]] std::size_t n_payoffs() const { return payoff_names.size(); }
  [[nodiscard]] std::size_t n_diff() const { return diff_names.size(); }
  [[nodiscard]] double y(std::size_t path, std::size_t payoff) const { return Y[path * n_payoffs() + payoff]; }
  [[nodiscard]] double dy(std::size_t path, std::size_t payoff, std::size_t param) const {
    return DY[(path * n_payoffs() + payoff) * n_diff() + param];
  }

  /// Sample mean and standard error of payoff j.
  [[nodiscard]] Estimate estimate(std::size_t payoff) const;
  /// Sample mean and standard error of the derivative of payoff j.
  [[nodiscard]] Estimate dy_estimate(std::size_t payoff, std::size_t param) const;

  /// Columns: path, payoff, Y, DY_<param>... (one row per path and payoff).
  void write_csv(const std::string& file) const;

  /// Layout: "PDMLSIM1", u32 version, u64 n_paths, u32 n_payoffs, u32 n_diff,
  /// u64 seed, u32 n_grid, names (u32 length + bytes, payoffs then params),
  /// grid, Y, DY; all numbers little-endian, reals as f64.
  void write_binary(const std::string& file) const;
  static SimOutput read_binary(const std::string& file);

  static constexpr std::uint32_t kBinaryVersion = 1;
};

}  // namespace pdml::sim
