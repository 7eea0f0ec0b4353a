#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdml/graph/graph.h"
#include "pdml/script/validate.h"
#include "pdml/sim/bindings.h"
#include "pdml/sim/sim_output.h"
#include "pdml/sim/time_grid.h"

namespace pdml::sim {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
  bool compute_dy = true;
  std::size_t shard_size = 256;
  std::size_t threads = 0;  // 0: hardware concurrency
  /// Replaces the generated standard normal for (path, noise index) when set;
  /// the noise index is step * n_brownians + brownian.
  std::function<double(std::uint64_t path, std::uint64_t index)> noise_override;
};

/// Observation times a script needs on its grid: payoff times and
/// time-indexed observations, evaluated from scalar parameters.
[[nodiscard]] std::vector<double> required_times(const script::ValidatedScript& script, const ParamSet& params);

/// A validated script unrolled into one batched graph over a fixed grid.
///
/// Per step: coefficients and correlations from the previous state, Euler
/// update of every SDE component, function components at the new state,
/// then update components. Payoffs read the snapped observation states.
class Simulator {
 public:
  /// `diff_wrt` names either a parameter (derivative with respect to all its
  /// pieces at once) or a single piece input such as `name[k]`.
  Simulator(const script::ValidatedScript& script, ParamSet params, TimeGrid grid,
            std::vector<std::string> diff_wrt = {});

  [[nodiscard]] SimOutput run(const SimConfig& config) const;

  /// Same structure (names, piece counts and per-path flags) with new values.
  void rebind(ParamSet params);

  [[nodiscard]] const graph::Graph& graph() const { return graph_; }
  [[nodiscard]] const TimeGrid& grid() const { return grid_; }
  [[nodiscard]] const std::vector<std::string>& payoff_names() const { return payoff_names_; }
  [[nodiscard]] const std::vector<std::string>& brownians() const { return brownians_; }
  [[nodiscard]] const ParamSet& params() const { return params_; }

 private:
  struct ParamInput {
    std::string name;
    std::size_t piece = 0;
    graph::NodeId node = 0;
  };
  class Builder;
  friend class Builder;

  ParamSet params_;
  TimeGrid grid_;
  std::vector<std::string> diff_wrt_;
  graph::Graph graph_;
  std::vector<ParamInput> param_inputs_;
  std::vector<std::vector<graph::NodeId>> diff_inputs_;  // per diff_wrt entry
  std::vector<graph::NodeId> noise_inputs_;              // step * n_bm + bm
  std::vector<graph::NodeId> payoff_nodes_;
  std::vector<std::string> payoff_names_;
  std::vector<std::string> brownians_;
  graph::NodeId batchsize_input_ = 0;
};

/// Builds the grid from the script's observation times and runs once.
[[nodiscard]] SimOutput simulate(const script::ValidatedScript& script, const ParamSet& params, double max_dt,
                                 const SimConfig& config, const std::vector<std::string>& diff_wrt = {});

}  // namespace pdml::sim
