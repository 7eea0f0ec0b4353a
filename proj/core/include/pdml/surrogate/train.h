#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pdml/surrogate/loss.h"
#include "pdml/surrogate/surrogate.h"

namespace pdml::surrogate {

struct TrainConfig {
  LossKind kind = LossKind::PDML;
  /// Derivative terms in scaled units. Empty with DML/PDML means
  /// default_terms() (all pairs for DML, pdml_pairs for PDML).
  std::vector<DerivTerm> terms;
  std::vector<std::pair<int, int>> pdml_pairs;
  /// When set, overrides every term's lambda.
  double lambda_override = -1.0;

  std::vector<int> hidden{32, 32, 32, 32};
  Activation act = Activation::Softplus;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool cosine_decay = true;
  std::size_t batch_size = 256;
  std::size_t epochs = 200;
  std::uint64_t init_seed = 1;
  std::uint64_t shuffle_seed = 2;
};

class TrainError : public std::runtime_error {
 public:
  TrainError(const std::string& msg, Surrogate partial) : std::runtime_error(msg), partial_(std::move(partial)) {}
  /// State at the end of the last epoch whose loss was finite.
  [[nodiscard]] const Surrogate& partial() const { return partial_; }

 private:
  Surrogate partial_;
};

/// Fits a scaler, initializes weights and runs minibatch Adam. Samples are
/// rows; DY (original units, column o * n_in + j) is required for DML/PDML.
[[nodiscard]] Surrogate train(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& DY,
                              const TrainConfig& config);

/// Terms the configuration resolves to.
[[nodiscard]] std::vector<DerivTerm> resolve_terms(const TrainConfig& config, int n_in, int n_out);

}  // namespace pdml::surrogate
