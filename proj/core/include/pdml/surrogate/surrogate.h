#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdml/surrogate/loss.h"
#include "pdml/surrogate/mlp.h"
#include "pdml/surrogate/scaler.h"

namespace pdml::surrogate {

/// Trained network with its scaler; predictions are in original units.
struct Surrogate {
  MLPParams net;
  Scaler scaler;
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  std::vector<double> loss_history;

  [[nodiscard]] Eigen::MatrixXd predict(const Eigen::MatrixXd& X) const;
  /// d output / d input per output, samples x n_in, original units.
  [[nodiscard]] std::vector<Eigen::MatrixXd> predict_grad(const Eigen::MatrixXd& X) const;

  void save(const std::string& file) const;
  static Surrogate load(const std::string& file);

  static constexpr std::uint32_t kFormatVersion = 1;
};

/// Mean of member predictions.
[[nodiscard]] Eigen::MatrixXd ensemble_predict(const std::vector<const Surrogate*>& members, const Eigen::MatrixXd& X);
/// Mean of member input gradients.
[[nodiscard]] std::vector<Eigen::MatrixXd> ensemble_grad(const std::vector<const Surrogate*>& members,
                                                         const Eigen::MatrixXd& X);

}  // namespace pdml::surrogate
