#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "pdml/graph/activation.h"

namespace pdml::surrogate {

using graph::Activation;

/// Feedforward network z_l = W_l rho(z_{l-1}) + b_l with identity on the
/// input and output layers.
struct MLPParams {
  std::vector<int> sizes;  // n_in, hidden..., n_out
  Activation act = Activation::Softplus;
  std::vector<Eigen::MatrixXd> W;  // W[l]: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> b;

  [[nodiscard]] int n_in() const { return sizes.front(); }
  [[nodiscard]] int n_out() const { return sizes.back(); }
  [[nodiscard]] std::size_t n_layers() const { return W.size(); }
  [[nodiscard]] std::size_t n_params() const;

  /// Zero weights and biases with the given layer sizes.
  static MLPParams zeros(std::vector<int> sizes, Activation act);
  /// Glorot-uniform weights, zero biases.
  static MLPParams glorot(std::vector<int> sizes, Activation act, std::uint64_t seed);

  /// Flat parameter vector (W then b per layer, column-major) and back.
  [[nodiscard]] std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);
};

/// Rows of X are samples; returns rows of outputs.
[[nodiscard]] Eigen::MatrixXd forward(const MLPParams& p, const Eigen::MatrixXd& X);

struct TwinOutput {
  Eigen::MatrixXd y;                 // samples x n_out
  std::vector<Eigen::MatrixXd> dydx;  // per output: samples x n_in
};

/// Value and input gradient from one forward pass plus one backward
/// recursion per output.
[[nodiscard]] TwinOutput twin_forward(const MLPParams& p, const Eigen::MatrixXd& X);

}  // namespace pdml::surrogate
