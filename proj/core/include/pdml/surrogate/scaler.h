#pragma once

#include <Eigen/Dense>

namespace pdml::surrogate {

/// Standardization of inputs and outputs. Derivatives scale by
/// scale_x[j] / scale_y[i].
struct Scaler {
  Eigen::VectorXd shift_x, scale_x;
  Eigen::VectorXd shift_y, scale_y;

  /// Mean/std per column; zero-variance columns get scale 1.
  static Scaler fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);
  static Scaler identity(int n_in, int n_out);

  [[nodiscard]] Eigen::MatrixXd apply_x(const Eigen::MatrixXd& X) const;
  [[nodiscard]] Eigen::MatrixXd apply_y(const Eigen::MatrixXd& Y) const;
  [[nodiscard]] Eigen::MatrixXd invert_x(const Eigen::MatrixXd& Xs) const;
  [[nodiscard]] Eigen::MatrixXd invert_y(const Eigen::MatrixXd& Ys) const;
  /// DY holds one column per (output o, input j) pair at o * n_in + j.
  [[nodiscard]] Eigen::MatrixXd apply_dy(const Eigen::MatrixXd& DY) const;
  [[nodiscard]] Eigen::MatrixXd invert_dy(const Eigen::MatrixXd& DYs) const;
};

}  // namespace pdml::surrogate
