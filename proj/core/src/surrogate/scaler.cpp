#include <cmath>
#include <stdexcept>

#include "pdml/surrogate/scaler.h"

namespace pdml::surrogate {

namespace {

void moments(const Eigen::MatrixXd& M, Eigen::VectorXd& shift, Eigen::VectorXd& scale) {
  const auto n = static_cast<double>(M.rows());
  shift = M.colwise().mean().transpose();
  scale.resize(M.cols());
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    const double var = (M.col(j).array() - shift(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    scale(j) = sd > 1e-300 && std::isfinite(sd) ? sd : 1.0;
  }
}

}  // namespace

Scaler Scaler::fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  if (X.rows() == 0 || X.rows() != Y.rows()) throw std::invalid_argument("scaler needs matching, non-empty X and Y");
  Scaler s;
  moments(X, s.shift_x, s.scale_x);
  moments(Y, s.shift_y, s.scale_y);
  return s;
}

Scaler Scaler::identity(int n_in, int n_out) {
  return {Eigen::VectorXd::Zero(n_in), Eigen::VectorXd::Ones(n_in), Eigen::VectorXd::Zero(n_out),
          Eigen::VectorXd::Ones(n_out)};
}

Eigen::MatrixXd Scaler::apply_x(const Eigen::MatrixXd& X) const {
  return (X.rowwise() - shift_x.transpose()).array().rowwise() / scale_x.transpose().array();
}

Eigen::MatrixXd Scaler::apply_y(const Eigen::MatrixXd& Y) const {
  return (Y.rowwise() - shift_y.transpose()).array().rowwise() / scale_y.transpose().array();
}

Eigen::MatrixXd Scaler::invert_x(const Eigen::MatrixXd& Xs) const {
  return (Xs.array().rowwise() * scale_x.transpose().array()).matrix().rowwise() + shift_x.transpose();
}

Eigen::MatrixXd Scaler::invert_y(const Eigen::MatrixXd& Ys) const {
  return (Ys.array().rowwise() * scale_y.transpose().array()).matrix().rowwise() + shift_y.transpose();
}

Eigen::MatrixXd Scaler::apply_dy(const Eigen::MatrixXd& DY) const {
  const Eigen::Index n_in = scale_x.size(), n_out = scale_y.size();
  if (DY.cols() != n_in * n_out) throw std::invalid_argument("DY has the wrong number of columns");
  Eigen::MatrixXd out = DY;
  for (Eigen::Index o = 0; o < n_out; ++o) {
    for (Eigen::Index j = 0; j < n_in; ++j) out.col(o * n_in + j) *= scale_x(j) / scale_y(o);
  }
  return out;
}

Eigen::MatrixXd Scaler::invert_dy(const Eigen::MatrixXd& DYs) const {
  const Eigen::Index n_in = scale_x.size(), n_out = scale_y.size();
  if (DYs.cols() != n_in * n_out) throw std::invalid_argument("DY has the wrong number of columns");
  Eigen::MatrixXd out = DYs;
  for (Eigen::Index o = 0; o < n_out; ++o) {
    for (Eigen::Index j = 0; j < n_in; ++j) out.col(o * n_in + j) *= scale_y(o) / scale_x(j);
  }
  return out;
}

}  // namespace pdml::surrogate
