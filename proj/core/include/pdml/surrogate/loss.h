#pragma once

#include <vector>

#include <Eigen/Dense>

#include "pdml/surrogate/mlp.h"

namespace pdml::surrogate {

enum class LossKind { VML, DML, PDML };

/// Derivative penalty on d output / d input with weight lambda.
struct DerivTerm {
  int output = 0;
  int input = 0;
  double lambda = 0.0;
};

/// Samples as rows. DY has one column per (output o, input j) at o * n_in + j
/// and may be empty when no derivative terms are used.
struct Batch {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
  Eigen::MatrixXd DY;
};

struct LossValue {
  double total = 0.0;
  double value_term = 0.0;
  double deriv_term = 0.0;
};

/// mean |Y - N(X)|^2 + sum_k lambda_k mean (DY_k - dN_{o_k}/dX_{j_k})^2,
/// with parameter gradients written into `grad` (same layout as
/// MLPParams::flatten) when it is non-null.
LossValue loss(const MLPParams& p, const Batch& batch, const std::vector<DerivTerm>& terms,
               std::vector<double>* grad = nullptr);

/// Terms for every (output, input) pair (DML) with lambda = 1 / count, or
/// for the listed pairs only (PDML) when `pairs` is non-empty.
[[nodiscard]] std::vector<DerivTerm> default_terms(int n_in, int n_out,
                                                   const std::vector<std::pair<int, int>>& pairs = {});

}  // namespace pdml::surrogate
