#include <map>
#include <stdexcept>

#include "pdml/surrogate/loss.h"

namespace pdml::surrogate {

namespace {

Eigen::MatrixXd act_map(const Eigen::MatrixXd& z, Activation a, int order) {
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double x = z.data()[i];
    out.data()[i] = order == 0 ? graph::activation_value(a, x)
                    : order == 1 ? graph::activation_d1(a, x)
                                 : graph::activation_d2(a, x);
  }
  return out;
}

}  // namespace

std::vector<DerivTerm> default_terms(int n_in, int n_out, const std::vector<std::pair<int, int>>& pairs) {
  std::vector<DerivTerm> terms;
  if (pairs.empty()) {
    for (int o = 0; o < n_out; ++o) {
      for (int j = 0; j < n_in; ++j) terms.push_back({o, j, 0.0});
    }
  } else {
    for (auto [o, j] : pairs) terms.push_back({o, j, 0.0});
  }
  for (auto& t : terms) t.lambda = 1.0 / static_cast<double>(terms.size());
  return terms;
}

LossValue loss(const MLPParams& p, const Batch& batch, const std::vector<DerivTerm>& terms, std::vector<double>* grad) {
  const Eigen::Index B = batch.X.rows();
  const int n_in = p.n_in(), n_out = p.n_out();
  if (B == 0) throw std::invalid_argument("empty batch");
  if (batch.X.cols() != n_in || batch.Y.cols() != n_out || batch.Y.rows() != B) {
    throw std::invalid_argument("batch dimensions do not match the network");
  }
  bool any_deriv = false;
  for (const auto& t : terms) {
    if (t.lambda < 0) throw std::invalid_argument("derivative weights must be nonnegative");
    if (t.output < 0 || t.output >= n_out || t.input < 0 || t.input >= n_in) {
      throw std::invalid_argument("derivative term references an invalid output/input index");
    }
    if (t.lambda > 0) any_deriv = true;
  }
  if (any_deriv && (batch.DY.rows() != B || batch.DY.cols() != static_cast<Eigen::Index>(n_in) * n_out)) {
    throw std::invalid_argument("derivative terms need DY with one column per output/input pair");
  }

  const std::size_t L = p.n_layers();
  const double inv_b = 1.0 / static_cast<double>(B);
  std::vector<Eigen::MatrixXd> A(L), D1(L), D2(L);
  A[0] = batch.X.transpose();
  Eigen::MatrixXd yhat;
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd z = p.W[l] * A[l];
    z.colwise() += p.b[l];
    if (l + 1 < L) {
      A[l + 1] = act_map(z, p.act, 0);
      D1[l + 1] = act_map(z, p.act, 1);
      if (any_deriv) D2[l + 1] = act_map(z, p.act, 2);
    } else {
      yhat = std::move(z);
    }
  }
  const Eigen::MatrixXd R = yhat - batch.Y.transpose();
  LossValue out;
  out.value_term = R.squaredNorm() * inv_b / n_out;

  std::vector<Eigen::MatrixXd> gW;
  std::vector<Eigen::VectorXd> gb;
  if (grad) {
    for (std::size_t l = 0; l < L; ++l) {
      gW.push_back(Eigen::MatrixXd::Zero(p.W[l].rows(), p.W[l].cols()));
      gb.push_back(Eigen::VectorXd::Zero(p.b[l].size()));
    }
  }
  // Extra adjoints of hidden pre-activations coming from the twin network.
  std::vector<Eigen::MatrixXd> extra(L);

  if (any_deriv) {
    std::map<int, std::vector<DerivTerm>> by_output;
    for (const auto& t : terms) {
      if (t.lambda > 0) by_output[t.output].push_back(t);
    }
    for (const auto& [o, ts] : by_output) {
      std::vector<Eigen::MatrixXd> zb(L + 1), U(L + 1);
      zb[L] = Eigen::MatrixXd::Zero(n_out, B);
      zb[L].row(o).setOnes();
      for (std::size_t l = L; l >= 2; --l) {
        U[l] = p.W[l - 1].transpose() * zb[l];
        zb[l - 1] = U[l].cwiseProduct(D1[l - 1]);
      }
      const Eigen::MatrixXd zb0 = p.W[0].transpose() * zb[1];
      Eigen::MatrixXd G0 = Eigen::MatrixXd::Zero(n_in, B);
      for (const auto& t : ts) {
        const Eigen::RowVectorXd diff = zb0.row(t.input) - batch.DY.col(o * n_in + t.input).transpose();
        out.deriv_term += t.lambda * diff.squaredNorm() * inv_b;
        G0.row(t.input) += 2.0 * t.lambda * inv_b * diff;
      }
      if (!grad) continue;
      gW[0] += zb[1] * G0.transpose();
      Eigen::MatrixXd Gzb = p.W[0] * G0;  // adjoint of zb[1]
      for (std::size_t l = 1; l < L; ++l) {
        const Eigen::MatrixXd GU = Gzb.cwiseProduct(D1[l]);
        const Eigen::MatrixXd e = Gzb.cwiseProduct(U[l + 1]).cwiseProduct(D2[l]);
        if (extra[l].size() == 0) {
          extra[l] = e;
        } else {
          extra[l] += e;
        }
        gW[l] += zb[l + 1] * GU.transpose();
        if (l + 1 < L) Gzb = p.W[l] * GU;
      }
    }
  }
  out.total = out.value_term + out.deriv_term;
  if (!grad) return out;

  Eigen::MatrixXd G = (2.0 * inv_b / n_out) * R;
  for (std::size_t l = L; l-- > 0;) {
    gW[l] += G * A[l].transpose();
    gb[l] += G.rowwise().sum();
    if (l > 0) {
      G = (p.W[l].transpose() * G).cwiseProduct(D1[l]);
      if (extra[l].size() != 0) G += extra[l];
    }
  }
  grad->clear();
  grad->reserve(p.n_params());
  for (std::size_t l = 0; l < L; ++l) {
    grad->insert(grad->end(), gW[l].data(), gW[l].data() + gW[l].size());
    grad->insert(grad->end(), gb[l].data(), gb[l].data() + gb[l].size());
  }
  return out;
}

}  // namespace pdml::surrogate
