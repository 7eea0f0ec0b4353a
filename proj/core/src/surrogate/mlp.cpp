#include <random>
#include <stdexcept>

#include "pdml/surrogate/mlp.h"

namespace pdml::surrogate {

namespace {

Eigen::MatrixXd act_map(const Eigen::MatrixXd& z, Activation a, int order) {
  Eigen::MatrixXd out(z.rows(), z.cols());
  const double* src = z.data();
  double* dst = out.data();
  const Eigen::Index n = z.size();
  switch (order) {
    case 0: for (Eigen::Index i = 0; i < n; ++i) dst[i] = graph::activation_value(a, src[i]); break;
    case 1: for (Eigen::Index i = 0; i < n; ++i) dst[i] = graph::activation_d1(a, src[i]); break;
    default: for (Eigen::Index i = 0; i < n; ++i) dst[i] = graph::activation_d2(a, src[i]); break;
  }
  return out;
}

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw std::invalid_argument("network needs at least input and output sizes");
  for (int s : sizes) {
    if (s < 1) throw std::invalid_argument("layer sizes must be positive");
  }
}

void check_input(const MLPParams& p, const Eigen::MatrixXd& X) {
  if (X.cols() != p.n_in()) {
    throw std::invalid_argument("input has " + std::to_string(X.cols()) + " columns, network expects " +
                                std::to_string(p.n_in()));
  }
}

}  // namespace

std::size_t MLPParams::n_params() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < W.size(); ++l) n += static_cast<std::size_t>(W[l].size() + b[l].size());
  return n;
}

MLPParams MLPParams::zeros(std::vector<int> sizes, Activation act) {
  check_sizes(sizes);
  MLPParams p;
  p.sizes = std::move(sizes);
  p.act = act;
  for (std::size_t l = 0; l + 1 < p.sizes.size(); ++l) {
    p.W.push_back(Eigen::MatrixXd::Zero(p.sizes[l + 1], p.sizes[l]));
    p.b.push_back(Eigen::VectorXd::Zero(p.sizes[l + 1]));
  }
  return p;
}

MLPParams MLPParams::glorot(std::vector<int> sizes, Activation act, std::uint64_t seed) {
  MLPParams p = zeros(std::move(sizes), act);
  std::mt19937_64 rng(seed);
  for (auto& W : p.W) {
    const double limit = std::sqrt(6.0 / static_cast<double>(W.rows() + W.cols()));
    for (Eigen::Index i = 0; i < W.size(); ++i) {
      const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
      W.data()[i] = (2.0 * u - 1.0) * limit;
    }
  }
  return p;
}

std::vector<double> MLPParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(n_params());
  for (std::size_t l = 0; l < W.size(); ++l) {
    flat.insert(flat.end(), W[l].data(), W[l].data() + W[l].size());
    flat.insert(flat.end(), b[l].data(), b[l].data() + b[l].size());
  }
  return flat;
}

void MLPParams::unflatten(const std::vector<double>& flat) {
  if (flat.size() != n_params()) throw std::invalid_argument("parameter vector has the wrong length");
  std::size_t k = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(k), flat.begin() + static_cast<std::ptrdiff_t>(k + W[l].size()), W[l].data());
    k += static_cast<std::size_t>(W[l].size());
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(k), flat.begin() + static_cast<std::ptrdiff_t>(k + b[l].size()), b[l].data());
    k += static_cast<std::size_t>(b[l].size());
  }
}

Eigen::MatrixXd forward(const MLPParams& p, const Eigen::MatrixXd& X) {
  check_input(p, X);
  Eigen::MatrixXd a = X.transpose();
  const std::size_t L = p.n_layers();
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd z = p.W[l] * a;
    z.colwise() += p.b[l];
    a = l + 1 < L ? act_map(z, p.act, 0) : std::move(z);
  }
  return a.transpose();
}

TwinOutput twin_forward(const MLPParams& p, const Eigen::MatrixXd& X) {
  check_input(p, X);
  const std::size_t L = p.n_layers();
  std::vector<Eigen::MatrixXd> d1(L);  // rho'(z_l) for hidden layers l = 1..L-1
  Eigen::MatrixXd a = X.transpose();
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd z = p.W[l] * a;
    z.colwise() += p.b[l];
    if (l + 1 < L) {
      d1[l + 1] = act_map(z, p.act, 1);
      a = act_map(z, p.act, 0);
    } else {
      a = std::move(z);
    }
  }
  TwinOutput out;
  out.y = a.transpose();
  const Eigen::Index B = X.rows();
  for (int o = 0; o < p.n_out(); ++o) {
    Eigen::MatrixXd zb = Eigen::MatrixXd::Zero(p.n_out(), B);
    zb.row(o).setOnes();
    for (std::size_t l = L; l >= 2; --l) zb = (p.W[l - 1].transpose() * zb).cwiseProduct(d1[l - 1]);
    out.dydx.push_back((p.W[0].transpose() * zb).transpose());
  }
  return out;
}

}  // namespace pdml::surrogate
