#include <cstring>
#include <fstream>
#include <stdexcept>

#include "pdml/surrogate/surrogate.h"
#include "pdml/util/binio.h"

namespace pdml::surrogate {

using binio::get;
using binio::put;

namespace {

constexpr char kMagic[8] = {'P', 'D', 'M', 'L', 'N', 'E', 'T', '1'};

void put_vec(std::ostream& os, const double* p, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) put<double>(os, p[i]);
}

void get_vec(std::istream& is, double* p, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) p[i] = get<double>(is);
}

}  // namespace

Eigen::MatrixXd Surrogate::predict(const Eigen::MatrixXd& X) const {
  return scaler.invert_y(forward(net, scaler.apply_x(X)));
}

std::vector<Eigen::MatrixXd> Surrogate::predict_grad(const Eigen::MatrixXd& X) const {
  auto twin = twin_forward(net, scaler.apply_x(X));
  for (int o = 0; o < net.n_out(); ++o) {
    auto& d = twin.dydx[static_cast<std::size_t>(o)];
    for (Eigen::Index j = 0; j < d.cols(); ++j) d.col(j) *= scaler.scale_y(o) / scaler.scale_x(j);
  }
  return std::move(twin.dydx);
}

void Surrogate::save(const std::string& file) const {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + file + "'");
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kFormatVersion);
  binio::put_string(os, std::string(graph::to_string(net.act)));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(net.sizes.size()));
  for (int s : net.sizes) put<std::int32_t>(os, s);
  put_vec(os, scaler.shift_x.data(), scaler.shift_x.size());
  put_vec(os, scaler.scale_x.data(), scaler.scale_x.size());
  put_vec(os, scaler.shift_y.data(), scaler.shift_y.size());
  put_vec(os, scaler.scale_y.data(), scaler.scale_y.size());
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    put_vec(os, net.W[l].data(), net.W[l].size());
    put_vec(os, net.b[l].data(), net.b[l].size());
  }
  put<std::uint64_t>(os, seed);
  put<std::uint64_t>(os, n_samples);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(loss_history.size()));
  put_vec(os, loss_history.data(), static_cast<Eigen::Index>(loss_history.size()));
}

Surrogate Surrogate::load(const std::string& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + file + "'");
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error("'" + file + "' is not a surrogate file");
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kFormatVersion) {
    throw std::runtime_error("surrogate file version " + std::to_string(version) + " does not match " +
                             std::to_string(kFormatVersion));
  }
  Surrogate s;
  const auto act = graph::parse_activation(binio::get_string(is));
  const auto n_sizes = get<std::uint32_t>(is);
  if (n_sizes < 2 || n_sizes > 64) throw std::runtime_error("surrogate file has an invalid layer count");
  std::vector<int> sizes(n_sizes);
  for (auto& v : sizes) v = get<std::int32_t>(is);
  s.net = MLPParams::zeros(sizes, act);
  s.scaler = Scaler::identity(s.net.n_in(), s.net.n_out());
  get_vec(is, s.scaler.shift_x.data(), s.scaler.shift_x.size());
  get_vec(is, s.scaler.scale_x.data(), s.scaler.scale_x.size());
  get_vec(is, s.scaler.shift_y.data(), s.scaler.shift_y.size());
  get_vec(is, s.scaler.scale_y.data(), s.scaler.scale_y.size());
  for (std::size_t l = 0; l < s.net.n_layers(); ++l) {
    get_vec(is, s.net.W[l].data(), s.net.W[l].size());
    get_vec(is, s.net.b[l].data(), s.net.b[l].size());
  }
  s.seed = get<std::uint64_t>(is);
  s.n_samples = get<std::uint64_t>(is);
  s.loss_history.resize(get<std::uint32_t>(is));
  get_vec(is, s.loss_history.data(), static_cast<Eigen::Index>(s.loss_history.size()));
  return s;
}

Eigen::MatrixXd ensemble_predict(const std::vector<const Surrogate*>& members, const Eigen::MatrixXd& X) {
  if (members.empty()) throw std::invalid_argument("ensemble has no members");
  Eigen::MatrixXd sum = members.front()->predict(X);
  for (std::size_t i = 1; i < members.size(); ++i) {
    if (members[i]->net.n_in() != members[0]->net.n_in() || members[i]->net.n_out() != members[0]->net.n_out()) {
      throw std::invalid_argument("ensemble members have different input/output sizes");
    }
    sum += members[i]->predict(X);
  }
  return sum / static_cast<double>(members.size());
}

std::vector<Eigen::MatrixXd> ensemble_grad(const std::vector<const Surrogate*>& members, const Eigen::MatrixXd& X) {
  if (members.empty()) throw std::invalid_argument("ensemble has no members");
  auto sum = members.front()->predict_grad(X);
  for (std::size_t i = 1; i < members.size(); ++i) {
    auto g = members[i]->predict_grad(X);
    for (std::size_t o = 0; o < sum.size(); ++o) sum[o] += g[o];
  }
  for (auto& m : sum) m /= static_cast<double>(members.size());
  return sum;
}

}  // namespace pdml::surrogate
