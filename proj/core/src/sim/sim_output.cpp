#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "pdml/sim/sim_output.h"
#include "pdml/util/binio.h"
#include "pdml/util/csv.h"

namespace pdml::sim {

using binio::get;
using binio::get_string;
using binio::put;
using binio::put_string;

namespace {

Estimate estimate_strided(const std::vector<double>& v, std::size_t n, std::size_t stride, std::size_t offset) {
  Estimate e;
  if (n == 0) return e;
  double s = 0.0;
  for (std::size_t p = 0; p < n; ++p) s += v[p * stride + offset];
  e.mean = s / static_cast<double>(n);
  if (n < 2) return e;
  double ss = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const double d = v[p * stride + offset] - e.mean;
    ss += d * d;
  }
  e.stderr_ = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  return e;
}

constexpr char kMagic[8] = {'P', 'D', 'M', 'L', 'S', 'I', 'M', '1'};

}  // namespace

Estimate SimOutput::estimate(std::size_t payoff) const { return estimate_strided(Y, n_paths, n_payoffs(), payoff); }

Estimate SimOutput::dy_estimate(std::size_t payoff, std::size_t param) const {
  return estimate_strided(DY, n_paths, n_payoffs() * n_diff(), payoff * n_diff() + param);
}

void SimOutput::write_csv(const std::string& file) const {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot write '" + file + "'");
  os << "path,payoff,Y";
  for (const auto& d : diff_names) os << ",DY_" << d;
  os << '\n';
  const bool has_dy = DY.size() == n_paths * n_payoffs() * n_diff() && n_diff() > 0;
  for (std::size_t p = 0; p < n_paths; ++p) {
    for (std::size_t j = 0; j < n_payoffs(); ++j) {
      os << p << ',' << payoff_names[j] << ',' << csv::fmt(y(p, j));
      for (std::size_t d = 0; d < n_diff(); ++d) os << ',' << (has_dy ? csv::fmt(dy(p, j, d)) : "");
      os << '\n';
    }
  }
}

void SimOutput::write_binary(const std::string& file) const {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + file + "'");
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kBinaryVersion);
  put<std::uint64_t>(os, n_paths);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(n_payoffs()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(n_diff()));
  put<std::uint64_t>(os, seed);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(grid.size()));
  for (const auto& s : payoff_names) put_string(os, s);
  for (const auto& s : diff_names) put_string(os, s);
  for (double v : grid) put<double>(os, v);
  for (double v : Y) put<double>(os, v);
  const std::size_t n_dy = n_paths * n_payoffs() * n_diff();
  for (std::size_t i = 0; i < n_dy; ++i) put<double>(os, i < DY.size() ? DY[i] : 0.0);
}

SimOutput SimOutput::read_binary(const std::string& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + file + "'");
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error("'" + file + "' is not a simulation dump");
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kBinaryVersion) {
    throw std::runtime_error("simulation dump version " + std::to_string(version) + " is not supported");
  }
  SimOutput out;
  out.n_paths = get<std::uint64_t>(is);
  const auto n_pay = get<std::uint32_t>(is);
  const auto n_diff = get<std::uint32_t>(is);
  out.seed = get<std::uint64_t>(is);
  const auto n_grid = get<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_pay; ++i) out.payoff_names.push_back(get_string(is));
  for (std::uint32_t i = 0; i < n_diff; ++i) out.diff_names.push_back(get_string(is));
  out.grid.resize(n_grid);
  for (auto& v : out.grid) v = get<double>(is);
  out.Y.resize(out.n_paths * n_pay);
  for (auto& v : out.Y) v = get<double>(is);
  out.DY.resize(out.n_paths * n_pay * n_diff);
  for (auto& v : out.DY) v = get<double>(is);
  return out;
}

}  // namespace pdml::sim
