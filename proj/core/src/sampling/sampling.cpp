#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "pdml/sampling/sampling.h"
#include "pdml/sampling/spline.h"

namespace pdml::sampling {

std::size_t ParamDomain::index(const std::string& name) const {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name == name) return i;
  }
  throw std::out_of_range("domain has no parameter '" + name + "'");
}

void ParamDomain::check() const {
  if (params.empty()) throw std::invalid_argument("parameter domain is empty");
  for (const auto& p : params) {
    if (!(p.lo < p.hi)) throw std::invalid_argument("parameter '" + p.name + "' needs lo < hi");
  }
}

AdaptiveDensity AdaptiveDensity::fit(const std::vector<double>& b, const std::vector<double>& y, double lo, double hi,
                                     std::size_t n_bins, double floor_ratio, std::size_t table_size) {
  if (!(lo < hi)) throw std::invalid_argument("adaptive density needs lo < hi");
  if (n_bins < 2) throw std::invalid_argument("adaptive density needs at least two bins");
  if (b.size() != y.size()) throw std::invalid_argument("adaptive density needs matching samples");
  if (b.size() < 10 * n_bins) {
    throw std::invalid_argument("adaptive density needs at least " + std::to_string(10 * n_bins) + " samples");
  }
  std::vector<double> sum(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i] < lo || b[i] > hi) continue;
    const auto k = std::min(n_bins - 1, static_cast<std::size_t>((b[i] - lo) / width));
    sum[k] += std::abs(y[i]);
    ++count[k];
  }
  AdaptiveDensity d;
  double total = 0.0;
  for (std::size_t k = 0; k < n_bins; ++k) {
    if (count[k] == 0) {
      throw std::invalid_argument("bin " + std::to_string(k) + " has no samples; use fewer bins");
    }
    d.centers_.push_back(lo + (static_cast<double>(k) + 0.5) * width);
    d.means_.push_back(sum[k] / static_cast<double>(count[k]));
    total += sum[k];
  }
  if (!(total > 0)) throw std::invalid_argument("all payoff magnitudes are zero");
  // Bins with zero mean magnitude get the largest finite inverse.
  double max_inv = 0.0;
  for (double m : d.means_) {
    if (m > 0) max_inv = std::max(max_inv, 1.0 / m);
  }
  std::vector<double> inv;
  for (double m : d.means_) inv.push_back(m > 0 ? 1.0 / m : max_inv);
  const NaturalCubicSpline spline(d.centers_, inv);

  d.xs_.resize(table_size + 1);
  d.ps_.resize(table_size + 1);
  double pmax = 0.0;
  for (std::size_t i = 0; i <= table_size; ++i) {
    d.xs_[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(table_size);
    d.ps_[i] = spline(d.xs_[i]);
    pmax = std::max(pmax, d.ps_[i]);
  }
  d.xs_.back() = hi;
  const double floor = floor_ratio * pmax;
  for (auto& p : d.ps_) p = std::max(p, floor);
  d.cum_.assign(table_size + 1, 0.0);
  for (std::size_t i = 1; i <= table_size; ++i) {
    d.cum_[i] = d.cum_[i - 1] + 0.5 * (d.ps_[i - 1] + d.ps_[i]) * (d.xs_[i] - d.xs_[i - 1]);
  }
  const double z = d.cum_.back();
  for (auto& p : d.ps_) p /= z;
  for (auto& c : d.cum_) c /= z;
  d.cum_.back() = 1.0;
  return d;
}

double AdaptiveDensity::pdf(double x) const {
  if (x < xs_.front() || x > xs_.back()) return 0.0;
  auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t i = std::min(static_cast<std::size_t>(it - xs_.begin()), xs_.size() - 1) - 1;
  const double w = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
  return ps_[i] + w * (ps_[i + 1] - ps_[i]);
}

double AdaptiveDensity::cdf(double x) const {
  if (x <= xs_.front()) return 0.0;
  if (x >= xs_.back()) return 1.0;
  auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
  const double dx = x - xs_[i];
  const double slope = (ps_[i + 1] - ps_[i]) / (xs_[i + 1] - xs_[i]);
  return cum_[i] + ps_[i] * dx + 0.5 * slope * dx * dx;
}

double AdaptiveDensity::inverse_cdf(double u) const {
  if (u <= 0) return xs_.front();
  if (u >= 1) return xs_.back();
  auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
  const std::size_t i = std::min(static_cast<std::size_t>(it - cum_.begin()), cum_.size() - 1) - 1;
  const double r = u - cum_[i];
  const double h = xs_[i + 1] - xs_[i];
  const double slope = (ps_[i + 1] - ps_[i]) / h;
  double dx;
  if (std::abs(slope) * h < 1e-12 * ps_[i]) {
    dx = r / ps_[i];
  } else {
    // Solve p_i dx + slope dx^2 / 2 = r with the cancellation-free root.
    dx = 2.0 * r / (ps_[i] + std::sqrt(std::max(0.0, ps_[i] * ps_[i] + 2.0 * slope * r)));
  }
  return std::clamp(xs_[i] + dx, xs_[i], xs_[i + 1]);
}

double AdaptiveDensity::integral() const {
  double s = 0.0;
  for (std::size_t i = 1; i < xs_.size(); ++i) s += 0.5 * (ps_[i - 1] + ps_[i]) * (xs_[i] - xs_[i - 1]);
  return s;
}

namespace {

double unit(std::mt19937_64& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

}  // namespace

Eigen::MatrixXd sample_uniform(const ParamDomain& domain, std::size_t n, std::uint64_t seed) {
  ParamDomain flat = domain;
  for (auto& p : flat.params) p.mode = SampleMode::Uniform;
  return sample_adaptive(flat, {}, n, seed);
}

Eigen::MatrixXd sample_adaptive(const ParamDomain& domain, const std::map<std::string, AdaptiveDensity>& densities,
                                std::size_t n, std::uint64_t seed) {
  domain.check();
  if (n == 0) throw std::invalid_argument("sample count must be positive");
  std::vector<const AdaptiveDensity*> dens(domain.dims(), nullptr);
  for (std::size_t j = 0; j < domain.dims(); ++j) {
    const auto& p = domain.params[j];
    if (p.mode != SampleMode::Adaptive) continue;
    auto it = densities.find(p.name);
    if (it == densities.end()) throw std::invalid_argument("adaptive parameter '" + p.name + "' has no fitted density");
    dens[j] = &it->second;
  }
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(domain.dims()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < domain.dims(); ++j) {
      const double u = unit(rng);
      const auto& p = domain.params[j];
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          dens[j] ? dens[j]->inverse_cdf(u) : std::min(p.lo + (p.hi - p.lo) * u, p.hi);
    }
  }
  return X;
}

AdaptiveDensity fit_adaptive_density(const ParamDomain& domain, const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                                     const std::string& name, std::size_t n_bins) {
  const std::size_t j = domain.index(name);
  if (X.rows() != Y.size()) throw std::invalid_argument("X and Y have different sample counts");
  std::vector<double> b(static_cast<std::size_t>(X.rows())), y(static_cast<std::size_t>(Y.size()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    b[static_cast<std::size_t>(i)] = X(i, static_cast<Eigen::Index>(j));
    y[static_cast<std::size_t>(i)] = Y(i);
  }
  return AdaptiveDensity::fit(b, y, domain.params[j].lo, domain.params[j].hi, n_bins);
}

}  // namespace pdml::sampling
