#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pdml::sampling {

enum class SampleMode { Uniform, Adaptive };

struct ParamRange {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  SampleMode mode = SampleMode::Uniform;
};

struct ParamDomain {
  std::vector<ParamRange> params;

  [[nodiscard]] std::size_t dims() const { return params.size(); }
  [[nodiscard]] std::size_t index(const std::string& name) const;
  /// Throws std::invalid_argument unless every interval has lo < hi.
  void check() const;
};

/// Smooth positive density on [lo, hi] proportional to 1 / E[|Y| | b],
/// tabulated piecewise-linearly so that it integrates to exactly one and its
/// CDF can be inverted in closed form.
class AdaptiveDensity {
 public:
  AdaptiveDensity() = default;

  /// Bins `b` into n_bins equal-width bins, fits a natural cubic spline to
  /// 1/mean|y| at bin centers, floors it at floor_ratio * max and normalizes.
  static AdaptiveDensity fit(const std::vector<double>& b, const std::vector<double>& y, double lo, double hi,
                             std::size_t n_bins = 20, double floor_ratio = 1e-3, std::size_t table_size = 4096);

  [[nodiscard]] double pdf(double x) const;
  [[nodiscard]] double cdf(double x) const;
  [[nodiscard]] double inverse_cdf(double u) const;
  /// Trapezoid integral of the table (one up to rounding).
  [[nodiscard]] double integral() const;

  [[nodiscard]] double lo() const { return xs_.front(); }
  [[nodiscard]] double hi() const { return xs_.back(); }
  [[nodiscard]] const std::vector<double>& bin_centers() const { return centers_; }
  [[nodiscard]] const std::vector<double>& bin_means() const { return means_; }

 private:
  std::vector<double> xs_, ps_, cum_;
  std::vector<double> centers_, means_;
};

/// n x dims matrix of independent uniform draws; modes are ignored.
[[nodiscard]] Eigen::MatrixXd sample_uniform(const ParamDomain& domain, std::size_t n, std::uint64_t seed);

/// As sample_uniform, but adaptive coordinates are drawn by inverse CDF from
/// their fitted densities. Uses the same uniform stream, so a domain without
/// adaptive coordinates reproduces sample_uniform exactly.
[[nodiscard]] Eigen::MatrixXd sample_adaptive(const ParamDomain& domain,
                                              const std::map<std::string, AdaptiveDensity>& densities, std::size_t n,
                                              std::uint64_t seed);

/// Fits the density of parameter `name` from samples X (columns in domain
/// order) and payoffs Y.
[[nodiscard]] AdaptiveDensity fit_adaptive_density(const ParamDomain& domain, const Eigen::MatrixXd& X,
                                                   const Eigen::VectorXd& Y, const std::string& name,
                                                   std::size_t n_bins = 20);

}  // namespace pdml::sampling
