#pragma once

#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

namespace pdml::sim {

class CorrelationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lower Cholesky factor of a correlation matrix; throws CorrelationError when
/// it is not symmetric positive definite.
[[nodiscard]] Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& sigma);

/// Increments sqrt(dt) * L * xi for paths [first_path, first_path + n), one
/// row per path, drawn from the simulator's per-path streams with noise index
/// `step * k + j` for Brownian j.
[[nodiscard]] Eigen::MatrixXd correlated_increments(const Eigen::MatrixXd& sigma, double dt, std::size_t n,
                                                    std::uint64_t seed, std::size_t step = 0,
                                                    std::uint64_t first_path = 0);

}  // namespace pdml::sim
