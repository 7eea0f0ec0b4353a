#include "pdml/sim/correlation.h"
#include "pdml/util/rng.h"

namespace pdml::sim {

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols()) throw CorrelationError("correlation matrix must be square");
  if (!sigma.isApprox(sigma.transpose(), 1e-12)) throw CorrelationError("correlation matrix must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw CorrelationError("correlation matrix is not positive definite");
  return llt.matrixL();
}

Eigen::MatrixXd correlated_increments(const Eigen::MatrixXd& sigma, double dt, std::size_t n, std::uint64_t seed,
                                      std::size_t step, std::uint64_t first_path) {
  const Eigen::MatrixXd L = cholesky_lower(sigma);
  const auto k = static_cast<std::size_t>(sigma.rows());
  Eigen::MatrixXd xi(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (std::size_t p = 0; p < n; ++p) {
    const PathRng rng(seed, first_path + p);
    for (std::size_t j = 0; j < k; ++j) xi(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(j)) = rng.normal(step * k + j);
  }
  return std::sqrt(dt) * xi * L.transpose();
}

}  // namespace pdml::sim
