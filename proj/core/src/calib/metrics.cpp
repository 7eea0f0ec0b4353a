#include <cmath>
#include <stdexcept>

#include "pdml/calib/metrics.h"

namespace pdml::calib {

void CalibTargets::check() const {
  if (quotes.empty()) throw std::invalid_argument("calibration needs at least one target");
  if (!(T1 > 0 && T2 > T1)) throw std::invalid_argument("target maturity needs 0 < T1 < T2");
  for (const auto& q : quotes) {
    if (!std::isfinite(q.strike) || !std::isfinite(q.price) || !std::isfinite(q.weight) || q.weight < 0) {
      throw std::invalid_argument("calibration targets must be finite with nonnegative weights");
    }
  }
}

std::vector<double> CalibTargets::strikes() const {
  std::vector<double> k;
  for (const auto& q : quotes) k.push_back(q.strike);
  return k;
}

Metrics metrics(const std::vector<double>& surrogate_prices, const std::vector<double>& mc_prices,
                const std::vector<double>& market_prices) {
  if (surrogate_prices.size() != mc_prices.size() || mc_prices.size() != market_prices.size()) {
    throw std::invalid_argument("metrics need price vectors on the same strike grid");
  }
  Metrics m;
  for (std::size_t i = 0; i < mc_prices.size(); ++i) {
    const double e1 = surrogate_prices[i] - mc_prices[i];
    const double e2 = mc_prices[i] - market_prices[i];
    m.pdml_fit_error += e1 * e1;
    m.model_error += e2 * e2;
  }
  return m;
}

Eigen::MatrixXd surrogate_inputs(const cheyette::VolPiece& theta, const std::vector<double>& strikes) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(strikes.size()), 4);
  for (std::size_t i = 0; i < strikes.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    X(r, 0) = theta.a;
    X(r, 1) = theta.b;
    X(r, 2) = theta.eta;
    X(r, 3) = strikes[i];
  }
  return X;
}

Metrics metrics(const std::vector<const surrogate::Surrogate*>& net, const cheyette::VolPiece& theta,
                const CalibTargets& targets, const std::vector<cheyette::CapletQuote>& mc_reference) {
  targets.check();
  if (mc_reference.size() != targets.quotes.size()) {
    throw std::invalid_argument("MC reference and targets have different strike grids");
  }
  std::vector<double> mc, mkt;
  for (std::size_t i = 0; i < mc_reference.size(); ++i) {
    if (std::abs(mc_reference[i].strike - targets.quotes[i].strike) > 1e-12) {
      throw std::invalid_argument("MC reference and targets have different strike grids");
    }
    mc.push_back(mc_reference[i].price);
    mkt.push_back(targets.quotes[i].price);
  }
  const Eigen::MatrixXd pred = surrogate::ensemble_predict(net, surrogate_inputs(theta, targets.strikes()));
  std::vector<double> sur(pred.col(0).data(), pred.col(0).data() + pred.rows());
  return metrics(sur, mc, mkt);
}

}  // namespace pdml::calib
