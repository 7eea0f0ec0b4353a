#pragma once

#include <vector>

#include "pdml/cheyette/caplet_mc.h"
#include "pdml/cheyette/cheyette.h"
#include "pdml/surrogate/surrogate.h"

namespace pdml::calib {

struct Target {
  double strike = 0.0;
  double price = 0.0;
  double weight = 1.0;
};

/// Caplet targets for one maturity [T1, T2].
struct CalibTargets {
  double T1 = 1.0;
  double T2 = 1.25;
  std::vector<Target> quotes;

  /// Throws std::invalid_argument on an empty or non-finite target set.
  void check() const;
  [[nodiscard]] std::vector<double> strikes() const;
};

struct Metrics {
  double pdml_fit_error = 0.0;
  double model_error = 0.0;

  [[nodiscard]] double max_error() const { return pdml_fit_error > model_error ? pdml_fit_error : model_error; }
};

/// sum (surrogate - mc)^2 and sum (mc - market)^2.
[[nodiscard]] Metrics metrics(const std::vector<double>& surrogate_prices, const std::vector<double>& mc_prices,
                              const std::vector<double>& market_prices);

/// Surrogate inputs are (a, b, eta, strike).
[[nodiscard]] Eigen::MatrixXd surrogate_inputs(const cheyette::VolPiece& theta, const std::vector<double>& strikes);

/// Metrics of a (possibly ensembled) surrogate at theta against an MC
/// reference priced on the same strikes as the targets.
[[nodiscard]] Metrics metrics(const std::vector<const surrogate::Surrogate*>& net, const cheyette::VolPiece& theta,
                              const CalibTargets& targets, const std::vector<cheyette::CapletQuote>& mc_reference);

}  // namespace pdml::calib
