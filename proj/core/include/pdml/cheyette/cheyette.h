#pragma once

#include <string>
#include <vector>

#include "pdml/cheyette/curves.h"
#include "pdml/sim/bindings.h"
#include "pdml/sim/time_grid.h"

namespace pdml::cheyette {

/// One-factor Cheyette model with stochastic volatility factor z:
/// sigma_r = sqrt(z) h(delta) (a f(t,t+delta) + b), dz = theta(1 - z)dt + eta sqrt(z) dZ.
struct CheyetteParams {
  double kappa = 0.03;
  double a = 0.0;
  double b = 0.0;
  double eta = 0.0;
  double theta = 0.2;
  double z0 = 1.0;
  double delta = 0.25;  // benchmark tenor
};

/// Piecewise-constant (a, b, eta), each piece active from `start`.
struct VolPiece {
  double start = 0.0;
  double a = 0.0;
  double b = 0.0;
  double eta = 0.0;
};
using VolSchedule = std::vector<VolPiece>;

struct CapletSpec {
  double T1 = 1.0;
  double T2 = 1.25;
  double strike = 0.02;
  double notional = 1.0;

  [[nodiscard]] double delta() const { return T2 - T1; }
};

struct CapletCoeffs {
  double pF = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double khat = 1.0;
};

/// e^{-kappa delta}.
[[nodiscard]] double h(double delta, double kappa);
/// (1 - e^{-kappa delta}) / kappa, with limit delta as kappa -> 0.
[[nodiscard]] double G(double delta, double kappa);

/// Coefficients of the undiscounted T2-forward-measure payoff
/// N (pF exp(cx x + cy y) - khat)^+ observed at T1.
[[nodiscard]] CapletCoeffs caplet_coeffs(const CapletSpec& spec, const CurveSet& curves, double kappa);

/// P(t,T) = P(0,T)/P(0,t) exp(-G(T-t) x - G(T-t)^2 y / 2).
[[nodiscard]] double discount_factor(double t, double T, double x, double y, const Curve& curve, double kappa);

/// f(t, t+delta) = f(0, t+delta) + h(delta)(x + G(delta) y).
[[nodiscard]] double benchmark_forward(double t, double x, double y, const Curve& forecast, double kappa, double delta);

/// Caplet script for the T2-forward measure. With n_strikes > 1 the payoffs
/// are caplet0.. with strikes khat0..; otherwise one payoff `caplet` with `khat`.
[[nodiscard]] std::string emit_script(std::size_t n_strikes = 1);

/// Names the emitted script expects from the host.
[[nodiscard]] std::vector<std::string> script_parameters(std::size_t n_strikes = 1);

/// Scalar bindings for emit_script(strikes.size()) on `grid`, including the
/// initfwd ladder f(0, t_i + delta).
[[nodiscard]] sim::ParamSet caplet_bindings(const CheyetteParams& params, const CapletSpec& spec,
                                            const CurveSet& curves, const std::vector<double>& strikes,
                                            const sim::TimeGrid& grid);

/// Replaces volaterm/volbterm/volofvar with the schedule's pieces.
void apply_schedule(sim::ParamSet& ps, const VolSchedule& schedule);

/// Closed-form undiscounted price with a = 0 and eta = 0: x(T1) is Gaussian
/// with variance y(T1) = s^2 (1 - e^{-2 kappa T1}) / (2 kappa), s = h(delta) b,
/// and T2-forward mean -G(T2 - T1) y(T1), giving a Black formula on pF vs khat.
[[nodiscard]] double deterministic_vol_caplet(const CheyetteParams& params, const CapletSpec& spec,
                                              const CurveSet& curves);

}  // namespace pdml::cheyette
