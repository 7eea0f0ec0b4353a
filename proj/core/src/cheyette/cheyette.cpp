#include <cmath>
#include <stdexcept>

#include "pdml/cheyette/cheyette.h"

namespace pdml::cheyette {

double h(double delta, double kappa) { return std::exp(-kappa * delta); }

double G(double delta, double kappa) {
  if (std::abs(kappa * delta) < 1e-10) return delta * (1.0 - 0.5 * kappa * delta);
  return -std::expm1(-kappa * delta) / kappa;
}

CapletCoeffs caplet_coeffs(const CapletSpec& spec, const CurveSet& curves, double kappa) {
  if (!(spec.T1 > 0) || !(spec.T2 > spec.T1)) throw std::invalid_argument("caplet needs 0 < T1 < T2");
  if (spec.T2 > curves.forecast.max_time() || spec.T2 > curves.discount.max_time()) {
    throw std::invalid_argument("caplet payment date lies beyond the curve pillars");
  }
  CapletCoeffs c;
  c.pF = curves.forecast.df(spec.T1) / curves.forecast.df(spec.T2);
  c.cx = G(spec.T2 - spec.T1, kappa);
  c.cy = 0.5 * c.cx * c.cx;
  c.khat = 1.0 + spec.strike * spec.delta();
  return c;
}

double discount_factor(double t, double T, double x, double y, const Curve& curve, double kappa) {
  if (T < t) throw std::invalid_argument("discount_factor needs T >= t");
  const double g = G(T - t, kappa);
  return curve.df(T) / curve.df(t) * std::exp(-g * x - 0.5 * g * g * y);
}

double benchmark_forward(double t, double x, double y, const Curve& forecast, double kappa, double delta) {
  return forecast.inst_forward(t + delta) + h(delta, kappa) * (x + G(delta, kappa) * y);
}

std::string emit_script(std::size_t n_strikes) {
  if (n_strikes == 0) throw std::invalid_argument("caplet script needs at least one strike");
  std::string s =
      "# function definition\n"
      "g(x) = (1/mr)*(oneslike(x)-exp(-mr*x))\n"
      "\n"
      "# system\n"
      "d_ratevariance=vartheta*(1.0-positivepart(ratevariance))*d_t+\\\n"
      "               volofvar*ratevolatility*d_Z\n"
      "ratevolatility=sqrt(positivepart(ratevariance))\n"
      "d_ratex = (ratey-mr*ratex-g(measT-t)*ratevariance*volterm*volterm)*d_t+\\\n"
      "          ratevolatility*volterm*d_W\n"
      "d_ratey = (ratevariance*volterm*volterm-2.0*mr*ratey)*d_t\n"
      "deltafwd = initfwd + hkd*(ratex+gkd*ratey)\n"
      "volterm = hkd*(volaterm*deltafwd+volbterm)\n"
      "\n"
      "# initial values\n"
      "init: ratevariance = ones([batchsize])\n"
      "init: ratex=zeros([batchsize])\n"
      "init: ratey=zeros([batchsize])\n"
      "\n"
      "# payoff\n";
  for (std::size_t i = 0; i < n_strikes; ++i) {
    const std::string suffix = n_strikes == 1 ? "" : std::to_string(i);
    s += "maturity: caplet" + suffix + " pays positivepart(pf*exp(cx*ratex[fixingtime]+\\\n"
         "                                          cy*ratey[fixingtime])-khat" + suffix + ") \\\n"
         "                 nodiscount\n";
  }
  return s;
}

std::vector<std::string> script_parameters(std::size_t n_strikes) {
  std::vector<std::string> names{"mr",  "vartheta", "volofvar", "measT", "initfwd",    "hkd",      "gkd",
                                 "volaterm", "volbterm", "pf", "cx", "cy", "fixingtime", "maturity"};
  if (n_strikes == 1) {
    names.push_back("khat");
  } else {
    for (std::size_t i = 0; i < n_strikes; ++i) names.push_back("khat" + std::to_string(i));
  }
  return names;
}

sim::ParamSet caplet_bindings(const CheyetteParams& p, const CapletSpec& spec, const CurveSet& curves,
                              const std::vector<double>& strikes, const sim::TimeGrid& grid) {
  if (strikes.empty()) throw std::invalid_argument("caplet bindings need at least one strike");
  const CapletCoeffs c = caplet_coeffs(spec, curves, p.kappa);
  sim::ParamSet ps;
  ps.set("mr", p.kappa);
  ps.set("vartheta", p.theta);
  ps.set("volofvar", p.eta);
  ps.set("measT", spec.T2);
  ps.set("hkd", h(p.delta, p.kappa));
  ps.set("gkd", G(p.delta, p.kappa));
  ps.set("volaterm", p.a);
  ps.set("volbterm", p.b);
  ps.set("pf", c.pF);
  ps.set("cx", c.cx);
  ps.set("cy", c.cy);
  ps.set("fixingtime", spec.T1);
  ps.set("maturity", spec.T1);
  for (std::size_t i = 0; i < strikes.size(); ++i) {
    const std::string name = strikes.size() == 1 ? "khat" : "khat" + std::to_string(i);
    ps.set(name, 1.0 + strikes[i] * spec.delta());
  }
  std::vector<double> fwd;
  fwd.reserve(grid.times().size());
  for (double t : grid.times()) fwd.push_back(curves.forecast.inst_forward(t + p.delta));
  ps.set_ladder("initfwd", grid.times(), fwd);
  return ps;
}

void apply_schedule(sim::ParamSet& ps, const VolSchedule& schedule) {
  if (schedule.empty()) return;
  std::vector<sim::ParamPiece> a, b, eta;
  for (const auto& piece : schedule) {
    a.push_back({piece.start, {piece.a}, false});
    b.push_back({piece.start, {piece.b}, false});
    eta.push_back({piece.start, {piece.eta}, false});
  }
  ps.set_schedule("volaterm", std::move(a));
  ps.set_schedule("volbterm", std::move(b));
  ps.set_schedule("volofvar", std::move(eta));
}

double deterministic_vol_caplet(const CheyetteParams& p, const CapletSpec& spec, const CurveSet& curves) {
  if (p.a != 0.0 || p.eta > 0.0) throw std::invalid_argument("closed form needs a = 0 and eta = 0");
  const CapletCoeffs c = caplet_coeffs(spec, curves, p.kappa);
  const double sig = h(p.delta, p.kappa) * p.b;
  const double y1 = sig * sig * G(spec.T1, 2.0 * p.kappa);
  const double s = c.cx * std::sqrt(y1);
  if (s <= 0.0) return spec.notional * std::max(c.pF - c.khat, 0.0);
  const double d1 = (std::log(c.pF / c.khat) + 0.5 * s * s) / s;
  const double d2 = d1 - s;
  auto Phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  return spec.notional * (c.pF * Phi(d1) - c.khat * Phi(d2));
}

}  // namespace pdml::cheyette
