#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "pdml/script/parser.h"
#include "pdml/script/validate.h"
#include "pdml/sim/correlation.h"
#include "pdml/sim/simulator.h"
#include "pdml/util/rng.h"

using namespace pdml;
using Names = std::set<std::string, std::less<>>;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(PDML_TEST_DATA) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

script::ValidatedScript compile(const std::string& src, const sim::ParamSet& ps) {
  const auto names = ps.names();
  return script::validate_or_throw(script::parse_script(src), Names(names.begin(), names.end()));
}

double ncdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

sim::ParamSet heston_params(double volofvol) {
  sim::ParamSet ps;
  ps.set("shortrate", 0.03);
  ps.set("kappa", 1.5);
  ps.set("longtermvariance", 0.04);
  ps.set("volofvol", volofvol);
  ps.set("rho", -0.5);
  ps.set("initiallogspot", std::log(100.0));
  ps.set("initialvariance", 0.04);
  ps.set("maturity", 1.0);
  ps.set("strike", 105.0);
  return ps;
}

}  // namespace

TEST(PathRng, DeterministicAndIndependentOfOrder) {
  const PathRng a(5, 17), b(5, 17), c(5, 18);
  EXPECT_EQ(a.normal(3), b.normal(3));
  EXPECT_NE(a.normal(3), c.normal(3));
  double m = 0, v = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = PathRng(9, static_cast<std::uint64_t>(i)).normal(0);
    m += z;
    v += z * z;
  }
  m /= n;
  v = v / n - m * m;
  EXPECT_LT(std::abs(m), 4.0 / std::sqrt(n));
  EXPECT_NEAR(v, 1.0, 0.015);
}

TEST(TimeGrid, BuildAndSnap) {
  const auto g = sim::TimeGrid::build({1.0, 0.25}, 0.1);
  EXPECT_EQ(g.times().front(), 0.0);
  EXPECT_EQ(g.times().back(), 1.0);
  EXPECT_TRUE(g.snap(0.25).has_value());
  for (std::size_t i = 0; i < g.n_steps(); ++i) EXPECT_LE(g.dt(i), 0.1 + 1e-12);
  EXPECT_FALSE(g.snap(0.33).has_value());
  EXPECT_THROW((void)g.snap_or_throw(0.33), std::out_of_range);
  EXPECT_THROW(sim::TimeGrid({0.0, 0.5, 0.5}), std::invalid_argument);
  EXPECT_EQ(sim::TimeGrid::uniform(1.0, 4).n_steps(), 4u);
}

TEST(Correlation, CholeskyClosedForm) {
  Eigen::MatrixXd s(2, 2);
  s << 1, 0.6, 0.6, 1;
  const auto L = sim::cholesky_lower(s);
  EXPECT_NEAR(L(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(L(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(L(1, 0), 0.6, 1e-15);
  EXPECT_NEAR(L(1, 1), 0.8, 1e-15);
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_TRUE(sim::cholesky_lower(id).isIdentity());
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 1.2, 1.2, 1;
  EXPECT_THROW((void)sim::cholesky_lower(bad), sim::CorrelationError);
}

TEST(Correlation, SampleCorrelationOfIncrements) {
  Eigen::MatrixXd s(2, 2);
  s << 1, 0.6, 0.6, 1;
  const auto dw = sim::correlated_increments(s, 0.25, 1000000, 11);
  const Eigen::VectorXd a = dw.col(0), b = dw.col(1);
  const double ma = a.mean(), mb = b.mean();
  const double cov = ((a.array() - ma) * (b.array() - mb)).mean();
  const double rho = cov / std::sqrt((a.array() - ma).square().mean() * (b.array() - mb).square().mean());
  EXPECT_GE(rho, 0.597);
  EXPECT_LE(rho, 0.603);
  EXPECT_NEAR((a.array() - ma).square().mean(), 0.25, 0.0015);
}

TEST(Simulator, OdeIntegratesExactly) {
  sim::ParamSet ps;
  ps.set("maturity", 1.0);
  const auto vs = compile("d_x = 1*d_t\ninit: x = 0\nmaturity: p pays x[t] nodiscount\n", ps);
  const sim::Simulator s(vs, ps, sim::TimeGrid({0.0, 1.0}));
  sim::SimConfig c;
  c.batch_size = 3;
  const auto out = s.run(c);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(out.y(i, 0), 1.0);
}

TEST(Simulator, OneEulerStepWithForcedNoise) {
  sim::ParamSet ps;
  ps.set("sigma", 0.3);
  ps.set("maturity", 0.5);
  const auto vs = compile("d_x = sigma*d_W\ninit: x = 2\nmaturity: p pays x[t] nodiscount\n", ps);
  const sim::Simulator s(vs, ps, sim::TimeGrid({0.0, 0.5}));
  sim::SimConfig c;
  c.batch_size = 2;
  c.noise_override = [](std::uint64_t path, std::uint64_t) { return path == 0 ? 0.7 : -1.1; };
  const auto out = s.run(c);
  EXPECT_DOUBLE_EQ(out.y(0, 0), 2.0 + 0.3 * std::sqrt(0.5) * 0.7);
  EXPECT_DOUBLE_EQ(out.y(1, 0), 2.0 + 0.3 * std::sqrt(0.5) * -1.1);
}

TEST(Simulator, StockintIsRunningSum) {
  sim::ParamSet ps;
  for (auto [k, v] : std::vector<std::pair<const char*, double>>{{"shortrate", 0.02}, {"kappa", 1.0},
                                                                   {"longtermvariance", 0.04}, {"volofvol", 0.3},
                                                                   {"rho", -0.3}, {"initialspot", 100.0},
                                                                   {"initialvariance", 0.04}, {"maturity", 1.0},
                                                                   {"strike", 100.0}, {"asianstrike", 0.0},
                                                                   {"barrier", 1e9}}) {
    ps.set(k, v);
  }
  const auto vs = compile(slurp("heston_exotics.pdml"), ps);
  const sim::TimeGrid grid({0.0, 0.25, 0.5, 0.75, 1.0});
  const sim::Simulator s(vs, ps, grid);
  sim::SimConfig c;
  c.batch_size = 4;
  c.seed = 3;
  c.compute_dy = false;
  const auto out = s.run(c);
  // Hand-rolled Euler full truncation with the same noise.
  for (std::size_t p = 0; p < 4; ++p) {
    const PathRng rng(3, p);
    double S = 100, v = 0.04, I = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      const double dt = 0.25;
      const double z = rng.normal(2 * i), w = rng.normal(2 * i + 1);
      const double dZ = std::sqrt(dt) * z;
      const double dW = std::sqrt(dt) * (-0.3 * z + std::sqrt(1 - 0.09) * w);
      const double vol = std::sqrt(std::max(v, 0.0));
      const double S1 = S + S * (0.02 * dt + vol * dZ);
      I += S * dt;
      v = v + 1.0 * (0.04 - std::max(v, 0.0)) * dt + 0.3 * vol * dW;
      S = S1;
    }
    EXPECT_NEAR(out.y(p, 0), std::exp(-0.02) * I, 1e-10 * I) << p;
  }
}

TEST(Simulator, HestonZeroVolOfVolMatchesBlackScholes) {
  const auto ps = heston_params(0.0);
  const auto vs = compile(slurp("heston_call.pdml"), ps);
  sim::SimConfig c;
  c.batch_size = 1 << 18;
  c.seed = 42;
  const auto out = sim::simulate(vs, ps, 1.0 / 16, c, {"strike"});
  const double S0 = 100, K = 105, r = 0.03, T = 1, s = 0.2;
  const double d1 = (std::log(S0 / K) + (r + 0.5 * s * s) * T) / s, d2 = d1 - s;
  const double bs = S0 * ncdf(d1) - K * std::exp(-r * T) * ncdf(d2);
  const auto e = out.estimate(0);
  EXPECT_LT(std::abs(e.mean - bs), 3 * e.stderr_);
  const auto dk = out.dy_estimate(0, 0);
  EXPECT_LT(std::abs(dk.mean + std::exp(-r * T) * ncdf(d2)), 3 * dk.stderr_);
}

TEST(Simulator, StrikeDerivativeMatchesBumpAndRevalue) {
  const auto ps = heston_params(0.4);
  const auto vs = compile(slurp("heston_call.pdml"), ps);
  sim::SimConfig c;
  c.batch_size = 1 << 16;
  c.seed = 8;
  const auto base = sim::simulate(vs, ps, 1.0 / 16, c, {"strike", "initiallogspot", "volofvol"});
  const double h = 1e-4 * 105.0;
  auto bumped = [&](double k) {
    auto p = ps;
    p.set("strike", k);
    sim::SimConfig cc = c;
    cc.compute_dy = false;
    return sim::simulate(vs, p, 1.0 / 16, cc);
  };
  const auto up = bumped(105.0 + h), dn = bumped(105.0 - h);
  double m = 0, m2 = 0;
  const std::size_t n = c.batch_size;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (up.y(i, 0) - dn.y(i, 0)) / (2 * h) - base.dy(i, 0, 0);
    m += d;
    m2 += d * d;
  }
  m /= n;
  const double se = std::sqrt((m2 / n - m * m) / n);
  const auto dk = base.dy_estimate(0, 0);
  EXPECT_LT(std::abs(m), 3 * std::hypot(se, dk.stderr_) + 1e-12);
}

TEST(Simulator, DeterministicDerivativesMatchHandChainRule) {
  // All vols zero: x(T) = x0 exp(mu T) on an Euler grid, y = (x - k)^+.
  sim::ParamSet ps;
  ps.set("mu", 0.1);
  ps.set("x0", 2.0);
  ps.set("k", 1.0);
  ps.set("maturity", 1.0);
  const auto vs = compile("d_x = mu*x*d_t\ninit: x = x0\nmaturity: p pays positivepart(x[t]-k) nodiscount\n", ps);
  const sim::Simulator s(vs, ps, sim::TimeGrid::uniform(1.0, 4), {"mu", "x0", "k"});
  sim::SimConfig c;
  const auto out = s.run(c);
  const double g = std::pow(1.025, 4);
  EXPECT_NEAR(out.y(0, 0), 2.0 * g - 1.0, 1e-14);
  EXPECT_NEAR(out.dy(0, 0, 0), 2.0 * 4 * 0.25 * std::pow(1.025, 3), 1e-13);
  EXPECT_NEAR(out.dy(0, 0, 1), g, 1e-14);
  EXPECT_EQ(out.dy(0, 0, 2), -1.0);
}

TEST(Simulator, BitIdenticalAcrossShardsAndThreads) {
  const auto ps = heston_params(0.5);
  const auto vs = compile(slurp("heston_call.pdml"), ps);
  sim::SimConfig a;
  a.batch_size = 1000;
  a.seed = 77;
  a.shard_size = 256;
  a.threads = 1;
  sim::SimConfig b = a;
  b.shard_size = 64;
  b.threads = 3;
  const auto oa = sim::simulate(vs, ps, 1.0 / 8, a, {"strike"});
  const auto ob = sim::simulate(vs, ps, 1.0 / 8, b, {"strike"});
  EXPECT_EQ(oa.Y, ob.Y);
  EXPECT_EQ(oa.DY, ob.DY);
  // A path's noise does not depend on the batch size.
  sim::SimConfig small = a;
  small.batch_size = 10;
  const auto os = sim::simulate(vs, ps, 1.0 / 8, small, {"strike"});
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(os.y(i, 0), oa.y(i, 0));
}

TEST(Simulator, PerPathParametersAndSchedules) {
  sim::ParamSet ps;
  ps.set("maturity", 2.0);
  ps.set_schedule("mu", {{0.0, {1.0}, false}, {1.0, {3.0}, false}});
  ps.set_per_path("x0", {0.0, 10.0});
  const auto vs = compile("d_x = mu*d_t\ninit: x = x0\nmaturity: p pays x[t] nodiscount\n", ps);
  const sim::Simulator s(vs, ps, sim::TimeGrid::uniform(2.0, 8), {"mu", "x0"});
  sim::SimConfig c;
  c.batch_size = 2;
  const auto out = s.run(c);
  EXPECT_NEAR(out.y(0, 0), 4.0, 1e-14);
  EXPECT_NEAR(out.y(1, 0), 14.0, 1e-14);
  EXPECT_NEAR(out.dy(0, 0, 0), 2.0, 1e-14);
  EXPECT_EQ(out.dy(1, 0, 1), 1.0);
}

TEST(Simulator, ParameterCorrelationIsPathwise) {
  // One unit step: a = xi0, b = rho xi0 + sqrt(1 - rho^2) xi1 in either
  // Brownian order, so a b is symmetric.
  sim::ParamSet ps;
  ps.set("maturity", 1.0);
  ps.set_per_path("rho", {-0.6, 0.2, 0.7});
  const auto vs = compile("d_a = d_W\nd_b = d_Z\nd_W*d_Z = rho\ninit: a = 0\ninit: b = 0\n"
                          "maturity: p pays a[t]*b[t] nodiscount\n",
                          ps);
  const std::vector<double> xi{0.3, -1.1, 1.7, 0.4, -0.8, 2.0};
  const std::vector<double> rho{-0.6, 0.2, 0.7};
  for (std::size_t shard : {1, 3}) {
    sim::Simulator s(vs, ps, sim::TimeGrid::uniform(1.0, 1), {"rho"});
    sim::SimConfig c;
    c.batch_size = 3;
    c.shard_size = shard;
    c.noise_override = [&](std::uint64_t p, std::uint64_t k) { return xi[2 * p + k]; };
    const auto out = s.run(c);
    for (std::size_t p = 0; p < 3; ++p) {
      const double x0 = xi[2 * p], x1 = xi[2 * p + 1], r = rho[p], q = std::sqrt(1 - r * r);
      EXPECT_NEAR(out.y(p, 0), x0 * (r * x0 + q * x1), 1e-14);
      EXPECT_NEAR(out.dy(p, 0, 0), x0 * x0 - r / q * x0 * x1, 1e-13);
    }
  }
  // A shared correlation differentiated per path.
  ps.set("rho", 0.2);
  sim::Simulator s(vs, ps, sim::TimeGrid::uniform(1.0, 1), {"rho"});
  sim::SimConfig c;
  c.batch_size = 3;
  c.noise_override = [&](std::uint64_t p, std::uint64_t k) { return xi[2 * p + k]; };
  const auto out = s.run(c);
  const double q = std::sqrt(1 - 0.04);
  for (std::size_t p = 0; p < 3; ++p) {
    EXPECT_NEAR(out.dy(p, 0, 0), xi[2 * p] * xi[2 * p] - 0.2 / q * xi[2 * p] * xi[2 * p + 1], 1e-13);
  }
}

TEST(Simulator, ErrorsAreReported) {
  const auto ps = heston_params(0.2);
  const auto vs = compile(slurp("heston_call.pdml"), ps);
  sim::SimConfig c;
  c.batch_size = 0;
  EXPECT_THROW((void)sim::simulate(vs, ps, 0.1, c), sim::SimError);
  auto bad = ps;
  bad.set("rho", 1.5);
  c.batch_size = 4;
  EXPECT_THROW((void)sim::simulate(vs, bad, 0.1, c), sim::SimError);
  sim::ParamSet lp;
  lp.set("maturity", 1.0);
  lp.set_per_path("x0", {1.0, -1.0});
  const auto lv = compile("d_x = 0*d_t\ninit: x = x0\nmaturity: p pays log(x[t]) nodiscount\n", lp);
  const sim::Simulator s(lv, lp, sim::TimeGrid({0.0, 1.0}));
  sim::SimConfig cc;
  cc.batch_size = 2;
  try {
    (void)s.run(cc);
    FAIL();
  } catch (const sim::SimError& e) {
    EXPECT_NE(std::string(e.what()).find("path 1"), std::string::npos) << e.what();
  }
}

TEST(SimOutput, CsvAndBinaryRoundTrip) {
  const auto ps = heston_params(0.3);
  const auto vs = compile(slurp("heston_call.pdml"), ps);
  sim::SimConfig c;
  c.batch_size = 5;
  c.seed = 2;
  const auto out = sim::simulate(vs, ps, 0.25, c, {"strike", "rho"});
  const auto dir = std::filesystem::temp_directory_path() / "pdml_sim_test";
  std::filesystem::create_directories(dir);
  out.write_binary((dir / "o.bin").string());
  const auto back = sim::SimOutput::read_binary((dir / "o.bin").string());
  EXPECT_EQ(back.Y, out.Y);
  EXPECT_EQ(back.DY, out.DY);
  EXPECT_EQ(back.payoff_names, out.payoff_names);
  EXPECT_EQ(back.diff_names, out.diff_names);
  EXPECT_EQ(back.grid, out.grid);
  {
    std::fstream f(dir / "o.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const char v = 9;
    f.write(&v, 1);
  }
  EXPECT_THROW((void)sim::SimOutput::read_binary((dir / "o.bin").string()), std::runtime_error);
  out.write_csv((dir / "o.csv").string());
  std::ifstream in(dir / "o.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "path,payoff,Y,DY_strike,DY_rho");
}
