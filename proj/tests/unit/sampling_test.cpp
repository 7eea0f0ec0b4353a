#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pdml/sampling/sampling.h"
#include "pdml/sampling/spline.h"

using namespace pdml::sampling;

namespace {

ParamDomain one(double lo, double hi, SampleMode mode = SampleMode::Uniform) { return {{{"b", lo, hi, mode}}}; }

// Samples b ~ U[lo, hi] and y = m(b) * (1 + 0.2 u) with u ~ U(-1, 1).
void magnitude_samples(double lo, double hi, std::size_t n, double (*m)(double), std::uint64_t seed,
                       std::vector<double>& b, std::vector<double>& y) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ub(lo, hi), un(-1, 1);
  b.resize(n);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    b[i] = ub(rng);
    y[i] = m(b[i]) * (1 + 0.2 * un(rng));
  }
}

double ks_uniform(std::vector<double> v, double lo, double hi) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = (v[i] - lo) / (hi - lo);
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return d;
}

}  // namespace

TEST(Spline, InterpolatesKnotsAndCubics) {
  const std::vector<double> x{0, 1, 2, 3, 4};
  std::vector<double> y;
  for (double v : x) y.push_back(2 * v - 1);
  const NaturalCubicSpline lin(x, y);
  EXPECT_NEAR(lin(2.5), 4.0, 1e-14);
  EXPECT_NEAR(lin(5.0), 9.0, 1e-14);
  EXPECT_NEAR(lin(-1.0), -3.0, 1e-14);
  const std::vector<double> yq{0, 1, 0, 1, 0};
  const NaturalCubicSpline s(x, yq);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(s(x[i]), yq[i], 1e-14);
}

TEST(Uniform, MomentsContainmentAndDeterminism) {
  const auto d = one(0, 1);
  const auto X = sample_uniform(d, 100000, 5);
  EXPECT_GE(X.mean(), 0.497);
  EXPECT_LE(X.mean(), 0.503);
  EXPECT_EQ(X, sample_uniform(d, 100000, 5));
  EXPECT_NE(X, sample_uniform(d, 100000, 6));
  const double hi = 0.3, lo = hi - 1e-12;
  const auto N = sample_uniform(one(lo, hi), 1000, 1);
  EXPECT_TRUE((N.array() >= lo).all() && (N.array() <= hi).all());
  EXPECT_THROW((void)sample_uniform(one(1, 1), 10, 1), std::invalid_argument);
  const ParamDomain two{{{"a", -1, 0, SampleMode::Uniform}, {"k", 10, 20, SampleMode::Uniform}}};
  const auto T = sample_uniform(two, 1000, 2);
  EXPECT_EQ(T.cols(), 2);
  EXPECT_TRUE((T.col(1).array() >= 10).all());
  EXPECT_EQ(two.index("k"), 1u);
  EXPECT_THROW((void)two.index("z"), std::out_of_range);
}

TEST(AdaptiveDensity, ConstantMagnitudeGivesUniform) {
  std::vector<double> b, y;
  magnitude_samples(0.008, 0.067, 100000, [](double) { return 3.0; }, 1, b, y);
  const auto d = AdaptiveDensity::fit(b, y, 0.008, 0.067, 20);
  const double u = 1 / (0.067 - 0.008);
  for (int i = 0; i <= 200; ++i) {
    const double x = 0.008 + (0.067 - 0.008) * i / 200.0;
    EXPECT_LE(std::abs(d.pdf(x) - u), 0.02 * u) << x;
  }
  EXPECT_NEAR(d.integral(), 1.0, 1e-8);
}

TEST(AdaptiveDensity, InverseMagnitude) {
  std::vector<double> b, y;
  magnitude_samples(1, 2, 100000, [](double v) { return v; }, 2, b, y);
  const auto d = AdaptiveDensity::fit(b, y, 1, 2, 20);
  EXPECT_NEAR(d.integral(), 1.0, 1e-8);
  for (double c : d.bin_centers()) {
    const double exact = 1 / (c * std::log(2.0));
    EXPECT_LE(std::abs(d.pdf(c) - exact), 0.05 * exact) << c;
  }
  double prev = -1;
  for (int i = 0; i <= 1000; ++i) {
    const double x = 1 + i / 1000.0;
    const double c = d.cdf(x);
    EXPECT_GT(c, prev);
    EXPECT_GT(d.pdf(x), 0.0);
    prev = c;
    if (i > 0 && i < 1000) EXPECT_NEAR(d.cdf(d.inverse_cdf(c)), c, 1e-12);
  }
  EXPECT_NEAR(d.cdf(2.0), 1.0, 1e-12);
}

TEST(AdaptiveDensity, Errors) {
  std::vector<double> b, y;
  magnitude_samples(0, 1, 100, [](double) { return 1.0; }, 3, b, y);
  EXPECT_THROW((void)AdaptiveDensity::fit(b, y, 0, 1, 20), std::invalid_argument);
  std::vector<double> zeros(1000, 0.0), bs(1000);
  for (std::size_t i = 0; i < bs.size(); ++i) bs[i] = (i + 0.5) / 1000.0;
  EXPECT_THROW((void)AdaptiveDensity::fit(bs, zeros, 0, 1, 20), std::invalid_argument);
  std::vector<double> clumped(1000, 0.1), ones(1000, 1.0);
  try {
    (void)AdaptiveDensity::fit(clumped, ones, 0, 1, 20);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("fewer bins"), std::string::npos);
  }
}

TEST(AdaptiveSampling, UniformOnlyDomainReproducesUniform) {
  const ParamDomain d{{{"a", 0, 1, SampleMode::Uniform}, {"b", 0, 1, SampleMode::Uniform}}};
  const auto A = sample_adaptive(d, {}, 100000, 9);
  EXPECT_EQ(A, sample_uniform(d, 100000, 9));
  std::vector<double> c(A.col(1).data(), A.col(1).data() + A.rows());
  EXPECT_LT(ks_uniform(c, 0, 1), 0.006);
}

TEST(AdaptiveSampling, InverseCdfDraws) {
  std::vector<double> b, y;
  magnitude_samples(1, 2, 100000, [](double v) { return v; }, 4, b, y);
  const auto dens = AdaptiveDensity::fit(b, y, 1, 2, 20);
  const ParamDomain d{{{"k", 0, 1, SampleMode::Uniform}, {"b", 1, 2, SampleMode::Adaptive}}};
  const auto X = sample_adaptive(d, {{"b", dens}}, 100000, 3);
  const auto col = X.col(1);
  EXPECT_TRUE((col.array() >= 1).all() && (col.array() <= 2).all());
  const double frac = (col.array() <= 1.5).cast<double>().mean();
  EXPECT_NEAR(frac, std::log(1.5) / std::log(2.0), 0.01);
  EXPECT_THROW((void)sample_adaptive(d, {}, 10, 3), std::invalid_argument);
}

TEST(AdaptiveSampling, EqualizesMagnitudeMassAcrossBins) {
  auto m = [](double v) { return std::exp(3 * v); };
  const ParamDomain d{{{"b", 0, 1, SampleMode::Adaptive}}};
  const auto pilot = sample_uniform(d, 100000, 1);
  Eigen::VectorXd Y(pilot.rows());
  for (Eigen::Index i = 0; i < pilot.rows(); ++i) Y(i) = m(pilot(i, 0));
  const auto dens = fit_adaptive_density(d, pilot, Y, "b", 20);
  const auto X = sample_adaptive(d, {{"b", dens}}, 100000, 2);
  std::vector<double> mass(20, 0.0);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    mass[std::min<std::size_t>(19, static_cast<std::size_t>(X(i, 0) * 20))] += m(X(i, 0));
  }
  double mean = 0, var = 0;
  for (double v : mass) mean += v / 20;
  for (double v : mass) var += (v - mean) * (v - mean) / 20;
  EXPECT_LT(std::sqrt(var) / mean, 0.15);
}
