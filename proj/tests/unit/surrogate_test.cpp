#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "pdml/graph/graph.h"
#include "pdml/surrogate/loss.h"
#include "pdml/surrogate/mlp.h"
#include "pdml/surrogate/scaler.h"
#include "pdml/surrogate/surrogate.h"
#include "pdml/surrogate/train.h"

using namespace pdml::surrogate;
namespace graph = pdml::graph;

namespace {

Eigen::MatrixXd random_matrix(int r, int c, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

MLPParams random_net(std::vector<int> sizes, Activation act, std::uint64_t seed) {
  auto p = MLPParams::glorot(std::move(sizes), act, seed);
  for (std::size_t l = 0; l < p.b.size(); ++l) p.b[l] = random_matrix(static_cast<int>(p.b[l].size()), 1, seed + l, 0.3);
  return p;
}

// Plain loop re-implementation of the layer recursion.
std::vector<double> naive_forward(const MLPParams& p, const std::vector<double>& x) {
  std::vector<double> z = x;
  for (std::size_t l = 0; l < p.W.size(); ++l) {
    std::vector<double> next(static_cast<std::size_t>(p.W[l].rows()));
    for (int i = 0; i < p.W[l].rows(); ++i) {
      double s = p.b[l](i);
      for (int j = 0; j < p.W[l].cols(); ++j) {
        const double a = l == 0 ? z[j] : graph::activation_value(p.act, z[j]);
        s += p.W[l](i, j) * a;
      }
      next[i] = s;
    }
    z = std::move(next);
  }
  return z;
}

// The same network as a graph with one scalar input per coordinate.
graph::NodeId build_graph(graph::Graph& g, const MLPParams& p, std::vector<graph::NodeId>& inputs, int out) {
  std::vector<graph::NodeId> z;
  for (int j = 0; j < p.n_in(); ++j) {
    inputs.push_back(g.input("x" + std::to_string(j), graph::Shape::Batch));
    z.push_back(inputs.back());
  }
  for (std::size_t l = 0; l < p.W.size(); ++l) {
    std::vector<graph::NodeId> next;
    for (int i = 0; i < p.W[l].rows(); ++i) {
      graph::NodeId s = g.constant(p.b[l](i));
      for (int j = 0; j < p.W[l].cols(); ++j) {
        const auto a = l == 0 ? z[j] : g.activation(p.act, z[j]);
        s = g.add(s, g.mul(g.constant(p.W[l](i, j)), a));
      }
      next.push_back(s);
    }
    z = std::move(next);
  }
  g.mark_output(z[out]);
  return z[out];
}

const Activation kActs[] = {Activation::Softplus, Activation::Elu, Activation::Sigmoid, Activation::Swish};

}  // namespace

TEST(Forward, AffineAndConstantNetworks) {
  auto p = MLPParams::zeros({1, 1}, Activation::Softplus);
  p.W[0](0, 0) = 2;
  p.b[0](0) = 3;
  Eigen::MatrixXd x(1, 1);
  x << 5;
  EXPECT_EQ(forward(p, x)(0, 0), 13.0);
  EXPECT_EQ(twin_forward(p, x).dydx[0](0, 0), 2.0);

  auto c = MLPParams::zeros({3, 8, 8, 1}, Activation::Swish);
  c.b.back()(0) = 1.75;
  const auto y = forward(c, random_matrix(10, 3, 1, 100.0));
  for (int i = 0; i < 10; ++i) EXPECT_EQ(y(i, 0), 1.75);
  EXPECT_THROW((void)forward(c, random_matrix(2, 2, 1)), std::invalid_argument);
}

TEST(Forward, MatchesNaiveLoops) {
  for (auto act : kActs) {
    const auto p = random_net({3, 7, 5, 2}, act, 4);
    const auto X = random_matrix(6, 3, 9, 2.0);
    const auto y = forward(p, X);
    for (int i = 0; i < 6; ++i) {
      const auto ref = naive_forward(p, {X(i, 0), X(i, 1), X(i, 2)});
      for (int o = 0; o < 2; ++o) EXPECT_NEAR(y(i, o), ref[o], 1e-12 * std::max(1.0, std::abs(ref[o])));
    }
  }
}

TEST(Twin, SigmoidNeuronByHand) {
  auto p = MLPParams::zeros({1, 1, 1}, Activation::Sigmoid);
  p.W[0](0, 0) = 1;
  p.W[1](0, 0) = 1;
  Eigen::MatrixXd x(1, 1);
  x << 0;
  EXPECT_DOUBLE_EQ(twin_forward(p, x).dydx[0](0, 0), 0.25);
}

TEST(Twin, ValueBitwiseEqualAndGradientMatchesFiniteDifferences) {
  for (auto act : kActs) {
    const auto p = random_net({4, 16, 16, 3}, act, 11);
    const auto X = random_matrix(100, 4, 12, 2.0);
    const auto t = twin_forward(p, X);
    EXPECT_EQ(t.y, forward(p, X));
    const double h = 1e-5;
    for (int j = 0; j < 4; ++j) {
      Eigen::MatrixXd up = X, dn = X;
      up.col(j).array() += h;
      dn.col(j).array() -= h;
      const Eigen::MatrixXd fd = (forward(p, up) - forward(p, dn)) / (2 * h);
      for (int o = 0; o < 3; ++o) {
        for (int i = 0; i < 100; ++i) EXPECT_NEAR(t.dydx[o](i, j), fd(i, o), 1e-6);
      }
    }
  }
}

TEST(Twin, AgreesWithGraphReverseMode) {
  for (auto act : kActs) {
    const auto p = random_net({3, 6, 5, 2}, act, 21);
    const auto X = random_matrix(20, 3, 22, 2.0);
    const auto t = twin_forward(p, X);
    for (int o = 0; o < 2; ++o) {
      graph::Graph g;
      std::vector<graph::NodeId> in;
      build_graph(g, p, in, o);
      graph::Bindings b;
      for (int j = 0; j < 3; ++j) b["x" + std::to_string(j)] = std::vector<double>(X.col(j).data(), X.col(j).data() + 20);
      auto tape = graph::eval(g, b, 20);
      const auto gr = graph::grad(tape, g.outputs()[0], {"x0", "x1", "x2"});
      for (int j = 0; j < 3; ++j) {
        for (int i = 0; i < 20; ++i) {
          EXPECT_NEAR(t.dydx[o](i, j), gr[j][i], 1e-10 * std::max(1.0, std::abs(gr[j][i])));
        }
      }
    }
  }
}

TEST(Loss, ZeroLambdaEqualsValueLoss) {
  const auto p = random_net({2, 8, 1}, Activation::Softplus, 3);
  Batch b{random_matrix(16, 2, 4), random_matrix(16, 1, 5), random_matrix(16, 2, 6)};
  std::vector<double> g0, g1;
  const auto vml = loss(p, b, {}, &g0);
  const auto pdml = loss(p, b, {{0, 1, 0.0}}, &g1);
  EXPECT_EQ(vml.total, pdml.total);
  EXPECT_EQ(g0, g1);
}

TEST(Loss, ExactLinearFitHasZeroLoss) {
  auto p = MLPParams::zeros({2, 1}, Activation::Softplus);
  p.W[0] << 1.5, -2.0;
  p.b[0] << 0.5;
  const auto X = random_matrix(8, 2, 7);
  Eigen::MatrixXd Y = (X * p.W[0].transpose()).array() + 0.5;
  Eigen::MatrixXd DY(8, 2);
  DY.col(0).setConstant(1.5);
  DY.col(1).setConstant(-2.0);
  EXPECT_NEAR(loss(p, {X, Y, DY}, default_terms(2, 1)).total, 0.0, 1e-28);
}

TEST(Loss, ParameterGradientsMatchFiniteDifferences) {
  for (auto act : kActs) {
    const auto p = random_net({3, 5, 2}, act, 31);
    Batch b{random_matrix(8, 3, 32), random_matrix(8, 2, 33), random_matrix(8, 6, 34)};
    for (const auto& terms : {std::vector<DerivTerm>{}, default_terms(3, 2), default_terms(3, 2, {{1, 2}})}) {
      std::vector<double> g;
      (void)loss(p, b, terms, &g);
      auto flat = p.flatten();
      ASSERT_EQ(g.size(), flat.size());
      for (std::size_t k = 0; k < flat.size(); ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(flat[k]));
        auto q = p;
        auto f = flat;
        f[k] += h;
        q.unflatten(f);
        const double up = loss(q, b, terms).total;
        f[k] -= 2 * h;
        q.unflatten(f);
        const double dn = loss(q, b, terms).total;
        const double fd = (up - dn) / (2 * h);
        EXPECT_LE(std::abs(fd - g[k]), 1e-5 * std::max(std::abs(g[k]), 1e-3)) << k;
      }
    }
  }
}

TEST(Loss, RejectsBadTerms) {
  const auto p = random_net({2, 4, 1}, Activation::Softplus, 3);
  Batch b{random_matrix(4, 2, 1), random_matrix(4, 1, 2), {}};
  EXPECT_THROW((void)loss(p, b, {{0, 1, 1.0}}), std::invalid_argument);
  b.DY = random_matrix(4, 2, 3);
  EXPECT_THROW((void)loss(p, b, {{0, 2, 1.0}}), std::invalid_argument);
  EXPECT_THROW((void)loss(p, b, {{0, 1, -1.0}}), std::invalid_argument);
  EXPECT_EQ(default_terms(2, 1).size(), 2u);
  EXPECT_DOUBLE_EQ(default_terms(2, 1)[0].lambda, 0.5);
  EXPECT_DOUBLE_EQ(default_terms(2, 1, {{0, 1}})[0].lambda, 1.0);
}

TEST(Scaler, RoundTripAndDerivativeScaling) {
  Eigen::MatrixXd X = random_matrix(50, 3, 1, 5.0);
  X.col(2).setConstant(4.0);
  const Eigen::MatrixXd Y = random_matrix(50, 2, 2, 0.01);
  const auto s = Scaler::fit(X, Y);
  EXPECT_EQ(s.scale_x(2), 1.0);
  EXPECT_TRUE((s.scale_x.array() > 0).all());
  EXPECT_LT((s.invert_x(s.apply_x(X)) - X).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((s.invert_y(s.apply_y(Y)) - Y).cwiseAbs().maxCoeff(), 1e-12);
  const auto DY = random_matrix(50, 6, 3);
  EXPECT_LT((s.invert_dy(s.apply_dy(DY)) - DY).cwiseAbs().maxCoeff(), 1e-12);
  const auto DYs = s.apply_dy(DY);
  EXPECT_NEAR(DYs(7, 1 * 3 + 0), DY(7, 3) * s.scale_x(0) / s.scale_y(1), 1e-14 * std::abs(DYs(7, 3)));
}

TEST(Scaler, LossInvariantUnderConsistentRescaling) {
  const auto p = random_net({2, 6, 1}, Activation::Swish, 5);
  const auto X = random_matrix(30, 2, 6, 3.0);
  Eigen::MatrixXd Y = forward(p, X).array() + 0.1 * random_matrix(30, 1, 7).array();
  const auto DY = random_matrix(30, 2, 8);
  auto scaled_loss = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& dy) {
    const auto s = Scaler::fit(x, y);
    return loss(p, {s.apply_x(x), s.apply_y(y), s.apply_dy(dy)}, default_terms(2, 1)).total;
  };
  Eigen::MatrixXd X2 = X;
  X2.col(0) *= 7.0;
  X2.col(1) *= 0.01;
  X2.array() += 3.0;
  const Eigen::MatrixXd Y2 = 250.0 * Y;
  Eigen::MatrixXd DY2 = DY;
  DY2.col(0) *= 250.0 / 7.0;
  DY2.col(1) *= 250.0 / 0.01;
  EXPECT_NEAR(scaled_loss(X, Y, DY), scaled_loss(X2, Y2, DY2), 1e-10);
}

namespace {

struct Linear {
  Eigen::MatrixXd X, Y, DY;
};

Linear linear_data(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1e-3);
  Linear d;
  d.X = (random_matrix(n, 1, seed) .array() + 1.0) * 0.5;
  d.Y.resize(n, 1);
  for (int i = 0; i < n; ++i) d.Y(i, 0) = 3 * d.X(i, 0) + noise(rng);
  d.DY = Eigen::MatrixXd::Constant(n, 1, 3.0);
  return d;
}

}  // namespace

TEST(Train, LearnsLinearSlope) {
  const auto d = linear_data(8192, 1);
  TrainConfig c;
  c.kind = LossKind::DML;
  const auto s = train(d.X, d.Y, d.DY, c);
  Eigen::MatrixXd grid(21, 1);
  for (int i = 0; i <= 20; ++i) grid(i, 0) = i / 20.0;
  const auto g = s.predict_grad(grid)[0];
  for (int i = 0; i <= 20; ++i) EXPECT_NEAR(g(i, 0), 3.0, 0.03) << grid(i, 0);
  EXPECT_EQ(s.loss_history.size(), 200u);
  EXPECT_EQ(s.n_samples, 8192u);
}

TEST(Train, DeterministicAndZeroLambdaMatchesValueTraining) {
  const auto d = linear_data(300, 2);
  TrainConfig c;
  c.kind = LossKind::VML;
  c.hidden = {8, 8};
  c.epochs = 10;
  c.batch_size = 32;
  const auto a = train(d.X, d.Y, d.DY, c);
  const auto b = train(d.X, d.Y, d.DY, c);
  EXPECT_EQ(a.net.flatten(), b.net.flatten());
  TrainConfig z = c;
  z.kind = LossKind::DML;
  z.lambda_override = 0.0;
  const auto dz = train(d.X, d.Y, d.DY, z);
  EXPECT_EQ(a.net.flatten(), dz.net.flatten());
  EXPECT_EQ(a.loss_history, dz.loss_history);
  TrainConfig other = c;
  other.init_seed = 99;
  EXPECT_NE(train(d.X, d.Y, d.DY, other).net.flatten(), a.net.flatten());
}

TEST(Train, DivergenceKeepsLastFiniteState) {
  const auto d = linear_data(64, 3);
  TrainConfig c;
  c.kind = LossKind::VML;
  c.hidden = {8};
  c.act = Activation::Elu;
  c.lr = 1e200;
  c.cosine_decay = false;
  c.epochs = 50;
  try {
    (void)train(d.X, d.Y, d.DY, c);
    FAIL() << "expected divergence";
  } catch (const TrainError& e) {
    EXPECT_NE(std::string(e.what()).find("batch"), std::string::npos);
    for (double v : e.partial().loss_history) EXPECT_TRUE(std::isfinite(v));
    for (double w : e.partial().net.flatten()) EXPECT_TRUE(std::isfinite(w));
  }
  c.kind = LossKind::DML;
  EXPECT_THROW((void)train(d.X, d.Y, Eigen::MatrixXd(), c), std::invalid_argument);
}

TEST(Surrogate, SaveLoadAndVersionCheck) {
  const auto d = linear_data(100, 4);
  TrainConfig c;
  c.hidden = {4};
  c.epochs = 2;
  c.kind = LossKind::VML;
  const auto s = train(d.X, d.Y, d.DY, c);
  const auto dir = std::filesystem::temp_directory_path() / "pdml_surrogate_test";
  std::filesystem::create_directories(dir);
  const auto f = (dir / "s.bin").string();
  s.save(f);
  const auto r = Surrogate::load(f);
  EXPECT_EQ(r.net.flatten(), s.net.flatten());
  EXPECT_EQ(r.net.sizes, s.net.sizes);
  EXPECT_EQ(r.net.act, s.net.act);
  EXPECT_EQ(r.loss_history, s.loss_history);
  EXPECT_EQ(r.predict(d.X), s.predict(d.X));
  {
    std::fstream io(f, std::ios::in | std::ios::out | std::ios::binary);
    io.seekp(8);
    const char v = 42;
    io.write(&v, 1);
  }
  EXPECT_THROW((void)Surrogate::load(f), std::runtime_error);
}

TEST(Ensemble, MeanOfMembers) {
  Surrogate a, b;
  a.net = MLPParams::zeros({2, 3, 1}, Activation::Softplus);
  b.net = a.net;
  a.net.b.back()(0) = 1.0;
  b.net.b.back()(0) = 4.0;
  a.scaler = b.scaler = Scaler::identity(2, 1);
  const auto X = random_matrix(5, 2, 1);
  const auto y = ensemble_predict({&a, &b}, X);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(y(i, 0), 2.5);
  EXPECT_EQ(ensemble_predict({&a}, X), a.predict(X));
  EXPECT_THROW((void)ensemble_predict({}, X), std::invalid_argument);

  Surrogate c, e;
  c.net = random_net({2, 6, 1}, Activation::Sigmoid, 1);
  e.net = random_net({2, 6, 1}, Activation::Sigmoid, 2);
  c.scaler = e.scaler = Scaler::identity(2, 1);
  const auto g = ensemble_grad({&c, &e}, X);
  const double h = 1e-5;
  for (int j = 0; j < 2; ++j) {
    Eigen::MatrixXd up = X, dn = X;
    up.col(j).array() += h;
    dn.col(j).array() -= h;
    const Eigen::MatrixXd fd = (ensemble_predict({&c, &e}, up) - ensemble_predict({&c, &e}, dn)) / (2 * h);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(g[0](i, j), fd(i, 0), 1e-8);
  }
}
