#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "pdml/graph/graph.h"

using namespace pdml::graph;

namespace {

double fd_rel_error(double analytic, double fd) {
  return std::abs(analytic - fd) / std::max({1e-8, std::abs(analytic), std::abs(fd)});
}

// Builds y = op(x, z) on batch inputs and checks both input adjoints against
// central differences at the given points.
void check_binary(const std::function<NodeId(Graph&, NodeId, NodeId)>& build, std::vector<double> xs,
                  std::vector<double> zs) {
  Graph g;
  const auto x = g.input("x", Shape::Batch);
  const auto z = g.input("z", Shape::Batch);
  const auto y = build(g, x, z);
  g.mark_output(y);
  const std::size_t n = xs.size();
  auto value = [&](std::vector<double> a, std::vector<double> b) {
    auto t = eval(g, {{"x", a}, {"z", b}}, n);
    return std::vector<double>(t.value(y).begin(), t.value(y).end());
  };
  auto t = eval(g, {{"x", xs}, {"z", zs}}, n);
  const auto gr = grad(t, y, {"x", "z"});
  for (int w = 0; w < 2; ++w) {
    auto& v = w == 0 ? xs : zs;
    for (std::size_t i = 0; i < n; ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(v[i]));
      auto up = v, dn = v;
      up[i] += h;
      dn[i] -= h;
      const double fu = w == 0 ? value(up, zs)[i] : value(xs, up)[i];
      const double fdn = w == 0 ? value(dn, zs)[i] : value(xs, dn)[i];
      EXPECT_LT(fd_rel_error(gr[static_cast<std::size_t>(w)][i], (fu - fdn) / (2 * h)), 1e-6)
          << "input " << w << " lane " << i;
    }
  }
}

}  // namespace

TEST(GraphEval, Product) {
  Graph g;
  const auto y = g.mul(g.input("x", Shape::Batch), g.input("y", Shape::Batch));
  g.mark_output(y);
  auto t = eval(g, {{"x", {2, 3}}, {"y", {4, 5}}}, 2);
  EXPECT_EQ(t.value(y)[0], 8.0);
  EXPECT_EQ(t.value(y)[1], 15.0);
}

TEST(GraphEval, HingeAndExp) {
  Graph g;
  const auto x = g.input("x", Shape::Batch);
  const auto k = g.input("k", Shape::Scalar);
  const auto y = g.positive_part(g.sub(x, k));
  const auto e = g.exp(g.constant(0.0));
  g.mark_output(y);
  g.mark_output(e);
  auto t = eval(g, {{"x", {1.0, 0.5}}, {"k", {0.8}}}, 2);
  EXPECT_NEAR(t.value(y)[0], 0.2, 1e-15);
  EXPECT_EQ(t.value(y)[1], 0.0);
  EXPECT_EQ(t.value(e)[0], 1.0);
}

TEST(GraphGrad, PowerRule) {
  Graph g;
  const auto x = g.input("x", Shape::Batch);
  const auto y = g.mul(x, x);
  g.mark_output(y);
  auto t = eval(g, {{"x", {3.0}}}, 1);
  EXPECT_EQ(grad(t, y, {"x"})[0][0], 6.0);
}

TEST(GraphGrad, HingeSubgradient) {
  Graph g;
  const auto x = g.input("x", Shape::Batch);
  const auto k = g.input("k", Shape::Batch);
  const auto y = g.positive_part(g.sub(x, k));
  g.mark_output(y);
  auto t = eval(g, {{"x", {1.0, 0.5, 0.8}}, {"k", {0.8, 0.8, 0.8}}}, 3);
  const auto gr = grad(t, y, {"x", "k"});
  EXPECT_EQ(gr[0], (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(gr[1], (std::vector<double>{-1, 0, 0}));
}

TEST(GraphGrad, MaxTieSplitsAndSqrtAtZero) {
  Graph g;
  const auto a = g.input("a", Shape::Batch);
  const auto b = g.input("b", Shape::Batch);
  const auto m = g.max(a, b);
  const auto s = g.sqrt(a);
  g.mark_output(m);
  g.mark_output(s);
  auto t = eval(g, {{"a", {1.0, 2.0, 0.0}}, {"b", {1.0, 1.0, 3.0}}}, 3);
  const auto gm = grad(t, m, {"a", "b"});
  EXPECT_EQ(gm[0], (std::vector<double>{0.5, 1.0, 0.0}));
  EXPECT_EQ(gm[1], (std::vector<double>{0.5, 0.0, 1.0}));
  const auto gs = grad(t, s, {"a"});
  EXPECT_EQ(gs[0][2], 0.0);
}

TEST(GraphGrad, SelectRoutesToChosenBranch) {
  Graph g;
  const auto x = g.input("x", Shape::Batch);
  const auto c = g.compare(Op::Less, x, g.constant(1.0));
  const auto y = g.select(c, g.mul(x, g.constant(3.0)), g.mul(x, x));
  g.mark_output(y);
  auto t = eval(g, {{"x", {0.5, 2.0}}}, 2);
  const auto gr = grad(t, y, {"x"});
  EXPECT_EQ(gr[0][0], 3.0);
  EXPECT_EQ(gr[0][1], 4.0);
}

TEST(GraphGrad, UnreachableInputsAreZeroAndScalarInputsSum) {
  Graph g;
  const auto x = g.input("x", Shape::Batch);
  const auto s = g.input("s", Shape::Scalar);
  const auto u = g.input("unused", Shape::Batch);
  (void)u;
  const auto y = g.mul(x, s);
  g.mark_output(y);
  auto t = eval(g, {{"x", {1.0, 2.0}}, {"s", {5.0}}, {"unused", {1.0, 1.0}}}, 2);
  const auto gr = grad(t, y, {"x", "s", "unused"});
  EXPECT_EQ(gr[0], (std::vector<double>{5.0, 5.0}));
  EXPECT_EQ(gr[1], (std::vector<double>{3.0}));
  EXPECT_EQ(gr[2], (std::vector<double>{0.0, 0.0}));
}

TEST(GraphGrad, ReduceMeanSpreadsAdjoint) {
  Graph g;
  const auto x = g.input("x", Shape::Batch);
  const auto m = g.reduce_mean(g.mul(x, x));
  g.mark_output(m);
  auto t = eval(g, {{"x", {1.0, 2.0, 3.0, 4.0}}}, 4);
  EXPECT_DOUBLE_EQ(t.value(m)[0], 7.5);
  const auto gr = grad(t, m, {"x"});
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(gr[0][static_cast<std::size_t>(i)], 2.0 * (i + 1) / 4.0);
}

TEST(GraphGrad, NonOutputRejected) {
  Graph g;
  const auto x = g.input("x", Shape::Batch);
  const auto y = g.exp(x);
  auto t = eval(g, {{"x", {1.0}}}, 1);
  EXPECT_THROW((void)grad(t, y, {"x"}), GraphError);
}

TEST(GraphEval, ErrorsCarryNodeAndLane) {
  Graph g;
  const auto x = g.input("x", Shape::Batch);
  const auto y = g.log(x);
  g.mark_output(y);
  try {
    (void)eval(g, {{"x", {1.0, -1.0}}}, 2);
    FAIL();
  } catch (const GraphError& e) {
    EXPECT_EQ(e.node(), static_cast<long>(y));
    EXPECT_EQ(e.lane(), 1);
  }
  EXPECT_THROW((void)eval(g, {}, 2), GraphError);
  EXPECT_THROW((void)eval(g, {{"x", {1.0, 2.0, 3.0}}}, 2), GraphError);
}

TEST(GraphEval, DumpListsNodes) {
  Graph g;
  const auto x = g.input("x", Shape::Batch);
  g.mark_output(g.exp(x));
  const auto d = g.dump();
  EXPECT_NE(d.find("input"), std::string::npos);
  EXPECT_NE(d.find("exp"), std::string::npos);
}

TEST(GraphGrad, EveryOpMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.3, 2.0);
  std::vector<double> xs(16), zs(16);
  for (std::size_t i = 0; i < 16; ++i) {
    xs[i] = U(rng);
    zs[i] = U(rng) + (i % 2 ? 0.5 : -0.5);
    if (std::abs(xs[i] - zs[i]) < 1e-3) zs[i] += 0.1;
  }
  check_binary([](Graph& g, NodeId x, NodeId z) { return g.add(x, z); }, xs, zs);
  check_binary([](Graph& g, NodeId x, NodeId z) { return g.sub(x, z); }, xs, zs);
  check_binary([](Graph& g, NodeId x, NodeId z) { return g.mul(x, z); }, xs, zs);
  check_binary([](Graph& g, NodeId x, NodeId z) { return g.div(x, z); }, xs, zs);
  check_binary([](Graph& g, NodeId x, NodeId z) { return g.max(x, z); }, xs, zs);
  check_binary([](Graph& g, NodeId x, NodeId z) { return g.min(x, z); }, xs, zs);
  check_binary([](Graph& g, NodeId x, NodeId z) { return g.mul(g.neg(x), g.exp(z)); }, xs, zs);
  check_binary([](Graph& g, NodeId x, NodeId z) { return g.add(g.sqrt(x), g.log(g.add(z, g.constant(1.0)))); }, xs, zs);
  check_binary([](Graph& g, NodeId x, NodeId z) { return g.positive_part(g.sub(x, z)); }, xs, zs);
  check_binary(
      [](Graph& g, NodeId x, NodeId z) { return g.select(g.compare(Op::Greater, x, z), g.mul(x, x), g.exp(z)); }, xs,
      zs);
  for (auto act : {Activation::Softplus, Activation::Elu, Activation::Sigmoid, Activation::Swish}) {
    check_binary([act](Graph& g, NodeId x, NodeId z) { return g.activation(act, g.sub(x, z)); }, xs, zs);
  }
}

TEST(GraphGrad, LinearityAndFanOut) {
  Graph g;
  const auto x = g.input("x", Shape::Batch);
  const auto f = g.mul(g.exp(x), g.sqrt(x));
  const auto h = g.log(g.add(x, g.constant(2.0)));
  const auto lin = g.add(g.mul(g.constant(3.0), f), g.mul(g.constant(-2.0), h));
  const auto twice = g.add(f, f);
  for (auto id : {f, h, lin, twice}) g.mark_output(id);
  auto t = eval(g, {{"x", {0.7, 1.3}}}, 2);
  const auto gf = grad(t, f, {"x"})[0];
  const auto gh = grad(t, h, {"x"})[0];
  const auto gl = grad(t, lin, {"x"})[0];
  const auto g2 = grad(t, twice, {"x"})[0];
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(gl[i], 3 * gf[i] - 2 * gh[i], 1e-14 * std::abs(gl[i]) + 1e-15);
    EXPECT_EQ(g2[i], 2 * gf[i]);
  }
}
