#include <benchmark/benchmark.h>

#include <random>

#include "pdml/surrogate/loss.h"
#include "pdml/surrogate/mlp.h"
#include "pdml/surrogate/train.h"

using namespace pdml;

namespace {

surrogate::Batch batch(int n, int n_in) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  surrogate::Batch b{Eigen::MatrixXd(n, n_in), Eigen::MatrixXd(n, 1), Eigen::MatrixXd(n, n_in)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n_in; ++j) {
      b.X(i, j) = z(rng);
      b.DY(i, j) = z(rng);
    }
    b.Y(i, 0) = z(rng);
  }
  return b;
}

void BM_Forward(benchmark::State& state) {
  const auto p = surrogate::MLPParams::glorot({4, 32, 32, 32, 32, 1}, surrogate::Activation::Softplus, 1);
  const auto b = batch(256, 4);
  for (auto _ : state) benchmark::DoNotOptimize(surrogate::forward(p, b.X));
}
BENCHMARK(BM_Forward);

void BM_TwinForward(benchmark::State& state) {
  const auto p = surrogate::MLPParams::glorot({4, 32, 32, 32, 32, 1}, surrogate::Activation::Softplus, 1);
  const auto b = batch(256, 4);
  for (auto _ : state) benchmark::DoNotOptimize(surrogate::twin_forward(p, b.X));
}
BENCHMARK(BM_TwinForward);

// One minibatch loss and parameter gradient; range(0) = 0 for VML, 1 for PDML.
void BM_LossGradient(benchmark::State& state) {
  const auto p = surrogate::MLPParams::glorot({4, 32, 32, 32, 32, 1}, surrogate::Activation::Softplus, 1);
  const auto b = batch(256, 4);
  std::vector<surrogate::DerivTerm> terms;
  if (state.range(0)) terms.push_back({0, 3, 1.0});
  std::vector<double> grad;
  for (auto _ : state) benchmark::DoNotOptimize(surrogate::loss(p, b, terms, &grad));
}
BENCHMARK(BM_LossGradient)->Arg(0)->Arg(1);

void BM_TrainEpochs(benchmark::State& state) {
  const auto b = batch(4096, 4);
  surrogate::TrainConfig c;
  c.pdml_pairs = {{0, 3}};
  c.epochs = 5;
  for (auto _ : state) benchmark::DoNotOptimize(surrogate::train(b.X, b.Y, b.DY, c));
  state.SetItemsProcessed(state.iterations() * 4096 * 5);
}
BENCHMARK(BM_TrainEpochs)->Unit(benchmark::kMillisecond);

}  // namespace
