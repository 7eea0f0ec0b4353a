#include <benchmark/benchmark.h>

#include <cmath>

#include "pdml/calib/icde.h"
#include "pdml/sampling/sampling.h"

using namespace pdml;

namespace {

void BM_IcdeRosenbrock(benchmark::State& state) {
  calib::ICDEConfig c;
  c.lo = {-2, -2, -2};
  c.hi = {2, 2, 2};
  c.generations = 50;
  c.threads = 1;
  const calib::Objective f = [](const std::vector<double>& x) {
    double s = 0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) s += 100 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1 - x[i], 2);
    return s;
  };
  for (auto _ : state) benchmark::DoNotOptimize(calib::icde_minimize(f, c));
}
BENCHMARK(BM_IcdeRosenbrock)->Unit(benchmark::kMillisecond);

void BM_AdaptiveSampling(benchmark::State& state) {
  const sampling::ParamDomain d{{{"b", 0.008, 0.067, sampling::SampleMode::Adaptive},
                                 {"k", 0.01, 0.04, sampling::SampleMode::Uniform}}};
  const auto pilot = sampling::sample_uniform(d, 4096, 1);
  const Eigen::VectorXd y = pilot.col(0).array() * 3.0;
  for (auto _ : state) {
    const auto dens = sampling::fit_adaptive_density(d, pilot, y, "b", 20);
    benchmark::DoNotOptimize(sampling::sample_adaptive(d, {{"b", dens}}, 12288, 2));
  }
}
BENCHMARK(BM_AdaptiveSampling)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
