#include <benchmark/benchmark.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pdml/cheyette/caplet_mc.h"
#include "pdml/script/parser.h"
#include "pdml/script/validate.h"
#include "pdml/sim/simulator.h"

using namespace pdml;

namespace {

sim::ParamSet heston() {
  sim::ParamSet ps;
  ps.set("shortrate", 0.03);
  ps.set("kappa", 1.5);
  ps.set("longtermvariance", 0.04);
  ps.set("volofvol", 0.4);
  ps.set("rho", -0.5);
  ps.set("initiallogspot", std::log(100.0));
  ps.set("initialvariance", 0.04);
  ps.set("maturity", 1.0);
  ps.set("strike", 105.0);
  return ps;
}

script::ValidatedScript heston_script(const sim::ParamSet& ps) {
  std::ifstream in(std::string(PDML_TEST_DATA) + "/heston_call.pdml");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto names = ps.names();
  return script::validate_or_throw(script::parse_script(ss.str()),
                                   std::set<std::string, std::less<>>(names.begin(), names.end()));
}

void BM_ParseValidate(benchmark::State& state) {
  const auto ps = heston();
  for (auto _ : state) benchmark::DoNotOptimize(heston_script(ps));
}
BENCHMARK(BM_ParseValidate);

// Paths per second with and without pathwise derivatives, 16 steps.
void BM_HestonPaths(benchmark::State& state) {
  const auto ps = heston();
  const auto vs = heston_script(ps);
  const sim::Simulator s(vs, ps, sim::TimeGrid::uniform(1.0, 16), {"strike", "volofvol"});
  sim::SimConfig c;
  c.batch_size = static_cast<std::size_t>(state.range(0));
  c.compute_dy = state.range(1) != 0;
  c.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(s.run(c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HestonPaths)->Args({4096, 0})->Args({4096, 1})->Unit(benchmark::kMillisecond);

void BM_CapletMc(benchmark::State& state) {
  cheyette::CheyetteParams p;
  p.a = -0.15873;
  p.b = 0.00788;
  p.eta = 0.54224;
  cheyette::CapletMcConfig c;
  c.n_paths = static_cast<std::size_t>(state.range(0));
  c.steps_per_year = 32;
  c.threads = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        cheyette::caplet_mc(p, {}, 1.0, 1.25, cheyette::CurveSet::desk_default(), {0.015, 0.02, 0.025}, c));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CapletMc)->Arg(1 << 14)->Unit(benchmark::kMillisecond);

}  // namespace
