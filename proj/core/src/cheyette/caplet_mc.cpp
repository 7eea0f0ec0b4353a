#include <map>
#include <mutex>

#include "pdml/cheyette/caplet_mc.h"
#include "pdml/script/parser.h"
#include "pdml/script/validate.h"
#include "pdml/sim/simulator.h"

namespace pdml::cheyette {

namespace {

const script::ValidatedScript& caplet_script(std::size_t n_strikes) {
  static std::mutex mu;
  static std::map<std::size_t, script::ValidatedScript> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n_strikes);
  if (it == cache.end()) {
    const auto names = script_parameters(n_strikes);
    auto vs = script::validate_or_throw(script::parse_script(emit_script(n_strikes)),
                                        std::set<std::string, std::less<>>(names.begin(), names.end()));
    it = cache.emplace(n_strikes, std::move(vs)).first;
  }
  return it->second;
}

}  // namespace

std::vector<CapletQuote> caplet_mc(const CheyetteParams& params, const VolSchedule& schedule, double T1, double T2,
                                   const CurveSet& curves, const std::vector<double>& strikes,
                                   const CapletMcConfig& config) {
  std::vector<double> required{T1};
  for (const auto& piece : schedule) {
    if (piece.start > 0 && piece.start < T1) required.push_back(piece.start);
  }
  const sim::TimeGrid grid = sim::TimeGrid::build(required, 1.0 / config.steps_per_year);
  CapletSpec spec{T1, T2, strikes.front(), 1.0};
  sim::ParamSet ps = caplet_bindings(params, spec, curves, strikes, grid);
  apply_schedule(ps, schedule);
  const sim::Simulator simulator(caplet_script(strikes.size()), std::move(ps), grid);
  sim::SimConfig cfg;
  cfg.batch_size = config.n_paths;
  cfg.seed = config.seed;
  cfg.compute_dy = false;
  cfg.threads = config.threads;
  const sim::SimOutput out = simulator.run(cfg);
  std::vector<CapletQuote> quotes;
  for (std::size_t i = 0; i < strikes.size(); ++i) {
    const auto e = out.estimate(i);
    quotes.push_back({strikes[i], e.mean, e.stderr_});
  }
  return quotes;
}

}  // namespace pdml::cheyette
