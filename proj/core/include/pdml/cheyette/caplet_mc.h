#pragma once

#include <cstdint>
#include <vector>

#include "pdml/cheyette/cheyette.h"

namespace pdml::cheyette {

struct CapletMcConfig {
  std::size_t n_paths = std::size_t{1} << 20;
  std::uint64_t seed = 1;
  double steps_per_year = 64.0;
  std::size_t threads = 0;
};

struct CapletQuote {
  double strike = 0.0;
  double price = 0.0;  // undiscounted, per unit notional times spec.notional
  double stderr_ = 0.0;
};

/// Monte Carlo caplet prices for several strikes on common paths. An empty
/// schedule means constant (a, b, eta) from `params`.
[[nodiscard]] std::vector<CapletQuote> caplet_mc(const CheyetteParams& params, const VolSchedule& schedule,
                                                 double T1, double T2, const CurveSet& curves,
                                                 const std::vector<double>& strikes, const CapletMcConfig& config);

}  // namespace pdml::cheyette
