#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdml/calib/icde.h"
#include "pdml/calib/metrics.h"
#include "pdml/cheyette/caplet_mc.h"
#include "pdml/cheyette/curves.h"
#include "pdml/surrogate/train.h"

namespace pdml::calib {

/// Search box for (a, b, eta). The same box bounds surrogate training.
struct ModelBox {
  double a_lo = -0.16, a_hi = 0.1;
  double b_lo = 0.008, b_hi = 0.067;
  double eta_lo = 0.1, eta_hi = 1.0;
};

struct PipelineConfig {
  /// kappa, theta, z0 and delta are fixed; a, b, eta are ignored.
  cheyette::CheyetteParams model;
  cheyette::CurveSet curves = cheyette::CurveSet::desk_default();
  ModelBox box;
  double k_lo = 0.01, k_hi = 0.04;

  std::size_t n_samples = 16384;
  bool adaptive_b = true;
  double pilot_fraction = 0.25;
  bool include_pilot = true;
  std::size_t n_bins = 20;
  double steps_per_year = 32.0;

  /// Seeds are overridden per replication.
  surrogate::TrainConfig train;
  /// Box and seed are overridden per replication.
  ICDEConfig icde;
  /// Pricer for metrics; its seed stays fixed across replications.
  cheyette::CapletMcConfig reference;
  std::size_t threads = 0;
};

/// Independent seeds derived from one replication seed.
struct SeedStreams {
  std::uint64_t sampling, simulation, init, shuffle, icde;
  static SeedStreams from(std::uint64_t seed);
};

enum class RobustMode { None, BestSeed, Ensemble };

struct RobustConfig {
  RobustMode mode = RobustMode::None;
  std::size_t ensemble_m = 3;
};

struct SeedMetrics {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  cheyette::VolPiece theta;
  Metrics metrics;
};

struct IntervalResult {
  double T1 = 0.0, T2 = 0.0;
  std::vector<SeedMetrics> per_seed;
  /// Chosen parameters (start = previous maturity) and their metrics.
  cheyette::VolPiece theta;
  Metrics metrics;
  std::vector<std::uint64_t> chosen;
  std::vector<double> strikes, market, surrogate_prices, mc_prices, mc_stderr;
  std::vector<double> trace;
  /// Fewer targets than free parameters.
  bool underdetermined = false;
};

struct CalibResult {
  std::vector<IntervalResult> intervals;
  bool complete = true;
  std::string error;

  [[nodiscard]] cheyette::VolSchedule schedule() const;
};

struct SeedOutcome {
  cheyette::VolPiece theta;
  Metrics metrics;
  surrogate::Surrogate net;
  ICDEResult opt;
  std::vector<double> surrogate_prices;
  std::vector<cheyette::CapletQuote> mc;
};

/// One replication on one maturity: sample (a, b, eta, k) with b adaptive,
/// simulate, train a PDML surrogate, minimize the surrogate's squared
/// repricing error with ICDE and score it against the MC reference. The
/// calibrated piece starts at `start`; earlier pieces stay at `frozen`.
[[nodiscard]] SeedOutcome calibrate_seed(const CalibTargets& targets, const cheyette::VolSchedule& frozen, double start,
                                         const PipelineConfig& config, std::uint64_t seed);

/// Training data of one replication: X = (a, b, eta, k), Y = caplet payoff,
/// DY = dY/dk.
struct TrainingSet {
  Eigen::MatrixXd X, Y, DY;
};

/// Uniform pilot run, density fit on b, then the adaptive main run.
[[nodiscard]] TrainingSet generate_training_set(const CalibTargets& targets, const cheyette::VolSchedule& frozen,
                                                double start, const PipelineConfig& config,
                                                const SeedStreams& streams);

[[nodiscard]] IntervalResult calibrate_single_maturity(const CalibTargets& targets, const PipelineConfig& config,
                                                       std::uint64_t seed);

/// Left to right over increasing maturities; each interval [T_{i-1}, T_i)
/// is calibrated with the earlier ones frozen. With several seeds every
/// interval runs all replications and keeps the best seed (or an ensemble)
/// before moving on. A failing interval stops the run with a partial result.
[[nodiscard]] CalibResult calibrate_bootstrap(const std::vector<CalibTargets>& targets, const PipelineConfig& config,
                                              const std::vector<std::uint64_t>& seeds,
                                              const RobustConfig& robust = {});

}  // namespace pdml::calib
