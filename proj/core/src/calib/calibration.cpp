#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <thread>

#include "pdml/calib/calibration.h"
#include "pdml/sampling/sampling.h"
#include "pdml/script/parser.h"
#include "pdml/script/validate.h"
#include "pdml/sim/simulator.h"
#include "pdml/util/rng.h"

namespace pdml::calib {

namespace {

const script::ValidatedScript& single_caplet_script() {
  static std::once_flag once;
  static script::ValidatedScript vs;
  std::call_once(once, [] {
    const auto names = cheyette::script_parameters(1);
    vs = script::validate_or_throw(script::parse_script(cheyette::emit_script(1)),
                                   std::set<std::string, std::less<>>(names.begin(), names.end()));
  });
  return vs;
}

sampling::ParamDomain domain_of(const PipelineConfig& cfg) {
  const auto& b = cfg.box;
  return {{{"a", b.a_lo, b.a_hi, sampling::SampleMode::Uniform},
           {"b", b.b_lo, b.b_hi, cfg.adaptive_b ? sampling::SampleMode::Adaptive : sampling::SampleMode::Uniform},
           {"eta", b.eta_lo, b.eta_hi, sampling::SampleMode::Uniform},
           {"k", cfg.k_lo, cfg.k_hi, sampling::SampleMode::Uniform}}};
}

// Simulates caplet payoffs for parameter rows X (a, b, eta, k) with the
// current interval per path and earlier intervals frozen.
void simulate_rows(const Eigen::MatrixXd& X, const CalibTargets& targets, const cheyette::VolSchedule& frozen,
                   double start, const PipelineConfig& cfg, std::uint64_t seed, Eigen::MatrixXd& Y,
                   Eigen::MatrixXd& DY) {
  const std::size_t n = static_cast<std::size_t>(X.rows());
  std::vector<double> req{targets.T1};
  for (const auto& p : frozen) {
    if (p.start > 0) req.push_back(p.start);
  }
  if (start > 0) req.push_back(start);
  const auto grid = sim::TimeGrid::build(req, 1.0 / cfg.steps_per_year);
  const cheyette::CapletSpec spec{targets.T1, targets.T2, 0.5 * (cfg.k_lo + cfg.k_hi), 1.0};
  sim::ParamSet ps = cheyette::caplet_bindings(cfg.model, spec, cfg.curves, {spec.strike}, grid);
  std::vector<double> a(n), b(n), eta(n), khat(n);
  const double delta = spec.delta();
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    a[i] = X(r, 0);
    b[i] = X(r, 1);
    eta[i] = X(r, 2);
    khat[i] = 1.0 + X(r, 3) * delta;
  }
  std::vector<sim::ParamPiece> pa, pb, pe;
  for (const auto& p : frozen) {
    pa.push_back({p.start, {p.a}, false});
    pb.push_back({p.start, {p.b}, false});
    pe.push_back({p.start, {p.eta}, false});
  }
  pa.push_back({start, std::move(a), true});
  pb.push_back({start, std::move(b), true});
  pe.push_back({start, std::move(eta), true});
  ps.set_schedule("volaterm", std::move(pa));
  ps.set_schedule("volbterm", std::move(pb));
  ps.set_schedule("volofvar", std::move(pe));
  ps.set_per_path("khat", std::move(khat));
  const sim::Simulator simulator(single_caplet_script(), std::move(ps), grid, {"khat"});
  sim::SimConfig sc;
  sc.batch_size = n;
  sc.seed = seed;
  sc.threads = cfg.threads;
  const sim::SimOutput out = simulator.run(sc);
  Y.resize(X.rows(), 1);
  DY.resize(X.rows(), 4);
  DY.setZero();
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    Y(r, 0) = out.y(i, 0);
    DY(r, 3) = out.dy(i, 0, 0) * delta;
  }
}

cheyette::VolSchedule with_piece(cheyette::VolSchedule frozen, double start, const std::vector<double>& x) {
  frozen.push_back({start, x[0], x[1], x[2]});
  return frozen;
}

struct Optimum {
  ICDEResult opt;
  cheyette::VolPiece theta;
  std::vector<double> surrogate_prices;
};

Optimum optimize(const std::vector<const surrogate::Surrogate*>& net, const CalibTargets& targets, double start,
                 const PipelineConfig& cfg, std::uint64_t icde_seed) {
  ICDEConfig ic = cfg.icde;
  ic.lo = {cfg.box.a_lo, cfg.box.b_lo, cfg.box.eta_lo};
  ic.hi = {cfg.box.a_hi, cfg.box.b_hi, cfg.box.eta_hi};
  ic.seed = icde_seed;
  if (ic.threads == 0) ic.threads = cfg.threads;
  const auto strikes = targets.strikes();
  auto objective = [&](const std::vector<double>& x) {
    const Eigen::MatrixXd pred = surrogate::ensemble_predict(net, surrogate_inputs({start, x[0], x[1], x[2]}, strikes));
    double s = 0.0;
    for (std::size_t i = 0; i < targets.quotes.size(); ++i) {
      const double e = pred(static_cast<Eigen::Index>(i), 0) - targets.quotes[i].price;
      s += targets.quotes[i].weight * e * e;
    }
    return s;
  };
  Optimum o;
  o.opt = icde_minimize(objective, ic);
  o.theta = {start, o.opt.x[0], o.opt.x[1], o.opt.x[2]};
  const Eigen::MatrixXd pred = surrogate::ensemble_predict(net, surrogate_inputs(o.theta, strikes));
  o.surrogate_prices.assign(pred.col(0).data(), pred.col(0).data() + pred.rows());
  return o;
}

std::vector<cheyette::CapletQuote> reference_prices(const CalibTargets& targets, const cheyette::VolSchedule& schedule,
                                                    const PipelineConfig& cfg) {
  cheyette::CapletMcConfig mc = cfg.reference;
  if (mc.threads == 0) mc.threads = cfg.threads;
  return cheyette::caplet_mc(cfg.model, schedule, targets.T1, targets.T2, cfg.curves, targets.strikes(), mc);
}

}  // namespace

SeedStreams SeedStreams::from(std::uint64_t seed) {
  return {derive_seed(seed, 1), derive_seed(seed, 2), derive_seed(seed, 3), derive_seed(seed, 4), derive_seed(seed, 5)};
}

cheyette::VolSchedule CalibResult::schedule() const {
  cheyette::VolSchedule s;
  for (const auto& iv : intervals) s.push_back(iv.theta);
  return s;
}

TrainingSet generate_training_set(const CalibTargets& targets, const cheyette::VolSchedule& frozen, double start,
                                  const PipelineConfig& cfg, const SeedStreams& streams) {
  targets.check();
  if (cfg.n_samples < 2) throw std::invalid_argument("sample budget must be at least 2");
  auto domain = domain_of(cfg);
  TrainingSet ts;
  if (!cfg.adaptive_b) {
    ts.X = sampling::sample_uniform(domain, cfg.n_samples, streams.sampling);
    simulate_rows(ts.X, targets, frozen, start, cfg, streams.simulation, ts.Y, ts.DY);
    return ts;
  }
  const auto n_pilot = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.pilot_fraction * static_cast<double>(cfg.n_samples))));
  if (n_pilot >= cfg.n_samples) throw std::invalid_argument("pilot fraction leaves no main samples");
  auto pilot_domain = domain;
  for (auto& p : pilot_domain.params) p.mode = sampling::SampleMode::Uniform;
  const Eigen::MatrixXd Xp = sampling::sample_uniform(pilot_domain, n_pilot, derive_seed(streams.sampling, 1));
  Eigen::MatrixXd Yp, DYp;
  simulate_rows(Xp, targets, frozen, start, cfg, derive_seed(streams.simulation, 1), Yp, DYp);
  std::map<std::string, sampling::AdaptiveDensity> dens;
  dens["b"] = sampling::fit_adaptive_density(domain, Xp, Yp.col(0), "b", cfg.n_bins);
  const std::size_t n_main = cfg.n_samples - n_pilot;
  const Eigen::MatrixXd Xm = sampling::sample_adaptive(domain, dens, n_main, derive_seed(streams.sampling, 2));
  Eigen::MatrixXd Ym, DYm;
  simulate_rows(Xm, targets, frozen, start, cfg, derive_seed(streams.simulation, 2), Ym, DYm);
  if (!cfg.include_pilot) {
    ts.X = Xm;
    ts.Y = Ym;
    ts.DY = DYm;
    return ts;
  }
  ts.X.resize(Xp.rows() + Xm.rows(), 4);
  ts.X << Xp, Xm;
  ts.Y.resize(Yp.rows() + Ym.rows(), 1);
  ts.Y << Yp, Ym;
  ts.DY.resize(DYp.rows() + DYm.rows(), 4);
  ts.DY << DYp, DYm;
  return ts;
}

SeedOutcome calibrate_seed(const CalibTargets& targets, const cheyette::VolSchedule& frozen, double start,
                           const PipelineConfig& cfg, std::uint64_t seed) {
  const SeedStreams streams = SeedStreams::from(seed);
  const TrainingSet ts = generate_training_set(targets, frozen, start, cfg, streams);
  surrogate::TrainConfig tc = cfg.train;
  tc.init_seed = streams.init;
  tc.shuffle_seed = streams.shuffle;
  if (tc.kind == surrogate::LossKind::PDML && tc.terms.empty() && tc.pdml_pairs.empty()) tc.pdml_pairs = {{0, 3}};
  SeedOutcome out;
  out.net = surrogate::train(ts.X, ts.Y, ts.DY, tc);
  auto o = optimize({&out.net}, targets, start, cfg, streams.icde);
  out.opt = std::move(o.opt);
  out.theta = o.theta;
  out.surrogate_prices = std::move(o.surrogate_prices);
  out.mc = reference_prices(targets, with_piece(frozen, start, out.opt.x), cfg);
  out.metrics = metrics({&out.net}, out.theta, targets, out.mc);
  return out;
}

namespace {

void fill_prices(IntervalResult& r, const CalibTargets& targets, const std::vector<double>& sur,
                 const std::vector<cheyette::CapletQuote>& mc) {
  r.strikes = targets.strikes();
  r.market.clear();
  r.mc_prices.clear();
  r.mc_stderr.clear();
  for (const auto& q : targets.quotes) r.market.push_back(q.price);
  for (const auto& q : mc) {
    r.mc_prices.push_back(q.price);
    r.mc_stderr.push_back(q.stderr_);
  }
  r.surrogate_prices = sur;
}

void check_seeds(const std::vector<std::uint64_t>& seeds, const RobustConfig& robust) {
  if (seeds.empty()) throw std::invalid_argument("calibration needs at least one seed");
  if (robust.mode == RobustMode::Ensemble && (robust.ensemble_m < 1 || robust.ensemble_m > seeds.size())) {
    throw std::invalid_argument("ensemble size must be between 1 and the number of seeds");
  }
}

IntervalResult calibrate_interval(const CalibTargets& targets, const cheyette::VolSchedule& frozen, double start,
                                  const PipelineConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                  const RobustConfig& robust) {
  check_seeds(seeds, robust);
  targets.check();
  const std::size_t n = seeds.size();
  std::vector<std::optional<SeedOutcome>> outcomes(n);
  IntervalResult r;
  r.T1 = targets.T1;
  r.T2 = targets.T2;
  r.underdetermined = targets.quotes.size() < 3;
  r.per_seed.resize(n);

  // Replications are independent; each one's result depends only on its seed.
  const std::size_t hw = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min(hw, n);
  PipelineConfig inner = cfg;
  inner.threads = std::max<std::size_t>(1, hw / workers);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      r.per_seed[i].seed = seeds[i];
      try {
        outcomes[i] = calibrate_seed(targets, frozen, start, inner, seeds[i]);
        r.per_seed[i].ok = true;
        r.per_seed[i].theta = outcomes[i]->theta;
        r.per_seed[i].metrics = outcomes[i]->metrics;
      } catch (const std::exception& e) {
        r.per_seed[i].error = e.what();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < n; ++i) {
    if (r.per_seed[i].ok) ok.push_back(i);
  }
  if (ok.empty()) {
    std::string msg = "every replication failed at T1=" + std::to_string(targets.T1);
    if (!r.per_seed.empty()) msg += ": " + r.per_seed.front().error;
    throw std::runtime_error(msg);
  }
  // Stable ranking by max error, ties to the earlier seed.
  std::stable_sort(ok.begin(), ok.end(), [&](std::size_t x, std::size_t y) {
    return r.per_seed[x].metrics.max_error() < r.per_seed[y].metrics.max_error();
  });
  const std::size_t best = ok.front();

  if (robust.mode != RobustMode::Ensemble) {
    const auto& o = *outcomes[best];
    r.theta = o.theta;
    r.metrics = o.metrics;
    r.chosen = {seeds[best]};
    r.trace = o.opt.trace;
    fill_prices(r, targets, o.surrogate_prices, o.mc);
    return r;
  }
  if (ok.size() < robust.ensemble_m) {
    throw std::runtime_error("only " + std::to_string(ok.size()) + " replications succeeded; ensemble needs " +
                             std::to_string(robust.ensemble_m));
  }
  std::vector<const surrogate::Surrogate*> members;
  for (std::size_t k = 0; k < robust.ensemble_m; ++k) {
    members.push_back(&outcomes[ok[k]]->net);
    r.chosen.push_back(seeds[ok[k]]);
  }
  auto o = optimize(members, targets, start, cfg, SeedStreams::from(seeds[best]).icde);
  const auto mc = reference_prices(targets, with_piece(frozen, start, o.opt.x), cfg);
  r.theta = o.theta;
  r.metrics = metrics(members, o.theta, targets, mc);
  r.trace = o.opt.trace;
  fill_prices(r, targets, o.surrogate_prices, mc);
  return r;
}

}  // namespace

IntervalResult calibrate_single_maturity(const CalibTargets& targets, const PipelineConfig& config,
                                         std::uint64_t seed) {
  return calibrate_interval(targets, {}, 0.0, config, {seed}, {});
}

CalibResult calibrate_bootstrap(const std::vector<CalibTargets>& targets, const PipelineConfig& config,
                                const std::vector<std::uint64_t>& seeds, const RobustConfig& robust) {
  if (targets.empty()) throw std::invalid_argument("calibration needs at least one maturity");
  check_seeds(seeds, robust);
  for (const auto& t : targets) t.check();
  for (std::size_t i = 1; i < targets.size(); ++i) {
    if (!(targets[i].T1 > targets[i - 1].T1)) throw std::invalid_argument("maturities must be strictly increasing");
  }
  CalibResult res;
  cheyette::VolSchedule frozen;
  double start = 0.0;
  for (const auto& t : targets) {
    try {
      res.intervals.push_back(calibrate_interval(t, frozen, start, config, seeds, robust));
    } catch (const std::exception& e) {
      res.complete = false;
      res.error = e.what();
      return res;
    }
    frozen.push_back(res.intervals.back().theta);
    start = t.T1;
  }
  return res;
}

}  // namespace pdml::calib
