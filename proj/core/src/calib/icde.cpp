#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "pdml/calib/icde.h"

namespace pdml::calib {

namespace {

struct Member {
  std::vector<double> x;
  double f = 0.0;
  double v = 0.0;
};

// Feasibility-first ordering: feasible beats infeasible, then objective,
// then total violation.
bool better(const Member& a, const Member& b) {
  if (a.v == 0.0 && b.v == 0.0) return a.f < b.f;
  if (a.v == 0.0 || b.v == 0.0) return a.v == 0.0;
  return a.v < b.v;
}

bool not_worse(const Member& a, const Member& b) { return !better(b, a); }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double unit() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(g_() % n); }

 private:
  std::mt19937_64 g_;
};

void distinct(Rng& rng, std::size_t n, std::size_t exclude, std::size_t* out, std::size_t k) {
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t r;
    bool clash;
    do {
      r = rng.below(n);
      clash = r == exclude;
      for (std::size_t q = 0; q < j; ++q) clash = clash || out[q] == r;
    } while (clash);
    out[j] = r;
  }
}

void evaluate(const Objective& f, const std::vector<Constraint>& cons, std::vector<Member>& batch, std::size_t threads) {
  auto one = [&](Member& m) {
    double val = f(m.x);
    m.f = std::isfinite(val) ? val : std::numeric_limits<double>::infinity();
    double v = 0.0;
    for (const auto& c : cons) {
      const double g = c.g(m.x);
      if (!std::isfinite(g)) {
        v += 1e300;
      } else if (c.kind == Constraint::Kind::Inequality) {
        v += std::max(0.0, g);
      } else {
        v += std::max(0.0, std::abs(g) - c.tol);
      }
    }
    m.v = v;
  };
  std::size_t n_threads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, batch.size());
  if (n_threads <= 1) {
    for (auto& m : batch) one(m);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(batch.size());
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < batch.size(); i = next++) {
        try {
          one(batch[i]);
        } catch (...) {
          errors[i] = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failed) {
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
}

}  // namespace

ICDEResult icde_minimize(const Objective& f, const ICDEConfig& cfg) {
  const std::size_t d = cfg.lo.size();
  const std::size_t np = cfg.population;
  if (d == 0 || cfg.hi.size() != d) throw std::invalid_argument("search box needs matching nonempty lo/hi");
  for (std::size_t j = 0; j < d; ++j) {
    if (!(cfg.lo[j] < cfg.hi[j])) throw std::invalid_argument("search box needs lo < hi in every coordinate");
  }
  if (np < 6) throw std::invalid_argument("population must be at least 6");
  if (cfg.fcr_pool.empty()) throw std::invalid_argument("(F, CR) pool is empty");
  const double mut_rate = cfg.ibga.rate > 0 ? cfg.ibga.rate : 1.0 / static_cast<double>(d);

  Rng rng(cfg.seed);
  auto repair = [&](std::vector<double>& x) {
    for (std::size_t j = 0; j < d; ++j) {
      const double lo = cfg.lo[j], hi = cfg.hi[j];
      if (x[j] < lo) x[j] = 2 * lo - x[j];
      if (x[j] > hi) x[j] = 2 * hi - x[j];
      if (x[j] < lo || x[j] > hi || !std::isfinite(x[j])) x[j] = lo + (hi - lo) * rng.unit();
    }
  };

  std::vector<Member> pop(np);
  for (auto& m : pop) {
    m.x.resize(d);
    for (std::size_t j = 0; j < d; ++j) m.x[j] = cfg.lo[j] + (cfg.hi[j] - cfg.lo[j]) * rng.unit();
  }
  evaluate(f, cfg.constraints, pop, cfg.threads);

  ICDEResult res;
  res.evaluations = np;
  auto best_index = [&] {
    std::size_t b = 0;
    for (std::size_t i = 1; i < np; ++i) {
      if (better(pop[i], pop[b])) b = i;
    }
    return b;
  };
  auto record = [&] {
    const Member& b = pop[best_index()];
    res.trace.push_back(b.v == 0.0 ? b.f : std::numeric_limits<double>::infinity());
  };
  record();

  constexpr std::size_t kTrials = 5;
  std::vector<Member> trials(np * kTrials);
  for (std::size_t gen = 0; gen < cfg.generations; ++gen) {
    const std::size_t best = best_index();
    for (std::size_t i = 0; i < np; ++i) {
      const auto& xi = pop[i].x;
      std::size_t r[5];
      for (std::size_t s = 0; s < kTrials; ++s) {
        std::vector<double>& u = trials[i * kTrials + s].x;
        u.assign(d, 0.0);
        const auto [F, CR] = cfg.fcr_pool[rng.below(cfg.fcr_pool.size())];
        if (s == 4) {
          // IBGA: extended line recombination with a random partner, then
          // breeder mutation.
          distinct(rng, np, i, r, 1);
          const auto& xp = pop[r[0]].x;
          const double t = -cfg.ibga.extension + (1 + 2 * cfg.ibga.extension) * rng.unit();
          for (std::size_t j = 0; j < d; ++j) {
            u[j] = xi[j] + t * (xp[j] - xi[j]);
            if (rng.unit() < mut_rate) {
              double step = 0.0;
              for (int k = 0; k < cfg.ibga.precision; ++k) {
                if (rng.unit() < 1.0 / cfg.ibga.precision) step += std::ldexp(1.0, -k);
              }
              const double sign = rng.unit() < 0.5 ? -1.0 : 1.0;
              u[j] += sign * cfg.ibga.range * (cfg.hi[j] - cfg.lo[j]) * step;
            }
          }
        } else if (s == 2) {
          // current-to-rand/1 has no crossover.
          distinct(rng, np, i, r, 3);
          const double K = rng.unit();
          for (std::size_t j = 0; j < d; ++j) {
            u[j] = xi[j] + K * (pop[r[0]].x[j] - xi[j]) + F * (pop[r[1]].x[j] - pop[r[2]].x[j]);
          }
        } else {
          std::vector<double> v(d);
          if (s == 0) {
            distinct(rng, np, i, r, 3);
            for (std::size_t j = 0; j < d; ++j) v[j] = pop[r[0]].x[j] + F * (pop[r[1]].x[j] - pop[r[2]].x[j]);
          } else if (s == 1) {
            distinct(rng, np, i, r, 5);
            for (std::size_t j = 0; j < d; ++j) {
              v[j] = pop[r[0]].x[j] + F * (pop[r[1]].x[j] - pop[r[2]].x[j]) + F * (pop[r[3]].x[j] - pop[r[4]].x[j]);
            }
          } else {
            distinct(rng, np, i, r, 2);
            for (std::size_t j = 0; j < d; ++j) {
              v[j] = xi[j] + F * (pop[best].x[j] - xi[j]) + F * (pop[r[0]].x[j] - pop[r[1]].x[j]);
            }
          }
          const std::size_t jrand = rng.below(d);
          for (std::size_t j = 0; j < d; ++j) u[j] = (j == jrand || rng.unit() < CR) ? v[j] : xi[j];
        }
        repair(u);
      }
    }
    evaluate(f, cfg.constraints, trials, cfg.threads);
    res.evaluations += trials.size();
    for (std::size_t i = 0; i < np; ++i) {
      std::size_t pick = i * kTrials;
      for (std::size_t s = 1; s < kTrials; ++s) {
        if (better(trials[i * kTrials + s], trials[pick])) pick = i * kTrials + s;
      }
      if (not_worse(trials[pick], pop[i])) pop[i] = trials[pick];
    }
    record();
  }
  const Member& b = pop[best_index()];
  res.x = b.x;
  res.f = b.f;
  res.violation = b.v;
  res.feasible = b.v == 0.0;
  return res;
}

}  // namespace pdml::calib
