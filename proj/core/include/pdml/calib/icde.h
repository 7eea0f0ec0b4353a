#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace pdml::calib {

using Objective = std::function<double(const std::vector<double>&)>;

/// g(x) <= 0 for inequalities, |g(x)| <= tol for equalities.
struct Constraint {
  enum class Kind { Inequality, Equality };
  Kind kind = Kind::Inequality;
  Objective g;
  double tol = 1e-6;
};

/// Breeder-GA mutation: each coordinate mutates with probability `rate`
/// (0 means 1/dims) by +-range*(hi-lo)*sum_k alpha_k 2^-k, k < precision.
struct IbgaSettings {
  double rate = 0.0;
  double range = 0.1;
  int precision = 16;
  /// Line recombination extends the parent segment by this fraction.
  double extension = 0.25;
};

struct ICDEConfig {
  std::size_t population = 40;
  std::size_t generations = 150;
  std::vector<double> lo, hi;
  std::vector<Constraint> constraints;
  /// (F, CR) settings drawn uniformly per trial vector.
  std::vector<std::pair<double, double>> fcr_pool{{1.0, 0.1}, {1.0, 0.9}, {0.8, 0.2}, {0.5, 0.9}};
  IbgaSettings ibga;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
};

struct ICDEResult {
  std::vector<double> x;
  double f = 0.0;
  double violation = 0.0;
  bool feasible = true;
  /// Best feasible objective after each generation (initial population
  /// first); +inf while nothing is feasible.
  std::vector<double> trace;
  std::size_t evaluations = 0;
};

/// Improved constrained differential evolution. Each member spawns one
/// trial per strategy (rand/1, rand/2, current-to-rand/1, current-to-best/1)
/// plus an IBGA offspring; the best of these by feasibility-first ordering
/// replaces the member when it is at least as good. Results do not depend
/// on the thread count.
[[nodiscard]] ICDEResult icde_minimize(const Objective& f, const ICDEConfig& config);

}  // namespace pdml::calib
