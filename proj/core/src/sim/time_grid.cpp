#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pdml/sim/time_grid.h"

namespace pdml::sim {

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.size() < 2) throw std::invalid_argument("time grid needs at least two points");
  if (times_.front() != 0.0) throw std::invalid_argument("time grid must start at 0");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) throw std::invalid_argument("time grid must be strictly increasing");
  }
}

TimeGrid TimeGrid::build(std::vector<double> required, double max_dt) {
  if (!(max_dt > 0)) throw std::invalid_argument("max_dt must be positive");
  required.push_back(0.0);
  for (double t : required) {
    if (!(t >= 0) || !std::isfinite(t)) throw std::invalid_argument("observation time " + std::to_string(t) + " is invalid");
  }
  std::sort(required.begin(), required.end());
  const double horizon = required.back();
  if (horizon <= 0) throw std::invalid_argument("time grid needs a positive horizon");
  const double tol = 1e-12 * horizon;
  std::vector<double> knots{0.0};
  for (double t : required) {
    if (t - knots.back() > tol) knots.push_back(t);
  }
  std::vector<double> times{0.0};
  for (std::size_t k = 1; k < knots.size(); ++k) {
    const double a = knots[k - 1], b = knots[k];
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / max_dt - 1e-9)));
    for (std::size_t j = 1; j < n; ++j) times.push_back(a + (b - a) * static_cast<double>(j) / static_cast<double>(n));
    times.push_back(b);
  }
  return TimeGrid(std::move(times));
}

TimeGrid TimeGrid::uniform(double horizon, std::size_t n_steps) {
  if (n_steps == 0 || !(horizon > 0)) throw std::invalid_argument("uniform grid needs n_steps >= 1 and horizon > 0");
  std::vector<double> times(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) times[i] = horizon * static_cast<double>(i) / static_cast<double>(n_steps);
  times.back() = horizon;
  return TimeGrid(std::move(times));
}

std::optional<std::size_t> TimeGrid::snap(double t) const {
  if (times_.empty()) return std::nullopt;
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  std::size_t best = 0;
  double dist = INFINITY;
  for (auto c : {it, it == times_.begin() ? it : it - 1}) {
    if (c == times_.end()) continue;
    const double d = std::abs(*c - t);
    if (d < dist) {
      dist = d;
      best = static_cast<std::size_t>(c - times_.begin());
    }
  }
  if (dist > 1e-9 * span()) return std::nullopt;
  return best;
}

std::size_t TimeGrid::snap_or_throw(double t) const {
  if (auto i = snap(t)) return *i;
  throw std::out_of_range("time " + std::to_string(t) + " is not on the simulation grid");
}

}  // namespace pdml::sim
