#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace pdml::sim {

/// Strictly increasing simulation times starting at 0.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> times);

  /// Grid containing 0 and every required time, with each gap between
  /// consecutive required times split into equal steps no longer than max_dt.
  static TimeGrid build(std::vector<double> required, double max_dt);
  static TimeGrid uniform(double horizon, std::size_t n_steps);

  [[nodiscard]] const std::vector<double>& times() const { return times_; }
  [[nodiscard]] std::size_t n_steps() const { return times_.empty() ? 0 : times_.size() - 1; }
  [[nodiscard]] double dt(std::size_t i) const { return times_[i + 1] - times_[i]; }
  [[nodiscard]] double span() const { return times_.empty() ? 0.0 : times_.back() - times_.front(); }

  /// Index of the nearest grid time if within 1e-9 * span, else nullopt.
  [[nodiscard]] std::optional<std::size_t> snap(double t) const;
  /// As snap(), throwing std::out_of_range with the offending time.
  [[nodiscard]] std::size_t snap_or_throw(double t) const;

 private:
  std::vector<double> times_;
};

}  // namespace pdml::sim
