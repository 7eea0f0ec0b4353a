#pragma once

#include <string>
#include <vector>

namespace pdml::cheyette {

/// Discount curve P(0,t) with log-linear interpolation between (time, df)
/// pillars; P(0,0) = 1 is implied. Log-linear extrapolation past the last
/// pillar continues the last segment's forward rate.
class Curve {
 public:
  Curve() : Curve(std::vector<double>{1.0}, std::vector<double>{1.0}) {}
  Curve(std::vector<double> times, std::vector<double> dfs);

  static Curve flat(double rate, double horizon = 50.0);
  /// CSV with columns time_yr, df.
  static Curve load_csv(const std::string& file);

  [[nodiscard]] double df(double t) const;
  /// Instantaneous forward -d ln P / dt (right derivative; piecewise constant).
  [[nodiscard]] double inst_forward(double t) const;
  [[nodiscard]] double max_time() const { return times_.back(); }

 private:
  std::vector<double> times_;   // includes 0
  std::vector<double> log_df_;
};

struct CurveSet {
  Curve discount;
  Curve forecast;

  /// Flat continuously-compounded 2% discount and 2.2% forecast curves.
  static CurveSet desk_default();
};

}  // namespace pdml::cheyette
