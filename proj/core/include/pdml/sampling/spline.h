#pragma once

#include <vector>

namespace pdml::sampling {

/// Natural cubic spline through (x_i, y_i); linear beyond the end knots.
class NaturalCubicSpline {
 public:
  NaturalCubicSpline(std::vector<double> x, std::vector<double> y);
  [[nodiscard]] double operator()(double t) const;

 private:
  std::vector<double> x_, y_, m_;  // m_: second derivatives at knots
};

}  // namespace pdml::sampling
