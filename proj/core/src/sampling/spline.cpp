#include <algorithm>
#include <stdexcept>

#include "pdml/sampling/spline.h"

namespace pdml::sampling {

NaturalCubicSpline::NaturalCubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw std::invalid_argument("spline needs at least two matching knots");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("spline knots must be strictly increasing");
  }
  m_.assign(n, 0.0);
  if (n == 2) return;
  // Tridiagonal system for interior second derivatives (Thomas algorithm).
  const std::size_t k = n - 2;
  std::vector<double> a(k), b(k), c(k), d(k);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
    a[i - 1] = h0;
    b[i - 1] = 2.0 * (h0 + h1);
    c[i - 1] = h1;
    d[i - 1] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
  }
  for (std::size_t i = 1; i < k; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  m_[k] = d[k - 1] / b[k - 1];
  for (std::size_t i = k - 1; i-- > 0;) m_[i + 1] = (d[i] - c[i] * m_[i + 2]) / b[i];
}

double NaturalCubicSpline::operator()(double t) const {
  const std::size_t n = x_.size();
  if (t <= x_.front() || t >= x_.back()) {
    const bool left = t <= x_.front();
    const std::size_t i = left ? 0 : n - 2;
    const double h = x_[i + 1] - x_[i];
    const double slope = (y_[i + 1] - y_[i]) / h + (left ? -h * (2 * m_[i] + m_[i + 1]) / 6.0 : h * (m_[i] + 2 * m_[i + 1]) / 6.0);
    return left ? y_[0] + slope * (t - x_[0]) : y_[n - 1] + slope * (t - x_[n - 1]);
  }
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
  const double h = x_[i + 1] - x_[i];
  const double A = (x_[i + 1] - t) / h, B = (t - x_[i]) / h;
  return A * y_[i] + B * y_[i + 1] + ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
}

}  // namespace pdml::sampling
