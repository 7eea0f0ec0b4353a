#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pdml/cheyette/curves.h"
#include "pdml/util/csv.h"

namespace pdml::cheyette {

Curve::Curve(std::vector<double> times, std::vector<double> dfs) {
  if (times.size() != dfs.size() || times.empty()) throw std::invalid_argument("curve needs matching time/df pillars");
  if (times.front() != 0.0) {
    times.insert(times.begin(), 0.0);
    dfs.insert(dfs.begin(), 1.0);
  }
  if (std::abs(dfs.front() - 1.0) > 1e-14) throw std::invalid_argument("curve must have df(0) = 1");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(dfs[i] > 0)) throw std::invalid_argument("curve discount factors must be positive");
    if (i && !(times[i] > times[i - 1])) throw std::invalid_argument("curve pillar times must be strictly increasing");
  }
  if (times.size() == 1) {
    times.push_back(1.0);
    dfs.push_back(1.0);
  }
  times_ = std::move(times);
  log_df_.resize(dfs.size());
  std::transform(dfs.begin(), dfs.end(), log_df_.begin(), [](double d) { return std::log(d); });
}

Curve Curve::flat(double rate, double horizon) { return Curve({0.0, horizon}, {1.0, std::exp(-rate * horizon)}); }

Curve Curve::load_csv(const std::string& file) {
  const auto t = csv::read(file);
  return Curve(t.numeric("time_yr"), t.numeric("df"));
}

namespace {

std::size_t segment(const std::vector<double>& times, double t) {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
  return std::min(k, times.size() - 2);
}

}  // namespace

double Curve::df(double t) const {
  if (t < 0) throw std::invalid_argument("curve queried at negative time");
  const std::size_t k = segment(times_, t);
  const double w = (t - times_[k]) / (times_[k + 1] - times_[k]);
  return std::exp(log_df_[k] + w * (log_df_[k + 1] - log_df_[k]));
}

double Curve::inst_forward(double t) const {
  const std::size_t k = segment(times_, std::max(t, 0.0));
  return -(log_df_[k + 1] - log_df_[k]) / (times_[k + 1] - times_[k]);
}

CurveSet CurveSet::desk_default() { return {Curve::flat(0.02), Curve::flat(0.022)}; }

}  // namespace pdml::cheyette
