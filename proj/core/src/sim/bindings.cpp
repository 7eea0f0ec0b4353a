#include <algorithm>
#include <stdexcept>

#include "pdml/sim/bindings.h"

namespace pdml::sim {

void ParamSet::set(const std::string& name, double value) { params_[name] = {ParamPiece{0.0, {value}, false}}; }

void ParamSet::set_per_path(const std::string& name, std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("per-path parameter '" + name + "' is empty");
  params_[name] = {ParamPiece{0.0, std::move(values), true}};
}

void ParamSet::set_schedule(const std::string& name, std::vector<ParamPiece> pieces) {
  if (pieces.empty()) throw std::invalid_argument("schedule for '" + name + "' has no pieces");
  if (pieces.front().start != 0.0) throw std::invalid_argument("schedule for '" + name + "' must start at 0");
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    if (k && !(pieces[k].start > pieces[k - 1].start)) {
      throw std::invalid_argument("schedule for '" + name + "' must have increasing start times");
    }
    if (pieces[k].values.empty() || (!pieces[k].per_path && pieces[k].values.size() != 1)) {
      throw std::invalid_argument("schedule for '" + name + "' has a malformed piece");
    }
  }
  params_[name] = std::move(pieces);
}

void ParamSet::set_ladder(const std::string& name, const std::vector<double>& times, const std::vector<double>& values) {
  if (times.size() != values.size()) throw std::invalid_argument("ladder '" + name + "' times/values size mismatch");
  std::vector<ParamPiece> pieces;
  for (std::size_t i = 0; i < times.size(); ++i) pieces.push_back({times[i], {values[i]}, false});
  set_schedule(name, std::move(pieces));
}

bool ParamSet::contains(std::string_view name) const { return params_.find(name) != params_.end(); }

const std::vector<ParamPiece>& ParamSet::pieces(std::string_view name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("parameter '" + std::string(name) + "' is not bound");
  return it->second;
}

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : params_) out.push_back(k);
  return out;
}

std::size_t ParamSet::piece_index(std::string_view name, double t) const {
  const auto& ps = pieces(name);
  std::size_t k = 0;
  for (std::size_t i = 1; i < ps.size(); ++i) {
    if (ps[i].start <= t + 1e-12 * std::max(1.0, std::abs(t))) k = i;
  }
  return k;
}

std::optional<double> ParamSet::scalar_at(std::string_view name, double t) const {
  const auto& p = pieces(name)[piece_index(name, t)];
  if (p.per_path) return std::nullopt;
  return p.values[0];
}

std::size_t ParamSet::per_path_size() const {
  std::size_t n = 0;
  for (const auto& [name, ps] : params_) {
    for (const auto& p : ps) {
      if (!p.per_path) continue;
      if (n && p.values.size() != n) {
        throw std::invalid_argument("per-path parameter '" + name + "' has " + std::to_string(p.values.size()) +
                                    " values, expected " + std::to_string(n));
      }
      n = p.values.size();
    }
  }
  return n;
}

std::string ParamSet::input_name(std::string_view name, std::size_t k) const {
  if (pieces(name).size() == 1) return std::string(name);
  return std::string(name) + "[" + std::to_string(k) + "]";
}

}  // namespace pdml::sim
