#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pdml::sim {

/// One piece of a piecewise-constant parameter schedule, active from `start`
/// until the next piece begins. `values` holds one number, or one per path
/// when `per_path` is set.
struct ParamPiece {
  double start = 0.0;
  std::vector<double> values;
  bool per_path = false;
};

/// External parameter bindings for a script: scalars, per-path vectors for
/// parametric runs, or piecewise-constant schedules in time.
class ParamSet {
 public:
  void set(const std::string& name, double value);
  void set_per_path(const std::string& name, std::vector<double> values);
  void set_schedule(const std::string& name, std::vector<ParamPiece> pieces);
  /// Piecewise-constant scalar schedule over `times` (a ladder).
  void set_ladder(const std::string& name, const std::vector<double>& times, const std::vector<double>& values);

  [[nodiscard]] bool contains(std::string_view name) const;
  [[nodiscard]] const std::vector<ParamPiece>& pieces(std::string_view name) const;
  [[nodiscard]] std::vector<std::string> names() const;

  /// Index of the piece active at time t.
  [[nodiscard]] std::size_t piece_index(std::string_view name, double t) const;
  /// Scalar value at time t, or nullopt when that piece is per-path.
  [[nodiscard]] std::optional<double> scalar_at(std::string_view name, double t) const;

  /// Common length of all per-path pieces (0 when there are none). Throws if
  /// per-path pieces disagree.
  [[nodiscard]] std::size_t per_path_size() const;

  /// Graph input name for piece k: the bare name for single-piece
  /// parameters, `name[k]` otherwise.
  [[nodiscard]] std::string input_name(std::string_view name, std::size_t k) const;

 private:
  std::map<std::string, std::vector<ParamPiece>, std::less<>> params_;
};

}  // namespace pdml::sim
