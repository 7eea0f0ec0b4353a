#pragma once

#include <cmath>
#include <string>
#include <string_view>

namespace pdml::graph {

/// Smooth hidden-layer activations; each has first and second derivatives
/// everywhere (ReLU is deliberately absent).
enum class Activation { Softplus, Elu, Sigmoid, Swish };

[[nodiscard]] std::string_view to_string(Activation a);
[[nodiscard]] Activation parse_activation(std::string_view name);

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double activation_value(Activation a, double x) {
  switch (a) {
    case Activation::Softplus: return std::log1p(std::exp(-std::abs(x))) + (x > 0 ? x : 0.0);
    case Activation::Elu: return x > 0 ? x : std::expm1(x);
    case Activation::Sigmoid: return sigmoid(x);
    case Activation::Swish: return x * sigmoid(x);
  }
  return 0.0;
}

inline double activation_d1(Activation a, double x) {
  switch (a) {
    case Activation::Softplus: return sigmoid(x);
    case Activation::Elu: return x > 0 ? 1.0 : std::exp(x);
    case Activation::Sigmoid: {
      const double s = sigmoid(x);
      return s * (1 - s);
    }
    case Activation::Swish: {
      const double s = sigmoid(x);
      return s + x * s * (1 - s);
    }
  }
  return 0.0;
}

inline double activation_d2(Activation a, double x) {
  switch (a) {
    case Activation::Softplus: {
      const double s = sigmoid(x);
      return s * (1 - s);
    }
    case Activation::Elu: return x > 0 ? 0.0 : std::exp(x);
    case Activation::Sigmoid: {
      const double s = sigmoid(x);
      return s * (1 - s) * (1 - 2 * s);
    }
    case Activation::Swish: {
      const double s = sigmoid(x);
      return s * (1 - s) * (2 + x * (1 - 2 * s));
    }
  }
  return 0.0;
}

}  // namespace pdml::graph
