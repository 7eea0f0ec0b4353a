#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace pdml {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent child seed for a named randomness source.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) { return mix64(mix64(master) ^ mix64(~tag)); }

/// Counter-based per-path generator: the k-th uniform of path p depends only
/// on (seed, p, k), so batch size and sharding never reorder a path's noise.
class PathRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  PathRng(std::uint64_t seed, std::uint64_t path) : key_(mix64(mix64(seed) ^ (path * kGamma + 0x632be59bd9b4e019ULL))) {}

  /// Uniform on the open interval (0, 1).
  [[nodiscard]] double uniform(std::uint64_t k) const {
    const std::uint64_t bits = mix64(key_ + (k + 1) * kGamma);
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal with index k via Box-Muller on uniforms (2j, 2j+1):
  /// even k takes the cosine branch, odd k the sine branch.
  [[nodiscard]] double normal(std::uint64_t k) const {
    const std::uint64_t j = k / 2;
    const double r = std::sqrt(-2.0 * std::log(uniform(2 * j)));
    const double th = 2.0 * std::numbers::pi * uniform(2 * j + 1);
    return (k % 2 == 0) ? r * std::cos(th) : r * std::sin(th);
  }

  /// out[i] = normal(i) for i < out.size().
  void fill_normals(std::span<double> out) const {
    const std::size_t n = out.size();
    for (std::size_t k = 0; k + 1 < n; k += 2) {
      const double r = std::sqrt(-2.0 * std::log(uniform(k)));
      const double th = 2.0 * std::numbers::pi * uniform(k + 1);
      out[k] = r * std::cos(th);
      out[k + 1] = r * std::sin(th);
    }
    if (n % 2 == 1) out[n - 1] = normal(n - 1);
  }

 private:
  std::uint64_t key_;
};

}  // namespace pdml
