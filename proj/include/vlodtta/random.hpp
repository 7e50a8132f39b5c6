#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "vlodtta/linalg.hpp"

namespace vlodtta {

/// Counter-based generator: output n of a stream is mix(key, n), so streams
/// are pure functions of their key and can be split without shared state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc908ULL)) {}

  /// Independent child stream labelled by `stream`.
  Rng split(std::uint64_t stream) const { return Rng(key_, stream); }

  std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on the closed range [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  double normal() {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  RowVector normal_vector(int dim) {
    RowVector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = normal();
    return v;
  }

  RowVector unit_vector(int dim) {
    RowVector v = normal_vector(dim);
    double n = v.norm();
    while (n < 1e-6) {
      v = normal_vector(dim);
      n = v.norm();
    }
    return v / n;
  }

 private:
  Rng(std::uint64_t parent_key, std::uint64_t stream) : key_(mix(parent_key ^ mix(stream + 0xbb67ae8584caa73bULL))) {}

  // SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace vlodtta
