#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

#include "vlodtta/errors.hpp"
#include "vlodtta/linalg.hpp"
#include "vlodtta/random.hpp"

namespace vlodtta {

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

inline double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

/// Bottleneck adapter added residually to region features:
/// v' = v + GELU(v W_down + b_down) W_up + b_up, hidden width d / r.
struct AdapterParams {
  int reduction = 16;
  Matrix w_down;     // d x h
  RowVector b_down;  // h
  Matrix w_up;       // h x d
  RowVector b_up;    // d

  int dim() const { return static_cast<int>(w_down.rows()); }
  int hidden() const { return static_cast<int>(w_down.cols()); }

  /// W_down ~ N(0, 1) from `seed`; b_down, W_up and b_up are zero, so the
  /// adapter path is identically zero.
  static AdapterParams zero_init(int dim, int reduction, std::uint64_t seed) {
    if (reduction < 1 || dim < 1 || dim % reduction != 0) {
      throw ConfigError("adapter reduction must divide the feature dimension");
    }
    const int h = dim / reduction;
    AdapterParams p;
    p.reduction = reduction;
    p.w_down.resize(dim, h);
    Rng rng = Rng(seed).split(0xada);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < h; ++j) p.w_down(i, j) = rng.normal();
    p.b_down = RowVector::Zero(h);
    p.w_up = Matrix::Zero(h, dim);
    p.b_up = RowVector::Zero(dim);
    return p;
  }

  friend bool operator==(const AdapterParams& a, const AdapterParams& b) {
    return a.reduction == b.reduction && a.w_down == b.w_down && a.b_down == b.b_down && a.w_up == b.w_up &&
           a.b_up == b.b_up;
  }
};

inline Matrix apply_adapter(const Matrix& features, const AdapterParams& phi) {
  detail::require(features.cols() == phi.dim(), "apply_adapter: feature dimension differs from adapter");
  Matrix hidden = (features * phi.w_down).rowwise() + phi.b_down;
  hidden = hidden.unaryExpr([](double x) { return gelu(x); });
  return (features + hidden * phi.w_up).rowwise() + phi.b_up;
}

struct ParamCount {
  long long weight_only = 0;
  long long with_bias = 0;
};

/// 2 d^2 / r weights; biases add d / r + d.
inline ParamCount adapter_param_count(long long dim, long long reduction) {
  if (reduction < 1 || dim < 1 || dim % reduction != 0) {
    throw ConfigError("adapter reduction must divide the feature dimension");
  }
  const long long h = dim / reduction;
  return {2 * dim * h, 2 * dim * h + h + dim};
}

/// Adapter parameters and prompt residual, with the snapshot they reset to.
class AdaptState {
 public:
  AdaptState(AdapterParams phi, RowVector delta)
      : phi(std::move(phi)), delta(std::move(delta)), phi0_(this->phi), delta0_(this->delta) {}

  static AdaptState zero_init(int dim, int reduction, std::uint64_t seed) {
    return AdaptState(AdapterParams::zero_init(dim, reduction, seed), RowVector::Zero(dim));
  }

  void reset() {
    phi = phi0_;
    delta = delta0_;
  }

  bool at_snapshot() const { return phi == phi0_ && delta == delta0_; }
  const AdapterParams& phi0() const { return phi0_; }
  const RowVector& delta0() const { return delta0_; }

  AdapterParams phi;
  RowVector delta;

 private:
  AdapterParams phi0_;
  RowVector delta0_;
};

}  // namespace vlodtta
