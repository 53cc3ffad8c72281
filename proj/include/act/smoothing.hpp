#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "act/common.hpp"
#include "act/tensor.hpp"

namespace act {

enum class SmootherKind { none, cma, ema, kalman };

/// Parameters for the per-series temporal filters. The Kalman prior defaults
/// are deliberate conventions rather than estimates: the prior mean falls
/// back to the first observation and the prior variance to 1e4 * r, which is
/// diffuse on the scale of the measurement noise.
template <typename Scalar>
struct SmootherSpec {
  SmootherKind kind = SmootherKind::none;
  int delta = 5;                  // centered window width, odd
  Scalar theta = static_cast<Scalar>(0.5);
  Scalar h = static_cast<Scalar>(1e-2);   // process-noise variance
  Scalar r = static_cast<Scalar>(1e-1);   // measurement-noise variance
  Scalar prior_mean = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar prior_var = std::numeric_limits<Scalar>::quiet_NaN();

  void validate() const {
    switch (kind) {
      case SmootherKind::none:
        return;
      case SmootherKind::cma:
        if (delta < 1 || delta % 2 == 0)
          throw ConfigError("SmootherSpec: cma window must be odd and >= 1");
        return;
      case SmootherKind::ema:
        if (!(theta > 0 && theta < 1))
          throw ConfigError("SmootherSpec: ema theta must lie in (0, 1)");
        return;
      case SmootherKind::kalman:
        if (!(h > 0) || !(r > 0))
          throw ConfigError(
              "SmootherSpec: kalman variances must be positive");
        if (!std::isnan(static_cast<double>(prior_var)) && !(prior_var > 0))
          throw ConfigError("SmootherSpec: kalman prior variance must be positive");
        return;
    }
  }
};

/// Centered moving average with window half-width (delta - 1) / 2. Windows
/// shrink at the series boundaries so the first and last points average over
/// whatever part of the window exists.
template <typename Derived>
Vector<typename Derived::Scalar> cma(const Eigen::MatrixBase<Derived>& series,
                                     int delta) {
  using Scalar = typename Derived::Scalar;
  if (delta < 1 || delta % 2 == 0)
    throw ConfigError("cma: window width must be odd and >= 1");
  const Index t = series.size();
  const Index m = (delta - 1) / 2;
  Vector<Scalar> out(t);
  for (Index i = 0; i < t; ++i) {
    const Index lo = std::max<Index>(0, i - m);
    const Index hi = std::min<Index>(t - 1, i + m);
    Scalar sum = 0;
    for (Index j = lo; j <= hi; ++j) sum += series[j];
    out[i] = sum / static_cast<Scalar>(hi - lo + 1);
  }
  return out;
}

/// First-order exponential smoother: the first point passes through, then
/// out_t = theta * x_t + (1 - theta) * out_{t-1}.
template <typename Derived>
Vector<typename Derived::Scalar> ema(const Eigen::MatrixBase<Derived>& series,
                                     typename Derived::Scalar theta) {
  using Scalar = typename Derived::Scalar;
  if (!(theta > 0 && theta < 1))
    throw ConfigError("ema: theta must lie in (0, 1)");
  const Index t = series.size();
  Vector<Scalar> out(t);
  if (t == 0) return out;
  out[0] = series[0];
  for (Index i = 1; i < t; ++i)
    out[i] = theta * series[i] + (Scalar(1) - theta) * out[i - 1];
  return out;
}

/*
 * Random-walk (local level) Kalman smoother.
 *
 * State transition adds process variance h per step, measurements carry
 * variance r. The forward pass starts from the prior (mean, variance) and
 * updates against the first point without a transition; the backward pass is
 * the fixed-interval RTS recursion, which for this model interpolates the
 * filtered means with gains P_t / (P_t + h).
 *
 * NaN prior arguments select the defaults: prior mean = first point, prior
 * variance = 1e4 * r.
 */
template <typename Derived>
Vector<typename Derived::Scalar> kalman_smooth(
    const Eigen::MatrixBase<Derived>& series, typename Derived::Scalar h,
    typename Derived::Scalar r,
    typename Derived::Scalar prior_mean =
        std::numeric_limits<typename Derived::Scalar>::quiet_NaN(),
    typename Derived::Scalar prior_var =
        std::numeric_limits<typename Derived::Scalar>::quiet_NaN()) {
  using Scalar = typename Derived::Scalar;
  if (!(h > 0) || !(r > 0))
    throw ConfigError("kalman_smooth: variances must be positive");
  const Index t = series.size();
  Vector<Scalar> out(t);
  if (t == 0) return out;
  if (std::isnan(static_cast<double>(prior_mean))) prior_mean = series[0];
  if (std::isnan(static_cast<double>(prior_var)))
    prior_var = static_cast<Scalar>(1e4) * r;
  if (!(prior_var > 0))
    throw ConfigError("kalman_smooth: prior variance must be positive");

  Vector<Scalar> mean_f(t), var_f(t);
  Scalar m = prior_mean, p = prior_var;
  for (Index i = 0; i < t; ++i) {
    if (i > 0) p += h;
    const Scalar gain = p / (p + r);
    m += gain * (series[i] - m);
    p *= (Scalar(1) - gain);
    mean_f[i] = m;
    var_f[i] = p;
  }
  out[t - 1] = mean_f[t - 1];
  for (Index i = t - 2; i >= 0; --i) {
    const Scalar gain = var_f[i] / (var_f[i] + h);
    out[i] = mean_f[i] + gain * (out[i + 1] - mean_f[i]);
  }
  return out;
}

template <typename Derived>
Vector<typename Derived::Scalar> smooth_series(
    const Eigen::MatrixBase<Derived>& series,
    const SmootherSpec<typename Derived::Scalar>& spec) {
  spec.validate();
  switch (spec.kind) {
    case SmootherKind::none: return series;
    case SmootherKind::cma: return cma(series, spec.delta);
    case SmootherKind::ema: return ema(series, spec.theta);
    default:
      return kalman_smooth(series, spec.h, spec.r, spec.prior_mean,
                           spec.prior_var);
  }
}

/// Applies the chosen smoother to every (firm, characteristic) series of a
/// dense tensor. Series run over disjoint memory, so they are processed in
/// parallel without affecting the result.
template <typename Scalar>
Tensor3<Scalar> smooth_tensor(const Tensor3<Scalar>& x,
                              const SmootherSpec<Scalar>& spec) {
  spec.validate();
  if (spec.kind == SmootherKind::none) return x;
  const Index t = x.dim_time(), n = x.dim_firm(), l = x.dim_char();
  Tensor3<Scalar> out(t, n, l);
  parallel_for(n * l, [&](Index job) {
    const Index in = job / l;
    const Index il = job % l;
    Vector<Scalar> series(t);
    for (Index it = 0; it < t; ++it) series[it] = x(it, in, il);
    const Vector<Scalar> smoothed = smooth_series(series, spec);
    for (Index it = 0; it < t; ++it) out(it, in, il) = smoothed[it];
  });
  return out;
}

}  // namespace act
