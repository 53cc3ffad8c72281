#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "act/common.hpp"
#include "act/cp_als.hpp"
#include "act/tensor.hpp"

namespace act {

namespace detail {

template <typename Scalar>
Scalar median_of(std::vector<Scalar>& v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  if (v.size() % 2 == 1) return v[m];
  return (v[m - 1] + v[m]) / Scalar(2);
}

}  // namespace detail

/// Cross-sectional median fill. Each missing cell takes the median of the
/// observed values for its (month, characteristic) pair; when a pair has no
/// observations the characteristic's global median steps in, and failing
/// that, zero. Observed cells pass through untouched, which makes the fill
/// idempotent.
template <typename Scalar>
Tensor3<Scalar> impute_median(const MaskedTensor<Scalar>& x) {
  const Index t = x.dim_time(), n = x.dim_firm(), l = x.dim_char();
  Vector<Scalar> global(l);
  std::vector<bool> has_global(static_cast<std::size_t>(l), false);
  std::vector<Scalar> pool;
  for (Index il = 0; il < l; ++il) {
    pool.clear();
    for (Index it = 0; it < t; ++it)
      for (Index in = 0; in < n; ++in)
        if (x.observed(it, in, il)) pool.push_back(x.value(it, in, il));
    if (!pool.empty()) {
      global[il] = detail::median_of(pool);
      has_global[static_cast<std::size_t>(il)] = true;
    } else {
      global[il] = 0;
    }
  }
  Tensor3<Scalar> out(t, n, l);
  for (Index it = 0; it < t; ++it)
    for (Index il = 0; il < l; ++il) {
      pool.clear();
      for (Index in = 0; in < n; ++in)
        if (x.observed(it, in, il)) pool.push_back(x.value(it, in, il));
      const Scalar fill = !pool.empty()
                              ? detail::median_of(pool)
                              : (has_global[static_cast<std::size_t>(il)]
                                     ? global[il]
                                     : Scalar(0));
      for (Index in = 0; in < n; ++in)
        out(it, in, il) =
            x.observed(it, in, il) ? x.value(it, in, il) : fill;
    }
  return out;
}

/// Vanilla baseline: one unclustered whole-panel fit; the reconstruction is
/// returned for every cell.
template <typename Scalar>
std::pair<Tensor3<Scalar>, FitReport<Scalar>> impute_cp(
    const MaskedTensor<Scalar>& x, const SolverConfig<Scalar>& cfg) {
  auto [model, report] = fit_cp(x, cfg);
  return {reconstruct(model), std::move(report)};
}

}  // namespace act
