#pragma once

#include <cmath>
#include <optional>

#include "act/common.hpp"
#include "act/masking.hpp"
#include "act/tensor.hpp"

namespace act {

struct ImputationScores {
  double rmse = 0;
  double mae = 0;
  double mape = 0;              // over cells with nonzero truth
  Index mape_excluded = 0;      // zero-truth cells left out of mape
  std::optional<double> r2;     // empty when the truth has no variance
};

/// Held-out accuracy of an imputed tensor against a value-carrying plan.
/// R^2 is taken about the held-out mean; when every true value is identical
/// the ratio is undefined and the field is left empty.
template <typename Scalar>
ImputationScores score_imputation(const Tensor3<Scalar>& imputed,
                                  const HoldoutPlan<Scalar>& plan) {
  if (plan.cells.empty())
    throw EmptyObservationError("score_imputation: plan holds no cells");
  const Index t = imputed.dim_time(), n = imputed.dim_firm(),
              l = imputed.dim_char();
  double se = 0, ae = 0, ape = 0, mean = 0;
  Index ape_n = 0;
  ImputationScores out;
  for (const auto& cell : plan.cells) {
    if (cell.t < 0 || cell.t >= t || cell.n < 0 || cell.n >= n || cell.l < 0 ||
        cell.l >= l)
      throw StructuralError("score_imputation: plan cell outside the tensor");
    const double truth = static_cast<double>(cell.value);
    const double fit = static_cast<double>(imputed(cell.t, cell.n, cell.l));
    const double err = fit - truth;
    se += err * err;
    ae += std::abs(err);
    if (truth != 0.0) {
      ape += std::abs(err / truth);
      ++ape_n;
    } else {
      ++out.mape_excluded;
    }
    mean += truth;
  }
  const double count = static_cast<double>(plan.cells.size());
  mean /= count;
  out.rmse = std::sqrt(se / count);
  out.mae = ae / count;
  out.mape = ape_n == 0 ? 0.0 : ape / static_cast<double>(ape_n);

  double lo = static_cast<double>(plan.cells.front().value);
  double hi = lo, sst = 0;
  for (const auto& cell : plan.cells) {
    const double truth = static_cast<double>(cell.value);
    lo = std::min(lo, truth);
    hi = std::max(hi, truth);
    sst += (truth - mean) * (truth - mean);
  }
  if (lo != hi) out.r2 = 1.0 - se / sst;
  return out;
}

}  // namespace act
