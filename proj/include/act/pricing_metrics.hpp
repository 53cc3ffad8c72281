#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "act/common.hpp"

namespace act {

/// Pricing-error summary over a fitted factor model's intercepts.
template <typename Scalar>
struct AlphaErrors {
  Scalar rmse = 0;
  Scalar mae = 0;
};

template <typename Scalar>
AlphaErrors<Scalar> alpha_errors(const Vector<Scalar>& alpha) {
  if (alpha.size() == 0)
    throw EmptyObservationError("alpha_errors: no portfolios");
  AlphaErrors<Scalar> out;
  out.rmse = std::sqrt(alpha.squaredNorm() / static_cast<Scalar>(alpha.size()));
  out.mae = alpha.cwiseAbs().mean();
  return out;
}

namespace detail {

// Descending ranks with averaged ties: the largest value gets rank 1, and a
// run of equal values shares the mean of the ranks it spans.
template <typename Scalar>
std::vector<double> descending_ranks(const Vector<Scalar>& v) {
  const Index n = v.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return v[a] > v[b]; });
  std::vector<double> ranks(static_cast<std::size_t>(n));
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && v[order[static_cast<std::size_t>(j + 1)]] ==
                            v[order[static_cast<std::size_t>(i)]])
      ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Index k = i; k <= j; ++k)
      ranks[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] =
          shared;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

/// Mean absolute rank error between forecast and realized cross-sections,
/// averaged over months. Rank 1 is the highest value; ties share averaged
/// ranks.
template <typename Scalar>
double mae_rank(const Matrix<Scalar>& forecasts,
                const Matrix<Scalar>& realized) {
  if (forecasts.rows() != realized.rows() ||
      forecasts.cols() != realized.cols())
    throw StructuralError("mae_rank: shape mismatch");
  if (forecasts.size() == 0)
    throw EmptyObservationError("mae_rank: no forecasts");
  const Index n = forecasts.rows(), t = forecasts.cols();
  double total = 0;
  for (Index it = 0; it < t; ++it) {
    const std::vector<double> rf =
        detail::descending_ranks<Scalar>(forecasts.col(it));
    const std::vector<double> rr =
        detail::descending_ranks<Scalar>(realized.col(it));
    double month = 0;
    for (Index i = 0; i < n; ++i)
      month += std::abs(rf[static_cast<std::size_t>(i)] -
                        rr[static_cast<std::size_t>(i)]);
    total += month / static_cast<double>(n);
  }
  return total / static_cast<double>(t);
}

/// Information coefficient: the monthly cross-sectional Pearson correlation
/// between forecast and realized returns, averaged over months. Months where
/// either side is constant are skipped and tallied through skipped_months;
/// if every month degenerates the coefficient is undefined and an exception
/// is raised.
template <typename Scalar>
double information_coefficient(const Matrix<Scalar>& forecasts,
                               const Matrix<Scalar>& realized,
                               Index* skipped_months = nullptr) {
  if (forecasts.rows() != realized.rows() ||
      forecasts.cols() != realized.cols())
    throw StructuralError("information_coefficient: shape mismatch");
  const Index n = forecasts.rows(), t = forecasts.cols();
  if (n < 2)
    throw ConfigError("information_coefficient: need at least two portfolios");
  double total = 0;
  Index months = 0;
  for (Index it = 0; it < t; ++it) {
    const Vector<Scalar> f = forecasts.col(it);
    const Vector<Scalar> r = realized.col(it);
    const Scalar fm = f.mean(), rm = r.mean();
    const double sf =
        std::sqrt(static_cast<double>((f.array() - fm).square().sum()));
    const double sr =
        std::sqrt(static_cast<double>((r.array() - rm).square().sum()));
    if (sf == 0 || sr == 0) continue;
    const double cov =
        static_cast<double>(((f.array() - fm) * (r.array() - rm)).sum());
    total += cov / (sf * sr);
    ++months;
  }
  if (skipped_months) *skipped_months = t - months;
  if (months == 0)
    throw EmptyObservationError(
        "information_coefficient: every month was degenerate");
  return total / static_cast<double>(months);
}

/// Annualized Sharpe ratio of a monthly return series: sqrt(12) times the
/// mean over the sample standard deviation (n - 1 in the denominator).
/// Undefined (nullopt) for series shorter than two months or with zero
/// volatility.
template <typename Scalar>
std::optional<double> annualized_sharpe(const Vector<Scalar>& monthly) {
  const Index n = monthly.size();
  if (n < 2) return std::nullopt;
  const double mean = static_cast<double>(monthly.mean());
  const double ss =
      static_cast<double>((monthly.array() - monthly.mean()).square().sum());
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0) return std::nullopt;
  return std::sqrt(12.0) * mean / sd;
}

/// Long-short decile portfolio track record.
template <typename Scalar>
struct TopMinusBottom {
  Vector<Scalar> monthly;          // spread per month
  Index leg_size = 0;              // names per leg
  bool small_cross_section = false;  // fewer than ten portfolios
  std::optional<double> sharpe;
};

/*
 * Monthly top-minus-bottom decile spread: portfolios are sorted by the
 * forecast each month and the equal-weighted realized return of the top
 * floor(N/10) names is netted against the bottom floor(N/10). Below ten
 * portfolios the legs shrink to a single name and the result is flagged.
 * Ties at a decile boundary go to the lower portfolio index.
 */
template <typename Scalar>
TopMinusBottom<Scalar> top_minus_bottom(const Matrix<Scalar>& forecasts,
                                        const Matrix<Scalar>& realized) {
  if (forecasts.rows() != realized.rows() ||
      forecasts.cols() != realized.cols())
    throw StructuralError("top_minus_bottom: shape mismatch");
  const Index n = forecasts.rows(), t = forecasts.cols();
  if (n < 1)
    throw EmptyObservationError("top_minus_bottom: no portfolios");
  TopMinusBottom<Scalar> out;
  out.small_cross_section = n < 10;
  out.leg_size = out.small_cross_section ? 1 : n / 10;
  const Index leg = out.leg_size;
  out.monthly.resize(t);
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index it = 0; it < t; ++it) {
    for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      return forecasts(a, it) > forecasts(b, it);
    });
    Scalar top = 0, bottom = 0;
    for (Index i = 0; i < leg; ++i) {
      top += realized(order[static_cast<std::size_t>(i)], it);
      bottom += realized(order[static_cast<std::size_t>(n - 1 - i)], it);
    }
    out.monthly[it] = (top - bottom) / static_cast<Scalar>(leg);
  }
  out.sharpe = annualized_sharpe(out.monthly);
  return out;
}

/// Full downstream summary for one factor model.
struct PricingScores {
  double alpha_rmse = 0;
  double alpha_mae = 0;
  double mae_rank = 0;
  double information_coefficient = 0;
  Index ic_skipped_months = 0;
  double tb_mean_monthly = 0;
  std::optional<double> tb_sharpe;
  bool tb_small_cross_section = false;
};

template <typename Scalar>
PricingScores score_pricing(const Vector<Scalar>& alpha,
                            const Matrix<Scalar>& forecasts,
                            const Matrix<Scalar>& realized) {
  PricingScores out;
  const AlphaErrors<Scalar> ae = alpha_errors(alpha);
  out.alpha_rmse = static_cast<double>(ae.rmse);
  out.alpha_mae = static_cast<double>(ae.mae);
  out.mae_rank = mae_rank(forecasts, realized);
  out.information_coefficient =
      information_coefficient(forecasts, realized, &out.ic_skipped_months);
  const TopMinusBottom<Scalar> tb = top_minus_bottom(forecasts, realized);
  out.tb_mean_monthly = static_cast<double>(tb.monthly.mean());
  out.tb_sharpe = tb.sharpe;
  out.tb_small_cross_section = tb.small_cross_section;
  return out;
}

}  // namespace act
