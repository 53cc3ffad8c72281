#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "act/common.hpp"
#include "act/tensor.hpp"

namespace act {

/// Monthly market data aligned with a panel's time and firm axes. Missing
/// returns are NaN; zero market capitalization carries no portfolio weight.
template <typename Scalar>
struct MarketData {
  Matrix<Scalar> returns;    // T x N, NaN = missing
  Matrix<Scalar> mcap;       // T x N, nonnegative
  Vector<Scalar> risk_free;  // T

  void validate() const {
    if (returns.rows() != mcap.rows() || returns.cols() != mcap.cols() ||
        risk_free.size() != returns.rows())
      throw StructuralError("MarketData: axes disagree");
    for (Index t = 0; t < mcap.rows(); ++t)
      for (Index i = 0; i < mcap.cols(); ++i)
        if (std::isfinite(static_cast<double>(mcap(t, i))) && mcap(t, i) < 0)
          throw StructuralError("MarketData: negative market cap");
  }
};

/// Dense fourth-order array, index order (p, q, l, t) with t fastest.
template <typename Scalar>
struct Tensor4 {
  Index d0 = 0, d1 = 0, d2 = 0, d3 = 0;
  Vector<Scalar> data;

  Tensor4() = default;
  Tensor4(Index a, Index b, Index c, Index d)
      : d0(a), d1(b), d2(c), d3(d), data(Vector<Scalar>::Zero(a * b * c * d)) {}

  Index offset(Index i, Index j, Index k, Index m) const {
    return ((i * d1 + j) * d2 + k) * d3 + m;
  }
  Scalar operator()(Index i, Index j, Index k, Index m) const {
    return data[offset(i, j, k, m)];
  }
  Scalar& operator()(Index i, Index j, Index k, Index m) {
    return data[offset(i, j, k, m)];
  }
  Index size() const { return data.size(); }
};

/// Double-sorted portfolio excess returns: size buckets x characteristic
/// sub-buckets x non-size characteristics x months. Baskets that ended up
/// empty are NaN with a zero count.
template <typename Scalar>
struct ReturnTensor {
  Index p = 0, q = 0, chars = 0, months = 0;
  Vector<Scalar> values;               // (p, q, l, t), t fastest
  std::vector<Index> counts;           // same layout
  std::vector<std::string> char_labels;  // the non-size characteristics
  std::vector<std::string> month_labels;

  Index offset(Index ip, Index iq, Index il, Index it) const {
    return ((ip * q + iq) * chars + il) * months + it;
  }
  Scalar value(Index ip, Index iq, Index il, Index it) const {
    return values[offset(ip, iq, il, it)];
  }
  Index count(Index ip, Index iq, Index il, Index it) const {
    return counts[static_cast<std::size_t>(offset(ip, iq, il, it))];
  }
};

namespace detail {

// Equal-count bucket of a 0-based rank among n items split into b buckets.
inline Index bucket_of(Index rank, Index n, Index b) {
  return rank * b / n;
}

// Ascending sort by value with ties broken by the firm's label, so the
// result is invariant to how the firm axis happens to be ordered.
template <typename Scalar>
void rank_firms(std::vector<Index>& firms, const std::vector<Scalar>& value,
                const std::vector<std::string>& labels) {
  std::sort(firms.begin(), firms.end(), [&](Index a, Index b) {
    const Scalar va = value[static_cast<std::size_t>(a)];
    const Scalar vb = value[static_cast<std::size_t>(b)];
    if (va != vb) return va < vb;
    return labels[static_cast<std::size_t>(a)] <
           labels[static_cast<std::size_t>(b)];
  });
}

}  // namespace detail

/*
 * Double-sorted value-weighted portfolio construction.
 *
 * Every month, firms with a finite return, positive observed size, and an
 * observed sorting characteristic are ranked into p size buckets and then,
 * within each size bucket, into q sub-buckets per non-size characteristic.
 * Basket (ip, iq, il, t) earns the value-weighted average return of its
 * members minus the risk-free rate. Zero-cap firms stay in the ranking but
 * carry no weight; a basket whose total weight is zero is marked empty.
 */
template <typename Scalar>
ReturnTensor<Scalar> build_return_tensor(const MaskedTensor<Scalar>& panel,
                                         const MarketData<Scalar>& market,
                                         const std::string& size_characteristic,
                                         Index p, Index q) {
  market.validate();
  if (p < 1 || q < 1)
    throw ConfigError("build_return_tensor: bucket counts must be positive");
  const Index t = panel.dim_time(), n = panel.dim_firm(),
              l = panel.dim_char();
  if (market.returns.rows() != t || market.returns.cols() != n)
    throw StructuralError(
        "build_return_tensor: market data does not match the panel axes");
  Index size_idx = -1;
  for (Index il = 0; il < l; ++il)
    if (panel.labels().characteristics[static_cast<std::size_t>(il)] ==
        size_characteristic)
      size_idx = il;
  if (size_idx < 0)
    throw ConfigError("build_return_tensor: characteristic '" +
                      size_characteristic + "' not found in the panel");
  if (l < 2)
    throw ConfigError(
        "build_return_tensor: need at least one non-size characteristic");

  ReturnTensor<Scalar> out;
  out.p = p;
  out.q = q;
  out.chars = l - 1;
  out.months = t;
  out.values = Vector<Scalar>::Constant(
      p * q * (l - 1) * t, std::numeric_limits<Scalar>::quiet_NaN());
  out.counts.assign(static_cast<std::size_t>(p * q * (l - 1) * t), 0);
  out.month_labels = panel.labels().months;
  for (Index il = 0; il < l; ++il)
    if (il != size_idx)
      out.char_labels.push_back(
          panel.labels().characteristics[static_cast<std::size_t>(il)]);

  std::vector<Index> eligible;
  std::vector<Scalar> size_value(static_cast<std::size_t>(n));
  std::vector<Scalar> char_value(static_cast<std::size_t>(n));
  std::vector<Index> members;
  for (Index it = 0; it < t; ++it) {
    eligible.clear();
    for (Index in = 0; in < n; ++in) {
      const double ret = static_cast<double>(market.returns(it, in));
      if (!std::isfinite(ret)) continue;  // no return, out of every basket
      if (!panel.observed(it, in, size_idx)) continue;
      eligible.push_back(in);
      size_value[static_cast<std::size_t>(in)] =
          panel.value(it, in, size_idx);
    }
    if (eligible.empty()) continue;
    detail::rank_firms(eligible, size_value, panel.labels().firms);
    const Index n_elig = static_cast<Index>(eligible.size());

    for (Index ip = 0; ip < p; ++ip) {
      // members of size bucket ip this month
      members.clear();
      for (Index rank = 0; rank < n_elig; ++rank)
        if (detail::bucket_of(rank, n_elig, p) == ip)
          members.push_back(eligible[static_cast<std::size_t>(rank)]);
      if (members.empty()) continue;

      Index out_l = 0;
      for (Index il = 0; il < l; ++il) {
        if (il == size_idx) continue;
        std::vector<Index> sortable;
        for (const Index in : members)
          if (panel.observed(it, in, il)) {
            sortable.push_back(in);
            char_value[static_cast<std::size_t>(in)] = panel.value(it, in, il);
          }
        if (!sortable.empty()) {
          detail::rank_firms(sortable, char_value, panel.labels().firms);
          const Index m = static_cast<Index>(sortable.size());
          for (Index iq = 0; iq < q; ++iq) {
            Scalar weight = 0, ret = 0;
            Index count = 0;
            for (Index rank = 0; rank < m; ++rank) {
              if (detail::bucket_of(rank, m, q) != iq) continue;
              const Index in = sortable[static_cast<std::size_t>(rank)];
              const Scalar w = market.mcap(it, in);
              if (!(w > 0)) continue;  // zero cap: ranked but unweighted
              weight += w;
              ret += w * market.returns(it, in);
              ++count;
            }
            if (count > 0 && weight > 0) {
              const Index at = out.offset(ip, iq, out_l, it);
              out.values[at] = ret / weight - market.risk_free[it];
              out.counts[static_cast<std::size_t>(at)] = count;
            }
          }
        }
        ++out_l;
      }
    }
  }
  return out;
}

/// Dense copy of a return tensor with empty baskets replaced by the basket's
/// own time-series mean, or zero for baskets that never traded.
template <typename Scalar>
Tensor4<Scalar> fill_empty_baskets(const ReturnTensor<Scalar>& rt) {
  Tensor4<Scalar> out(rt.p, rt.q, rt.chars, rt.months);
  for (Index ip = 0; ip < rt.p; ++ip)
    for (Index iq = 0; iq < rt.q; ++iq)
      for (Index il = 0; il < rt.chars; ++il) {
        Scalar sum = 0;
        Index populated = 0;
        for (Index it = 0; it < rt.months; ++it)
          if (rt.count(ip, iq, il, it) > 0) {
            sum += rt.value(ip, iq, il, it);
            ++populated;
          }
        const Scalar fill =
            populated > 0 ? sum / static_cast<Scalar>(populated) : Scalar(0);
        for (Index it = 0; it < rt.months; ++it)
          out(ip, iq, il, it) = rt.count(ip, iq, il, it) > 0
                                    ? rt.value(ip, iq, il, it)
                                    : fill;
      }
  return out;
}

namespace detail {

// Mode-m matricization of a fourth-order tensor; columns run over the
// remaining modes in ascending order with the last one fastest.
template <typename Scalar>
Matrix<Scalar> unfold4(const Tensor4<Scalar>& x, int mode) {
  const Index d[4] = {x.d0, x.d1, x.d2, x.d3};
  Index rows = d[mode], cols = x.size() == 0 ? 0 : x.size() / d[mode];
  Matrix<Scalar> out(rows, cols);
  Index idx[4];
  for (idx[0] = 0; idx[0] < x.d0; ++idx[0])
    for (idx[1] = 0; idx[1] < x.d1; ++idx[1])
      for (idx[2] = 0; idx[2] < x.d2; ++idx[2])
        for (idx[3] = 0; idx[3] < x.d3; ++idx[3]) {
          Index col = 0;
          for (int m = 0; m < 4; ++m)
            if (m != mode) col = col * d[m] + idx[m];
          out(idx[mode], col) = x(idx[0], idx[1], idx[2], idx[3]);
        }
  return out;
}

template <typename Scalar>
Tensor4<Scalar> fold4(const Matrix<Scalar>& m, int mode, Index a, Index b,
                      Index c, Index dd) {
  Tensor4<Scalar> out(a, b, c, dd);
  const Index d[4] = {a, b, c, dd};
  Index idx[4];
  for (idx[0] = 0; idx[0] < a; ++idx[0])
    for (idx[1] = 0; idx[1] < b; ++idx[1])
      for (idx[2] = 0; idx[2] < c; ++idx[2])
        for (idx[3] = 0; idx[3] < dd; ++idx[3]) {
          Index col = 0;
          for (int mm = 0; mm < 4; ++mm)
            if (mm != mode) col = col * d[mm] + idx[mm];
          out(idx[0], idx[1], idx[2], idx[3]) = m(idx[mode], col);
        }
  return out;
}

// x times_mode A' for one of the first three modes: contracts the mode's
// axis against the columns of A (d_mode x k), leaving k in its place.
template <typename Scalar>
Tensor4<Scalar> mode_multiply(const Tensor4<Scalar>& x, int mode,
                              const Matrix<Scalar>& a) {
  Matrix<Scalar> flat = a.transpose() * unfold4(x, mode);
  Index dims[4] = {x.d0, x.d1, x.d2, x.d3};
  dims[mode] = a.cols();
  return fold4(flat, mode, dims[0], dims[1], dims[2], dims[3]);
}

// Leading eigenvectors of M M' with a deterministic sign convention: each
// column's largest-magnitude entry is made positive.
template <typename Scalar>
Matrix<Scalar> leading_left_singular(const Matrix<Scalar>& m, Index k) {
  Matrix<Scalar> gram = m * m.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(gram);
  const Index d = gram.rows();
  Matrix<Scalar> out(d, k);
  for (Index j = 0; j < k; ++j) {
    out.col(j) = eig.eigenvectors().col(d - 1 - j);
    Index arg = 0;
    Scalar best = std::abs(out(0, j));
    for (Index i = 1; i < d; ++i)
      if (std::abs(out(i, j)) > best) {
        best = std::abs(out(i, j));
        arg = i;
      }
    if (out(arg, j) < 0) out.col(j) = -out.col(j);
  }
  return out;
}

}  // namespace detail

template <typename Scalar>
struct PartialTucker {
  Tensor4<Scalar> core;      // kp x kq x kl x T
  Matrix<Scalar> size_loadings;  // P x kp
  Matrix<Scalar> char_loadings;  // Q x kq
  Matrix<Scalar> cross_loadings; // (L-1) x kl
};

/*
 * Higher-order SVD of the portfolio tensor with the time mode left alone.
 *
 * Each of the first three modes gets the leading left singular vectors of
 * its unfolding (computed from the Gram matrix; these tensors are short and
 * wide). The core is the tensor contracted with the three transposed
 * loading matrices, leaving one factor series per (kp, kq, kl) cell.
 */
template <typename Scalar>
PartialTucker<Scalar> hosvd_partial_tucker(const ReturnTensor<Scalar>& rt,
                                           Index kp, Index kq, Index kl) {
  if (kp < 1 || kq < 1 || kl < 1)
    throw ConfigError("hosvd_partial_tucker: mode ranks must be positive");
  if (kp > rt.p || kq > rt.q || kl > rt.chars)
    throw ConfigError(
        "hosvd_partial_tucker: mode ranks exceed the tensor's axes");
  const Tensor4<Scalar> filled = fill_empty_baskets(rt);
  PartialTucker<Scalar> out;
  out.size_loadings = detail::leading_left_singular(
      detail::unfold4(filled, 0), kp);
  out.char_loadings = detail::leading_left_singular(
      detail::unfold4(filled, 1), kq);
  out.cross_loadings = detail::leading_left_singular(
      detail::unfold4(filled, 2), kl);
  Tensor4<Scalar> core = detail::mode_multiply(filled, 0, out.size_loadings);
  core = detail::mode_multiply(core, 1, out.char_loadings);
  out.core = detail::mode_multiply(core, 2, out.cross_loadings);
  return out;
}

/// Expands a partial Tucker decomposition back to a full P x Q x (L-1) x T
/// tensor (used to measure truncation error).
template <typename Scalar>
Tensor4<Scalar> reconstruct_partial_tucker(const PartialTucker<Scalar>& pt) {
  Tensor4<Scalar> x = detail::mode_multiply(
      pt.core, 0, Matrix<Scalar>(pt.size_loadings.transpose()));
  x = detail::mode_multiply(x, 1, Matrix<Scalar>(pt.char_loadings.transpose()));
  return detail::mode_multiply(
      x, 2, Matrix<Scalar>(pt.cross_loadings.transpose()));
}

/// Flattens the core into one factor series per row. The flat index runs
/// p slowest and l fastest: row = p * (kq * kl) + q * kl + l.
template <typename Scalar>
Matrix<Scalar> stack_factors(const Tensor4<Scalar>& core) {
  const Index k = core.d0 * core.d1 * core.d2;
  Matrix<Scalar> out(k, core.d3);
  for (Index ip = 0; ip < core.d0; ++ip)
    for (Index iq = 0; iq < core.d1; ++iq)
      for (Index il = 0; il < core.d2; ++il)
        for (Index it = 0; it < core.d3; ++it)
          out((ip * core.d1 + iq) * core.d2 + il, it) = core(ip, iq, il, it);
  return out;
}

/// Inverse of stack_factors for the given mode ranks.
template <typename Scalar>
Tensor4<Scalar> unstack_factors(const Matrix<Scalar>& stacked, Index kp,
                                Index kq, Index kl) {
  if (stacked.rows() != kp * kq * kl)
    throw StructuralError("unstack_factors: row count does not match ranks");
  Tensor4<Scalar> out(kp, kq, kl, stacked.cols());
  for (Index ip = 0; ip < kp; ++ip)
    for (Index iq = 0; iq < kq; ++iq)
      for (Index il = 0; il < kl; ++il)
        for (Index it = 0; it < stacked.cols(); ++it)
          out(ip, iq, il, it) = stacked((ip * kq + iq) * kl + il, it);
  return out;
}

/// Portfolio return matrix matching the factor stacking order: row
/// (ip, iq, il) with il fastest, one column per month, empties filled.
template <typename Scalar>
Matrix<Scalar> portfolio_matrix(const ReturnTensor<Scalar>& rt) {
  const Tensor4<Scalar> filled = fill_empty_baskets(rt);
  Matrix<Scalar> out(rt.p * rt.q * rt.chars, rt.months);
  for (Index ip = 0; ip < rt.p; ++ip)
    for (Index iq = 0; iq < rt.q; ++iq)
      for (Index il = 0; il < rt.chars; ++il)
        for (Index it = 0; it < rt.months; ++it)
          out((ip * rt.q + iq) * rt.chars + il, it) = filled(ip, iq, il, it);
  return out;
}

namespace detail {

// Predictive regression design for months 1..T-1 (factors) against targets
// 2..T (returns): X is (T-1) x (1 + |selected|) with a leading intercept.
template <typename Scalar>
Matrix<Scalar> regression_design(const Matrix<Scalar>& factors,
                                 const std::vector<Index>& selected) {
  const Index rows = factors.cols() - 1;
  Matrix<Scalar> x(rows, 1 + static_cast<Index>(selected.size()));
  x.col(0).setOnes();
  for (Index j = 0; j < static_cast<Index>(selected.size()); ++j)
    x.col(1 + j) =
        factors.row(selected[static_cast<std::size_t>(j)]).head(rows);
  return x;
}

}  // namespace detail

/// Cross-sectional pricing fit of a candidate factor set: one predictive
/// OLS regression per portfolio, scored as 1 - mean(alpha^2) / Var(mean
/// return). Throws when the portfolios' mean returns have no cross-sectional
/// variance.
template <typename Scalar>
Scalar r2_cross_section(const Matrix<Scalar>& factors,
                        const Matrix<Scalar>& portfolio_returns,
                        const std::vector<Index>& selected) {
  const Index t = factors.cols();
  const Index n = portfolio_returns.rows();
  if (portfolio_returns.cols() != t)
    throw StructuralError("r2_cross_section: factor and return months differ");
  if (t < 3) throw ConfigError("r2_cross_section: too few months");
  Matrix<Scalar> y = portfolio_returns.rightCols(t - 1);  // months 2..T
  Vector<Scalar> mean_ret = y.rowwise().mean();
  const Scalar mu = mean_ret.mean();
  const Scalar var_xs =
      (mean_ret.array() - mu).square().sum() / static_cast<Scalar>(n);
  if (!(var_xs > 0))
    throw ConfigError(
        "r2_cross_section: portfolio mean returns have zero variance");
  Matrix<Scalar> x = detail::regression_design(factors, selected);
  Matrix<Scalar> coef =
      x.completeOrthogonalDecomposition().solve(y.transpose());
  const Scalar mean_alpha_sq =
      coef.row(0).squaredNorm() / static_cast<Scalar>(n);
  return Scalar(1) - mean_alpha_sq / var_xs;
}

/// Greedy forward selection of stacked factors maximizing the
/// cross-sectional R^2; ties go to the lower factor index. The returned
/// path holds the score after each addition.
template <typename Scalar>
std::pair<std::vector<Index>, std::vector<Scalar>> stepwise_select(
    const Matrix<Scalar>& factors, const Matrix<Scalar>& portfolio_returns,
    Index target_size) {
  const Index k = factors.rows();
  if (target_size < 1 || target_size > k)
    throw ConfigError(
        "stepwise_select: target size must lie in [1, factor count]");
  if (factors.cols() <= target_size + 1)
    throw ConfigError(
        "stepwise_select: need more months than factors to estimate");
  std::vector<Index> selected;
  std::vector<Scalar> path;
  std::vector<char> used(static_cast<std::size_t>(k), 0);
  for (Index step = 0; step < target_size; ++step) {
    Index best = -1;
    Scalar best_r2 = -std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < k; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      selected.push_back(j);
      const Scalar r2 = r2_cross_section(factors, portfolio_returns, selected);
      selected.pop_back();
      if (r2 > best_r2) {  // strict: ties keep the lower index
        best_r2 = r2;
        best = j;
      }
    }
    selected.push_back(best);
    used[static_cast<std::size_t>(best)] = 1;
    path.push_back(best_r2);
  }
  return {std::move(selected), std::move(path)};
}

template <typename Scalar>
struct FactorModel {
  std::vector<Index> selected;
  Matrix<Scalar> factors;     // the full stacked factor matrix, k x T
  Vector<Scalar> alpha;       // per-portfolio intercepts
  Matrix<Scalar> beta;        // portfolios x |selected|
  Matrix<Scalar> forecasts;   // portfolios x (T-1), month m+1 from factors at m
  Matrix<Scalar> realized;    // portfolios x (T-1), aligned with forecasts
  Matrix<Scalar> residuals;   // realized - forecasts
  bool used_pinv = false;
};

/// In-sample predictive regressions: each portfolio's months 2..T returns on
/// the selected factors at months 1..T-1 plus an intercept. Rank-deficient
/// designs fall back to the minimum-norm solution and set a flag; in the
/// all-zero-factor edge case that convention reduces to intercept = mean
/// return, betas = 0.
template <typename Scalar>
FactorModel<Scalar> fit_and_forecast(const Matrix<Scalar>& factors,
                                     const std::vector<Index>& selected,
                                     const Matrix<Scalar>& portfolio_returns) {
  const Index t = factors.cols();
  if (portfolio_returns.cols() != t)
    throw StructuralError("fit_and_forecast: factor and return months differ");
  if (t < 3) throw ConfigError("fit_and_forecast: too few months");
  for (const Index j : selected)
    if (j < 0 || j >= factors.rows())
      throw StructuralError("fit_and_forecast: factor index out of range");

  FactorModel<Scalar> model;
  model.selected = selected;
  model.factors = factors;
  Matrix<Scalar> x = detail::regression_design(factors, selected);
  Matrix<Scalar> y = portfolio_returns.rightCols(t - 1).transpose();
  auto cod = x.completeOrthogonalDecomposition();
  Matrix<Scalar> coef = cod.solve(y);
  model.used_pinv = cod.rank() < x.cols();
  model.alpha = coef.row(0).transpose();
  model.beta = coef.bottomRows(coef.rows() - 1).transpose();
  model.forecasts = (x * coef).transpose();
  model.realized = portfolio_returns.rightCols(t - 1);
  model.residuals = model.realized - model.forecasts;
  return model;
}

/// Expanding-window out-of-sample variant: the model is refit on months up
/// to m and forecasts month m+1, for every m >= min_train. Forecast and
/// realized matrices cover only the forecastable months.
template <typename Scalar>
FactorModel<Scalar> fit_and_forecast_rolling(
    const Matrix<Scalar>& factors, const std::vector<Index>& selected,
    const Matrix<Scalar>& portfolio_returns, Index min_train) {
  const Index t = factors.cols();
  const Index m = static_cast<Index>(selected.size());
  if (min_train < m + 2)
    throw ConfigError(
        "fit_and_forecast_rolling: min_train must exceed the factor count");
  if (t - 1 <= min_train)
    throw ConfigError("fit_and_forecast_rolling: not enough months");
  const Index n = portfolio_returns.rows();
  const Index horizon = t - 1 - min_train;

  FactorModel<Scalar> model;
  model.selected = selected;
  model.factors = factors;
  model.forecasts.resize(n, horizon);
  model.realized.resize(n, horizon);
  for (Index j = 0; j < horizon; ++j) {
    const Index train_end = min_train + j;  // factor months 1..train_end
    Matrix<Scalar> x(train_end, 1 + m);
    x.col(0).setOnes();
    for (Index c = 0; c < m; ++c)
      x.col(1 + c) =
          factors.row(selected[static_cast<std::size_t>(c)]).head(train_end);
    Matrix<Scalar> y =
        portfolio_returns.middleCols(1, train_end).transpose();
    auto cod = x.completeOrthogonalDecomposition();
    Matrix<Scalar> coef = cod.solve(y);
    model.used_pinv |= cod.rank() < x.cols();
    Vector<Scalar> f(1 + m);
    f[0] = 1;
    for (Index c = 0; c < m; ++c)
      f[1 + c] = factors(selected[static_cast<std::size_t>(c)], train_end);
    model.forecasts.col(j) = (coef.transpose() * f);
    model.realized.col(j) = portfolio_returns.col(train_end + 1);
    if (j == horizon - 1) {
      model.alpha = coef.row(0).transpose();
      model.beta = coef.bottomRows(m).transpose();
    }
  }
  model.residuals = model.realized - model.forecasts;
  return model;
}

}  // namespace act
