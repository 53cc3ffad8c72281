#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "act/common.hpp"
#include "act/cp_model.hpp"
#include "act/tensor.hpp"

namespace act {

template <typename Scalar>
struct SolverConfig {
  Index rank = 40;
  Scalar lambda = 0;
  int max_iters = 200;
  Scalar rel_tol = static_cast<Scalar>(1e-6);
  std::uint64_t seed = 0;

  void validate() const {
    if (rank < 1) throw ConfigError("SolverConfig: rank must be at least 1");
    if (lambda < 0) throw ConfigError("SolverConfig: lambda must be >= 0");
    if (max_iters < 1)
      throw ConfigError("SolverConfig: max_iters must be at least 1");
    if (!(rel_tol > 0))
      throw ConfigError("SolverConfig: rel_tol must be positive");
  }
};

template <typename Scalar>
struct FitReport {
  Scalar objective = 0;        // final value of the trace
  std::vector<Scalar> trace;   // objective after init and after each sweep
  int iterations = 0;
  bool converged = false;
  bool used_pinv = false;      // some row fell back to a pseudo-inverse solve
};

/// Penalized objective: masked squared residual plus lambda times the squared
/// Frobenius norms of the three factor matrices.
template <typename Scalar>
Scalar cp_objective(const MaskedTensor<Scalar>& x, const CpModel<Scalar>& model,
                    Scalar lambda) {
  Scalar obj = masked_residual_sq(x, model);
  if (lambda > 0)
    obj += lambda * (model.time_factors.squaredNorm() +
                     model.firm_factors.squaredNorm() +
                     model.char_factors.squaredNorm());
  return obj;
}

template <typename Scalar>
struct SweepResult {
  Matrix<Scalar> factor;
  bool used_pinv = false;
};

namespace detail {

// Solves A u = b for one factor row. A is the Gram matrix of the observed
// rank-one features plus lambda on the diagonal; only its lower triangle has
// been accumulated. With lambda = 0 the system can be singular; a
// rank-revealing fallback keeps the sweep well defined and is reported to
// the caller.
template <typename Scalar>
Vector<Scalar> solve_row(Matrix<Scalar>& gram, const Vector<Scalar>& rhs,
                         Scalar lambda, Index obs, bool* used_pinv) {
  const Index r = rhs.size();
  for (Index i = 0; i < r; ++i)
    for (Index j = i + 1; j < r; ++j) gram(i, j) = gram(j, i);
  if (lambda > 0) {
    gram.diagonal().array() += lambda;
    return gram.ldlt().solve(rhs);
  }
  if (obs >= r) {
    Vector<Scalar> u = gram.ldlt().solve(rhs);
    const Scalar scale = rhs.norm() + gram.norm() * u.norm();
    if ((gram * u - rhs).norm() <=
        static_cast<Scalar>(1e-10) * (scale + Scalar(1)))
      return u;
  }
  *used_pinv = true;
  return gram.completeOrthogonalDecomposition().solve(rhs);
}

}  // namespace detail

/// One ALS half sweep: re-solves every row of the chosen mode's factor matrix
/// as an independent ridge least-squares problem over that row's observed
/// entries, holding the other two factors fixed. Rows with no observed
/// entries keep their current value when lambda = 0 and become zero (the
/// exact ridge solution of an empty system) when lambda > 0.
template <typename Scalar>
SweepResult<Scalar> als_sweep_mode(const MaskedTensor<Scalar>& x,
                                   const CpModel<Scalar>& model, Mode mode,
                                   Scalar lambda) {
  model.validate();
  if (x.dim_time() != model.time_factors.rows() ||
      x.dim_firm() != model.firm_factors.rows() ||
      x.dim_char() != model.char_factors.rows())
    throw StructuralError("als_sweep_mode: model shape does not match panel");
  if (lambda < 0) throw ConfigError("als_sweep_mode: lambda must be >= 0");

  const Index t = x.dim_time(), n = x.dim_firm(), l = x.dim_char();
  const Index r = model.rank();
  const Matrix<Scalar>* a = nullptr;
  const Matrix<Scalar>* b = nullptr;
  Index rows = 0;
  switch (mode) {
    case Mode::time:
      rows = t, a = &model.firm_factors, b = &model.char_factors;
      break;
    case Mode::firm:
      rows = n, a = &model.time_factors, b = &model.char_factors;
      break;
    default:
      rows = l, a = &model.time_factors, b = &model.firm_factors;
      break;
  }

  SweepResult<Scalar> result;
  result.factor = (mode == Mode::time)   ? model.time_factors
                  : (mode == Mode::firm) ? model.firm_factors
                                         : model.char_factors;
  Matrix<Scalar> gram(r, r);
  Vector<Scalar> rhs(r), g(r);
  bool used_pinv = false;

  for (Index row = 0; row < rows; ++row) {
    gram.setZero();
    rhs.setZero();
    Index obs = 0;
    auto accumulate = [&](Index ia, Index ib, Scalar value) {
      g = a->row(ia).cwiseProduct(b->row(ib)).transpose().cwiseProduct(
          model.weights);
      gram.template selfadjointView<Eigen::Lower>().rankUpdate(g, Scalar(1));
      rhs.noalias() += value * g;
      ++obs;
    };
    switch (mode) {
      case Mode::time:
        for (Index in = 0; in < n; ++in)
          for (Index il = 0; il < l; ++il)
            if (x.observed(row, in, il))
              accumulate(in, il, x.value(row, in, il));
        break;
      case Mode::firm:
        for (Index it = 0; it < t; ++it)
          for (Index il = 0; il < l; ++il)
            if (x.observed(it, row, il))
              accumulate(it, il, x.value(it, row, il));
        break;
      default:
        for (Index it = 0; it < t; ++it)
          for (Index in = 0; in < n; ++in)
            if (x.observed(it, in, row))
              accumulate(it, in, x.value(it, in, row));
        break;
    }
    if (obs == 0) {
      if (lambda > 0) result.factor.row(row).setZero();
      continue;
    }
    result.factor.row(row) =
        detail::solve_row(gram, rhs, lambda, obs, &used_pinv).transpose();
  }
  result.used_pinv = used_pinv;
  return result;
}

/*
 * Masked alternating least squares.
 *
 * Starting from a seeded uniform initialization on [-0.5, 0.5], each
 * iteration sweeps the time, firm, and characteristic modes in that order.
 * Every half sweep solves an exact (ridge) least-squares problem per row, so
 * the penalized objective is non-increasing across sweeps up to floating
 * point noise. Iteration stops when the relative objective change falls
 * below rel_tol or after max_iters full sweeps.
 */
template <typename Scalar>
std::pair<CpModel<Scalar>, FitReport<Scalar>> fit_cp(
    const MaskedTensor<Scalar>& x, const SolverConfig<Scalar>& cfg) {
  cfg.validate();
  if (x.observed_count() == 0)
    throw EmptyObservationError("fit_cp: panel has no observed entries");
  if (x.observed_count() < cfg.rank)
    throw UnderdeterminedError(
        "fit_cp: " + std::to_string(x.observed_count()) +
        " observed entries cannot pin down rank " + std::to_string(cfg.rank) +
        " factors; lower the rank to at most the observed-entry count");

  Rng rng(cfg.seed);
  auto init = [&rng](Index rows, Index cols) {
    Matrix<Scalar> m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j)
        m(i, j) = static_cast<Scalar>(rng.uniform(-0.5, 0.5));
    return m;
  };
  CpModel<Scalar> model;
  model.time_factors = init(x.dim_time(), cfg.rank);
  model.firm_factors = init(x.dim_firm(), cfg.rank);
  model.char_factors = init(x.dim_char(), cfg.rank);
  model.weights = Vector<Scalar>::Ones(cfg.rank);

  FitReport<Scalar> report;
  report.trace.reserve(static_cast<std::size_t>(cfg.max_iters) + 1);
  report.trace.push_back(cp_objective(x, model, cfg.lambda));

  for (int it = 1; it <= cfg.max_iters; ++it) {
    for (const Mode mode :
         {Mode::time, Mode::firm, Mode::characteristic}) {
      SweepResult<Scalar> sweep = als_sweep_mode(x, model, mode, cfg.lambda);
      report.used_pinv |= sweep.used_pinv;
      switch (mode) {
        case Mode::time: model.time_factors = std::move(sweep.factor); break;
        case Mode::firm: model.firm_factors = std::move(sweep.factor); break;
        default: model.char_factors = std::move(sweep.factor); break;
      }
    }
    const Scalar prev = report.trace.back();
    const Scalar obj = cp_objective(x, model, cfg.lambda);
    report.trace.push_back(obj);
    report.iterations = it;
    if (std::abs(obj - prev) / (Scalar(1) + prev) < cfg.rel_tol) {
      report.converged = true;
      break;
    }
  }
  report.objective = report.trace.back();
  return {std::move(model), std::move(report)};
}

}  // namespace act
