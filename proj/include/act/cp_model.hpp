#pragma once

#include <string>

#include "act/common.hpp"
#include "act/tensor.hpp"

namespace act {

/// Rank-R multilinear model of a T x N x L panel. Component weights are kept
/// as an explicit vector but are fixed to one; scale lives in the factors.
template <typename Scalar>
struct CpModel {
  Matrix<Scalar> time_factors;  // T x R
  Matrix<Scalar> firm_factors;  // N x R
  Matrix<Scalar> char_factors;  // L x R
  Vector<Scalar> weights;       // length R, all ones

  Index rank() const { return time_factors.cols(); }

  void validate() const {
    if (firm_factors.cols() != rank() || char_factors.cols() != rank())
      throw StructuralError("CpModel: factor matrices disagree on rank");
    if (weights.size() != rank())
      throw StructuralError("CpModel: weight vector length " +
                            std::to_string(weights.size()) +
                            " does not match rank " + std::to_string(rank()));
  }
};

template <typename Scalar>
CpModel<Scalar> make_cp_model(Matrix<Scalar> u, Matrix<Scalar> v,
                              Matrix<Scalar> w) {
  CpModel<Scalar> m;
  m.time_factors = std::move(u);
  m.firm_factors = std::move(v);
  m.char_factors = std::move(w);
  m.weights = Vector<Scalar>::Ones(m.time_factors.cols());
  m.validate();
  return m;
}

/// Dense reconstruction: x(t, n, l) = sum_r w_r U(t,r) V(n,r) W(l,r).
/// Evaluated as one matrix product against the row-wise Khatri-Rao factor of
/// V and W, whose row n*L + l matches the time-mode unfolding layout.
template <typename Scalar>
Tensor3<Scalar> reconstruct(const CpModel<Scalar>& model) {
  model.validate();
  const Index t = model.time_factors.rows();
  const Index n = model.firm_factors.rows();
  const Index l = model.char_factors.rows();
  const Index r = model.rank();
  Matrix<Scalar> krp(n * l, r);
  for (Index in = 0; in < n; ++in)
    for (Index il = 0; il < l; ++il)
      krp.row(in * l + il) = model.firm_factors.row(in).cwiseProduct(
          model.char_factors.row(il));
  Matrix<Scalar> scaled = model.time_factors * model.weights.asDiagonal();
  Matrix<Scalar> flat(t, n * l);
  flat.noalias() = scaled * krp.transpose();
  return fold(flat, Mode::time, t, n, l);
}

/// Sum of squared residuals over observed cells only.
template <typename Scalar>
Scalar masked_residual_sq(const MaskedTensor<Scalar>& x,
                          const CpModel<Scalar>& model) {
  model.validate();
  if (x.dim_time() != model.time_factors.rows() ||
      x.dim_firm() != model.firm_factors.rows() ||
      x.dim_char() != model.char_factors.rows())
    throw StructuralError("masked_residual_sq: model shape does not match panel");
  if (x.observed_count() == 0)
    throw EmptyObservationError("masked_residual_sq: no observed entries");
  const Index t = x.dim_time(), n = x.dim_firm(), l = x.dim_char();
  const Index r = model.rank();
  Scalar total = 0;
  for (Index it = 0; it < t; ++it)
    for (Index in = 0; in < n; ++in)
      for (Index il = 0; il < l; ++il) {
        if (!x.observed(it, in, il)) continue;
        Scalar fit = 0;
        for (Index ir = 0; ir < r; ++ir)
          fit += model.weights[ir] * model.time_factors(it, ir) *
                 model.firm_factors(in, ir) * model.char_factors(il, ir);
        const Scalar err = x.value(it, in, il) - fit;
        total += err * err;
      }
  return total;
}

}  // namespace act
