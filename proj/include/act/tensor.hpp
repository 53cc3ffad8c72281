#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "act/common.hpp"

namespace act {

/// Axis order of every third-order tensor in this library.
enum class Mode : int { time = 0, firm = 1, characteristic = 2 };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::time: return "time";
    case Mode::firm: return "firm";
    default: return "characteristic";
  }
}

/// Dense T x N x L array stored flat with the characteristic index fastest:
/// entry (t, n, l) lives at (t * N + n) * L + l.
template <typename Scalar>
class Tensor3 {
 public:
  Tensor3() = default;

  Tensor3(Index t, Index n, Index l) : t_(t), n_(n), l_(l) {
    if (t < 0 || n < 0 || l < 0)
      throw StructuralError("Tensor3: negative dimension");
    data_ = Vector<Scalar>::Zero(t * n * l);
  }

  static Tensor3 constant(Index t, Index n, Index l, Scalar value) {
    Tensor3 out(t, n, l);
    out.data_.setConstant(value);
    return out;
  }

  Scalar operator()(Index t, Index n, Index l) const {
    return data_[offset(t, n, l)];
  }
  Scalar& operator()(Index t, Index n, Index l) {
    return data_[offset(t, n, l)];
  }

  Index dim_time() const { return t_; }
  Index dim_firm() const { return n_; }
  Index dim_char() const { return l_; }

  Index dim(Mode m) const {
    switch (m) {
      case Mode::time: return t_;
      case Mode::firm: return n_;
      default: return l_;
    }
  }

  Index size() const { return data_.size(); }

  const Vector<Scalar>& data() const { return data_; }
  Vector<Scalar>& data() { return data_; }

  Index offset(Index t, Index n, Index l) const {
    return (t * n_ + n) * l_ + l;
  }

 private:
  Index t_ = 0, n_ = 0, l_ = 0;
  Vector<Scalar> data_;
};

/// Byte-level equality; treats the sentinel consistently, unlike operator==
/// on floating point data.
template <typename Scalar>
bool bitwise_equal(const Tensor3<Scalar>& a, const Tensor3<Scalar>& b) {
  if (a.dim_time() != b.dim_time() || a.dim_firm() != b.dim_firm() ||
      a.dim_char() != b.dim_char())
    return false;
  if (a.size() == 0) return true;
  return std::memcmp(a.data().data(), b.data().data(),
                     sizeof(Scalar) * static_cast<std::size_t>(a.size())) == 0;
}

/// Mode-m matricization. Rows run over the unfolded mode; columns run over
/// the remaining modes in ascending mode order with the last one fastest:
///   unfold(x, time)(t, n * L + l)  == x(t, n, l)
///   unfold(x, firm)(n, t * L + l)  == x(t, n, l)
///   unfold(x, char)(l, t * N + n)  == x(t, n, l)
template <typename Scalar>
Matrix<Scalar> unfold(const Tensor3<Scalar>& x, Mode mode) {
  const Index t = x.dim_time(), n = x.dim_firm(), l = x.dim_char();
  Matrix<Scalar> out;
  switch (mode) {
    case Mode::time:
      out.resize(t, n * l);
      for (Index it = 0; it < t; ++it)
        for (Index in = 0; in < n; ++in)
          for (Index il = 0; il < l; ++il) out(it, in * l + il) = x(it, in, il);
      break;
    case Mode::firm:
      out.resize(n, t * l);
      for (Index it = 0; it < t; ++it)
        for (Index in = 0; in < n; ++in)
          for (Index il = 0; il < l; ++il) out(in, it * l + il) = x(it, in, il);
      break;
    default:
      out.resize(l, t * n);
      for (Index it = 0; it < t; ++it)
        for (Index in = 0; in < n; ++in)
          for (Index il = 0; il < l; ++il) out(il, it * n + in) = x(it, in, il);
      break;
  }
  return out;
}

/// Inverse of unfold for the given target shape.
template <typename Scalar>
Tensor3<Scalar> fold(const Matrix<Scalar>& m, Mode mode, Index t, Index n,
                     Index l) {
  Index rows = 0, cols = 0;
  switch (mode) {
    case Mode::time: rows = t, cols = n * l; break;
    case Mode::firm: rows = n, cols = t * l; break;
    default: rows = l, cols = t * n; break;
  }
  if (m.rows() != rows || m.cols() != cols)
    throw StructuralError("fold: matrix shape does not match target tensor");
  Tensor3<Scalar> out(t, n, l);
  for (Index it = 0; it < t; ++it)
    for (Index in = 0; in < n; ++in)
      for (Index il = 0; il < l; ++il) {
        switch (mode) {
          case Mode::time: out(it, in, il) = m(it, in * l + il); break;
          case Mode::firm: out(it, in, il) = m(in, it * l + il); break;
          default: out(it, in, il) = m(il, it * n + in); break;
        }
      }
  return out;
}

struct AxisLabels {
  std::vector<std::string> months;
  std::vector<std::string> firms;
  std::vector<std::string> characteristics;
};

/// Synthetic label set: months count up from 1990-01, firms are f0000...,
/// and the first characteristic is named "size" so that generated panels can
/// feed the portfolio pipeline unchanged.
inline AxisLabels default_labels(Index t, Index n, Index l) {
  AxisLabels out;
  out.months.reserve(static_cast<std::size_t>(t));
  for (Index i = 0; i < t; ++i) {
    const Index year = 1990 + i / 12, month = 1 + i % 12;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04ld-%02ld", static_cast<long>(year),
                  static_cast<long>(month));
    out.months.emplace_back(buf);
  }
  out.firms.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "f%04ld", static_cast<long>(i));
    out.firms.emplace_back(buf);
  }
  out.characteristics.reserve(static_cast<std::size_t>(l));
  for (Index i = 0; i < l; ++i) {
    if (i == 0) {
      out.characteristics.emplace_back("size");
      continue;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "c%02ld", static_cast<long>(i));
    out.characteristics.emplace_back(buf);
  }
  return out;
}

/// Firm-characteristic panel with an explicit observation mask. The mask is
/// the single source of truth: construction overwrites every unobserved cell
/// with a quiet-NaN sentinel, so stale values can never leak into results.
template <typename Scalar>
class MaskedTensor {
 public:
  MaskedTensor() = default;

  MaskedTensor(Tensor3<Scalar> values, Tensor3<std::uint8_t> mask,
               AxisLabels labels)
      : values_(std::move(values)),
        mask_(std::move(mask)),
        labels_(std::move(labels)) {
    init();
  }

  MaskedTensor(Tensor3<Scalar> values, Tensor3<std::uint8_t> mask)
      : values_(std::move(values)), mask_(std::move(mask)) {
    labels_ = default_labels(values_.dim_time(), values_.dim_firm(),
                             values_.dim_char());
    init();
  }

  static Scalar sentinel() { return std::numeric_limits<Scalar>::quiet_NaN(); }

  const Tensor3<Scalar>& values() const { return values_; }
  const Tensor3<std::uint8_t>& mask() const { return mask_; }
  const AxisLabels& labels() const { return labels_; }

  bool observed(Index t, Index n, Index l) const {
    return mask_(t, n, l) != 0;
  }
  Scalar value(Index t, Index n, Index l) const { return values_(t, n, l); }

  Index dim_time() const { return values_.dim_time(); }
  Index dim_firm() const { return values_.dim_firm(); }
  Index dim_char() const { return values_.dim_char(); }
  Index size() const { return values_.size(); }

  Index observed_count() const { return observed_; }

  double density() const {
    return size() == 0 ? 0.0
                       : static_cast<double>(observed_) /
                             static_cast<double>(size());
  }

 private:
  void init() {
    if (values_.dim_time() != mask_.dim_time() ||
        values_.dim_firm() != mask_.dim_firm() ||
        values_.dim_char() != mask_.dim_char())
      throw StructuralError("MaskedTensor: values and mask shapes differ");
    if (static_cast<Index>(labels_.months.size()) != values_.dim_time())
      throw StructuralError("MaskedTensor: month labels do not match axis");
    if (static_cast<Index>(labels_.firms.size()) != values_.dim_firm())
      throw StructuralError("MaskedTensor: firm labels do not match axis");
    if (static_cast<Index>(labels_.characteristics.size()) !=
        values_.dim_char())
      throw StructuralError(
          "MaskedTensor: characteristic labels do not match axis");
    observed_ = 0;
    for (Index i = 0; i < values_.size(); ++i) {
      if (mask_.data()[i] != 0) {
        ++observed_;
        if (!std::isfinite(static_cast<double>(values_.data()[i])))
          throw StructuralError(
              "MaskedTensor: non-finite value at an observed cell");
      } else {
        values_.data()[i] = sentinel();
      }
    }
  }

  Tensor3<Scalar> values_;
  Tensor3<std::uint8_t> mask_;
  AxisLabels labels_;
  Index observed_ = 0;
};

/// Restricts the panel to the given firms, in the given order. Indices must
/// be valid and distinct; labels travel with their slices.
template <typename Scalar>
MaskedTensor<Scalar> extract_subtensor(const MaskedTensor<Scalar>& x,
                                       const std::vector<Index>& firms) {
  const Index t = x.dim_time(), n = x.dim_firm(), l = x.dim_char();
  std::unordered_set<Index> seen;
  for (const Index f : firms) {
    if (f < 0 || f >= n)
      throw StructuralError("extract_subtensor: firm index " +
                            std::to_string(f) + " out of range");
    if (!seen.insert(f).second)
      throw StructuralError("extract_subtensor: duplicate firm index " +
                            std::to_string(f));
  }
  const Index m = static_cast<Index>(firms.size());
  Tensor3<Scalar> values(t, m, l);
  Tensor3<std::uint8_t> mask(t, m, l);
  AxisLabels labels = x.labels();
  labels.firms.clear();
  labels.firms.reserve(firms.size());
  for (const Index f : firms)
    labels.firms.push_back(x.labels().firms[static_cast<std::size_t>(f)]);
  for (Index it = 0; it < t; ++it)
    for (Index j = 0; j < m; ++j) {
      const Index f = firms[static_cast<std::size_t>(j)];
      for (Index il = 0; il < l; ++il) {
        mask(it, j, il) = x.mask()(it, f, il);
        values(it, j, il) = x.values()(it, f, il);
      }
    }
  return MaskedTensor<Scalar>(std::move(values), std::move(mask),
                              std::move(labels));
}

}  // namespace act
