#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "act/cp_model.hpp"
#include "act/tensor.hpp"

using act::Index;
using act::MaskedTensor;
using act::Mode;
using act::Rng;
using act::Tensor3;

namespace {

Tensor3<double> random_tensor(Index t, Index n, Index l, Rng& rng) {
  Tensor3<double> x(t, n, l);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return x;
}

Tensor3<std::uint8_t> random_mask(Index t, Index n, Index l, double keep,
                                  Rng& rng) {
  Tensor3<std::uint8_t> m(t, n, l);
  for (Index i = 0; i < m.size(); ++i)
    m.data()[i] = rng.uniform() < keep ? 1 : 0;
  return m;
}

act::CpModel<double> random_model(Index t, Index n, Index l, Index r,
                                  Rng& rng) {
  act::Matrix<double> u(t, r), v(n, r), w(l, r);
  for (Index i = 0; i < t; ++i)
    for (Index j = 0; j < r; ++j) u(i, j) = rng.normal();
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < r; ++j) v(i, j) = rng.normal();
  for (Index i = 0; i < l; ++i)
    for (Index j = 0; j < r; ++j) w(i, j) = rng.normal();
  return act::make_cp_model(std::move(u), std::move(v), std::move(w));
}

}  // namespace

TEST_CASE("indexing walks the flat buffer in time-major order") {
  Tensor3<double> x(2, 3, 4);
  double v = 0;
  for (Index t = 0; t < 2; ++t)
    for (Index n = 0; n < 3; ++n)
      for (Index l = 0; l < 4; ++l) x(t, n, l) = v++;
  for (Index i = 0; i < x.size(); ++i) CHECK(x.data()[i] == double(i));
}

TEST_CASE("fold inverts unfold bitwise on every mode") {
  Rng rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const Index t = 2 + rng.index(4), n = 2 + rng.index(5),
                l = 2 + rng.index(3);
    const Tensor3<double> x = random_tensor(t, n, l, rng);
    for (const Mode m : {Mode::time, Mode::firm, Mode::characteristic}) {
      const Tensor3<double> back = act::fold(act::unfold(x, m), m, t, n, l);
      CHECK(act::bitwise_equal(x, back));
    }
  }
}

TEST_CASE("unfold rows index the chosen mode") {
  Rng rng(5);
  const Tensor3<double> x = random_tensor(3, 4, 2, rng);
  const act::Matrix<double> mt = act::unfold(x, Mode::time);
  REQUIRE(mt.rows() == 3);
  REQUIRE(mt.cols() == 8);
  const act::Matrix<double> mn = act::unfold(x, Mode::firm);
  REQUIRE(mn.rows() == 4);
  const act::Matrix<double> ml = act::unfold(x, Mode::characteristic);
  REQUIRE(ml.rows() == 2);
  for (Index t = 0; t < 3; ++t)
    for (Index n = 0; n < 4; ++n)
      for (Index l = 0; l < 2; ++l) {
        CHECK(mt(t, n * 2 + l) == x(t, n, l));
        CHECK(mn(n, t * 2 + l) == x(t, n, l));
        CHECK(ml(l, t * 4 + n) == x(t, n, l));
      }
}

TEST_CASE("reconstruct is linear in each factor column") {
  Rng rng(17);
  act::CpModel<double> model = random_model(4, 5, 3, 2, rng);
  const Tensor3<double> base = act::reconstruct(model);

  act::CpModel<double> only0 = model, only1 = model;
  only0.firm_factors.col(1).setZero();
  only1.firm_factors.col(0).setZero();
  const Tensor3<double> c0 = act::reconstruct(only0);
  const Tensor3<double> c1 = act::reconstruct(only1);

  act::CpModel<double> scaled = model;
  const double c = 2.75;
  scaled.time_factors.col(1) *= c;
  const Tensor3<double> sc = act::reconstruct(scaled);
  for (Index i = 0; i < base.size(); ++i) {
    CHECK(base.data()[i] ==
          doctest::Approx(c0.data()[i] + c1.data()[i]).epsilon(1e-12));
    CHECK(sc.data()[i] ==
          doctest::Approx(c0.data()[i] + c * c1.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("masked residual is bounded by the fully observed residual") {
  Rng rng(23);
  const Index t = 4, n = 6, l = 3;
  Tensor3<double> values = random_tensor(t, n, l, rng);
  const act::CpModel<double> model = random_model(t, n, l, 2, rng);

  Tensor3<std::uint8_t> all(t, n, l);
  all.data().setConstant(1);
  const MaskedTensor<double> full(values, all);
  const MaskedTensor<double> part(values, random_mask(t, n, l, 0.5, rng));
  CHECK(act::masked_residual_sq(part, model) <=
        act::masked_residual_sq(full, model) + 1e-12);
}

TEST_CASE("construction scrubs unobserved cells to the sentinel") {
  Tensor3<double> values(2, 2, 2);
  values.data().setConstant(7.0);
  Tensor3<std::uint8_t> mask(2, 2, 2);
  mask.data().setConstant(1);
  mask(1, 0, 1) = 0;
  const MaskedTensor<double> x(values, mask);
  CHECK(std::isnan(x.values()(1, 0, 1)));
  CHECK(!x.observed(1, 0, 1));
  CHECK(x.observed_count() == 7);
  CHECK(x.density() == doctest::Approx(7.0 / 8.0));
}

TEST_CASE("unobserved values cannot leak into results") {
  Rng rng(31);
  const Index t = 3, n = 4, l = 2;
  Tensor3<double> values = random_tensor(t, n, l, rng);
  const Tensor3<std::uint8_t> mask = random_mask(t, n, l, 0.6, rng);

  Tensor3<double> tampered = values;
  for (Index i = 0; i < tampered.size(); ++i)
    if (!mask.data()[i]) tampered.data()[i] = 1e9;

  const MaskedTensor<double> a(values, mask);
  const MaskedTensor<double> b(tampered, mask);
  const act::CpModel<double> model = random_model(t, n, l, 2, rng);
  CHECK(act::masked_residual_sq(a, model) ==
        act::masked_residual_sq(b, model));
  CHECK(act::bitwise_equal(a.values(), b.values()));
}

TEST_CASE("extract_subtensor keeps the selected firms in order") {
  Rng rng(41);
  const Index t = 3, n = 5, l = 2;
  const Tensor3<double> values = random_tensor(t, n, l, rng);
  const Tensor3<std::uint8_t> mask = random_mask(t, n, l, 0.7, rng);
  const MaskedTensor<double> x(values, mask, act::default_labels(t, n, l));

  const std::vector<Index> firms = {3, 0, 4};
  const MaskedTensor<double> sub = act::extract_subtensor(x, firms);
  REQUIRE(sub.dim_firm() == 3);
  CHECK(sub.labels().firms[0] == "f0003");
  CHECK(sub.labels().firms[1] == "f0000");
  for (Index it = 0; it < t; ++it)
    for (std::size_t j = 0; j < firms.size(); ++j)
      for (Index il = 0; il < l; ++il) {
        const Index src = firms[j];
        CHECK(sub.observed(it, Index(j), il) == x.observed(it, src, il));
        if (x.observed(it, src, il))
          CHECK(sub.value(it, Index(j), il) == x.value(it, src, il));
      }
}

TEST_CASE("mismatched value and mask shapes are rejected") {
  Tensor3<double> values(2, 2, 2);
  Tensor3<std::uint8_t> mask(2, 2, 3);
  CHECK_THROWS_AS(MaskedTensor<double>(values, mask), act::StructuralError);
}

TEST_CASE("default labels are sized and formatted for csv round trips") {
  const act::AxisLabels lab = act::default_labels(14, 3, 3);
  REQUIRE(lab.months.size() == 14);
  CHECK(lab.months[0] == "1990-01");
  CHECK(lab.months[12] == "1991-01");
  CHECK(lab.firms[2] == "f0002");
  CHECK(lab.characteristics[0] == "size");
  CHECK(lab.characteristics[1] == "c01");
}
