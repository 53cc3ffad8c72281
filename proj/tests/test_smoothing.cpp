#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "act/smoothing.hpp"
#include "act/tensor.hpp"

using act::Index;
using act::Rng;
using act::SmootherKind;
using act::SmootherSpec;
using act::Tensor3;
using act::Vector;

namespace {

Vector<double> random_series(Index t, Rng& rng) {
  Vector<double> s(t);
  for (Index i = 0; i < t; ++i) s[i] = rng.normal();
  return s;
}

}  // namespace

TEST_CASE("cma hand example with truncated boundary windows") {
  Vector<double> s(5);
  s << 1, 2, 3, 4, 5;
  const Vector<double> out = act::cma(s, 3);
  const double want[] = {1.5, 2, 3, 4, 4.5};
  for (Index i = 0; i < 5; ++i)
    CHECK(out[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("cma of width one is the identity and constants are fixed points") {
  Rng rng(3);
  const Vector<double> s = random_series(20, rng);
  CHECK(act::cma(s, 1) == s);
  Vector<double> c = Vector<double>::Constant(9, 2.5);
  for (int delta : {1, 3, 5, 9}) {
    const Vector<double> out = act::cma(c, delta);
    for (Index i = 0; i < c.size(); ++i)
      CHECK(out[i] == doctest::Approx(2.5).epsilon(1e-14));
  }
  CHECK_THROWS_AS(act::cma(s, 4), act::ConfigError);
  CHECK_THROWS_AS(act::cma(s, 0), act::ConfigError);
}

TEST_CASE("ema matches the closed form") {
  Rng rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const Index t = 2 + rng.index(30);
    const double theta = rng.uniform(0.05, 0.95);
    const Vector<double> s = random_series(t, rng);
    const Vector<double> out = act::ema(s, theta);
    for (Index i = 0; i < t; ++i) {
      double want = std::pow(1 - theta, double(i)) * s[0];
      for (Index j = 0; j < i; ++j)
        want += theta * std::pow(1 - theta, double(j)) * s[i - j];
      CHECK(out[i] == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("ema one-step hand example and domain checks") {
  Vector<double> s(2);
  s << 0, 1;
  const Vector<double> out = act::ema(s, 0.5);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(act::ema(s, 0.0), act::ConfigError);
  CHECK_THROWS_AS(act::ema(s, 1.0), act::ConfigError);
}

TEST_CASE("kalman trusts observations when measurement noise vanishes") {
  Rng rng(11);
  const Vector<double> s = random_series(40, rng);
  const Vector<double> out = act::kalman_smooth(s, 1.0, 1e-12);
  for (Index i = 0; i < s.size(); ++i)
    CHECK(out[i] == doctest::Approx(s[i]).epsilon(1e-6));
}

TEST_CASE("kalman collapses to the global mean when the level is static") {
  Rng rng(13);
  const Index t = 50;
  const Vector<double> s = random_series(t, rng);
  const Vector<double> out =
      act::kalman_smooth(s, 1e-12, 1.0, 0.0, 1e8);
  const double mean = s.mean();
  for (Index i = 0; i < t; ++i) CHECK(std::abs(out[i] - mean) < 1e-3);
}

TEST_CASE("kalman output stays inside the data range for interior priors") {
  Rng rng(17);
  for (int rep = 0; rep < 100; ++rep) {
    const Index t = 3 + rng.index(40);
    const Vector<double> s = random_series(t, rng);
    const double lo = s.minCoeff(), hi = s.maxCoeff();
    const Vector<double> out =
        act::kalman_smooth(s, 0.05, 0.5, (lo + hi) / 2, 1.0);
    for (Index i = 0; i < t; ++i) {
      CHECK(out[i] >= lo - 1e-9);
      CHECK(out[i] <= hi + 1e-9);
    }
  }
}

TEST_CASE("kalman rejects non-positive variances") {
  Vector<double> s(3);
  s << 1, 2, 3;
  CHECK_THROWS_AS(act::kalman_smooth(s, 0.0, 1.0), act::ConfigError);
  CHECK_THROWS_AS(act::kalman_smooth(s, 1.0, -1.0), act::ConfigError);
}

TEST_CASE("all smoothers are linear filters") {
  Rng rng(19);
  const Index t = 25;
  const Vector<double> x = random_series(t, rng);
  const Vector<double> y = random_series(t, rng);
  const double a = 1.7, b = -0.4;
  const Vector<double> combo = a * x + b * y;

  const Vector<double> c1 = act::cma(combo, 5);
  const Vector<double> c2 = a * act::cma(x, 5) + b * act::cma(y, 5);
  const Vector<double> e1 = act::ema(combo, 0.3);
  const Vector<double> e2 = a * act::ema(x, 0.3) + b * act::ema(y, 0.3);
  const Vector<double> k1 = act::kalman_smooth(combo, 0.01, 0.1, 0.0, 10.0);
  const Vector<double> k2 = a * act::kalman_smooth(x, 0.01, 0.1, 0.0, 10.0) +
                            b * act::kalman_smooth(y, 0.01, 0.1, 0.0, 10.0);
  for (Index i = 0; i < t; ++i) {
    CHECK(c1[i] == doctest::Approx(c2[i]).epsilon(1e-12));
    CHECK(e1[i] == doctest::Approx(e2[i]).epsilon(1e-12));
    CHECK(k1[i] == doctest::Approx(k2[i]).epsilon(1e-12));
  }
}

TEST_CASE("adding a constant shifts the output by that constant") {
  Rng rng(23);
  const Index t = 30;
  const Vector<double> x = random_series(t, rng);
  const double c = 3.25;
  const Vector<double> shifted = x.array() + c;

  const Vector<double> c1 = act::cma(shifted, 7);
  const Vector<double> c0 = act::cma(x, 7);
  const Vector<double> e1 = act::ema(shifted, 0.6);
  const Vector<double> e0 = act::ema(x, 0.6);
  const Vector<double> k1 = act::kalman_smooth(shifted, 0.02, 0.2, c, 5.0);
  const Vector<double> k0 = act::kalman_smooth(x, 0.02, 0.2, 0.0, 5.0);
  for (Index i = 0; i < t; ++i) {
    CHECK(c1[i] == doctest::Approx(c0[i] + c).epsilon(1e-12));
    CHECK(e1[i] == doctest::Approx(e0[i] + c).epsilon(1e-12));
    CHECK(k1[i] == doctest::Approx(k0[i] + c).epsilon(1e-12));
  }
}

TEST_CASE("cma reduces interior variance of white noise") {
  int reduced = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const Index t = 60;
    const Vector<double> s = random_series(t, rng);
    const Vector<double> out = act::cma(s, 5);
    const auto var = [](const Vector<double>& v, Index lo, Index hi) {
      double mean = 0;
      for (Index i = lo; i < hi; ++i) mean += v[i];
      mean /= double(hi - lo);
      double ss = 0;
      for (Index i = lo; i < hi; ++i) ss += (v[i] - mean) * (v[i] - mean);
      return ss / double(hi - lo - 1);
    };
    if (var(out, 2, t - 2) < var(s, 2, t - 2)) ++reduced;
  }
  CHECK(reduced >= 95);
}

TEST_CASE("smooth_tensor applies per series and none is bitwise identity") {
  Rng rng(29);
  const Index t = 12, n = 4, l = 3;
  Tensor3<double> x(t, n, l);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();

  SmootherSpec<double> none;
  CHECK(act::bitwise_equal(act::smooth_tensor(x, none), x));

  SmootherSpec<double> spec;
  spec.kind = SmootherKind::ema;
  spec.theta = 0.4;
  const Tensor3<double> out = act::smooth_tensor(x, spec);
  for (Index in = 0; in < n; ++in)
    for (Index il = 0; il < l; ++il) {
      Vector<double> series(t);
      for (Index it = 0; it < t; ++it) series[it] = x(it, in, il);
      const Vector<double> want = act::ema(series, 0.4);
      for (Index it = 0; it < t; ++it)
        CHECK(out(it, in, il) == doctest::Approx(want[it]).epsilon(1e-15));
    }
}

TEST_CASE("smoothing one series leaves the others untouched") {
  const Index t = 10, n = 3, l = 2;
  Tensor3<double> x(t, n, l);
  x.data().setConstant(1.0);
  Rng rng(31);
  for (Index it = 0; it < t; ++it) x(it, 1, 1) = rng.normal();

  SmootherSpec<double> spec;
  spec.kind = SmootherKind::cma;
  spec.delta = 3;
  const Tensor3<double> out = act::smooth_tensor(x, spec);
  for (Index it = 0; it < t; ++it)
    for (Index in = 0; in < n; ++in)
      for (Index il = 0; il < l; ++il)
        if (in != 1 || il != 1)
          CHECK(out(it, in, il) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("spec validation matches the per-kind domains") {
  SmootherSpec<double> spec;
  spec.kind = SmootherKind::cma;
  spec.delta = 4;
  CHECK_THROWS_AS(spec.validate(), act::ConfigError);
  spec.kind = SmootherKind::ema;
  spec.theta = 1.5;
  CHECK_THROWS_AS(spec.validate(), act::ConfigError);
  spec.kind = SmootherKind::kalman;
  spec.theta = 0.5;
  spec.h = -1;
  CHECK_THROWS_AS(spec.validate(), act::ConfigError);
  spec.h = 1e-2;
  spec.prior_var = 0;
  CHECK_THROWS_AS(spec.validate(), act::ConfigError);
}
