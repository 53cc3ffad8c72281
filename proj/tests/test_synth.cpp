#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "act/synth.hpp"
#include "act/tensor.hpp"

using act::GroupSpec;
using act::Index;
using act::MaskedTensor;
using act::Tensor3;
using act::Vector;

TEST_CASE("rank transform maps a clean ordering onto a centered grid") {
  Tensor3<double> values(1, 4, 1);
  values(0, 0, 0) = 10;
  values(0, 1, 0) = -3;
  values(0, 2, 0) = 7;
  values(0, 3, 0) = 0.5;
  Tensor3<std::uint8_t> mask(1, 4, 1);
  mask.data().setConstant(1);
  const MaskedTensor<double> panel(std::move(values), std::move(mask));
  const MaskedTensor<double> out = act::rank_normalize(panel);
  // ascending order: firms 1, 3, 2, 0 -> ranks 1..4 over (m+1)=5, minus 1/2
  CHECK(out.value(0, 1, 0) == doctest::Approx(0.2 - 0.5).epsilon(1e-15));
  CHECK(out.value(0, 3, 0) == doctest::Approx(0.4 - 0.5).epsilon(1e-15));
  CHECK(out.value(0, 2, 0) == doctest::Approx(0.6 - 0.5).epsilon(1e-15));
  CHECK(out.value(0, 0, 0) == doctest::Approx(0.8 - 0.5).epsilon(1e-15));
}

TEST_CASE("ties share an averaged rank and the mask is preserved") {
  Tensor3<double> values(2, 5, 1);
  Tensor3<std::uint8_t> mask(2, 5, 1);
  mask.data().setConstant(1);
  values(0, 0, 0) = 1;
  values(0, 1, 0) = 2;
  values(0, 2, 0) = 2;
  values(0, 3, 0) = 2;
  values(0, 4, 0) = 5;
  mask(1, 0, 0) = 0;  // month 1 has one hole
  values(1, 1, 0) = 4;
  values(1, 2, 0) = 1;
  values(1, 3, 0) = 3;
  values(1, 4, 0) = 2;
  const MaskedTensor<double> panel(std::move(values), std::move(mask));
  const MaskedTensor<double> out = act::rank_normalize(panel);
  // month 0: the three tied firms share rank (2+3+4)/3 = 3 over m+1 = 6
  for (Index in : {1, 2, 3})
    CHECK(out.value(0, in, 0) == doctest::Approx(0.5 - 0.5).epsilon(1e-15));
  CHECK(out.value(0, 0, 0) == doctest::Approx(1.0 / 6 - 0.5).epsilon(1e-15));
  CHECK(out.value(0, 4, 0) == doctest::Approx(5.0 / 6 - 0.5).epsilon(1e-15));
  // month 1: four observed firms, ranks over 5
  CHECK(!out.observed(1, 0, 0));
  CHECK(out.value(1, 2, 0) == doctest::Approx(0.2 - 0.5).epsilon(1e-15));
  CHECK(out.value(1, 1, 0) == doctest::Approx(0.8 - 0.5).epsilon(1e-15));
  CHECK(out.observed_count() == panel.observed_count());
}

TEST_CASE("the rank transform is idempotent on a fixed mask") {
  act::Rng rng(3);
  Tensor3<double> values(5, 12, 3);
  Tensor3<std::uint8_t> mask(5, 12, 3);
  for (Index i = 0; i < values.size(); ++i) {
    values.data()[i] = rng.normal();
    mask.data()[i] = rng.uniform() < 0.7 ? 1 : 0;
  }
  const MaskedTensor<double> panel(std::move(values), std::move(mask));
  const MaskedTensor<double> once = act::rank_normalize(panel);
  const MaskedTensor<double> twice = act::rank_normalize(once);
  CHECK(act::bitwise_equal(once.values(), twice.values()));
  CHECK(act::bitwise_equal(once.mask(), twice.mask()));
  for (Index i = 0; i < once.values().size(); ++i)
    if (once.mask().data()[i]) {
      CHECK(once.values().data()[i] > -0.5);
      CHECK(once.values().data()[i] < 0.5);
    }
}

TEST_CASE("low-rank panels are reproducible and fully observed") {
  const auto a = act::gen_lowrank_panel<double>(8, 20, 4, 3, 0.1, 55);
  const auto b = act::gen_lowrank_panel<double>(8, 20, 4, 3, 0.1, 55);
  const auto c = act::gen_lowrank_panel<double>(8, 20, 4, 3, 0.1, 56);
  CHECK(act::bitwise_equal(a.panel.values(), b.panel.values()));
  CHECK(act::bitwise_equal(a.clean, b.clean));
  CHECK(!act::bitwise_equal(a.panel.values(), c.panel.values()));
  CHECK(a.panel.observed_count() == 8 * 20 * 4);
  CHECK(a.model.rank() == 3);
  CHECK(act::bitwise_equal(act::reconstruct(a.model), a.clean));
  // noise is additive on top of the clean truth
  const auto quiet = act::gen_lowrank_panel<double>(8, 20, 4, 3, 0.0, 55);
  CHECK(act::bitwise_equal(quiet.panel.values(), quiet.clean));
  CHECK_THROWS_AS(act::gen_lowrank_panel<double>(0, 5, 2, 1, 0.0, 1),
                  act::ConfigError);
}

TEST_CASE("normalized panels keep a raw clean tensor") {
  const auto s = act::gen_lowrank_panel<double>(6, 15, 3, 2, 0.05, 7, true);
  for (Index i = 0; i < s.panel.values().size(); ++i) {
    CHECK(s.panel.values().data()[i] > -0.5);
    CHECK(s.panel.values().data()[i] < 0.5);
  }
  double spread = 0;
  for (Index i = 0; i < s.clean.size(); ++i)
    spread = std::max(spread, std::abs(s.clean.data()[i]));
  CHECK(spread > 0.5);  // the clean tensor was not squashed
}

TEST_CASE("heterogeneous panels lay firms out group by group") {
  std::vector<GroupSpec<double>> groups(2);
  groups[0].firms = 6;
  groups[0].rank = 2;
  groups[1].firms = 4;
  groups[1].rank = 3;
  groups[1].keep_prob = 0.4;
  const auto h = act::gen_heterogeneous_panel<double>(12, 5, groups, 9);
  CHECK(h.panel.dim_firm() == 10);
  REQUIRE(h.group_of.size() == 10);
  for (Index in = 0; in < 6; ++in) CHECK(h.group_of[size_t(in)] == 0);
  for (Index in = 6; in < 10; ++in) CHECK(h.group_of[size_t(in)] == 1);
  REQUIRE(h.models.size() == 2);
  CHECK(h.models[0].rank() == 2);
  CHECK(h.models[1].rank() == 3);

  // group 0 is fully observed; group 1 thinned to roughly keep_prob
  Index dense_obs = 0, sparse_obs = 0;
  for (Index it = 0; it < 12; ++it)
    for (Index il = 0; il < 5; ++il) {
      for (Index in = 0; in < 6; ++in)
        dense_obs += h.panel.observed(it, in, il) ? 1 : 0;
      for (Index in = 6; in < 10; ++in)
        sparse_obs += h.panel.observed(it, in, il) ? 1 : 0;
    }
  CHECK(dense_obs == 12 * 6 * 5);
  const double rate = double(sparse_obs) / (12 * 4 * 5);
  CHECK(rate > 0.25);
  CHECK(rate < 0.55);

  // the clean block of each group matches its stored model
  const Tensor3<double> block0 = act::reconstruct(h.models[0]);
  for (Index it = 0; it < 12; ++it)
    for (Index in = 0; in < 6; ++in)
      for (Index il = 0; il < 5; ++il)
        CHECK(h.clean(it, in, il) == block0(it, in, il));
}

TEST_CASE("groups can share time and characteristic structure") {
  std::vector<GroupSpec<double>> groups(3);
  groups[0].firms = 5;
  groups[1].firms = 5;
  groups[1].share_time_char_with = 0;
  groups[2].firms = 5;
  const auto h = act::gen_heterogeneous_panel<double>(10, 4, groups, 17);
  CHECK((h.models[1].time_factors - h.models[0].time_factors).norm() == 0.0);
  CHECK((h.models[1].char_factors - h.models[0].char_factors).norm() == 0.0);
  CHECK((h.models[1].firm_factors - h.models[0].firm_factors).norm() != 0.0);
  CHECK((h.models[2].time_factors - h.models[0].time_factors).norm() != 0.0);

  std::vector<GroupSpec<double>> bad(2);
  bad[0].firms = 3;
  bad[1].firms = 3;
  bad[1].share_time_char_with = 1;  // self/forward reference
  CHECK_THROWS_AS(act::gen_heterogeneous_panel<double>(6, 3, bad, 1),
                  act::ConfigError);
  bad[1].share_time_char_with = 0;
  bad[1].rank = 5;  // rank mismatch with the shared group
  CHECK_THROWS_AS(act::gen_heterogeneous_panel<double>(6, 3, bad, 1),
                  act::ConfigError);
  CHECK_THROWS_AS(
      act::gen_heterogeneous_panel<double>(6, 3, {}, 1), act::ConfigError);
}

TEST_CASE("market data plants a persistent predictable factor") {
  const auto s = act::gen_lowrank_panel<double>(24, 30, 3, 2, 0.0, 5);
  act::MarketSpec<double> spec;
  spec.factor_scale = 0.05;
  spec.factor_phi = 0.9;
  spec.noise_sd = 0;
  spec.risk_free = 0.003;
  Vector<double> loadings;
  const act::MarketData<double> m =
      act::gen_market_data(s.panel, spec, 31, &loadings);
  m.validate();
  REQUIRE(loadings.size() == 30);
  REQUIRE(m.returns.rows() == 24);
  REQUIRE(m.returns.cols() == 30);
  // with no betas and no noise: r(t, i) = rf + b_i * scale * phi^(t+1)
  for (Index it = 0; it < 24; ++it)
    for (Index in = 0; in < 30; ++in)
      CHECK(m.returns(it, in) ==
            doctest::Approx(0.003 + loadings[in] * 0.05 *
                                        std::pow(0.9, double(it + 1)))
                .epsilon(1e-10));
  // market caps are log-linear in the size characteristic
  for (Index it = 0; it < 24; ++it)
    for (Index in = 0; in < 30; ++in)
      CHECK(m.mcap(it, in) ==
            doctest::Approx(std::exp(s.panel.value(it, in, 0))).epsilon(1e-12));
  CHECK(m.risk_free.size() == 24);
  CHECK(m.risk_free[5] == 0.003);
}

TEST_CASE("characteristic drift uses last month's observed values only") {
  Tensor3<double> values(3, 2, 2);
  values.data().setConstant(0);
  values(0, 0, 0) = 2.0;  // firm 0's month-0 size
  values(0, 0, 1) = 1.0;
  Tensor3<std::uint8_t> mask(3, 2, 2);
  mask.data().setConstant(1);
  mask(1, 0, 1) = 0;  // firm 0's month-1 second characteristic is missing
  const MaskedTensor<double> panel(std::move(values), std::move(mask));
  act::MarketSpec<double> spec;
  spec.betas = Vector<double>(2);
  spec.betas << 0.1, 0.4;
  spec.noise_sd = 0;
  spec.risk_free = 0;
  const act::MarketData<double> m = act::gen_market_data(panel, spec, 2);
  CHECK(m.returns(0, 0) == 0.0);  // no month before the first
  CHECK(m.returns(1, 0) ==
        doctest::Approx(0.1 * 2.0 + 0.4 * 1.0).epsilon(1e-14));
  CHECK(m.returns(2, 0) == 0.0);  // month-1 chars: size 0, other unobserved

  act::MarketSpec<double> wrong;
  wrong.betas = Vector<double>::Ones(3);
  CHECK_THROWS_AS(act::gen_market_data(panel, wrong, 1), act::ConfigError);
  act::MarketSpec<double> oob;
  oob.size_index = 5;
  CHECK_THROWS_AS(act::gen_market_data(panel, oob, 1), act::ConfigError);
  act::MarketSpec<double> phi;
  phi.factor_phi = 0;
  CHECK_THROWS_AS(act::gen_market_data(panel, phi, 1), act::ConfigError);
}

TEST_CASE("market draws are seed deterministic") {
  const auto s = act::gen_lowrank_panel<double>(10, 8, 2, 1, 0.0, 3);
  act::MarketSpec<double> spec;
  spec.factor_scale = 0.02;
  const act::MarketData<double> a = act::gen_market_data(s.panel, spec, 77);
  const act::MarketData<double> b = act::gen_market_data(s.panel, spec, 77);
  const act::MarketData<double> c = act::gen_market_data(s.panel, spec, 78);
  CHECK((a.returns - b.returns).norm() == 0.0);
  CHECK((a.mcap - b.mcap).norm() == 0.0);
  CHECK((a.returns - c.returns).norm() != 0.0);
}
