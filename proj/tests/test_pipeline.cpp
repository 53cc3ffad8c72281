#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>
#include <utility>
#include <vector>

#include "act/baselines.hpp"
#include "act/pipeline.hpp"
#include "act/synth.hpp"
#include "act/tensor.hpp"

using act::ActConfig;
using act::Index;
using act::MaskedTensor;
using act::Rng;
using act::SolverConfig;
using act::Tensor3;

namespace {

MaskedTensor<double> masked_copy(const Tensor3<double>& clean, double keep,
                                 std::uint64_t seed,
                                 Tensor3<std::uint8_t>* mask_out = nullptr) {
  Rng rng(seed);
  Tensor3<std::uint8_t> mask(clean.dim_time(), clean.dim_firm(),
                             clean.dim_char());
  for (Index i = 0; i < mask.size(); ++i)
    mask.data()[i] = rng.uniform() < keep ? 1 : 0;
  if (mask_out) *mask_out = mask;
  return MaskedTensor<double>(clean, mask);
}

double heldout_sse(const Tensor3<double>& imputed, const Tensor3<double>& clean,
                   const Tensor3<std::uint8_t>& mask) {
  double sse = 0;
  for (Index i = 0; i < clean.size(); ++i)
    if (!mask.data()[i]) {
      const double d = imputed.data()[i] - clean.data()[i];
      sse += d * d;
    }
  return sse;
}

}  // namespace

TEST_CASE("dense completion reproduces a planted rank-2 cluster") {
  const act::SynthPanel<double> sp =
      act::gen_lowrank_panel<double>(10, 12, 5, 2, 0.0, 3);
  SolverConfig<double> cfg;
  cfg.rank = 2;
  cfg.max_iters = 500;
  cfg.rel_tol = 1e-14;
  std::vector<Index> firms(12);
  for (Index i = 0; i < 12; ++i) firms[i] = i;
  const auto [values, report] = act::complete_dense(sp.panel, firms, cfg);
  double err = 0, ref = 0;
  for (Index i = 0; i < values.size(); ++i) {
    const double d = values.data()[i] - sp.clean.data()[i];
    err += d * d;
    ref += sp.clean.data()[i] * sp.clean.data()[i];
  }
  CHECK(std::sqrt(err / ref) < 1e-6);
}

TEST_CASE("dense completion forces the ridge weight to zero") {
  const act::SynthPanel<double> sp =
      act::gen_lowrank_panel<double>(8, 6, 4, 2, 0.0, 5);
  SolverConfig<double> with_ridge;
  with_ridge.rank = 2;
  with_ridge.max_iters = 300;
  with_ridge.rel_tol = 1e-13;
  with_ridge.lambda = 10.0;
  SolverConfig<double> no_ridge = with_ridge;
  no_ridge.lambda = 0;
  std::vector<Index> firms(6);
  for (Index i = 0; i < 6; ++i) firms[i] = i;
  const auto a = act::complete_dense(sp.panel, firms, with_ridge);
  const auto b = act::complete_dense(sp.panel, firms, no_ridge);
  CHECK(act::bitwise_equal(a.first, b.first));
  CHECK_THROWS_AS(act::complete_dense(sp.panel, {}, no_ridge),
                  act::StructuralError);
}

TEST_CASE("single-firm dense completion matches the slice's rank-1 svd") {
  Rng rng(9);
  const Index t = 9, l = 6;
  Tensor3<double> values(t, 1, l);
  for (Index i = 0; i < values.size(); ++i) values.data()[i] = rng.normal();
  Tensor3<std::uint8_t> mask(t, 1, l);
  mask.data().setConstant(1);
  const MaskedTensor<double> x(values, mask);

  SolverConfig<double> cfg;
  cfg.rank = 1;
  cfg.max_iters = 2000;
  cfg.rel_tol = 1e-15;
  const auto [rec, report] = act::complete_dense(x, {0}, cfg);

  act::Matrix<double> slice(t, l);
  for (Index it = 0; it < t; ++it)
    for (Index il = 0; il < l; ++il) slice(it, il) = values(it, 0, il);
  Eigen::JacobiSVD<act::Matrix<double>> svd(slice);
  const double sigma1 = svd.singularValues()[0];
  const double want = slice.squaredNorm() - sigma1 * sigma1;
  CHECK(act::masked_residual_sq(
            x, act::make_cp_model(act::Matrix<double>::Zero(t, 1).eval(),
                                  act::Matrix<double>::Zero(1, 1).eval(),
                                  act::Matrix<double>::Zero(l, 1).eval())) ==
        doctest::Approx(slice.squaredNorm()));
  double got = 0;
  for (Index it = 0; it < t; ++it)
    for (Index il = 0; il < l; ++il) {
      const double d = rec(it, 0, il) - slice(it, il);
      got += d * d;
    }
  CHECK(got == doctest::Approx(want).epsilon(1e-8));
}

TEST_CASE("aggregation beats completing a starved cluster alone") {
  int aggregate_wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Index t = 14, nd = 20, l = 6;
    const act::SynthPanel<double> sp =
        act::gen_lowrank_panel<double>(t, nd, l, 2, 0.0, 200 + seed);

    // Sparse firms duplicate dense firms, then lose 95% of their cells.
    Tensor3<double> values(t, 2 * nd, l);
    Tensor3<std::uint8_t> mask(t, 2 * nd, l);
    Rng rng(300 + seed);
    for (Index it = 0; it < t; ++it)
      for (Index in = 0; in < 2 * nd; ++in)
        for (Index il = 0; il < l; ++il) {
          values(it, in, il) = sp.clean(it, in % nd, il);
          mask(it, in, il) = in < nd ? 1 : (rng.uniform() < 0.05 ? 1 : 0);
        }
    const MaskedTensor<double> x(values, mask);

    std::vector<Index> sparse, dense;
    for (Index i = 0; i < nd; ++i) dense.push_back(i);
    for (Index i = nd; i < 2 * nd; ++i) sparse.push_back(i);

    SolverConfig<double> cfg;
    cfg.rank = 2;
    cfg.max_iters = 400;
    cfg.rel_tol = 1e-12;
    cfg.seed = seed;
    const act::SparseCompletion<double> agg =
        act::complete_sparse(x, sparse, dense, cfg);
    CHECK(!agg.joint_fallback);

    // No aggregation: fit the starved firms on their own sub-panel.
    const auto [alone, alone_fit] =
        act::impute_cp(act::extract_subtensor(x, sparse), cfg);

    double agg_err = 0, alone_err = 0;
    for (Index it = 0; it < t; ++it)
      for (Index j = 0; j < nd; ++j)
        for (Index il = 0; il < l; ++il)
          if (!mask(it, nd + j, il)) {
            const double truth = sp.clean(it, j, il);
            agg_err += std::pow(agg.values(it, j, il) - truth, 2);
            alone_err += std::pow(alone(it, j, il) - truth, 2);
          }
    if (agg_err < alone_err) ++aggregate_wins;
  }
  CHECK(aggregate_wins >= 4);
}

TEST_CASE("sparse completion requires a nonempty sparse set") {
  const act::SynthPanel<double> sp =
      act::gen_lowrank_panel<double>(6, 5, 4, 2, 0.0, 1);
  SolverConfig<double> cfg;
  cfg.rank = 2;
  CHECK_THROWS_AS(act::complete_sparse(sp.panel, {}, {0, 1}, cfg),
                  act::StructuralError);
}

TEST_CASE("assemble restores interleaved firm order") {
  const Index t = 3, l = 2;
  Tensor3<double> even(t, 2, l), odd(t, 2, l);
  for (Index it = 0; it < t; ++it)
    for (Index j = 0; j < 2; ++j)
      for (Index il = 0; il < l; ++il) {
        even(it, j, il) = 100 * double(2 * j) + double(10 * it + il);
        odd(it, j, il) = 100 * double(2 * j + 1) + double(10 * it + il);
      }
  const Tensor3<double> out = act::assemble<double>(
      {{{0, 2}, even}, {{1, 3}, odd}}, 4);
  for (Index it = 0; it < t; ++it)
    for (Index f = 0; f < 4; ++f)
      for (Index il = 0; il < l; ++il)
        CHECK(out(it, f, il) == 100.0 * double(f) + double(10 * it + il));
}

TEST_CASE("assemble is the identity for a single full slice") {
  Rng rng(21);
  Tensor3<double> x(4, 5, 3);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const Tensor3<double> out =
      act::assemble<double>({{{0, 1, 2, 3, 4}, x}}, 5);
  CHECK(act::bitwise_equal(out, x));
}

TEST_CASE("assemble names missing and duplicated firms") {
  Tensor3<double> one(2, 1, 2);
  one.data().setConstant(1);
  CHECK_THROWS_WITH_AS(act::assemble<double>({{{0}, one}}, 2),
                       doctest::Contains("firm 1"), act::StructuralError);
  CHECK_THROWS_WITH_AS(
      act::assemble<double>({{{0}, one}, {{0}, one}}, 1),
      doctest::Contains("firm 0"), act::StructuralError);
  CHECK_THROWS_AS(act::assemble<double>({}, 1), act::StructuralError);
}

TEST_CASE("single-cluster zero-threshold run equals the vanilla baseline") {
  const act::SynthPanel<double> sp =
      act::gen_lowrank_panel<double>(10, 14, 5, 3, 0.02, 31);
  Tensor3<std::uint8_t> mask;
  const MaskedTensor<double> x = masked_copy(sp.clean, 0.7, 77, &mask);

  ActConfig<double> cfg;
  cfg.clusters = 1;
  cfg.tau = 0;
  cfg.seed = 4;
  cfg.solver.rank = 3;
  cfg.solver.max_iters = 80;
  const auto [imputed, report] = act::run_act(x, cfg);

  SolverConfig<double> scfg = cfg.solver;
  scfg.seed = cfg.seed;
  const auto [vanilla, fit] = act::impute_cp(x, scfg);
  CHECK(act::bitwise_equal(imputed, vanilla));
  REQUIRE(report.fits.size() == 1);
  CHECK(report.fits[0].label == act::DensityLabel::dense);
}

TEST_CASE("run_act is deterministic and honors keep_observed") {
  const act::SynthPanel<double> sp =
      act::gen_lowrank_panel<double>(8, 20, 4, 2, 0.01, 41);
  const MaskedTensor<double> x = masked_copy(sp.clean, 0.6, 5);

  ActConfig<double> cfg;
  cfg.clusters = 3;
  cfg.tau = 0.4;
  cfg.seed = 11;
  cfg.solver.rank = 2;
  cfg.solver.max_iters = 60;
  const auto a = act::run_act(x, cfg);
  const auto b = act::run_act(x, cfg);
  CHECK(act::bitwise_equal(a.first, b.first));

  cfg.keep_observed = true;
  const auto c = act::run_act(x, cfg);
  for (Index it = 0; it < x.dim_time(); ++it)
    for (Index in = 0; in < x.dim_firm(); ++in)
      for (Index il = 0; il < x.dim_char(); ++il)
        if (x.observed(it, in, il))
          CHECK(c.first(it, in, il) == x.value(it, in, il));
}

TEST_CASE("an all-sparse panel falls back to one joint fit with a warning") {
  const act::SynthPanel<double> sp =
      act::gen_lowrank_panel<double>(8, 12, 4, 2, 0.0, 51);
  const MaskedTensor<double> x = masked_copy(sp.clean, 0.2, 9);

  ActConfig<double> cfg;
  cfg.clusters = 2;
  cfg.tau = 0.9;
  cfg.solver.rank = 2;
  cfg.solver.max_iters = 40;
  const auto [imputed, report] = act::run_act(x, cfg);
  REQUIRE(report.warnings.size() == 1);
  CHECK(report.warnings[0].find("jointly") != std::string::npos);
  for (const auto& fit : report.fits)
    CHECK(fit.label == act::DensityLabel::sparse);
}

TEST_CASE("clustering shields dense firms from a heavy sparse group") {
  // A large-amplitude, 95%-masked group with its own factor structure drags
  // the whole-panel rank-2 fit away from the dense group's structure. The
  // clustered pipeline completes the dense group in isolation, so its
  // held-out cells are unaffected.
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::vector<act::GroupSpec<double>> groups(2);
    groups[0].firms = 24;
    groups[0].rank = 2;
    groups[0].keep_prob = 1.0;
    groups[1].firms = 24;
    groups[1].rank = 2;
    groups[1].keep_prob = 0.05;
    groups[1].scale = 4.5;
    const act::HeterogeneousPanel<double> hp =
        act::gen_heterogeneous_panel<double>(16, 6, groups, 400 + seed);

    // Hold out a fifth of the dense group's cells for scoring.
    Rng rng(500 + seed);
    Tensor3<std::uint8_t> mask(hp.clean.dim_time(), hp.clean.dim_firm(),
                               hp.clean.dim_char());
    for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = 1;
    for (Index it = 0; it < 16; ++it)
      for (Index in = 0; in < 48; ++in)
        for (Index il = 0; il < 6; ++il) {
          if (!hp.panel.observed(it, in, il))
            mask(it, in, il) = 0;
          else if (hp.group_of[static_cast<std::size_t>(in)] == 0 &&
                   rng.uniform() < 0.2)
            mask(it, in, il) = 0;
        }
    const MaskedTensor<double> x(hp.clean, mask);

    ActConfig<double> cfg;
    cfg.clusters = 2;
    cfg.tau = 0.4;
    cfg.seed = seed;
    cfg.solver.rank = 2;
    cfg.solver.max_iters = 200;
    cfg.solver.rel_tol = 1e-10;
    const auto [clustered, report] = act::run_act(x, cfg);

    SolverConfig<double> scfg = cfg.solver;
    scfg.seed = seed;
    const auto [vanilla, fit] = act::impute_cp(x, scfg);

    // eval = 0 marks exactly the held-out dense-group cells.
    Tensor3<std::uint8_t> eval(16, 48, 6);
    for (Index i = 0; i < eval.size(); ++i) eval.data()[i] = 1;
    for (Index it = 0; it < 16; ++it)
      for (Index in = 0; in < 24; ++in)
        for (Index il = 0; il < 6; ++il)
          if (hp.panel.observed(it, in, il) && !x.observed(it, in, il))
            eval(it, in, il) = 0;
    if (heldout_sse(clustered, hp.clean, eval) <
        heldout_sse(vanilla, hp.clean, eval))
      ++wins;
  }
  CHECK(wins >= 4);
}
