#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "act/common.hpp"
#include "act/cp_model.hpp"
#include "act/pricing.hpp"
#include "act/tensor.hpp"

namespace act {

/*
 * Cross-sectional rank transform. Each (month, characteristic) slice maps
 * its observed firms to averaged-tie ranks scaled into (-0.5, 0.5) via
 * rank / (count + 1) - 0.5. Unobserved cells stay unobserved.
 */
template <typename Scalar>
MaskedTensor<Scalar> rank_normalize(const MaskedTensor<Scalar>& panel) {
  const Index t = panel.dim_time(), n = panel.dim_firm(), l = panel.dim_char();
  Tensor3<Scalar> values(t, n, l);
  Tensor3<std::uint8_t> mask(t, n, l);
  std::vector<Index> firms;
  std::vector<double> ranks;
  for (Index it = 0; it < t; ++it)
    for (Index il = 0; il < l; ++il) {
      firms.clear();
      for (Index in = 0; in < n; ++in) {
        mask(it, in, il) = panel.observed(it, in, il) ? 1 : 0;
        if (panel.observed(it, in, il)) firms.push_back(in);
      }
      if (firms.empty()) continue;
      std::sort(firms.begin(), firms.end(), [&](Index a, Index b) {
        return panel.value(it, a, il) < panel.value(it, b, il);
      });
      const Index m = static_cast<Index>(firms.size());
      ranks.assign(static_cast<std::size_t>(m), 0);
      Index i = 0;
      while (i < m) {
        Index j = i;
        while (j + 1 < m &&
               panel.value(it, firms[static_cast<std::size_t>(j + 1)], il) ==
                   panel.value(it, firms[static_cast<std::size_t>(i)], il))
          ++j;
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (Index k = i; k <= j; ++k)
          ranks[static_cast<std::size_t>(k)] = shared;
        i = j + 1;
      }
      for (Index k = 0; k < m; ++k)
        values(it, firms[static_cast<std::size_t>(k)], il) = static_cast<Scalar>(
            ranks[static_cast<std::size_t>(k)] / static_cast<double>(m + 1) -
            0.5);
    }
  return MaskedTensor<Scalar>(std::move(values), std::move(mask),
                              panel.labels());
}

namespace detail {

template <typename Scalar>
Matrix<Scalar> random_factor(Index rows, Index rank, Scalar scale, Rng& rng) {
  Matrix<Scalar> m(rows, rank);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < rank; ++j)
      m(i, j) = scale * static_cast<Scalar>(rng.normal());
  return m;
}

}  // namespace detail

/// A synthetic panel together with the low-rank truth it was built from.
template <typename Scalar>
struct SynthPanel {
  Tensor3<Scalar> clean;
  MaskedTensor<Scalar> panel;
  CpModel<Scalar> model;
};

/*
 * Noisy low-rank panel, fully observed. Factors have independent standard
 * normal entries; the time factors are scaled by 1/sqrt(rank) so cell values
 * stay O(1) as the rank grows. Observation noise is additive Gaussian. With
 * normalize set, the panel's values are passed through the cross-sectional
 * rank transform (the clean tensor and model keep the raw planted truth).
 */
template <typename Scalar>
SynthPanel<Scalar> gen_lowrank_panel(Index t, Index n, Index l, Index rank,
                                     Scalar noise_sd, std::uint64_t seed,
                                     bool normalize = false) {
  if (t < 1 || n < 1 || l < 1 || rank < 1)
    throw ConfigError("gen_lowrank_panel: dimensions must be positive");
  Rng rng(seed);
  const Scalar time_scale =
      Scalar(1) / std::sqrt(static_cast<Scalar>(rank));
  SynthPanel<Scalar> out;
  Matrix<Scalar> u = detail::random_factor<Scalar>(t, rank, time_scale, rng);
  Matrix<Scalar> v = detail::random_factor<Scalar>(n, rank, Scalar(1), rng);
  Matrix<Scalar> w = detail::random_factor<Scalar>(l, rank, Scalar(1), rng);
  out.model = make_cp_model(std::move(u), std::move(v), std::move(w));
  out.clean = reconstruct(out.model);
  Tensor3<Scalar> noisy = out.clean;
  if (noise_sd > 0)
    for (Index i = 0; i < noisy.size(); ++i)
      noisy.data()[i] += noise_sd * static_cast<Scalar>(rng.normal());
  Tensor3<std::uint8_t> mask(t, n, l);
  mask.data().setConstant(1);
  out.panel = MaskedTensor<Scalar>(std::move(noisy), std::move(mask),
                                   default_labels(t, n, l));
  if (normalize) out.panel = rank_normalize(out.panel);
  return out;
}

/// One firm block of a heterogeneous panel. A group may reuse the time and
/// characteristic factors of an earlier group (sharing its structure while
/// contributing fresh firm loadings); -1 draws everything fresh.
template <typename Scalar>
struct GroupSpec {
  Index firms = 0;
  Index rank = 2;
  Scalar noise_sd = 0;
  Scalar keep_prob = 1;    // per-cell observation probability
  int share_time_char_with = -1;
  Scalar scale = 1;

  void validate() const {
    if (firms < 1) throw ConfigError("GroupSpec: firms must be positive");
    if (rank < 1) throw ConfigError("GroupSpec: rank must be positive");
    if (!(keep_prob > 0) || keep_prob > 1)
      throw ConfigError("GroupSpec: keep_prob must lie in (0, 1]");
    if (noise_sd < 0) throw ConfigError("GroupSpec: negative noise");
  }
};

template <typename Scalar>
struct HeterogeneousPanel {
  MaskedTensor<Scalar> panel;
  Tensor3<Scalar> clean;
  std::vector<Index> group_of;  // firm index -> group index
  std::vector<CpModel<Scalar>> models;
};

/*
 * Panel stitched from firm groups with distinct low-rank structures and
 * observation densities. Firms are laid out group by group in the given
 * order. Groups that share time and characteristic factors must point at an
 * earlier group of the same rank.
 */
template <typename Scalar>
HeterogeneousPanel<Scalar> gen_heterogeneous_panel(
    Index t, Index l, const std::vector<GroupSpec<Scalar>>& groups,
    std::uint64_t seed) {
  if (groups.empty())
    throw ConfigError("gen_heterogeneous_panel: no groups");
  Index n = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    groups[g].validate();
    if (groups[g].share_time_char_with >= 0) {
      const int ref = groups[g].share_time_char_with;
      if (ref >= static_cast<int>(g))
        throw ConfigError(
            "gen_heterogeneous_panel: groups may only share with an earlier "
            "group");
      if (groups[static_cast<std::size_t>(ref)].rank != groups[g].rank)
        throw ConfigError(
            "gen_heterogeneous_panel: shared structure requires equal ranks");
    }
    n += groups[g].firms;
  }

  Rng rng(seed);
  HeterogeneousPanel<Scalar> out;
  out.clean = Tensor3<Scalar>(t, n, l);
  Tensor3<Scalar> noisy(t, n, l);
  Tensor3<std::uint8_t> mask(t, n, l);
  out.group_of.assign(static_cast<std::size_t>(n), 0);

  Index firm0 = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const GroupSpec<Scalar>& spec = groups[g];
    const Scalar time_scale =
        spec.scale / std::sqrt(static_cast<Scalar>(spec.rank));
    Matrix<Scalar> u, w;
    if (spec.share_time_char_with >= 0) {
      const CpModel<Scalar>& ref =
          out.models[static_cast<std::size_t>(spec.share_time_char_with)];
      u = ref.time_factors;
      w = ref.char_factors;
      if (spec.scale !=
          groups[static_cast<std::size_t>(spec.share_time_char_with)].scale)
        u *= spec.scale /
             groups[static_cast<std::size_t>(spec.share_time_char_with)].scale;
    } else {
      u = detail::random_factor<Scalar>(t, spec.rank, time_scale, rng);
      w = detail::random_factor<Scalar>(l, spec.rank, Scalar(1), rng);
    }
    Matrix<Scalar> v =
        detail::random_factor<Scalar>(spec.firms, spec.rank, Scalar(1), rng);
    out.models.push_back(
        make_cp_model(std::move(u), std::move(v), std::move(w)));
    const Tensor3<Scalar> block = reconstruct(out.models.back());

    for (Index it = 0; it < t; ++it)
      for (Index in = 0; in < spec.firms; ++in)
        for (Index il = 0; il < l; ++il) {
          const Scalar truth = block(it, in, il);
          out.clean(it, firm0 + in, il) = truth;
          const Scalar eps =
              spec.noise_sd > 0
                  ? spec.noise_sd * static_cast<Scalar>(rng.normal())
                  : Scalar(0);
          noisy(it, firm0 + in, il) = truth + eps;
          const bool keep =
              spec.keep_prob >= 1 || rng.uniform() < spec.keep_prob;
          mask(it, firm0 + in, il) = keep ? 1 : 0;
        }
    for (Index in = 0; in < spec.firms; ++in)
      out.group_of[static_cast<std::size_t>(firm0 + in)] =
          static_cast<Index>(g);
    firm0 += spec.firms;
  }
  out.panel = MaskedTensor<Scalar>(std::move(noisy), std::move(mask),
                                   default_labels(t, n, l));
  return out;
}

/// Knobs for synthetic market data generated on top of a panel. Two signal
/// sources can be mixed: a characteristic-driven drift (betas against last
/// month's characteristics) and a single planted persistent factor whose
/// series decays geometrically, so month-t levels predict month t+1.
template <typename Scalar>
struct MarketSpec {
  Vector<Scalar> betas;               // per characteristic; empty = all zero
  Scalar factor_scale = 0;            // 0 disables the planted factor
  Scalar factor_phi = Scalar(0.97);   // per-month decay of the factor level
  Scalar noise_sd = Scalar(0.02);
  Scalar risk_free = Scalar(0.002);
  Scalar mcap_scale = Scalar(1);
  Index size_index = 0;
};

/*
 * Market data generated on top of a panel:
 *
 *   r(t, i) = rf + sum_l beta_l x(t-1, i, l) + b_i f(t) + noise,
 *
 * where f(t) = factor_scale * phi^t and the loadings b_i are standard
 * normal draws. Unobserved characteristics contribute nothing and the
 * first month carries no characteristic drift. Market caps are log-linear
 * in the size characteristic, so value weighting has cross-sectional bite.
 * The planted loadings are written through loadings_out when given.
 */
template <typename Scalar>
MarketData<Scalar> gen_market_data(const MaskedTensor<Scalar>& panel,
                                   const MarketSpec<Scalar>& spec,
                                   std::uint64_t seed,
                                   Vector<Scalar>* loadings_out = nullptr) {
  const Index t = panel.dim_time(), n = panel.dim_firm(), l = panel.dim_char();
  Vector<Scalar> betas = spec.betas;
  if (betas.size() == 0) betas = Vector<Scalar>::Zero(l);
  if (betas.size() != l)
    throw ConfigError("gen_market_data: one beta per characteristic");
  if (spec.size_index < 0 || spec.size_index >= l)
    throw ConfigError("gen_market_data: size index out of range");
  if (!(spec.factor_phi > 0) || spec.factor_phi > 1)
    throw ConfigError("gen_market_data: factor_phi must lie in (0, 1]");

  Rng rng(seed);
  Vector<Scalar> loadings(n);
  for (Index in = 0; in < n; ++in)
    loadings[in] = static_cast<Scalar>(rng.normal());
  if (loadings_out) *loadings_out = loadings;

  MarketData<Scalar> out;
  out.returns.resize(t, n);
  out.mcap.resize(t, n);
  out.risk_free = Vector<Scalar>::Constant(t, spec.risk_free);
  Scalar factor = spec.factor_scale * spec.factor_phi;
  for (Index it = 0; it < t; ++it) {
    for (Index in = 0; in < n; ++in) {
      Scalar excess = 0;
      if (it > 0)
        for (Index il = 0; il < l; ++il)
          if (panel.observed(it - 1, in, il))
            excess += betas[il] * panel.value(it - 1, in, il);
      if (spec.factor_scale != Scalar(0)) excess += loadings[in] * factor;
      out.returns(it, in) = spec.risk_free + excess +
                            spec.noise_sd * static_cast<Scalar>(rng.normal());
      const Scalar size = panel.observed(it, in, spec.size_index)
                              ? panel.value(it, in, spec.size_index)
                              : Scalar(0);
      out.mcap(it, in) = std::exp(spec.mcap_scale * size);
    }
    factor *= spec.factor_phi;
  }
  return out;
}

}  // namespace act
