#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "act/common.hpp"
#include "act/tensor.hpp"

namespace act {

enum class Regime { mar, block, logit };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::mar: return "mar";
    case Regime::block: return "block";
    default: return "logit";
  }
}

inline Regime regime_from_name(const std::string& name) {
  if (name == "mar") return Regime::mar;
  if (name == "block") return Regime::block;
  if (name == "logit") return Regime::logit;
  throw ConfigError("unknown masking regime '" + name + "'");
}

template <typename Scalar>
struct HoldoutCell {
  Index t = 0, n = 0, l = 0;
  Scalar value = 0;  // the observed value being hidden
};

/// A value-carrying hold-out set: evaluation never needs the original panel.
template <typename Scalar>
struct HoldoutPlan {
  Regime regime = Regime::mar;
  double fraction = 0;
  std::uint64_t seed = 0;
  std::vector<HoldoutCell<Scalar>> cells;
  bool partial = false;        // target could not be reached
  Index blocks_total = 0;      // block regime bookkeeping
  Index blocks_at_start = 0;
};

namespace detail {

template <typename Scalar>
void sort_cells(std::vector<HoldoutCell<Scalar>>& cells) {
  std::sort(cells.begin(), cells.end(),
            [](const HoldoutCell<Scalar>& a, const HoldoutCell<Scalar>& b) {
              if (a.t != b.t) return a.t < b.t;
              if (a.n != b.n) return a.n < b.n;
              return a.l < b.l;
            });
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

/// Uniform hold-out: floor(fraction * observed) cells drawn without
/// replacement from the observed set.
template <typename Scalar>
HoldoutPlan<Scalar> mask_mar(const MaskedTensor<Scalar>& x, double fraction,
                             std::uint64_t seed) {
  if (!(fraction > 0 && fraction < 1))
    throw ConfigError("mask_mar: fraction must lie in (0, 1)");
  std::vector<Index> cells;
  cells.reserve(static_cast<std::size_t>(x.observed_count()));
  for (Index i = 0; i < x.size(); ++i)
    if (x.mask().data()[i] != 0) cells.push_back(i);
  const Index target =
      static_cast<Index>(fraction * static_cast<double>(cells.size()));
  if (target < 1)
    throw ConfigError(
        "mask_mar: fraction * observed rounds down to zero cells");

  Rng rng(seed);
  for (Index i = 0; i < target; ++i) {
    const Index j =
        i + rng.index(static_cast<Index>(cells.size()) - i);
    std::swap(cells[static_cast<std::size_t>(i)],
              cells[static_cast<std::size_t>(j)]);
  }
  HoldoutPlan<Scalar> plan;
  plan.regime = Regime::mar;
  plan.fraction = fraction;
  plan.seed = seed;
  plan.cells.reserve(static_cast<std::size_t>(target));
  const Index n = x.dim_firm(), l = x.dim_char();
  for (Index i = 0; i < target; ++i) {
    const Index flat = cells[static_cast<std::size_t>(i)];
    const Index il = flat % l;
    const Index in = (flat / l) % n;
    const Index it = flat / (l * n);
    plan.cells.push_back({it, in, il, x.value(it, in, il)});
  }
  detail::sort_cells(plan.cells);
  return plan;
}

struct BlockParams {
  Index block_len = 12;
  double start_share = 0.40;
};

/*
 * Contiguous-gap hold-out. Whole block_len-month runs are removed from
 * randomly chosen (firm, characteristic) series until the target cell count
 * is reached; runs never overlap cells already held out of the same series.
 * Each block's placement type is drawn first: with probability start_share
 * the run is anchored at the series' first observed month (clamped so the
 * window fits), otherwise at a uniformly random feasible start. Blocks are
 * never truncated, so the final block may overshoot the target by up to
 * block_len - 1 cells; when no feasible placement remains the plan is
 * returned partial.
 */
template <typename Scalar>
HoldoutPlan<Scalar> mask_block(const MaskedTensor<Scalar>& x, double fraction,
                               std::uint64_t seed, BlockParams params = {}) {
  if (!(fraction > 0 && fraction < 1))
    throw ConfigError("mask_block: fraction must lie in (0, 1)");
  if (params.block_len < 1 || params.block_len > x.dim_time())
    throw ConfigError("mask_block: block length must fit in the time axis");
  if (!(params.start_share >= 0 && params.start_share <= 1))
    throw ConfigError("mask_block: start_share must lie in [0, 1]");

  const Index t = x.dim_time(), n = x.dim_firm(), l = x.dim_char();
  const Index series_count = n * l;
  const Index target = static_cast<Index>(
      std::llround(fraction * static_cast<double>(x.observed_count())));
  if (target < 1)
    throw ConfigError(
        "mask_block: fraction * observed rounds to zero cells");

  const Index max_start = t - params.block_len;
  auto series_of = [&](Index s) {
    return std::pair<Index, Index>{s / l, s % l};
  };
  std::vector<Index> first_obs(static_cast<std::size_t>(series_count), -1);
  for (Index s = 0; s < series_count; ++s) {
    const auto [in, il] = series_of(s);
    for (Index it = 0; it < t; ++it)
      if (x.observed(it, in, il)) {
        first_obs[static_cast<std::size_t>(s)] = it;
        break;
      }
  }
  // held[s] is allocated lazily; a series without it has no hold-outs yet.
  std::vector<std::vector<char>> held(static_cast<std::size_t>(series_count));
  auto window_new_cells = [&](Index s, Index start) -> Index {
    const auto [in, il] = series_of(s);
    const auto& h = held[static_cast<std::size_t>(s)];
    Index fresh = 0;
    for (Index it = start; it < start + params.block_len; ++it) {
      if (!h.empty() && h[static_cast<std::size_t>(it)]) return -1;
      if (x.observed(it, in, il)) ++fresh;
    }
    return fresh;
  };
  auto start_anchor = [&](Index s) {
    return std::min(first_obs[static_cast<std::size_t>(s)], max_start);
  };
  auto feasible = [&](Index s, bool start_type) -> bool {
    if (first_obs[static_cast<std::size_t>(s)] < 0) return false;
    if (start_type) return window_new_cells(s, start_anchor(s)) > 0;
    if (held[static_cast<std::size_t>(s)].empty()) return true;
    for (Index st = 0; st <= max_start; ++st)
      if (window_new_cells(s, st) > 0) return true;
    return false;
  };

  Rng rng(seed);
  HoldoutPlan<Scalar> plan;
  plan.regime = Regime::block;
  plan.fraction = fraction;
  plan.seed = seed;
  Index held_cells = 0;

  std::vector<Index> candidates;
  std::vector<Index> starts;
  while (held_cells < target) {
    bool start_type = rng.uniform() < params.start_share;
    Index chosen_series = -1, chosen_start = -1;
    for (int attempt = 0; attempt < 2 && chosen_series < 0; ++attempt) {
      candidates.clear();
      for (Index s = 0; s < series_count; ++s)
        if (feasible(s, start_type)) candidates.push_back(s);
      if (!candidates.empty()) {
        chosen_series = candidates[static_cast<std::size_t>(
            rng.index(static_cast<Index>(candidates.size())))];
        if (start_type) {
          chosen_start = start_anchor(chosen_series);
        } else {
          starts.clear();
          for (Index st = 0; st <= max_start; ++st)
            if (window_new_cells(chosen_series, st) > 0) starts.push_back(st);
          chosen_start = starts[static_cast<std::size_t>(
              rng.index(static_cast<Index>(starts.size())))];
        }
      }
      if (chosen_series < 0) start_type = !start_type;  // try the other type
    }
    if (chosen_series < 0) {
      plan.partial = true;
      break;
    }
    auto& h = held[static_cast<std::size_t>(chosen_series)];
    if (h.empty()) h.assign(static_cast<std::size_t>(t), 0);
    const auto [in, il] = series_of(chosen_series);
    for (Index it = chosen_start; it < chosen_start + params.block_len;
         ++it) {
      h[static_cast<std::size_t>(it)] = 1;
      if (x.observed(it, in, il)) {
        plan.cells.push_back({it, in, il, x.value(it, in, il)});
        ++held_cells;
      }
    }
    ++plan.blocks_total;
    if (start_type) ++plan.blocks_at_start;
  }
  detail::sort_cells(plan.cells);
  return plan;
}

struct LogitParams {
  // Stage 1: an initial reporting gap per series, drawn from a logistic
  // model on the series' own density and its firm's mean density, with a
  // geometric prefix length.
  double gap_intercept = -1.5;
  double gap_series_coef = -0.5;
  double gap_firm_coef = -0.5;
  double gap_geo_p = 0.25;
  // Stage 2: month-by-month hold-out with persistence b on last month's
  // hold-out state and a series-density tilt c. The intercept a is
  // calibrated, not configured.
  double prev_coef = 2.0;
  double density_coef = -1.0;
};

namespace detail {

template <typename Scalar>
struct LogitDraws {
  std::vector<double> u_cell;      // one uniform per cell, (n, l, t) order
  std::vector<double> series_density;
  std::vector<double> firm_density;
  std::vector<Index> prefix_len;   // 0 when no initial gap
};

template <typename Scalar>
LogitDraws<Scalar> logit_draws(const MaskedTensor<Scalar>& x,
                               const LogitParams& params, Rng& rng) {
  const Index t = x.dim_time(), n = x.dim_firm(), l = x.dim_char();
  LogitDraws<Scalar> draws;
  draws.u_cell.resize(static_cast<std::size_t>(n * l * t));
  draws.series_density.resize(static_cast<std::size_t>(n * l));
  draws.firm_density.resize(static_cast<std::size_t>(n));
  draws.prefix_len.assign(static_cast<std::size_t>(n * l), 0);
  for (Index in = 0; in < n; ++in) {
    Index firm_obs = 0;
    for (Index il = 0; il < l; ++il)
      for (Index it = 0; it < t; ++it)
        if (x.observed(it, in, il)) ++firm_obs;
    draws.firm_density[static_cast<std::size_t>(in)] =
        t * l == 0 ? 0.0 : static_cast<double>(firm_obs) /
                               static_cast<double>(t * l);
  }
  for (Index in = 0; in < n; ++in)
    for (Index il = 0; il < l; ++il) {
      const Index s = in * l + il;
      Index obs = 0;
      for (Index it = 0; it < t; ++it)
        if (x.observed(it, in, il)) ++obs;
      const double density =
          t == 0 ? 0.0 : static_cast<double>(obs) / static_cast<double>(t);
      draws.series_density[static_cast<std::size_t>(s)] = density;
      const double p_gap = sigmoid(
          params.gap_intercept + params.gap_series_coef * density +
          params.gap_firm_coef *
              draws.firm_density[static_cast<std::size_t>(in)]);
      const double u_gap = rng.uniform();
      const double u_geo = rng.uniform();
      if (obs > 0 && u_gap < p_gap) {
        // Geometric on {1, 2, ...} by inversion, capped by the series.
        const double g = std::floor(std::log1p(-u_geo) /
                                    std::log1p(-params.gap_geo_p)) +
                         1.0;
        draws.prefix_len[static_cast<std::size_t>(s)] =
            std::min<Index>(obs, static_cast<Index>(g));
      }
      for (Index it = 0; it < t; ++it)
        draws.u_cell[static_cast<std::size_t>(s * t + it)] = rng.uniform();
    }
  return draws;
}

// Realizes the stage-2 walk for a given intercept using pre-drawn uniforms.
// With prev_coef >= 0 the held count is monotone in the intercept, which
// makes bisection exact up to one cell.
template <typename Scalar, typename Visitor>
Index logit_realize(const MaskedTensor<Scalar>& x, const LogitParams& params,
                    const LogitDraws<Scalar>& draws, double intercept,
                    Visitor&& visit) {
  const Index t = x.dim_time(), n = x.dim_firm(), l = x.dim_char();
  Index held = 0;
  for (Index in = 0; in < n; ++in)
    for (Index il = 0; il < l; ++il) {
      const Index s = in * l + il;
      const double density =
          draws.series_density[static_cast<std::size_t>(s)];
      const double p_fresh =
          sigmoid(intercept + params.density_coef * density);
      const double p_after =
          sigmoid(intercept + params.prev_coef + params.density_coef * density);
      Index obs_seen = 0;
      bool prev = false;
      for (Index it = 0; it < t; ++it) {
        if (!x.observed(it, in, il)) continue;
        ++obs_seen;
        bool mask_cell;
        if (obs_seen <= draws.prefix_len[static_cast<std::size_t>(s)]) {
          mask_cell = true;
        } else {
          mask_cell = draws.u_cell[static_cast<std::size_t>(s * t + it)] <
                      (prev ? p_after : p_fresh);
        }
        if (mask_cell) {
          ++held;
          visit(it, in, il);
        }
        prev = mask_cell;
      }
    }
  return held;
}

}  // namespace detail

/*
 * Two-stage logistic hold-out mirroring how reporting gaps arise: some
 * series start with a missing prefix, and month-level hold-out persists.
 * The stage-2 intercept is calibrated by bisection against the realized
 * count for this plan's own draws, so the achieved fraction lands within one
 * cell of the closest achievable count.
 */
template <typename Scalar>
HoldoutPlan<Scalar> mask_logit(const MaskedTensor<Scalar>& x, double fraction,
                               std::uint64_t seed, LogitParams params = {}) {
  if (!(fraction > 0 && fraction < 1))
    throw ConfigError("mask_logit: fraction must lie in (0, 1)");
  if (!(params.gap_geo_p > 0 && params.gap_geo_p < 1))
    throw ConfigError("mask_logit: gap_geo_p must lie in (0, 1)");
  const Index target = static_cast<Index>(
      std::llround(fraction * static_cast<double>(x.observed_count())));
  if (target < 1)
    throw ConfigError(
        "mask_logit: fraction * observed rounds to zero cells");

  Rng rng(seed);
  const detail::LogitDraws<Scalar> draws =
      detail::logit_draws(x, params, rng);
  auto count_at = [&](double a) {
    return detail::logit_realize(x, params, draws, a,
                                 [](Index, Index, Index) {});
  };
  double lo = -30.0, hi = 30.0;
  const Index at_lo = count_at(lo), at_hi = count_at(hi);
  if (target < at_lo || target > at_hi)
    throw ConfigError(
        "mask_logit: target of " + std::to_string(target) +
        " cells is outside the achievable range [" + std::to_string(at_lo) +
        ", " + std::to_string(at_hi) + "]");
  for (int step = 0; step < 200 && hi - lo > 1e-12; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (count_at(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  const Index err_lo = std::abs(count_at(lo) - target);
  const Index err_hi = std::abs(count_at(hi) - target);
  const double intercept = err_lo < err_hi ? lo : hi;

  HoldoutPlan<Scalar> plan;
  plan.regime = Regime::logit;
  plan.fraction = fraction;
  plan.seed = seed;
  detail::logit_realize(x, params, draws, intercept,
                        [&](Index it, Index in, Index il) {
                          plan.cells.push_back(
                              {it, in, il, x.value(it, in, il)});
                        });
  detail::sort_cells(plan.cells);
  return plan;
}

/// Hides the plan's cells: values become the sentinel and the mask is
/// cleared. Every referenced cell must be observed.
template <typename Scalar>
MaskedTensor<Scalar> apply_plan(const MaskedTensor<Scalar>& x,
                                const HoldoutPlan<Scalar>& plan) {
  Tensor3<Scalar> values = x.values();
  Tensor3<std::uint8_t> mask = x.mask();
  for (const auto& cell : plan.cells) {
    if (cell.t < 0 || cell.t >= x.dim_time() || cell.n < 0 ||
        cell.n >= x.dim_firm() || cell.l < 0 || cell.l >= x.dim_char())
      throw StructuralError("apply_plan: cell index out of range");
    if (!x.observed(cell.t, cell.n, cell.l))
      throw StructuralError(
          "apply_plan: plan references an unobserved cell at (" +
          std::to_string(cell.t) + ", " + std::to_string(cell.n) + ", " +
          std::to_string(cell.l) + ")");
    mask(cell.t, cell.n, cell.l) = 0;
    values(cell.t, cell.n, cell.l) = MaskedTensor<Scalar>::sentinel();
  }
  return MaskedTensor<Scalar>(std::move(values), std::move(mask), x.labels());
}

/// Reinstates the plan's cells with their carried values.
template <typename Scalar>
MaskedTensor<Scalar> restore_plan(const MaskedTensor<Scalar>& x,
                                  const HoldoutPlan<Scalar>& plan) {
  Tensor3<Scalar> values = x.values();
  Tensor3<std::uint8_t> mask = x.mask();
  for (const auto& cell : plan.cells) {
    if (cell.t < 0 || cell.t >= x.dim_time() || cell.n < 0 ||
        cell.n >= x.dim_firm() || cell.l < 0 || cell.l >= x.dim_char())
      throw StructuralError("restore_plan: cell index out of range");
    mask(cell.t, cell.n, cell.l) = 1;
    values(cell.t, cell.n, cell.l) = cell.value;
  }
  return MaskedTensor<Scalar>(std::move(values), std::move(mask), x.labels());
}

}  // namespace act
