#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "act/baselines.hpp"
#include "act/common.hpp"
#include "act/imputation_metrics.hpp"
#include "act/io.hpp"
#include "act/masking.hpp"
#include "act/pipeline.hpp"
#include "act/pricing.hpp"
#include "act/pricing_metrics.hpp"
#include "act/synth.hpp"
#include "act/tensor.hpp"

namespace act {

namespace detail {

inline std::vector<std::string> split_list(const std::string& text,
                                           char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : text) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

inline std::vector<double> parse_real_list(const std::string& text,
                                           const std::string& what) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const std::string& field : split_list(text, ','))
    out.push_back(parse_real(field, what, 0, 1));
  return out;
}

/// Group grammar: `firms:rank:noise_sd:keep_prob[:share_with]`, groups
/// separated by semicolons.
inline std::vector<GroupSpec<double>> parse_group_specs(
    const std::string& text) {
  std::vector<GroupSpec<double>> out;
  for (const std::string& part : split_list(text, ';')) {
    if (part.empty()) continue;
    const std::vector<std::string> f = split_list(part, ':');
    if (f.size() != 4 && f.size() != 5)
      throw ConfigError(
          "synth_groups: expected firms:rank:noise_sd:keep_prob[:share], "
          "got '" +
          part + "'");
    GroupSpec<double> g;
    g.firms = parse_integer(f[0], "synth_groups", 0, 1);
    g.rank = parse_integer(f[1], "synth_groups", 0, 2);
    g.noise_sd = parse_real(f[2], "synth_groups", 0, 3);
    g.keep_prob = parse_real(f[3], "synth_groups", 0, 4);
    if (f.size() == 5)
      g.share_time_char_with =
          static_cast<int>(parse_integer(f[4], "synth_groups", 0, 5));
    out.push_back(g);
  }
  if (out.empty()) throw ConfigError("synth_groups: no groups given");
  return out;
}

inline void ensure_out_dir(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
}

inline MaskedTensor<double> wrap_dense(Tensor3<double> values,
                                       const AxisLabels& labels) {
  Tensor3<std::uint8_t> mask(values.dim_time(), values.dim_firm(),
                             values.dim_char());
  mask.data().setConstant(1);
  return MaskedTensor<double>(std::move(values), std::move(mask), labels);
}

inline std::string fmt_optional(const std::optional<double>& v) {
  return v ? fmt_real(*v) : std::string("undefined");
}

inline std::string join_indices(const std::vector<Index>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace detail

/// One imputation pass over a masked panel: the completed tensor, report
/// rows describing the run, and wall-clock seconds (console material only,
/// never written to files).
struct MethodRun {
  Tensor3<double> values;
  std::vector<std::pair<std::string, std::string>> details;
  double seconds = 0;
};

inline MethodRun run_method(const MaskedTensor<double>& masked,
                            const ExperimentConfig& cfg) {
  cfg.validate();
  MethodRun run;
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.method == "act") {
    auto [values, report] = run_act(masked, cfg.act_config());
    run.values = std::move(values);
    for (std::size_t w = 0; w < report.warnings.size(); ++w)
      run.details.emplace_back("warning." + std::to_string(w),
                               report.warnings[w]);
    for (const auto& fit : report.fits) {
      const std::string base = "cluster." + std::to_string(fit.cluster) + ".";
      run.details.emplace_back(base + "label",
                               fit.label == DensityLabel::dense ? "dense"
                                                                : "sparse");
      run.details.emplace_back(base + "firms",
                               std::to_string(fit.firms.size()));
      run.details.emplace_back(
          base + "density",
          detail::fmt_real(static_cast<double>(
              report.partition.densities[static_cast<std::size_t>(
                  fit.cluster)])));
      run.details.emplace_back(base + "iterations",
                               std::to_string(fit.report.iterations));
      run.details.emplace_back(base + "converged",
                               fit.report.converged ? "true" : "false");
      run.details.emplace_back(base + "objective",
                               detail::fmt_real(fit.report.objective));
      run.details.emplace_back(base + "used_pinv",
                               fit.report.used_pinv ? "true" : "false");
    }
  } else if (cfg.method == "cp") {
    auto [values, report] = impute_cp(masked, cfg.solver_config());
    if (cfg.keep_observed) {
      for (Index it = 0; it < masked.dim_time(); ++it)
        for (Index in = 0; in < masked.dim_firm(); ++in)
          for (Index il = 0; il < masked.dim_char(); ++il)
            if (masked.observed(it, in, il))
              values(it, in, il) = masked.value(it, in, il);
    }
    run.values = smooth_tensor(values, cfg.smoother_spec());
    run.details.emplace_back("fit.iterations",
                             std::to_string(report.iterations));
    run.details.emplace_back("fit.converged",
                             report.converged ? "true" : "false");
    run.details.emplace_back("fit.objective",
                             detail::fmt_real(report.objective));
    run.details.emplace_back("fit.used_pinv",
                             report.used_pinv ? "true" : "false");
  } else {
    run.values = smooth_tensor(impute_median(masked), cfg.smoother_spec());
  }
  run.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return run;
}

namespace detail {

inline HoldoutPlan<double> make_plan(const MaskedTensor<double>& panel,
                                     const ExperimentConfig& cfg) {
  switch (regime_from_name(cfg.regime)) {
    case Regime::mar:
      return mask_mar(panel, cfg.fraction, cfg.seed);
    case Regime::block:
      return mask_block(panel, cfg.fraction, cfg.seed, cfg.block_params());
    default:
      return mask_logit(panel, cfg.fraction, cfg.seed, cfg.logit_params());
  }
}

}  // namespace detail

/*
 * Generates a synthetic panel (plus ground truth) and matching market data.
 * With synth_groups empty the panel is a single low-rank block; otherwise
 * the grouped generator runs. Market data uses a seed derived from the
 * panel seed so the two generators never share a stream.
 */
inline void cmd_synth(const ExperimentConfig& cfg) {
  cfg.validate();
  detail::ensure_out_dir(cfg);
  MaskedTensor<double> panel;
  Tensor3<double> truth;
  if (detail::trim(cfg.synth_groups).empty()) {
    SynthPanel<double> sp =
        gen_lowrank_panel<double>(cfg.synth_t, cfg.synth_n, cfg.synth_l,
                                  cfg.synth_rank, cfg.synth_noise_sd,
                                  cfg.seed, cfg.synth_normalize);
    panel = std::move(sp.panel);
    truth = std::move(sp.clean);
  } else {
    HeterogeneousPanel<double> hp = gen_heterogeneous_panel<double>(
        cfg.synth_t, cfg.synth_l, detail::parse_group_specs(cfg.synth_groups),
        cfg.seed);
    panel = std::move(hp.panel);
    truth = std::move(hp.clean);
    if (cfg.synth_normalize) panel = rank_normalize(panel);
  }

  MarketSpec<double> ms;
  Vector<double> betas;
  const std::vector<double> beta_list =
      detail::parse_real_list(cfg.market_betas, "market_betas");
  if (!beta_list.empty()) {
    betas.resize(static_cast<Index>(beta_list.size()));
    for (std::size_t i = 0; i < beta_list.size(); ++i)
      betas[static_cast<Index>(i)] = beta_list[i];
    ms.betas = betas;
  }
  ms.noise_sd = cfg.market_noise_sd;
  ms.risk_free = cfg.market_rf;
  ms.mcap_scale = cfg.market_mcap_scale;
  ms.factor_scale = cfg.market_factor_scale;
  ms.factor_phi = cfg.market_factor_phi;
  const MarketData<double> market =
      gen_market_data(panel, ms, splitmix64(cfg.seed ^ 0x6d6b74ULL));

  write_panel(cfg.panel_path(), panel);
  write_panel(cfg.truth_path(), detail::wrap_dense(truth, panel.labels()));
  write_market(cfg.returns_path(), cfg.mcap_path(), cfg.riskfree_path(),
               market, panel.labels());
  std::cout << "synth: panel " << panel.dim_time() << "x" << panel.dim_firm()
            << "x" << panel.dim_char() << " density "
            << detail::fmt_real(panel.density()) << " -> "
            << cfg.panel_path() << "\n";
}

/// Draws a hold-out plan over the panel's observed cells and writes both the
/// masked panel and the value-carrying plan.
inline void cmd_mask(const ExperimentConfig& cfg) {
  cfg.validate();
  detail::ensure_out_dir(cfg);
  MaskedTensor<double> panel = read_panel<double>(cfg.panel_path());
  if (cfg.normalize) panel = rank_normalize(panel);
  const HoldoutPlan<double> plan = detail::make_plan(panel, cfg);
  const MaskedTensor<double> masked = apply_plan(panel, plan);
  write_panel(cfg.masked_path(), masked);
  write_plan(cfg.plan_path(), plan, panel.labels());

  auto rows = cfg.dump();
  rows.emplace_back("plan.cells", std::to_string(plan.cells.size()));
  rows.emplace_back(
      "plan.achieved_fraction",
      detail::fmt_real(static_cast<double>(plan.cells.size()) /
                       static_cast<double>(panel.observed_count())));
  rows.emplace_back("plan.partial", plan.partial ? "true" : "false");
  rows.emplace_back("plan.blocks_total", std::to_string(plan.blocks_total));
  rows.emplace_back("plan.blocks_at_start",
                    std::to_string(plan.blocks_at_start));
  write_report(cfg.out + "/mask_report.txt", rows);
  std::cout << "mask[" << cfg.regime << "]: held out " << plan.cells.size()
            << " of " << panel.observed_count() << " observed cells -> "
            << cfg.masked_path() << "\n";
}

/// Completes a masked panel with the chosen method and writes the dense
/// imputed panel plus a run report. Timing goes to the console only, so
/// reruns produce byte-identical files.
inline void cmd_impute(const ExperimentConfig& cfg) {
  cfg.validate();
  detail::ensure_out_dir(cfg);
  const MaskedTensor<double> masked = read_panel<double>(cfg.masked_path());
  MethodRun run = run_method(masked, cfg);
  write_panel(cfg.imputed_path(),
              detail::wrap_dense(std::move(run.values), masked.labels()));
  auto rows = cfg.dump();
  for (auto& row : run.details) rows.push_back(std::move(row));
  write_report(cfg.out + "/impute_report.txt", rows);
  std::cout << "impute[" << cfg.method << "]: " << detail::fmt_real(run.seconds)
            << "s -> " << cfg.imputed_path() << "\n";
}

/// Scores an imputed panel against a hold-out plan.
inline void cmd_evaluate(const ExperimentConfig& cfg) {
  cfg.validate();
  detail::ensure_out_dir(cfg);
  const MaskedTensor<double> imputed = read_panel<double>(cfg.imputed_path());
  const HoldoutPlan<double> plan =
      read_plan<double>(cfg.plan_path(), imputed.labels());
  for (const auto& cell : plan.cells)
    if (!imputed.observed(cell.t, cell.n, cell.l))
      throw StructuralError(
          "evaluate: imputed panel has no value for held-out cell (" +
          imputed.labels().months[static_cast<std::size_t>(cell.t)] + ", " +
          imputed.labels().firms[static_cast<std::size_t>(cell.n)] + ", " +
          imputed.labels()
              .characteristics[static_cast<std::size_t>(cell.l)] +
          ")");
  const ImputationScores scores = score_imputation(imputed.values(), plan);

  auto rows = cfg.dump();
  rows.emplace_back("plan.regime", regime_name(plan.regime));
  rows.emplace_back("plan.fraction", detail::fmt_real(plan.fraction));
  rows.emplace_back("plan.seed", std::to_string(plan.seed));
  rows.emplace_back("plan.cells", std::to_string(plan.cells.size()));
  rows.emplace_back("metrics.rmse", detail::fmt_real(scores.rmse));
  rows.emplace_back("metrics.mae", detail::fmt_real(scores.mae));
  rows.emplace_back("metrics.mape", detail::fmt_real(scores.mape));
  rows.emplace_back("metrics.mape_excluded",
                    std::to_string(scores.mape_excluded));
  rows.emplace_back("metrics.r2", detail::fmt_optional(scores.r2));
  write_report(cfg.out + "/evaluate_report.txt", rows);
  std::cout << "evaluate: rmse " << detail::fmt_real(scores.rmse) << ", mae "
            << detail::fmt_real(scores.mae) << ", r2 "
            << detail::fmt_optional(scores.r2) << "\n";
}

/// Runs the downstream portfolio pipeline on an imputed panel and writes the
/// pricing report.
inline void cmd_price(const ExperimentConfig& cfg) {
  cfg.validate();
  detail::ensure_out_dir(cfg);
  const MaskedTensor<double> panel = read_panel<double>(cfg.imputed_path());
  Index skipped_market_rows = 0;
  const MarketData<double> market =
      read_market<double>(cfg.returns_path(), cfg.mcap_path(),
                          cfg.riskfree_path(), panel.labels(),
                          &skipped_market_rows);
  const ReturnTensor<double> rt = build_return_tensor(
      panel, market, cfg.size_name, cfg.p_buckets, cfg.q_buckets);
  const PartialTucker<double> pt =
      hosvd_partial_tucker(rt, cfg.kp, cfg.kq, cfg.kl);
  const Matrix<double> factors = stack_factors(pt.core);
  const Matrix<double> portfolios = portfolio_matrix(rt);
  const auto [selected, r2_path] =
      stepwise_select(factors, portfolios, cfg.factors);
  const FactorModel<double> model =
      cfg.rolling
          ? fit_and_forecast_rolling(factors, selected, portfolios,
                                     cfg.min_train)
          : fit_and_forecast(factors, selected, portfolios);
  const PricingScores scores =
      score_pricing(model.alpha, model.forecasts, model.realized);

  auto rows = cfg.dump();
  rows.emplace_back("market.skipped_rows",
                    std::to_string(skipped_market_rows));
  rows.emplace_back("pricing.portfolios", std::to_string(portfolios.rows()));
  rows.emplace_back("pricing.selected", detail::join_indices(selected));
  {
    std::string path_str;
    for (std::size_t i = 0; i < r2_path.size(); ++i) {
      if (i) path_str.push_back(',');
      path_str += detail::fmt_real(r2_path[i]);
    }
    rows.emplace_back("pricing.r2_path", path_str);
  }
  rows.emplace_back("pricing.used_pinv", model.used_pinv ? "true" : "false");
  rows.emplace_back("metrics.alpha_rmse", detail::fmt_real(scores.alpha_rmse));
  rows.emplace_back("metrics.alpha_mae", detail::fmt_real(scores.alpha_mae));
  rows.emplace_back("metrics.mae_rank", detail::fmt_real(scores.mae_rank));
  rows.emplace_back("metrics.ic",
                    detail::fmt_real(scores.information_coefficient));
  rows.emplace_back("metrics.ic_skipped_months",
                    std::to_string(scores.ic_skipped_months));
  rows.emplace_back("metrics.tb_mean_monthly",
                    detail::fmt_real(scores.tb_mean_monthly));
  rows.emplace_back("metrics.tb_sharpe",
                    detail::fmt_optional(scores.tb_sharpe));
  rows.emplace_back("metrics.tb_small_cross_section",
                    scores.tb_small_cross_section ? "true" : "false");
  write_report(cfg.out + "/price_report.txt", rows);
  std::cout << "price: alpha_rmse " << detail::fmt_real(scores.alpha_rmse)
            << ", ic " << detail::fmt_real(scores.information_coefficient)
            << ", tb_sharpe " << detail::fmt_optional(scores.tb_sharpe)
            << "\n";
}

namespace detail {

inline ExperimentConfig with_sweep_value(const ExperimentConfig& base,
                                         const std::string& value) {
  ExperimentConfig cfg = base;
  const std::string& p = base.sweep_param;
  if (p == "lambda")
    cfg.lambda = parse_real(value, "sweep_values", 0, 1);
  else if (p == "tau")
    cfg.tau = parse_real(value, "sweep_values", 0, 1);
  else if (p == "fraction")
    cfg.fraction = parse_real(value, "sweep_values", 0, 1);
  else if (p == "theta")
    cfg.theta = parse_real(value, "sweep_values", 0, 1);
  else if (p == "rank")
    cfg.rank = parse_integer(value, "sweep_values", 0, 1);
  else if (p == "clusters")
    cfg.clusters = parse_integer(value, "sweep_values", 0, 1);
  else if (p == "delta")
    cfg.delta = static_cast<int>(parse_integer(value, "sweep_values", 0, 1));
  else if (p == "smoother")
    cfg.smoother = value;
  else if (p == "regime")
    cfg.regime = value;
  else if (p == "method")
    cfg.method = value;
  else
    throw ConfigError("sweep_param '" + p + "' is not sweepable");
  return cfg;
}

}  // namespace detail

/*
 * Grid sweep: for every value of the swept parameter, mask the source panel,
 * impute with the configured method, and score against the plan. Emits one
 * CSV row per grid point, preceded by the resolved base configuration as
 * comment lines.
 */
inline void cmd_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  detail::ensure_out_dir(cfg);
  MaskedTensor<double> panel = read_panel<double>(cfg.panel_path());
  if (cfg.normalize) panel = rank_normalize(panel);
  const std::vector<std::string> values =
      detail::split_list(cfg.sweep_values, ',');
  if (values.empty() || (values.size() == 1 && values[0].empty()))
    throw ConfigError("sweep_values: no grid points");

  std::ofstream out = detail::open_for_write(cfg.out + "/sweep.csv");
  for (const auto& [key, value] : cfg.dump())
    out << "# " << key << '=' << value << '\n';
  out << "param,value,rmse,mae,mape,r2,cells\n";
  for (const std::string& value : values) {
    const ExperimentConfig point = detail::with_sweep_value(cfg, value);
    point.validate();
    const HoldoutPlan<double> plan = detail::make_plan(panel, point);
    const MaskedTensor<double> masked = apply_plan(panel, plan);
    const MethodRun run = run_method(masked, point);
    const ImputationScores scores = score_imputation(run.values, plan);
    out << cfg.sweep_param << ',' << value << ','
        << detail::fmt_real(scores.rmse) << ','
        << detail::fmt_real(scores.mae) << ','
        << detail::fmt_real(scores.mape) << ','
        << detail::fmt_optional(scores.r2) << ',' << plan.cells.size()
        << '\n';
    std::cout << "sweep " << cfg.sweep_param << "=" << value << ": rmse "
              << detail::fmt_real(scores.rmse) << " ("
              << detail::fmt_real(run.seconds) << "s)\n";
  }
  if (!out) throw Error(cfg.out + "/sweep.csv: write failed");
  std::cout << "sweep: " << values.size() << " rows -> " << cfg.out
            << "/sweep.csv\n";
}

}  // namespace act
