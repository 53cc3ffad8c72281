#include <cstdint>
#include <exception>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "act/commands.hpp"
#include "act/io.hpp"

namespace {

struct Cli {
  std::string config;
  std::int64_t seed = 0;
  std::string method, regime, smoother, out;
  std::string panel, truth, masked, plan, imputed;
  std::string returns, mcap, riskfree;
};

void add_common(CLI::App& app, Cli& cli) {
  app.add_option("--config", cli.config, "key=value configuration file");
  app.add_option("--seed", cli.seed, "override the seed");
  app.add_option("--out", cli.out, "output directory");
  app.add_option("--method", cli.method, "act, cp, or median");
  app.add_option("--regime", cli.regime, "mar, block, or logit");
  app.add_option("--smoother", cli.smoother, "none, cma, ema, or kalman");
  app.add_option("--panel", cli.panel, "panel csv path");
  app.add_option("--truth", cli.truth, "ground-truth csv path");
  app.add_option("--masked", cli.masked, "masked panel csv path");
  app.add_option("--plan", cli.plan, "hold-out plan csv path");
  app.add_option("--imputed", cli.imputed, "imputed panel csv path");
  app.add_option("--returns", cli.returns, "monthly returns csv path");
  app.add_option("--mcap", cli.mcap, "market capitalization csv path");
  app.add_option("--riskfree", cli.riskfree, "risk-free rate csv path");
}

act::ExperimentConfig resolve(const CLI::App& sub, const Cli& cli) {
  act::ExperimentConfig cfg;
  if (sub.count("--config")) cfg = act::ExperimentConfig::load(cli.config);
  if (sub.count("--seed")) cfg.seed = static_cast<std::uint64_t>(cli.seed);
  if (sub.count("--out")) cfg.out = cli.out;
  if (sub.count("--method")) cfg.method = cli.method;
  if (sub.count("--regime")) cfg.regime = cli.regime;
  if (sub.count("--smoother")) cfg.smoother = cli.smoother;
  if (sub.count("--panel")) cfg.panel = cli.panel;
  if (sub.count("--truth")) cfg.truth = cli.truth;
  if (sub.count("--masked")) cfg.masked = cli.masked;
  if (sub.count("--plan")) cfg.plan = cli.plan;
  if (sub.count("--imputed")) cfg.imputed = cli.imputed;
  if (sub.count("--returns")) cfg.returns = cli.returns;
  if (sub.count("--mcap")) cfg.mcap = cli.mcap;
  if (sub.count("--riskfree")) cfg.riskfree = cli.riskfree;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"act-tensor: cluster-based tensor completion for firm panels"};
  app.require_subcommand(1);

  Cli cli;
  const struct {
    const char* name;
    const char* help;
    void (*run)(const act::ExperimentConfig&);
  } commands[] = {
      {"synth", "generate a synthetic panel and market data", act::cmd_synth},
      {"mask", "hold out observed cells under a missingness regime",
       act::cmd_mask},
      {"impute", "complete a masked panel", act::cmd_impute},
      {"evaluate", "score an imputed panel against a hold-out plan",
       act::cmd_evaluate},
      {"price", "run the double-sort factor pipeline on an imputed panel",
       act::cmd_price},
      {"sweep", "mask, impute, and score across a parameter grid",
       act::cmd_sweep},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(*sub, cli);
    sub->callback([sub, &cli, run = c.run] { run(resolve(*sub, cli)); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const act::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
