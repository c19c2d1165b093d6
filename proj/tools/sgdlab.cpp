// Command-line front door. Every subcommand reads a flat key=value config
// (see configs/) and writes into --out; see the README for the full key
// reference. Exit codes: 0 success, 1 partial/numerical failure, 2 usage or
// config errors.

#include <CLI11.hpp>

#include <cstdint>
#include <optional>
#include <string>

#include "sgdlim/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"high-dimensional SGD laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string plot_kind = "traces";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", config_path, "experiment config file");
    if (needs_config) c->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "override the config's base seed")
        ->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--threads", threads, "worker threads (runs are sequential, flag accepted for compatibility)");
  };

  auto* sim = app.add_subcommand("simulate", "run every output the config requests");
  add_common(sim, true);
  auto* vol = app.add_subcommand("solve-volterra", "solve the limiting Volterra equation");
  add_common(vol, true);
  auto* cf = app.add_subcommand("closed-form", "Marchenko-Pastur closed-form trace");
  add_common(cf, true);
  auto* crit = app.add_subcommand("criticality", "thresholds, regime, and rate report");
  add_common(crit, true);
  auto* sweep = app.add_subcommand("rate-sweep", "fitted vs predicted decay rates over a gamma grid");
  add_common(sweep, true);
  auto* cmp = app.add_subcommand("compare", "rebuild comparison.csv from an output directory");
  add_common(cmp, false);
  auto* plot = app.add_subcommand("plot", "emit a gnuplot script for a run directory");
  add_common(plot, false);
  plot->add_option("--kind", plot_kind, "volterra | traces | comparison | rate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::optional<std::uint64_t> seed_override =
      seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt;

  try {
    if (sim->parsed()) return sgdlim::harness::cli_run(config_path, out_dir, seed_override, threads);
    if (vol->parsed()) return sgdlim::harness::cli_solve_volterra(config_path, out_dir);
    if (cf->parsed()) return sgdlim::harness::cli_closed_form(config_path, out_dir);
    if (crit->parsed()) return sgdlim::harness::cli_criticality(config_path, out_dir);
    if (sweep->parsed()) return sgdlim::harness::cli_rate_sweep(config_path, out_dir);
    if (cmp->parsed()) return sgdlim::harness::cli_compare(out_dir);
    if (plot->parsed()) return sgdlim::harness::cli_plot(out_dir, plot_kind);
  } catch (const sgdlim::config::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
  return 2;
}
