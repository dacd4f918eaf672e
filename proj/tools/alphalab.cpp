// alphalab command-line driver: ingest, corr, fmb, mine, report.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "alphalab/pipeline.hpp"

namespace {

using namespace alphalab;

struct Globals {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::vector<std::string> overrides;  // key=value
};

RunConfig resolve(const Globals& g) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : RunConfig::from_file(g.config);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(std::string(text::trim(kv.substr(0, eq))), std::string(text::trim(kv.substr(eq + 1))), {}, "--set");
  }
  if (!g.out.empty()) cfg.set("out", g.out, {}, "--out");
  if (g.seed) cfg.seed = *g.seed;
  if (g.workers) cfg.set("workers", std::to_string(*g.workers), {}, "--workers");
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Formulaic alpha mining and Fama-MacBeth evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config,-c", g.config, "Run configuration file (key = value)");
  app.add_option("--out,-o", g.out, "Output directory (overrides 'out')");
  app.add_option("--seed", g.seed, "Sampling seed (overrides 'seed')");
  app.add_option("--workers,-j", g.workers, "Worker threads (overrides 'workers')")->check(CLI::PositiveNumber);
  app.add_option("--set", g.overrides, "Override any config key, as key=value (repeatable)");

  auto* ingest = app.add_subcommand("ingest", "Load signal and price CSVs into the panel cache");
  auto* corr = app.add_subcommand("corr", "Average cross-sectional Spearman heatmaps");
  bool data_scale = false;
  corr->add_flag("--data-scale", data_scale, "Scale heatmap colours to the data instead of [-1, 1]");
  auto* fmb = app.add_subcommand("fmb", "Fama-MacBeth comparison of candidate models against the baseline");
  auto* mine = app.add_subcommand("mine", "Ask the language model for one new alpha");
  std::string replay_dir;
  mine->add_option("--replay", replay_dir, "Replay recorded completions from this directory");
  bool live = false;
  mine->add_flag("--live", live, "Call the configured endpoint (credential from the api_key_env variable)");
  auto* report = app.add_subcommand("report", "Write the markdown summary of corr and fmb outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    auto cfg = resolve(g);
    if (data_scale) cfg.data_driven_scale = true;
    if (!replay_dir.empty()) {
      cfg.set("transport", "replay", {}, "--replay");
      cfg.set("replay_dir", replay_dir, {}, "--replay");
    }
    if (live) cfg.transport = TransportMode::Live;

    if (ingest->parsed()) cmd_ingest(cfg);
    else if (corr->parsed()) cmd_corr(cfg);
    else if (fmb->parsed()) cmd_fmb(cfg);
    else if (mine->parsed()) cmd_mine(cfg);
    else if (report->parsed()) cmd_report(cfg);
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "alphalab: error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "alphalab: error: " << e.what() << "\n";
    return kExitFailure;
  }
}
