#ifndef ALPHALAB_PIPELINE_HPP
#define ALPHALAB_PIPELINE_HPP

// The five command-line stages as library calls. Every stage writes only
// under cfg.out (plus the registry and session log, which default there too)
// and produces the same bytes when re-run on unchanged inputs.
//
// out/
//   panel.bin, manifest.json                  ingest
//   corr/{existing,new,combined}.csv          per-date and average rho
//   corr/{existing,new,combined}_heatmap.svg  (+ .csv sidecar)
//   fmb/{summary,adj_r2,gammas,risk_premia}.csv, fmb/boxplot.svg (+ .csv)
//   mine/<prompt hash>.json                   mine, one file per session
//   candidates.jsonl                          mine
//   summary.md                                report

#include <filesystem>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alphalab/cache.hpp"
#include "alphalab/config.hpp"
#include "alphalab/fmb.hpp"
#include "alphalab/metrics.hpp"
#include "alphalab/miner.hpp"
#include "alphalab/report.hpp"
#include "alphalab/transport.hpp"

namespace alphalab {

/// Process exit status per error class.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitData = 3, kExitNumeric = 4, kExitTransport = 5 };

inline int exit_code_for(const Error& e) {
  if (dynamic_cast<const TransportError*>(&e)) return kExitTransport;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const DataError*>(&e)) return kExitData;
  // formula errors reach the CLI through config values
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const UnknownSignalError*>(&e))
    return kExitConfig;
  return kExitFailure;
}

namespace detail {

inline void write_out(const std::filesystem::path& p, std::string_view content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  text::write_file(p.string(), content);
}

inline std::string read_required(const std::filesystem::path& p, const char* stage) {
  if (!std::filesystem::exists(p))
    throw DataError("missing input " + p.string() + " (run '" + stage + "' first)");
  return text::read_file(p.string());
}

}  // namespace detail

/// Built-in, config-formula and (optionally) registry candidates in that
/// order. Abbreviations must be unique.
inline std::vector<AlphaDef> configured_candidates(const RunConfig& cfg) {
  const auto aliases = cfg.aliases();
  std::vector<AlphaDef> out;
  const auto builtins = builtin_alphas();
  for (const auto& abbr : cfg.builtin_candidates)
    for (const auto& b : builtins)
      if (b.abbreviation == abbr) out.push_back(b);
  for (const auto& [abbr, formula] : cfg.formulas)
    out.push_back({abbr, abbr, parse_alpha(formula, aliases), Provenance::UserSupplied});
  std::set<std::string> seen;
  for (const auto& d : out)
    if (!seen.insert(d.abbreviation).second) throw ConfigError("duplicate candidate abbreviation '" + d.abbreviation + "'");
  if (cfg.registry_candidates)
    for (auto& d : registry_alphas(cfg.registry_path()))
      if (seen.insert(d.abbreviation).second) out.push_back(std::move(d));
  return out;
}

inline Panel load_cached_panel(const RunConfig& cfg) {
  return restrict_dates(read_panel_cache(cfg.cache_path()), cfg.date_from, cfg.date_to);
}

// ---- ingest -----------------------------------------------------------------

inline nlohmann::json cmd_ingest(const RunConfig& cfg, std::ostream& log = std::cerr) {
  cfg.validate();
  cfg.require_inputs();
  std::vector<std::string> files;
  for (const auto& f : cfg.signal_files) files.push_back(f.string());
  const auto panel = load_panel(files, cfg.price_file.string(), cfg.horizon, cfg.aliases());
  write_panel_cache(panel, cfg.cache_path());

  auto manifest = panel_manifest(panel);
  nlohmann::json inputs = nlohmann::json::array();
  auto add_input = [&](const std::filesystem::path& p, const char* role) {
    inputs.push_back({{"role", role}, {"file", p.filename().string()}, {"sha256", sha256_hex(text::read_file(p.string()))}});
  };
  for (const auto& f : cfg.signal_files) add_input(f, "signals");
  add_input(cfg.price_file, "prices");
  if (cfg.alias_file) add_input(*cfg.alias_file, "aliases");
  manifest["inputs"] = inputs;
  const auto text = manifest.dump(2) + "\n";
  detail::write_out(cfg.out / "manifest.json", text);
  log << "ingest: " << panel.companies().size() << " companies, " << panel.dates().size() << " dates ("
      << manifest["date_first"].get<std::string>() << " to " << manifest["date_last"].get<std::string>() << "), "
      << panel.missing_values() << " missing values; manifest sha256 " << sha256_hex(text) << "\n";
  return manifest;
}

// ---- corr -------------------------------------------------------------------

struct CorrOutputs {
  std::vector<std::pair<std::string, CorrReport>> sets;  // existing, new, combined
};

inline CorrOutputs cmd_corr(const RunConfig& cfg, std::ostream& log = std::cerr) {
  cfg.validate();
  const auto panel = load_cached_panel(cfg);
  const auto candidates = configured_candidates(cfg);

  std::vector<Column> existing = signal_columns(cfg.baseline), fresh, combined = existing;
  for (const auto& c : candidates) {
    fresh.push_back(Column::of_alpha(c));
    combined.push_back(Column::of_alpha(c));
  }
  std::vector<std::pair<std::string, const std::vector<Column>*>> sets = {{"existing", &existing}};
  if (!fresh.empty()) {
    sets.emplace_back("new", &fresh);
    sets.emplace_back("combined", &combined);
  } else {
    log << "corr: no candidate signals configured; writing the existing-signal set only\n";
  }

  CorrOutputs out;
  for (const auto& [name, cols] : sets) {
    auto report = avg_cross_sectional_corr(panel, *cols, cfg.workers);
    for (const auto& s : report.skipped) log << "corr[" << name << "]: skipped " << s.date.iso() << ": " << s.reason << "\n";
    for (std::size_t a = 0; a < report.labels.size(); ++a)
      for (std::size_t b = a + 1; b < report.labels.size(); ++b) {
        const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
        const auto used = report.pair_count(ia, ib);
        if (used < static_cast<int>(report.per_date.size()))
          log << "corr[" << name << "]: " << report.labels[a] << " vs " << report.labels[b] << " undefined on "
              << report.per_date.size() - static_cast<std::size_t>(used) << " date(s)\n";
      }
    detail::write_out(cfg.out / "corr" / (name + ".csv"), corr_to_csv(report));
    auto spec = HeatmapSpec::from_corr(report, "Average Spearman correlation: " + name + " signals");
    spec.data_driven_scale = cfg.data_driven_scale;
    emit_heatmap(spec, cfg.out / "corr" / (name + "_heatmap.svg"));
    out.sets.emplace_back(name, std::move(report));
  }
  log << "corr: " << out.sets.size() << " set(s) over " << out.sets.front().second.per_date.size() << " dates\n";
  return out;
}

// ---- fmb --------------------------------------------------------------------

inline FmbComparison cmd_fmb(const RunConfig& cfg, std::ostream& log = std::cerr) {
  cfg.validate();
  const auto panel = load_cached_panel(cfg);
  auto cmp = fmb_compare(panel, cfg.baseline, configured_candidates(cfg), cfg.workers);
  const auto dir = cfg.out / "fmb";
  detail::write_out(dir / "summary.csv", fmb_summary_csv(cmp));
  detail::write_out(dir / "adj_r2.csv", fmb_adj_r2_csv(cmp));
  detail::write_out(dir / "gammas.csv", fmb_gammas_csv(cmp));
  detail::write_out(dir / "risk_premia.csv", fmb_risk_premia_csv(cmp));
  emit_boxplot(BoxplotSpec::from_comparison(cmp, "Step-2 adjusted R² by model"), dir / "boxplot.svg");
  const double base = cmp.baseline.summary->median;
  log << "fmb: baseline median adj R2 " << text::format_fixed(base, 4) << " over " << cmp.baseline.summary->n
      << " dates\n";
  for (const auto& c : cmp.candidates) {
    if (c.ok)
      log << "fmb: " << c.name << " median adj R2 " << text::format_fixed(c.summary->median, 4) << " ("
          << (c.summary->median > base ? "above" : "not above") << " baseline)\n";
    else
      log << "fmb: " << c.name << " failed: " << c.error << "\n";
  }
  return cmp;
}

// ---- mine -------------------------------------------------------------------

struct MineResult {
  MineSession session;
  bool appended = false;
};

inline std::unique_ptr<Transport> make_transport(const RunConfig& cfg) {
  if (cfg.transport == TransportMode::Replay) return std::make_unique<ReplayTransport>(*cfg.replay_dir);
  return std::make_unique<LiveTransport>(LiveTransport::from_env(cfg.endpoint, cfg.api_key_env, cfg.session_log_path()));
}

inline MineResult cmd_mine(const RunConfig& cfg, std::ostream& log = std::cerr) {
  cfg.validate();
  cfg.require_mining();
  const auto panel = load_cached_panel(cfg);
  auto transport = make_transport(cfg);

  MineOptions opt;
  opt.signals = panel.signal_names();
  opt.sample_rows = cfg.sample_rows;
  opt.seed = *cfg.seed;
  opt.params = {cfg.model, cfg.temperature, cfg.max_tokens};

  MineResult r;
  r.session = mine_session(panel, *transport, opt, cfg.aliases());  // transport errors propagate; nothing recorded
  const auto& c = r.session.candidate;
  const auto& hash = r.session.response.prompt_hash;

  nlohmann::json rec = registry_record(c, hash);
  rec["step1_prompt"] = r.session.bundle.step1_prompt;
  rec["step2_prompt"] = r.session.bundle.step2_prompt;
  rec["definitions"] = r.session.definitions;
  rec["response"] = r.session.response.text;
  rec["metadata"] = {{"seed", opt.seed},
                     {"sample_row_count", opt.sample_rows},
                     {"signals", opt.signals},
                     {"timestamp", r.session.bundle.metadata.timestamp}};
  detail::write_out(cfg.out / "mine" / (hash + ".json"), rec.dump(2) + "\n");

  r.appended = append_to_registry(cfg.registry_path(), c, hash, cfg.dedup);
  log << "mine: " << (c.name.empty() ? "(unnamed)" : c.name) << " (" << c.abbreviation << ") "
      << to_string(c.parse_status) << ": " << (c.expr ? render_alpha(*c.expr) : c.formula_text) << "\n";
  for (const auto& w : c.warnings) log << "mine: warning: " << w << "\n";
  log << "mine: registry " << cfg.registry_path().string() << (r.appended ? " appended" : " unchanged (duplicate)")
      << "\n";
  return r;
}

// ---- report -----------------------------------------------------------------

inline std::string cmd_report(const RunConfig& cfg, std::ostream& log = std::cerr) {
  const auto corr_dir = cfg.out / "corr";
  const auto corr_file = std::filesystem::exists(corr_dir / "combined.csv") ? corr_dir / "combined.csv"
                                                                             : corr_dir / "existing.csv";
  const auto corr = corr_from_csv(detail::read_required(corr_file, "corr"), corr_file.string());
  const auto fmb_dir = cfg.out / "fmb";
  // read in a fixed order so the first missing file is the one reported
  const auto summary = detail::read_required(fmb_dir / "summary.csv", "fmb");
  const auto adj_r2 = detail::read_required(fmb_dir / "adj_r2.csv", "fmb");
  const auto gammas = detail::read_required(fmb_dir / "gammas.csv", "fmb");
  const auto cmp = fmb_from_csv(summary, adj_r2, gammas);
  const auto doc = summary_markdown(corr, cmp);
  detail::write_out(cfg.out / "summary.md", doc);
  log << "report: wrote " << (cfg.out / "summary.md").string() << "\n";
  return doc;
}

}  // namespace alphalab

#endif  // ALPHALAB_PIPELINE_HPP
