#include <gtest/gtest.h>

#include <fstream>

#include "alphalab/alphalab.hpp"
#include "alphalab/pipeline.hpp"
#include "support/cli.hpp"
#include "support/golden.hpp"
#include "support/synthetic.hpp"

using namespace alphalab;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = ALPHALAB_FIXTURES;

std::string toy_config(const fs::path& out) {
  return "signals = " + kFixtures + "/toy/signals.csv\n" + "prices = " + kFixtures + "/toy/prices.csv\n" +
         "aliases = " + kFixtures + "/toy/aliases.txt\n" + "candidates = builtin\n" + "out = " + out.string() + "\n";
}

std::string demo_config(const fs::path& out) {
  return "signals = " + kFixtures + "/demo/signals.csv\n" + "prices = " + kFixtures + "/demo/prices.csv\n" +
         "candidates = builtin\n" + "seed = 7\n" + "replay_dir = " + kFixtures + "/replay/iqs_demo_seed7\n" +
         "out = " + out.string() + "\n";
}

std::string cfg_arg(const fs::path& p) { return "--config " + cli::quote(p.string()); }

}  // namespace

// ---- ingest -----------------------------------------------------------------

TEST(Ingest, ToyManifestCounts) {
  const auto dir = cli::fresh_dir("ingest_toy");
  const auto cfg = cli::write_config(dir, toy_config(dir / "out"));
  const auto r = cli::run(cfg_arg(cfg) + " ingest");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto m = nlohmann::json::parse(text::read_file((dir / "out/manifest.json").string()));
  // 3 tickers x 4 quarter ends; BBB ROA and CCC ROE blank; BBB Q4 has no
  // price a quarter later, CCC Q2/Q3 hit the blank 2020-09-30 price
  EXPECT_EQ(m["companies"], 3);
  EXPECT_EQ(m["dates"], 4);
  EXPECT_EQ(m["rows_observed"], 12);
  EXPECT_EQ(m["rows_complete"], 8);
  EXPECT_EQ(m["missing_values_total"], 2);
  EXPECT_EQ(m["missing_values"]["ROA"], 1);
  EXPECT_EQ(m["missing_values"]["ROE"], 1);
  EXPECT_EQ(m["missing_values"]["PE"], 0);
  EXPECT_EQ(m["missing_returns"], 3);
  EXPECT_EQ(m["date_first"], "2020-03-31");
  EXPECT_EQ(m["date_last"], "2020-12-31");
  EXPECT_EQ(m["schema_version"], kPanelCacheVersion);
  EXPECT_EQ(m["inputs"].size(), 3u);

  // the cache holds exactly what the loader produced
  const auto direct = load_panel({kFixtures + "/toy/signals.csv"}, kFixtures + "/toy/prices.csv", Horizon::ThreeMonth);
  EXPECT_TRUE(read_panel_cache(dir / "out/panel.bin") == direct);
}

TEST(Ingest, ReingestIsIdentical) {
  const auto dir = cli::fresh_dir("ingest_twice");
  const auto cfg = cli::write_config(dir, toy_config(dir / "out"));
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " ingest").code, 0);
  const auto first = cli::snapshot(dir / "out");
  const auto again = cli::run(cfg_arg(cfg) + " ingest");
  ASSERT_EQ(again.code, 0);
  EXPECT_EQ(cli::snapshot(dir / "out"), first);
  EXPECT_NE(again.output.find("manifest sha256 " + sha256_hex(first.at("manifest.json"))), std::string::npos);
}

TEST(Ingest, EmptyInputIsADataError) {
  const auto dir = cli::fresh_dir("ingest_empty");
  std::ofstream(dir / "signals.csv") << "ticker,date,P/E\n";
  std::ofstream(dir / "prices.csv") << "ticker,date,adj_close\n";
  const auto cfg = cli::write_config(dir, "signals = signals.csv\nprices = prices.csv\nout = out\n");
  const auto r = cli::run(cfg_arg(cfg) + " ingest");
  EXPECT_EQ(r.code, kExitData) << r.output;
  EXPECT_FALSE(fs::exists(dir / "out/panel.bin"));
}

TEST(Ingest, BadRowNamesFileAndLine) {
  const auto dir = cli::fresh_dir("ingest_bad");
  std::ofstream(dir / "signals.csv") << "ticker,date,P/E\nAAA,2020-03-31,1\nAAA,2020-13-31,2\n";
  std::ofstream(dir / "prices.csv") << "ticker,date,adj_close\n";
  const auto cfg = cli::write_config(dir, "signals = signals.csv\nprices = prices.csv\nout = out\n");
  const auto r = cli::run(cfg_arg(cfg) + " ingest");
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.output.find("signals.csv:3"), std::string::npos) << r.output;
}

TEST(Ingest, CacheVersionBumpFailsLoudly) {
  const auto dir = cli::fresh_dir("cache_version");
  const auto cfg = cli::write_config(dir, toy_config(dir / "out"));
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " ingest").code, 0);
  auto bytes = text::read_file((dir / "out/panel.bin").string());
  bytes[8] = static_cast<char>(kPanelCacheVersion + 1);
  text::write_file((dir / "out/panel.bin").string(), bytes);
  const auto r = cli::run(cfg_arg(cfg) + " corr");
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.output.find("schema version 2"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("re-run ingest"), std::string::npos);

  bytes[8] = static_cast<char>(kPanelCacheVersion);
  bytes[bytes.size() - 100] ^= 1;  // payload damage
  text::write_file((dir / "out/panel.bin").string(), bytes);
  EXPECT_EQ(cli::run(cfg_arg(cfg) + " corr").code, kExitData);
}

// ---- corr -------------------------------------------------------------------

TEST(Corr, ToyBuiltinsMatchLibrary) {
  const auto dir = cli::fresh_dir("corr_toy");
  const auto cfg = cli::write_config(dir, toy_config(dir / "out"));
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " ingest").code, 0);
  const auto r = cli::run(cfg_arg(cfg) + " corr");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("skipped 2020-06-30"), std::string::npos) << "skips surface on stderr";

  const auto panel = load_panel({kFixtures + "/toy/signals.csv"}, kFixtures + "/toy/prices.csv", Horizon::ThreeMonth);
  auto existing = signal_columns(canonical_signal_ids());
  std::vector<Column> fresh;
  for (const auto& a : builtin_alphas()) fresh.push_back(Column::of_alpha(a));
  auto combined = existing;
  combined.insert(combined.end(), fresh.begin(), fresh.end());
  for (const auto& [name, cols] : {std::pair{"existing", existing}, std::pair{"new", fresh}, std::pair{"combined", combined}}) {
    const auto lib = avg_cross_sectional_corr(panel, cols);
    const auto file = text::read_file((dir / "out/corr" / (std::string(name) + ".csv")).string());
    EXPECT_EQ(file, corr_to_csv(lib)) << name;
    EXPECT_NO_THROW(corr_from_csv(file));
    const auto heat = heatmap_from_csv(text::read_file((dir / "out/corr" / (std::string(name) + "_heatmap.csv")).string()));
    EXPECT_EQ(heat.labels, lib.labels);
    EXPECT_TRUE(fs::exists(dir / "out/corr" / (std::string(name) + "_heatmap.svg")));
  }
}

TEST(Corr, DataScaleFlagChangesOnlyColours) {
  const auto dir = cli::fresh_dir("corr_scale");
  // toy averages reach |rho| = 1 off the diagonal, so both scales coincide there
  const auto cfg = cli::write_config(dir, demo_config(dir / "out"));
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " ingest").code, 0);
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " corr").code, 0);
  const auto fixed = cli::snapshot(dir / "out/corr");
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " corr --data-scale").code, 0);
  const auto data = cli::snapshot(dir / "out/corr");
  EXPECT_EQ(fixed.at("existing.csv"), data.at("existing.csv"));
  EXPECT_EQ(fixed.at("existing_heatmap.csv"), data.at("existing_heatmap.csv"));
  EXPECT_NE(fixed.at("existing_heatmap.svg"), data.at("existing_heatmap.svg"));
}

// ---- fmb --------------------------------------------------------------------

TEST(Fmb, BaselineOnlyAndDuplicateCandidate) {
  const auto dir = cli::fresh_dir("fmb_dup");
  const auto cfg = cli::write_config(dir, demo_config(dir / "out") + "candidates = none\n");
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " ingest").code, 0);
  auto r = cli::run(cfg_arg(cfg) + " fmb");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto only = text::read_file((dir / "out/fmb/summary.csv").string());
  EXPECT_EQ(std::count(only.begin(), only.end(), '\n'), 2) << only;

  r = cli::run(cfg_arg(cfg) + " fmb --set formula.DUP=PB");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto summary = text::read_file((dir / "out/fmb/summary.csv").string());
  EXPECT_NE(summary.find("DUP,failed"), std::string::npos) << summary;
  EXPECT_NE(r.output.find("DUP failed"), std::string::npos);
  const auto box = text::read_file((dir / "out/fmb/boxplot.csv").string());
  EXPECT_EQ(box.find("DUP"), std::string::npos);
  EXPECT_EQ(box.substr(box.rfind('\n', box.size() - 2) + 1, 9), "baseline,");
}

TEST(Fmb, HiddenFactorOrderingEndToEnd) {
  for (std::uint64_t seed : {101, 102}) {
    const auto dir = cli::fresh_dir("fmb_hidden_" + std::to_string(seed));
    const auto hf = synth::hidden_factor_panel(seed);
    cli::export_panel(hf.panel, dir / "signals.csv", dir / "prices.csv", 0.05);  // adj R² is scale-free
    const auto cfg = cli::write_config(dir, "signals = signals.csv\nprices = prices.csv\ncandidates = PVS\nout = out\n");
    ASSERT_EQ(cli::run(cfg_arg(cfg) + " ingest").code, 0);
    const auto r = cli::run(cfg_arg(cfg) + " fmb");
    ASSERT_EQ(r.code, 0) << r.output;
    const auto cmp = fmb_from_csv(text::read_file((dir / "out/fmb/summary.csv").string()),
                                  text::read_file((dir / "out/fmb/adj_r2.csv").string()),
                                  text::read_file((dir / "out/fmb/gammas.csv").string()));
    const auto* pvs = cmp.find("PVS");
    ASSERT_TRUE(pvs && pvs->ok);
    EXPECT_GT(pvs->summary->median, cmp.baseline.summary->median) << "seed " << seed;
  }
}

TEST(Fmb, BaselineFailureIsNumeric) {
  const auto dir = cli::fresh_dir("fmb_toy");
  const auto cfg = cli::write_config(dir, toy_config(dir / "out"));
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " ingest").code, 0);
  const auto r = cli::run(cfg_arg(cfg) + " fmb");
  EXPECT_EQ(r.code, kExitNumeric) << r.output;
  EXPECT_NE(r.output.find("baseline model failed"), std::string::npos);
}

// ---- mine -------------------------------------------------------------------

TEST(Mine, ReplayAppendsIqsAndDedups) {
  const auto dir = cli::fresh_dir("mine");
  const auto cfg = cli::write_config(dir, demo_config(dir / "out"));
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " ingest").code, 0);
  auto r = cli::run(cfg_arg(cfg) + " mine");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto reg = read_registry(dir / "out/candidates.jsonl");
  ASSERT_EQ(reg.size(), 1u);
  EXPECT_EQ(reg[0]["abbreviation"], "IQS");
  EXPECT_EQ(reg[0]["formula"], "ROE * (1 / PE) * (1 / PB) * log(SPS)");
  EXPECT_EQ(reg[0]["status"], "parsed");
  const auto first = cli::snapshot(dir / "out");

  r = cli::run(cfg_arg(cfg) + " mine");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("unchanged"), std::string::npos);
  EXPECT_EQ(cli::snapshot(dir / "out"), first);

  r = cli::run(cfg_arg(cfg) + " mine --set dedup=false");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(read_registry(dir / "out/candidates.jsonl").size(), 2u);
}

TEST(Mine, MinedCandidateFeedsFmb) {
  const auto dir = cli::fresh_dir("mine_fmb");
  const auto cfg = cli::write_config(dir, demo_config(dir / "out") + "candidates = none\nregistry_candidates = true\n");
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " ingest").code, 0);
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " mine").code, 0);
  const auto r = cli::run(cfg_arg(cfg) + " fmb");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(text::read_file((dir / "out/fmb/summary.csv").string()).find("IQS,ok"), std::string::npos);
}

TEST(Mine, ReplayMissExitsWithTransportCode) {
  const auto dir = cli::fresh_dir("mine_miss");
  const auto cfg = cli::write_config(dir, demo_config(dir / "out"));
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " ingest").code, 0);
  const auto r = cli::run(cfg_arg(cfg) + " --seed 8 mine");
  EXPECT_EQ(r.code, kExitTransport);
  EXPECT_NE(r.output.find("no replay fixture"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(dir / "out/candidates.jsonl"));
}

TEST(Mine, LiveWithoutCredentialIsConfigError) {
  const auto dir = cli::fresh_dir("mine_live");
  const auto cfg = cli::write_config(dir, demo_config(dir / "out") + "endpoint = http://127.0.0.1:9/v1\n" +
                                              "api_key_env = ALPHALAB_CLI_TEST_NO_SUCH_KEY\n");
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " ingest").code, 0);
  const auto r = cli::run(cfg_arg(cfg) + " mine --live", "env -u ALPHALAB_CLI_TEST_NO_SUCH_KEY");
  EXPECT_EQ(r.code, kExitConfig) << r.output;
  EXPECT_NE(r.output.find("ALPHALAB_CLI_TEST_NO_SUCH_KEY"), std::string::npos);
}

TEST(Mine, SeedIsRequired) {
  const auto dir = cli::fresh_dir("mine_noseed");
  auto body = demo_config(dir / "out");
  body.erase(body.find("seed = 7\n"), 9);
  const auto cfg = cli::write_config(dir, body);
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " ingest").code, 0);
  const auto r = cli::run(cfg_arg(cfg) + " mine");
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.output.find("seed"), std::string::npos);
}

// ---- report -----------------------------------------------------------------

TEST(Report, DemoPipelineGolden) {
  const auto dir = cli::fresh_dir("report");
  const auto cfg = cli::write_config(dir, demo_config(dir / "out"));
  for (const char* cmd : {"ingest", "corr", "fmb", "report"}) {
    const auto r = cli::run(cfg_arg(cfg) + " " + cmd);
    ASSERT_EQ(r.code, 0) << cmd << ": " << r.output;
  }
  // same document as the library-level rendering of the same run
  golden::check("summary_demo.md", text::read_file((dir / "out/summary.md").string()));
}

TEST(Report, MissingInputsAreNamed) {
  const auto dir = cli::fresh_dir("report_missing");
  const auto cfg = cli::write_config(dir, demo_config(dir / "out"));
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " ingest").code, 0);
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " corr").code, 0);
  const auto r = cli::run(cfg_arg(cfg) + " report");
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.output.find("summary.csv"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("run 'fmb' first"), std::string::npos);
}

// ---- surface ----------------------------------------------------------------

TEST(Surface, ConfigErrors) {
  const auto dir = cli::fresh_dir("config_errors");
  auto expect_config_error = [&](const std::string& body, const std::string& needle) {
    const auto cfg = cli::write_config(dir, body);
    const auto r = cli::run(cfg_arg(cfg) + " ingest");
    EXPECT_EQ(r.code, kExitConfig) << body << "\n" << r.output;
    EXPECT_NE(r.output.find(needle), std::string::npos) << r.output;
  };
  expect_config_error("colour = blue\n", "unknown key");
  expect_config_error("api_key = sk-123\n", "never read from the config");
  expect_config_error("signals = a.csv\nprices = b.csv\ndate_from = 2020-06-30\ndate_to = 2020-03-31\n", "date range is empty");
  expect_config_error("formula.X = ROE /\n", "formula.X");
  expect_config_error("candidates = XYZ\n", "not a builtin");
  expect_config_error("horizon = 6M\n", "unknown horizon");
  expect_config_error("seed = -3\n", "non-negative integer");

  EXPECT_EQ(cli::run("--config /nonexistent.cfg ingest").code, kExitConfig);
  EXPECT_EQ(cli::run("").code, kExitConfig) << "a subcommand is required";
  EXPECT_EQ(cli::run("frobnicate").code, kExitConfig);
  EXPECT_EQ(cli::run("--help").code, kExitOk);
}

TEST(Surface, FlagsOverrideConfig) {
  const auto dir = cli::fresh_dir("override");
  const auto cfg = cli::write_config(dir, toy_config(dir / "from_config"));
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " --out " + cli::quote((dir / "from_flag").string()) + " ingest").code, 0);
  EXPECT_TRUE(fs::exists(dir / "from_flag/manifest.json"));
  EXPECT_FALSE(fs::exists(dir / "from_config"));
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " --set out=" + cli::quote((dir / "via_set").string()) + " ingest").code, 0);
  EXPECT_TRUE(fs::exists(dir / "via_set/panel.bin"));
}

TEST(Surface, DateRangeRestrictsEvaluation) {
  const auto dir = cli::fresh_dir("date_range");
  const auto cfg = cli::write_config(dir, demo_config(dir / "out") + "date_from = 2017-01-01\ndate_to = 2019-12-31\n");
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " ingest").code, 0);
  ASSERT_EQ(cli::run(cfg_arg(cfg) + " corr").code, 0);
  const auto corr = corr_from_csv(text::read_file((dir / "out/corr/existing.csv").string()));
  ASSERT_EQ(corr.per_date.size(), 12u);
  EXPECT_EQ(corr.per_date.front().date, Date(2017, 3, 31));
  EXPECT_EQ(corr.per_date.back().date, Date(2019, 12, 31));
  const auto r = cli::run(cfg_arg(cfg) + " --set date_from=2030-01-01 --set date_to=2030-12-31 corr");
  EXPECT_EQ(r.code, kExitData) << r.output;
}

TEST(Surface, EveryCommandIsIdempotentAcrossWorkerCounts) {
  const auto base = cli::fresh_dir("idempotent");
  std::map<std::string, std::string> reference;
  for (int workers : {1, 1, 3}) {
    const auto dir = base / ("w" + std::to_string(workers) + "_" + std::to_string(reference.empty()));
    fs::create_directories(dir);
    const auto cfg = cli::write_config(dir, demo_config(base / "out"));
    for (const char* cmd : {"ingest", "corr", "fmb", "mine", "report"}) {
      const auto r = cli::run(cfg_arg(cfg) + " --workers " + std::to_string(workers) + " " + cmd);
      ASSERT_EQ(r.code, 0) << cmd << ": " << r.output;
    }
    auto snap = cli::snapshot(base / "out");
    if (reference.empty()) reference = std::move(snap);
    else EXPECT_EQ(snap, reference) << "workers " << workers;
  }
}
