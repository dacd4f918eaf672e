#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "alphalab/alphalab.hpp"
#include "support/golden.hpp"

using namespace alphalab;

namespace {

const std::string kToy = std::string(ALPHALAB_FIXTURES) + "/toy/";

Panel toy(Horizon h = Horizon::ThreeMonth) {
  return load_panel({kToy + "signals.csv"}, kToy + "prices.csv", h);
}

std::string write_temp(const std::string& name, const std::string& content) {
  const auto dir = std::filesystem::temp_directory_path() / "alphalab_panel_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / name).string();
  std::ofstream(path) << content;
  return path;
}

std::optional<double> ret(const Panel& p, const std::string& ticker, const char* date) {
  const auto it = std::find(p.companies().begin(), p.companies().end(), ticker);
  const auto d = p.date_index(*Date::parse(date));
  return p.fwd_return(static_cast<std::size_t>(it - p.companies().begin()), *d);
}

}  // namespace

TEST(Panel, ToyFixtureShape) {
  const auto p = toy();
  EXPECT_EQ(p.dates().size(), 4u);
  EXPECT_EQ(p.companies(), (std::vector<std::string>{"AAA", "BBB", "CCC"}));
  EXPECT_EQ(p.signal_names(), canonical_signal_ids());
  EXPECT_EQ(p.missing_values(), 2u);  // BBB ROA 2020-06-30, CCC ROE "n/a"
}

TEST(Panel, ForwardReturnsMatchHandComputation) {
  const auto p = toy();
  // prices 100 -> 106
  EXPECT_NEAR(*ret(p, "AAA", "2020-03-31"), 0.06, 1e-15);
  EXPECT_NEAR(*ret(p, "AAA", "2020-06-30"), (103.0 - 106.0) / 106.0, 1e-15);
  EXPECT_NEAR(*ret(p, "AAA", "2020-09-30"), 7.0 / 103.0, 1e-15);
  EXPECT_NEAR(*ret(p, "AAA", "2020-12-31"), 0.1, 1e-15);
  EXPECT_NEAR(*ret(p, "BBB", "2020-03-31"), -0.1, 1e-15);
  EXPECT_NEAR(*ret(p, "BBB", "2020-06-30"), 0.2, 1e-15);
  EXPECT_NEAR(*ret(p, "BBB", "2020-09-30"), 0.0, 1e-15);
  EXPECT_FALSE(ret(p, "BBB", "2020-12-31"));  // no price at t+h
  EXPECT_NEAR(*ret(p, "CCC", "2020-03-31"), 0.25, 1e-15);
  EXPECT_FALSE(ret(p, "CCC", "2020-06-30"));  // empty price at t+h
  EXPECT_FALSE(ret(p, "CCC", "2020-09-30"));  // empty price at t
  EXPECT_NEAR(*ret(p, "CCC", "2020-12-31"), -0.25, 1e-15);
  EXPECT_EQ(p.missing_returns(), 3u);
}

TEST(Panel, ReturnIdentityHoldsForEveryDefinedReturn) {
  const auto p = toy();
  const std::map<std::pair<std::string, std::string>, double> px = {
      {{"AAA", "2020-03-31"}, 100}, {{"AAA", "2020-06-30"}, 106}, {{"AAA", "2020-09-30"}, 103},
      {{"AAA", "2020-12-31"}, 110}, {{"AAA", "2021-03-31"}, 121}, {{"BBB", "2020-03-31"}, 50},
      {{"BBB", "2020-06-30"}, 45},  {{"BBB", "2020-09-30"}, 54},  {{"BBB", "2020-12-31"}, 54},
      {{"CCC", "2020-03-31"}, 20},  {{"CCC", "2020-06-30"}, 25},  {{"CCC", "2020-12-31"}, 24},
      {{"CCC", "2021-03-31"}, 18}};
  for (std::size_t i = 0; i < p.companies().size(); ++i)
    for (std::size_t d = 0; d < p.dates().size(); ++d) {
      const auto r = p.fwd_return(i, d);
      if (!r) continue;
      const auto& c = p.companies()[i];
      const double p0 = px.at({c, p.dates()[d].iso()});
      const double p1 = px.at({c, p.dates()[d].add_months(3).iso()});
      EXPECT_LT(std::abs(*r - (p1 / p0 - 1.0)), 1e-12);
    }
}

TEST(Panel, OneMonthHorizonUsesNearestObservation) {
  const auto sig = write_temp("sig1m.csv",
                              "ticker,date,PE\nAAA,2020-01-31,10\nAAA,2020-02-29,11\n"
                              "BBB,2020-01-31,5\nBBB,2020-02-29,6\n");
  // 2020-01-31 + 1M = 2020-02-29 (month end); AAA trades on 02-28 only
  const auto px = write_temp("px1m.csv",
                             "ticker,date,adj_close\nAAA,2020-01-31,100\nAAA,2020-02-28,105\n"
                             "AAA,2020-03-31,110\nBBB,2020-01-30,50\nBBB,2020-02-29,40\n"
                             "BBB,2020-04-20,44\n");
  const auto p = load_panel({sig}, px, Horizon::OneMonth);
  EXPECT_NEAR(*p.fwd_return(0, 0), 0.05, 1e-15);
  EXPECT_NEAR(*p.fwd_return(0, 1), 110.0 / 105.0 - 1.0, 1e-15);
  EXPECT_NEAR(*p.fwd_return(1, 0), -0.2, 1e-15);  // t matched one day early
  EXPECT_FALSE(p.fwd_return(1, 1));               // nothing within a week of 03-31
}

TEST(Panel, ReloadIsIdempotent) { EXPECT_TRUE(toy() == toy()); }

TEST(Panel, AliasTableMapsDisplayNames) {
  const auto sig = write_temp("alias.csv", "ticker,date,Price To Earnings,ROE\nAAA,2020-03-31,1,2\n"
                                           "BBB,2020-03-31,3,4\nAAA,2020-06-30,1,2\nBBB,2020-06-30,3,4\n");
  const auto px = write_temp("alias_px.csv", "ticker,date,adj_close\n");
  EXPECT_THROW(load_panel({sig}, px, Horizon::ThreeMonth), SchemaError);
  auto aliases = AliasTable::from_text("Price To Earnings = PE\n", "inline");
  const auto p = load_panel({sig}, px, Horizon::ThreeMonth, aliases);
  EXPECT_EQ(p.signal_names(), (std::vector<std::string>{"PE", "ROE"}));
  EXPECT_EQ(*p.value(1, 0, "PE"), 3.0);
}

TEST(Panel, MalformedHeaderNamesTheColumn) {
  const auto px = kToy + "prices.csv";
  try {
    load_panel({write_temp("bad1.csv", "ticker,date,PE,Bogus\nAAA,2020-03-31,1,2\n")}, px, Horizon::ThreeMonth);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.column(), "Bogus");
  }
  try {
    load_panel({write_temp("bad2.csv", "symbol,date,PE\n")}, px, Horizon::ThreeMonth);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.column(), "symbol");
  }
  try {
    load_panel({kToy + "signals.csv"}, write_temp("badpx.csv", "ticker,date,close\n"), Horizon::ThreeMonth);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.column(), "close");
  }
}

TEST(Panel, EmptyInputIsAnError) {
  const auto px = kToy + "prices.csv";
  EXPECT_THROW(load_panel({write_temp("empty.csv", "ticker,date,PE\n")}, px, Horizon::ThreeMonth),
               EmptyPanelError);
  EXPECT_THROW(load_panel({write_temp("one.csv", "ticker,date,PE\nAAA,2020-03-31,1\nBBB,2020-03-31,2\n")}, px,
                          Horizon::ThreeMonth),
               EmptyPanelError);
}

TEST(Panel, BadRowsCarryFileAndLine) {
  const auto px = kToy + "prices.csv";
  try {
    load_panel({write_temp("baddate.csv", "ticker,date,PE\nAAA,2020-03-31,1\nAAA,31/03/2020,2\n")}, px,
               Horizon::ThreeMonth);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("baddate.csv:3"), std::string::npos) << e.what();
  }
}

TEST(Panel, SectorFilesMerge) {
  const auto a = write_temp("it.csv", "ticker,date,PE\nAAA,2020-03-31,1\nAAA,2020-06-30,2\n");
  const auto b = write_temp("hc.csv", "ticker,date,ROE\nBBB,2020-03-31,3\nBBB,2020-06-30,4\n");
  const auto p = load_panel({a, b}, kToy + "prices.csv", Horizon::ThreeMonth);
  EXPECT_EQ(p.companies().size(), 2u);
  EXPECT_EQ(p.signal_names(), (std::vector<std::string>{"PE", "ROE"}));
  EXPECT_FALSE(p.value(0, 0, "ROE"));
  EXPECT_EQ(*p.value(1, 1, "ROE"), 4.0);
}

TEST(CrossSection, AllCompaniesComplete) {
  const auto p = toy();
  const auto cs = cross_section(p, *Date::parse("2020-03-31"), signal_columns({"PE"}));
  EXPECT_EQ(cs.companies, (std::vector<std::string>{"AAA", "BBB", "CCC"}));
  EXPECT_EQ(cs.signal_matrix(1, 0), 20.0);
  EXPECT_NEAR(cs.returns(2), 0.25, 1e-15);
}

TEST(CrossSection, MissingSignalDropsCompany) {
  const auto p = toy();
  // BBB lacks ROA at 06-30; CCC lacks a return there
  const auto cs = cross_section(p, *Date::parse("2020-06-30"), signal_columns({"PE", "ROA"}), 1);
  EXPECT_EQ(cs.companies, (std::vector<std::string>{"AAA"}));
  const auto cs2 = cross_section(p, *Date::parse("2020-06-30"), signal_columns({"PE"}), 1);
  EXPECT_EQ(cs2.companies, (std::vector<std::string>{"AAA", "BBB"}));
}

TEST(CrossSection, EnumeratedSurvivorsEveryDate) {
  const auto p = toy();
  const std::vector<std::vector<std::string>> expected = {
      {"AAA", "BBB", "CCC"}, {"AAA"}, {"AAA", "BBB"}, {"AAA", "CCC"}};
  for (std::size_t d = 0; d < 4; ++d) {
    const auto cs = cross_section(p, p.dates()[d], signal_columns(canonical_signal_ids()), 0);
    EXPECT_EQ(cs.companies, expected[d]) << p.dates()[d].iso();
    EXPECT_TRUE(cs.signal_matrix.allFinite());
    EXPECT_TRUE(cs.returns.allFinite());
  }
}

TEST(CrossSection, AlphaColumnsAreEvaluatedAndFiltered) {
  const auto p = toy();
  const auto evc = builtin_alphas()[2];
  const auto cs = cross_section(p, p.dates()[0], {Column::of_alpha(evc)}, 0);
  ASSERT_EQ(cs.size(), 3u);
  EXPECT_NEAR(cs.signal_matrix(0, 0), 1.0 / 5 / 9 / 8, 1e-15);
}

TEST(CrossSection, InsufficientCarriesCount) {
  const auto p = toy();
  try {
    cross_section(p, p.dates()[1], signal_columns({"PE", "ROA"}));
    FAIL();
  } catch (const InsufficientCrossSectionError& e) {
    EXPECT_EQ(e.count(), 1u);
    EXPECT_EQ(e.required(), 4u);
  }
}

TEST(SampleRows, ZeroRowsIsHeaderOnly) {
  const auto out = sample_rows(toy(), 0, 7);
  EXPECT_EQ(out, "ticker  date  PE  PB  ROA  ROE  FCF  PCF  EBITDA  GM  NM  SPS  return\n");
}

TEST(SampleRows, DeterministicAndBounded) {
  const auto p = toy();
  EXPECT_EQ(sample_rows(p, 4, 42), sample_rows(p, 4, 42));
  EXPECT_EQ(complete_rows(p).size(), 8u);
  EXPECT_NO_THROW(sample_rows(p, 8, 42));
  EXPECT_THROW(sample_rows(p, 9, 42), DataError);
}

TEST(SampleRows, GoldenTenRowsFromDemoPanel) {
  const std::string demo = std::string(ALPHALAB_FIXTURES) + "/demo/";
  const auto p = load_panel({demo + "signals.csv"}, demo + "prices.csv", Horizon::ThreeMonth);
  golden::check("sample_rows_demo_k10_seed7.txt", sample_rows(p, 10, 7));
}
