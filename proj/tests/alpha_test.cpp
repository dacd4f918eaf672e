#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "alphalab/alphalab.hpp"

using namespace alphalab;

namespace {

using E = AlphaExpr;

E sig(const char* id) { return E::signal(id); }

AlphaDef builtin(const std::string& abbr) {
  for (auto& d : builtin_alphas())
    if (d.abbreviation == abbr) return d;
  throw std::runtime_error("no builtin " + abbr);
}

// Three companies, all ten signals in canonical order.
CrossSection hand_section() {
  CrossSection cs;
  cs.date = Date(2020, 3, 31);
  cs.companies = {"AAA", "BBB", "CCC"};
  cs.columns = canonical_signal_ids();
  cs.signal_matrix.resize(3, 10);
  //                  PE    PB   ROA   ROE  FCF  PCF  EBITDA  GM    NM   SPS
  cs.signal_matrix << 10.0, 2.0, 5.0, 12.0, 3.0, 8.0, 9.0,  40.0, 10.0, 20.0,
                      20.0, 4.0, 2.0, 8.0,  6.0, 5.0, 4.0,  25.0, 5.0,  1.0,
                      8.0,  0.5, 0.0, 16.0, 1.0, 2.0, 10.0, 60.0, 12.0, 2.5;
  cs.returns = Eigen::VectorXd::Zero(3);
  return cs;
}

void expect_values(const std::vector<std::optional<double>>& got, const std::vector<std::optional<double>>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    ASSERT_EQ(got[i].has_value(), want[i].has_value()) << "row " << i;
    if (want[i]) {
      EXPECT_LT(std::abs(*got[i] - *want[i]), 1e-12) << "row " << i;
    }
  }
}

E random_expr(std::mt19937_64& rng, int depth) {
  const auto& ids = canonical_signal_ids();
  std::uniform_int_distribution<int> pick(0, depth <= 1 ? 1 : 7);
  switch (pick(rng)) {
    case 0: {
      // constants that render exactly and stay non-negative (a negative
      // literal reparses as Neg(Const))
      std::uniform_int_distribution<int> k(0, 9999);
      const double v = static_cast<double>(k(rng)) / (rng() % 2 ? 1.0 : 64.0);
      return E::constant(v);
    }
    case 1: return E::signal(ids[rng() % ids.size()]);
    case 2: return E::neg(random_expr(rng, depth - 1));
    case 3: return E::log(random_expr(rng, depth - 1));
    case 4: return E::add(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 5: return E::sub(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 6: return E::mul(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    default: return E::div(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
  }
}

}  // namespace

TEST(Parse, RatioOfSignals) { EXPECT_EQ(parse_alpha("ROE / PE"), E::div(sig("ROE"), sig("PE"))); }

TEST(Parse, InvestmentQualityScoreIsAMulChain) {
  const auto e = parse_alpha("ROE * (1/PE) * (1/PB) * log(SPS)");
  const auto want = E::mul(E::mul(E::mul(sig("ROE"), E::div(E::constant(1), sig("PE"))),
                                  E::div(E::constant(1), sig("PB"))),
                           E::log(sig("SPS")));
  EXPECT_EQ(e, want);
}

TEST(Parse, PrecedenceAndAssociativity) {
  EXPECT_EQ(parse_alpha("PE - PB - ROA"), E::sub(E::sub(sig("PE"), sig("PB")), sig("ROA")));
  EXPECT_EQ(parse_alpha("PE / PB / ROA"), E::div(E::div(sig("PE"), sig("PB")), sig("ROA")));
  EXPECT_EQ(parse_alpha("PE + PB * ROA"), E::add(sig("PE"), E::mul(sig("PB"), sig("ROA"))));
  EXPECT_EQ(parse_alpha("-PE * PB"), E::mul(E::neg(sig("PE")), sig("PB")));
  EXPECT_EQ(parse_alpha("--PE"), E::neg(E::neg(sig("PE"))));
  EXPECT_EQ(parse_alpha("2.5e-1*GM"), E::mul(E::constant(0.25), sig("GM")));
}

TEST(Parse, BracketedDisplayNames) {
  EXPECT_EQ(parse_alpha("ROE / [P/E]"), E::div(sig("ROE"), sig("PE")));
  EXPECT_EQ(parse_alpha("[EV/EBITDA] * [P/CF]"), E::mul(sig("EBITDA"), sig("PCF")));
  EXPECT_THROW(parse_alpha("[P/Q]"), UnknownSignalError);
}

TEST(Parse, UnclosedParenReportsEndOfInput) {
  try {
    parse_alpha("(PE + ROE");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 9u);
    EXPECT_NE(std::string(e.what()).find("end of input"), std::string::npos);
  }
}

TEST(Parse, SyntaxErrorsCarryPosition) {
  const std::vector<std::pair<std::string, std::size_t>> cases = {
      {"", 0}, {"PE +", 4}, {"PE ) ", 3}, {"PE $ PB", 3}, {"log PE", 4}, {"[P/E", 0}};
  for (const auto& [text, pos] : cases) {
    try {
      parse_alpha(text);
      ADD_FAILURE() << "no error for '" << text << "'";
    } catch (const ParseError& e) {
      EXPECT_EQ(e.position(), pos) << text;
    }
  }
}

TEST(Parse, UnknownIdentifierNamesTheToken) {
  try {
    parse_alpha("ROE / BETA");
    FAIL() << "expected UnknownSignalError";
  } catch (const UnknownSignalError& e) {
    EXPECT_EQ(e.token(), "BETA");
  }
}

TEST(Builtins, AbbreviationsAndFormulas) {
  const auto defs = builtin_alphas();
  std::vector<std::string> abbr;
  for (const auto& d : defs) {
    abbr.push_back(d.abbreviation);
    EXPECT_EQ(d.provenance, Provenance::Builtin);
  }
  EXPECT_EQ(abbr, (std::vector<std::string>{"PVS", "RAPS", "EVC", "VEC", "PLF", "IQS"}));
  EXPECT_EQ(builtin("RAPS").expr, E::div(sig("ROE"), E::mul(sig("PE"), E::constant(2))));
  EXPECT_EQ(referenced_signals(builtin("EVC").expr), (std::set<std::string>{"ROA", "EBITDA", "PCF"}));
  EXPECT_EQ(referenced_signals(builtin("IQS").expr), (std::set<std::string>{"ROE", "PE", "PB", "SPS"}));
}

TEST(Builtins, RoundTripThroughRenderer) {
  for (const auto& d : builtin_alphas()) EXPECT_EQ(parse_alpha(render_alpha(d.expr)), d.expr) << d.abbreviation;
  EXPECT_EQ(render_alpha(E::div(sig("ROE"), sig("PE"))), "ROE / PE");
}

TEST(Builtins, HandComputedThreeCompanySection) {
  const auto cs = hand_section();
  // AAA: PE 10 PB 2 ROA 5 ROE 12 FCF 3 PCF 8 EBITDA 9 GM 40 SPS 20
  // BBB: PE 20 PB 4 ROA 2 ROE 8  FCF 6 PCF 5 EBITDA 4 GM 25 SPS 1
  // CCC: PE 8  PB .5 ROA 0 ROE 16 FCF 1 PCF 2 EBITDA 10 GM 60 SPS 2.5
  expect_values(eval_alpha(builtin("PVS").expr, cs), {1.2, 0.4, 2.0});
  expect_values(eval_alpha(builtin("RAPS").expr, cs), {0.6, 0.2, 1.0});
  expect_values(eval_alpha(builtin("EVC").expr, cs), {1.0 / 360.0, 1.0 / 40.0, std::nullopt});
  expect_values(eval_alpha(builtin("VEC").expr, cs), {25.0 / 3.0, 34.0 / 3.0, 25.0 / 3.0});
  expect_values(eval_alpha(builtin("PLF").expr, cs), {48.0, 10.0, 120.0});
  expect_values(eval_alpha(builtin("IQS").expr, cs),
                {12.0 / 10.0 / 2.0 * std::log(20.0), 0.0, 16.0 / 8.0 / 0.5 * std::log(2.5)});
}

TEST(Eval, ScalarExamples) {
  auto lookup = [](std::map<std::string, double> m) {
    return [m](const std::string& id) -> std::optional<double> {
      auto it = m.find(id);
      return it == m.end() ? std::nullopt : std::optional<double>(it->second);
    };
  };
  EXPECT_EQ(*evaluate(builtin("PVS").expr, lookup({{"ROE", 10}, {"PE", 5}})), 2.0);
  EXPECT_EQ(*evaluate(builtin("RAPS").expr, lookup({{"ROE", 4}, {"PE", 2}})), 1.0);
  EXPECT_EQ(*evaluate(builtin("VEC").expr, lookup({{"PE", 3}, {"ROE", 3}, {"FCF", 3}})), 3.0);
  EXPECT_EQ(*evaluate(builtin("IQS").expr, lookup({{"ROE", 7}, {"PE", 3}, {"PB", 0.1}, {"SPS", 1}})), 0.0);
  for (const char* zero : {"ROA", "EBITDA", "PCF"}) {
    std::map<std::string, double> m = {{"ROA", 2}, {"EBITDA", 3}, {"PCF", 4}};
    m[zero] = 0.0;
    EXPECT_FALSE(evaluate(builtin("EVC").expr, lookup(m))) << zero;
  }
  EXPECT_FALSE(evaluate(parse_alpha("log(PE)"), lookup({{"PE", -1}})));
  EXPECT_FALSE(evaluate(parse_alpha("log(PE)"), lookup({{"PE", 0}})));
  EXPECT_FALSE(evaluate(parse_alpha("PE * 1e308 * 10"), lookup({{"PE", 1}})));
  EXPECT_FALSE(evaluate(parse_alpha("PE + ROE"), lookup({{"PE", 1}})));
}

TEST(Eval, MissingColumnIsUnknownSignal) {
  auto cs = hand_section();
  cs.columns = {"PE", "PB", "ROA", "X", "FCF", "PCF", "EBITDA", "GM", "NM", "SPS"};
  EXPECT_THROW(eval_alpha(builtin("PVS").expr, cs), UnknownSignalError);
}

TEST(Property, RandomAstRoundTrip) {
  std::mt19937_64 rng(42);
  for (int k = 0; k < 3000; ++k) {
    const auto e = random_expr(rng, 1 + k % 6);
    ASSERT_LE(e.depth(), 6u);
    const auto text = render_alpha(e);
    ASSERT_EQ(parse_alpha(text), e) << text;
  }
}

TEST(Property, EvaluationIsScaleCorrectAndNeverNonFinite) {
  std::mt19937_64 rng(7);
  std::lognormal_distribution<double> pos(0.0, 1.0);
  std::normal_distribution<double> any(0.0, 3.0);
  for (int k = 0; k < 400; ++k) {
    const auto e = random_expr(rng, 5);
    CrossSection cs;
    cs.columns = canonical_signal_ids();
    cs.signal_matrix.resize(8, 10);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 10; ++j) cs.signal_matrix(i, j) = j % 2 ? pos(rng) : any(rng);
    cs.signal_matrix(0, 3) = 0.0;
    cs.companies.assign(8, "C");
    cs.returns = Eigen::VectorXd::Zero(8);
    const double c = 0.5 + static_cast<double>(k % 7);
    const auto base = eval_alpha(e, cs);
    const auto scaled = eval_alpha(E::mul(E::constant(c), e), cs);
    for (std::size_t i = 0; i < base.size(); ++i) {
      if (!base[i]) continue;
      ASSERT_TRUE(std::isfinite(*base[i]));
      if (scaled[i]) {
        EXPECT_NEAR(*scaled[i], c * *base[i], 1e-12 * std::max(1.0, std::abs(c * *base[i])));
      }
    }
  }
}
