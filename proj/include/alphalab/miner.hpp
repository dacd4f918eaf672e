#ifndef ALPHALAB_MINER_HPP
#define ALPHALAB_MINER_HPP

// Two-step prompting for new formulaic alphas.
//
// Step 1 asks the model for the definition, return-predictive effect and
// preferred tendency of each existing signal. Step 2 sends instructions, the
// step-1 definitions, a seeded sample of panel rows and the query, followed
// by the zero-shot chain-of-thought trigger. The response is parsed into a
// single candidate formula.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "alphalab/alpha.hpp"
#include "alphalab/error.hpp"
#include "alphalab/panel.hpp"
#include "alphalab/signals.hpp"
#include "alphalab/text.hpp"
#include "alphalab/transport.hpp"

namespace alphalab {

inline constexpr std::string_view kCotTrigger = "Let's think step by step.";

inline constexpr std::string_view kDefaultInstructions =
    "You are a quantitative researcher building stock return-predictive signals.\n"
    "The data below lists companies, quarter-end dates, ten existing financial signals and the\n"
    "forward quarterly return that followed each date.\n"
    "Create exactly one new signal as a closed-form formula of the existing signals. Nonlinear\n"
    "combinations are welcome. Use only the signal names listed in the definitions, numeric\n"
    "constants, + - * / and log(). Give the new signal a descriptive name with an abbreviation in\n"
    "parentheses, written in bold, and state the formula on its own line in the form\n"
    "ABBREVIATION = formula.";

inline constexpr std::string_view kDefaultQuery =
    "Based on the definitions and the sample data, create one new signal that is likely to predict\n"
    "future quarterly stock returns better than the existing signals. Explain your reasoning,\n"
    "then give its name, abbreviation and formula.";

/// Step-1 prompt. Deterministic in `signals`.
inline std::string build_definitions_prompt(const std::vector<std::string>& signals) {
  if (signals.empty()) throw ConfigError("definitions prompt: empty signal list");
  std::string out =
      "For each financial signal listed below, provide:\n"
      "1. Definition: what the signal measures and how it is calculated.\n"
      "2. Effect on predicting stock returns: how the signal relates to future returns.\n"
      "3. Preferred tendency: whether higher or lower values are preferred by investors.\n"
      "\n"
      "Signals:\n";
  for (const auto& id : signals) {
    const auto& info = signal_info(id);
    out += "- " + std::string(info.display);
    if (info.long_name != info.display) out += " (" + std::string(info.long_name) + ")";
    out += "\n";
  }
  out += "\nAnswer with one section per signal, headed by the signal name.\n";
  return out;
}

/// Step-2 prompt: instructions, definitions, sample, query, then the CoT
/// trigger as the final line.
inline std::string build_generation_prompt(std::string_view definitions, std::string_view sample,
                                           std::string_view query,
                                           std::string_view instructions = kDefaultInstructions) {
  auto need = [](std::string_view part, const char* name) {
    if (text::is_blank(part)) throw ConfigError(std::string("generation prompt: ") + name + " is empty");
  };
  need(instructions, "instructions");
  need(definitions, "definitions");
  need(sample, "sample data");
  need(query, "query");
  auto block = [](std::string_view s) {
    std::string b(text::trim(s));
    return b + "\n";
  };
  std::string out;
  out += "## Instructions\n\n" + block(instructions) + "\n";
  out += "## Definitions of the existing signals\n\n" + block(definitions) + "\n";
  out += "## Sample data\n\n" + block(sample) + "\n";
  out += "## Question\n\n" + block(query) + "\n";
  out += std::string(kCotTrigger) + "\n";
  return out;
}

struct PromptBundle {
  std::string step1_prompt;
  std::string step2_prompt;
  struct Metadata {
    std::uint64_t seed = 0;
    std::size_t sample_row_count = 0;
    std::vector<std::string> signals;
    std::string timestamp;  // of the step-2 completion
  } metadata;
};

// ---- response parsing -------------------------------------------------------

enum class ParseStatus { Parsed, Unparsable };

inline std::string_view to_string(ParseStatus s) noexcept {
  return s == ParseStatus::Parsed ? "parsed" : "unparsable";
}

struct MinedCandidate {
  std::string name;
  std::string abbreviation;
  std::string formula_text;  // as written in the response
  std::optional<AlphaExpr> expr;
  std::string reasoning_text;  // full response
  ParseStatus parse_status = ParseStatus::Unparsable;
  std::vector<std::string> warnings;

  AlphaDef to_def() const {
    if (!expr) throw ConfigError("candidate " + abbreviation + " has no parsed formula");
    return {name, abbreviation, *expr, Provenance::Mined};
  }
};

namespace detail {

inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

inline bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

/// Rewrites math notation and display names into DSL syntax.
inline std::string normalize_formula(std::string s, const AliasTable& aliases) {
  for (auto [from, to] : std::initializer_list<std::pair<std::string_view, std::string_view>>{
           {"×", "*"}, {"·", "*"}, {"⋅", "*"}, {"∗", "*"}, {"−", "-"},
           {"–", "-"}, {"÷", "/"}, {"\\cdot", "*"}, {"\\times", "*"}, {"\\left", ""},
           {"\\right", ""}, {"\\ln", "log"}, {"\\log", "log"}, {"`", ""}, {"$", ""}, {"**", ""}}) {
    replace_all(s, from, to);
  }
  // \frac{a}{b} with brace-free operands
  static const std::regex frac(R"(\\frac\s*\{([^{}]*)\}\s*\{([^{}]*)\})");
  for (std::string prev; prev != s;) {
    prev = s;
    s = std::regex_replace(s, frac, "($1) / ($2)");
  }
  replace_all(s, "{", "(");
  replace_all(s, "}", ")");
  static const std::regex ln(R"(\b(ln|Log|LOG|LN)\s*\()");
  s = std::regex_replace(s, ln, "log(");

  // display names, longest first, only at token boundaries
  for (const auto& [display, id] : aliases.by_length()) {
    if (display == id) continue;
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
      const bool before_ok = i == 0 || !word_char(s[i - 1]);
      if (before_ok && s.compare(i, display.size(), display) == 0) {
        const auto end = i + display.size();
        if (end == s.size() || !word_char(s[end]) || !word_char(display.back())) {
          out += id;
          i = end;
          continue;
        }
      }
      out += s[i++];
    }
    s = std::move(out);
  }
  return std::string(text::trim(s));
}

/// Markdown emphasis, inline code and math markers stripped from both ends.
inline std::string strip_markup(std::string_view s) {
  std::string t(text::trim(s));
  bool changed = true;
  while (changed && !t.empty()) {
    changed = false;
    for (std::string_view m : {"**", "__", "`", "$", "*", "_"}) {
      if (t.size() >= m.size() && t.compare(0, m.size(), m) == 0) {
        t.erase(0, m.size());
        changed = true;
      }
      if (t.size() >= m.size() && t.compare(t.size() - m.size(), m.size(), m) == 0) {
        t.erase(t.size() - m.size());
        changed = true;
      }
    }
    t = std::string(text::trim(t));
  }
  return t;
}

/// Trailing sentence punctuation and explanatory clauses.
inline std::string trim_formula_tail(std::string s) {
  for (std::string_view cut : {", where", " where ", "; where", " (where", "  #"}) {
    const auto pos = s.find(cut);
    if (pos != std::string::npos) s.erase(pos);
  }
  s = std::string(text::trim(s));
  while (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';' || s.back() == ':'))
    s.pop_back();
  return std::string(text::trim(s));
}

struct NamePhrase {
  std::string name;
  std::string abbreviation;
};

/// "Investment Quality Score (IQS)" -> {name, abbreviation}.
inline NamePhrase split_name(std::string phrase) {
  static const std::regex abbr(R"(^(.*?)\s*\(\s*([A-Za-z][A-Za-z0-9_]*)\s*\)\s*:?\s*$)");
  phrase = strip_markup(phrase);
  while (!phrase.empty() && (phrase.back() == ':' || phrase.back() == '.')) phrase.pop_back();
  std::smatch m;
  if (std::regex_match(phrase, m, abbr)) return {strip_markup(m[1].str()), m[2].str()};
  return {std::string(text::trim(phrase)), ""};
}

struct FormulaLine {
  std::size_t line = 0;       // 1-based
  std::string lhs;            // may be empty for a fenced bare expression
  std::string raw;            // right-hand side as written
};

}  // namespace detail

/// Extracts one candidate from a model response. Never throws on malformed
/// content; an unrecognizable response is returned as Unparsable.
inline MinedCandidate parse_llm_response(std::string_view response, const AliasTable& aliases = AliasTable{}) {
  if (text::is_blank(response)) throw ConfigError("empty model response");
  MinedCandidate c;
  c.reasoning_text = std::string(response);

  const auto lines = text::split(response, '\n');
  static const std::regex bold(R"(\*\*([^*]+)\*\*)");
  static const std::regex heading(R"(^\s*#{1,6}\s+(.+?)\s*#*\s*$)");
  static const std::regex assign(R"((?:^|[^A-Za-z0-9_/])([A-Z][A-Za-z0-9_]*)\s*=\s*(.+)$)");

  // names: first heading or bold phrase carrying "(ABBR)", else the first one
  std::vector<detail::NamePhrase> names;
  for (const auto& l : lines) {
    std::smatch m;
    std::string s(l);
    if (std::regex_match(s, m, heading)) names.push_back(detail::split_name(m[1].str()));
    for (std::sregex_iterator it(s.begin(), s.end(), bold), end; it != end; ++it)
      names.push_back(detail::split_name((*it)[1].str()));
  }
  auto named = std::find_if(names.begin(), names.end(), [](const auto& n) { return !n.abbreviation.empty(); });
  if (named != names.end()) {
    c.name = named->name;
    c.abbreviation = named->abbreviation;
  } else if (!names.empty()) {
    c.name = names.front().name;
  }

  // formula lines, in order of appearance
  std::vector<detail::FormulaLine> found;
  bool fenced = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string l(text::trim(lines[i]));
    if (l.rfind("```", 0) == 0) {
      fenced = !fenced;
      continue;
    }
    if (l.empty()) continue;
    std::string s = detail::strip_markup(l);
    std::smatch m;
    if (std::regex_search(s, m, assign)) {
      const auto lhs = m[1].str();
      if (aliases.resolve(lhs)) continue;  // "ROE = net income / equity" is a definition
      found.push_back({i + 1, lhs, detail::trim_formula_tail(detail::strip_markup(m[2].str()))});
    } else if (fenced) {
      found.push_back({i + 1, "", detail::trim_formula_tail(s)});
    }
  }

  std::size_t well_formed = 0;
  const detail::FormulaLine* chosen = nullptr;
  for (const auto& f : found) {
    try {
      auto e = parse_alpha(detail::normalize_formula(f.raw, aliases), aliases);
      if (referenced_signals(e).empty()) continue;
      if (++well_formed == 1) {
        chosen = &f;
        c.expr = std::move(e);
      }
    } catch (const Error&) {
    }
  }
  if (chosen) {
    c.parse_status = ParseStatus::Parsed;
    c.formula_text = chosen->raw;
    if (c.abbreviation.empty()) c.abbreviation = chosen->lhs;
    if (well_formed > 1)
      c.warnings.push_back(std::to_string(well_formed) + " well-formed formula lines; using line " +
                           std::to_string(chosen->line));
  } else {
    c.parse_status = ParseStatus::Unparsable;
    if (!found.empty()) {
      c.formula_text = found.front().raw;
      if (c.abbreviation.empty()) c.abbreviation = found.front().lhs;
      c.warnings.push_back("formula on line " + std::to_string(found.front().line) + " does not parse");
    } else {
      c.warnings.push_back("no formula line found");
    }
  }
  if (c.name.empty()) c.name = c.abbreviation;
  return c;
}

// ---- session --------------------------------------------------------------

struct MineOptions {
  std::vector<std::string> signals = canonical_signal_ids();
  std::size_t sample_rows = 10;
  std::uint64_t seed = 0;
  std::string query = std::string(kDefaultQuery);
  std::string instructions = std::string(kDefaultInstructions);
  CompletionParams params;
};

struct MineSession {
  PromptBundle bundle;
  std::string definitions;
  Completion response;
  MinedCandidate candidate;
};

/// Runs both prompting steps through `transport`.
inline MineSession mine_session(const Panel& panel, Transport& transport, const MineOptions& opt,
                                const AliasTable& aliases = AliasTable{}) {
  MineSession s;
  s.bundle.metadata.seed = opt.seed;
  s.bundle.metadata.sample_row_count = opt.sample_rows;
  s.bundle.metadata.signals = opt.signals;
  s.bundle.step1_prompt = build_definitions_prompt(opt.signals);
  s.definitions = transport.complete(s.bundle.step1_prompt, opt.params).text;
  s.bundle.step2_prompt = build_generation_prompt(s.definitions, sample_rows(panel, opt.sample_rows, opt.seed),
                                                  opt.query, opt.instructions);
  s.response = transport.complete(s.bundle.step2_prompt, opt.params);
  s.bundle.metadata.timestamp = s.response.recorded_at;
  s.candidate = parse_llm_response(s.response.text, aliases);
  return s;
}

// ---- registry ---------------------------------------------------------------

/// One JSON object per line.
inline nlohmann::json registry_record(const MinedCandidate& c, const std::string& prompt_hash) {
  nlohmann::json j = {{"name", c.name},
                      {"abbreviation", c.abbreviation},
                      {"formula_text", c.formula_text},
                      {"formula", c.expr ? render_alpha(*c.expr) : std::string()},
                      {"status", std::string(to_string(c.parse_status))},
                      {"prompt_hash", prompt_hash},
                      {"warnings", c.warnings}};
  return j;
}

inline std::vector<nlohmann::json> read_registry(const std::filesystem::path& path) {
  std::vector<nlohmann::json> out;
  if (!std::filesystem::exists(path)) return out;
  for (const auto& line : text::read_lines(path.string())) {
    if (text::is_blank(line.content)) continue;
    try {
      out.push_back(nlohmann::json::parse(line.content));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line.number) + ": " + e.what());
    }
  }
  return out;
}

/// Appends the candidate. With `dedup`, a record with the same abbreviation
/// and formula already present is left alone. Returns whether a line was
/// written.
inline bool append_to_registry(const std::filesystem::path& path, const MinedCandidate& c,
                               const std::string& prompt_hash, bool dedup) {
  const auto rec = registry_record(c, prompt_hash);
  if (dedup)
    for (const auto& r : read_registry(path))
      if (r.value("abbreviation", "") == rec["abbreviation"] && r.value("formula", "") == rec["formula"] &&
          r.value("formula_text", "") == rec["formula_text"])
        return false;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw DataError("cannot append to registry '" + path.string() + "'");
  out << rec.dump() << "\n";
  return true;
}

/// Parsed registry entries as candidate definitions (later duplicates of an
/// abbreviation are ignored).
inline std::vector<AlphaDef> registry_alphas(const std::filesystem::path& path) {
  std::vector<AlphaDef> out;
  std::set<std::string> seen;
  for (const auto& r : read_registry(path)) {
    if (r.value("status", "") != "parsed") continue;
    const auto abbr = r.value("abbreviation", "");
    if (!seen.insert(abbr).second) continue;
    out.push_back({r.value("name", abbr), abbr, parse_alpha(r.value("formula", "")), Provenance::Mined});
  }
  return out;
}

}  // namespace alphalab

#endif  // ALPHALAB_MINER_HPP
