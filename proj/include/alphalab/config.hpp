#ifndef ALPHALAB_CONFIG_HPP
#define ALPHALAB_CONFIG_HPP

// Flat `key = value` run configuration. Relative paths resolve against the
// directory of the file (or the working directory for command-line values).

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "alphalab/alpha.hpp"
#include "alphalab/date.hpp"
#include "alphalab/error.hpp"
#include "alphalab/panel.hpp"
#include "alphalab/signals.hpp"
#include "alphalab/text.hpp"

namespace alphalab {

enum class TransportMode { Replay, Live };

struct RunConfig {
  using path = std::filesystem::path;

  // data
  std::vector<path> signal_files;
  path price_file;
  std::optional<path> alias_file;
  Horizon horizon = Horizon::ThreeMonth;
  std::optional<Date> date_from, date_to;

  // models
  std::vector<std::string> baseline = canonical_signal_ids();
  std::vector<std::string> builtin_candidates;          // abbreviations
  std::vector<std::pair<std::string, std::string>> formulas;  // abbreviation, text
  bool registry_candidates = false;

  // run
  std::optional<std::uint64_t> seed;
  std::size_t sample_rows = 10;
  std::size_t workers = 1;
  path out = "out";
  std::optional<path> cache;
  bool data_driven_scale = false;

  // mining
  TransportMode transport = TransportMode::Replay;
  std::optional<path> replay_dir;
  std::string endpoint;
  std::string api_key_env = "ALPHALAB_API_KEY";
  std::optional<path> session_log;
  std::optional<path> registry;
  bool dedup = true;
  std::string model = "gpt-4";
  double temperature = 0.7;
  int max_tokens = 4096;

  path cache_path() const { return cache ? *cache : out / "panel.bin"; }
  path registry_path() const { return registry ? *registry : out / "candidates.jsonl"; }
  path session_log_path() const { return session_log ? *session_log : out / "session"; }

  /// Sets one key from its text form. `base` anchors relative paths.
  void set(const std::string& key, const std::string& value, const path& base, const std::string& where) {
    auto fail = [&](const std::string& why) { throw ConfigError(where + ": " + key + ": " + why); };
    auto as_path = [&]() -> path {
      if (value.empty()) fail("empty path");
      const path p(value);
      return p.is_absolute() || base.empty() ? p : base / p;
    };
    auto as_uint = [&]() -> std::uint64_t {
      std::uint64_t v = 0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || p != value.data() + value.size()) fail("expected a non-negative integer, got '" + value + "'");
      return v;
    };
    auto as_bool = [&]() {
      if (value == "true" || value == "yes" || value == "1") return true;
      if (value == "false" || value == "no" || value == "0") return false;
      fail("expected true or false, got '" + value + "'");
      return false;
    };
    auto as_date = [&]() {
      auto d = Date::parse(value);
      if (!d) fail("expected YYYY-MM-DD, got '" + value + "'");
      return *d;
    };
    auto as_list = [&]() {
      std::vector<std::string> out;
      for (const auto& f : text::split(value, ','))
        if (!text::is_blank(f)) out.emplace_back(text::trim(f));
      return out;
    };

    static const std::set<std::string> secrets = {"api_key", "apikey", "key", "token", "secret",
                                                  "password", "credential", "credentials", "authorization"};
    if (secrets.count(key))
      fail("credentials are never read from the config; export them and name the variable in api_key_env");

    if (key.rfind("formula.", 0) == 0) {
      const auto abbr = key.substr(8);
      if (abbr.empty()) fail("missing abbreviation after 'formula.'");
      try {
        parse_alpha(value);
      } catch (const Error& e) {
        fail(e.what());
      }
      formulas.erase(std::remove_if(formulas.begin(), formulas.end(), [&](const auto& f) { return f.first == abbr; }),
                     formulas.end());
      formulas.emplace_back(abbr, value);
    } else if (key == "signals") {
      signal_files.clear();
      for (const auto& p : as_list()) signal_files.push_back(p.front() == '/' || base.empty() ? path(p) : base / p);
      if (signal_files.empty()) fail("no files listed");
    } else if (key == "prices") {
      price_file = as_path();
    } else if (key == "aliases") {
      alias_file = as_path();
    } else if (key == "horizon") {
      try {
        horizon = parse_horizon(value);
      } catch (const Error& e) {
        fail(e.what());
      }
    } else if (key == "date_from") {
      date_from = as_date();
    } else if (key == "date_to") {
      date_to = as_date();
    } else if (key == "baseline") {
      baseline = as_list();
      if (baseline.empty()) fail("empty baseline");
      for (const auto& s : baseline)
        if (!is_canonical_signal(s)) fail("'" + s + "' is not a canonical signal id");
    } else if (key == "candidates") {
      builtin_candidates.clear();
      std::set<std::string> known;
      for (const auto& d : builtin_alphas()) known.insert(d.abbreviation);
      for (const auto& c : as_list()) {
        if (c == "none") continue;
        if (c == "builtin") {
          for (const auto& d : builtin_alphas()) builtin_candidates.push_back(d.abbreviation);
          continue;
        }
        if (!known.count(c)) fail("'" + c + "' is not a builtin alpha (use formula." + c + " = ... for your own)");
        builtin_candidates.push_back(c);
      }
    } else if (key == "registry_candidates") {
      registry_candidates = as_bool();
    } else if (key == "seed") {
      seed = as_uint();
    } else if (key == "sample_rows") {
      sample_rows = static_cast<std::size_t>(as_uint());
      if (sample_rows == 0) fail("must be positive");
    } else if (key == "workers") {
      workers = static_cast<std::size_t>(as_uint());
      if (workers == 0) fail("must be positive");
    } else if (key == "out") {
      out = as_path();
    } else if (key == "cache") {
      cache = as_path();
    } else if (key == "heatmap_scale") {
      if (value == "fixed") data_driven_scale = false;
      else if (value == "data") data_driven_scale = true;
      else fail("expected fixed or data");
    } else if (key == "transport") {
      if (value == "replay") transport = TransportMode::Replay;
      else if (value == "live") transport = TransportMode::Live;
      else fail("expected replay or live");
    } else if (key == "replay_dir") {
      replay_dir = as_path();
    } else if (key == "endpoint") {
      endpoint = value;
    } else if (key == "api_key_env") {
      if (value.empty()) fail("empty variable name");
      api_key_env = value;
    } else if (key == "session_log") {
      session_log = as_path();
    } else if (key == "registry") {
      registry = as_path();
    } else if (key == "dedup") {
      dedup = as_bool();
    } else if (key == "model") {
      if (value.empty()) fail("empty model id");
      model = value;
    } else if (key == "temperature") {
      auto t = text::parse_real(value);
      if (!t || *t < 0.0 || *t > 2.0) fail("expected a number in [0, 2]");
      temperature = *t;
    } else if (key == "max_tokens") {
      max_tokens = static_cast<int>(as_uint());
      if (max_tokens <= 0) fail("must be positive");
    } else {
      fail("unknown key");
    }
  }

  static RunConfig from_text(std::string_view content, const path& base, const std::string& origin) {
    RunConfig c;
    for (const auto& kv : text::parse_key_values(content, origin))
      c.set(kv.key, kv.value, base, origin + ":" + std::to_string(kv.line));
    return c;
  }

  static RunConfig from_file(const path& file) {
    if (!std::filesystem::exists(file)) throw ConfigError("config file '" + file.string() + "' not found");
    return from_text(text::read_file(file.string()), file.parent_path(), file.string());
  }

  /// Invariants that hold whatever the command.
  void validate() const {
    if (date_from && date_to && *date_to < *date_from)
      throw ConfigError("date range is empty: date_to " + date_to->iso() + " precedes date_from " + date_from->iso());
  }

  void require_inputs() const {
    if (signal_files.empty()) throw ConfigError("signals: no signal files configured");
    if (price_file.empty()) throw ConfigError("prices: no price file configured");
  }

  void require_mining() const {
    if (!seed) throw ConfigError("seed: required when sampling rows for a prompt");
    if (transport == TransportMode::Replay && !replay_dir) throw ConfigError("replay_dir: required in replay mode");
    if (transport == TransportMode::Live && endpoint.empty()) throw ConfigError("endpoint: required in live mode");
  }

  AliasTable aliases() const { return alias_file ? AliasTable::from_file(alias_file->string()) : AliasTable{}; }
};

}  // namespace alphalab

#endif  // ALPHALAB_CONFIG_HPP
