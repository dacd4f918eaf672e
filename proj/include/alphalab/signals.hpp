#ifndef ALPHALAB_SIGNALS_HPP
#define ALPHALAB_SIGNALS_HPP

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "alphalab/error.hpp"
#include "alphalab/text.hpp"

namespace alphalab {

struct SignalInfo {
  std::string_view id;
  std::string_view display;  // short notation used in financial text
  std::string_view long_name;
};

// The ten existing fundamentals, in canonical order.
inline constexpr std::array<SignalInfo, 10> kCanonicalSignals{{
    {"PE", "P/E", "Price/Earnings"},
    {"PB", "P/B", "Price/Book Value"},
    {"ROA", "ROA", "Return on Assets"},
    {"ROE", "ROE", "Return on Equity"},
    {"FCF", "FCF", "Free Cash Flow per Share"},
    {"PCF", "P/CF", "Price/Cash Flow"},
    {"EBITDA", "EV/EBITDA", "Enterprise Value/EBITDA"},
    {"GM", "GM", "Gross Margin"},
    {"NM", "NM", "Net Margin"},
    {"SPS", "SPS", "Sales per Share"},
}};

inline bool is_canonical_signal(std::string_view id) noexcept {
  return std::any_of(kCanonicalSignals.begin(), kCanonicalSignals.end(),
                     [&](const SignalInfo& s) { return s.id == id; });
}

/// Position in canonical order, or kCanonicalSignals.size() if unknown.
inline std::size_t canonical_index(std::string_view id) noexcept {
  for (std::size_t i = 0; i < kCanonicalSignals.size(); ++i)
    if (kCanonicalSignals[i].id == id) return i;
  return kCanonicalSignals.size();
}

inline const SignalInfo& signal_info(std::string_view id) {
  const auto i = canonical_index(id);
  if (i == kCanonicalSignals.size()) throw UnknownSignalError(std::string(id));
  return kCanonicalSignals[i];
}

inline std::vector<std::string> canonical_signal_ids() {
  std::vector<std::string> ids;
  for (const auto& s : kCanonicalSignals) ids.emplace_back(s.id);
  return ids;
}

/// Display-name to canonical-id mapping. Canonical ids always resolve to
/// themselves; the default table also knows each signal's display and long
/// names.
class AliasTable {
 public:
  AliasTable() {
    for (const auto& s : kCanonicalSignals) {
      aliases_.emplace(std::string(s.display), std::string(s.id));
      aliases_.emplace(std::string(s.long_name), std::string(s.id));
    }
    aliases_.emplace("EBITDA", "EBITDA");
  }

  /// Reads `display_name = canonical_id` lines on top of the defaults.
  static AliasTable from_text(std::string_view content, const std::string& origin) {
    AliasTable table;
    for (const auto& kv : text::parse_key_values(content, origin)) {
      if (!is_canonical_signal(kv.value))
        throw ConfigError(origin + ":" + std::to_string(kv.line) +
                          ": '" + kv.value + "' is not a canonical signal id");
      table.add(kv.key, kv.value);
    }
    return table;
  }

  static AliasTable from_file(const std::string& path) {
    return from_text(text::read_file(path), path);
  }

  void add(std::string display, std::string canonical) {
    aliases_[std::move(display)] = std::move(canonical);
  }

  std::optional<std::string> resolve(std::string_view name) const {
    const auto key = std::string(text::trim(name));
    if (is_canonical_signal(key)) return key;
    if (auto it = aliases_.find(key); it != aliases_.end()) return it->second;
    return std::nullopt;
  }

  /// All entries, longest display name first (so "EV/EBITDA" is matched
  /// before "EBITDA").
  std::vector<std::pair<std::string, std::string>> by_length() const {
    std::vector<std::pair<std::string, std::string>> out(aliases_.begin(), aliases_.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return a.first.size() > b.first.size();
    });
    return out;
  }

 private:
  std::map<std::string, std::string> aliases_;
};

}  // namespace alphalab

#endif  // ALPHALAB_SIGNALS_HPP
