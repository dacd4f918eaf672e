#ifndef ALPHALAB_PANEL_HPP
#define ALPHALAB_PANEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "alphalab/alpha.hpp"
#include "alphalab/cross_section.hpp"
#include "alphalab/date.hpp"
#include "alphalab/error.hpp"
#include "alphalab/signals.hpp"
#include "alphalab/text.hpp"

namespace alphalab {

enum class Horizon { OneMonth, ThreeMonth };

inline std::string_view to_string(Horizon h) noexcept {
  return h == Horizon::OneMonth ? "1M" : "3M";
}

inline Horizon parse_horizon(std::string_view s) {
  if (s == "1M" || s == "OneMonth") return Horizon::OneMonth;
  if (s == "3M" || s == "ThreeMonth") return Horizon::ThreeMonth;
  throw ConfigError("unknown horizon '" + std::string(s) + "' (expected 1M or 3M)");
}

inline int horizon_months(Horizon h) noexcept { return h == Horizon::OneMonth ? 1 : 3; }

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// Companies x dates x signals, plus one forward-return column. Immutable
/// once built; missing entries are NaN internally and nullopt through the
/// accessors.
class Panel {
 public:
  /// `values` is indexed [company][date][signal], `fwd_returns`
  /// [company][date]. Companies are re-sorted lexicographically.
  static Panel from_dense(std::vector<Date> dates, std::vector<std::string> companies,
                          std::vector<std::string> signal_names, Horizon horizon,
                          const std::vector<double>& values,
                          const std::vector<double>& fwd_returns) {
    const auto n = companies.size(), t = dates.size(), m = signal_names.size();
    if (values.size() != n * t * m || fwd_returns.size() != n * t)
      throw DataError("panel arrays do not match the declared shape");
    for (std::size_t k = 1; k < t; ++k)
      if (!(dates[k - 1] < dates[k])) throw DataError("panel dates must be strictly increasing");
    for (const auto& s : signal_names)
      if (!is_canonical_signal(s)) throw UnknownSignalError(s);
    if (std::set<std::string>(signal_names.begin(), signal_names.end()).size() != m)
      throw DataError("duplicate signal name in panel");
    if (std::set<std::string>(companies.begin(), companies.end()).size() != n)
      throw DataError("duplicate company in panel");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return companies[a] < companies[b]; });

    Panel p;
    p.dates_ = std::move(dates);
    p.signal_names_ = std::move(signal_names);
    p.horizon_ = horizon;
    p.values_.resize(values.size());
    p.fwd_.resize(fwd_returns.size());
    for (std::size_t r = 0; r < n; ++r) {
      const auto src = order[r];
      p.companies_.push_back(companies[src]);
      for (std::size_t d = 0; d < t; ++d) {
        auto clean = [](double v) { return std::isfinite(v) ? v : kMissing; };
        p.fwd_[r * t + d] = clean(fwd_returns[src * t + d]);
        for (std::size_t s = 0; s < m; ++s)
          p.values_[(r * t + d) * m + s] = clean(values[(src * t + d) * m + s]);
      }
    }
    return p;
  }

  const std::vector<Date>& dates() const noexcept { return dates_; }
  const std::vector<std::string>& companies() const noexcept { return companies_; }
  const std::vector<std::string>& signal_names() const noexcept { return signal_names_; }
  Horizon horizon() const noexcept { return horizon_; }

  std::optional<std::size_t> date_index(const Date& d) const {
    auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
    if (it == dates_.end() || *it != d) return std::nullopt;
    return static_cast<std::size_t>(it - dates_.begin());
  }

  std::optional<std::size_t> signal_index(std::string_view id) const {
    for (std::size_t s = 0; s < signal_names_.size(); ++s)
      if (signal_names_[s] == id) return s;
    return std::nullopt;
  }

  std::optional<double> value(std::size_t company, std::size_t date, std::size_t signal) const {
    return present(values_[(company * dates_.size() + date) * signal_names_.size() + signal]);
  }

  std::optional<double> value(std::size_t company, std::size_t date, std::string_view id) const {
    auto s = signal_index(id);
    if (!s) return std::nullopt;
    return value(company, date, *s);
  }

  std::optional<double> fwd_return(std::size_t company, std::size_t date) const {
    return present(fwd_[company * dates_.size() + date]);
  }

  std::size_t missing_values() const {
    return static_cast<std::size_t>(
        std::count_if(values_.begin(), values_.end(), [](double v) { return std::isnan(v); }));
  }
  std::size_t missing_returns() const {
    return static_cast<std::size_t>(
        std::count_if(fwd_.begin(), fwd_.end(), [](double v) { return std::isnan(v); }));
  }

  /// Raw storage, for serialization.
  const std::vector<double>& raw_values() const noexcept { return values_; }
  const std::vector<double>& raw_returns() const noexcept { return fwd_; }

  friend bool operator==(const Panel& a, const Panel& b) {
    auto same = [](const std::vector<double>& x, const std::vector<double>& y) {
      return std::equal(x.begin(), x.end(), y.begin(), y.end(), [](double u, double v) {
        return (std::isnan(u) && std::isnan(v)) || u == v;
      });
    };
    return a.dates_ == b.dates_ && a.companies_ == b.companies_ &&
           a.signal_names_ == b.signal_names_ && a.horizon_ == b.horizon_ &&
           same(a.values_, b.values_) && same(a.fwd_, b.fwd_);
  }

 private:
  static std::optional<double> present(double v) {
    if (std::isnan(v)) return std::nullopt;
    return v;
  }

  std::vector<Date> dates_;
  std::vector<std::string> companies_;
  std::vector<std::string> signal_names_;
  Horizon horizon_ = Horizon::ThreeMonth;
  std::vector<double> values_;
  std::vector<double> fwd_;
};

/// Price observations are matched to a target date when they fall within
/// this many calendar days of it; the closest wins, ties go to the earlier.
inline constexpr int kPriceMatchDays = 7;

namespace detail {

struct PriceSeries {
  std::vector<std::pair<std::int64_t, double>> obs;  // (serial day, price)

  std::optional<double> near(std::int64_t day) const {
    auto it = std::lower_bound(obs.begin(), obs.end(), std::make_pair(day, -1e300));
    std::optional<std::pair<std::int64_t, double>> best;
    auto consider = [&](decltype(it) c) {
      if (c < obs.begin() || c >= obs.end()) return;
      const auto dist = c->first > day ? c->first - day : day - c->first;
      if (dist > kPriceMatchDays) return;
      if (!best) {
        best = *c;
        return;
      }
      const auto bdist = best->first > day ? best->first - day : day - best->first;
      if (dist < bdist || (dist == bdist && c->first < best->first)) best = *c;
    };
    if (it != obs.begin()) consider(it - 1);
    consider(it);
    if (!best) return std::nullopt;
    return best->second;
  }
};

inline std::string where(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

}  // namespace detail

/// Reads one or more signal CSVs (`ticker,date,<signal>...`) and one price CSV
/// (`ticker,date,adj_close`) and computes forward fractional returns over
/// `horizon`. Unparseable numeric cells become missing values.
inline Panel load_panel(const std::vector<std::string>& signal_paths, const std::string& price_path,
                        Horizon horizon, const AliasTable& aliases = AliasTable{}) {
  if (signal_paths.empty()) throw ConfigError("no signal files given");

  using Key = std::pair<std::string, Date>;
  std::map<Key, std::map<std::string, double>> rows;
  std::set<std::string> signal_set;

  for (const auto& path : signal_paths) {
    const auto lines = text::read_lines(path);
    if (lines.empty()) throw SchemaError("", path + ": missing header");
    const auto header = text::split_csv(lines.front().content);
    if (header.size() < 3) throw SchemaError("", path + ": expected ticker,date and at least one signal column");
    if (text::trim(header[0]) != "ticker")
      throw SchemaError(header[0], path + ": first column must be 'ticker', found '" + header[0] + "'");
    if (text::trim(header[1]) != "date")
      throw SchemaError(header[1], path + ": second column must be 'date', found '" + header[1] + "'");
    std::vector<std::string> cols;
    for (std::size_t c = 2; c < header.size(); ++c) {
      auto id = aliases.resolve(header[c]);
      if (!id) throw SchemaError(header[c], path + ": unknown signal column '" + header[c] + "'");
      if (std::find(cols.begin(), cols.end(), *id) != cols.end())
        throw SchemaError(header[c], path + ": duplicate signal column '" + header[c] + "'");
      cols.push_back(*id);
      signal_set.insert(*id);
    }
    for (std::size_t l = 1; l < lines.size(); ++l) {
      const auto& line = lines[l];
      if (text::is_blank(line.content)) continue;
      const auto fields = text::split_csv(line.content);
      if (fields.size() != header.size())
        throw DataError(detail::where(path, line.number) + ": expected " +
                        std::to_string(header.size()) + " fields, found " +
                        std::to_string(fields.size()));
      const auto ticker = std::string(text::trim(fields[0]));
      if (ticker.empty()) throw DataError(detail::where(path, line.number) + ": empty ticker");
      const auto date = Date::parse(text::trim(fields[1]));
      if (!date)
        throw DataError(detail::where(path, line.number) + ": invalid date '" + fields[1] + "'");
      auto [it, inserted] = rows.try_emplace({ticker, *date});
      if (!inserted)
        throw DataError(detail::where(path, line.number) + ": duplicate row for " + ticker + " " +
                        date->iso());
      for (std::size_t c = 0; c < cols.size(); ++c)
        if (auto v = text::parse_real(fields[c + 2])) it->second[cols[c]] = *v;
    }
  }

  std::map<std::string, detail::PriceSeries> prices;
  {
    const auto lines = text::read_lines(price_path);
    if (lines.empty()) throw SchemaError("", price_path + ": missing header");
    const auto header = text::split_csv(lines.front().content);
    static const char* expected[] = {"ticker", "date", "adj_close"};
    for (std::size_t c = 0; c < 3; ++c) {
      if (c >= header.size())
        throw SchemaError(expected[c], price_path + ": missing column '" + expected[c] + "'");
      if (text::trim(header[c]) != expected[c])
        throw SchemaError(header[c], price_path + ": expected column '" + expected[c] +
                                         "', found '" + header[c] + "'");
    }
    if (header.size() > 3)
      throw SchemaError(header[3], price_path + ": unexpected column '" + header[3] + "'");
    for (std::size_t l = 1; l < lines.size(); ++l) {
      const auto& line = lines[l];
      if (text::is_blank(line.content)) continue;
      const auto fields = text::split_csv(line.content);
      if (fields.size() != 3)
        throw DataError(detail::where(price_path, line.number) + ": expected 3 fields");
      const auto date = Date::parse(text::trim(fields[1]));
      if (!date)
        throw DataError(detail::where(price_path, line.number) + ": invalid date '" + fields[1] + "'");
      const auto px = text::parse_real(fields[2]);
      if (!px || *px <= 0.0) continue;
      prices[std::string(text::trim(fields[0]))].obs.emplace_back(date->serial(), *px);
    }
    for (auto& [_, series] : prices) std::sort(series.obs.begin(), series.obs.end());
  }

  std::set<Date> date_set;
  std::set<std::string> company_set;
  for (const auto& [key, _] : rows) {
    company_set.insert(key.first);
    date_set.insert(key.second);
  }
  if (date_set.empty()) throw EmptyPanelError("no usable dates in signal files");
  if (date_set.size() < 2 || company_set.size() < 2)
    throw EmptyPanelError("panel needs at least 2 dates and 2 companies, found " +
                          std::to_string(date_set.size()) + " and " +
                          std::to_string(company_set.size()));

  std::vector<std::string> signals(signal_set.begin(), signal_set.end());
  std::sort(signals.begin(), signals.end(), [](const std::string& a, const std::string& b) {
    return canonical_index(a) < canonical_index(b);
  });
  std::vector<Date> dates(date_set.begin(), date_set.end());
  std::vector<std::string> companies(company_set.begin(), company_set.end());
  const auto n = companies.size(), t = dates.size(), m = signals.size();

  std::vector<double> values(n * t * m, kMissing), fwd(n * t, kMissing);
  for (std::size_t i = 0; i < n; ++i) {
    auto series = prices.find(companies[i]);
    for (std::size_t d = 0; d < t; ++d) {
      if (auto row = rows.find({companies[i], dates[d]}); row != rows.end())
        for (std::size_t s = 0; s < m; ++s)
          if (auto v = row->second.find(signals[s]); v != row->second.end())
            values[(i * t + d) * m + s] = v->second;
      if (series == prices.end()) continue;
      const auto p0 = series->second.near(dates[d].serial());
      const auto p1 = series->second.near(dates[d].add_months(horizon_months(horizon)).serial());
      if (p0 && p1) fwd[i * t + d] = (*p1 - *p0) / *p0;
    }
  }
  return Panel::from_dense(std::move(dates), std::move(companies), std::move(signals), horizon,
                           values, fwd);
}

/// Complete-case block at `date`: companies (lexicographic) with a finite
/// value for every column and a finite forward return. Throws
/// InsufficientCrossSectionError when fewer than `min_companies` survive
/// (default: number of columns + 2).
inline CrossSection cross_section(const Panel& panel, const Date& date,
                                  const std::vector<Column>& columns,
                                  std::optional<std::size_t> min_companies = std::nullopt) {
  const auto d = panel.date_index(date);
  if (!d) throw DataError("date " + date.iso() + " is not in the panel");
  const std::size_t required = min_companies.value_or(columns.size() + 2);

  std::vector<std::string> labels;
  for (const auto& c : columns) {
    if (std::find(labels.begin(), labels.end(), c.label) != labels.end())
      throw ConfigError("duplicate column label '" + c.label + "'");
    labels.push_back(c.label);
    for (const auto& id : referenced_signals(c.expr))
      if (!panel.signal_index(id)) throw UnknownSignalError(id);
  }

  std::vector<std::string> kept;
  std::vector<std::vector<double>> rows;
  std::vector<double> rets;
  for (std::size_t i = 0; i < panel.companies().size(); ++i) {
    const auto r = panel.fwd_return(i, *d);
    if (!r) continue;
    std::vector<double> row;
    row.reserve(columns.size());
    for (const auto& c : columns) {
      auto v = evaluate(c.expr, [&](const std::string& id) { return panel.value(i, *d, id); });
      if (!v) break;
      row.push_back(*v);
    }
    if (row.size() != columns.size()) continue;
    kept.push_back(panel.companies()[i]);
    rows.push_back(std::move(row));
    rets.push_back(*r);
  }
  if (kept.size() < required) throw InsufficientCrossSectionError(kept.size(), required);

  CrossSection cs;
  cs.date = date;
  cs.companies = std::move(kept);
  cs.columns = std::move(labels);
  cs.signal_matrix.resize(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(columns.size()));
  cs.returns.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    cs.returns(static_cast<Eigen::Index>(i)) = rets[i];
    for (std::size_t j = 0; j < columns.size(); ++j)
      cs.signal_matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return cs;
}

/// (company, date) pairs with every panel signal and the forward return
/// present, ordered by date then company.
inline std::vector<std::pair<std::size_t, std::size_t>> complete_rows(const Panel& panel) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t d = 0; d < panel.dates().size(); ++d)
    for (std::size_t i = 0; i < panel.companies().size(); ++i) {
      if (!panel.fwd_return(i, d)) continue;
      bool ok = true;
      for (std::size_t s = 0; s < panel.signal_names().size() && ok; ++s)
        ok = panel.value(i, d, s).has_value();
      if (ok) out.emplace_back(i, d);
    }
  return out;
}

namespace detail {

// Unbiased draw in [0, bound) from a 64-bit engine; libstdc++/libc++
// distributions differ, this does not.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return x % bound;
}

}  // namespace detail

/// `k` distinct complete rows chosen with a seeded sampler, rendered as a
/// whitespace-aligned text table (ticker, date, all signals, return). Rows
/// appear in (date, ticker) order.
inline std::string sample_rows(const Panel& panel, std::size_t k, std::uint64_t seed) {
  auto pool = complete_rows(panel);
  if (k > pool.size())
    throw DataError("cannot sample " + std::to_string(k) + " rows: only " +
                    std::to_string(pool.size()) + " complete rows available");
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + detail::uniform_below(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
    return std::tie(a.second, a.first) < std::tie(b.second, b.first);
  });

  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{"ticker", "date"};
  for (const auto& s : panel.signal_names()) header.push_back(s);
  header.push_back("return");
  table.push_back(header);
  for (const auto& [i, d] : pool) {
    std::vector<std::string> row{panel.companies()[i], panel.dates()[d].iso()};
    for (std::size_t s = 0; s < panel.signal_names().size(); ++s)
      row.push_back(text::format_fixed(*panel.value(i, d, s), 4));
    row.push_back(text::format_fixed(*panel.fwd_return(i, d), 4));
    table.push_back(std::move(row));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : table)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (const auto& row : table) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      const auto pad = std::string(width[c] - row[c].size(), ' ');
      line += c < 2 ? row[c] + pad : pad + row[c];  // text left, numbers right
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace alphalab

#endif  // ALPHALAB_PANEL_HPP
