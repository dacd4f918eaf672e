#ifndef ALPHALAB_REPORT_HPP
#define ALPHALAB_REPORT_HPP

// Static SVG figures with CSV sidecars, and the markdown run summary.
// Output bytes depend only on the input values.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alphalab/error.hpp"
#include "alphalab/fmb.hpp"
#include "alphalab/metrics.hpp"
#include "alphalab/text.hpp"

namespace alphalab {

struct Rgb {
  int r, g, b;
  std::string hex() const {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
  }
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string num(double v, int prec = 2) { return text::format_fixed(v, prec); }

inline void write_pair(const std::filesystem::path& svg_path, const std::string& svg, const std::string& csv) {
  if (svg_path.has_parent_path()) std::filesystem::create_directories(svg_path.parent_path());
  text::write_file(svg_path.string(), svg);
  auto csv_path = svg_path;
  csv_path.replace_extension(".csv");
  text::write_file(csv_path.string(), csv);
}

}  // namespace detail

// ---- heatmap ----------------------------------------------------------------

/// Blue (low) through near-white to red (high).
inline constexpr std::array<Rgb, 5> kDiverging = {
    Rgb{33, 102, 172}, Rgb{146, 197, 222}, Rgb{247, 247, 247}, Rgb{244, 165, 130}, Rgb{178, 24, 43}};
inline constexpr Rgb kMissingColor{204, 204, 204};

/// Colour of `v` on the scale [lo, hi]; values outside are clamped.
inline Rgb diverging_color(double v, double lo, double hi) {
  if (std::isnan(v)) return kMissingColor;
  const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0) * static_cast<double>(kDiverging.size() - 1);
  const auto k = std::min(static_cast<std::size_t>(t), kDiverging.size() - 2);
  const double f = t - static_cast<double>(k);
  auto mix = [&](int a, int b) { return static_cast<int>(std::lround(a + f * (b - a))); };
  const auto &a = kDiverging[k], &b = kDiverging[k + 1];
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

struct HeatmapSpec {
  std::string title;
  std::vector<std::string> labels;
  Eigen::MatrixXd matrix;
  /// Scale symmetric around 0 from the largest off-diagonal |entry|
  /// instead of [-1, 1].
  bool data_driven_scale = false;
  int precision = 2;

  static HeatmapSpec from_corr(const CorrReport& r, std::string title = {}) {
    return {std::move(title), r.labels, r.average, false, 2};
  }

  std::pair<double, double> scale() const {
    if (!data_driven_scale) return {-1.0, 1.0};
    double m = 0.0;
    for (Eigen::Index a = 0; a < matrix.rows(); ++a)
      for (Eigen::Index b = 0; b < matrix.cols(); ++b)
        if (a != b && std::isfinite(matrix(a, b))) m = std::max(m, std::abs(matrix(a, b)));
    if (m == 0.0) m = 1.0;
    return {-m, m};
  }

  void validate() const {
    const auto k = static_cast<Eigen::Index>(labels.size());
    if (k == 0 || matrix.rows() != k || matrix.cols() != k)
      throw DataError("heatmap: matrix must be square and match its labels");
    if (precision < 0 || precision > 12) throw ConfigError("heatmap: precision out of range");
  }
};

inline std::string heatmap_csv(const HeatmapSpec& s) {
  s.validate();
  std::string out = "row_label";
  for (const auto& l : s.labels) out += "," + text::csv_escape(l);
  out += "\n";
  for (std::size_t a = 0; a < s.labels.size(); ++a) {
    out += text::csv_escape(s.labels[a]);
    for (std::size_t b = 0; b < s.labels.size(); ++b) {
      const double v = s.matrix(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      out += "," + (std::isnan(v) ? std::string() : text::format_real(v));
    }
    out += "\n";
  }
  return out;
}

/// Inverse of heatmap_csv; empty cells become NaN.
inline HeatmapSpec heatmap_from_csv(std::string_view csv) {
  const auto lines = text::split(csv, '\n');
  if (lines.empty()) throw DataError("heatmap csv: empty");
  const auto head = text::split_csv(lines[0]);
  if (head.empty() || head[0] != "row_label") throw SchemaError(head.empty() ? "" : head[0], "heatmap csv: bad header");
  HeatmapSpec s;
  s.labels.assign(head.begin() + 1, head.end());
  const auto k = static_cast<Eigen::Index>(s.labels.size());
  s.matrix.resize(k, k);
  Eigen::Index row = 0;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    if (text::is_blank(lines[l])) continue;
    const auto f = text::split_csv(lines[l]);
    if (row >= k || static_cast<Eigen::Index>(f.size()) != k + 1 || f[0] != s.labels[static_cast<std::size_t>(row)])
      throw DataError("heatmap csv: malformed row " + std::to_string(l + 1));
    for (Eigen::Index b = 0; b < k; ++b)
      s.matrix(row, b) = text::parse_real(f[static_cast<std::size_t>(b) + 1]).value_or(std::numeric_limits<double>::quiet_NaN());
    ++row;
  }
  if (row != k) throw DataError("heatmap csv: expected " + std::to_string(k) + " rows");
  return s;
}

inline std::string heatmap_svg(const HeatmapSpec& s) {
  s.validate();
  const auto [lo, hi] = s.scale();
  const int k = static_cast<int>(s.labels.size());
  const int cell = 56;
  std::size_t longest = 1;
  for (const auto& l : s.labels) longest = std::max(longest, l.size());
  const int left = 16 + 8 * static_cast<int>(longest);
  const int top = 40 + 6 * static_cast<int>(longest);
  const int bar_x = left + k * cell + 24, bar_w = 16, bar_h = k * cell;
  const int width = bar_x + bar_w + 56, height = top + k * cell + 24;

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
       std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
       "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  if (!s.title.empty())
    o += "<text x=\"" + std::to_string(width / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::xml_escape(s.title) + "</text>\n";
  for (int a = 0; a < k; ++a) {
    const int y = top + a * cell;
    o += "<text x=\"" + std::to_string(left - 6) + "\" y=\"" + std::to_string(y + cell / 2 + 4) +
         "\" text-anchor=\"end\">" + detail::xml_escape(s.labels[static_cast<std::size_t>(a)]) + "</text>\n";
    const int x = left + a * cell + cell / 2;
    o += "<text x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(top - 6) + "\" transform=\"rotate(-45 " +
         std::to_string(x) + " " + std::to_string(top - 6) + ")\">" +
         detail::xml_escape(s.labels[static_cast<std::size_t>(a)]) + "</text>\n";
  }
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      const double v = s.matrix(a, b);
      const auto c = diverging_color(v, lo, hi);
      const int x = left + b * cell, y = top + a * cell;
      o += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
           std::to_string(cell) + "\" height=\"" + std::to_string(cell) + "\" fill=\"" + c.hex() +
           "\" stroke=\"#ffffff\"/>\n";
      const double t = std::isnan(v) ? 0.5 : std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
      const char* ink = std::abs(t - 0.5) > 0.35 ? "#ffffff" : "#000000";
      o += "<text class=\"value\" x=\"" + std::to_string(x + cell / 2) + "\" y=\"" + std::to_string(y + cell / 2 + 4) +
           "\" text-anchor=\"middle\" fill=\"" + ink + "\">" +
           (std::isnan(v) ? std::string("n/a") : detail::num(v, s.precision)) + "</text>\n";
    }
  // colour bar, top = hi
  const int steps = 32;
  for (int i = 0; i < steps; ++i) {
    const double v = hi - (hi - lo) * (i + 0.5) / steps;
    o += "<rect x=\"" + std::to_string(bar_x) + "\" y=\"" + text::format_fixed(top + bar_h * double(i) / steps, 2) +
         "\" width=\"" + std::to_string(bar_w) + "\" height=\"" + text::format_fixed(bar_h / double(steps) + 0.5, 2) +
         "\" fill=\"" + diverging_color(v, lo, hi).hex() + "\"/>\n";
  }
  for (const auto& [v, y] : {std::pair{hi, top}, std::pair{0.5 * (lo + hi), top + bar_h / 2}, std::pair{lo, top + bar_h}})
    o += "<text class=\"scale\" x=\"" + std::to_string(bar_x + bar_w + 4) + "\" y=\"" + std::to_string(y + 4) + "\">" +
         detail::num(v, s.precision) + "</text>\n";
  o += "</svg>\n";
  return o;
}

struct EmittedFiles {
  std::filesystem::path svg, csv;
};

/// Writes `svg_path` and the CSV sibling (same stem, .csv).
inline EmittedFiles emit_heatmap(const HeatmapSpec& spec, const std::filesystem::path& svg_path) {
  detail::write_pair(svg_path, heatmap_svg(spec), heatmap_csv(spec));
  auto csv = svg_path;
  return {svg_path, csv.replace_extension(".csv")};
}

// ---- boxplot ----------------------------------------------------------------

inline constexpr const char* kMedianColor = "#ff7f0e";

struct BoxplotSpec {
  struct Entry {
    std::string name;
    BoxStats stats;
  };
  std::string title;
  std::string y_label = "adjusted R²";
  std::vector<Entry> entries;  // drawn left to right

  /// Successful candidate models in order, then the baseline.
  static BoxplotSpec from_comparison(const FmbComparison& cmp, std::string title = {}) {
    BoxplotSpec s;
    s.title = std::move(title);
    for (const auto& c : cmp.candidates)
      if (c.ok) s.entries.push_back({c.name, *c.summary});
    if (cmp.baseline.ok) s.entries.push_back({cmp.baseline.name, *cmp.baseline.summary});
    return s;
  }

  void validate() const {
    if (entries.empty()) throw DataError("boxplot: no models to draw");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      const auto& b = e.stats;
      for (double v : {b.median, b.q1, b.q3, b.whisker_lo, b.whisker_hi})
        if (!std::isfinite(v)) throw DataError("boxplot: non-finite statistic for " + e.name);
      if (!(b.q1 <= b.median && b.median <= b.q3))
        throw DataError("boxplot: median outside [q1, q3] for " + e.name);
      if (!(b.whisker_lo <= b.q1 && b.q3 <= b.whisker_hi))
        throw DataError("boxplot: whiskers inside the box for " + e.name);
      if (e.name == kBaselineModel && i + 1 != entries.size())
        throw DataError("boxplot: the baseline must be drawn last");
    }
  }
};

inline std::string boxplot_csv(const BoxplotSpec& s) {
  s.validate();
  std::string out = "model,n,median,q1,q3,whisker_lo,whisker_hi,outliers\n";
  for (const auto& e : s.entries) {
    const auto& b = e.stats;
    std::string outl;
    for (std::size_t i = 0; i < b.outliers.size(); ++i) outl += (i ? ";" : "") + text::format_real(b.outliers[i]);
    out += text::csv_escape(e.name) + "," + std::to_string(b.n) + "," + text::format_real(b.median) + "," +
           text::format_real(b.q1) + "," + text::format_real(b.q3) + "," + text::format_real(b.whisker_lo) + "," +
           text::format_real(b.whisker_hi) + "," + outl + "\n";
  }
  return out;
}

namespace detail {

/// Round-number axis ticks covering [lo, hi].
inline std::vector<double> nice_ticks(double lo, double hi, int target = 5) {
  const double span = hi - lo;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> out;
  for (auto k = static_cast<long long>(std::ceil(lo / step)); k * step <= hi + 1e-9 * step; ++k) {
    // 12 significant digits keeps 3 * 0.2 printing as 0.6
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", static_cast<double>(k) * step);
    out.push_back(k == 0 ? 0.0 : std::strtod(buf, nullptr));
  }
  return out;
}

}  // namespace detail

inline std::string boxplot_svg(const BoxplotSpec& s) {
  s.validate();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& e : s.entries) {
    lo = std::min(lo, e.stats.whisker_lo);
    hi = std::max(hi, e.stats.whisker_hi);
    for (double v : e.stats.outliers) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi - lo < 1e-9) {
    lo -= 0.05;
    hi += 0.05;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const int left = 64, top = 40, plot_h = 320, slot = 80, box_w = 40;
  const int n = static_cast<int>(s.entries.size());
  const int width = left + n * slot + 24, height = top + plot_h + 56;
  auto Y = [&](double v) { return text::format_fixed(top + plot_h * (hi - v) / (hi - lo), 2); };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
       std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
       "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  if (!s.title.empty())
    o += "<text x=\"" + std::to_string(width / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::xml_escape(s.title) + "</text>\n";
  // axis
  o += "<line x1=\"" + std::to_string(left) + "\" y1=\"" + std::to_string(top) + "\" x2=\"" + std::to_string(left) +
       "\" y2=\"" + std::to_string(top + plot_h) + "\" stroke=\"#000000\"/>\n";
  for (double t : detail::nice_ticks(lo, hi)) {
    o += "<line x1=\"" + std::to_string(left - 4) + "\" y1=\"" + Y(t) + "\" x2=\"" + std::to_string(left) +
         "\" y2=\"" + Y(t) + "\" stroke=\"#000000\"/>\n";
    o += "<text class=\"tick\" x=\"" + std::to_string(left - 6) + "\" y=\"" + Y(t) + "\" dy=\"4\" text-anchor=\"end\">" +
         text::format_real(t) + "</text>\n";
  }
  o += "<text x=\"14\" y=\"" + std::to_string(top + plot_h / 2) + "\" transform=\"rotate(-90 14 " +
       std::to_string(top + plot_h / 2) + ")\" text-anchor=\"middle\">" + detail::xml_escape(s.y_label) + "</text>\n";

  for (int i = 0; i < n; ++i) {
    const auto& e = s.entries[static_cast<std::size_t>(i)];
    const auto& b = e.stats;
    const int cx = left + i * slot + slot / 2, x0 = cx - box_w / 2, x1 = cx + box_w / 2;
    const auto sx0 = std::to_string(x0), sx1 = std::to_string(x1), scx = std::to_string(cx);
    o += "<g class=\"box\"><title>" + detail::xml_escape(e.name) + ": median " + text::format_real(b.median) +
         ", q1 " + text::format_real(b.q1) + ", q3 " + text::format_real(b.q3) + ", whiskers " +
         text::format_real(b.whisker_lo) + " to " + text::format_real(b.whisker_hi) + "</title>\n";
    o += "<line x1=\"" + scx + "\" y1=\"" + Y(b.whisker_hi) + "\" x2=\"" + scx + "\" y2=\"" + Y(b.q3) +
         "\" stroke=\"#000000\"/>\n";
    o += "<line x1=\"" + scx + "\" y1=\"" + Y(b.q1) + "\" x2=\"" + scx + "\" y2=\"" + Y(b.whisker_lo) +
         "\" stroke=\"#000000\"/>\n";
    for (double w : {b.whisker_lo, b.whisker_hi})
      o += "<line x1=\"" + std::to_string(cx - box_w / 4) + "\" y1=\"" + Y(w) + "\" x2=\"" +
           std::to_string(cx + box_w / 4) + "\" y2=\"" + Y(w) + "\" stroke=\"#000000\"/>\n";
    o += "<polygon points=\"" + sx0 + "," + Y(b.q3) + " " + sx1 + "," + Y(b.q3) + " " + sx1 + "," + Y(b.q1) + " " +
         sx0 + "," + Y(b.q1) + "\" fill=\"#dbe9f6\" stroke=\"#1f3b73\"/>\n";
    o += "<line class=\"median\" x1=\"" + sx0 + "\" y1=\"" + Y(b.median) + "\" x2=\"" + sx1 + "\" y2=\"" +
         Y(b.median) + "\" stroke=\"" + kMedianColor + "\" stroke-width=\"2\"/>\n";
    for (double v : b.outliers)
      o += "<circle cx=\"" + scx + "\" cy=\"" + Y(v) + "\" r=\"3\" fill=\"none\" stroke=\"#000000\"/>\n";
    o += "</g>\n";
    o += "<text x=\"" + scx + "\" y=\"" + std::to_string(top + plot_h + 18) + "\" text-anchor=\"middle\">" +
         detail::xml_escape(e.name) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

inline EmittedFiles emit_boxplot(const BoxplotSpec& spec, const std::filesystem::path& svg_path) {
  detail::write_pair(svg_path, boxplot_svg(spec), boxplot_csv(spec));
  auto csv = svg_path;
  return {svg_path, csv.replace_extension(".csv")};
}

// ---- markdown summary ---------------------------------------------------------

/// Per-column average correlation with the return, then per-model median
/// adjusted R² with the change against the baseline.
inline std::string summary_markdown(const CorrReport& corr, const FmbComparison& cmp) {
  std::string o = "# Run summary\n\n";
  o += "## Average cross-sectional Spearman correlation with the forward return\n\n";
  const auto ret = corr.index_of(kReturnLabel);
  o += "Averaged over " + std::to_string(corr.per_date.size()) + " dates";
  if (!corr.skipped.empty()) o += " (" + std::to_string(corr.skipped.size()) + " skipped)";
  o += ".\n\n| Column | rho with return | Dates |\n|---|---:|---:|\n";
  if (ret)
    for (std::size_t a = 0; a < corr.labels.size(); ++a) {
      if (a == *ret) continue;
      const auto i = static_cast<Eigen::Index>(a), j = static_cast<Eigen::Index>(*ret);
      const double v = corr.average(i, j);
      o += "| " + corr.labels[a] + " | " + (std::isnan(v) ? std::string("n/a") : text::format_fixed(v, 4)) + " | " +
           std::to_string(corr.pair_count.size() ? corr.pair_count(i, j) : 0) + " |\n";
    }

  o += "\n## Fama-MacBeth step-2 adjusted R²\n\n";
  o += "| Model | Status | Dates | Median | Q1 | Q3 | Median minus baseline |\n|---|---|---:|---:|---:|---:|---:|\n";
  const double base = cmp.baseline.ok ? cmp.baseline.summary->median : std::numeric_limits<double>::quiet_NaN();
  auto row = [&](const ModelOutcome& m, bool is_base) {
    if (!m.ok) {
      o += "| " + m.name + " | failed | | | | | |\n";
      return;
    }
    const auto& b = *m.summary;
    o += "| " + m.name + " | ok | " + std::to_string(b.n) + " | " + text::format_fixed(b.median, 4) + " | " +
         text::format_fixed(b.q1, 4) + " | " + text::format_fixed(b.q3, 4) + " | ";
    if (!is_base) {
      const double d = b.median - base;
      o += (d > 0 ? "+" : "") + text::format_fixed(d, 4);
    }
    o += " |\n";
  };
  for (const auto& c : cmp.candidates) row(c, false);
  row(cmp.baseline, true);

  std::vector<const ModelOutcome*> failed;
  for (const auto& c : cmp.candidates)
    if (!c.ok) failed.push_back(&c);
  if (!failed.empty()) {
    o += "\nFailed models:\n\n";
    for (const auto* m : failed) o += "- " + m->name + ": " + m->error + "\n";
  }
  if (cmp.baseline.ok) {
    std::size_t better = 0, ok = 0;
    for (const auto& c : cmp.candidates)
      if (c.ok) {
        ++ok;
        if (c.summary->median > base) ++better;
      }
    if (ok > 0)
      o += "\n" + std::to_string(better) + " of " + std::to_string(ok) +
           " candidate models have a higher median adjusted R² than the baseline.\n";
  }
  return o;
}

}  // namespace alphalab

#endif  // ALPHALAB_REPORT_HPP
