#ifndef ALPHALAB_METRICS_HPP
#define ALPHALAB_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "alphalab/alpha.hpp"
#include "alphalab/date.hpp"
#include "alphalab/error.hpp"
#include "alphalab/panel.hpp"
#include "alphalab/parallel.hpp"
#include "alphalab/text.hpp"

namespace alphalab {

namespace detail {

inline void require_finite(std::span<const double> x, const char* what) {
  for (double v : x)
    if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite input");
}

inline double mean(std::span<const double> x) {
  // fixed left-to-right order
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double pearson_unchecked(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelationError("correlation undefined: zero rank variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace detail

/// 1-based ranks; tied values share the mean of their positions.
inline std::vector<double> ranks(std::span<const double> x) {
  if (x.empty()) throw NumericError("ranks: empty input");
  detail::require_finite(x, "ranks");
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) r[order[k]] = avg;
    i = j;
  }
  return r;
}

/// Pearson correlation of the ranks.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw NumericError("spearman: length mismatch");
  if (x.size() < 3) throw NumericError("spearman: need at least 3 observations");
  const auto rx = ranks(x), ry = ranks(y);
  return detail::pearson_unchecked(rx, ry);
}

/// (x - mean) / sample standard deviation.
inline std::vector<double> zscore(std::span<const double> x) {
  if (x.size() < 2) throw NumericError("zscore: need at least 2 observations");
  detail::require_finite(x, "zscore");
  const double mu = detail::mean(x);
  double ss = 0.0, scale = 0.0;
  for (double v : x) {
    ss += (v - mu) * (v - mu);
    scale = std::max(scale, std::abs(v));
  }
  const double sd = std::sqrt(ss / static_cast<double>(x.size() - 1));
  // rounding in the mean leaves ~eps*|x| residue on a constant column
  if (sd <= 64.0 * std::numeric_limits<double>::epsilon() * scale || sd == 0.0)
    throw DegenerateColumnError("zscore: zero standard deviation");
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mu) / sd;
  return z;
}

struct OlsFit {
  Eigen::VectorXd coefficients;  // intercept first
  Eigen::VectorXd residuals;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  std::size_t n_obs = 0;
  std::size_t n_regressors = 0;
};

/// Designs with condition number above this are rejected as singular.
inline constexpr double kMaxConditionNumber = 1e12;

inline double adjusted_r2(double r2, std::size_t n_obs, std::size_t n_regressors) {
  return 1.0 - (1.0 - r2) * static_cast<double>(n_obs - 1) /
                   static_cast<double>(n_obs - n_regressors - 1);
}

/// Least squares of y on [1, X] via Householder QR.
inline OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = static_cast<std::size_t>(X.cols());
  if (static_cast<std::size_t>(y.size()) != n) throw NumericError("ols: row count mismatch");
  if (n < p + 2)
    throw NumericError("ols: " + std::to_string(n) + " observations for " + std::to_string(p) +
                       " regressors, need at least " + std::to_string(p + 2));
  if (!X.allFinite() || !y.allFinite()) throw NumericError("ols: non-finite input");

  Eigen::MatrixXd A(X.rows(), X.cols() + 1);
  A.col(0).setOnes();
  A.rightCols(X.cols()) = X;

  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues();
  const double smax = sv(0), smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || smax / smin > kMaxConditionNumber)
    throw SingularDesignError("ols: rank-deficient design (condition number " +
                              text::format_real(smin > 0.0 ? smax / smin : INFINITY) + ")");

  OlsFit fit;
  fit.coefficients = A.householderQr().solve(y);
  fit.residuals = y - A * fit.coefficients;
  fit.n_obs = n;
  fit.n_regressors = p;
  const double ybar = y.mean();
  const double sst = (y.array() - ybar).square().sum();
  if (!(sst > 0.0)) throw NumericError("ols: response has zero variance");
  const double ssr = fit.residuals.squaredNorm();
  fit.r2 = std::clamp(1.0 - ssr / sst, 0.0, 1.0);
  fit.adj_r2 = adjusted_r2(fit.r2, n, p);
  return fit;
}

/// Per-date Spearman matrices over `labels` and their element-wise average.
/// Undefined entries (a constant column at that date) are NaN and left out
/// of that entry's average; `pair_count` holds how many dates contributed.
struct CorrReport {
  struct DateMatrix {
    Date date;
    Eigen::MatrixXd rho;
  };
  struct Skipped {
    Date date;
    std::string reason;
  };

  std::vector<std::string> labels;
  std::vector<DateMatrix> per_date;
  Eigen::MatrixXd average;
  Eigen::MatrixXi pair_count;
  std::vector<Skipped> skipped;

  std::optional<std::size_t> index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return i;
    return std::nullopt;
  }
};

inline constexpr const char* kReturnLabel = "return";

namespace detail {

inline void finish_average(CorrReport& report) {
  const auto k = static_cast<Eigen::Index>(report.labels.size());
  report.average = Eigen::MatrixXd::Zero(k, k);
  report.pair_count = Eigen::MatrixXi::Zero(k, k);
  for (const auto& dm : report.per_date)  // date order
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b)
        if (!std::isnan(dm.rho(a, b))) {
          report.average(a, b) += dm.rho(a, b);
          report.pair_count(a, b) += 1;
        }
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b)
      report.average(a, b) = report.pair_count(a, b) > 0
                                 ? report.average(a, b) / report.pair_count(a, b)
                                 : std::numeric_limits<double>::quiet_NaN();
}

inline Eigen::MatrixXd spearman_matrix(const CrossSection& cs) {
  const auto k = cs.signal_matrix.cols() + 1;
  std::vector<std::vector<double>> r(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::VectorXd col = j < k - 1 ? Eigen::VectorXd(cs.signal_matrix.col(j)) : cs.returns;
    r[static_cast<std::size_t>(j)] = ranks(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
  }
  Eigen::MatrixXd rho = Eigen::MatrixXd::Identity(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = a + 1; b < k; ++b) {
      double v;
      try {
        v = pearson_unchecked(r[static_cast<std::size_t>(a)], r[static_cast<std::size_t>(b)]);
      } catch (const UndefinedCorrelationError&) {
        v = std::numeric_limits<double>::quiet_NaN();
      }
      rho(a, b) = rho(b, a) = v;
    }
  return rho;
}

}  // namespace detail

/// Minimum cross-section size for a correlation date.
inline constexpr std::size_t kMinCorrelationCompanies = 3;

/// Spearman matrix at every panel date over `columns` plus the forward
/// return, averaged over usable dates. Dates whose cross-section is too
/// small are listed in `skipped`.
inline CorrReport avg_cross_sectional_corr(const Panel& panel, const std::vector<Column>& columns,
                                           std::size_t workers = 1) {
  CorrReport report;
  for (const auto& c : columns) report.labels.push_back(c.label);
  report.labels.emplace_back(kReturnLabel);

  const auto& dates = panel.dates();
  std::vector<std::optional<Eigen::MatrixXd>> slots(dates.size());
  std::vector<std::string> reasons(dates.size());
  parallel_for(dates.size(), workers, [&](std::size_t d) {
    try {
      const auto cs = cross_section(panel, dates[d], columns, kMinCorrelationCompanies);
      slots[d] = detail::spearman_matrix(cs);
    } catch (const InsufficientCrossSectionError& e) {
      reasons[d] = e.what();
    }
  });
  for (std::size_t d = 0; d < dates.size(); ++d) {
    if (slots[d]) report.per_date.push_back({dates[d], std::move(*slots[d])});
    else report.skipped.push_back({dates[d], reasons[d]});
  }
  if (report.per_date.empty()) throw NumericError("correlation: no usable dates");
  detail::finish_average(report);
  return report;
}

/// Long format: date,row_label,col_label,rho. Per-date rows first, then the
/// average with date "average". Undefined entries are empty cells.
inline std::string corr_to_csv(const CorrReport& r) {
  std::string out = "date,row_label,col_label,rho\n";
  auto emit = [&](const std::string& date, const Eigen::MatrixXd& m) {
    for (std::size_t a = 0; a < r.labels.size(); ++a)
      for (std::size_t b = 0; b < r.labels.size(); ++b) {
        const double v = m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        out += date + "," + text::csv_escape(r.labels[a]) + "," + text::csv_escape(r.labels[b]) +
               "," + (std::isnan(v) ? std::string() : text::format_real(v)) + "\n";
      }
  };
  for (const auto& dm : r.per_date) emit(dm.date.iso(), dm.rho);
  emit("average", r.average);
  return out;
}

/// Inverse of corr_to_csv. The average is recomputed from the per-date rows
/// and must agree with the stored one. Skipped dates are not part of the
/// format.
inline CorrReport corr_from_csv(std::string_view csv, const std::string& origin = "correlation csv") {
  const auto lines = text::split(csv, '\n');
  if (lines.empty() || text::trim(lines[0]) != "date,row_label,col_label,rho")
    throw SchemaError("date", origin + ": unexpected header");
  std::vector<std::string> labels;
  std::map<std::string, std::map<std::pair<std::string, std::string>, double>> cells;
  std::vector<std::string> date_order;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    if (text::is_blank(lines[l])) continue;
    const auto f = text::split_csv(lines[l]);
    if (f.size() != 4) throw DataError(origin + ":" + std::to_string(l + 1) + ": expected 4 fields");
    if (!cells.count(f[0])) date_order.push_back(f[0]);
    if (std::find(labels.begin(), labels.end(), f[1]) == labels.end()) labels.push_back(f[1]);
    cells[f[0]][{f[1], f[2]}] = text::parse_real(f[3]).value_or(std::numeric_limits<double>::quiet_NaN());
  }
  CorrReport r;
  r.labels = labels;
  const auto k = static_cast<Eigen::Index>(labels.size());
  auto matrix = [&](const std::string& date) {
    Eigen::MatrixXd m(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) {
        auto it = cells[date].find({labels[static_cast<std::size_t>(a)], labels[static_cast<std::size_t>(b)]});
        if (it == cells[date].end()) throw DataError(origin + ": incomplete matrix for " + date);
        m(a, b) = it->second;
      }
    return m;
  };
  for (const auto& d : date_order) {
    if (d == "average") continue;
    const auto date = Date::parse(d);
    if (!date) throw DataError(origin + ": invalid date '" + d + "'");
    r.per_date.push_back({*date, matrix(d)});
  }
  detail::finish_average(r);
  if (cells.count("average")) {
    const auto stored = matrix("average");
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) {
        const double s = stored(a, b), c = r.average(a, b);
        if (std::isnan(s) != std::isnan(c) || (!std::isnan(s) && s != c))
          throw DataError(origin + ": stored average disagrees with per-date rows");
      }
  }
  return r;
}

}  // namespace alphalab

#endif  // ALPHALAB_METRICS_HPP
