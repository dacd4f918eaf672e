#ifndef ALPHALAB_FMB_HPP
#define ALPHALAB_FMB_HPP

// Fama-MacBeth two-step regression.
//
// Step 1 regresses each company's forward-return time series on its
// cross-sectionally z-scored signals (one full-window OLS per company).
// Step 2 regresses every date's return cross-section on the step-1 betas.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "alphalab/alpha.hpp"
#include "alphalab/error.hpp"
#include "alphalab/metrics.hpp"
#include "alphalab/panel.hpp"
#include "alphalab/parallel.hpp"
#include "alphalab/text.hpp"

namespace alphalab {

struct Skip {
  std::string what;  // company ticker or ISO date
  std::string reason;
};

struct BetaMatrix {
  std::vector<std::string> companies;
  std::vector<std::string> regressor_labels;
  Eigen::VectorXd alphas;
  Eigen::MatrixXd betas;  // companies x regressors
  std::vector<OlsFit> per_company_fit;
  std::vector<Skip> excluded;        // companies
  std::vector<Skip> skipped_dates;   // dates unusable for z-scoring
};

struct GammaSeries {
  std::vector<std::string> regressor_labels;
  std::vector<Date> dates;
  std::vector<double> gamma0;
  std::vector<Eigen::VectorXd> gammas;
  std::vector<double> adj_r2;
  std::vector<std::size_t> n_obs;
  std::vector<Skip> skipped_dates;
};

/// Step 1. Each column is z-scored across companies at every date, then
/// each company with at least m + 3 complete dates gets one OLS of its
/// returns on its z-scored columns.
inline BetaMatrix step1_betas(const Panel& panel, const std::vector<Column>& columns,
                              std::size_t workers = 1) {
  const auto m = columns.size();
  if (m == 0) throw ConfigError("step 1: no regressors");
  BetaMatrix out;
  for (const auto& c : columns) out.regressor_labels.push_back(c.label);

  const auto& dates = panel.dates();
  const auto& companies = panel.companies();
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < companies.size(); ++i) row_of[companies[i]] = i;

  // per company: (z row, return) in date order
  std::vector<std::vector<std::pair<Eigen::VectorXd, double>>> obs(companies.size());
  std::vector<std::optional<CrossSection>> standardized(dates.size());
  std::vector<std::string> reasons(dates.size());
  parallel_for(dates.size(), workers, [&](std::size_t d) {
    try {
      auto cs = cross_section(panel, dates[d], columns);
      for (Eigen::Index j = 0; j < cs.signal_matrix.cols(); ++j) {
        const Eigen::VectorXd col = cs.signal_matrix.col(j);
        std::vector<double> z;
        try {
          z = zscore(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
        } catch (const DegenerateColumnError&) {
          throw DegenerateColumnError("degenerate column " + columns[static_cast<std::size_t>(j)].label);
        }
        for (Eigen::Index i = 0; i < col.size(); ++i) cs.signal_matrix(i, j) = z[static_cast<std::size_t>(i)];
      }
      standardized[d] = std::move(cs);
    } catch (const NumericError& e) {
      reasons[d] = e.what();
    }
  });
  for (std::size_t d = 0; d < dates.size(); ++d) {
    if (!standardized[d]) {
      out.skipped_dates.push_back({dates[d].iso(), reasons[d]});
      continue;
    }
    const auto& cs = *standardized[d];
    for (std::size_t r = 0; r < cs.size(); ++r) {
      const auto i = row_of.at(cs.companies[r]);
      obs[i].emplace_back(cs.signal_matrix.row(static_cast<Eigen::Index>(r)).transpose(),
                          cs.returns(static_cast<Eigen::Index>(r)));
    }
  }

  std::vector<std::optional<OlsFit>> fits(companies.size());
  std::vector<std::string> why(companies.size());
  parallel_for(companies.size(), workers, [&](std::size_t i) {
    const auto& o = obs[i];
    if (o.size() < m + 3) {
      why[i] = std::to_string(o.size()) + " complete observations, need " + std::to_string(m + 3);
      return;
    }
    Eigen::MatrixXd X(static_cast<Eigen::Index>(o.size()), static_cast<Eigen::Index>(m));
    Eigen::VectorXd y(static_cast<Eigen::Index>(o.size()));
    for (std::size_t t = 0; t < o.size(); ++t) {
      X.row(static_cast<Eigen::Index>(t)) = o[t].first.transpose();
      y(static_cast<Eigen::Index>(t)) = o[t].second;
    }
    try {
      fits[i] = ols(X, y);
    } catch (const NumericError& e) {
      why[i] = e.what();
    }
  });

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < companies.size(); ++i) {
    if (fits[i]) kept.push_back(i);
    else out.excluded.push_back({companies[i], why[i]});
  }
  if (kept.empty()) {
    std::string detail = out.excluded.empty() ? "" : " (first: " + out.excluded.front().what + ": " +
                                                         out.excluded.front().reason + ")";
    throw NumericError("step 1: no company has a usable time series" + detail);
  }
  const auto n = static_cast<Eigen::Index>(kept.size());
  out.alphas.resize(n);
  out.betas.resize(n, static_cast<Eigen::Index>(m));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& fit = *fits[kept[static_cast<std::size_t>(r)]];
    out.companies.push_back(companies[kept[static_cast<std::size_t>(r)]]);
    out.alphas(r) = fit.coefficients(0);
    out.betas.row(r) = fit.coefficients.tail(static_cast<Eigen::Index>(m)).transpose();
    out.per_company_fit.push_back(fit);
  }
  return out;
}

/// Step 2. One OLS per date of the return cross-section (companies retained
/// in step 1 with a finite return) on their beta rows. Dates with fewer than
/// m + 2 such companies are skipped.
inline GammaSeries step2_cross_sectional(const Panel& panel, const BetaMatrix& betas,
                                         std::size_t workers = 1) {
  const auto m = betas.regressor_labels.size();
  GammaSeries out;
  out.regressor_labels = betas.regressor_labels;

  std::vector<std::size_t> panel_row;
  for (const auto& c : betas.companies) {
    auto it = std::lower_bound(panel.companies().begin(), panel.companies().end(), c);
    if (it == panel.companies().end() || *it != c)
      throw DataError("step 2: company " + c + " is not in the panel");
    panel_row.push_back(static_cast<std::size_t>(it - panel.companies().begin()));
  }

  const auto& dates = panel.dates();
  std::vector<std::optional<OlsFit>> fits(dates.size());
  std::vector<std::string> reasons(dates.size());
  parallel_for(dates.size(), workers, [&](std::size_t d) {
    std::vector<Eigen::Index> rows;
    std::vector<double> rets;
    for (std::size_t r = 0; r < panel_row.size(); ++r)
      if (auto v = panel.fwd_return(panel_row[r], d)) {
        rows.push_back(static_cast<Eigen::Index>(r));
        rets.push_back(*v);
      }
    if (rows.size() < m + 2) {
      reasons[d] = InsufficientCrossSectionError(rows.size(), m + 2).what();
      return;
    }
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      X.row(static_cast<Eigen::Index>(k)) = betas.betas.row(rows[k]);
      y(static_cast<Eigen::Index>(k)) = rets[k];
    }
    try {
      fits[d] = ols(X, y);
    } catch (const NumericError& e) {
      reasons[d] = e.what();
    }
  });

  for (std::size_t d = 0; d < dates.size(); ++d) {
    if (!fits[d]) {
      out.skipped_dates.push_back({dates[d].iso(), reasons[d]});
      continue;
    }
    const auto& f = *fits[d];
    out.dates.push_back(dates[d]);
    out.gamma0.push_back(f.coefficients(0));
    out.gammas.push_back(f.coefficients.tail(static_cast<Eigen::Index>(m)));
    out.adj_r2.push_back(f.adj_r2);
    out.n_obs.push_back(f.n_obs);
  }
  if (out.dates.empty()) throw NumericError("step 2: no usable dates");
  return out;
}

struct RiskPremium {
  std::string label;
  double mean = 0.0;
  double t_stat = 0.0;
  /// Zero dispersion across dates; t_stat then holds +inf.
  bool degenerate = false;
};

/// Time-series mean of each gamma and its Fama-MacBeth t-statistic
/// mean / (sd / sqrt(T)).
inline std::vector<RiskPremium> risk_premia(const GammaSeries& gs) {
  const auto T = gs.dates.size();
  if (T < 2) throw NumericError("risk premia: need at least 2 usable dates, have " + std::to_string(T));
  std::vector<RiskPremium> out;
  for (std::size_t j = 0; j < gs.regressor_labels.size(); ++j) {
    std::vector<double> g(T);
    for (std::size_t t = 0; t < T; ++t) g[t] = gs.gammas[t](static_cast<Eigen::Index>(j));
    const double mu = detail::mean(g);
    double ss = 0.0;
    for (double v : g) ss += (v - mu) * (v - mu);
    const double sd = std::sqrt(ss / static_cast<double>(T - 1));
    RiskPremium rp{gs.regressor_labels[j], mu, 0.0, false};
    if (sd == 0.0) {
      rp.t_stat = std::numeric_limits<double>::infinity();
      rp.degenerate = true;
    } else {
      rp.t_stat = mu / (sd / std::sqrt(static_cast<double>(T)));
    }
    out.push_back(rp);
  }
  return out;
}

/// Five-number box summary with Tukey (1.5 IQR) whiskers. Quartiles use
/// linear interpolation between order statistics.
struct BoxStats {
  std::size_t n = 0;
  double median = 0.0, q1 = 0.0, q3 = 0.0, whisker_lo = 0.0, whisker_hi = 0.0;
  std::vector<double> outliers;
};

inline double quantile_sorted(std::span<const double> sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw NumericError("box statistics of an empty sample");
  std::sort(values.begin(), values.end());
  BoxStats b;
  b.n = values.size();
  b.q1 = quantile_sorted(values, 0.25);
  b.median = quantile_sorted(values, 0.5);
  b.q3 = quantile_sorted(values, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr, hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_lo = b.q1;
  b.whisker_hi = b.q3;
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) b.outliers.push_back(v);
    else {
      b.whisker_lo = std::min(b.whisker_lo, v);
      b.whisker_hi = std::max(b.whisker_hi, v);
    }
  }
  return b;
}

struct ModelOutcome {
  std::string name;  // "baseline" or the candidate abbreviation
  std::vector<std::string> regressors;
  bool ok = false;
  std::string error;
  std::optional<BetaMatrix> betas;
  std::optional<GammaSeries> gammas;
  std::optional<BoxStats> summary;  // of gammas->adj_r2
  std::vector<Skip> date_notes;     // usable here but skipped by the baseline
};

struct FmbComparison {
  ModelOutcome baseline;
  std::vector<ModelOutcome> candidates;

  const ModelOutcome* find(const std::string& name) const {
    if (name == baseline.name) return &baseline;
    for (const auto& c : candidates)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline constexpr const char* kBaselineModel = "baseline";

inline ModelOutcome run_model(const Panel& panel, std::string name, const std::vector<Column>& columns,
                              std::size_t workers = 1) {
  ModelOutcome out;
  out.name = std::move(name);
  for (const auto& c : columns) out.regressors.push_back(c.label);
  try {
    out.betas = step1_betas(panel, columns, workers);
    out.gammas = step2_cross_sectional(panel, *out.betas, workers);
    out.summary = box_stats(out.gammas->adj_r2);
    out.ok = true;
  } catch (const Error& e) {
    out.ok = false;
    out.error = e.what();
    out.betas.reset();
    out.gammas.reset();
    out.summary.reset();
  }
  return out;
}

/// Baseline model plus one model per candidate (baseline columns + that
/// candidate). A failing candidate is recorded and does not affect the
/// others; a failing baseline is thrown.
inline FmbComparison fmb_compare(const Panel& panel, const std::vector<std::string>& baseline,
                                 const std::vector<AlphaDef>& candidates, std::size_t workers = 1) {
  if (baseline.empty()) throw ConfigError("fmb: empty baseline signal list");
  const auto base_cols = signal_columns(baseline);
  FmbComparison cmp;
  cmp.baseline = run_model(panel, kBaselineModel, base_cols, workers);
  if (!cmp.baseline.ok) throw NumericError("baseline model failed: " + cmp.baseline.error);

  std::set<Date> base_dates(cmp.baseline.gammas->dates.begin(), cmp.baseline.gammas->dates.end());
  std::map<std::string, std::string> base_skips;
  for (const auto& s : cmp.baseline.gammas->skipped_dates) base_skips[s.what] = s.reason;

  for (const auto& cand : candidates) {
    auto cols = base_cols;
    cols.push_back(Column::of_alpha(cand));
    auto outcome = run_model(panel, cand.abbreviation, cols, workers);
    if (outcome.ok)
      for (const auto& d : outcome.gammas->dates)
        if (!base_dates.count(d))
          outcome.date_notes.push_back({d.iso(), "baseline skipped: " + base_skips[d.iso()]});
    cmp.candidates.push_back(std::move(outcome));
  }
  return cmp;
}

// ---- CSV --------------------------------------------------------------

/// model,date,adj_r2 for every successful model (baseline first).
inline std::string fmb_adj_r2_csv(const FmbComparison& cmp) {
  std::string out = "model,date,adj_r2\n";
  auto emit = [&](const ModelOutcome& m) {
    if (!m.ok) return;
    for (std::size_t t = 0; t < m.gammas->dates.size(); ++t)
      out += text::csv_escape(m.name) + "," + m.gammas->dates[t].iso() + "," +
             text::format_real(m.gammas->adj_r2[t]) + "\n";
  };
  emit(cmp.baseline);
  for (const auto& c : cmp.candidates) emit(c);
  return out;
}

inline std::string fmb_summary_csv(const FmbComparison& cmp) {
  std::string out = "model,status,n_dates,median,q1,q3,whisker_lo,whisker_hi,outliers,message\n";
  auto emit = [&](const ModelOutcome& m) {
    out += text::csv_escape(m.name) + ",";
    if (!m.ok) {
      out += "failed,,,,,,,," + text::csv_escape(m.error) + "\n";
      return;
    }
    const auto& b = *m.summary;
    std::string outl;
    for (std::size_t i = 0; i < b.outliers.size(); ++i)
      outl += (i ? ";" : "") + text::format_real(b.outliers[i]);
    out += "ok," + std::to_string(b.n) + "," + text::format_real(b.median) + "," +
           text::format_real(b.q1) + "," + text::format_real(b.q3) + "," +
           text::format_real(b.whisker_lo) + "," + text::format_real(b.whisker_hi) + "," + outl +
           ",\n";
  };
  emit(cmp.baseline);
  for (const auto& c : cmp.candidates) emit(c);
  return out;
}

/// model,date,label,gamma; label "intercept" holds gamma_t0.
inline std::string fmb_gammas_csv(const FmbComparison& cmp) {
  std::string out = "model,date,label,gamma\n";
  auto emit = [&](const ModelOutcome& m) {
    if (!m.ok) return;
    const auto& g = *m.gammas;
    for (std::size_t t = 0; t < g.dates.size(); ++t) {
      const auto pre = text::csv_escape(m.name) + "," + g.dates[t].iso() + ",";
      out += pre + "intercept," + text::format_real(g.gamma0[t]) + "\n";
      for (std::size_t j = 0; j < g.regressor_labels.size(); ++j)
        out += pre + text::csv_escape(g.regressor_labels[j]) + "," +
               text::format_real(g.gammas[t](static_cast<Eigen::Index>(j))) + "\n";
    }
  };
  emit(cmp.baseline);
  for (const auto& c : cmp.candidates) emit(c);
  return out;
}

inline std::string fmb_risk_premia_csv(const FmbComparison& cmp) {
  std::string out = "model,label,mean_gamma,t_stat,degenerate\n";
  auto emit = [&](const ModelOutcome& m) {
    if (!m.ok || m.gammas->dates.size() < 2) return;
    for (const auto& rp : risk_premia(*m.gammas))
      out += text::csv_escape(m.name) + "," + text::csv_escape(rp.label) + "," +
             text::format_real(rp.mean) + "," + text::format_real(rp.t_stat) + "," +
             (rp.degenerate ? "true" : "false") + "\n";
  };
  emit(cmp.baseline);
  for (const auto& c : cmp.candidates) emit(c);
  return out;
}

/// Rebuilds a comparison (without step-1 betas) from the summary and gamma
/// CSVs. Per-date adjusted R² comes from the adj_r2 CSV.
inline FmbComparison fmb_from_csv(std::string_view summary_csv, std::string_view adj_r2_csv,
                                  std::string_view gammas_csv) {
  auto rows = [](std::string_view csv, std::string_view header, std::size_t width, const char* what) {
    const auto lines = text::split(csv, '\n');
    if (lines.empty() || text::trim(lines[0]) != header)
      throw SchemaError(std::string(header), std::string(what) + ": unexpected header");
    std::vector<std::vector<std::string>> out;
    for (std::size_t l = 1; l < lines.size(); ++l) {
      if (text::is_blank(lines[l])) continue;
      auto f = text::split_csv(lines[l]);
      if (f.size() != width)
        throw DataError(std::string(what) + ":" + std::to_string(l + 1) + ": expected " +
                        std::to_string(width) + " fields");
      out.push_back(std::move(f));
    }
    return out;
  };
  auto real = [](const std::string& s) {
    auto v = text::parse_real(s);
    if (!v) throw DataError("fmb csv: bad number '" + s + "'");
    return *v;
  };

  std::vector<ModelOutcome> models;
  std::map<std::string, std::size_t> idx;
  for (const auto& f : rows(summary_csv, "model,status,n_dates,median,q1,q3,whisker_lo,whisker_hi,outliers,message",
                            10, "fmb summary")) {
    ModelOutcome m;
    m.name = f[0];
    m.ok = f[1] == "ok";
    m.error = f[9];
    if (m.ok) {
      m.gammas = GammaSeries{};
      BoxStats b;
      b.n = static_cast<std::size_t>(real(f[2]));
      b.median = real(f[3]);
      b.q1 = real(f[4]);
      b.q3 = real(f[5]);
      b.whisker_lo = real(f[6]);
      b.whisker_hi = real(f[7]);
      if (!f[8].empty())
        for (const auto& o : text::split(f[8], ';')) b.outliers.push_back(real(o));
      m.summary = b;
    }
    idx[m.name] = models.size();
    models.push_back(std::move(m));
  }
  if (models.empty() || models.front().name != kBaselineModel)
    throw DataError("fmb summary: first model must be the baseline");

  auto model_for = [&](const std::string& name) -> ModelOutcome& {
    auto it = idx.find(name);
    if (it == idx.end() || !models[it->second].ok)
      throw DataError("fmb csv: unknown or failed model '" + name + "'");
    return models[it->second];
  };
  for (const auto& f : rows(adj_r2_csv, "model,date,adj_r2", 3, "fmb adj_r2")) {
    auto& g = *model_for(f[0]).gammas;
    const auto d = Date::parse(f[1]);
    if (!d) throw DataError("fmb adj_r2: invalid date '" + f[1] + "'");
    g.dates.push_back(*d);
    g.adj_r2.push_back(real(f[2]));
  }
  std::map<std::pair<std::string, std::string>, std::vector<std::pair<std::string, double>>> cells;
  for (const auto& f : rows(gammas_csv, "model,date,label,gamma", 4, "fmb gammas")) {
    model_for(f[0]);
    cells[{f[0], f[1]}].emplace_back(f[2], real(f[3]));
  }
  for (auto& m : models) {
    if (!m.ok) continue;
    auto& g = *m.gammas;
    for (const auto& d : g.dates) {
      const auto& c = cells[{m.name, d.iso()}];
      if (c.empty() || c.front().first != "intercept")
        throw DataError("fmb gammas: missing intercept for " + m.name + " " + d.iso());
      if (g.regressor_labels.empty())
        for (std::size_t j = 1; j < c.size(); ++j) g.regressor_labels.push_back(c[j].first);
      if (c.size() != g.regressor_labels.size() + 1)
        throw DataError("fmb gammas: inconsistent regressors for " + m.name);
      g.gamma0.push_back(c.front().second);
      Eigen::VectorXd v(static_cast<Eigen::Index>(c.size() - 1));
      for (std::size_t j = 1; j < c.size(); ++j) v(static_cast<Eigen::Index>(j - 1)) = c[j].second;
      g.gammas.push_back(v);
    }
    m.regressors = g.regressor_labels;
  }
  FmbComparison cmp;
  cmp.baseline = std::move(models.front());
  for (std::size_t i = 1; i < models.size(); ++i) cmp.candidates.push_back(std::move(models[i]));
  return cmp;
}

}  // namespace alphalab

#endif  // ALPHALAB_FMB_HPP
