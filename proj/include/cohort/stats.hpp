#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "cohort/common.hpp"

namespace cohort::stats {

// --- regularised incomplete gamma ------------------------------------------

// P(a,x) by series expansion; converges fast for x < a+1.
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 10000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  double lg = std::lgamma(a);
  return sum * std::exp(-x + a * std::log(x) - lg);
}

// Q(a,x) by modified Lentz continued fraction; converges fast for x >= a+1.
inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 10000; ++i) {
    double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  double lg = std::lgamma(a);
  return std::exp(-x + a * std::log(x) - lg) * h;
}

// Upper regularised incomplete gamma Q(a,x) = 1 - P(a,x).
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw Error(errc::invalid_config, "gamma_q domain");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

// Upper tail of the chi-square distribution with df degrees of freedom.
inline double chi_square_sf(double statistic, int df) {
  return gamma_q(df / 2.0, statistic / 2.0);
}

// --- contingency tables and the chi-square test ----------------------------

struct ContingencyTable {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<long long>> counts;  // rows x cols

  size_t rows() const { return counts.size(); }
  size_t cols() const { return counts.empty() ? 0 : counts[0].size(); }
};

struct ChiSquareResult {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
};

// Pearson chi-square without continuity correction. A p-value below the
// representable range is reported as 0 here and "<1e-300" in text reports.
inline ChiSquareResult chi_square_test(const ContingencyTable& table) {
  size_t R = table.rows(), C = table.cols();
  if (R < 2 || C < 2)
    throw Error(errc::degenerate_table, "need at least a 2x2 table");
  std::vector<double> row_sum(R, 0.0), col_sum(C, 0.0);
  double total = 0.0;
  for (size_t i = 0; i < R; ++i)
    for (size_t j = 0; j < C; ++j) {
      if (table.counts[i][j] < 0)
        throw Error(errc::invalid_config, "negative count in contingency table");
      row_sum[i] += double(table.counts[i][j]);
      col_sum[j] += double(table.counts[i][j]);
      total += double(table.counts[i][j]);
    }
  for (double s : row_sum)
    if (s == 0.0) throw Error(errc::zero_marginal, "zero row marginal");
  for (double s : col_sum)
    if (s == 0.0) throw Error(errc::zero_marginal, "zero column marginal");

  ChiSquareResult r;
  r.degrees_of_freedom = int((R - 1) * (C - 1));
  for (size_t i = 0; i < R; ++i)
    for (size_t j = 0; j < C; ++j) {
      double expected = row_sum[i] * col_sum[j] / total;
      double diff = double(table.counts[i][j]) - expected;
      r.statistic += diff * diff / expected;
    }
  r.p_value = chi_square_sf(r.statistic, r.degrees_of_freedom);
  return r;
}

// --- logistic regression ----------------------------------------------------

struct LogisticOptions {
  double ridge_lambda = 1e-6;   // on standardised non-intercept terms
  double gradient_tol = 1e-8;   // max-norm convergence criterion
  int max_iterations = 100;
};

struct LogisticModel {
  std::vector<std::string> predictor_names;  // excludes intercept
  std::vector<double> coefficients;          // [intercept, b_1, ..., b_p], original scale
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;  // unpenalised, at the fitted coefficients
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(sigmoid(z)), safe for large |z|
inline double log_sigmoid(double z) { return z < -30.0 ? z : -std::log1p(std::exp(-z)); }

namespace detail {

// dense symmetric solve via Cholesky with a fallback diagonal boost
inline std::vector<double> solve_spd(std::vector<std::vector<double>> a, std::vector<double> b) {
  size_t n = b.size();
  for (int attempt = 0; attempt < 6; ++attempt) {
    std::vector<std::vector<double>> L(n, std::vector<double>(n, 0.0));
    bool ok = true;
    for (size_t i = 0; i < n && ok; ++i) {
      for (size_t j = 0; j <= i && ok; ++j) {
        double s = a[i][j];
        for (size_t k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
        if (i == j) {
          if (s <= 0.0) { ok = false; break; }
          L[i][i] = std::sqrt(s);
        } else {
          L[i][j] = s / L[j][j];
        }
      }
    }
    if (ok) {
      std::vector<double> y(n), x(n);
      for (size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (size_t k = 0; k < i; ++k) s -= L[i][k] * y[k];
        y[i] = s / L[i][i];
      }
      for (size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (size_t k = ii + 1; k < n; ++k) s -= L[k][ii] * x[k];
        x[ii] = s / L[ii][ii];
      }
      return x;
    }
    for (size_t i = 0; i < n; ++i) a[i][i] += 1e-8 * (1 << attempt);
  }
  throw Error(errc::stage_failure, "singular system in logistic solver");
}

}  // namespace detail

// Fits by Newton iterations with step-halving on a ridge-stabilised
// log-likelihood. Predictors are standardised internally; the returned
// coefficients are mapped back to the original scale. The design matrix X
// excludes the intercept column.
inline LogisticModel fit_logistic(const std::vector<std::vector<double>>& X,
                                  const std::vector<int>& y,
                                  const std::vector<std::string>& names = {},
                                  const LogisticOptions& opts = {}) {
  size_t n = y.size();
  size_t p = X.empty() ? 0 : X[0].size();
  if (X.size() != n) throw Error(errc::spec_mismatch, "X and y size mismatch");
  long long pos = std::count(y.begin(), y.end(), 1);
  if (pos == 0 || pos == (long long)n)
    throw Error(errc::single_class, "outcome has a single class");

  // standardise
  std::vector<double> mean(p, 0.0), scale(p, 1.0);
  for (size_t j = 0; j < p; ++j) {
    double m = 0.0;
    for (size_t i = 0; i < n; ++i) m += X[i][j];
    m /= double(n);
    double v = 0.0;
    for (size_t i = 0; i < n; ++i) v += (X[i][j] - m) * (X[i][j] - m);
    v /= double(n);
    if (v <= 0.0)
      throw Error(errc::constant_predictor,
                  "predictor " + (j < names.size() ? names[j] : std::to_string(j)) + " is constant");
    mean[j] = m;
    scale[j] = std::sqrt(v);
  }
  auto z = [&](size_t i, size_t j) { return (X[i][j] - mean[j]) / scale[j]; };

  const double lambda = opts.ridge_lambda;
  std::vector<double> beta(p + 1, 0.0);  // [intercept, std-scale slopes]

  auto penalised_ll = [&](const std::vector<double>& b) {
    double ll = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double eta = b[0];
      for (size_t j = 0; j < p; ++j) eta += b[j + 1] * z(i, j);
      ll += y[i] ? log_sigmoid(eta) : log_sigmoid(-eta);
    }
    double pen = 0.0;
    for (size_t j = 1; j <= p; ++j) pen += b[j] * b[j];
    return ll - 0.5 * lambda * pen;
  };

  LogisticModel model;
  double ll = penalised_ll(beta);
  std::vector<double> grad(p + 1), step;
  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    model.iterations = iter;
    // gradient and Hessian of the penalised log-likelihood
    std::fill(grad.begin(), grad.end(), 0.0);
    std::vector<std::vector<double>> H(p + 1, std::vector<double>(p + 1, 0.0));
    for (size_t i = 0; i < n; ++i) {
      double eta = beta[0];
      for (size_t j = 0; j < p; ++j) eta += beta[j + 1] * z(i, j);
      double mu = sigmoid(eta);
      double w = mu * (1.0 - mu);
      double resid = double(y[i]) - mu;
      grad[0] += resid;
      H[0][0] += w;
      for (size_t j = 0; j < p; ++j) {
        double zij = z(i, j);
        grad[j + 1] += resid * zij;
        H[0][j + 1] += w * zij;
        for (size_t k = 0; k <= j; ++k) H[j + 1][k + 1] += w * zij * z(i, k);
      }
    }
    for (size_t j = 1; j <= p; ++j) {
      grad[j] -= lambda * beta[j];
      H[j][j] += lambda;
    }
    for (size_t a = 0; a <= p; ++a)
      for (size_t b = a + 1; b <= p; ++b) H[a][b] = H[b][a];

    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::fabs(g));
    if (gmax < opts.gradient_tol) {
      model.converged = true;
      break;
    }

    step = detail::solve_spd(H, grad);
    double t = 1.0;
    std::vector<double> trial(p + 1);
    bool improved = false;
    for (int half = 0; half < 40; ++half) {
      for (size_t j = 0; j <= p; ++j) trial[j] = beta[j] + t * step[j];
      double tll = penalised_ll(trial);
      if (tll > ll - 1e-14) {
        beta = trial;
        ll = tll;
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) {
      // the line search cannot improve the likelihood beyond floating-point
      // resolution: treat a small gradient relative to the likelihood scale
      // as converged, otherwise return the best iterate with converged=false
      if (gmax < 1e-6 * std::max(1.0, std::fabs(ll))) model.converged = true;
      break;
    }
  }

  // map back to original scale
  model.coefficients.assign(p + 1, 0.0);
  model.coefficients[0] = beta[0];
  for (size_t j = 0; j < p; ++j) {
    model.coefficients[j + 1] = beta[j + 1] / scale[j];
    model.coefficients[0] -= beta[j + 1] * mean[j] / scale[j];
  }
  model.predictor_names = names;
  if (model.predictor_names.size() != p) {
    model.predictor_names.clear();
    for (size_t j = 0; j < p; ++j) model.predictor_names.push_back("x" + std::to_string(j + 1));
  }
  // unpenalised log-likelihood at the fit
  double ull = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double eta = model.coefficients[0];
    for (size_t j = 0; j < p; ++j) eta += model.coefficients[j + 1] * X[i][j];
    ull += y[i] ? log_sigmoid(eta) : log_sigmoid(-eta);
  }
  model.log_likelihood = ull;
  return model;
}

// Unpenalised log-likelihood at arbitrary original-scale coefficients;
// exposed so tests can check the analytic gradient by finite differences.
inline double log_likelihood(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                             const std::vector<double>& coefficients) {
  double ll = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    double eta = coefficients[0];
    for (size_t j = 0; j + 1 < coefficients.size(); ++j) eta += coefficients[j + 1] * X[i][j];
    ll += y[i] ? log_sigmoid(eta) : log_sigmoid(-eta);
  }
  return ll;
}

inline std::vector<double> log_likelihood_gradient(const std::vector<std::vector<double>>& X,
                                                   const std::vector<int>& y,
                                                   const std::vector<double>& coefficients) {
  std::vector<double> g(coefficients.size(), 0.0);
  for (size_t i = 0; i < y.size(); ++i) {
    double eta = coefficients[0];
    for (size_t j = 0; j + 1 < coefficients.size(); ++j) eta += coefficients[j + 1] * X[i][j];
    double resid = double(y[i]) - sigmoid(eta);
    g[0] += resid;
    for (size_t j = 0; j + 1 < coefficients.size(); ++j) g[j + 1] += resid * X[i][j];
  }
  return g;
}

inline std::vector<double> predict_proba(const LogisticModel& model,
                                         const std::vector<std::vector<double>>& X) {
  size_t p = model.coefficients.size() - 1;
  std::vector<double> out;
  out.reserve(X.size());
  for (const auto& row : X) {
    if (row.size() != p)
      throw Error(errc::spec_mismatch, "record width does not match the predictor spec");
    double eta = model.coefficients[0];
    for (size_t j = 0; j < p; ++j) eta += model.coefficients[j + 1] * row[j];
    out.push_back(sigmoid(eta));
  }
  return out;
}

// --- ROC / AUC / calibration ------------------------------------------------

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0) .. (1,1)
  double auc = 0.0;                               // Mann-Whitney concordance
  double trapezoid_area = 0.0;                    // area under the swept curve
};

// AUC via rank-based Mann-Whitney (ties half-weighted) plus the explicit
// threshold-swept curve; the two areas agree to floating-point accuracy.
inline RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  size_t n = scores.size();
  if (labels.size() != n) throw Error(errc::spec_mismatch, "scores/labels size mismatch");
  long long npos = std::count(labels.begin(), labels.end(), 1);
  long long nneg = (long long)n - npos;
  if (npos == 0 || nneg == 0) throw Error(errc::single_class, "both classes required");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Mann-Whitney via midranks
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    double midrank = (double(i + 1) + double(j)) / 2.0;
    for (size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += midrank;
    i = j;
  }
  RocCurve out;
  out.auc = (rank_sum_pos - double(npos) * (double(npos) + 1.0) / 2.0) /
            (double(npos) * double(nneg));

  // threshold sweep from +inf down: descending scores
  out.points.emplace_back(0.0, 0.0);
  long long tp = 0, fp = 0;
  for (size_t k = n; k-- > 0;) {
    size_t idx = order[k];
    labels[idx] == 1 ? ++tp : ++fp;
    bool tie_with_next = k > 0 && scores[order[k - 1]] == scores[idx];
    if (!tie_with_next)
      out.points.emplace_back(double(fp) / double(nneg), double(tp) / double(npos));
  }
  for (size_t k = 1; k < out.points.size(); ++k) {
    auto [x0, y0] = out.points[k - 1];
    auto [x1, y1] = out.points[k];
    out.trapezoid_area += (x1 - x0) * (y0 + y1) / 2.0;
  }
  return out;
}

// Share of records where (score >= 0.5) equals the label; ties at the
// threshold classify positive.
inline double accuracy_at_half(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw Error(errc::spec_mismatch, "scores/labels size mismatch");
  if (scores.empty()) return 0.0;
  size_t hits = 0;
  for (size_t i = 0; i < scores.size(); ++i)
    if ((scores[i] >= 0.5 ? 1 : 0) == labels[i]) ++hits;
  return double(hits) / double(scores.size());
}

struct CalibrationBin {
  double mean_score = 0.0;
  double observed_rate = 0.0;
  size_t count = 0;
};

// Equal-frequency bins over the scores.
inline std::vector<CalibrationBin> calibration_table(const std::vector<double>& scores,
                                                     const std::vector<int>& labels,
                                                     int bins = 10) {
  size_t n = scores.size();
  if (labels.size() != n) throw Error(errc::spec_mismatch, "scores/labels size mismatch");
  if (bins < 1 || n < size_t(bins))
    throw Error(errc::too_few_records, "fewer records than calibration bins");
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  std::vector<CalibrationBin> out;
  for (int b = 0; b < bins; ++b) {
    size_t lo = n * size_t(b) / size_t(bins);
    size_t hi = n * size_t(b + 1) / size_t(bins);
    CalibrationBin bin;
    bin.count = hi - lo;
    for (size_t k = lo; k < hi; ++k) {
      bin.mean_score += scores[order[k]];
      bin.observed_rate += labels[order[k]];
    }
    if (bin.count) {
      bin.mean_score /= double(bin.count);
      bin.observed_rate /= double(bin.count);
    }
    out.push_back(bin);
  }
  return out;
}

}  // namespace cohort::stats
