#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cohort/normalise.hpp"
#include "cohort/stats.hpp"

namespace cohort {

// One analysis row per final census record: the missingness outcome plus the
// covariates the forensics stage conditions on. Categorical values are the
// canonical labels; absent values get an explicit level rather than a drop.
struct FlagRecord {
  std::string person_id_canonical;
  int missing_school_type = 0;          // 1 = school info landed in DATA_MISSING
  std::string entry_decade;             // "1980", "1990", ... or "UNDATED"
  std::string degree;
  std::string sex;
  std::string province_birth;
  std::string country_birth;
  std::string locality_birth;
};

namespace detail {

inline std::string label_or(const ReferenceTables& refs, RefKind kind, std::optional<int> id,
                            const char* fallback = "MISSING") {
  if (id)
    if (const ReferenceEntry* e = refs.by_id(kind, *id)) return e->canonical_label;
  return fallback;
}

inline std::string categorical(const RawStudentRecord& row, Field f,
                               const char* fallback = "MISSING") {
  if (!row.present(f)) return fallback;
  return text::clean_text(row.get(f));
}

}  // namespace detail

// Flags are derived only from the final partition and the retained raw
// bytes; prevalence equals the DATA_MISSING share by construction.
inline std::vector<FlagRecord> build_flags(const std::vector<CleanStudentRecord>& v3,
                                           const ReferenceTables& refs) {
  std::vector<FlagRecord> out;
  out.reserve(v3.size());
  for (const auto& c : v3) {
    const RawStudentRecord& row = c.base.census.row;
    FlagRecord f;
    f.person_id_canonical = c.base.person_id_canonical;
    f.missing_school_type = c.school_info_source == SourceTag::DATA_MISSING ? 1 : 0;
    if (auto ey = row.entry_year())
      f.entry_decade = std::to_string((*ey / 10) * 10);
    else
      f.entry_decade = "UNDATED";
    f.degree = detail::categorical(row, Field::degree);
    f.sex = detail::categorical(row, Field::sex);
    f.province_birth = detail::label_or(refs, RefKind::PROVINCE, c.province_birth_id);
    f.country_birth = detail::label_or(refs, RefKind::COUNTRY, c.country_birth_id);
    f.locality_birth = detail::label_or(refs, RefKind::LOCALITY, c.locality_birth_id);
    out.push_back(std::move(f));
  }
  return out;
}

using CovariateAccessor = const std::string& (*)(const FlagRecord&);

inline const std::string& covariate_decade(const FlagRecord& f) { return f.entry_decade; }
inline const std::string& covariate_degree(const FlagRecord& f) { return f.degree; }
inline const std::string& covariate_sex(const FlagRecord& f) { return f.sex; }
inline const std::string& covariate_province(const FlagRecord& f) { return f.province_birth; }
inline const std::string& covariate_country(const FlagRecord& f) { return f.country_birth; }

// covariate level x {present, missing} counts, levels in sorted order
inline stats::ContingencyTable crosstab(const std::vector<FlagRecord>& flags,
                                        CovariateAccessor covariate) {
  std::map<std::string, std::pair<long long, long long>> counts;
  for (const auto& f : flags) {
    auto& cell = counts[covariate(f)];
    f.missing_school_type ? ++cell.second : ++cell.first;
  }
  stats::ContingencyTable t;
  t.col_labels = {"present", "missing"};
  for (const auto& [level, cell] : counts) {
    t.row_labels.push_back(level);
    t.counts.push_back({cell.first, cell.second});
  }
  return t;
}

// --- predictor encoding -------------------------------------------------------

struct EncodedDesign {
  std::vector<std::string> names;
  std::vector<std::vector<double>> X;  // one row per flag record
};

namespace detail {

// One-hot encoding with the first sorted level as the reference. Levels seen
// fewer than min_count times are pooled into OTHER so the design stays full
// rank on sparse categories.
inline void append_one_hot(EncodedDesign& design, const std::vector<FlagRecord>& flags,
                           CovariateAccessor covariate, const std::string& prefix,
                           size_t min_count = 5) {
  std::map<std::string, size_t> level_counts;
  for (const auto& f : flags) ++level_counts[covariate(f)];
  auto pooled = [&](const std::string& level) -> std::string {
    return level_counts[level] < min_count ? "OTHER" : level;
  };
  std::set<std::string> levels;
  for (const auto& [level, n] : level_counts) levels.insert(pooled(level));
  if (levels.size() < 2) return;  // nothing to encode

  std::vector<std::string> dummies(std::next(levels.begin()), levels.end());
  size_t base = design.names.size();
  for (const auto& d : dummies) design.names.push_back(prefix + "=" + d);
  for (size_t i = 0; i < flags.size(); ++i) {
    std::string level = pooled(covariate(flags[i]));
    design.X[i].resize(base + dummies.size(), 0.0);
    for (size_t d = 0; d < dummies.size(); ++d)
      if (level == dummies[d]) design.X[i][base + d] = 1.0;
  }
}

inline void append_numeric_decade(EncodedDesign& design, const std::vector<FlagRecord>& flags,
                                  const std::string& name) {
  size_t base = design.names.size();
  design.names.push_back(name);
  // UNDATED maps to the mean of the dated values so it carries no signal
  double sum = 0.0;
  size_t dated = 0;
  for (const auto& f : flags)
    if (f.entry_decade != "UNDATED") {
      sum += std::stod(f.entry_decade);
      ++dated;
    }
  double fill = dated ? sum / double(dated) : 0.0;
  for (size_t i = 0; i < flags.size(); ++i) {
    design.X[i].resize(base + 1, 0.0);
    design.X[i][base] =
        flags[i].entry_decade == "UNDATED" ? fill : std::stod(flags[i].entry_decade);
  }
}

}  // namespace detail

// Default design: entry decade, degree and province of birth, one-hot.
// Table-2 design: numeric entry decade plus one-hot sex and province.
enum class DesignKind { DEFAULT_ONE_HOT, TABLE2 };

inline CovariateAccessor covariate_by_name(const std::string& name) {
  if (name == "decade" || name == "entry_decade") return covariate_decade;
  if (name == "degree") return covariate_degree;
  if (name == "sex") return covariate_sex;
  if (name == "province_birth" || name == "province") return covariate_province;
  if (name == "country_birth" || name == "country") return covariate_country;
  throw Error(errc::invalid_config, "unknown predictor '" + name + "'");
}

// numeric_decade applies to the decade term only; every other predictor is
// categorical and always one-hot encoded
inline EncodedDesign encode_predictors(const std::vector<FlagRecord>& flags,
                                       const std::vector<std::string>& predictors,
                                       bool numeric_decade) {
  EncodedDesign design;
  design.X.assign(flags.size(), {});
  for (const auto& name : predictors) {
    CovariateAccessor acc = covariate_by_name(name);
    if (acc == covariate_decade && numeric_decade)
      detail::append_numeric_decade(design, flags, "entry_decade");
    else if (acc == covariate_decade)
      detail::append_one_hot(design, flags, acc, "entry_decade");
    else
      detail::append_one_hot(design, flags, acc, name);
  }
  return design;
}

inline EncodedDesign encode_predictors(const std::vector<FlagRecord>& flags, DesignKind kind) {
  if (kind == DesignKind::DEFAULT_ONE_HOT)
    return encode_predictors(flags, {"decade", "degree", "province_birth"}, false);
  return encode_predictors(flags, {"decade", "sex", "province_birth"}, true);
}

// --- the full forensics pass ----------------------------------------------------

struct CovariateTest {
  std::string covariate;
  stats::ContingencyTable table;
  stats::ChiSquareResult chi;
};

struct MissingnessAnalysis {
  size_t population = 0;
  size_t missing_count = 0;
  double missing_rate = 0.0;
  std::vector<CovariateTest> tests;
  EncodedDesign design;
  stats::LogisticModel model;
  std::vector<double> scores;
  std::vector<int> labels;
  stats::RocCurve roc;
  double accuracy = 0.0;
  std::vector<stats::CalibrationBin> calibration;
  // decade label -> (total, missing), sorted; UNDATED last when present
  std::vector<std::pair<std::string, std::pair<size_t, size_t>>> by_decade;
};

inline MissingnessAnalysis analyse_missingness(const std::vector<FlagRecord>& flags,
                                               const std::vector<std::string>& predictors,
                                               bool numeric_decade, int calibration_bins = 10) {
  if (flags.size() < 2) throw Error(errc::too_few_records, "too few records for forensics");
  MissingnessAnalysis a;
  a.population = flags.size();
  for (const auto& f : flags) a.missing_count += size_t(f.missing_school_type);
  a.missing_rate = double(a.missing_count) / double(a.population);

  const std::vector<std::pair<const char*, CovariateAccessor>> covariates = {
      {"entry_decade", covariate_decade},
      {"degree", covariate_degree},
      {"sex", covariate_sex},
      {"province_birth", covariate_province},
      {"country_birth", covariate_country},
  };
  for (const auto& [name, acc] : covariates) {
    CovariateTest t;
    t.covariate = name;
    t.table = crosstab(flags, acc);
    if (t.table.rows() < 2) continue;  // single-level covariate has no test
    bool zero_marginal = false;
    for (const auto& row : t.table.counts)
      if (row[0] + row[1] == 0) zero_marginal = true;
    long long col0 = 0, col1 = 0;
    for (const auto& row : t.table.counts) {
      col0 += row[0];
      col1 += row[1];
    }
    if (zero_marginal || col0 == 0 || col1 == 0) continue;
    t.chi = stats::chi_square_test(t.table);
    a.tests.push_back(std::move(t));
  }

  a.design = encode_predictors(flags, predictors, numeric_decade);
  a.labels.reserve(flags.size());
  for (const auto& f : flags) a.labels.push_back(f.missing_school_type);
  a.model = stats::fit_logistic(a.design.X, a.labels, a.design.names);
  a.scores = stats::predict_proba(a.model, a.design.X);
  a.roc = stats::roc_auc(a.scores, a.labels);
  a.accuracy = stats::accuracy_at_half(a.scores, a.labels);
  a.calibration = stats::calibration_table(a.scores, a.labels, calibration_bins);

  std::map<std::string, std::pair<size_t, size_t>> dec;
  for (const auto& f : flags) {
    auto& cell = dec[f.entry_decade];
    ++cell.first;
    cell.second += size_t(f.missing_school_type);
  }
  for (auto& [label, cell] : dec)
    if (label != "UNDATED") a.by_decade.emplace_back(label, cell);
  if (dec.count("UNDATED")) a.by_decade.emplace_back("UNDATED", dec["UNDATED"]);
  return a;
}

inline MissingnessAnalysis analyse_missingness(const std::vector<FlagRecord>& flags,
                                               DesignKind kind = DesignKind::DEFAULT_ONE_HOT,
                                               int calibration_bins = 10) {
  if (kind == DesignKind::DEFAULT_ONE_HOT)
    return analyse_missingness(flags, {"decade", "degree", "province_birth"}, false,
                               calibration_bins);
  return analyse_missingness(flags, {"decade", "sex", "province_birth"}, true, calibration_bins);
}

inline std::string format_p_value(double p) {
  if (p > 0.0 && p < 1e-300) return "<1e-300";
  if (p == 0.0) return "<1e-300";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", p);
  return buf;
}

inline std::string missingness_report(const MissingnessAnalysis& a) {
  char buf[256];
  std::string r = "# Missingness forensics\n\n";
  std::snprintf(buf, sizeof buf,
                "Population: %zu records. Missing school information: %zu (%.2f%%).\n\n",
                a.population, a.missing_count, a.missing_rate * 100.0);
  r += buf;

  r += "## Association tests\n\n";
  r += "| covariate | levels | chi-square | df | p |\n";
  r += "|---|---|---|---|---|\n";
  for (const auto& t : a.tests) {
    std::snprintf(buf, sizeof buf, "| %s | %zu | %.4f | %d | %s |\n", t.covariate.c_str(),
                  t.table.rows(), t.chi.statistic, t.chi.degrees_of_freedom,
                  format_p_value(t.chi.p_value).c_str());
    r += buf;
  }

  r += "\n## Logistic model\n\n";
  std::snprintf(buf, sizeof buf, "Converged: %s after %d iterations. Log-likelihood: %.4f.\n\n",
                a.model.converged ? "yes" : "no", a.model.iterations, a.model.log_likelihood);
  r += buf;
  r += "| term | coefficient | odds ratio |\n|---|---|---|\n";
  std::snprintf(buf, sizeof buf, "| intercept | %.6f | %.6g |\n", a.model.coefficients[0],
                std::exp(a.model.coefficients[0]));
  r += buf;
  for (size_t j = 0; j < a.model.predictor_names.size(); ++j) {
    std::snprintf(buf, sizeof buf, "| %s | %.6f | %.6g |\n", a.model.predictor_names[j].c_str(),
                  a.model.coefficients[j + 1], std::exp(a.model.coefficients[j + 1]));
    r += buf;
  }

  r += "\n## Discrimination and calibration\n\n";
  std::snprintf(buf, sizeof buf, "AUC: %.4f. Accuracy at 0.5: %.4f (%.2f%%).\n\n", a.roc.auc,
                a.accuracy, a.accuracy * 100.0);
  r += buf;
  r += "| bin | n | mean score | observed rate |\n|---|---|---|---|\n";
  for (size_t b = 0; b < a.calibration.size(); ++b) {
    std::snprintf(buf, sizeof buf, "| %zu | %zu | %.4f | %.4f |\n", b + 1, a.calibration[b].count,
                  a.calibration[b].mean_score, a.calibration[b].observed_rate);
    r += buf;
  }

  r += "\n## Missingness by entry decade\n\n";
  r += "| decade | records | missing | rate |\n|---|---|---|---|\n";
  for (const auto& [label, cell] : a.by_decade) {
    std::snprintf(buf, sizeof buf, "| %s | %zu | %zu | %.4f |\n", label.c_str(), cell.first,
                  cell.second, cell.first ? double(cell.second) / double(cell.first) : 0.0);
    r += buf;
  }
  return r;
}

}  // namespace cohort
