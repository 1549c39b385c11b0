#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "cohort/records.hpp"

namespace cohort {

// N1: collapse multiple censal rows per person into one representative row.
// Selection: most non-null censal fields, then latest intake date (absent
// sorts earliest), then latest file position. Total and deterministic.
inline std::vector<CensalRecord> consolidate_persons(const std::vector<RawStudentRecord>& records) {
  std::map<std::string, CensalRecord> best;  // ordered by person_id
  for (const auto& r : records) {
    CensalRecord cand;
    cand.row = r;
    cand.non_null_count = non_null_censal_count(r);
    cand.source_row_index = r.row_index;

    auto it = best.find(r.get(Field::person_id));
    if (it == best.end()) {
      best.emplace(r.get(Field::person_id), std::move(cand));
      continue;
    }
    const CensalRecord& cur = it->second;
    auto key = [](const CensalRecord& c) {
      Date intake = c.row.intake_date().value_or(Date{0, 0, 0});
      return std::tuple(c.non_null_count, intake, c.source_row_index);
    };
    if (key(cand) > key(cur)) it->second = std::move(cand);
  }
  std::vector<CensalRecord> out;
  out.reserve(best.size());
  for (auto& [id, rec] : best) out.push_back(std::move(rec));
  return out;
}

enum class VariableGroup { demographics, geography, school, family_background };

inline const char* to_string(VariableGroup g) {
  switch (g) {
    case VariableGroup::demographics: return "demographics";
    case VariableGroup::geography: return "geography";
    case VariableGroup::school: return "school";
    case VariableGroup::family_background: return "family_background";
  }
  return "?";
}

inline VariableGroup variable_group(Field f) {
  switch (f) {
    case Field::country_birth:
    case Field::province_birth:
    case Field::locality_birth:
    case Field::province_residence:
    case Field::locality_residence:
      return VariableGroup::geography;
    case Field::school_name:
    case Field::school_type_raw_hint:
      return VariableGroup::school;
    default:
      return VariableGroup::demographics;
  }
}

struct CompletenessProfile {
  VariableGroup variable_group;
  std::string field;
  size_t present_count = 0;
  size_t missing_count = 0;
  double missing_pct = 0.0;  // fraction in [0,1]
};

struct ContradictionCandidate {
  std::string person_id;
  std::string description;
};

struct CompletenessReport {
  std::vector<CompletenessProfile> profiles;
  std::vector<ContradictionCandidate> contradictions;
  size_t population = 0;
  size_t relatively_complete = 0;  // records with >= threshold censal fields present
  double completeness_threshold = 0.80;
};

inline CompletenessReport profile_completeness(const std::vector<CensalRecord>& records,
                                               double completeness_threshold = 0.80) {
  CompletenessReport rep;
  rep.population = records.size();
  rep.completeness_threshold = completeness_threshold;

  for (int i = 0; i < kFieldCount; ++i) {
    Field f = Field(i);
    if (f == Field::person_id) continue;
    CompletenessProfile p;
    p.variable_group = variable_group(f);
    p.field = std::string(field_name(f));
    for (const auto& r : records)
      r.row.present(f) ? ++p.present_count : ++p.missing_count;
    p.missing_pct = records.empty() ? 0.0 : double(p.missing_count) / double(records.size());
    rep.profiles.push_back(p);
  }
  // auxiliary free-text columns carry the family-background forms
  size_t max_aux = 0;
  for (const auto& r : records) max_aux = std::max(max_aux, r.row.auxiliary_texts.size());
  for (size_t a = 0; a < max_aux; ++a) {
    CompletenessProfile p;
    p.variable_group = VariableGroup::family_background;
    p.field = "auxiliary_text_" + std::to_string(a + 1);
    for (const auto& r : records) {
      bool present = a < r.row.auxiliary_texts.size() && !is_missing_marker(r.row.auxiliary_texts[a]);
      present ? ++p.present_count : ++p.missing_count;
    }
    p.missing_pct = records.empty() ? 0.0 : double(p.missing_count) / double(records.size());
    rep.profiles.push_back(p);
  }

  const int censal_fields = kFieldCount - 1;
  for (const auto& r : records) {
    if (r.row.present(Field::province_birth) && !r.row.present(Field::country_birth))
      rep.contradictions.push_back(
          {r.person_id(), "province_birth present but country_birth absent"});
    if (double(r.non_null_count) >= completeness_threshold * censal_fields)
      ++rep.relatively_complete;
  }
  return rep;
}

}  // namespace cohort
