#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cohort/common.hpp"

namespace cohort {

// Fixed censal vocabulary. auxiliary_text is handled separately because it
// is the only repeatable logical field.
enum class Field {
  person_id,
  national_doc,
  full_name,
  birth_date,
  sex,
  civil_status,
  country_birth,
  province_birth,
  locality_birth,
  province_residence,
  locality_residence,
  school_name,
  school_type_raw_hint,
  intake_date,
  entry_year,
  degree,
};

inline constexpr int kFieldCount = 16;

inline constexpr std::array<std::string_view, kFieldCount> kFieldNames = {
    "person_id",         "national_doc",      "full_name",          "birth_date",
    "sex",               "civil_status",      "country_birth",      "province_birth",
    "locality_birth",    "province_residence", "locality_residence", "school_name",
    "school_type_raw_hint", "intake_date",    "entry_year",         "degree",
};

inline std::string_view field_name(Field f) { return kFieldNames[size_t(f)]; }

inline std::optional<Field> field_from_name(std::string_view name) {
  for (int i = 0; i < kFieldCount; ++i)
    if (kFieldNames[i] == name) return Field(i);
  return std::nullopt;
}

// One raw row per person-appearance. Textual values keep source bytes
// verbatim; typed accessors interpret them lazily.
struct RawStudentRecord {
  size_t row_index = 0;  // 0-based data-row position in the source file
  std::array<std::string, kFieldCount> raw{};
  std::vector<std::string> auxiliary_texts;
  std::vector<std::string> date_formats;  // ingest options, needed to type dates

  const std::string& get(Field f) const { return raw[size_t(f)]; }
  bool present(Field f) const { return !is_missing_marker(raw[size_t(f)]); }

  std::optional<Date> birth_date() const { return date(Field::birth_date); }
  std::optional<Date> intake_date() const { return date(Field::intake_date); }
  std::optional<int> entry_year() const {
    if (!present(Field::entry_year)) return std::nullopt;
    return parse_int(get(Field::entry_year));
  }
  std::optional<int> birth_year() const {
    auto d = birth_date();
    if (d) return d->year;
    return std::nullopt;
  }

 private:
  std::optional<Date> date(Field f) const {
    if (!present(f)) return std::nullopt;
    if (date_formats.empty()) return parse_date(trim(get(f)));
    return parse_date(trim(get(f)), date_formats);
  }
};

// Number of censal fields that are present (fixed vocabulary minus the
// identifier; auxiliary texts never count).
inline int non_null_censal_count(const RawStudentRecord& r) {
  int n = 0;
  for (int i = 0; i < kFieldCount; ++i)
    if (Field(i) != Field::person_id && r.present(Field(i))) ++n;
  return n;
}

// One representative row per person after N1 consolidation.
struct CensalRecord {
  RawStudentRecord row;
  int non_null_count = 0;
  size_t source_row_index = 0;

  const std::string& person_id() const { return row.get(Field::person_id); }
};

enum class ResolutionStatus { AUTO_MERGED, AUTO_UNIQUE, NEEDS_REVIEW };

inline const char* to_string(ResolutionStatus s) {
  switch (s) {
    case ResolutionStatus::AUTO_MERGED: return "AUTO_MERGED";
    case ResolutionStatus::AUTO_UNIQUE: return "AUTO_UNIQUE";
    case ResolutionStatus::NEEDS_REVIEW: return "NEEDS_REVIEW";
  }
  return "?";
}

struct AliasEntry {
  std::string person_id_original;
  std::string person_id_canonical;
  ResolutionStatus resolution_status = ResolutionStatus::AUTO_UNIQUE;
  std::string evidence_summary;
};

// Census row carrying its canonical identity.
struct ResolvedRecord {
  CensalRecord census;
  std::string person_id_canonical;
  ResolutionStatus resolution_status = ResolutionStatus::AUTO_UNIQUE;
};

}  // namespace cohort
