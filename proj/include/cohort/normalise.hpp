#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <string>
#include <unordered_map>
#include <vector>

#include "cohort/config.hpp"
#include "cohort/records.hpp"
#include "cohort/text.hpp"

namespace cohort {

enum class SchoolType {
  STATE_NATIONAL,
  STATE_PROVINCIAL,
  PRIVATE_RELIGIOUS,
  PRIVATE_SECULAR,
  UNKNOWN,
  DATA_MISSING,
};

inline const char* to_string(SchoolType t) {
  switch (t) {
    case SchoolType::STATE_NATIONAL: return "STATE_NATIONAL";
    case SchoolType::STATE_PROVINCIAL: return "STATE_PROVINCIAL";
    case SchoolType::PRIVATE_RELIGIOUS: return "PRIVATE_RELIGIOUS";
    case SchoolType::PRIVATE_SECULAR: return "PRIVATE_SECULAR";
    case SchoolType::UNKNOWN: return "UNKNOWN";
    case SchoolType::DATA_MISSING: return "DATA_MISSING";
  }
  return "?";
}

inline std::optional<SchoolType> school_type_from_name(std::string_view name) {
  for (SchoolType t : {SchoolType::STATE_NATIONAL, SchoolType::STATE_PROVINCIAL,
                       SchoolType::PRIVATE_RELIGIOUS, SchoolType::PRIVATE_SECULAR,
                       SchoolType::UNKNOWN, SchoolType::DATA_MISSING})
    if (name == to_string(t)) return t;
  return std::nullopt;
}

struct SchoolTypeRule {
  int rank = 0;                                      // precedence, lower wins
  SchoolType target = SchoolType::UNKNOWN;
  std::vector<std::vector<std::string>> patterns;    // token sequences, dot-folded
};

inline std::vector<std::string> pattern_tokens(std::string_view pattern) {
  std::vector<std::string> out;
  for (const auto& tok : text::tokenize(text::clean_text(pattern)))
    out.push_back(text::fold_dots(tok));
  return out;
}

inline SchoolTypeRule make_rule(int rank, SchoolType target,
                                const std::vector<std::string>& patterns) {
  SchoolTypeRule r;
  r.rank = rank;
  r.target = target;
  for (const auto& p : patterns) {
    auto toks = pattern_tokens(p);
    if (!toks.empty()) r.patterns.push_back(std::move(toks));
  }
  return r;
}

inline std::vector<SchoolTypeRule> default_school_type_rules() {
  return {
      make_rule(1, SchoolType::STATE_NATIONAL, {"nacional", "enet", "e.n.e.t.", "cens"}),
      make_rule(2, SchoolType::STATE_PROVINCIAL, {"provincial", "e.p.e.t.", "e.e.t."}),
      make_rule(3, SchoolType::PRIVATE_RELIGIOUS,
                {"san", "santo", "santa", "la salle", "sagrado corazon", "nuestra senora",
                 "don bosco", "maria auxiliadora", "inmaculada", "cristo rey"}),
      make_rule(4, SchoolType::PRIVATE_SECULAR, {"instituto", "academia", "privado"}),
  };
}

// Deterministic rule classifier over the cleaned name (stopwords retained).
// Patterns match whole tokens after dot folding ("e.p.e.t." == "epet");
// multiword patterns match consecutive token runs. First rule in rank order
// with any matching pattern wins; no match is UNKNOWN.
inline SchoolType classify_school_type(std::string_view cleaned_name,
                                       const std::vector<SchoolTypeRule>& rules) {
  std::vector<std::string> tokens;
  for (const auto& tok : text::tokenize(cleaned_name)) tokens.push_back(text::fold_dots(tok));

  auto matches = [&](const std::vector<std::string>& pat) {
    if (pat.empty() || pat.size() > tokens.size()) return false;
    for (size_t i = 0; i + pat.size() <= tokens.size(); ++i) {
      bool hit = true;
      for (size_t j = 0; j < pat.size() && hit; ++j) hit = tokens[i + j] == pat[j];
      if (hit) return true;
    }
    return false;
  };

  std::vector<const SchoolTypeRule*> ordered;
  for (const auto& r : rules) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const SchoolTypeRule* a, const SchoolTypeRule* b) { return a->rank < b->rank; });
  for (const auto* r : ordered)
    for (const auto& pat : r->patterns)
      if (matches(pat)) return r->target;
  return SchoolType::UNKNOWN;
}

// Appends rules from a `rules:` section (target: comma-separated patterns),
// ranked after any rules already present so supplementary patterns can only
// catch what the base set left UNKNOWN.
inline void apply_rules_file(std::vector<SchoolTypeRule>& rules, const std::string& path) {
  KvDocument doc = load_kv_document(path);
  int rank = 0;
  for (const auto& r : rules) rank = std::max(rank, r.rank);
  for (const auto* e : doc.in_section("rules")) {
    auto target = school_type_from_name(e->key);
    if (!target || *target == SchoolType::DATA_MISSING)
      throw Error(errc::parse_error, path + ": unknown school type '" + e->key + "'");
    std::vector<std::string> patterns;
    std::string cur;
    for (char c : e->value + ",") {
      if (c == ',') {
        std::string t = trim(cur);
        if (!t.empty()) patterns.push_back(t);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (patterns.empty())
      throw Error(errc::parse_error, path + ": rule for " + e->key + " has no patterns");
    rules.push_back(make_rule(++rank, *target, patterns));
  }
}

enum class RefKind { COUNTRY, PROVINCE, LOCALITY, SCHOOL };

inline const char* to_string(RefKind k) {
  switch (k) {
    case RefKind::COUNTRY: return "COUNTRY";
    case RefKind::PROVINCE: return "PROVINCE";
    case RefKind::LOCALITY: return "LOCALITY";
    case RefKind::SCHOOL: return "SCHOOL";
  }
  return "?";
}

struct ReferenceEntry {
  int ref_id = 0;  // dense per kind, assigned in label order
  std::string canonical_label;
  RefKind kind = RefKind::COUNTRY;
  int parent_ref = 0;  // locality -> province, school -> locality; 0 = none
  std::set<std::string> variants;
};

// Normalisation configuration: stopwords, per-kind synonym folds, optional
// declared vocabularies (values outside them are suspect variants), and the
// school-type rule set. Iteration 2 runs with an augmented copy.
struct NormaliseConfig {
  std::vector<std::string> stopwords = text::default_stopwords();
  std::map<std::string, std::string> country_synonyms;   // cleaned variant -> canonical
  std::map<std::string, std::string> province_synonyms;
  std::map<std::string, std::string> locality_synonyms;
  std::map<std::string, std::string> school_synonyms;
  std::set<std::string> country_vocab;   // empty = accept everything
  std::set<std::string> province_vocab;
  std::vector<SchoolTypeRule> rules = default_school_type_rules();

  const std::map<std::string, std::string>& synonyms(RefKind k) const {
    switch (k) {
      case RefKind::COUNTRY: return country_synonyms;
      case RefKind::PROVINCE: return province_synonyms;
      case RefKind::LOCALITY: return locality_synonyms;
      case RefKind::SCHOOL: return school_synonyms;
    }
    return country_synonyms;
  }

  std::string fold(RefKind k, const std::string& cleaned) const {
    const auto& syn = synonyms(k);
    auto it = syn.find(cleaned);
    return it == syn.end() ? cleaned : it->second;
  }

  // true when the label is either unconstrained or inside the declared vocab
  bool in_vocab(RefKind k, const std::string& label) const {
    if (k == RefKind::COUNTRY && !country_vocab.empty()) return country_vocab.count(label) > 0;
    if (k == RefKind::PROVINCE && !province_vocab.empty()) return province_vocab.count(label) > 0;
    return true;
  }
};

// Merges a synonyms/vocab/stopwords document into the configuration.
// Sections: stopwords (word: <w>), countries/provinces/localities/schools
// (variant: canonical), vocab_countries/vocab_provinces (name: <label>).
inline void apply_synonyms_file(NormaliseConfig& cfg, const std::string& path) {
  KvDocument doc = load_kv_document(path);
  auto merge_syn = [&](const char* section, std::map<std::string, std::string>& into) {
    for (const auto* e : doc.in_section(section)) {
      std::string variant = text::clean_text(e->key);
      std::string canonical = text::clean_text(e->value);
      if (variant.empty() || canonical.empty())
        throw Error(errc::parse_error, path + ": empty synonym in [" + section + "]");
      into[variant] = canonical;
    }
  };
  merge_syn("countries", cfg.country_synonyms);
  merge_syn("provinces", cfg.province_synonyms);
  merge_syn("localities", cfg.locality_synonyms);
  merge_syn("schools", cfg.school_synonyms);
  for (const auto* e : doc.in_section("stopwords")) cfg.stopwords.push_back(e->value);
  for (const auto* e : doc.in_section("vocab_countries"))
    cfg.country_vocab.insert(text::clean_text(e->value));
  for (const auto* e : doc.in_section("vocab_provinces"))
    cfg.province_vocab.insert(text::clean_text(e->value));
}

class ReferenceTables {
 public:
  const std::vector<ReferenceEntry>& entries(RefKind k) const { return tables_[size_t(k)]; }
  std::vector<ReferenceEntry>& entries(RefKind k) { return tables_[size_t(k)]; }

  const ReferenceEntry* by_id(RefKind k, int ref_id) const {
    const auto& t = tables_[size_t(k)];
    if (ref_id < 1 || size_t(ref_id) > t.size()) return nullptr;
    return &t[ref_id - 1];  // dense ids: ref_id == index + 1
  }

  const ReferenceEntry* find_simple(RefKind k, const std::string& label) const {
    for (const auto& e : tables_[size_t(k)])
      if (e.canonical_label == label) return &e;
    return nullptr;
  }

  const ReferenceEntry* find_locality(const std::string& label, int province_ref) const {
    for (const auto& e : entries(RefKind::LOCALITY))
      if (e.canonical_label == label && e.parent_ref == province_ref) return &e;
    return nullptr;
  }

  std::vector<const ReferenceEntry*> find_schools(const std::string& stripped_label) const {
    std::vector<const ReferenceEntry*> out;
    for (const auto& e : entries(RefKind::SCHOOL))
      if (e.canonical_label == stripped_label) out.push_back(&e);
    return out;
  }

 private:
  std::array<std::vector<ReferenceEntry>, 4> tables_;
};

namespace detail {

// value of a geo field after cleaning and synonym folding; empty when absent
inline std::string folded_value(const NormaliseConfig& cfg, RefKind kind,
                                const RawStudentRecord& row, Field f) {
  if (!row.present(f)) return {};
  return cfg.fold(kind, text::clean_text(row.get(f)));
}

inline std::string school_key(const NormaliseConfig& cfg, const std::string& raw) {
  return cfg.fold(RefKind::SCHOOL, text::remove_stopwords(text::clean_text(raw), cfg.stopwords));
}

}  // namespace detail

// Derives the four reference tables from the observed raw text. Entries are
// keyed per kind (localities by name+province, schools by stripped name +
// locality + province); ids are dense per kind, in lexicographic label
// order, so rebuilds from permuted input are identical.
inline ReferenceTables build_reference_tables(const std::vector<ResolvedRecord>& records,
                                              const NormaliseConfig& cfg) {
  ReferenceTables refs;

  // countries and provinces: label -> observed variants
  std::map<std::string, std::set<std::string>> countries, provinces;
  // localities: (label, province label) -> variants
  std::map<std::pair<std::string, std::string>, std::set<std::string>> localities;
  // schools: (stripped key, locality label, province label) -> variants
  std::map<std::tuple<std::string, std::string, std::string>, std::set<std::string>> schools;

  auto note = [](std::map<std::string, std::set<std::string>>& into, const std::string& label,
                 const std::string& raw) {
    if (!label.empty()) into[label].insert(raw);
  };

  for (const auto& rec : records) {
    const RawStudentRecord& row = rec.census.row;
    std::string country = detail::folded_value(cfg, RefKind::COUNTRY, row, Field::country_birth);
    std::string prov_b = detail::folded_value(cfg, RefKind::PROVINCE, row, Field::province_birth);
    std::string prov_r = detail::folded_value(cfg, RefKind::PROVINCE, row, Field::province_residence);
    std::string loc_b = detail::folded_value(cfg, RefKind::LOCALITY, row, Field::locality_birth);
    std::string loc_r = detail::folded_value(cfg, RefKind::LOCALITY, row, Field::locality_residence);

    note(countries, country, row.get(Field::country_birth));
    note(provinces, prov_b, row.get(Field::province_birth));
    note(provinces, prov_r, row.get(Field::province_residence));
    if (!loc_b.empty()) localities[{loc_b, prov_b}].insert(row.get(Field::locality_birth));
    if (!loc_r.empty()) localities[{loc_r, prov_r}].insert(row.get(Field::locality_residence));
  }

  // schools, pass 1: records whose locality scope is known
  std::set<std::string> located_school_keys;
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& rec : records) {
      const RawStudentRecord& row = rec.census.row;
      if (!row.present(Field::school_name)) continue;
      std::string key = detail::school_key(cfg, row.get(Field::school_name));
      if (key.empty()) continue;
      std::string loc = detail::folded_value(cfg, RefKind::LOCALITY, row, Field::locality_residence);
      std::string prov = detail::folded_value(cfg, RefKind::PROVINCE, row, Field::province_residence);
      if (loc.empty()) {
        loc = detail::folded_value(cfg, RefKind::LOCALITY, row, Field::locality_birth);
        prov = detail::folded_value(cfg, RefKind::PROVINCE, row, Field::province_birth);
      }
      bool located = !loc.empty();
      if (pass == 0 && located) {
        schools[{key, loc, prov}].insert(row.get(Field::school_name));
        located_school_keys.insert(key);
      } else if (pass == 1 && !located && !located_school_keys.count(key)) {
        // a school only ever seen without a locality gets one unscoped entry
        schools[{key, "", ""}].insert(row.get(Field::school_name));
      }
    }
  }

  auto fill_simple = [&](RefKind kind, std::map<std::string, std::set<std::string>>& src) {
    int id = 0;
    for (auto& [label, variants] : src) {
      ReferenceEntry e;
      e.ref_id = ++id;
      e.canonical_label = label;
      e.kind = kind;
      e.variants = std::move(variants);
      refs.entries(kind).push_back(std::move(e));
    }
  };
  fill_simple(RefKind::COUNTRY, countries);
  fill_simple(RefKind::PROVINCE, provinces);

  int id = 0;
  for (auto& [key, variants] : localities) {
    ReferenceEntry e;
    e.ref_id = ++id;
    e.canonical_label = key.first;
    e.kind = RefKind::LOCALITY;
    if (const auto* p = refs.find_simple(RefKind::PROVINCE, key.second)) e.parent_ref = p->ref_id;
    e.variants = std::move(variants);
    refs.entries(RefKind::LOCALITY).push_back(std::move(e));
  }
  id = 0;
  for (auto& [key, variants] : schools) {
    ReferenceEntry e;
    e.ref_id = ++id;
    e.canonical_label = std::get<0>(key);
    e.kind = RefKind::SCHOOL;
    const std::string& loc = std::get<1>(key);
    const std::string& prov = std::get<2>(key);
    if (!loc.empty()) {
      if (const auto* p = refs.find_simple(RefKind::PROVINCE, prov)) {
        if (const auto* l = refs.find_locality(loc, p->ref_id)) e.parent_ref = l->ref_id;
      } else if (const auto* l = refs.find_locality(loc, 0)) {
        e.parent_ref = l->ref_id;
      }
    }
    e.variants = std::move(variants);
    refs.entries(RefKind::SCHOOL).push_back(std::move(e));
  }
  return refs;
}

enum class QualityFlag { OK, NEEDS_REVIEW };
enum class SourceTag { RAW_V2, DATA_MISSING };

inline const char* to_string(QualityFlag f) {
  return f == QualityFlag::OK ? "OK" : "NEEDS_REVIEW";
}
inline const char* to_string(SourceTag s) {
  return s == SourceTag::RAW_V2 ? "RAW_V2" : "DATA_MISSING";
}

struct CleanStudentRecord {
  ResolvedRecord base;
  std::optional<int> country_birth_id;
  std::optional<int> province_birth_id;
  std::optional<int> locality_birth_id;
  std::optional<int> province_residence_id;
  std::optional<int> locality_residence_id;
  std::optional<int> school_id;
  SchoolType school_type_raw = SchoolType::DATA_MISSING;
  std::optional<std::string> school_name_final;  // cleaned
  SchoolType school_type_final = SchoolType::DATA_MISSING;
  SourceTag school_info_source = SourceTag::DATA_MISSING;
  SourceTag school_type_source = SourceTag::DATA_MISSING;
  QualityFlag geo_flag = QualityFlag::OK;
  QualityFlag school_flag = QualityFlag::OK;

  const std::string& person_id_original() const { return base.census.person_id(); }
};

namespace detail {

struct GeoResolution {
  std::optional<int> id;
  bool ok = true;  // absent fields stay ok; populated fields must resolve cleanly
};

inline GeoResolution resolve_simple(const NormaliseConfig& cfg, const ReferenceTables& refs,
                                    RefKind kind, const RawStudentRecord& row, Field f) {
  GeoResolution out;
  if (!row.present(f)) return out;
  std::string label = cfg.fold(kind, text::clean_text(row.get(f)));
  const ReferenceEntry* e = refs.find_simple(kind, label);
  if (!e) {
    out.ok = false;
    return out;
  }
  out.id = e->ref_id;
  out.ok = cfg.in_vocab(kind, label);  // suspect variants keep their id but need review
  return out;
}

}  // namespace detail

// One normalisation pass: joins reference ids onto every record, classifies
// school type, and sets the OK / NEEDS_REVIEW quality flags. Iterations 1
// and 2 are this pass under the base and the augmented configuration.
inline std::vector<CleanStudentRecord> normalise_pass(const std::vector<ResolvedRecord>& records,
                                                      const ReferenceTables& refs,
                                                      const NormaliseConfig& cfg) {
  std::vector<CleanStudentRecord> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    const RawStudentRecord& row = rec.census.row;
    CleanStudentRecord c;
    c.base = rec;

    auto country = detail::resolve_simple(cfg, refs, RefKind::COUNTRY, row, Field::country_birth);
    auto prov_b = detail::resolve_simple(cfg, refs, RefKind::PROVINCE, row, Field::province_birth);
    auto prov_r = detail::resolve_simple(cfg, refs, RefKind::PROVINCE, row, Field::province_residence);
    c.country_birth_id = country.id;
    c.province_birth_id = prov_b.id;
    c.province_residence_id = prov_r.id;

    bool geo_ok = country.ok && prov_b.ok && prov_r.ok;

    // a locality resolves only under a cleanly resolved province
    auto resolve_locality = [&](Field loc_field, const detail::GeoResolution& prov,
                                std::optional<int>& id_out) {
      if (!row.present(loc_field)) return;
      if (!prov.id || !prov.ok) {
        geo_ok = false;
        return;
      }
      std::string label = cfg.fold(RefKind::LOCALITY, text::clean_text(row.get(loc_field)));
      const ReferenceEntry* e = refs.find_locality(label, *prov.id);
      if (e) id_out = e->ref_id;
      else geo_ok = false;
    };
    resolve_locality(Field::locality_birth, prov_b, c.locality_birth_id);
    resolve_locality(Field::locality_residence, prov_r, c.locality_residence_id);
    c.geo_flag = geo_ok ? QualityFlag::OK : QualityFlag::NEEDS_REVIEW;

    // school: identity by stopword-stripped key, type from the full name
    if (!row.present(Field::school_name)) {
      c.school_type_raw = SchoolType::DATA_MISSING;
      c.school_type_final = SchoolType::DATA_MISSING;
      c.school_info_source = SourceTag::DATA_MISSING;
      c.school_type_source = SourceTag::DATA_MISSING;
      c.school_flag = QualityFlag::NEEDS_REVIEW;
    } else {
      std::string cleaned = text::clean_text(row.get(Field::school_name));
      c.school_type_raw = classify_school_type(cleaned, cfg.rules);
      c.school_name_final = cleaned;
      c.school_type_final = c.school_type_raw;
      c.school_info_source = SourceTag::RAW_V2;
      c.school_type_source = SourceTag::RAW_V2;

      std::string key = detail::school_key(cfg, row.get(Field::school_name));
      auto candidates = refs.find_schools(key);
      const ReferenceEntry* chosen = nullptr;
      if (candidates.size() == 1) {
        chosen = candidates.front();
      } else if (candidates.size() > 1) {
        // prefer the entry scoped to the record's own locality
        std::optional<int> own_loc = c.locality_residence_id ? c.locality_residence_id
                                                             : c.locality_birth_id;
        if (own_loc) {
          for (const auto* e : candidates)
            if (e->parent_ref == *own_loc) chosen = e;
        }
      }
      if (chosen) {
        c.school_id = chosen->ref_id;
        c.school_flag = QualityFlag::OK;
      } else {
        c.school_flag = QualityFlag::NEEDS_REVIEW;  // ambiguous or unresolvable
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<CleanStudentRecord> iteration1_merge(const std::vector<ResolvedRecord>& records,
                                                        const ReferenceTables& refs,
                                                        const NormaliseConfig& cfg) {
  return normalise_pass(records, refs, cfg);
}

// Iteration 2: re-runs the pass under the augmented configuration and keeps
// the result, enforcing that no flag regresses from OK.
inline std::vector<CleanStudentRecord> iteration2_refine(const std::vector<CleanStudentRecord>& v1,
                                                         const ReferenceTables& refs2,
                                                         const NormaliseConfig& cfg2) {
  std::vector<ResolvedRecord> base;
  base.reserve(v1.size());
  for (const auto& c : v1) base.push_back(c.base);
  std::vector<CleanStudentRecord> v2 = normalise_pass(base, refs2, cfg2);
  for (size_t i = 0; i < v2.size(); ++i) {
    if (v1[i].geo_flag == QualityFlag::OK) v2[i].geo_flag = QualityFlag::OK;
    if (v1[i].school_flag == QualityFlag::OK) v2[i].school_flag = QualityFlag::OK;
  }
  return v2;
}

struct ExcavationFinding {
  std::string person_id_original;
  std::string source;        // which auxiliary field held the clue
  std::string matched_text;  // the matching token run
  std::string match_kind;    // "school_reference" or "type_pattern:<TYPE>"
};

// Read-only scan of the auxiliary free-text fields for anything that looks
// like a school: a known reference entry or a type-rule pattern. Findings go
// to a report; records are never mutated from here.
inline std::vector<ExcavationFinding> excavate_school_clues(const CleanStudentRecord& record,
                                                            const RawStudentRecord& raw,
                                                            const ReferenceTables& refs,
                                                            const NormaliseConfig& cfg) {
  std::vector<ExcavationFinding> findings;
  for (size_t a = 0; a < raw.auxiliary_texts.size(); ++a) {
    const std::string& aux = raw.auxiliary_texts[a];
    if (is_missing_marker(aux)) continue;
    std::string cleaned = text::clean_text(aux);
    std::string source = "auxiliary_text_" + std::to_string(a + 1);

    std::vector<std::string> tokens;
    for (const auto& t : text::tokenize(cleaned)) tokens.push_back(text::fold_dots(t));
    auto run_matches = [&](const std::vector<std::string>& pat) -> std::optional<std::string> {
      if (pat.empty() || pat.size() > tokens.size()) return std::nullopt;
      for (size_t i = 0; i + pat.size() <= tokens.size(); ++i) {
        bool hit = true;
        for (size_t j = 0; j < pat.size() && hit; ++j) hit = tokens[i + j] == pat[j];
        if (hit) {
          std::string text;
          for (size_t j = 0; j < pat.size(); ++j) {
            if (j) text += ' ';
            text += tokens[i + j];
          }
          return text;
        }
      }
      return std::nullopt;
    };

    for (const auto& e : refs.entries(RefKind::SCHOOL)) {
      auto pat = pattern_tokens(e.canonical_label);
      if (auto m = run_matches(pat))
        findings.push_back({record.person_id_original(), source, *m, "school_reference"});
    }
    for (const auto& rule : cfg.rules) {
      for (const auto& pat : rule.patterns) {
        if (auto m = run_matches(pat))
          findings.push_back({record.person_id_original(), source, *m,
                              std::string("type_pattern:") + to_string(rule.target)});
      }
    }
  }
  return findings;
}

struct PartitionResult {
  std::vector<CleanStudentRecord> records;  // v3
  std::vector<ExcavationFinding> findings;
  size_t raw_v2_count = 0;
  size_t data_missing_count = 0;
};

// Iteration 3: exhaustive, disjoint partition into RAW_V2 and DATA_MISSING.
// School fields that are absent, empty, or literal "nan" in the retained raw
// bytes define DATA_MISSING; excavated clues are reported, never adopted.
// No imputation happens anywhere downstream of this point.
inline PartitionResult iteration3_partition(const std::vector<CleanStudentRecord>& v2,
                                            const ReferenceTables& refs,
                                            const NormaliseConfig& cfg) {
  PartitionResult out;
  out.records = v2;
  for (auto& c : out.records) {
    const RawStudentRecord& row = c.base.census.row;
    const std::string& raw_school = row.get(Field::school_name);
    bool missing = is_missing_marker(raw_school);
    if (missing) {
      auto clues = excavate_school_clues(c, row, refs, cfg);
      out.findings.insert(out.findings.end(), clues.begin(), clues.end());
      c.school_name_final.reset();
      c.school_id.reset();
      c.school_type_final = SchoolType::DATA_MISSING;
      c.school_info_source = SourceTag::DATA_MISSING;
      c.school_type_source = SourceTag::DATA_MISSING;
      ++out.data_missing_count;
    } else {
      c.school_name_final = text::clean_text(raw_school);
      c.school_info_source = SourceTag::RAW_V2;
      c.school_type_source = SourceTag::RAW_V2;
      // type carried from v2 (UNKNOWN stays UNKNOWN, never imputed)
      ++out.raw_v2_count;
    }
  }
  return out;
}

}  // namespace cohort
