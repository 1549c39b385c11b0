#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "cohort/normalise.hpp"
#include "cohort/rng.hpp"
#include "cohort/text.hpp"

using namespace cohort;
namespace fs = std::filesystem;

namespace {

fs::path write_tmp(const std::string& name, const std::string& content) {
  fs::path p = fs::temp_directory_path() / "cohort_normalise_tests";
  fs::create_directories(p);
  p /= name;
  std::ofstream f(p, std::ios::binary);
  f << content;
  return p;
}

ResolvedRecord make_record(const std::string& id,
                           std::initializer_list<std::pair<Field, std::string>> fields,
                           std::vector<std::string> aux = {}) {
  RawStudentRecord r;
  r.raw[size_t(Field::person_id)] = id;
  for (const auto& [f, v] : fields) r.raw[size_t(f)] = v;
  r.auxiliary_texts = std::move(aux);
  ResolvedRecord out;
  out.census.row = std::move(r);
  out.person_id_canonical = id;
  return out;
}

SchoolType classify(const std::string& raw_name,
                    const std::vector<SchoolTypeRule>& rules = default_school_type_rules()) {
  return classify_school_type(text::clean_text(raw_name), rules);
}

}  // namespace

TEST_CASE("school type classifier golden suite") {
  using ST = SchoolType;
  const std::pair<const char*, ST> golden[] = {
      // national markers outrank everything else
      {"Escuela Nacional Sarmiento", ST::STATE_NATIONAL},
      {"Colegio Nacional del Centro", ST::STATE_NATIONAL},
      {"E.N.E.T. Nro 2", ST::STATE_NATIONAL},
      {"ENET 1", ST::STATE_NATIONAL},
      {"CENS 451", ST::STATE_NATIONAL},
      {"Instituto Nacional", ST::STATE_NATIONAL},       // nacional beats instituto
      {"Colegio Nacional San Martin", ST::STATE_NATIONAL},
      // provincial
      {"Escuela Provincial de Comercio", ST::STATE_PROVINCIAL},
      {"E.P.E.T. Nro 7", ST::STATE_PROVINCIAL},
      {"EPET 7", ST::STATE_PROVINCIAL},                 // dot folding
      {"e.e.t. obispo colombres", ST::STATE_PROVINCIAL},
      {"Escuela Provincial San Jose", ST::STATE_PROVINCIAL},
      // religious
      {"Colegio San Martin", ST::PRIVATE_RELIGIOUS},
      {"Santa Rosa", ST::PRIVATE_RELIGIOUS},
      {"Santo Tomas", ST::PRIVATE_RELIGIOUS},
      {"Colegio La Salle", ST::PRIVATE_RELIGIOUS},
      {"Sagrado Corazón", ST::PRIVATE_RELIGIOUS},
      {"Nuestra Señora del Valle", ST::PRIVATE_RELIGIOUS},
      {"Instituto Don Bosco", ST::PRIVATE_RELIGIOUS},   // don bosco beats instituto
      {"Maria Auxiliadora", ST::PRIVATE_RELIGIOUS},
      {"Colegio Inmaculada Concepcion", ST::PRIVATE_RELIGIOUS},
      {"Cristo Rey", ST::PRIVATE_RELIGIOUS},
      {"Instituto Santa Rosa", ST::PRIVATE_RELIGIOUS},
      // secular private
      {"Instituto Moderno", ST::PRIVATE_SECULAR},
      {"Academia Belgrano", ST::PRIVATE_SECULAR},
      {"Colegio Privado del Norte", ST::PRIVATE_SECULAR},
      // whole-token matching: no substring false positives
      {"Colegio Sanidad", ST::UNKNOWN},                 // "san" only as a whole token
      {"Escuela Sansinena", ST::UNKNOWN},
      {"Colegio Censal", ST::UNKNOWN},                  // "cens" only as a whole token
      {"Liceo del Sur", ST::UNKNOWN},
      {"Bachillerato Humanista", ST::UNKNOWN},
      {"", ST::UNKNOWN},
      // multiword patterns need the consecutive run
      {"La Escuela Salle", ST::UNKNOWN},
      {"Don Academia Bosco", ST::PRIVATE_SECULAR},      // "academia" hits, split "don bosco" does not
  };
  for (const auto& [name, want] : golden) {
    INFO(name);
    CHECK(classify(name) == want);
  }
}

TEST_CASE("classification is invariant under rule declaration order") {
  auto rules = default_school_type_rules();
  std::vector<std::string> names = {"Instituto Nacional", "E.P.E.T. Nro 7", "Colegio San Martin",
                                    "Instituto Moderno", "Academia Santa Fe", "CENS 3"};
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto shuffled = rules;
    for (size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    for (const auto& n : names) CHECK(classify(n, shuffled) == classify(n, rules));
  }
}

TEST_CASE("rules file appends lower-precedence rules") {
  auto rules = default_school_type_rules();
  auto p = write_tmp("rules.conf", "rules:\n  PRIVATE_SECULAR: politecnico, liceo moderno\n");
  apply_rules_file(rules, p.string());
  CHECK(classify("Politecnico del Norte", rules) == SchoolType::PRIVATE_SECULAR);
  CHECK(classify("Liceo Moderno", rules) == SchoolType::PRIVATE_SECULAR);
  // the new rule cannot override the base set
  CHECK(classify("Politecnico Nacional", rules) == SchoolType::STATE_NATIONAL);

  auto bad = write_tmp("rules_bad.conf", "rules:\n  NOT_A_TYPE: foo\n");
  CHECK_THROWS_AS(apply_rules_file(rules, bad.string()), Error);
  auto missing = write_tmp("rules_empty.conf", "rules:\n  PRIVATE_SECULAR:  ,  \n");
  CHECK_THROWS_AS(apply_rules_file(rules, missing.string()), Error);
}

TEST_CASE("synonyms file merges folds, stopwords and vocabularies") {
  NormaliseConfig cfg;
  auto p = write_tmp("syn.conf",
                     "provinces:\n  tucumen: tucuman\n"
                     "vocab_provinces:\n  name: tucuman\n  name: salta\n"
                     "stopwords:\n  word: liceo\n");
  apply_synonyms_file(cfg, p.string());
  CHECK(cfg.fold(RefKind::PROVINCE, "tucumen") == "tucuman");
  CHECK(cfg.fold(RefKind::PROVINCE, "salta") == "salta");
  CHECK(cfg.in_vocab(RefKind::PROVINCE, "tucuman"));
  CHECK(!cfg.in_vocab(RefKind::PROVINCE, "cordoba"));
  CHECK(std::count(cfg.stopwords.begin(), cfg.stopwords.end(), "liceo") == 1);

  auto bad = write_tmp("syn_bad.conf", "provinces:\n  tucumen:  \n");
  CHECK_THROWS_AS(apply_synonyms_file(cfg, bad.string()), Error);
}

TEST_CASE("reference tables: dense ids in label order, permutation-stable") {
  std::vector<ResolvedRecord> recs = {
      make_record("1", {{Field::country_birth, "Argentina"},
                        {Field::province_birth, "Tucumán"},
                        {Field::locality_birth, "Yerba Buena"},
                        {Field::province_residence, "Salta"},
                        {Field::locality_residence, "Salta Capital"},
                        {Field::school_name, "Colegio San Martin Nro 1"}}),
      make_record("2", {{Field::country_birth, "ARGENTINA"},
                        {Field::province_birth, "Salta"},
                        {Field::province_residence, "Tucumán"},
                        {Field::locality_residence, "Yerba Buena"},
                        {Field::school_name, "E.P.E.T. Nro 7"}}),
      make_record("3", {{Field::province_residence, "Chaco"},
                        {Field::locality_residence, "Resistencia"}}),
  };
  NormaliseConfig cfg;
  auto refs = build_reference_tables(recs, cfg);

  const auto& countries = refs.entries(RefKind::COUNTRY);
  REQUIRE(countries.size() == 1);  // case variants fold to one label
  CHECK(countries[0].canonical_label == "argentina");
  CHECK(countries[0].ref_id == 1);
  CHECK(countries[0].variants.size() == 2);

  const auto& provinces = refs.entries(RefKind::PROVINCE);
  REQUIRE(provinces.size() == 3);
  CHECK(provinces[0].canonical_label == "chaco");  // lexicographic ids
  CHECK(provinces[1].canonical_label == "salta");
  CHECK(provinces[2].canonical_label == "tucuman");
  for (size_t i = 0; i < provinces.size(); ++i) CHECK(provinces[i].ref_id == int(i + 1));

  // localities are keyed by (name, province)
  const auto* tuc = refs.find_simple(RefKind::PROVINCE, "tucuman");
  REQUIRE(tuc != nullptr);
  CHECK(refs.find_locality("yerba buena", tuc->ref_id) != nullptr);
  CHECK(refs.find_locality("yerba buena", provinces[0].ref_id) == nullptr);

  // rebuild from permuted input is identical
  std::vector<ResolvedRecord> permuted = {recs[2], recs[0], recs[1]};
  auto refs2 = build_reference_tables(permuted, cfg);
  for (RefKind k : {RefKind::COUNTRY, RefKind::PROVINCE, RefKind::LOCALITY, RefKind::SCHOOL}) {
    const auto& a = refs.entries(k);
    const auto& b = refs2.entries(k);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].ref_id == b[i].ref_id);
      CHECK(a[i].canonical_label == b[i].canonical_label);
      CHECK(a[i].parent_ref == b[i].parent_ref);
      CHECK(a[i].variants == b[i].variants);
    }
  }
}

TEST_CASE("two-pass school scoping: located entries absorb unlocated sightings") {
  std::vector<ResolvedRecord> recs = {
      make_record("1", {{Field::province_residence, "Salta"},
                        {Field::locality_residence, "Salta Capital"},
                        {Field::school_name, "Colegio La Salle"}}),
      make_record("2", {{Field::school_name, "Colegio La Salle"}}),  // no locality anywhere
      make_record("3", {{Field::school_name, "Academia Flotante"}}),  // only ever unlocated
  };
  NormaliseConfig cfg;
  auto refs = build_reference_tables(recs, cfg);
  // "la salle" appears once, scoped; the unlocated sighting does not spawn a twin
  CHECK(refs.find_schools("la salle").size() == 1);
  CHECK(refs.find_schools("la salle")[0]->parent_ref != 0);
  // the never-located school gets one unscoped entry
  REQUIRE(refs.find_schools("academia flotante").size() == 1);
  CHECK(refs.find_schools("academia flotante")[0]->parent_ref == 0);
}

TEST_CASE("out-of-vocab provinces keep their id but need review, fixed by synonyms") {
  std::vector<ResolvedRecord> recs = {
      make_record("1", {{Field::country_birth, "Argentina"}, {Field::province_birth, "Tucumán"}}),
      make_record("2", {{Field::country_birth, "Argentina"}, {Field::province_birth, "Tucumen"}}),
  };
  NormaliseConfig base;
  base.province_vocab = {"tucuman"};
  base.country_vocab = {"argentina"};
  auto refs1 = build_reference_tables(recs, base);
  auto v1 = iteration1_merge(recs, refs1, base);
  CHECK(v1[0].geo_flag == QualityFlag::OK);
  CHECK(v1[1].geo_flag == QualityFlag::NEEDS_REVIEW);  // suspect variant
  CHECK(v1[1].province_birth_id.has_value());          // but still resolvable

  NormaliseConfig fixed = base;
  fixed.province_synonyms["tucumen"] = "tucuman";
  auto refs2 = build_reference_tables(recs, fixed);
  auto v2 = iteration2_refine(v1, refs2, fixed);
  CHECK(v2[1].geo_flag == QualityFlag::OK);
  CHECK(v2[0].province_birth_id == v2[1].province_birth_id);  // folded onto one entry
  // refinement never regresses an OK flag
  CHECK(v2[0].geo_flag == QualityFlag::OK);
}

TEST_CASE("locality under an unresolved province needs review") {
  std::vector<ResolvedRecord> recs = {
      make_record("1", {{Field::province_birth, "Tucumán"}, {Field::locality_birth, "Yerba Buena"}}),
      make_record("2", {{Field::province_birth, "Tucumen"}, {Field::locality_birth, "Yerba Buena"}}),
  };
  NormaliseConfig cfg;
  cfg.province_vocab = {"tucuman"};
  auto refs = build_reference_tables(recs, cfg);
  auto v1 = iteration1_merge(recs, refs, cfg);
  CHECK(v1[0].geo_flag == QualityFlag::OK);
  CHECK(v1[1].geo_flag == QualityFlag::NEEDS_REVIEW);
}

TEST_CASE("iteration 3 partitions exhaustively and never imputes") {
  std::vector<ResolvedRecord> recs = {
      make_record("1", {{Field::school_name, "E.N.E.T. Nro 2"}}),
      make_record("2", {{Field::school_name, "nan"}}, {"egresado enet 2"}),
      make_record("3", {{Field::school_name, ""}}),
      make_record("4", {{Field::school_name, "NULL"}}),
      make_record("5", {{Field::school_name, "Liceo del Sur"}}),
  };
  NormaliseConfig cfg;
  auto refs = build_reference_tables(recs, cfg);
  auto v1 = iteration1_merge(recs, refs, cfg);
  auto part = iteration3_partition(v1, refs, cfg);

  CHECK(part.raw_v2_count == 2);
  CHECK(part.data_missing_count == 3);
  CHECK(part.raw_v2_count + part.data_missing_count == recs.size());
  for (const auto& c : part.records) {
    bool missing = c.school_info_source == SourceTag::DATA_MISSING;
    CHECK(missing == (c.school_type_source == SourceTag::DATA_MISSING));
    if (missing) {
      CHECK(!c.school_name_final);
      CHECK(!c.school_id);
      CHECK(c.school_type_final == SchoolType::DATA_MISSING);
    } else {
      CHECK(c.school_name_final.has_value());
      CHECK(c.school_type_final != SchoolType::DATA_MISSING);
    }
  }
  // UNKNOWN survives on the RAW_V2 side: typed but unclassifiable is not missing
  CHECK(part.records[4].school_type_final == SchoolType::UNKNOWN);
  CHECK(part.records[4].school_info_source == SourceTag::RAW_V2);

  // the planted clue is found and reported, not adopted
  bool found = false;
  for (const auto& f : part.findings)
    if (f.person_id_original == "2" && f.matched_text == "enet" &&
        f.match_kind == "type_pattern:STATE_NATIONAL")
      found = true;
  CHECK(found);
  CHECK(part.records[1].school_info_source == SourceTag::DATA_MISSING);
  CHECK(part.records[1].school_type_final == SchoolType::DATA_MISSING);
}

TEST_CASE("excavation also recognises known reference schools in free text") {
  std::vector<ResolvedRecord> recs = {
      make_record("1", {{Field::province_residence, "Salta"},
                        {Field::locality_residence, "Salta Capital"},
                        {Field::school_name, "Colegio San Martin"}}),
      make_record("2", {{Field::school_name, "nan"}}, {"ex alumno colegio san martin"}),
  };
  NormaliseConfig cfg;
  auto refs = build_reference_tables(recs, cfg);
  auto v1 = iteration1_merge(recs, refs, cfg);
  auto findings = excavate_school_clues(v1[1], recs[1].census.row, refs, cfg);
  bool ref_hit = false;
  for (const auto& f : findings)
    if (f.match_kind == "school_reference" && f.source == "auxiliary_text_1") ref_hit = true;
  CHECK(ref_hit);
}

TEST_CASE("referential integrity: every assigned id exists in its table") {
  std::vector<ResolvedRecord> recs;
  Rng rng(27);
  const char* provs[] = {"Tucumán", "Salta", "Chaco"};
  const char* locs[] = {"Centro", "Norte"};
  const char* schools[] = {"E.N.E.T. Nro 1", "Colegio San Martin", "nan", ""};
  for (int i = 0; i < 200; ++i) {
    auto r = make_record(std::to_string(i), {});
    auto& raw = r.census.row.raw;
    if (rng.chance(0.9)) raw[size_t(Field::country_birth)] = "Argentina";
    if (rng.chance(0.8)) raw[size_t(Field::province_birth)] = provs[rng.below(3)];
    if (rng.chance(0.6)) raw[size_t(Field::locality_birth)] = locs[rng.below(2)];
    if (rng.chance(0.8)) raw[size_t(Field::province_residence)] = provs[rng.below(3)];
    if (rng.chance(0.6)) raw[size_t(Field::locality_residence)] = locs[rng.below(2)];
    raw[size_t(Field::school_name)] = schools[rng.below(4)];
    recs.push_back(std::move(r));
  }
  NormaliseConfig cfg;
  auto refs = build_reference_tables(recs, cfg);
  auto v1 = iteration1_merge(recs, refs, cfg);
  auto part = iteration3_partition(v1, refs, cfg);
  for (const auto& c : part.records) {
    auto check_ref = [&](RefKind k, const std::optional<int>& id) {
      if (id) CHECK(refs.by_id(k, *id) != nullptr);
    };
    check_ref(RefKind::COUNTRY, c.country_birth_id);
    check_ref(RefKind::PROVINCE, c.province_birth_id);
    check_ref(RefKind::PROVINCE, c.province_residence_id);
    check_ref(RefKind::LOCALITY, c.locality_birth_id);
    check_ref(RefKind::LOCALITY, c.locality_residence_id);
    check_ref(RefKind::SCHOOL, c.school_id);
    // locality parents point at real provinces
    if (c.locality_birth_id) {
      const auto* loc = refs.by_id(RefKind::LOCALITY, *c.locality_birth_id);
      if (loc->parent_ref) CHECK(refs.by_id(RefKind::PROVINCE, loc->parent_ref) != nullptr);
    }
  }
}
