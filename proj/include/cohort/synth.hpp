#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "cohort/csv.hpp"
#include "cohort/identity.hpp"
#include "cohort/rng.hpp"
#include "cohort/text.hpp"

namespace cohort::synth {

struct SynthConfig {
  size_t population_size = 1000;            // distinct person IDs emitted
  uint64_t seed = 1;
  std::map<int, double> decade_mix = {{1980, 0.25}, {1990, 0.25}, {2000, 0.25}, {2010, 0.25}};
  std::map<int, double> missing_rate_by_decade = {
      {1980, 0.0}, {1990, 0.0}, {2000, 0.0}, {2010, 0.0}};
  // optional split: minority-province records draw from this map instead
  std::map<int, double> minority_missing_rate_by_decade;
  double majority_share = 1.0;   // probability mass on the first province
  double duplicate_rate = 0.0;   // per person, chance of planting a conflict cluster
  double name_typo_rate = 1.0;   // chance a planted clone's name carries a typo
  double variant_rate = 0.0;     // chance of a misspelt province plant
  double clue_plant_rate = 0.0;  // chance a missing-school row gets an auxiliary clue
  double extra_row_rate = 0.0;   // chance of an extra degraded censal row per person
  std::vector<std::pair<std::string, double>> degree_mix = {{"ingenieria civil", 1.0}};
};

inline void validate(const SynthConfig& c) {
  auto frac = [](double v) { return v >= 0.0 && v <= 1.0; };
  double mix = 0.0;
  for (const auto& [decade, share] : c.decade_mix) {
    if (!frac(share)) throw Error(errc::invalid_config, "decade_mix share out of [0,1]");
    if (!c.missing_rate_by_decade.count(decade))
      throw Error(errc::invalid_config, "no missing rate for decade " + std::to_string(decade));
    mix += share;
  }
  if (std::fabs(mix - 1.0) > 1e-9)
    throw Error(errc::invalid_config, "decade_mix does not sum to 1");
  for (const auto& [decade, rate] : c.missing_rate_by_decade)
    if (!frac(rate)) throw Error(errc::invalid_config, "missing rate out of [0,1]");
  for (const auto& [decade, rate] : c.minority_missing_rate_by_decade)
    if (!frac(rate)) throw Error(errc::invalid_config, "missing rate out of [0,1]");
  if (!frac(c.majority_share) || !frac(c.duplicate_rate) || !frac(c.name_typo_rate) ||
      !frac(c.variant_rate) || !frac(c.clue_plant_rate) || !frac(c.extra_row_rate))
    throw Error(errc::invalid_config, "rate out of [0,1]");
  if (c.degree_mix.empty()) throw Error(errc::invalid_config, "degree_mix is empty");
}

// Decade mix and missing rates tuned so the realised split reproduces the
// target 56.6 / 43.4 population partition with a near-stepwise decade
// gradient (1980s ~99%, 2010s ~0.01%) and a strong province effect:
//   E[missing] = sum_d mix_d * (0.7 * majority_d + 0.3 * minority_d) ~ 0.4343
inline SynthConfig paper_shape(uint64_t seed = 42) {
  SynthConfig c;
  c.population_size = 24133;
  c.seed = seed;
  c.decade_mix = {{1980, 0.25}, {1990, 0.26}, {2000, 0.24}, {2010, 0.25}};
  c.missing_rate_by_decade = {{1980, 0.9999}, {1990, 0.9975}, {2000, 0.0025}, {2010, 0.0001}};
  c.minority_missing_rate_by_decade = {
      {1980, 0.982}, {1990, 0.0474}, {2000, 0.0003}, {2010, 0.0001}};
  c.majority_share = 0.70;
  c.duplicate_rate = 0.01;
  c.name_typo_rate = 1.0;
  c.variant_rate = 0.22;
  c.clue_plant_rate = 0.0;
  c.extra_row_rate = 0.15;
  c.degree_mix = {{"abogacia", 0.2},
                  {"arquitectura", 0.2},
                  {"contador publico", 0.2},
                  {"ingenieria civil", 0.2},
                  {"medicina", 0.2}};
  return c;
}

struct DuplicateCluster {
  std::vector<std::string> ids;  // sorted ascending
  ConflictKind kind = ConflictKind::NONE;
  bool expect_merge = false;
  std::string expected_canonical;  // set when expect_merge
};

struct GroundTruth {
  size_t true_person_count = 0;
  std::vector<DuplicateCluster> duplicate_clusters;
  std::map<std::string, std::string> true_school_type;  // person_id -> type label
  std::map<std::string, int> true_missing;              // person_id -> 0/1
  size_t planted_variants = 0;
  size_t planted_clues = 0;
  size_t extra_censal_rows = 0;
};

struct SynthOutput {
  csv::Table raw;  // source-shaped register, ready for ingest
  GroundTruth truth;
};

namespace lex {

struct Province {
  const char* canonical;  // cleaned label
  const char* display;    // raw spelling as the register would carry it
  const char* variant;    // planted misspelling, folds to a different label
  std::vector<const char*> localities;
};

inline const std::vector<Province>& provinces() {
  static const std::vector<Province> p = {
      {"tucuman", "Tucumán", "Tucumen",
       {"San Miguel de Tucumán", "Tafí Viejo", "Yerba Buena"}},
      {"catamarca", "Catamarca", "Catamarce", {"San Fernando del Valle", "Belén"}},
      {"chaco", "Chaco", "Chacco", {"Resistencia", "Sáenz Peña"}},
      {"cordoba", "Córdoba", "Cordova", {"Córdoba Capital", "Río Cuarto"}},
      {"jujuy", "Jujuy", "Jujui", {"San Salvador de Jujuy", "Palpalá"}},
      {"la rioja", "La Rioja", "La Rioje", {"La Rioja Capital", "Chilecito"}},
      {"salta", "Salta", "Saltta", {"Salta Capital", "Orán"}},
      {"santiago del estero", "Santiago del Estero", "Santiago del Estro",
       {"Santiago Capital", "La Banda"}},
  };
  return p;
}

struct School {
  const char* base_name;
  const char* true_type;
};

inline const std::vector<School>& schools() {
  static const std::vector<School> s = {
      {"Escuela Nacional Sarmiento", "STATE_NATIONAL"},
      {"E.N.E.T.", "STATE_NATIONAL"},
      {"CENS", "STATE_NATIONAL"},
      {"Colegio Nacional del Centro", "STATE_NATIONAL"},
      {"Escuela Provincial de Comercio", "STATE_PROVINCIAL"},
      {"E.P.E.T.", "STATE_PROVINCIAL"},
      {"E.E.T. Obispo Colombres", "STATE_PROVINCIAL"},
      {"Colegio San Martin", "PRIVATE_RELIGIOUS"},
      {"Colegio La Salle", "PRIVATE_RELIGIOUS"},
      {"Sagrado Corazon", "PRIVATE_RELIGIOUS"},
      {"Nuestra Señora del Valle", "PRIVATE_RELIGIOUS"},
      {"Instituto Don Bosco", "PRIVATE_RELIGIOUS"},
      {"Instituto Moderno", "PRIVATE_SECULAR"},
      {"Academia Belgrano", "PRIVATE_SECULAR"},
      {"Colegio Privado del Norte", "PRIVATE_SECULAR"},
      {"Liceo del Sur", "UNKNOWN"},
      {"Bachillerato Humanista", "UNKNOWN"},
  };
  return s;
}

inline const std::vector<const char*>& given_names() {
  static const std::vector<const char*> n = {
      "José",    "María",   "Ramón",  "Nicolás", "Carlos", "Lucía",  "Martín",
      "Silvia",  "Andrés",  "Paula",  "Federico", "Elena",  "Gonzalo", "Carmen",
      "Ignacio", "Victoria", "Sergio", "Adriana", "Hernán", "Beatriz",
  };
  return n;
}

inline const std::vector<const char*>& surnames() {
  static const std::vector<const char*> n = {
      "Gutiérrez", "Fernández", "García Ruiz", "Pereyra", "Núñez Soto", "Ibáñez",
      "Villalba",  "Carrizo",   "Mansilla",    "Quiroga", "Sánchez",    "Medina",
      "Figueroa",  "Herrera",   "Palacios",    "Bustamante", "Cabrera", "Moyano",
      "Ledesma",   "Romano",    "Valdez",      "Ocampo",  "Barrios",    "Toledo",
  };
  return n;
}

inline const std::vector<const char*>& clue_templates() {
  static const std::vector<const char*> c = {
      "egresado enet 2",
      "ex alumno colegio san martin",
      "titulo secundario e.p.e.t. segun legajo",
      "certificado del sagrado corazon adjunto",
  };
  return c;
}

}  // namespace lex

namespace detail {

// categorical draw by integer thresholds over cumulative shares
template <typename T>
inline const T& pick_weighted(Rng& rng, const std::vector<std::pair<T, double>>& mix) {
  uint64_t draw = rng.next() >> 11;  // 53 bits
  double cum = 0.0;
  for (const auto& [value, share] : mix) {
    cum += share;
    if (draw < uint64_t(cum * 9007199254740992.0)) return value;
  }
  return mix.back().first;
}

inline std::string two(int v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

// One ASCII substitution away from the input, never at position 0, so the
// cleaned similarity of realistic names stays above the merge threshold.
inline std::string typo(Rng& rng, const std::string& name) {
  for (int attempt = 0; attempt < 16; ++attempt) {
    size_t i = 1 + rng.below(name.size() > 1 ? name.size() - 1 : 1);
    char c = name[i];
    if (c >= 'a' && c <= 'z') {
      std::string out = name;
      out[i] = c == 'x' ? 'q' : 'x';
      return out;
    }
    if (c >= 'A' && c <= 'Z') {
      std::string out = name;
      out[i] = c == 'X' ? 'Q' : 'X';
      return out;
    }
  }
  return name;
}

}  // namespace detail

inline const std::vector<std::string>& raw_header() {
  static const std::vector<std::string> h = {
      "nro_inscripcion", "dni",      "apellido_nombre", "fecha_nac",    "sexo",
      "estado_civil",    "pais_nac", "prov_nac",        "loc_nac",      "prov_res",
      "loc_res",         "establecimiento", "tipo_estab", "fecha_ingreso", "anio_ingreso",
      "carrera",         "observaciones"};
  return h;
}

// Deterministic generation: one register row per person, plus planted
// duplicate clusters (same-DNI clones, no-DNI twins, ID collisions) and
// degraded repeat rows, all recorded in the ground truth. The ID budget is
// population_size; collision rows reuse an ID, the other plants consume one.
inline SynthOutput generate(const SynthConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  rng = rng.derive("synth-population");

  std::vector<std::pair<int, double>> decade_mix(cfg.decade_mix.begin(), cfg.decade_mix.end());
  std::vector<std::pair<size_t, double>> province_mix;
  const auto& provinces = lex::provinces();
  province_mix.emplace_back(0, cfg.majority_share);
  for (size_t p = 1; p < provinces.size(); ++p)
    province_mix.emplace_back(p, (1.0 - cfg.majority_share) / double(provinces.size() - 1));

  SynthOutput out;
  out.raw.header = raw_header();

  size_t remaining = cfg.population_size;
  size_t entity = 0;
  size_t next_id = 0;
  auto make_id = [&]() { return std::to_string(100000 + next_id++); };

  const char* missing_markers[3] = {"", "nan", "NULL"};

  while (remaining > 0) {
    --remaining;
    ++entity;
    std::string id = make_id();

    int decade = detail::pick_weighted(rng, decade_mix);
    size_t prov_idx = detail::pick_weighted(rng, province_mix);
    const lex::Province& prov = provinces[prov_idx];
    size_t loc_idx = rng.below(prov.localities.size());
    bool minority = prov_idx != 0;

    double rate = cfg.missing_rate_by_decade.at(decade);
    if (minority && cfg.minority_missing_rate_by_decade.count(decade))
      rate = cfg.minority_missing_rate_by_decade.at(decade);
    bool missing = rng.chance(rate);

    int entry_year = decade + int(rng.below(10));
    int birth_year = entry_year - 18 - int(rng.below(5));
    std::string birth_date = std::to_string(birth_year) + "-" +
                             detail::two(1 + int(rng.below(12))) + "-" +
                             detail::two(1 + int(rng.below(28)));
    std::string intake = detail::two(1 + int(rng.below(28))) + "/" +
                         detail::two(1 + int(rng.below(12))) + "/" + std::to_string(entry_year);
    // two surnames keep exact full-name collisions rare, so accidental
    // name-birth edges cannot contaminate planted document clusters
    size_t sur_a = rng.below(lex::surnames().size());
    size_t sur_b = rng.below(lex::surnames().size() - 1);
    if (sur_b >= sur_a) ++sur_b;
    std::string name = std::string(lex::given_names()[rng.below(lex::given_names().size())]) +
                       " " + lex::surnames()[sur_a] + " " + lex::surnames()[sur_b];
    std::string dni = std::to_string(20000000 + entity);
    std::string sex = rng.chance(0.5) ? "F" : "M";
    std::string civil = rng.chance(0.9) ? "Soltero/a" : "Casado/a";
    std::string degree = detail::pick_weighted(rng, cfg.degree_mix);

    bool variant = rng.chance(cfg.variant_rate);
    if (variant) ++out.truth.planted_variants;
    std::string prov_raw = variant ? prov.variant : prov.display;
    std::string locality = prov.localities[loc_idx];

    std::string school, school_type;
    if (missing) {
      school = missing_markers[rng.below(3)];
      school_type = "DATA_MISSING";
    } else {
      const lex::School& s = lex::schools()[rng.below(lex::schools().size())];
      school = std::string(s.base_name) + " Nro " +
               std::to_string(prov_idx * 4 + loc_idx + 1);
      school_type = s.true_type;
    }
    std::string note;
    if (missing && rng.chance(cfg.clue_plant_rate)) {
      note = lex::clue_templates()[rng.below(lex::clue_templates().size())];
      ++out.truth.planted_clues;
    }

    auto emit = [&](const std::string& row_id, const std::string& row_dni,
                    const std::string& row_name, const std::string& row_birth,
                    const std::string& row_civil, const std::string& row_loc_birth,
                    const std::string& row_note) {
      out.raw.rows.push_back({row_id, row_dni, row_name, row_birth, sex, row_civil, "Argentina",
                              prov_raw, row_loc_birth, prov_raw, locality, school, "", intake,
                              std::to_string(entry_year), degree, row_note});
    };
    emit(id, dni, name, birth_date, civil, locality, note);
    out.truth.true_school_type[id] = school_type;
    out.truth.true_missing[id] = missing ? 1 : 0;

    if (rng.chance(cfg.extra_row_rate)) {
      // degraded repeat: strictly fewer populated fields, so consolidation
      // keeps the full row no matter the file order
      emit(id, dni, name, birth_date, "", "", "");
      ++out.truth.extra_censal_rows;
    }

    if (!rng.chance(cfg.duplicate_rate)) continue;
    uint64_t family = rng.below(10);
    if (family < 7 && remaining > 0) {
      // same-DNI clone under a new ID, name one typo away
      --remaining;
      std::string clone_id = make_id();
      std::string clone_name = rng.chance(cfg.name_typo_rate) ? detail::typo(rng, name) : name;
      std::string keep = id;
      emit(clone_id, dni, clone_name, birth_date, civil, locality, "");
      out.truth.true_school_type[clone_id] = school_type;
      out.truth.true_missing[clone_id] = missing ? 1 : 0;
      out.truth.duplicate_clusters.push_back(
          {{keep, clone_id}, ConflictKind::DNI_DUPLICATE, true, keep});
    } else if (family < 9 && remaining > 0) {
      // name-birth twin with no document: flagged, never merged
      --remaining;
      std::string twin_id = make_id();
      std::string twin_name = rng.chance(cfg.name_typo_rate) ? detail::typo(rng, name) : name;
      emit(twin_id, "", twin_name, birth_date, civil, locality, "");
      out.truth.true_school_type[twin_id] = school_type;
      out.truth.true_missing[twin_id] = missing ? 1 : 0;
      out.truth.duplicate_clusters.push_back(
          {{id, twin_id}, ConflictKind::NAME_BIRTH_MATCH, false, ""});
    } else if (family >= 9) {
      // ID collision: a second, unrelated person under the same ID, degraded
      // so the original row wins consolidation deterministically
      std::string other_name = std::string(lex::given_names()[rng.below(lex::given_names().size())]) +
                               " " + lex::surnames()[rng.below(lex::surnames().size())];
      std::string other_dni = std::to_string(30000000 + entity);
      emit(id, other_dni, other_name, birth_date, "", "", "");
      out.truth.duplicate_clusters.push_back({{id}, ConflictKind::ID_COLLISION, false, ""});
    }
  }
  out.truth.true_person_count = entity;
  return out;
}

inline csv::Table ground_truth_table(const GroundTruth& truth) {
  csv::Table t;
  t.header = {"person_id", "cluster_kind", "expect_merge", "expected_canonical",
              "true_school_type", "true_missing"};
  std::map<std::string, const DuplicateCluster*> cluster_of;
  for (const auto& c : truth.duplicate_clusters)
    for (const auto& id : c.ids) cluster_of[id] = &c;
  for (const auto& [id, type] : truth.true_school_type) {
    const DuplicateCluster* c = cluster_of.count(id) ? cluster_of[id] : nullptr;
    t.rows.push_back({id, c ? to_string(c->kind) : "", c && c->expect_merge ? "1" : "0",
                      c ? c->expected_canonical : "", type,
                      std::to_string(truth.true_missing.at(id))});
  }
  return t;
}

// --- companion configuration documents -----------------------------------------

inline std::string field_mapping_config() {
  std::string s = "fields:\n";
  const char* logical[] = {"person_id",      "national_doc",    "full_name",
                           "birth_date",     "sex",             "civil_status",
                           "country_birth",  "province_birth",  "locality_birth",
                           "province_residence", "locality_residence", "school_name",
                           "school_type_raw_hint", "intake_date", "entry_year",
                           "degree",         "auxiliary_text"};
  const auto& header = raw_header();
  for (size_t i = 0; i < header.size(); ++i)
    s += "  " + std::string(logical[i]) + ": " + header[i] + "\n";
  s += "\noptions:\n  delimiter: \",\"\n  date_formats: Y-M-D, D/M/Y\n";
  return s;
}

// iteration-1 document: declared vocabularies only, so planted misspellings
// surface as NEEDS_REVIEW
inline std::string normalise_base_config() {
  std::string s = "vocab_countries:\n  name: argentina\n\nvocab_provinces:\n";
  for (const auto& p : lex::provinces()) s += "  name: " + std::string(p.canonical) + "\n";
  return s;
}

// iteration-2 document: the same vocabularies plus the synonym corrections
// that fold every planted variant back onto its canonical label
inline std::string normalise_fixes_config() {
  std::string s = normalise_base_config();
  s += "\nprovinces:\n";
  for (const auto& p : lex::provinces())
    s += "  " + text::clean_text(p.variant) + ": " + std::string(p.canonical) + "\n";
  return s;
}

inline std::string school_rules_config() {
  return "rules:\n  PRIVATE_SECULAR: politecnico\n";
}

// Writes the full bundle: register, ground truth, and the matching configs.
inline void write_bundle(const std::filesystem::path& dir, const SynthConfig& cfg,
                         const SynthOutput& out) {
  std::filesystem::create_directories(dir);
  csv::write_file((dir / "synthetic_raw.csv").string(), out.raw);
  csv::write_file((dir / "ground_truth.csv").string(), ground_truth_table(out.truth));
  auto dump = [&](const char* name, const std::string& content) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error(errc::io_error, std::string("cannot write ") + name);
    f << content;
  };
  dump("field_mapping.conf", field_mapping_config());
  dump("normalise_base.conf", normalise_base_config());
  dump("normalise_fixes.conf", normalise_fixes_config());
  dump("school_rules.conf", school_rules_config());
  char buf[160];
  std::string preset;
  std::snprintf(buf, sizeof buf, "population_size: %zu\nseed: %llu\n", cfg.population_size,
                (unsigned long long)cfg.seed);
  preset += buf;
  std::snprintf(buf, sizeof buf,
                "majority_share: %.4f\nduplicate_rate: %.4f\nvariant_rate: %.4f\n"
                "extra_row_rate: %.4f\n",
                cfg.majority_share, cfg.duplicate_rate, cfg.variant_rate, cfg.extra_row_rate);
  preset += buf;
  preset += "# decade: mix, majority missing rate, minority missing rate\n";
  preset += "# expected overall missing = sum(mix * blended rate); the mix and the\n";
  preset += "# near-stepwise rates are tuned jointly so that value lands at 0.434\n";
  for (const auto& [decade, mix] : cfg.decade_mix) {
    double minority = cfg.minority_missing_rate_by_decade.count(decade)
                          ? cfg.minority_missing_rate_by_decade.at(decade)
                          : cfg.missing_rate_by_decade.at(decade);
    std::snprintf(buf, sizeof buf, "decade_%d: %.4f, %.6f, %.6f\n", decade, mix,
                  cfg.missing_rate_by_decade.at(decade), minority);
    preset += buf;
  }
  dump("preset.conf", preset);
}

}  // namespace cohort::synth
