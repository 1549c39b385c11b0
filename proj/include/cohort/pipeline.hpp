#pragma once

#include <zlib.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cohort/census.hpp"
#include "cohort/figures.hpp"
#include "cohort/identity.hpp"
#include "cohort/ingest.hpp"
#include "cohort/missingness.hpp"
#include "cohort/normalise.hpp"
#include "cohort/synth.hpp"

namespace cohort::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* kToolVersion = "cohort 1.0.0";

enum class Stage { INGEST, N1, N1B, N1C_1, N1C_2, N1C_3, MISSINGNESS, SYNTH };

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::INGEST: return "INGEST";
    case Stage::N1: return "N1";
    case Stage::N1B: return "N1B";
    case Stage::N1C_1: return "N1C_1";
    case Stage::N1C_2: return "N1C_2";
    case Stage::N1C_3: return "N1C_3";
    case Stage::MISSINGNESS: return "MISSINGNESS";
    case Stage::SYNTH: return "SYNTH";
  }
  return "?";
}

inline const char* stage_dir_name(Stage s) {
  switch (s) {
    case Stage::INGEST: return "ingest";
    case Stage::N1: return "n1";
    case Stage::N1B: return "n1b";
    case Stage::N1C_1: return "n1c_1";
    case Stage::N1C_2: return "n1c_2";
    case Stage::N1C_3: return "n1c_3";
    case Stage::MISSINGNESS: return "missingness";
    case Stage::SYNTH: return "synth";
  }
  return "?";
}

struct RunManifest {
  Stage stage = Stage::INGEST;
  std::map<std::string, std::string> input_digests;   // path label -> crc32 hex
  std::map<std::string, std::string> config_digests;
  std::map<std::string, std::string> output_digests;  // file name -> crc32 hex
  size_t rows_in = 0;
  size_t rows_out = 0;
  std::string timestamp;
  std::string tool_version = kToolVersion;
  std::vector<std::string> date_formats;  // carried forward from ingest
  std::vector<std::string> notes;
};

struct StageContext {
  fs::path out_root;
  bool force = false;
  uint64_t seed = 42;

  fs::path stage_dir(Stage s) const { return out_root / stage_dir_name(s); }
};

// --- digests, timestamps, manifest I/O --------------------------------------

inline std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::missing_input, "cannot open " + path.string());
  uLong crc = crc32(0L, Z_NULL, 0);
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    crc = crc32(crc, reinterpret_cast<const Bytef*>(buf), uInt(in.gcount()));
  char hex[16];
  std::snprintf(hex, sizeof hex, "%08lx", (unsigned long)crc);
  return hex;
}

inline std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_manifest(const fs::path& dir, const RunManifest& m) {
  json j;
  j["stage"] = to_string(m.stage);
  j["tool_version"] = m.tool_version;
  j["timestamp"] = m.timestamp.empty() ? utc_timestamp() : m.timestamp;
  j["rows_in"] = m.rows_in;
  j["rows_out"] = m.rows_out;
  j["input_digests"] = m.input_digests;
  j["config_digests"] = m.config_digests;
  j["output_digests"] = m.output_digests;
  j["date_formats"] = m.date_formats;
  j["notes"] = m.notes;
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw Error(errc::io_error, "cannot write manifest in " + dir.string());
  out << j.dump(2) << "\n";
}

inline RunManifest read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json", std::ios::binary);
  if (!in)
    throw Error(errc::missing_input, "no manifest in " + dir.string() + "; run the stage first");
  json j;
  in >> j;
  RunManifest m;
  for (int s = 0; s <= int(Stage::SYNTH); ++s)
    if (j.value("stage", "") == to_string(Stage(s))) m.stage = Stage(s);
  m.tool_version = j.value("tool_version", "");
  m.timestamp = j.value("timestamp", "");
  m.rows_in = j.value("rows_in", size_t(0));
  m.rows_out = j.value("rows_out", size_t(0));
  auto read_map = [&](const char* key, std::map<std::string, std::string>& into) {
    if (!j.contains(key)) return;
    for (auto& [k, v] : j[key].items()) into[k] = v.get<std::string>();
  };
  read_map("input_digests", m.input_digests);
  read_map("config_digests", m.config_digests);
  read_map("output_digests", m.output_digests);
  for (auto& v : j.value("date_formats", json::array())) m.date_formats.push_back(v);
  for (auto& v : j.value("notes", json::array())) m.notes.push_back(v);
  return m;
}

// Freeze point: a stage directory with a manifest is immutable. --force
// archives the prior output instead of deleting it.
inline fs::path prepare_stage_dir(const StageContext& ctx, Stage stage) {
  fs::path dir = ctx.stage_dir(stage);
  if (fs::exists(dir / "manifest.json")) {
    if (!ctx.force)
      throw Error(errc::frozen_output,
                  dir.string() + " is frozen; pass --force to archive and re-run");
    int k = 1;
    fs::path archive;
    do {
      archive = dir;
      archive += ".bak" + std::to_string(k++);
    } while (fs::exists(archive));
    fs::rename(dir, archive);
  }
  fs::create_directories(dir);
  return dir;
}

// Verifies that a downstream input still matches the digest its producing
// stage recorded; a tampered or regenerated file refuses to flow onward.
inline fs::path verified_input(const StageContext& ctx, Stage upstream, const std::string& name) {
  fs::path dir = ctx.stage_dir(upstream);
  RunManifest m = read_manifest(dir);
  fs::path file = dir / name;
  auto it = m.output_digests.find(name);
  if (it == m.output_digests.end())
    throw Error(errc::missing_input, name + " is not an output of " + to_string(upstream));
  std::string actual = file_digest(file);
  if (actual != it->second)
    throw Error(errc::stage_failure, file.string() + " digest mismatch (expected " + it->second +
                                         ", found " + actual + "); refusing to proceed");
  return file;
}

inline void digest_outputs(RunManifest& m, const fs::path& dir) {
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (name == "manifest.json") continue;
    m.output_digests[name] = file_digest(entry.path());
  }
}

// --- record (de)serialisation -------------------------------------------------

namespace detail {

inline size_t max_aux(const std::vector<RawStudentRecord>& records) {
  size_t k = 0;
  for (const auto& r : records) k = std::max(k, r.auxiliary_texts.size());
  return k;
}

inline std::vector<std::string> raw_row_header(size_t aux_count) {
  std::vector<std::string> h = {"source_row_index"};
  for (int i = 0; i < kFieldCount; ++i) h.emplace_back(field_name(Field(i)));
  for (size_t a = 0; a < aux_count; ++a) h.push_back("auxiliary_text_" + std::to_string(a + 1));
  return h;
}

inline std::vector<std::string> raw_row_cells(const RawStudentRecord& r, size_t aux_count) {
  std::vector<std::string> row = {std::to_string(r.row_index)};
  for (int i = 0; i < kFieldCount; ++i) row.push_back(r.raw[i]);
  for (size_t a = 0; a < aux_count; ++a)
    row.push_back(a < r.auxiliary_texts.size() ? r.auxiliary_texts[a] : "");
  return row;
}

inline RawStudentRecord parse_raw_row(const csv::Table& t, size_t row,
                                      const std::vector<std::string>& date_formats) {
  RawStudentRecord r;
  r.date_formats = date_formats;
  int idx = t.column_or_throw("source_row_index");
  if (auto v = parse_int(t.rows[row][idx])) r.row_index = size_t(*v);
  for (int i = 0; i < kFieldCount; ++i)
    r.raw[i] = t.rows[row][t.column_or_throw(field_name(Field(i)))];
  for (size_t a = 1;; ++a) {
    int c = t.column("auxiliary_text_" + std::to_string(a));
    if (c < 0) break;
    r.auxiliary_texts.push_back(t.rows[row][c]);
  }
  return r;
}

inline ResolutionStatus status_from_string(const std::string& s) {
  for (ResolutionStatus v : {ResolutionStatus::AUTO_MERGED, ResolutionStatus::AUTO_UNIQUE,
                             ResolutionStatus::NEEDS_REVIEW})
    if (s == to_string(v)) return v;
  throw Error(errc::parse_error, "unknown resolution status '" + s + "'");
}

inline QualityFlag flag_from_string(const std::string& s) {
  if (s == "OK") return QualityFlag::OK;
  if (s == "NEEDS_REVIEW") return QualityFlag::NEEDS_REVIEW;
  throw Error(errc::parse_error, "unknown quality flag '" + s + "'");
}

inline SourceTag source_from_string(const std::string& s) {
  if (s == "RAW_V2") return SourceTag::RAW_V2;
  if (s == "DATA_MISSING") return SourceTag::DATA_MISSING;
  throw Error(errc::parse_error, "unknown source tag '" + s + "'");
}

inline SchoolType type_from_string(const std::string& s) {
  if (auto t = school_type_from_name(s)) return *t;
  throw Error(errc::parse_error, "unknown school type '" + s + "'");
}

inline std::string opt_str(const std::optional<int>& v) {
  return v ? std::to_string(*v) : std::string();
}

inline std::optional<int> opt_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_int(s);
}

}  // namespace detail

inline void write_census_csv(const fs::path& path, const std::vector<CensalRecord>& records) {
  std::vector<RawStudentRecord> raw;
  raw.reserve(records.size());
  for (const auto& r : records) raw.push_back(r.row);
  size_t aux = detail::max_aux(raw);
  csv::Table t;
  t.header = detail::raw_row_header(aux);
  for (const auto& r : records) t.rows.push_back(detail::raw_row_cells(r.row, aux));
  csv::write_file(path.string(), t);
}

inline std::vector<CensalRecord> read_census_csv(const fs::path& path,
                                                 const std::vector<std::string>& date_formats) {
  csv::Table t = csv::read_file(path.string());
  std::vector<CensalRecord> out;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    CensalRecord c;
    c.row = detail::parse_raw_row(t, i, date_formats);
    c.non_null_count = non_null_censal_count(c.row);
    c.source_row_index = c.row.row_index;
    out.push_back(std::move(c));
  }
  return out;
}

inline void write_resolved_csv(const fs::path& path, const std::vector<ResolvedRecord>& records) {
  std::vector<RawStudentRecord> raw;
  for (const auto& r : records) raw.push_back(r.census.row);
  size_t aux = detail::max_aux(raw);
  csv::Table t;
  t.header = detail::raw_row_header(aux);
  t.header.push_back("person_id_canonical");
  t.header.push_back("resolution_status");
  for (const auto& r : records) {
    auto row = detail::raw_row_cells(r.census.row, aux);
    row.push_back(r.person_id_canonical);
    row.push_back(to_string(r.resolution_status));
    t.rows.push_back(std::move(row));
  }
  csv::write_file(path.string(), t);
}

inline std::vector<ResolvedRecord> read_resolved_csv(const fs::path& path,
                                                     const std::vector<std::string>& date_formats) {
  csv::Table t = csv::read_file(path.string());
  int canon = t.column_or_throw("person_id_canonical");
  int status = t.column_or_throw("resolution_status");
  std::vector<ResolvedRecord> out;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    ResolvedRecord r;
    r.census.row = detail::parse_raw_row(t, i, date_formats);
    r.census.non_null_count = non_null_censal_count(r.census.row);
    r.census.source_row_index = r.census.row.row_index;
    r.person_id_canonical = t.rows[i][canon];
    r.resolution_status = detail::status_from_string(t.rows[i][status]);
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_master_csv(const fs::path& path, const std::vector<CleanStudentRecord>& records) {
  std::vector<RawStudentRecord> raw;
  for (const auto& r : records) raw.push_back(r.base.census.row);
  size_t aux = detail::max_aux(raw);
  csv::Table t;
  t.header = detail::raw_row_header(aux);
  for (const char* extra :
       {"person_id_canonical", "resolution_status", "country_birth_id", "province_birth_id",
        "locality_birth_id", "province_residence_id", "locality_residence_id", "school_id",
        "school_type_raw", "school_name_final", "school_type_final", "school_info_source",
        "school_type_source", "geo_flag", "school_flag"})
    t.header.push_back(extra);
  for (const auto& r : records) {
    auto row = detail::raw_row_cells(r.base.census.row, aux);
    row.push_back(r.base.person_id_canonical);
    row.push_back(to_string(r.base.resolution_status));
    row.push_back(detail::opt_str(r.country_birth_id));
    row.push_back(detail::opt_str(r.province_birth_id));
    row.push_back(detail::opt_str(r.locality_birth_id));
    row.push_back(detail::opt_str(r.province_residence_id));
    row.push_back(detail::opt_str(r.locality_residence_id));
    row.push_back(detail::opt_str(r.school_id));
    row.push_back(to_string(r.school_type_raw));
    row.push_back(r.school_name_final.value_or(""));
    row.push_back(to_string(r.school_type_final));
    row.push_back(to_string(r.school_info_source));
    row.push_back(to_string(r.school_type_source));
    row.push_back(to_string(r.geo_flag));
    row.push_back(to_string(r.school_flag));
    t.rows.push_back(std::move(row));
  }
  csv::write_file(path.string(), t);
}

inline std::vector<CleanStudentRecord> read_master_csv(
    const fs::path& path, const std::vector<std::string>& date_formats) {
  csv::Table t = csv::read_file(path.string());
  auto col = [&](const char* n) { return t.column_or_throw(n); };
  std::vector<CleanStudentRecord> out;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    CleanStudentRecord c;
    c.base.census.row = detail::parse_raw_row(t, i, date_formats);
    c.base.census.non_null_count = non_null_censal_count(c.base.census.row);
    c.base.census.source_row_index = c.base.census.row.row_index;
    c.base.person_id_canonical = t.rows[i][col("person_id_canonical")];
    c.base.resolution_status = detail::status_from_string(t.rows[i][col("resolution_status")]);
    c.country_birth_id = detail::opt_int(t.rows[i][col("country_birth_id")]);
    c.province_birth_id = detail::opt_int(t.rows[i][col("province_birth_id")]);
    c.locality_birth_id = detail::opt_int(t.rows[i][col("locality_birth_id")]);
    c.province_residence_id = detail::opt_int(t.rows[i][col("province_residence_id")]);
    c.locality_residence_id = detail::opt_int(t.rows[i][col("locality_residence_id")]);
    c.school_id = detail::opt_int(t.rows[i][col("school_id")]);
    c.school_type_raw = detail::type_from_string(t.rows[i][col("school_type_raw")]);
    std::string name = t.rows[i][col("school_name_final")];
    if (!name.empty()) c.school_name_final = name;
    c.school_type_final = detail::type_from_string(t.rows[i][col("school_type_final")]);
    c.school_info_source = detail::source_from_string(t.rows[i][col("school_info_source")]);
    c.school_type_source = detail::source_from_string(t.rows[i][col("school_type_source")]);
    c.geo_flag = detail::flag_from_string(t.rows[i][col("geo_flag")]);
    c.school_flag = detail::flag_from_string(t.rows[i][col("school_flag")]);
    out.push_back(std::move(c));
  }
  return out;
}

inline void write_reference_csvs(const fs::path& dir, const ReferenceTables& refs) {
  const std::pair<RefKind, const char*> files[] = {
      {RefKind::COUNTRY, "ref_countries_v1.csv"},
      {RefKind::PROVINCE, "ref_provinces_v1.csv"},
      {RefKind::LOCALITY, "ref_localities_v1.csv"},
      {RefKind::SCHOOL, "ref_schools_v1.csv"},
  };
  for (const auto& [kind, name] : files) {
    csv::Table t;
    t.header = {"ref_id", "canonical_label", "parent_ref", "variants"};
    for (const auto& e : refs.entries(kind)) {
      std::string variants;
      for (const auto& v : e.variants) {
        if (!variants.empty()) variants += "|";
        variants += v;
      }
      t.rows.push_back({std::to_string(e.ref_id), e.canonical_label,
                        e.parent_ref ? std::to_string(e.parent_ref) : "", variants});
    }
    csv::write_file((dir / name).string(), t);
  }
}

inline ReferenceTables read_reference_csvs(const fs::path& dir) {
  ReferenceTables refs;
  const std::pair<RefKind, const char*> files[] = {
      {RefKind::COUNTRY, "ref_countries_v1.csv"},
      {RefKind::PROVINCE, "ref_provinces_v1.csv"},
      {RefKind::LOCALITY, "ref_localities_v1.csv"},
      {RefKind::SCHOOL, "ref_schools_v1.csv"},
  };
  for (const auto& [kind, name] : files) {
    csv::Table t = csv::read_file((dir / name).string());
    int id = t.column_or_throw("ref_id");
    int label = t.column_or_throw("canonical_label");
    int parent = t.column_or_throw("parent_ref");
    int variants = t.column_or_throw("variants");
    for (const auto& row : t.rows) {
      ReferenceEntry e;
      e.ref_id = parse_int(row[id]).value_or(0);
      e.canonical_label = row[label];
      e.kind = kind;
      e.parent_ref = parse_int(row[parent]).value_or(0);
      std::string cur;
      for (char c : row[variants] + "|") {
        if (c == '|') {
          if (!cur.empty()) e.variants.insert(cur);
          cur.clear();
        } else {
          cur.push_back(c);
        }
      }
      refs.entries(kind).push_back(std::move(e));
    }
  }
  return refs;
}

// --- stage runners --------------------------------------------------------------

inline RunManifest run_synth(const StageContext& ctx, const synth::SynthConfig& cfg) {
  fs::path dir = prepare_stage_dir(ctx, Stage::SYNTH);
  synth::SynthOutput out = synth::generate(cfg);
  synth::write_bundle(dir, cfg, out);
  RunManifest m;
  m.stage = Stage::SYNTH;
  m.rows_in = 0;
  m.rows_out = out.raw.rows.size();
  m.notes.push_back("true_person_count=" + std::to_string(out.truth.true_person_count));
  m.notes.push_back("duplicate_clusters=" + std::to_string(out.truth.duplicate_clusters.size()));
  digest_outputs(m, dir);
  write_manifest(dir, m);
  return m;
}

inline RunManifest run_ingest(const StageContext& ctx, const fs::path& input,
                              const fs::path& config_path) {
  IngestConfig cfg = load_config(config_path.string());
  fs::path dir = prepare_stage_dir(ctx, Stage::INGEST);
  IngestResult result = ingest_raw(input.string(), cfg);

  size_t aux = detail::max_aux(result.records);
  csv::Table t;
  t.header = detail::raw_row_header(aux);
  for (const auto& r : result.records) t.rows.push_back(detail::raw_row_cells(r, aux));
  csv::write_file((dir / "ingested.csv").string(), t);

  csv::Table rej;
  rej.header = {"row_number", "reason", "raw_line"};
  for (const auto& r : result.rejects)
    rej.rows.push_back({std::to_string(r.row_number), r.reason, r.raw_line});
  csv::write_file((dir / "ingest_rejects.csv").string(), rej);

  RunManifest m;
  m.stage = Stage::INGEST;
  m.rows_in = result.records.size() + result.rejects.size();
  m.rows_out = result.records.size();
  m.input_digests[input.filename().string()] = file_digest(input);
  m.config_digests[config_path.filename().string()] = file_digest(config_path);
  m.date_formats = cfg.date_formats;
  for (const auto& w : result.warnings) m.notes.push_back(w);
  digest_outputs(m, dir);
  write_manifest(dir, m);
  return m;
}

inline RunManifest run_n1(const StageContext& ctx) {
  RunManifest upstream = read_manifest(ctx.stage_dir(Stage::INGEST));
  fs::path input = verified_input(ctx, Stage::INGEST, "ingested.csv");
  std::vector<CensalRecord> rows = read_census_csv(input, upstream.date_formats);
  std::vector<RawStudentRecord> raw;
  raw.reserve(rows.size());
  for (const auto& r : rows) raw.push_back(r.row);

  fs::path dir = prepare_stage_dir(ctx, Stage::N1);
  std::vector<CensalRecord> census = consolidate_persons(raw);
  write_census_csv(dir / "students_n1_census.csv", census);

  CompletenessReport rep = profile_completeness(census);
  char buf[256];
  std::string md = "# Censal consolidation profile\n\n";
  std::snprintf(buf, sizeof buf, "Rows in: %zu. Distinct persons: %zu.\n\n", raw.size(),
                census.size());
  md += buf;
  for (VariableGroup g : {VariableGroup::demographics, VariableGroup::geography,
                          VariableGroup::school, VariableGroup::family_background}) {
    md += std::string("## ") + to_string(g) + "\n\n";
    md += "| field | present | missing | missing % |\n|---|---|---|---|\n";
    for (const auto& p : rep.profiles) {
      if (p.variable_group != g) continue;
      std::snprintf(buf, sizeof buf, "| %s | %zu | %zu | %.2f |\n", p.field.c_str(),
                    p.present_count, p.missing_count, p.missing_pct * 100.0);
      md += buf;
    }
    md += "\n";
  }
  std::snprintf(buf, sizeof buf,
                "Relatively complete records (>= %.0f%% of censal fields): %zu of %zu.\n\n",
                rep.completeness_threshold * 100.0, rep.relatively_complete, rep.population);
  md += buf;
  md += "## Contradiction candidates\n\n";
  if (rep.contradictions.empty()) {
    md += "None detected.\n";
  } else {
    md += "| person_id | description |\n|---|---|\n";
    for (const auto& c : rep.contradictions)
      md += "| " + c.person_id + " | " + c.description + " |\n";
  }
  std::ofstream(dir / "n1_profile.md", std::ios::binary) << md;

  // consolidation is many-to-one by definition; the loss audit is over
  // distinct persons, which the stage must preserve exactly
  std::set<std::string> distinct;
  for (const auto& r : raw) distinct.insert(r.get(Field::person_id));

  RunManifest m;
  m.stage = Stage::N1;
  m.rows_in = distinct.size();
  m.rows_out = census.size();
  m.input_digests["ingested.csv"] = file_digest(input);
  m.date_formats = upstream.date_formats;
  m.notes.push_back("source_rows=" + std::to_string(raw.size()));
  digest_outputs(m, dir);
  write_manifest(dir, m);
  return m;
}

inline RunManifest run_n1b(const StageContext& ctx, double threshold = 0.80) {
  RunManifest upstream = read_manifest(ctx.stage_dir(Stage::N1));
  fs::path input = verified_input(ctx, Stage::N1, "students_n1_census.csv");
  std::vector<CensalRecord> census = read_census_csv(input, upstream.date_formats);

  fs::path dir = prepare_stage_dir(ctx, Stage::N1B);
  std::vector<ConflictCluster> clusters = audit_identities(census, threshold);
  std::vector<AliasEntry> aliases = resolve_canonical(clusters, threshold);
  std::vector<ResolvedRecord> resolved = apply_aliases(census, aliases);

  csv::Table at;
  at.header = {"person_id_original", "person_id_canonical", "resolution_status",
               "evidence_summary"};
  for (const auto& a : aliases)
    at.rows.push_back({a.person_id_original, a.person_id_canonical,
                       to_string(a.resolution_status), a.evidence_summary});
  csv::write_file((dir / "person_id_aliases.csv").string(), at);

  write_resolved_csv(dir / "students_n1_census_resolved.csv", resolved);

  csv::Table queue;
  queue.header = {"cluster_id", "member_ids", "conflict_kind", "evidence"};
  size_t cluster_id = 0;
  std::set<std::string> reviewed;
  for (const auto& a : aliases)
    if (a.resolution_status == ResolutionStatus::NEEDS_REVIEW) reviewed.insert(a.person_id_original);
  char buf[128];
  for (const auto& c : clusters) {
    if (c.kind == ConflictKind::NONE) continue;
    bool needs = false;
    for (const auto& id : c.member_ids)
      if (reviewed.count(id)) needs = true;
    if (!needs) continue;
    std::string members, evidence;
    for (const auto& id : c.member_ids) {
      if (!members.empty()) members += "|";
      members += id;
    }
    for (const auto& ev : c.evidence) {
      if (!evidence.empty()) evidence += "; ";
      std::snprintf(buf, sizeof buf, "%s~%s sim=%.4f %s", ev.id_a.c_str(), ev.id_b.c_str(),
                    ev.similarity, ev.shared_key.c_str());
      evidence += buf;
    }
    queue.rows.push_back({std::to_string(++cluster_id), members, to_string(c.kind), evidence});
  }
  csv::write_file((dir / "n1b_review_queue.csv").string(), queue);

  RunManifest m;
  m.stage = Stage::N1B;
  m.rows_in = census.size();
  m.rows_out = resolved.size();
  m.input_digests["students_n1_census.csv"] = file_digest(input);
  m.date_formats = upstream.date_formats;
  size_t merged = 0;
  for (const auto& a : aliases)
    if (a.resolution_status == ResolutionStatus::AUTO_MERGED) ++merged;
  m.notes.push_back("auto_merged_ids=" + std::to_string(merged));
  m.notes.push_back("review_clusters=" + std::to_string(cluster_id));
  digest_outputs(m, dir);
  write_manifest(dir, m);
  return m;
}

inline NormaliseConfig load_normalise_config(const std::optional<fs::path>& rules_path,
                                             const std::optional<fs::path>& synonyms_path) {
  NormaliseConfig cfg;
  if (rules_path) apply_rules_file(cfg.rules, rules_path->string());
  if (synonyms_path) apply_synonyms_file(cfg, synonyms_path->string());
  return cfg;
}

inline RunManifest run_n1c(const StageContext& ctx, int iteration,
                           const std::optional<fs::path>& rules_path,
                           const std::optional<fs::path>& synonyms_path) {
  if (iteration < 1 || iteration > 3)
    throw Error(errc::invalid_config, "iteration must be 1, 2 or 3");
  Stage stage = iteration == 1 ? Stage::N1C_1 : iteration == 2 ? Stage::N1C_2 : Stage::N1C_3;
  NormaliseConfig cfg = load_normalise_config(rules_path, synonyms_path);

  RunManifest m;
  m.stage = stage;
  if (rules_path) m.config_digests[rules_path->filename().string()] = file_digest(*rules_path);
  if (synonyms_path)
    m.config_digests[synonyms_path->filename().string()] = file_digest(*synonyms_path);

  if (iteration == 1) {
    RunManifest upstream = read_manifest(ctx.stage_dir(Stage::N1B));
    fs::path input = verified_input(ctx, Stage::N1B, "students_n1_census_resolved.csv");
    std::vector<ResolvedRecord> resolved = read_resolved_csv(input, upstream.date_formats);
    fs::path dir = prepare_stage_dir(ctx, stage);
    ReferenceTables refs = build_reference_tables(resolved, cfg);
    std::vector<CleanStudentRecord> v1 = iteration1_merge(resolved, refs, cfg);
    write_reference_csvs(dir, refs);
    write_master_csv(dir / "students_master_clean_v1.csv", v1);
    m.rows_in = resolved.size();
    m.rows_out = v1.size();
    m.input_digests["students_n1_census_resolved.csv"] = file_digest(input);
    m.date_formats = upstream.date_formats;
    digest_outputs(m, dir);
    write_manifest(dir, m);
    return m;
  }

  if (iteration == 2) {
    RunManifest upstream = read_manifest(ctx.stage_dir(Stage::N1C_1));
    fs::path input = verified_input(ctx, Stage::N1C_1, "students_master_clean_v1.csv");
    std::vector<CleanStudentRecord> v1 = read_master_csv(input, upstream.date_formats);
    std::vector<ResolvedRecord> base;
    for (const auto& c : v1) base.push_back(c.base);
    fs::path dir = prepare_stage_dir(ctx, stage);
    // the refined tables are rebuilt under the augmented configuration so
    // synonym-folded labels collapse onto their canonical entries
    ReferenceTables refs2 = build_reference_tables(base, cfg);
    std::vector<CleanStudentRecord> v2 = iteration2_refine(v1, refs2, cfg);
    write_reference_csvs(dir, refs2);
    write_master_csv(dir / "students_master_clean_v2.csv", v2);
    m.rows_in = v1.size();
    m.rows_out = v2.size();
    m.input_digests["students_master_clean_v1.csv"] = file_digest(input);
    m.date_formats = upstream.date_formats;
    digest_outputs(m, dir);
    write_manifest(dir, m);
    return m;
  }

  RunManifest upstream = read_manifest(ctx.stage_dir(Stage::N1C_2));
  fs::path input = verified_input(ctx, Stage::N1C_2, "students_master_clean_v2.csv");
  std::vector<CleanStudentRecord> v2 = read_master_csv(input, upstream.date_formats);
  ReferenceTables refs2 = read_reference_csvs(ctx.stage_dir(Stage::N1C_2));
  fs::path dir = prepare_stage_dir(ctx, stage);
  PartitionResult part = iteration3_partition(v2, refs2, cfg);
  write_master_csv(dir / "students_master_clean_v3.csv", part.records);

  char buf[256];
  std::string md = "# School-information excavation\n\n";
  std::snprintf(buf, sizeof buf,
                "Final partition: %zu records with retained school data (RAW_V2), %zu with "
                "none (DATA_MISSING). The partition is exhaustive and disjoint.\n\n",
                part.raw_v2_count, part.data_missing_count);
  md += buf;
  md += "Auxiliary free-text fields were scanned for school clues. Findings are\n";
  md += "reported for manual follow-up only; no value below was written back.\n\n";
  if (part.findings.empty()) {
    md += "No clues found.\n";
  } else {
    md += "| person_id | source | matched text | kind |\n|---|---|---|---|\n";
    for (const auto& f : part.findings)
      md += "| " + f.person_id_original + " | " + f.source + " | " + f.matched_text + " | " +
            f.match_kind + " |\n";
  }
  std::ofstream(dir / "n1c_excavation_report.md", std::ios::binary) << md;

  m.rows_in = v2.size();
  m.rows_out = part.records.size();
  m.input_digests["students_master_clean_v2.csv"] = file_digest(input);
  m.date_formats = upstream.date_formats;
  m.notes.push_back("raw_v2=" + std::to_string(part.raw_v2_count));
  m.notes.push_back("data_missing=" + std::to_string(part.data_missing_count));
  digest_outputs(m, dir);
  write_manifest(dir, m);
  return m;
}

inline void write_flags_csv(const fs::path& path, const std::vector<FlagRecord>& flags) {
  csv::Table t;
  t.header = {"person_id_canonical", "missing_school_type", "entry_decade", "degree",
              "sex",                 "province_birth",      "country_birth", "locality_birth"};
  for (const auto& f : flags)
    t.rows.push_back({f.person_id_canonical, std::to_string(f.missing_school_type),
                      f.entry_decade, f.degree, f.sex, f.province_birth, f.country_birth,
                      f.locality_birth});
  csv::write_file(path.string(), t);
}

inline RunManifest run_missingness(
    const StageContext& ctx,
    const std::vector<std::string>& predictors = {"decade", "degree", "province_birth"},
    bool numeric_decade = false) {
  RunManifest upstream = read_manifest(ctx.stage_dir(Stage::N1C_3));
  fs::path input = verified_input(ctx, Stage::N1C_3, "students_master_clean_v3.csv");
  std::vector<CleanStudentRecord> v3 = read_master_csv(input, upstream.date_formats);
  ReferenceTables refs = read_reference_csvs(ctx.stage_dir(Stage::N1C_2));

  fs::path dir = prepare_stage_dir(ctx, Stage::MISSINGNESS);
  std::vector<FlagRecord> flags = build_flags(v3, refs);
  write_flags_csv(dir / "n1c_missingness_flags.csv", flags);

  RunManifest m;
  m.stage = Stage::MISSINGNESS;
  m.rows_in = v3.size();
  m.rows_out = flags.size();
  m.input_digests["students_master_clean_v3.csv"] = file_digest(input);
  m.date_formats = upstream.date_formats;

  try {
    MissingnessAnalysis a = analyse_missingness(flags, predictors, numeric_decade);
    std::ofstream(dir / "missingness_report.md", std::ios::binary) << missingness_report(a);
    std::vector<fig::DecadePoint> pts;
    for (const auto& [label, cell] : a.by_decade)
      if (label != "UNDATED" && cell.first)
        pts.push_back({label, double(cell.second) / double(cell.first)});
    if (!pts.empty()) fig::emit_decade_figure(pts, (dir / "fig_missingness_by_decade").string());
    fig::emit_roc_figure(a.roc, (dir / "fig_roc").string());
    char buf[96];
    std::snprintf(buf, sizeof buf, "auc=%.6f accuracy=%.6f missing_rate=%.6f", a.roc.auc,
                  a.accuracy, a.missing_rate);
    m.notes.push_back(buf);
  } catch (const Error& e) {
    switch (e.code()) {
      case errc::too_few_records:
      case errc::single_class:
      case errc::constant_predictor:
      case errc::degenerate_table:
      case errc::zero_marginal: {
        std::string md = "# Missingness forensics\n\nDegenerate analysis: ";
        md += e.what();
        md += "\nNo model or figures were produced for this input.\n";
        std::ofstream(dir / "missingness_report.md", std::ios::binary) << md;
        m.notes.push_back(std::string("degenerate: ") + e.what());
        break;
      }
      default:
        throw;
    }
  }
  digest_outputs(m, dir);
  write_manifest(dir, m);
  return m;
}

struct RunAllInputs {
  fs::path raw_csv;
  fs::path mapping_config;
  std::optional<fs::path> rules;
  std::optional<fs::path> synonyms_base;   // iteration 1
  std::optional<fs::path> synonyms_fixes;  // iterations 2 and 3
};

inline std::vector<RunManifest> run_all(const StageContext& ctx, const RunAllInputs& in) {
  std::vector<RunManifest> out;
  out.push_back(run_ingest(ctx, in.raw_csv, in.mapping_config));
  out.push_back(run_n1(ctx));
  out.push_back(run_n1b(ctx));
  out.push_back(run_n1c(ctx, 1, in.rules, in.synonyms_base));
  out.push_back(run_n1c(ctx, 2, in.rules, in.synonyms_fixes));
  out.push_back(run_n1c(ctx, 3, in.rules, in.synonyms_fixes));
  out.push_back(run_missingness(ctx));

  std::string md = "# Pipeline run summary\n\n";
  md += "| stage | rows in | rows out |\n|---|---|---|\n";
  for (const auto& m : out)
    md += std::string("| ") + to_string(m.stage) + " | " + std::to_string(m.rows_in) + " | " +
          std::to_string(m.rows_out) + " |\n";
  md += "\nReports:\n\n";
  md += "- [consolidation profile](n1/n1_profile.md)\n";
  md += "- [review queue](n1b/n1b_review_queue.csv)\n";
  md += "- [excavation report](n1c_3/n1c_excavation_report.md)\n";
  md += "- [missingness report](missingness/missingness_report.md)\n";
  for (const auto& m : out)
    for (const auto& n : m.notes)
      if (n.rfind("raw_v2=", 0) == 0 || n.rfind("data_missing=", 0) == 0 ||
          n.rfind("auc=", 0) == 0)
        md += "\n" + std::string(to_string(m.stage)) + ": " + n;
  md += "\n";
  std::ofstream(ctx.out_root / "run_summary.md", std::ios::binary) << md;
  return out;
}

}  // namespace cohort::pipeline
