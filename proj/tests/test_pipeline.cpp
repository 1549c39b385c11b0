#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "cohort/pipeline.hpp"

using namespace cohort;
namespace pl = cohort::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "cohort_pipeline_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

pl::StageContext ctx_at(const fs::path& root, bool force = false) {
  pl::StageContext ctx;
  ctx.out_root = root;
  ctx.force = force;
  ctx.seed = 7;
  return ctx;
}

synth::SynthConfig small_preset(uint64_t seed = 7) {
  synth::SynthConfig cfg = synth::paper_shape(seed);
  cfg.population_size = 600;
  return cfg;
}

pl::RunAllInputs bundle_inputs(const pl::StageContext& ctx) {
  fs::path dir = ctx.stage_dir(pl::Stage::SYNTH);
  pl::RunAllInputs in;
  in.raw_csv = dir / "synthetic_raw.csv";
  in.mapping_config = dir / "field_mapping.conf";
  in.rules = dir / "school_rules.conf";
  in.synonyms_base = dir / "normalise_base.conf";
  in.synonyms_fixes = dir / "normalise_fixes.conf";
  return in;
}

RawStudentRecord sample_raw(size_t idx) {
  RawStudentRecord r;
  r.row_index = idx;
  r.raw[size_t(Field::person_id)] = std::to_string(100 + idx);
  r.raw[size_t(Field::full_name)] = "Nombre, con coma " + std::to_string(idx);
  r.raw[size_t(Field::birth_date)] = "1980-05-0" + std::to_string(1 + idx % 9);
  r.raw[size_t(Field::school_name)] = idx % 2 ? "E.N.E.T. Nro 2" : "nan";
  r.raw[size_t(Field::intake_date)] = "01/03/2001";
  r.auxiliary_texts = {"nota \"citada\"", ""};
  r.date_formats = {"Y-M-D", "D/M/Y"};
  return r;
}

}  // namespace

TEST_CASE("census and resolved serializers round-trip exactly") {
  auto dir = fresh_dir("roundtrip");
  std::vector<CensalRecord> census;
  for (size_t i = 0; i < 5; ++i) {
    CensalRecord c;
    c.row = sample_raw(i);
    c.non_null_count = non_null_censal_count(c.row);
    c.source_row_index = i;
    census.push_back(std::move(c));
  }
  pl::write_census_csv(dir / "census.csv", census);
  auto back = pl::read_census_csv(dir / "census.csv", {"Y-M-D", "D/M/Y"});
  REQUIRE(back.size() == census.size());
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].row.raw == census[i].row.raw);
    CHECK(back[i].row.auxiliary_texts == census[i].row.auxiliary_texts);
    CHECK(back[i].source_row_index == census[i].source_row_index);
    CHECK(back[i].non_null_count == census[i].non_null_count);
  }

  std::vector<ResolvedRecord> resolved;
  for (auto& c : census) {
    ResolvedRecord r;
    r.census = c;
    r.person_id_canonical = c.person_id();
    r.resolution_status = ResolutionStatus::AUTO_UNIQUE;
    resolved.push_back(std::move(r));
  }
  resolved[1].person_id_canonical = resolved[0].census.person_id();
  resolved[1].resolution_status = ResolutionStatus::AUTO_MERGED;
  pl::write_resolved_csv(dir / "resolved.csv", resolved);
  auto rback = pl::read_resolved_csv(dir / "resolved.csv", {"Y-M-D", "D/M/Y"});
  REQUIRE(rback.size() == resolved.size());
  for (size_t i = 0; i < rback.size(); ++i) {
    CHECK(rback[i].census.row.raw == resolved[i].census.row.raw);
    CHECK(rback[i].person_id_canonical == resolved[i].person_id_canonical);
    CHECK(rback[i].resolution_status == resolved[i].resolution_status);
  }
}

TEST_CASE("master and reference serializers round-trip exactly") {
  auto dir = fresh_dir("roundtrip_master");
  std::vector<ResolvedRecord> resolved;
  for (size_t i = 0; i < 4; ++i) {
    ResolvedRecord r;
    r.census.row = sample_raw(i);
    r.census.row.raw[size_t(Field::province_residence)] = "Salta";
    r.census.row.raw[size_t(Field::locality_residence)] = "Salta Capital";
    r.person_id_canonical = r.census.person_id();
    resolved.push_back(std::move(r));
  }
  NormaliseConfig cfg;
  auto refs = build_reference_tables(resolved, cfg);
  auto v1 = iteration1_merge(resolved, refs, cfg);
  pl::write_master_csv(dir / "master.csv", v1);
  auto back = pl::read_master_csv(dir / "master.csv", {"Y-M-D", "D/M/Y"});
  REQUIRE(back.size() == v1.size());
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].base.census.row.raw == v1[i].base.census.row.raw);
    CHECK(back[i].school_id == v1[i].school_id);
    CHECK(back[i].province_residence_id == v1[i].province_residence_id);
    CHECK(back[i].school_type_final == v1[i].school_type_final);
    CHECK(back[i].school_info_source == v1[i].school_info_source);
    CHECK(back[i].geo_flag == v1[i].geo_flag);
    CHECK(back[i].school_flag == v1[i].school_flag);
    CHECK(back[i].school_name_final == v1[i].school_name_final);
  }

  pl::write_reference_csvs(dir, refs);
  auto refs_back = pl::read_reference_csvs(dir);
  for (RefKind k : {RefKind::COUNTRY, RefKind::PROVINCE, RefKind::LOCALITY, RefKind::SCHOOL}) {
    const auto& a = refs.entries(k);
    const auto& b = refs_back.entries(k);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].ref_id == b[i].ref_id);
      CHECK(a[i].canonical_label == b[i].canonical_label);
      CHECK(a[i].parent_ref == b[i].parent_ref);
      CHECK(a[i].variants == b[i].variants);
    }
  }
}

TEST_CASE("full pipeline runs end to end on a small synthetic register") {
  auto root = fresh_dir("run_all");
  auto ctx = ctx_at(root);
  pl::run_synth(ctx, small_preset());
  auto manifests = pl::run_all(ctx, bundle_inputs(ctx));
  REQUIRE(manifests.size() == 7);

  // ingest loses nothing: |records| + |rejects| = data rows in
  CHECK(manifests[0].stage == pl::Stage::INGEST);
  CHECK(manifests[0].rows_in >= manifests[0].rows_out);

  // N1 preserves distinct persons; downstream stages preserve row counts
  CHECK(manifests[1].rows_in == manifests[1].rows_out);
  for (size_t i = 2; i < manifests.size(); ++i) CHECK(manifests[i].rows_in >= manifests[i].rows_out);
  CHECK(manifests[5].rows_in == manifests[5].rows_out);  // N1C_3 partitions, never drops

  CHECK(fs::exists(root / "run_summary.md"));
  CHECK(fs::exists(root / "missingness" / "missingness_report.md"));
  CHECK(fs::exists(root / "missingness" / "fig_roc.png"));
  for (const auto& m : manifests) {
    auto dir = ctx.stage_dir(m.stage);
    CHECK(fs::exists(dir / "manifest.json"));
    auto rm = pl::read_manifest(dir);
    CHECK(rm.rows_out == m.rows_out);
    CHECK(rm.tool_version == pl::kToolVersion);
    CHECK(!rm.output_digests.empty());
  }
}

TEST_CASE("running a later stage before its upstream is a missing-input error") {
  auto root = fresh_dir("ordering");
  auto ctx = ctx_at(root);
  try {
    pl::run_n1c(ctx, 2, std::nullopt, std::nullopt);
    FAIL("expected missing_input");
  } catch (const Error& e) {
    CHECK(e.code() == errc::missing_input);
  }
  try {
    pl::run_n1(ctx);
    FAIL("expected missing_input");
  } catch (const Error& e) {
    CHECK(e.code() == errc::missing_input);
  }
}

TEST_CASE("completed stages freeze; force archives the previous output") {
  auto root = fresh_dir("freeze");
  auto ctx = ctx_at(root);
  pl::run_synth(ctx, small_preset());
  try {
    pl::run_synth(ctx, small_preset());
    FAIL("expected frozen_output");
  } catch (const Error& e) {
    CHECK(e.code() == errc::frozen_output);
  }
  auto forced = ctx_at(root, true);
  pl::run_synth(forced, small_preset());
  CHECK(fs::exists(root / "synth.bak1" / "manifest.json"));
  CHECK(fs::exists(root / "synth" / "manifest.json"));
  pl::run_synth(forced, small_preset());
  CHECK(fs::exists(root / "synth.bak2" / "manifest.json"));
}

TEST_CASE("tampered upstream output refuses to flow onward") {
  auto root = fresh_dir("tamper");
  auto ctx = ctx_at(root);
  pl::run_synth(ctx, small_preset());
  auto in = bundle_inputs(ctx);
  pl::run_ingest(ctx, in.raw_csv, in.mapping_config);
  {
    std::ofstream f(root / "ingest" / "ingested.csv", std::ios::app | std::ios::binary);
    f << "tampered,row\n";
  }
  try {
    pl::run_n1(ctx);
    FAIL("expected stage_failure");
  } catch (const Error& e) {
    CHECK(e.code() == errc::stage_failure);
    CHECK(std::string(e.what()).find("refusing to proceed") != std::string::npos);
  }
}

TEST_CASE("an empty register flows through every stage with a degenerate notice") {
  auto root = fresh_dir("empty");
  auto ctx = ctx_at(root);
  // header-only raw file with the canonical mapping
  fs::path raw = root / "empty_raw.csv";
  {
    std::ofstream f(raw, std::ios::binary);
    f << csv::join_row(synth::raw_header()) << "\n";
  }
  fs::path conf = root / "mapping.conf";
  std::ofstream(conf, std::ios::binary) << synth::field_mapping_config();

  pl::RunAllInputs in;
  in.raw_csv = raw;
  in.mapping_config = conf;
  auto manifests = pl::run_all(ctx, in);
  REQUIRE(manifests.size() == 7);
  for (const auto& m : manifests) {
    CHECK(m.rows_in == 0);
    CHECK(m.rows_out == 0);
  }
  std::ifstream rep(root / "missingness" / "missingness_report.md");
  std::string text((std::istreambuf_iterator<char>(rep)), std::istreambuf_iterator<char>());
  CHECK(text.find("Degenerate analysis") != std::string::npos);
}

TEST_CASE("manifest JSON survives a write/read cycle") {
  auto dir = fresh_dir("manifest");
  pl::RunManifest m;
  m.stage = pl::Stage::N1B;
  m.rows_in = 11;
  m.rows_out = 9;
  m.input_digests["a.csv"] = "0011aabb";
  m.config_digests["c.conf"] = "deadbeef";
  m.output_digests["out.csv"] = "cafef00d";
  m.date_formats = {"Y-M-D", "D/M/Y"};
  m.notes = {"note one", "note two"};
  pl::write_manifest(dir, m);
  auto back = pl::read_manifest(dir);
  CHECK(back.stage == m.stage);
  CHECK(back.rows_in == m.rows_in);
  CHECK(back.rows_out == m.rows_out);
  CHECK(back.input_digests == m.input_digests);
  CHECK(back.config_digests == m.config_digests);
  CHECK(back.output_digests == m.output_digests);
  CHECK(back.date_formats == m.date_formats);
  CHECK(back.notes == m.notes);
}
