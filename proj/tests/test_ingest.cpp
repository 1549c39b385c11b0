#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "cohort/config.hpp"
#include "cohort/ingest.hpp"

using namespace cohort;
namespace fs = std::filesystem;

namespace {

fs::path write_tmp(const std::string& name, const std::string& content) {
  fs::path p = fs::temp_directory_path() / "cohort_ingest_tests";
  fs::create_directories(p);
  p /= name;
  std::ofstream f(p, std::ios::binary);
  f << content;
  return p;
}

const char* kConfig =
    "fields:\n"
    "  person_id: nro\n"
    "  full_name: nombre\n"
    "  birth_date: fnac\n"
    "  intake_date: fing\n"
    "  auxiliary_text: obs1\n"
    "  auxiliary_text: obs2\n"
    "\noptions:\n  delimiter: \",\"\n  date_formats: Y-M-D, D/M/Y\n";

}  // namespace

TEST_CASE("config loads mappings, repeatable auxiliary_text and options") {
  auto cfg = load_config(write_tmp("ok.conf", kConfig).string());
  CHECK(cfg.source_column(Field::person_id) == "nro");
  CHECK(cfg.source_column(Field::full_name) == "nombre");
  CHECK(!cfg.source_column(Field::sex));
  CHECK(cfg.auxiliary_columns() == std::vector<std::string>{"obs1", "obs2"});
  CHECK(cfg.delimiter == ',');
  CHECK(cfg.date_formats == std::vector<std::string>{"Y-M-D", "D/M/Y"});
}

TEST_CASE("config without person_id is rejected") {
  auto p = write_tmp("noid.conf", "fields:\n  full_name: nombre\n");
  try {
    load_config(p.string());
    FAIL("expected missing_mandatory_field");
  } catch (const Error& e) {
    CHECK(e.code() == errc::missing_mandatory_field);
  }
}

TEST_CASE("config with a field mapped twice is rejected") {
  auto p = write_tmp("dup.conf", "fields:\n  person_id: a\n  person_id: b\n");
  try {
    load_config(p.string());
    FAIL("expected duplicate_mapping");
  } catch (const Error& e) {
    CHECK(e.code() == errc::duplicate_mapping);
  }
}

TEST_CASE("config with an unknown logical field is rejected") {
  auto p = write_tmp("unk.conf", "fields:\n  person_id: a\n  shoe_size: b\n");
  try {
    load_config(p.string());
    FAIL("expected parse_error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::parse_error);
  }
}

TEST_CASE("mapped column absent from the header is a hard error") {
  auto cfg = load_config(write_tmp("h.conf", kConfig).string());
  auto csv = write_tmp("badheader.csv", "nro,nombre,fnac,fing,obs1\n1,a,2000-01-01,01/03/2019,x\n");
  try {
    ingest_raw(csv.string(), cfg);
    FAIL("expected header_mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == errc::header_mismatch);
  }
}

TEST_CASE("malformed rows are quarantined, never dropped") {
  auto cfg = load_config(write_tmp("q.conf", kConfig).string());
  auto csv = write_tmp("quarantine.csv",
                       "nro,nombre,fnac,fing,obs1,obs2\n"
                       "1,Ana,2000-01-01,01/03/2019,x,y\n"
                       "2,Beto,1999-05-05\n"                       // short row
                       ",Carla,1998-02-02,02/03/2018,a,b\n"        // empty id
                       "4,Dora,1997-07-07,03/03/2017,c,d\n");
  auto res = ingest_raw(csv.string(), cfg);
  CHECK(res.records.size() == 2);
  CHECK(res.rejects.size() == 2);
  CHECK(res.records.size() + res.rejects.size() == 4);
  CHECK(res.rejects[0].row_number == 2);
  CHECK(res.rejects[0].reason.substr(0, 12) == "MalformedRow");
  CHECK(res.rejects[1].row_number == 3);
  // raw bytes and auxiliary columns are carried verbatim
  CHECK(res.records[0].get(Field::full_name) == "Ana");
  REQUIRE(res.records[0].auxiliary_texts.size() == 2);
  CHECK(res.records[0].auxiliary_texts[1] == "y");
}

TEST_CASE("unparseable dates warn but keep the row") {
  auto cfg = load_config(write_tmp("d.conf", kConfig).string());
  auto csv = write_tmp("dates.csv",
                       "nro,nombre,fnac,fing,obs1,obs2\n"
                       "1,Ana,31/31/2000,01/03/2019,,\n");
  auto res = ingest_raw(csv.string(), cfg);
  REQUIRE(res.records.size() == 1);
  CHECK(!res.records[0].birth_date());
  CHECK(res.records[0].get(Field::birth_date) == "31/31/2000");  // bytes retained
  bool warned = false;
  for (const auto& w : res.warnings)
    if (w.find("birth_date") != std::string::npos) warned = true;
  CHECK(warned);
}

TEST_CASE("dates honour the configured format order") {
  auto cfg = load_config(write_tmp("f.conf", kConfig).string());
  auto csv = write_tmp("fmt.csv",
                       "nro,nombre,fnac,fing,obs1,obs2\n"
                       "1,Ana,1985-07-21,02/03/2004,,\n");
  auto res = ingest_raw(csv.string(), cfg);
  REQUIRE(res.records.size() == 1);
  auto b = res.records[0].birth_date();
  REQUIRE(b);
  CHECK(b->year == 1985);
  CHECK(b->month == 7);
  auto in = res.records[0].intake_date();
  REQUIRE(in);
  CHECK(in->day == 2);
  CHECK(in->month == 3);
  CHECK(in->year == 2004);
}

TEST_CASE("invalid UTF-8 in a field produces a warning") {
  auto cfg = load_config(write_tmp("u.conf", kConfig).string());
  auto csv = write_tmp("utf8.csv",
                       std::string("nro,nombre,fnac,fing,obs1,obs2\n") +
                           "1,Mar\xED"
                           "a,2000-01-01,01/03/2019,,\n");  // latin-1 byte
  auto res = ingest_raw(csv.string(), cfg);
  REQUIRE(res.records.size() == 1);
  bool warned = false;
  for (const auto& w : res.warnings)
    if (w.find("invalid UTF-8") != std::string::npos) warned = true;
  CHECK(warned);
}
