#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>

#include "cohort/synth.hpp"

using namespace cohort;
using synth::SynthConfig;

namespace {

// column index in the raw register by header name
int col(const csv::Table& t, const char* name) {
  int i = t.column(name);
  REQUIRE(i >= 0);
  return i;
}

}  // namespace

TEST_CASE("config validation rejects malformed presets") {
  SynthConfig bad = synth::paper_shape();
  bad.decade_mix[1980] = 0.5;  // mix no longer sums to 1
  CHECK_THROWS_AS(synth::validate(bad), Error);

  SynthConfig neg = synth::paper_shape();
  neg.duplicate_rate = -0.1;
  CHECK_THROWS_AS(synth::validate(neg), Error);

  SynthConfig orphan = synth::paper_shape();
  orphan.decade_mix[1970] = 0.0;  // decade with no missing rate
  CHECK_THROWS_AS(synth::validate(orphan), Error);

  SynthConfig nodeg = synth::paper_shape();
  nodeg.degree_mix.clear();
  CHECK_THROWS_AS(synth::validate(nodeg), Error);

  CHECK_NOTHROW(synth::validate(synth::paper_shape()));
}

TEST_CASE("same seed gives identical output, different seed does not") {
  SynthConfig cfg = synth::paper_shape(7);
  cfg.population_size = 500;
  auto a = synth::generate(cfg);
  auto b = synth::generate(cfg);
  CHECK(a.raw.rows == b.raw.rows);
  CHECK(a.truth.true_person_count == b.truth.true_person_count);

  cfg.seed = 8;
  auto c = synth::generate(cfg);
  CHECK(a.raw.rows != c.raw.rows);
}

TEST_CASE("distinct IDs equal the configured population and rows cover every plant") {
  SynthConfig cfg = synth::paper_shape(3);
  cfg.population_size = 2000;
  auto out = synth::generate(cfg);
  std::set<std::string> ids;
  int idcol = col(out.raw, "nro_inscripcion");
  for (const auto& r : out.raw.rows) ids.insert(r[idcol]);
  CHECK(ids.size() == cfg.population_size);
  CHECK(out.truth.true_school_type.size() == cfg.population_size);
  CHECK(out.raw.rows.size() >= cfg.population_size);  // extra and collision rows on top
}

TEST_CASE("per-decade missing rates land within three sigma of the preset") {
  SynthConfig cfg = synth::paper_shape(42);
  auto out = synth::generate(cfg);
  int idcol = col(out.raw, "nro_inscripcion");
  int ycol = col(out.raw, "anio_ingreso");
  int pcol = col(out.raw, "prov_nac");

  // first row per ID is the primary person row
  std::map<int, std::pair<long long, long long>> majority, minority;  // decade -> (n, missing)
  std::set<std::string> seen;
  for (const auto& r : out.raw.rows) {
    if (!seen.insert(r[idcol]).second) continue;
    int decade = (*parse_int(r[ycol]) / 10) * 10;
    bool is_majority = text::clean_text(r[pcol]).substr(0, 5) == "tucum";  // variant included
    bool missing = out.truth.true_missing.at(r[idcol]) == 1;
    auto& slot = is_majority ? majority[decade] : minority[decade];
    ++slot.first;
    slot.second += missing;
  }
  auto check_rates = [&](std::map<int, std::pair<long long, long long>>& obs,
                         const std::map<int, double>& want) {
    for (auto& [decade, nm] : obs) {
      double p = want.at(decade);
      double n = double(nm.first);
      double sigma = std::sqrt(std::max(p * (1 - p) * n, 1.0));
      INFO("decade " << decade << " n=" << nm.first);
      CHECK(std::fabs(double(nm.second) - p * n) <= 3.0 * sigma + 1.0);
    }
  };
  check_rates(majority, cfg.missing_rate_by_decade);
  check_rates(minority, cfg.minority_missing_rate_by_decade);
}

TEST_CASE("majority province share is close to its target") {
  SynthConfig cfg = synth::paper_shape(9);
  cfg.population_size = 8000;
  auto out = synth::generate(cfg);
  int idcol = col(out.raw, "nro_inscripcion");
  int pcol = col(out.raw, "prov_nac");
  std::set<std::string> seen;
  long long n = 0, tuc = 0;
  for (const auto& r : out.raw.rows) {
    if (!seen.insert(r[idcol]).second) continue;
    ++n;
    if (text::clean_text(r[pcol]).substr(0, 5) == "tucum") ++tuc;
  }
  double sigma = std::sqrt(0.7 * 0.3 * double(n));
  CHECK(std::fabs(double(tuc) - 0.7 * double(n)) <= 4.0 * sigma);
}

TEST_CASE("zero rates mean zero plants") {
  SynthConfig cfg;
  cfg.population_size = 1500;
  cfg.seed = 4;
  cfg.duplicate_rate = 0.0;
  cfg.variant_rate = 0.0;
  cfg.extra_row_rate = 0.0;
  cfg.clue_plant_rate = 0.0;
  auto out = synth::generate(cfg);
  CHECK(out.truth.duplicate_clusters.empty());
  CHECK(out.truth.planted_variants == 0);
  CHECK(out.truth.planted_clues == 0);
  CHECK(out.truth.extra_censal_rows == 0);
  CHECK(out.raw.rows.size() == cfg.population_size);  // exactly one row per person

  // all-zero missing rates: every person has a school
  for (const auto& [id, m] : out.truth.true_missing) CHECK(m == 0);
  int scol = col(out.raw, "establecimiento");
  for (const auto& r : out.raw.rows) CHECK(!is_missing_marker(r[scol]));
}

TEST_CASE("duplicate clusters are disjoint and sized as expected") {
  SynthConfig cfg;
  cfg.population_size = 1000;
  cfg.seed = 12;
  cfg.duplicate_rate = 0.05;
  auto out = synth::generate(cfg);

  std::set<std::string> in_cluster;
  for (const auto& c : out.truth.duplicate_clusters) {
    for (const auto& id : c.ids) {
      CHECK(!in_cluster.count(id));  // disjoint
      in_cluster.insert(id);
    }
    if (c.expect_merge) {
      CHECK(c.kind == ConflictKind::DNI_DUPLICATE);
      CHECK(c.expected_canonical == c.ids.front());
    } else {
      CHECK(c.expected_canonical.empty());
    }
  }
  // around population * rate clusters, loose binomial bound
  double expected = double(cfg.population_size) * cfg.duplicate_rate;
  double sigma = std::sqrt(expected);
  CHECK(std::fabs(double(out.truth.duplicate_clusters.size()) - expected) <= 4.0 * sigma + 2.0);
}

TEST_CASE("clue planting only decorates missing-school rows") {
  SynthConfig cfg;
  cfg.population_size = 1200;
  cfg.seed = 19;
  cfg.missing_rate_by_decade = {{1980, 0.5}, {1990, 0.5}, {2000, 0.5}, {2010, 0.5}};
  cfg.clue_plant_rate = 1.0;
  auto out = synth::generate(cfg);
  CHECK(out.truth.planted_clues > 0);
  int idcol = col(out.raw, "nro_inscripcion");
  int scol = col(out.raw, "establecimiento");
  int ocol = col(out.raw, "observaciones");
  std::set<std::string> seen;
  size_t with_clue = 0;
  for (const auto& r : out.raw.rows) {
    if (!seen.insert(r[idcol]).second) continue;
    if (!r[ocol].empty()) {
      CHECK(is_missing_marker(r[scol]));  // clue implies missing school
      ++with_clue;
    }
  }
  CHECK(with_clue == out.truth.planted_clues);
}

TEST_CASE("ground truth table carries one row per person with cluster annotations") {
  SynthConfig cfg;
  cfg.population_size = 400;
  cfg.seed = 23;
  cfg.duplicate_rate = 0.1;
  auto out = synth::generate(cfg);
  auto t = synth::ground_truth_table(out.truth);
  CHECK(t.rows.size() == out.truth.true_school_type.size());
  int kcol = col(t, "cluster_kind");
  int mcol = col(t, "expect_merge");
  int ccol = col(t, "expected_canonical");
  size_t merge_rows = 0;
  for (const auto& r : t.rows) {
    if (r[mcol] == "1") {
      CHECK(r[kcol] == "DNI_DUPLICATE");
      CHECK(!r[ccol].empty());
      ++merge_rows;
    }
  }
  size_t expected_merge_rows = 0;
  for (const auto& c : out.truth.duplicate_clusters)
    if (c.expect_merge) expected_merge_rows += c.ids.size();
  CHECK(merge_rows == expected_merge_rows);
}

TEST_CASE("companion config documents parse and match the register header") {
  auto mapping = synth::field_mapping_config();
  CHECK(mapping.find("person_id: nro_inscripcion") != std::string::npos);
  CHECK(mapping.find("auxiliary_text: observaciones") != std::string::npos);
  auto fixes = synth::normalise_fixes_config();
  CHECK(fixes.find("tucumen: tucuman") != std::string::npos);
  CHECK(fixes.find("vocab_provinces") != std::string::npos);
}
