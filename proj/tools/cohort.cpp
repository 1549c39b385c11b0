// cohort: batch pipeline for turning a raw longitudinal student register
// into an analysis-ready census layer, plus a synthetic-register generator.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cohort/pipeline.hpp"

namespace {

int log_rank(const std::string& level) {
  if (level == "debug") return 0;
  if (level == "info") return 1;
  if (level == "warn") return 2;
  return 3;
}

struct Logger {
  int rank = 1;
  void info(const std::string& msg) const {
    if (rank <= 1) std::cerr << "[info] " << msg << "\n";
  }
  void warn(const std::string& msg) const {
    if (rank <= 2) std::cerr << "[warn] " << msg << "\n";
  }
};

int exit_code_for(cohort::errc code) {
  switch (code) {
    case cohort::errc::frozen_output:
      return 4;
    case cohort::errc::parse_error:
    case cohort::errc::missing_mandatory_field:
    case cohort::errc::duplicate_mapping:
    case cohort::errc::header_mismatch:
    case cohort::errc::invalid_config:
    case cohort::errc::missing_input:
      return 2;
    default:
      return 3;
  }
}

std::vector<std::string> split_csv_arg(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      std::string t = cohort::trim(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  return out;
}

void print_manifest(const Logger& log, const cohort::pipeline::RunManifest& m) {
  log.info(std::string(cohort::pipeline::to_string(m.stage)) + ": rows_in=" +
           std::to_string(m.rows_in) + " rows_out=" + std::to_string(m.rows_out));
}

}  // namespace

int main(int argc, char** argv) {
  namespace pl = cohort::pipeline;
  CLI::App app{"cohort: census pipeline for longitudinal student registers"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may appear after the subcommand

  std::string out_dir;
  if (const char* env = std::getenv("COHORT_DATA_DIR")) out_dir = env;
  if (out_dir.empty()) out_dir = "out";
  uint64_t seed = 42;
  bool force = false;
  std::string log_level = "info";
  app.add_option("--out", out_dir, "output root directory (default $COHORT_DATA_DIR or ./out)");
  app.add_option("--seed", seed, "random seed for generation stages");
  app.add_flag("--force", force, "archive and overwrite frozen stage outputs");
  app.add_option("--log-level", log_level, "debug|info|warn|error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));

  std::string in_file, cfg_file;
  auto* ingest = app.add_subcommand("ingest", "load the raw register, quarantining bad rows");
  ingest->add_option("--input", in_file, "raw delimited file")->required();
  ingest->add_option("--config", cfg_file, "field-mapping configuration")->required();

  app.add_subcommand("n1", "consolidate censal rows to one per person");

  double threshold = 0.80;
  auto* n1b = app.add_subcommand("n1b", "audit identities and assign canonical IDs");
  n1b->add_option("--threshold", threshold, "name similarity threshold (default 0.80)");

  int iteration = 1;
  std::string rules_file, synonyms_file;
  auto* n1c = app.add_subcommand("n1c", "normalise geography and school information");
  n1c->add_option("--iteration", iteration, "1, 2 or 3")->required();
  n1c->add_option("--rules", rules_file, "supplementary school-type rules");
  n1c->add_option("--synonyms", synonyms_file, "synonyms / vocabulary document");

  std::string predictors_arg = "decade,degree,province_birth";
  std::string encoding = "one_hot";
  bool table2 = false;
  auto* miss = app.add_subcommand("missingness", "missingness forensics on the final layer");
  miss->add_option("--predictors", predictors_arg, "comma-separated predictor list");
  miss->add_option("--encoding", encoding, "one_hot|numeric (numeric applies to decade)")
      ->check(CLI::IsMember({"one_hot", "numeric"}));
  miss->add_flag("--table2-mode", table2, "numeric decade + sex + province design");

  std::string preset = "paper_shape";
  size_t population = 0;
  auto* synth = app.add_subcommand("synth", "generate a synthetic register with ground truth");
  synth->add_option("--preset", preset, "named preset (paper_shape)");
  synth->add_option("--population", population, "override the preset population size");

  std::string ra_input, ra_config, ra_rules, ra_syn_base, ra_syn_fixes;
  bool ra_from_preset = false;
  auto* runall = app.add_subcommand("run-all", "run every stage in order");
  runall->add_option("--input", ra_input, "raw register (omit with --preset)");
  runall->add_option("--config", ra_config, "field-mapping configuration");
  runall->add_option("--rules", ra_rules, "supplementary school-type rules");
  runall->add_option("--synonyms-base", ra_syn_base, "iteration-1 vocabulary document");
  runall->add_option("--synonyms-fixes", ra_syn_fixes, "iteration-2/3 synonyms document");
  runall->add_flag("--preset", ra_from_preset,
                   "generate the paper_shape register first and run on it");

  CLI11_PARSE(app, argc, argv);
  Logger log{log_rank(log_level)};

  pl::StageContext ctx;
  ctx.out_root = out_dir;
  ctx.force = force;
  ctx.seed = seed;

  try {
    std::filesystem::create_directories(ctx.out_root);
    if (*ingest) {
      print_manifest(log, pl::run_ingest(ctx, in_file, cfg_file));
    } else if (app.got_subcommand("n1")) {
      print_manifest(log, pl::run_n1(ctx));
    } else if (*n1b) {
      print_manifest(log, pl::run_n1b(ctx, threshold));
    } else if (*n1c) {
      std::optional<std::filesystem::path> rules, synonyms;
      if (!rules_file.empty()) rules = rules_file;
      if (!synonyms_file.empty()) synonyms = synonyms_file;
      print_manifest(log, pl::run_n1c(ctx, iteration, rules, synonyms));
    } else if (*miss) {
      std::vector<std::string> predictors = split_csv_arg(predictors_arg);
      bool numeric = encoding == "numeric";
      if (table2) {
        predictors = {"decade", "sex", "province_birth"};
        numeric = true;
      }
      print_manifest(log, pl::run_missingness(ctx, predictors, numeric));
    } else if (*synth) {
      if (preset != "paper_shape")
        throw cohort::Error(cohort::errc::invalid_config, "unknown preset '" + preset + "'");
      cohort::synth::SynthConfig cfg = cohort::synth::paper_shape(seed);
      if (population > 0) cfg.population_size = population;
      print_manifest(log, pl::run_synth(ctx, cfg));
    } else if (*runall) {
      pl::RunAllInputs inputs;
      if (ra_from_preset) {
        cohort::synth::SynthConfig cfg = cohort::synth::paper_shape(seed);
        if (population > 0) cfg.population_size = population;
        print_manifest(log, pl::run_synth(ctx, cfg));
        auto dir = ctx.stage_dir(pl::Stage::SYNTH);
        inputs.raw_csv = dir / "synthetic_raw.csv";
        inputs.mapping_config = dir / "field_mapping.conf";
        inputs.rules = dir / "school_rules.conf";
        inputs.synonyms_base = dir / "normalise_base.conf";
        inputs.synonyms_fixes = dir / "normalise_fixes.conf";
      } else {
        if (ra_input.empty() || ra_config.empty())
          throw cohort::Error(cohort::errc::invalid_config,
                              "run-all needs --input and --config, or --preset");
        inputs.raw_csv = ra_input;
        inputs.mapping_config = ra_config;
        if (!ra_rules.empty()) inputs.rules = ra_rules;
        if (!ra_syn_base.empty()) inputs.synonyms_base = ra_syn_base;
        if (!ra_syn_fixes.empty()) inputs.synonyms_fixes = ra_syn_fixes;
      }
      for (const auto& m : pl::run_all(ctx, inputs)) print_manifest(log, m);
      log.info("summary written to " + (ctx.out_root / "run_summary.md").string());
    }
  } catch (const cohort::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
