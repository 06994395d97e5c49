// guardian: command-line entry point for the case-record pipeline.
//
//   guardian run      --input DIR --output DIR [--paths both] [--backend oracle] ...
//   guardian evaluate --output DIR --gold FILE [--paths both]
//   guardian synth    --out DIR [--seed 42] [--registry N] [--bulletin N] [--narrative N]
//   guardian schema dump [--out FILE]
//   guardian schema validate FILE.jsonl [--schema FILE]

#include <CLI11.hpp>

#include <iostream>

#include "guardian/corpus_synth.hpp"
#include "guardian/emit.hpp"
#include "guardian/geocode.hpp"
#include "guardian/pipeline.hpp"
#include "guardian/schema.hpp"

using namespace guardian;

namespace {

void add_run_options(CLI::App& cmd, RunConfig& cfg, std::string& paths, std::string& gold, std::string& ingest_ts,
                     std::uint64_t& seed) {
  cmd.add_option("--input", cfg.input_dir, "Directory of .txt/.pdf documents");
  cmd.add_option("--output", cfg.output_dir, "Output directory (created)")->required();
  cmd.add_option("--paths", paths, "rule, llm or both")->check(CLI::IsMember({"rule", "llm", "both"}));
  cmd.add_option("--schema", cfg.schema_path, "Schema file (default: built-in)");
  cmd.add_option("--signatures", cfg.signatures_path, "Source signature file");
  cmd.add_option("--rulesets", cfg.rulesets_dir, "Rule set directory");
  cmd.add_option("--mappings", cfg.mappings_dir, "Key mapping directory");
  cmd.add_option("--gazetteer", cfg.gazetteer_path, "Gazetteer TSV");
  cmd.add_option("--regions", cfg.regions_path, "Region bounding boxes TSV");
  cmd.add_option("--cache", cfg.cache_path, "Geocode cache file (default: OUTPUT/geocode_cache.tsv)");
  cmd.add_option("--engines", cfg.engines_path, "Engine chain for PDF documents");
  cmd.add_option("--backend", cfg.backend, "oracle, dropout_oracle, invalid_then_fix, never_fix or wire")
      ->check(CLI::IsMember({"oracle", "dropout_oracle", "invalid_then_fix", "never_fix", "wire"}));
  cmd.add_option("--backend-param", cfg.backend_param, "Dropout probability or injection rate")
      ->check(CLI::Range(0.0, 1.0));
  cmd.add_option("--budget-chars", cfg.budget_chars, "Prompt document budget");
  cmd.add_option("--max-repair-attempts", cfg.max_repair_attempts);
  cmd.add_option("--max-in-flight", cfg.max_in_flight, "Concurrent backend requests");
  cmd.add_option("--workers", cfg.workers, "Document worker threads");
  cmd.add_option("--timeout", cfg.request_timeout_s, "Backend request timeout, seconds");
  cmd.add_option("--gold", gold, "Gold JSONL; enables evaluation after the run");
  cmd.add_option("--seed", seed, "Seed for the stochastic offline backends");
  cmd.add_option("--ingest-ts", ingest_ts, "Fixed provenance.ingest_ts (default: file mtime)");
  cmd.add_option("--tz-default", cfg.tz_default, "Timezone recorded for local timestamps");
  cmd.add_option("--quality-min-chars", cfg.quality.min_chars);
  cmd.add_option("--quality-min-alnum", cfg.quality.min_alnum);
}

void finish_config(RunConfig& cfg, const std::string& paths, const std::string& gold, const std::string& ingest_ts,
                   std::uint64_t seed, bool seed_given) {
  cfg.paths = *parse_paths_enabled(paths);
  if (!gold.empty()) cfg.gold_path = gold;
  if (!ingest_ts.empty()) cfg.ingest_ts = ingest_ts;
  if (seed_given) cfg.seed = seed;
}

void print_reports(const std::vector<MetricsReport>& reports) {
  std::cout << comparison_table(reports);
  for (const auto& r : reports) {
    for (const auto& note : r.notes) std::cerr << "note [" << r.path_label << "]: " << note << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Case-record extraction pipeline with dual rule/model paths"};
  app.require_subcommand(1);

  RunConfig run_cfg = RunConfig::with_bundled_data();
  std::string run_paths = "both", run_gold, run_ingest;
  std::uint64_t run_seed = 0;
  auto* run_cmd = app.add_subcommand("run", "Process a document directory");
  add_run_options(*run_cmd, run_cfg, run_paths, run_gold, run_ingest, run_seed);
  run_cmd->get_option("--input")->required();

  RunConfig eval_cfg = RunConfig::with_bundled_data();
  std::string eval_paths = "both", eval_gold, eval_ingest;
  std::uint64_t eval_seed = 0;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a previous run's outputs against gold");
  add_run_options(*eval_cmd, eval_cfg, eval_paths, eval_gold, eval_ingest, eval_seed);
  eval_cmd->get_option("--gold")->required();

  SynthesisSpec spec;
  std::filesystem::path synth_out;
  std::string synth_gazetteer = std::string(GUARDIAN_DATA_DIR) + "/gazetteer.tsv";
  int n_registry = 2, n_bulletin = 2, n_narrative = 2;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with gold");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--seed", spec.seed);
  synth_cmd->add_option("--registry", n_registry, "Registry-form documents");
  synth_cmd->add_option("--bulletin", n_bulletin, "Bulletin documents");
  synth_cmd->add_option("--narrative", n_narrative, "Narrative-profile documents");
  synth_cmd->add_option("--cue-rate", spec.narrative_cue_rate)->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--dropout", spec.label_dropout_rate)->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--gazetteer", synth_gazetteer);

  auto* schema_cmd = app.add_subcommand("schema", "Schema utilities");
  schema_cmd->require_subcommand(1);
  std::string dump_out;
  auto* dump_cmd = schema_cmd->add_subcommand("dump", "Print the built-in schema file");
  dump_cmd->add_option("--out", dump_out);
  std::string validate_file, validate_schema;
  auto* validate_cmd = schema_cmd->add_subcommand("validate", "Validate each record of a JSONL file");
  validate_cmd->add_option("file", validate_file)->required();
  validate_cmd->add_option("--schema", validate_schema);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      finish_config(run_cfg, run_paths, run_gold, run_ingest, run_seed, run_cmd->count("--seed") > 0);
      RunSummary s = run(run_cfg);
      std::cout << to_json(s).dump(2) << "\n";
      if (run_cfg.gold_path) print_reports(evaluate(run_cfg));
      return 0;
    }
    if (*eval_cmd) {
      finish_config(eval_cfg, eval_paths, eval_gold, eval_ingest, eval_seed, eval_cmd->count("--seed") > 0);
      print_reports(evaluate(eval_cfg));
      return 0;
    }
    if (*synth_cmd) {
      spec.count_per_family = {{SourceFamily::registry_form, n_registry},
                               {SourceFamily::bulletin, n_bulletin},
                               {SourceFamily::narrative_profile, n_narrative}};
      auto cases = synthesize(spec, Gazetteer::load(synth_gazetteer));
      write_corpus(cases, spec, synth_out, default_schema());
      std::cout << cases.size() << " documents written to " << synth_out.string() << "\n";
      return 0;
    }
    if (*dump_cmd) {
      auto text = serialize_schema(default_schema());
      if (dump_out.empty()) {
        std::cout << text;
      } else {
        write_file(dump_out, text);
      }
      return 0;
    }
    if (*validate_cmd) {
      SchemaDefinition schema = validate_schema.empty() ? default_schema() : load_schema(validate_schema);
      int bad = 0, line = 0;
      for (const auto& rec : read_jsonl(validate_file)) {
        ++line;
        auto report = validate(rec, schema);
        for (const auto& v : report.violations) {
          std::cout << "record " << line << ": " << v.field_path << ": " << to_string(v.code) << ": " << v.message
                    << "\n";
        }
        bad += report.valid ? 0 : 1;
      }
      std::cout << line - bad << " of " << line << " records valid\n";
      return bad == 0 ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
