#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "guardian/backends.hpp"
#include "guardian/corpus_synth.hpp"
#include "guardian/emit.hpp"
#include "guardian/pipeline.hpp"
#include "support.hpp"

using namespace guardian;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

size_t line_count(const fs::path& p) {
  auto text = slurp(p);
  return static_cast<size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::set<std::string> ids(const fs::path& jsonl) {
  std::set<std::string> out;
  for (const auto& r : read_jsonl(jsonl.string())) out.insert(r["case_id"].get<std::string>());
  return out;
}

// A synthetic corpus written to <dir>/in.
struct Corpus {
  testsupport::TempDir dir{"pipe"};
  std::vector<SynthCase> cases;

  Corpus(int registry, int bulletin, int narrative, double dropout = 0.0, std::uint64_t seed = 42) {
    SynthesisSpec s;
    s.seed = seed;
    s.label_dropout_rate = dropout;
    s.count_per_family = {{SourceFamily::registry_form, registry},
                          {SourceFamily::bulletin, bulletin},
                          {SourceFamily::narrative_profile, narrative}};
    cases = synthesize(s, Gazetteer::load(testsupport::data_path("gazetteer.tsv")));
    write_corpus(cases, s, dir / "in", default_schema());
  }

  RunConfig config(const std::string& out, PathsEnabled paths) const {
    auto c = RunConfig::with_bundled_data();
    c.input_dir = dir / "in";
    c.output_dir = dir / out;
    c.paths = paths;
    c.ingest_ts = "2024-01-01T00:00:00Z";
    c.gold_path = dir / "in" / "gold.jsonl";
    return c;
  }
};

std::vector<Json> error_warnings(const fs::path& out) {
  std::vector<Json> errs;
  for (const auto& w : read_jsonl((out / output_files::warnings).string())) {
    if (w["severity"] == "error") errs.push_back(w);
  }
  return errs;
}

}  // namespace

TEST_CASE("config checks") {
  auto c = RunConfig::with_bundled_data();
  c.output_dir = "/tmp/unused";
  c.input_dir = "/nonexistent/input";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(parse_paths_enabled("both") == PathsEnabled::both);
  CHECK_FALSE(parse_paths_enabled("neither"));
}

TEST_CASE("rule path on clean registry documents") {
  Corpus corpus(6, 0, 0);
  auto cfg = corpus.config("out", PathsEnabled::rule);
  OracleBackend backend;
  auto s = run(cfg, &backend);
  CHECK(backend.calls() == 0);
  CHECK(s.backend_calls == 0);
  CHECK(s.documents_in == 6);  // only .txt/.pdf files count
  CHECK(s.records_out_rule == 6);
  CHECK(error_warnings(cfg.output_dir).empty());
  auto schema = default_schema();
  for (const auto& r : read_jsonl((cfg.output_dir / output_files::rule_jsonl).string())) {
    CHECK(validate(r, schema).valid);
    CHECK(r["provenance"]["extraction_path"] == "rule");
    CHECK(r["provenance"]["ingest_ts"] == "2024-01-01T00:00:00Z");
  }
  CHECK(line_count(cfg.output_dir / output_files::rule_jsonl) == 6);
  CHECK_FALSE(fs::exists(cfg.output_dir / output_files::llm_jsonl));
}

TEST_CASE("both paths with the oracle") {
  Corpus corpus(3, 3, 3);
  auto cfg = corpus.config("out", PathsEnabled::both);
  OracleBackend backend;
  auto s = run(cfg, &backend);
  CHECK(backend.calls() == 9);
  CHECK(s.records_out_llm == 9);
  CHECK(ids(cfg.output_dir / output_files::rule_jsonl) == ids(cfg.output_dir / output_files::llm_jsonl));
  CHECK(line_count(cfg.output_dir / output_files::llm_jsonl) == static_cast<size_t>(s.records_out_llm));
  CHECK(line_count(cfg.output_dir / output_files::rule_jsonl) == static_cast<size_t>(s.records_out_rule));
  CHECK(line_count(cfg.output_dir / output_files::llm_csv) >= 10);

  auto reports = evaluate(cfg);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].path_label == "rule");
  CHECK(reports[1].path_label == "llm");
  CHECK(reports[1].prf.f1 == 1.0);
  REQUIRE(reports[1].repair);
  CHECK(reports[1].repair->pre_pass.value == 1.0);
  CHECK(fs::exists(cfg.output_dir / output_files::comparison));
  CHECK(fs::exists(cfg.output_dir / "metrics_llm.json"));
}

TEST_CASE("unrepaired candidates are dropped and logged") {
  Corpus corpus(5, 5, 0);
  auto cfg = corpus.config("out", PathsEnabled::llm);
  NeverFixBackend backend(0.2);
  run(cfg, &backend);
  std::set<std::string> expected_missing;
  for (int i = 0; i < 10; ++i) {
    if (InvalidThenFixBackend::injects(i, 0.2)) expected_missing.insert(corpus.cases[i].gold["case_id"]);
  }
  REQUIRE(expected_missing.size() == 2);
  auto emitted = ids(cfg.output_dir / output_files::llm_jsonl);
  CHECK(emitted.size() == 8);
  std::set<std::string> logged;
  for (const auto& w : error_warnings(cfg.output_dir)) {
    if (w["case_id"].is_string()) logged.insert(w["case_id"].get<std::string>());
  }
  for (const auto& id : expected_missing) {
    CHECK_FALSE(emitted.count(id));
    CHECK(logged.count(id));
  }
}

TEST_CASE("outputs do not depend on worker count or repetition") {
  Corpus corpus(3, 3, 3, 0.3);
  std::map<std::string, std::string> first;
  for (auto [label, workers] : std::vector<std::pair<std::string, int>>{{"w1", 1}, {"w4", 4}, {"w1b", 1}}) {
    auto cfg = corpus.config(label, PathsEnabled::both);
    cfg.workers = workers;
    cfg.backend = "dropout_oracle";
    cfg.backend_param = 0.2;
    cfg.seed = 9;
    run(cfg);
    for (const char* f : {output_files::rule_jsonl, output_files::rule_csv, output_files::llm_jsonl,
                          output_files::llm_csv}) {
      auto text = slurp(cfg.output_dir / f);
      CHECK_FALSE(text.empty());
      if (first.count(f)) {
        CHECK_MESSAGE(text == first[f], label << " " << f);
      } else {
        first[f] = text;
      }
    }
  }
}

TEST_CASE("evaluation needs gold") {
  Corpus corpus(1, 0, 0);
  auto cfg = corpus.config("out", PathsEnabled::rule);
  run(cfg);
  cfg.gold_path.reset();
  CHECK_THROWS_AS(evaluate(cfg), ConfigError);
}
