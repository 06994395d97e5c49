#include <doctest.h>

#include <fstream>
#include <sstream>

#include "guardian/backends.hpp"
#include "guardian/corpus_synth.hpp"
#include "guardian/emit.hpp"
#include "guardian/rule_parsers.hpp"
#include "guardian/source_detect.hpp"
#include "support.hpp"

using namespace guardian;
namespace fs = std::filesystem;

namespace {

const Gazetteer& gazetteer() {
  static const Gazetteer g = Gazetteer::load(testsupport::data_path("gazetteer.tsv"));
  return g;
}

SynthesisSpec spec_of(int registry, int bulletin, int narrative, std::uint64_t seed = 42) {
  SynthesisSpec s;
  s.seed = seed;
  s.count_per_family = {{SourceFamily::registry_form, registry},
                        {SourceFamily::bulletin, bulletin},
                        {SourceFamily::narrative_profile, narrative}};
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

DraftRecord rule_parse(const SynthCase& c) {
  static const auto signatures = load_signatures(testsupport::data_path("signatures.jsonl"));
  static const auto rulesets = load_rulesets(testsupport::data_path("rulesets"));
  std::string body(strip_trailer(c.document_text));
  CaseSegment seg{0, body, 0, body.size()};
  return dispatch(detect_source(body, signatures), seg, rulesets);
}

}  // namespace

TEST_CASE("spec validation") {
  auto s = spec_of(1, 1, 1);
  CHECK_NOTHROW(s.validate());
  s.narrative_cue_rate = 1.5;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = spec_of(1, 1, 1);
  s.label_dropout_rate = -0.1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = spec_of(-1, 1, 1);
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = spec_of(1, 1, 1);
  s.count_per_family[SourceFamily::unknown] = 1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK(to_json(spec_of(1, 2, 3))["seed"] == 42);
}

TEST_CASE("seeded corpus is reproducible") {
  auto a = synthesize(spec_of(2, 2, 2), gazetteer());
  auto b = synthesize(spec_of(2, 2, 2), gazetteer());
  REQUIRE(a.size() == 6);
  REQUIRE(b.size() == 6);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].document_text == b[i].document_text);
    CHECK(a[i].gold == b[i].gold);
  }
  CHECK(a[0].family == SourceFamily::registry_form);
  CHECK(a[2].family == SourceFamily::bulletin);
  CHECK(a[4].family == SourceFamily::narrative_profile);

  auto other = synthesize(spec_of(2, 2, 2, 43), gazetteer());
  bool differs = false;
  for (size_t i = 0; i < a.size(); ++i) differs |= a[i].document_text != other[i].document_text;
  CHECK(differs);

  testsupport::TempDir d1, d2;
  write_corpus(a, spec_of(2, 2, 2), d1.path(), default_schema());
  write_corpus(b, spec_of(2, 2, 2), d2.path(), default_schema());
  size_t files = 0;
  for (const auto& entry : fs::directory_iterator(d1.path())) {
    ++files;
    CHECK(slurp(entry.path()) == slurp(d2.path() / entry.path().filename()));
  }
  CHECK(files == 8);  // six documents, gold.jsonl, manifest.json
  CHECK(read_jsonl((d1.path() / "gold.jsonl").string()).size() == 6);
}

TEST_CASE("gold records are valid and carry their marker") {
  auto schema = default_schema();
  for (const auto& c : synthesize(spec_of(5, 5, 5, 7), gazetteer())) {
    auto report = validate(c.gold, schema);
    CHECK_MESSAGE(report.valid, c.document_id);
    CHECK(c.gold["provenance"]["document_id"] == c.document_id);
    CHECK(c.gold["provenance"]["source_label"] == synth_source_label(c.family));
    auto marker = find_gold_marker(c.document_text, 0);
    REQUIRE(marker);
    CHECK((*marker)["case_id"] == c.gold["case_id"]);
    CHECK_FALSE(find_gold_marker(c.document_text, 1));
    CHECK(c.document_text.find(c.oracle_marker) != std::string::npos);
  }
}

TEST_CASE("family layouts") {
  auto cases = synthesize(spec_of(1, 1, 1), gazetteer());
  CHECK(cases[0].document_text.find("Circumstances of Disappearance") != std::string::npos);
  CHECK(cases[0].document_text.find("MISSING PERSONS REGISTRY") != std::string::npos);
  CHECK(cases[1].document_text.find("LAST SEEN:") != std::string::npos);
  CHECK(cases[2].document_text.find("Community Case Profile") != std::string::npos);
}

TEST_CASE("narrative cues at full cue rate") {
  auto s = spec_of(0, 0, 6);
  s.narrative_cue_rate = 1.0;
  for (const auto& c : synthesize(s, gazetteer())) {
    CHECK(c.document_text.find("believed to be en route to") != std::string::npos);
    CHECK_FALSE(c.gold["narrative_osint"]["movement_cues"].empty());
  }
  s.narrative_cue_rate = 0.0;
  for (const auto& c : synthesize(s, gazetteer())) {
    CHECK(c.document_text.find("believed to be en route to") == std::string::npos);
  }
}

TEST_CASE("label dropout starves the rule parser but not the oracle") {
  auto clean = synthesize(spec_of(4, 0, 0), gazetteer());
  auto s = spec_of(4, 0, 0);
  s.label_dropout_rate = 1.0;
  auto dropped = synthesize(s, gazetteer());
  for (size_t i = 0; i < clean.size(); ++i) {
    auto full = rule_parse(clean[i]);
    auto starved = rule_parse(dropped[i]);
    CHECK(full.candidates.size() >= 10);
    // Only the case number line survives.
    CHECK(starved.candidates.size() <= 1);
    CHECK(starved.candidates.count("case_id") == 1);
    auto marker = find_gold_marker(dropped[i].document_text, 0);
    REQUIRE(marker);
    CHECK((*marker)["demographic"] == dropped[i].gold["demographic"]);
  }
}
