#include <doctest.h>

#include "guardian/source_detect.hpp"
#include "support.hpp"

using namespace guardian;

namespace {

const char* kTwoSignatures = R"({"source_label":"state_registry","family":"registry_form","markers":["^Case Number:","Date of Last Contact"],"min_markers":2,"priority":1}
{"source_label":"county_board","family":"bulletin","markers":["^Case Number:","Date of Last Contact","^Sheriff"],"min_markers":2,"priority":2}
)";

}  // namespace

TEST_CASE("signature with two marker hits") {
  auto sigs = parse_signatures(kTwoSignatures);
  std::string text = "Case Number: VA-1\nDate of Last Contact: 07/01/2023\n";
  auto r = detect_source(text, sigs);
  CHECK(r.source_label == "state_registry");
  CHECK(r.family == SourceFamily::registry_form);
  CHECK(r.score == 2);
  CHECK(r.signature_index == 0);
  REQUIRE(r.matched_markers.size() == 2);
  CHECK(r.matched_markers[1].offset == text.find("Date of Last Contact"));
}

TEST_CASE("no markers routes unknown") {
  auto sigs = parse_signatures(kTwoSignatures);
  auto r = detect_source("plain prose about nothing", sigs);
  CHECK(r.source_label == "unknown");
  CHECK(r.family == SourceFamily::unknown);
  CHECK(r.score == 0);
  CHECK(r.signature_index == -1);
  // One hit is below min_markers.
  CHECK(detect_source("Case Number: 1", sigs).family == SourceFamily::unknown);
}

TEST_CASE("ties go to the lower priority") {
  auto sigs = parse_signatures(kTwoSignatures);
  auto r = detect_source("Case Number: 1\nDate of Last Contact: x", sigs);
  CHECK(r.source_label == "state_registry");
  // The higher score wins regardless of priority.
  r = detect_source("Case Number: 1\nDate of Last Contact: x\nSheriff office", sigs);
  CHECK(r.source_label == "county_board");
  CHECK(r.score == 3);
}

TEST_CASE("case sensitivity flag") {
  auto sigs = parse_signatures(
      R"({"source_label":"b","family":"bulletin","markers":["^MISSING:","^LAST SEEN:"],"min_markers":2,"case_sensitive":true})");
  CHECK(detect_source("MISSING: A\nLAST SEEN: B", sigs).source_label == "b");
  CHECK(detect_source("Missing: A\nLast seen: B", sigs).source_label == "unknown");
}

TEST_CASE("bundled signatures cover the three families") {
  auto sigs = load_signatures(testsupport::data_path("signatures.jsonl"));
  CHECK(sigs.size() >= 3);
  bool reg = false, bul = false, nar = false;
  for (const auto& s : sigs) {
    reg |= s.family == SourceFamily::registry_form;
    bul |= s.family == SourceFamily::bulletin;
    nar |= s.family == SourceFamily::narrative_profile;
    CHECK_FALSE(s.case_headers.empty());
  }
  CHECK((reg && bul && nar));
}

TEST_CASE("signature file errors") {
  std::string dup = R"({"source_label":"a","family":"bulletin","markers":["x"],"min_markers":1}
{"source_label":"a","family":"bulletin","markers":["y"],"min_markers":1})";
  CHECK_THROWS_AS(parse_signatures(dup), ConfigError);
  CHECK_THROWS_AS(parse_signatures(R"({"source_label":"a","family":"bulletin","markers":["("]})"), ConfigError);
  CHECK_THROWS_AS(parse_signatures(R"({"source_label":"a","family":"bulletin","markers":[]})"), ConfigError);
  CHECK_THROWS_AS(parse_signatures(R"({"source_label":"a","family":"bulletin","markers":["x"],"min_markers":3})"),
                  ConfigError);
  CHECK(parse_signatures("").empty());
  CHECK(detect_source("anything", {}).source_label == "unknown");
}
