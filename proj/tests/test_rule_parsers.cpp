#include <doctest.h>

#include "guardian/rule_parsers.hpp"
#include "guardian/text_acquire.hpp"
#include "support.hpp"

using namespace guardian;

namespace {

RuleSets bundled() { return load_rulesets(testsupport::data_path("rulesets")); }

CaseSegment segment(std::string text) {
  CaseSegment s;
  s.text = std::move(text);
  s.char_end = s.text.size();
  return s;
}

std::string raw(const DraftRecord& d, const std::string& path) {
  auto it = d.candidates.find(path);
  return it == d.candidates.end() ? std::string("<absent>") : it->second.raw_value;
}

void check_spans(const DraftRecord& d, const std::string& text) {
  for (const auto& [path, c] : d.candidates) {
    REQUIRE(c.char_end <= text.size());
    CHECK(c.char_start <= c.char_end);
    CHECK(text.substr(c.char_start, c.char_end - c.char_start) == c.raw_value);
    CHECK(c.field_path == path);
  }
}

}  // namespace

TEST_CASE("registry form trace fixture") {
  auto text = prenormalize(read_file(testsupport::fixture_path("trace_registry.txt")));
  auto rules = bundled();
  auto d = parse_registry_form(segment(text), rules.rules_for(SourceFamily::registry_form), "synthetic_registry");
  CHECK(raw(d, "spatial.city") == "Culpeper");
  CHECK(raw(d, "spatial.state") == "Virginia");
  CHECK(raw(d, "spatial.postal_code") == "22701");
  CHECK(raw(d, "spatial.last_seen_location") == "Culpeper, Virginia 22701");
  CHECK(raw(d, "temporal.last_seen_ts") == "07/01/2023");
  CHECK(raw(d, "demographic.age_min") == "22");
  CHECK(raw(d, "demographic.age_max") == "24");
  CHECK(raw(d, "demographic.age_years") == "<absent>");
  CHECK(raw(d, "spatial.county") == "Culpeper County");
  CHECK(raw(d, "narrative_osint.circumstances").rfind("Avery Lindqvist was last seen", 0) == 0);
  CHECK(raw(d, "case_id") == "TRACE-0001");
  CHECK(d.source_label == "synthetic_registry");
  check_spans(d, text);
  // Nothing from the gold trailer is read.
  for (const auto& [path, c] : d.candidates) CHECK(c.raw_value.find("END-OF-DOCUMENT") == std::string::npos);
}

TEST_CASE("no recognized labels") {
  auto rules = bundled();
  auto d = parse_registry_form(segment("Just a paragraph with nothing labelled"),
                               rules.rules_for(SourceFamily::registry_form));
  CHECK(d.candidates.empty());
  CHECK(parse_bulletin(segment(""), rules.rules_for(SourceFamily::bulletin)).candidates.empty());
}

TEST_CASE("bulletin labels") {
  auto rules = bundled();
  std::string text = "MISSING: JANE DOE\nCASE #: B-17\nLAST SEEN: 07/01/2023\n";
  auto d = parse_bulletin(segment(text), rules.rules_for(SourceFamily::bulletin));
  CHECK(raw(d, "demographic.name") == "JANE DOE");
  CHECK(raw(d, "temporal.last_seen_ts") == "07/01/2023");
  CHECK(raw(d, "case_id") == "B-17");
  check_spans(d, text);
}

TEST_CASE("narrative movement cues") {
  auto rules = bundled();
  std::string text =
      "Community Case Profile\n\nName: Sam Reyes\n\nSam Reyes left home after dinner. "
      "He was believed to be en route to Maryland or Delaware.\n";
  auto d = parse_narrative_profile(segment(text), rules.rules_for(SourceFamily::narrative_profile));
  CHECK(raw(d, "narrative_osint.movement_cues.0") == "Maryland");
  CHECK(raw(d, "narrative_osint.movement_cues.1") == "Delaware");
  CHECK(raw(d, "narrative_osint.movement_cues.2") == "<absent>");
  check_spans(d, text);

  std::string plain = "Community Case Profile\n\nName: Sam Reyes\n\nSam Reyes left home after dinner. Nobody saw him.\n";
  auto p = parse_narrative_profile(segment(plain), rules.rules_for(SourceFamily::narrative_profile));
  CHECK(raw(p, "narrative_osint.movement_cues.0") == "<absent>");
  // Only a name header and prose: name and circumstances.
  CHECK(p.candidates.size() == 2);
  CHECK(raw(p, "demographic.name") == "Sam Reyes");
  CHECK(raw(p, "narrative_osint.circumstances") == "Sam Reyes left home after dinner. Nobody saw him.");
}

TEST_CASE("trailer is cut at the sentinel") {
  std::string text = "body line\n%%END-OF-DOCUMENT%%\n{\"x\":1}\n";
  CHECK(strip_trailer(text) == "body line\n");
  CHECK(strip_trailer("no sentinel") == "no sentinel");
}

TEST_CASE("dispatch routes by family") {
  auto rules = bundled();
  std::string text = "Case Number: R-1\nName: A B\nMISSING: C D\n";
  DetectionResult reg;
  reg.family = SourceFamily::registry_form;
  reg.source_label = "r";
  auto d1 = dispatch(reg, segment(text), rules);
  CHECK(raw(d1, "demographic.name") == "A B");
  CHECK(d1.notices.empty());

  DetectionResult bul;
  bul.family = SourceFamily::bulletin;
  CHECK(raw(dispatch(bul, segment(text), rules), "demographic.name") == "C D");

  DetectionResult unk;
  auto d3 = dispatch(unk, segment(text), rules);
  CHECK(raw(d3, "demographic.name") == "A B");
  REQUIRE_FALSE(d3.notices.empty());
  CHECK(d3.notices[0].code == WarnCode::parse_generic_fallback);
}

TEST_CASE("first match wins and duplicates are noted") {
  auto rules = parse_rules(R"j({"pattern_id":"n","field_path":"demographic.name","pattern":"^Name:\\s*(.+)$","scope":"line"})j");
  auto d = apply_rules(segment("Name: First\nName: Second\n"), rules, "x");
  CHECK(raw(d, "demographic.name") == "First");
  REQUIRE(d.notices.size() == 1);
  CHECK(d.notices[0].code == WarnCode::parse_duplicate_match);
}

TEST_CASE("rule file errors") {
  CHECK_THROWS_AS(parse_rules(R"j({"pattern_id":"a","field_path":"x","pattern":"no group","scope":"line"})j"),
                  ConfigError);
  CHECK_THROWS_AS(parse_rules(R"j({"pattern_id":"a","field_path":"x","pattern":"(a)(b)","scope":"line"})j"),
                  ConfigError);
  CHECK_THROWS_AS(parse_rules(R"j({"pattern_id":"a","field_path":"x","pattern":"(a","scope":"line"})j"), ConfigError);
  CHECK_THROWS_AS(parse_rules(R"j({"pattern_id":"a","field_path":"x","pattern":"(a)","scope":"page"})j"), ConfigError);
}
