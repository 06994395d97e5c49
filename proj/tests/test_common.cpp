#include <doctest.h>

#include <ctime>

#include "guardian/common.hpp"
#include "guardian/pattern.hpp"
#include "guardian/timeutil.hpp"

using namespace guardian;

TEST_CASE("string helpers") {
  CHECK(trim("  a b \t") == "a b");
  CHECK(collapse_spaces("a   b\t\tc") == "a b c");
  CHECK(canonical_text("  Culpeper   VIRGINIA ") == "culpeper virginia");
  CHECK(split("a,b,,c", ',') == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(starts_with_icase("Date of Last Contact", "date OF"));
  CHECK_FALSE(starts_with_icase("Da", "Date"));
}

TEST_CASE("enum round trips") {
  for (auto f : {SourceFamily::registry_form, SourceFamily::bulletin, SourceFamily::narrative_profile,
                 SourceFamily::unknown}) {
    CHECK(parse_source_family(to_string(f)) == f);
  }
  for (auto e : {Engine::layout, Engine::basic, Engine::ocr, Engine::plaintext}) {
    CHECK(parse_engine(to_string(e)) == e);
  }
  CHECK_FALSE(parse_extraction_path("hybrid").has_value());
}

TEST_CASE("format_decimal is shortest round trip") {
  CHECK(format_decimal(38.47) == "38.47");
  CHECK(format_decimal(-77.9967) == "-77.9967");
  CHECK(std::stod(format_decimal(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("ISO 8601 parsing") {
  auto d = parse_iso8601("2023-07-01");
  REQUIRE(d);
  CHECK(d->precision == TimePrecision::date);
  CHECK(d->year == 2023);

  auto t = parse_iso8601("2023-07-01T14:30:00-04:00");
  REQUIRE(t);
  CHECK(t->precision == TimePrecision::datetime);
  CHECK(t->offset_minutes == -240);

  std::tm tm{};
  tm.tm_year = 2023 - 1900;
  tm.tm_mon = 6;
  tm.tm_mday = 1;
  tm.tm_hour = 18;
  tm.tm_min = 30;
  CHECK(t->sort_key() == doctest::Approx(static_cast<double>(timegm(&tm))));

  CHECK(parse_iso8601("2023-07-01T18:30Z")->sort_key() == t->sort_key());
  CHECK_FALSE(parse_iso8601("2023-02-30"));
  CHECK_FALSE(parse_iso8601("13/45/2020"));
  CHECK_FALSE(parse_iso8601("2023-07-01T25:00"));
  CHECK_FALSE(parse_iso8601("2023-07-01 junk"));
  CHECK(parse_iso8601("2024-02-29"));
  CHECK_FALSE(parse_iso8601("2023-02-29"));
}

TEST_CASE("utc_now_iso shape") {
  auto now = utc_now_iso();
  CHECK(now.size() == 20);
  CHECK(now.back() == 'Z');
  CHECK(parse_iso8601(now));
}

TEST_CASE("pattern anchors at lines and keeps dot on one line") {
  Pattern p("^Name:\\s*(.+)$");
  auto m = p.find("Header\nName: Jane Roe\nAge: 3");
  REQUIRE(m);
  REQUIRE(m->groups.size() == 1);
  REQUIRE(m->groups[0]);
  CHECK(m->groups[0]->begin == 13);
  CHECK(m->groups[0]->end == 21);
  CHECK(p.capture_count() == 1);
  CHECK(Pattern("(?i)^case").matches_anywhere("x\nCASE 1"));
  CHECK(Pattern("abc", {.case_insensitive = true}).full_match("ABC"));
  CHECK_THROWS_AS(Pattern("(unclosed"), ConfigError);
  CHECK(Pattern("a").find_all("banana").size() == 3);
}
