#include <doctest.h>

#include <fstream>
#include <sstream>

#include "guardian/geocode.hpp"
#include "guardian/schema.hpp"
#include "support.hpp"

using namespace guardian;

namespace {

Gazetteer bundled_gazetteer() { return Gazetteer::load(testsupport::data_path("gazetteer.tsv")); }
RegionTable bundled_regions() { return RegionTable::load(testsupport::data_path("regions.tsv")); }

// Reads the fixture row directly rather than through the loader.
std::pair<double, double> fixture_coords(const std::string& place, const std::string& region) {
  std::ifstream in(testsupport::data_path("gazetteer.tsv"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string name, reg, zips, lat, lon;
    std::getline(ss, name, '\t');
    std::getline(ss, reg, '\t');
    std::getline(ss, zips, '\t');
    std::getline(ss, lat, '\t');
    std::getline(ss, lon, '\t');
    if (name == place && reg == region) return {std::stod(lat), std::stod(lon)};
  }
  FAIL("fixture row missing");
  return {0, 0};
}

}  // namespace

TEST_CASE("normalize_place") {
  CHECK(normalize_place("Culpeper,  Virginia 22701") == "culpeper|virginia|22701");
  CHECK(normalize_place("NORFOLK, Virginia") == "norfolk|virginia");
  CHECK_THROWS_AS(normalize_place(""), Error);
  CHECK_THROWS_AS(normalize_place(" ,;. "), Error);
}

TEST_CASE("gazetteer match with cache") {
  auto gaz = bundled_gazetteer();
  auto regions = bundled_regions();
  GeocodeCache cache;
  GeocodeQuery q{"culpeper|virginia|22701", "Virginia"};
  auto [lat, lon] = fixture_coords("Culpeper", "Virginia");

  auto first = geocode(q, gaz, regions, cache);
  REQUIRE(first.result.lat);
  CHECK(*first.result.lat == lat);
  CHECK(*first.result.lon == lon);
  CHECK_FALSE(first.result.cache_hit);
  CHECK(first.result.matched_place);
  CHECK(gaz.lookups() == 1);

  auto second = geocode(q, gaz, regions, cache);
  CHECK(second.result.cache_hit);
  CHECK(*second.result.lat == lat);
  CHECK(gaz.lookups() == 1);
  CHECK(cache.hits() == 1);
  CHECK(cache.misses() == 1);
}

TEST_CASE("ambiguity and bias") {
  auto gaz = bundled_gazetteer();
  auto regions = bundled_regions();
  GeocodeCache cache;
  auto amb = geocode({"springfield", std::nullopt}, gaz, regions, cache);
  CHECK_FALSE(amb.result.lat);
  CHECK(amb.result.ambiguous);
  REQUIRE_FALSE(amb.notices.empty());
  CHECK(amb.notices[0].code == WarnCode::geocode_ambiguous);

  auto biased = geocode({"springfield", std::string("Illinois")}, gaz, regions, cache);
  REQUIRE(biased.result.lat);
  auto [lat, lon] = fixture_coords("Springfield", "Illinois");
  CHECK(*biased.result.lat == lat);
  CHECK(*biased.result.lon == lon);

  // Abbreviations resolve through the region table.
  auto abbrev = geocode({"springfield|il", std::nullopt}, gaz, regions, cache);
  REQUIRE(abbrev.result.lat);
  CHECK(*abbrev.result.lat == lat);
}

TEST_CASE("unknown places are cached as negatives") {
  auto gaz = bundled_gazetteer();
  auto regions = bundled_regions();
  testsupport::TempDir dir("geo");
  auto path = (dir / "cache.tsv").string();
  {
    GeocodeCache cache(path);
    auto miss = geocode({"atlantis", std::nullopt}, gaz, regions, cache);
    CHECK_FALSE(miss.result.lat);
    CHECK_FALSE(miss.result.matched_place);
    CHECK_FALSE(miss.result.plausible);
    geocode({"culpeper|virginia", std::string("Virginia")}, gaz, regions, cache);
  }
  GeocodeCache reloaded(path);
  CHECK(reloaded.size() == 2);
  auto before = gaz.lookups();
  auto again = geocode({"atlantis", std::nullopt}, gaz, regions, reloaded);
  CHECK(again.result.cache_hit);
  CHECK_FALSE(again.result.lat);
  auto hit = geocode({"culpeper|virginia", std::string("Virginia")}, gaz, regions, reloaded);
  CHECK(hit.result.cache_hit);
  CHECK(hit.result.lat == fixture_coords("Culpeper", "Virginia").first);
  CHECK(gaz.lookups() == before);

  // compact() keeps the content and sorts it.
  reloaded.compact();
  GeocodeCache compacted(path);
  CHECK(compacted.size() == 2);
  CHECK(compacted.get(GeocodeCache::key_for({"atlantis", std::nullopt})).has_value());
}

TEST_CASE("plausibility") {
  auto regions = bundled_regions();
  auto [lat, lon] = fixture_coords("Culpeper", "Virginia");
  GeocodeResult r;
  r.lat = lat;
  r.lon = lon;
  r.matched_place = "Culpeper";
  CHECK(plausibility(r, std::string("Virginia"), regions));
  CHECK(plausibility(r, std::string("VA"), regions));
  CHECK(plausibility(r, std::nullopt, regions));
  CHECK_FALSE(plausibility(r, std::string("Texas"), regions));
  CHECK_FALSE(plausibility(r, std::string("Atlantis"), regions));

  GeocodeResult zero;
  zero.lat = 0.0;
  zero.lon = 0.0;
  CHECK_FALSE(plausibility(zero, std::nullopt, regions));
  CHECK_FALSE(plausibility(zero, std::string("Virginia"), regions));
  zero.lat = 5e-7;
  zero.lon = -5e-7;
  CHECK_FALSE(plausibility(zero, std::nullopt, regions));
  CHECK_FALSE(plausibility(GeocodeResult{}, std::nullopt, regions));
}

TEST_CASE("geocode_record fills spatial fields") {
  auto gaz = bundled_gazetteer();
  auto regions = bundled_regions();
  GeocodeCache cache;
  auto rec = testsupport::minimal_record();
  rec["spatial"]["city"] = "Culpeper";
  rec["spatial"]["state"] = "Virginia";
  rec["spatial"]["postal_code"] = "22701";
  auto notices = geocode_record(rec, gaz, regions, cache);
  CHECK(notices.empty());
  CHECK(rec["spatial"]["lat"] == fixture_coords("Culpeper", "Virginia").first);
  CHECK(rec["spatial"]["geocode_method"] == "gazetteer");
  CHECK(rec["spatial"]["geocode_plausible"] == true);
  CHECK(validate(rec, default_schema()).valid);

  // Source-provided coordinates are not looked up; (0,0) is implausible.
  auto src = testsupport::minimal_record();
  src["spatial"]["lat"] = 0.0;
  src["spatial"]["lon"] = 0.0;
  src["spatial"]["geocode_method"] = "source_provided";
  auto before = gaz.lookups();
  auto n = geocode_record(src, gaz, regions, cache);
  CHECK(gaz.lookups() == before);
  CHECK(src["spatial"]["geocode_plausible"] == false);
  REQUIRE(n.size() == 1);
  CHECK(n[0].code == WarnCode::geocode_implausible);

  auto none = testsupport::minimal_record();
  geocode_record(none, gaz, regions, cache);
  CHECK(none["spatial"]["geocode_method"] == "none");
  CHECK(none["spatial"]["lat"].is_null());
}

TEST_CASE("loaders") {
  auto g = Gazetteer::parse("# comment\nTown\tState\t11111,22222\t1.5\t2.5\nVillage\tState\t\t3\t4\n");
  REQUIRE(g.entries().size() == 2);
  CHECK(g.entries()[0].postal_codes.size() == 2);
  CHECK(g.entries()[1].postal_codes.empty());
  CHECK_THROWS(Gazetteer::parse("Town\tState\t\t95\t0\n"));
  auto r = RegionTable::parse("Virginia\tVA\t36.54\t-83.68\t39.47\t-75.24\n");
  CHECK(r.find("va") != nullptr);
  CHECK(r.canonical("VA") == "virginia");
}
