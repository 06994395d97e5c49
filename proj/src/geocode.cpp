#include "guardian/geocode.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

namespace guardian {

namespace {

std::vector<std::string> tsv_fields(const std::string& line) { return split(line, '\t'); }

double parse_double(const std::string& s, const std::string& where) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(where + "bad number '" + s + "'");
  }
}

bool is_zip(std::string_view s) {
  if (s.size() != 5 && s.size() != 10) return false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (i == 5) {
      if (s[i] != '-') return false;
    } else if (s[i] < '0' || s[i] > '9') {
      return false;
    }
  }
  return true;
}

}  // namespace

// --- regions -------------------------------------------------------------------

RegionTable::RegionTable(std::vector<RegionBox> boxes) : boxes_(std::move(boxes)) {
  for (size_t i = 0; i < boxes_.size(); ++i) {
    index_[to_lower(boxes_[i].name)] = i;
    if (!boxes_[i].abbreviation.empty()) index_[to_lower(boxes_[i].abbreviation)] = i;
  }
}

RegionTable RegionTable::parse(std::string_view text) {
  std::vector<RegionBox> boxes;
  int lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    auto line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto where = "regions line " + std::to_string(lineno) + ": ";
    auto f = tsv_fields(raw);
    if (f.size() != 6) throw ConfigError(where + "expected 6 tab-separated fields");
    RegionBox b{trim(f[0]), trim(f[1]), parse_double(trim(f[2]), where), parse_double(trim(f[3]), where),
                parse_double(trim(f[4]), where), parse_double(trim(f[5]), where)};
    if (b.min_lat > b.max_lat || b.min_lon > b.max_lon) throw ConfigError(where + "empty box");
    boxes.push_back(std::move(b));
  }
  return RegionTable(std::move(boxes));
}

RegionTable RegionTable::load(const std::string& path) {
  try {
    return parse(read_file(path));
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
}

const RegionBox* RegionTable::find(std::string_view name_or_abbrev) const {
  auto it = index_.find(canonical_text(name_or_abbrev));
  return it == index_.end() ? nullptr : &boxes_[it->second];
}

std::string RegionTable::canonical(std::string_view name_or_abbrev) const {
  if (auto* b = find(name_or_abbrev)) return to_lower(b->name);
  return canonical_text(name_or_abbrev);
}

// --- gazetteer -------------------------------------------------------------------

Gazetteer::Gazetteer(std::vector<GazetteerEntry> entries) : entries_(std::move(entries)) {}

Gazetteer Gazetteer::parse(std::string_view text) {
  std::vector<GazetteerEntry> entries;
  int lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    auto line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto where = "gazetteer line " + std::to_string(lineno) + ": ";
    auto f = tsv_fields(raw);
    if (f.size() != 5) throw ConfigError(where + "expected 5 tab-separated fields");
    GazetteerEntry e;
    e.place_name = trim(f[0]);
    e.admin_region = trim(f[1]);
    for (const auto& z : split(f[2], ',')) {
      auto zip = trim(z);
      if (!zip.empty()) e.postal_codes.push_back(zip);
    }
    e.lat = parse_double(trim(f[3]), where);
    e.lon = parse_double(trim(f[4]), where);
    if (e.place_name.empty() || e.admin_region.empty()) throw ConfigError(where + "empty place or region");
    if (e.lat < -90 || e.lat > 90 || e.lon < -180 || e.lon > 180) {
      throw ConfigError(where + "coordinates out of range");
    }
    entries.push_back(std::move(e));
  }
  return Gazetteer(std::move(entries));
}

Gazetteer Gazetteer::load(const std::string& path) {
  try {
    return parse(read_file(path));
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
}

MatchOutcome Gazetteer::match(std::string_view normalized_key, const std::optional<std::string>& bias_region,
                              const RegionTable& regions) const {
  ++lookups_;
  auto parts = split(normalized_key, '|');
  std::vector<std::string> zips, names;
  std::optional<std::string> region;
  for (const auto& p : parts) {
    if (p.empty()) continue;
    if (is_zip(p)) {
      zips.push_back(p.substr(0, 5));
    } else if (!names.empty() && !region && regions.find(p)) {
      region = regions.canonical(p);
    } else {
      names.push_back(p);
    }
  }
  // "virginia" alone is a region, not a place.
  if (names.size() == 1 && !region && regions.find(names[0]) && zips.empty()) {
    return {};
  }

  auto region_of = [&](const GazetteerEntry& e) { return regions.canonical(e.admin_region); };
  auto unique = [](const std::vector<size_t>& hits) -> MatchOutcome {
    if (hits.size() == 1) return {hits[0], false};
    return {std::nullopt, hits.size() > 1};
  };

  if (!zips.empty()) {
    std::vector<size_t> hits;
    for (size_t i = 0; i < entries_.size(); ++i) {
      for (const auto& z : entries_[i].postal_codes) {
        if (z.substr(0, 5) == zips.front()) {
          hits.push_back(i);
          break;
        }
      }
    }
    if (hits.size() == 1) return {hits[0], false};
  }
  if (names.empty()) return {};
  const std::string& place = names.front();

  std::vector<size_t> named;
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (canonical_text(entries_[i].place_name) == place) named.push_back(i);
  }
  auto within = [&](const std::string& r) {
    std::vector<size_t> hits;
    for (auto i : named) {
      if (region_of(entries_[i]) == r) hits.push_back(i);
    }
    return hits;
  };
  if (region) {
    auto hits = within(*region);
    if (!hits.empty()) return unique(hits);
  }
  if (bias_region && !trim(*bias_region).empty()) {
    auto hits = within(regions.canonical(*bias_region));
    if (!hits.empty()) return unique(hits);
  }
  if (region) return {};  // place exists only in other regions
  std::set<std::string> named_regions;
  for (auto i : named) named_regions.insert(region_of(entries_[i]));
  if (named.size() == 1) return {named[0], false};
  return {std::nullopt, named_regions.size() > 1 || named.size() > 1};
}

// --- normalize --------------------------------------------------------------------

std::string normalize_place(std::string_view raw) {
  std::vector<std::string> parts;
  std::string cur;
  auto flush = [&] {
    auto p = collapse_spaces(cur);
    p = trim(p);
    if (!p.empty()) parts.push_back(p);
    cur.clear();
  };
  for (char ch : raw) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (c == ',' || c == ';' || c == '/' || c == '|') {
      flush();
    } else if (std::isalnum(c) || c >= 0x80) {
      cur += static_cast<char>(std::tolower(c));
    } else if (c == '-' && !cur.empty() && std::isdigit(static_cast<unsigned char>(cur.back()))) {
      cur += '-';  // ZIP+4
    } else {
      cur += ' ';
    }
  }
  flush();
  // A trailing ZIP becomes its own part.
  std::vector<std::string> out;
  for (auto& p : parts) {
    auto sp = p.rfind(' ');
    if (sp != std::string::npos && is_zip(std::string_view(p).substr(sp + 1))) {
      out.push_back(p.substr(0, sp));
      out.push_back(p.substr(sp + 1));
    } else {
      if (!p.empty() && p.back() == '-') p.pop_back();
      out.push_back(p);
    }
  }
  std::string key;
  for (const auto& p : out) {
    if (p.empty()) continue;
    if (!key.empty()) key += '|';
    key += p;
  }
  if (key.empty()) throw Error("empty geocode query");
  return key;
}

// --- cache ---------------------------------------------------------------------------

namespace {

std::string cache_line(const std::string& key, const GeocodeResult& r) {
  std::string status = r.lat ? "match" : (r.ambiguous ? "ambiguous" : "none");
  std::string line = key + "\t" + status + "\t";
  if (r.lat) line += format_decimal(*r.lat) + "\t" + format_decimal(*r.lon) + "\t" + r.matched_place.value_or("");
  else line += "\t\t";
  return line;
}

}  // namespace

GeocodeCache::GeocodeCache(std::string path) : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  int lineno = 0;
  for (const auto& line : split(read_file(path_), '\n')) {
    ++lineno;
    if (line.empty()) continue;
    auto f = tsv_fields(line);
    auto where = "cache line " + std::to_string(lineno) + ": ";
    if (f.size() != 5) throw ConfigError(where + "expected 5 tab-separated fields");
    GeocodeResult r;
    if (f[1] == "match") {
      r.lat = parse_double(f[2], where);
      r.lon = parse_double(f[3], where);
      r.matched_place = f[4];
    } else if (f[1] == "ambiguous") {
      r.ambiguous = true;
    } else if (f[1] != "none") {
      throw ConfigError(where + "unknown status " + f[1]);
    }
    entries_[f[0]] = r;
  }
}

std::string GeocodeCache::key_for(const GeocodeQuery& q) {
  return q.normalized_key + "#" + canonical_text(q.bias_region.value_or(""));
}

std::optional<GeocodeResult> GeocodeCache::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return it->second;
}

void GeocodeCache::put(const std::string& key, const GeocodeResult& result) {
  GeocodeResult stored = result;
  stored.cache_hit = false;
  stored.plausible.reset();
  std::lock_guard lock(mu_);
  entries_[key] = stored;
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw IoError("cannot append to geocode cache " + path_);
  out << cache_line(key, stored) << '\n';
}

void GeocodeCache::compact() {
  std::lock_guard lock(mu_);
  if (path_.empty()) return;
  std::string text;
  for (const auto& [k, r] : entries_) text += cache_line(k, r) + "\n";
  auto tmp = path_ + ".tmp";
  write_file(tmp, text);
  std::filesystem::rename(tmp, path_);
}

size_t GeocodeCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

// --- geocode ----------------------------------------------------------------------------

GeocodeOutput geocode(const GeocodeQuery& query, const Gazetteer& gazetteer, const RegionTable& regions,
                      GeocodeCache& cache) {
  GeocodeOutput out;
  auto key = GeocodeCache::key_for(query);
  if (auto cached = cache.get(key)) {
    out.result = *cached;
    out.result.cache_hit = true;
  } else {
    auto m = gazetteer.match(query.normalized_key, query.bias_region, regions);
    if (m.entry) {
      const auto& e = gazetteer.entries()[*m.entry];
      out.result.lat = e.lat;
      out.result.lon = e.lon;
      out.result.matched_place = e.place_name + ", " + e.admin_region;
    }
    out.result.ambiguous = m.ambiguous;
    cache.put(key, out.result);
  }
  if (out.result.ambiguous) {
    out.notices.push_back({WarnCode::geocode_ambiguous, "'" + query.normalized_key + "' names places in several regions"});
  } else if (!out.result.lat) {
    out.notices.push_back({WarnCode::geocode_no_match, "no gazetteer match for '" + query.normalized_key + "'"});
  }
  return out;
}

bool plausibility(const GeocodeResult& result, const std::optional<std::string>& expected_region,
                  const RegionTable& regions) {
  if (!result.lat || !result.lon) return false;
  if (std::abs(*result.lat) < 1e-6 && std::abs(*result.lon) < 1e-6) return false;
  if (!expected_region || trim(*expected_region).empty()) return true;
  const RegionBox* box = regions.find(*expected_region);
  return box && box->contains(*result.lat, *result.lon);
}

namespace {

std::optional<std::string> text_at(const Json& section, const char* key) {
  auto it = section.find(key);
  if (it == section.end() || !it->is_string()) return std::nullopt;
  auto s = trim(it->get<std::string>());
  if (s.empty()) return std::nullopt;
  return s;
}

}  // namespace

std::vector<Notice> geocode_record(Json& record, const Gazetteer& gazetteer, const RegionTable& regions,
                                   GeocodeCache& cache) {
  std::vector<Notice> notices;
  if (!record.contains("spatial") || !record["spatial"].is_object()) return notices;
  Json& sp = record["spatial"];
  auto state = text_at(sp, "state");

  if (sp.value("geocode_method", Json()).is_string() && sp["geocode_method"] == "source_provided") {
    GeocodeResult given;
    if (sp.value("lat", Json()).is_number() && sp.value("lon", Json()).is_number()) {
      given.lat = sp["lat"].get<double>();
      given.lon = sp["lon"].get<double>();
    }
    if (given.lat) {
      bool ok = plausibility(given, state, regions);
      sp["geocode_plausible"] = ok;
      if (!ok) notices.push_back({WarnCode::geocode_implausible, "source coordinates outside expected region"});
    } else {
      sp["geocode_plausible"] = nullptr;
    }
    return notices;
  }

  // Query from the structured parts when a city exists, else the free text.
  std::string raw;
  if (auto city = text_at(sp, "city")) {
    raw = *city;
    if (state) raw += ", " + *state;
    if (auto zip = text_at(sp, "postal_code")) raw += " " + *zip;
  } else if (auto loc = text_at(sp, "last_seen_location")) {
    raw = *loc;
  } else if (auto zip = text_at(sp, "postal_code")) {
    raw = *zip;
  }

  sp["lat"] = nullptr;
  sp["lon"] = nullptr;
  sp["geocode_method"] = "none";
  sp["geocode_plausible"] = nullptr;
  if (raw.empty()) return notices;

  GeocodeQuery q;
  try {
    q.normalized_key = normalize_place(raw);
  } catch (const Error& e) {
    notices.push_back({WarnCode::geocode_bad_query, e.what()});
    return notices;
  }
  q.bias_region = state;
  auto out = geocode(q, gazetteer, regions, cache);
  notices.insert(notices.end(), out.notices.begin(), out.notices.end());
  if (!out.result.lat) return notices;
  sp["lat"] = *out.result.lat;
  sp["lon"] = *out.result.lon;
  sp["geocode_method"] = "gazetteer";
  bool ok = plausibility(out.result, state, regions);
  sp["geocode_plausible"] = ok;
  if (!ok) notices.push_back({WarnCode::geocode_implausible, "coordinates outside expected region"});
  return notices;
}

}  // namespace guardian
