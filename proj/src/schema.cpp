#include "guardian/schema.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "guardian/timeutil.hpp"

namespace guardian {

std::string_view to_string(Sex s) {
  switch (s) {
    case Sex::female: return "female";
    case Sex::male: return "male";
    case Sex::unknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(GeocodeMethod m) {
  switch (m) {
    case GeocodeMethod::source_provided: return "source_provided";
    case GeocodeMethod::gazetteer: return "gazetteer";
    case GeocodeMethod::none: return "none";
  }
  return "none";
}

std::string_view to_string(CaseStatus s) {
  switch (s) {
    case CaseStatus::missing: return "missing";
    case CaseStatus::located: return "located";
    case CaseStatus::deceased: return "deceased";
    case CaseStatus::unknown: return "unknown";
  }
  return "unknown";
}

std::optional<Sex> parse_sex(std::string_view s) {
  for (auto v : {Sex::female, Sex::male, Sex::unknown})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

std::optional<GeocodeMethod> parse_geocode_method(std::string_view s) {
  for (auto v : {GeocodeMethod::source_provided, GeocodeMethod::gazetteer, GeocodeMethod::none})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

std::optional<CaseStatus> parse_case_status(std::string_view s) {
  for (auto v : {CaseStatus::missing, CaseStatus::located, CaseStatus::deceased, CaseStatus::unknown})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

// --- CaseRecord <-> Json ----------------------------------------------------

namespace {

template <typename T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

const Json* child(const Json& obj, const char* key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

[[noreturn]] void type_error(const std::string& path, const char* want) {
  throw Error("case record field " + path + ": expected " + want);
}

std::optional<std::string> get_str(const Json& obj, const char* key, const std::string& section) {
  auto* v = child(obj, key);
  if (!v) return std::nullopt;
  if (!v->is_string()) type_error(section + "." + key, "string");
  return v->get<std::string>();
}

std::optional<int> get_int(const Json& obj, const char* key, const std::string& section) {
  auto* v = child(obj, key);
  if (!v) return std::nullopt;
  if (!v->is_number_integer()) type_error(section + "." + key, "integer");
  return v->get<int>();
}

std::optional<double> get_dec(const Json& obj, const char* key, const std::string& section) {
  auto* v = child(obj, key);
  if (!v) return std::nullopt;
  if (!v->is_number()) type_error(section + "." + key, "number");
  return v->get<double>();
}

template <typename E, typename Parse>
E get_enum(const Json& obj, const char* key, const std::string& section, E fallback, Parse parse) {
  auto s = get_str(obj, key, section);
  if (!s) return fallback;
  auto e = parse(*s);
  if (!e) type_error(section + "." + key, "enum value");
  return *e;
}

const Json& section_of(const Json& root, const char* name) {
  static const Json empty = Json::object();
  auto* s = child(root, name);
  if (!s) return empty;
  if (!s->is_object()) type_error(name, "object");
  return *s;
}

}  // namespace

Json to_json(const CaseRecord& r) {
  Json j = Json::object();
  j["case_id"] = r.case_id;

  const auto& d = r.demographic;
  Json dem = Json::object();
  dem["name"] = opt(d.name);
  dem["sex"] = to_string(d.sex);
  dem["age_years"] = opt(d.age_years);
  dem["age_min"] = opt(d.age_min);
  dem["age_max"] = opt(d.age_max);
  dem["height_min_cm"] = opt(d.height_min_cm);
  dem["height_max_cm"] = opt(d.height_max_cm);
  dem["weight_min_kg"] = opt(d.weight_min_kg);
  dem["weight_max_kg"] = opt(d.weight_max_kg);
  dem["race_ethnicity"] = opt(d.race_ethnicity);
  j["demographic"] = std::move(dem);

  const auto& s = r.spatial;
  Json sp = Json::object();
  sp["last_seen_location"] = opt(s.last_seen_location);
  sp["city"] = opt(s.city);
  sp["county"] = opt(s.county);
  sp["state"] = opt(s.state);
  sp["postal_code"] = opt(s.postal_code);
  sp["lat"] = opt(s.lat);
  sp["lon"] = opt(s.lon);
  sp["geocode_method"] = to_string(s.geocode_method);
  sp["geocode_plausible"] = opt(s.geocode_plausible);
  j["spatial"] = std::move(sp);

  Json tm = Json::object();
  tm["last_seen_ts"] = opt(r.temporal.last_seen_ts);
  tm["reported_missing_ts"] = opt(r.temporal.reported_missing_ts);
  tm["timezone"] = opt(r.temporal.timezone);
  j["temporal"] = std::move(tm);

  const auto& n = r.narrative_osint;
  Json na = Json::object();
  na["circumstances"] = opt(n.circumstances);
  na["clothing_description"] = opt(n.clothing_description);
  na["distinctive_features"] = opt(n.distinctive_features);
  na["movement_cues"] = n.movement_cues;
  j["narrative_osint"] = std::move(na);

  Json out = Json::object();
  out["status"] = to_string(r.outcome.status);
  out["status_ts"] = opt(r.outcome.status_ts);
  j["outcome"] = std::move(out);

  const auto& p = r.provenance;
  Json pr = Json::object();
  pr["source_label"] = p.source_label;
  pr["source_family"] = to_string(p.source_family);
  pr["extraction_path"] = to_string(p.extraction_path);
  pr["engine_used"] = to_string(p.engine_used);
  pr["document_id"] = p.document_id;
  Json origins = Json::object();
  for (const auto& [path, o] : p.field_origins) {
    origins[path] = Json{{"segment_index", o.segment_index},
                         {"char_start", o.char_start},
                         {"char_end", o.char_end}};
  }
  pr["field_origins"] = std::move(origins);
  pr["ingest_ts"] = p.ingest_ts;
  pr["repair_count"] = p.repair_count;
  pr["warnings_count"] = p.warnings_count;
  j["provenance"] = std::move(pr);
  return j;
}

CaseRecord case_record_from_json(const Json& j) {
  if (!j.is_object()) throw Error("case record must be an object");
  CaseRecord r;
  if (auto* id = child(j, "case_id")) {
    if (!id->is_string()) type_error("case_id", "string");
    r.case_id = id->get<std::string>();
  }

  const Json& dem = section_of(j, "demographic");
  auto& d = r.demographic;
  const std::string D = "demographic";
  d.name = get_str(dem, "name", D);
  d.sex = get_enum(dem, "sex", D, Sex::unknown, parse_sex);
  d.age_years = get_int(dem, "age_years", D);
  d.age_min = get_int(dem, "age_min", D);
  d.age_max = get_int(dem, "age_max", D);
  d.height_min_cm = get_int(dem, "height_min_cm", D);
  d.height_max_cm = get_int(dem, "height_max_cm", D);
  d.weight_min_kg = get_int(dem, "weight_min_kg", D);
  d.weight_max_kg = get_int(dem, "weight_max_kg", D);
  d.race_ethnicity = get_str(dem, "race_ethnicity", D);

  const Json& sp = section_of(j, "spatial");
  auto& s = r.spatial;
  const std::string S = "spatial";
  s.last_seen_location = get_str(sp, "last_seen_location", S);
  s.city = get_str(sp, "city", S);
  s.county = get_str(sp, "county", S);
  s.state = get_str(sp, "state", S);
  s.postal_code = get_str(sp, "postal_code", S);
  s.lat = get_dec(sp, "lat", S);
  s.lon = get_dec(sp, "lon", S);
  s.geocode_method = get_enum(sp, "geocode_method", S, GeocodeMethod::none, parse_geocode_method);
  if (auto* b = child(sp, "geocode_plausible")) {
    if (!b->is_boolean()) type_error("spatial.geocode_plausible", "boolean");
    s.geocode_plausible = b->get<bool>();
  }

  const Json& tm = section_of(j, "temporal");
  const std::string T = "temporal";
  r.temporal.last_seen_ts = get_str(tm, "last_seen_ts", T);
  r.temporal.reported_missing_ts = get_str(tm, "reported_missing_ts", T);
  r.temporal.timezone = get_str(tm, "timezone", T);

  const Json& na = section_of(j, "narrative_osint");
  const std::string N = "narrative_osint";
  auto& n = r.narrative_osint;
  n.circumstances = get_str(na, "circumstances", N);
  n.clothing_description = get_str(na, "clothing_description", N);
  n.distinctive_features = get_str(na, "distinctive_features", N);
  if (auto* cues = child(na, "movement_cues")) {
    if (!cues->is_array()) type_error("narrative_osint.movement_cues", "array");
    for (const auto& c : *cues) {
      if (!c.is_string()) type_error("narrative_osint.movement_cues", "array of strings");
      n.movement_cues.push_back(c.get<std::string>());
    }
  }

  const Json& oc = section_of(j, "outcome");
  r.outcome.status = get_enum(oc, "status", "outcome", CaseStatus::missing, parse_case_status);
  r.outcome.status_ts = get_str(oc, "status_ts", "outcome");

  const Json& pr = section_of(j, "provenance");
  const std::string P = "provenance";
  auto& p = r.provenance;
  p.source_label = get_str(pr, "source_label", P).value_or("unknown");
  p.source_family = get_enum(pr, "source_family", P, SourceFamily::unknown, parse_source_family);
  p.extraction_path =
      get_enum(pr, "extraction_path", P, ExtractionPath::rule, parse_extraction_path);
  p.engine_used = get_enum(pr, "engine_used", P, Engine::plaintext, parse_engine);
  p.document_id = get_str(pr, "document_id", P).value_or("");
  if (auto* fo = child(pr, "field_origins")) {
    if (!fo->is_object()) type_error("provenance.field_origins", "object");
    for (const auto& [key, v] : fo->items()) {
      FieldOrigin o;
      const std::string F = "provenance.field_origins." + key;
      o.segment_index = get_int(v, "segment_index", F).value_or(0);
      o.char_start = get_int(v, "char_start", F).value_or(0);
      o.char_end = get_int(v, "char_end", F).value_or(0);
      p.field_origins[key] = o;
    }
  }
  p.ingest_ts = get_str(pr, "ingest_ts", P).value_or("");
  p.repair_count = get_int(pr, "repair_count", P).value_or(0);
  p.warnings_count = get_int(pr, "warnings_count", P).value_or(0);
  return r;
}

// --- SchemaDefinition ---------------------------------------------------------

std::string_view to_string(ValueKind k) {
  switch (k) {
    case ValueKind::string: return "string";
    case ValueKind::integer: return "integer";
    case ValueKind::decimal: return "decimal";
    case ValueKind::boolean: return "boolean";
    case ValueKind::enumeration: return "enum";
    case ValueKind::list: return "list";
    case ValueKind::section: return "section";
    case ValueKind::timestamp: return "timestamp";
    case ValueKind::map: return "map";
  }
  return "string";
}

std::optional<ValueKind> parse_value_kind(std::string_view s) {
  for (auto k : {ValueKind::string, ValueKind::integer, ValueKind::decimal, ValueKind::boolean,
                 ValueKind::enumeration, ValueKind::list, ValueKind::section,
                 ValueKind::timestamp, ValueKind::map}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

namespace {
std::string parent_of(std::string_view path) {
  auto pos = path.rfind('.');
  return pos == std::string_view::npos ? std::string() : std::string(path.substr(0, pos));
}
}  // namespace

SchemaDefinition::SchemaDefinition(std::vector<SchemaEntry> entries) : entries_(std::move(entries)) {
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const SchemaEntry& a, const SchemaEntry& b) { return a.position < b.position; });
  for (size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.field_path.empty()) throw ConfigError("schema entry with empty field_path");
    split_path(e.field_path);  // syntax check
    if (!index_.emplace(e.field_path, i).second) {
      throw ConfigError("duplicate schema field_path: " + e.field_path);
    }
    if (e.value_kind == ValueKind::enumeration && e.enum_values.empty()) {
      throw ConfigError("enum entry without values: " + e.field_path);
    }
    if (e.pattern) patterns_.emplace(e.field_path, Pattern(*e.pattern));
  }
  for (const auto& e : entries_) {
    auto parent = parent_of(e.field_path);
    if (parent.empty()) continue;
    auto* p = find(parent);
    if (!p || p->value_kind != ValueKind::section) {
      throw ConfigError("schema entry " + e.field_path + " has no parent section");
    }
  }
}

const SchemaEntry* SchemaDefinition::find(std::string_view path) const {
  auto it = index_.find(path);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::vector<const SchemaEntry*> SchemaDefinition::children(std::string_view path) const {
  std::vector<const SchemaEntry*> out;
  for (const auto& e : entries_) {
    if (parent_of(e.field_path) == path) out.push_back(&e);
  }
  return out;
}

std::vector<const SchemaEntry*> SchemaDefinition::leaves() const {
  std::vector<const SchemaEntry*> out;
  for (const auto& e : entries_) {
    if (e.value_kind != ValueKind::section) out.push_back(&e);
  }
  return out;
}

const Pattern* SchemaDefinition::compiled_pattern(std::string_view path) const {
  auto it = patterns_.find(path);
  return it == patterns_.end() ? nullptr : &it->second;
}

bool SchemaDefinition::addresses_field(std::string_view path) const {
  if (find(path)) return true;
  auto parent = parent_of(path);
  auto* p = find(parent);
  if (!p || p->value_kind != ValueKind::list) return false;
  auto last = path.substr(parent.size() + 1);
  return !last.empty() && std::all_of(last.begin(), last.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
}

SchemaDefinition default_schema() {
  std::vector<SchemaEntry> e;
  int pos = 0;
  auto add = [&](std::string path, ValueKind kind, bool required = false) -> SchemaEntry& {
    SchemaEntry s;
    s.field_path = std::move(path);
    s.position = pos++;
    s.value_kind = kind;
    s.required = required;
    e.push_back(std::move(s));
    return e.back();
  };
  auto text = [&](std::string path, bool required = false) -> SchemaEntry& {
    auto& s = add(std::move(path), ValueKind::string, required);
    s.pattern = "\\S";
    return s;
  };
  auto ranged = [&](std::string path, ValueKind kind, double lo, double hi) {
    add(std::move(path), kind).numeric_range = std::make_pair(lo, hi);
  };
  auto enumeration = [&](std::string path, std::vector<std::string> values, bool required = false) {
    add(std::move(path), ValueKind::enumeration, required).enum_values = std::move(values);
  };

  add("case_id", ValueKind::string, true).pattern = "\\A[A-Za-z0-9][A-Za-z0-9._#:/-]*\\z";

  add("demographic", ValueKind::section, true);
  text("demographic.name");
  enumeration("demographic.sex", {"female", "male", "unknown"});
  ranged("demographic.age_years", ValueKind::integer, 0, 120);
  ranged("demographic.age_min", ValueKind::integer, 0, 120);
  ranged("demographic.age_max", ValueKind::integer, 0, 120);
  ranged("demographic.height_min_cm", ValueKind::integer, 30, 250);
  ranged("demographic.height_max_cm", ValueKind::integer, 30, 250);
  ranged("demographic.weight_min_kg", ValueKind::integer, 1, 400);
  ranged("demographic.weight_max_kg", ValueKind::integer, 1, 400);
  text("demographic.race_ethnicity");

  add("spatial", ValueKind::section, true);
  text("spatial.last_seen_location");
  text("spatial.city");
  text("spatial.county");
  text("spatial.state");
  add("spatial.postal_code", ValueKind::string).pattern = "\\A[0-9]{5}(-[0-9]{4})?\\z";
  ranged("spatial.lat", ValueKind::decimal, -90, 90);
  ranged("spatial.lon", ValueKind::decimal, -180, 180);
  enumeration("spatial.geocode_method", {"source_provided", "gazetteer", "none"});
  add("spatial.geocode_plausible", ValueKind::boolean);

  add("temporal", ValueKind::section, true);
  add("temporal.last_seen_ts", ValueKind::timestamp);
  add("temporal.reported_missing_ts", ValueKind::timestamp);
  add("temporal.timezone", ValueKind::string).pattern =
      "\\A(Z|UTC|[+-](0[0-9]|1[0-4]):[0-5][0-9]|[A-Za-z]+(/[A-Za-z0-9_+-]+)+)\\z";

  add("narrative_osint", ValueKind::section, true);
  text("narrative_osint.circumstances");
  text("narrative_osint.clothing_description");
  text("narrative_osint.distinctive_features");
  add("narrative_osint.movement_cues", ValueKind::list).pattern = "\\A\\S(.*\\S)?\\z";

  add("outcome", ValueKind::section, true);
  enumeration("outcome.status", {"missing", "located", "deceased", "unknown"});
  add("outcome.status_ts", ValueKind::timestamp);

  add("provenance", ValueKind::section, true);
  text("provenance.source_label", true);
  enumeration("provenance.source_family",
              {"registry_form", "bulletin", "narrative_profile", "unknown"});
  enumeration("provenance.extraction_path", {"rule", "llm"}, true);
  enumeration("provenance.engine_used", {"layout", "basic", "ocr", "plaintext"});
  text("provenance.document_id");
  add("provenance.field_origins", ValueKind::map);
  add("provenance.ingest_ts", ValueKind::timestamp);
  ranged("provenance.repair_count", ValueKind::integer, 0, 1000000);
  ranged("provenance.warnings_count", ValueKind::integer, 0, 1000000);

  return SchemaDefinition(std::move(e));
}

std::string serialize_schema(const SchemaDefinition& schema) {
  std::vector<const SchemaEntry*> sorted;
  for (const auto& e : schema.entries()) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->field_path < b->field_path; });
  std::string out;
  for (const auto* e : sorted) {
    Json j = Json::object();
    j["field_path"] = e->field_path;
    j["position"] = e->position;
    j["value_kind"] = to_string(e->value_kind);
    j["required"] = e->required;
    if (!e->enum_values.empty()) j["enum_values"] = e->enum_values;
    if (e->numeric_range) j["numeric_range"] = {e->numeric_range->first, e->numeric_range->second};
    if (e->pattern) j["pattern"] = *e->pattern;
    out += j.dump();
    out += '\n';
  }
  return out;
}

SchemaDefinition parse_schema(std::string_view text) {
  std::vector<SchemaEntry> entries;
  int lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    if (trim(raw).empty()) continue;
    auto where = "schema line " + std::to_string(lineno) + ": ";
    Json j;
    try {
      j = Json::parse(raw);
    } catch (const Json::parse_error& e) {
      throw ConfigError(where + e.what());
    }
    try {
      SchemaEntry s;
      s.field_path = j.at("field_path").get<std::string>();
      s.position = j.at("position").get<int>();
      auto kind = parse_value_kind(j.at("value_kind").get<std::string>());
      if (!kind) throw ConfigError(where + "unknown value_kind");
      s.value_kind = *kind;
      s.required = j.value("required", false);
      if (j.contains("enum_values")) s.enum_values = j["enum_values"].get<std::vector<std::string>>();
      if (j.contains("numeric_range")) {
        const auto& r = j["numeric_range"];
        if (!r.is_array() || r.size() != 2) throw ConfigError(where + "numeric_range needs 2 values");
        s.numeric_range = std::make_pair(r[0].get<double>(), r[1].get<double>());
      }
      if (j.contains("pattern")) s.pattern = j["pattern"].get<std::string>();
      entries.push_back(std::move(s));
    } catch (const Json::exception& e) {
      throw ConfigError(where + e.what());
    }
  }
  return SchemaDefinition(std::move(entries));
}

SchemaDefinition load_schema(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_schema(text);
}

Json record_skeleton(const SchemaDefinition& schema) {
  Json root = Json::object();
  for (const auto& e : schema.entries()) {
    auto parts = split_path(e.field_path);
    Json* node = &root;
    for (size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
    Json value;
    switch (e.value_kind) {
      case ValueKind::section:
      case ValueKind::map: value = Json::object(); break;
      case ValueKind::list: value = Json::array(); break;
      default: value = nullptr;
    }
    (*node)[parts.back()] = std::move(value);
  }
  return root;
}

// --- resolve_path -----------------------------------------------------------

std::vector<std::string> split_path(std::string_view field_path) {
  if (field_path.empty()) return {};
  auto parts = split(field_path, '.');
  for (const auto& p : parts) {
    if (p.empty()) throw PathSyntaxError("empty segment in path '" + std::string(field_path) + "'");
    for (char c : p) {
      if (static_cast<unsigned char>(c) < 0x20) {
        throw PathSyntaxError("control character in path '" + std::string(field_path) + "'");
      }
    }
  }
  return parts;
}

const Json* resolve_path(const Json& record, std::string_view field_path) {
  const Json* node = &record;
  for (const auto& seg : split_path(field_path)) {
    if (node->is_object()) {
      auto it = node->find(seg);
      if (it == node->end()) return nullptr;
      node = &*it;
    } else if (node->is_array()) {
      if (!std::all_of(seg.begin(), seg.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return nullptr;
      }
      size_t idx = std::stoul(seg);
      if (idx >= node->size()) return nullptr;
      node = &(*node)[idx];
    } else {
      return nullptr;
    }
  }
  return node;
}

namespace {
bool is_index(const std::string& seg) {
  return !seg.empty() && std::all_of(seg.begin(), seg.end(), [](char c) { return c >= '0' && c <= '9'; });
}
}  // namespace

void assign_path(Json& record, std::string_view field_path, Json value) {
  auto parts = split_path(field_path);
  if (parts.empty()) {
    record = std::move(value);
    return;
  }
  Json* node = &record;
  for (size_t i = 0; i < parts.size(); ++i) {
    const auto& seg = parts[i];
    bool last = i + 1 == parts.size();
    if (node->is_null()) *node = Json::object();
    if (node->is_array()) {
      if (!is_index(seg) || std::stoul(seg) > node->size()) {
        throw PathSyntaxError("bad array index in path '" + std::string(field_path) + "'");
      }
      size_t idx = std::stoul(seg);
      if (idx == node->size()) node->push_back(nullptr);
      node = &(*node)[idx];
    } else if (node->is_object()) {
      node = &(*node)[seg];
    } else {
      throw PathSyntaxError("path '" + std::string(field_path) + "' runs through a scalar");
    }
    if (last) *node = std::move(value);
  }
}

bool erase_path(Json& record, std::string_view field_path) {
  auto parts = split_path(field_path);
  if (parts.empty()) return false;
  auto leaf = parts.back();
  parts.pop_back();
  std::string parent;
  for (const auto& p : parts) parent += (parent.empty() ? "" : ".") + p;
  const Json* found = resolve_path(record, parent);
  if (!found) return false;
  Json* node = const_cast<Json*>(found);
  if (node->is_object()) return node->erase(leaf) > 0;
  if (node->is_array() && is_index(leaf) && std::stoul(leaf) < node->size()) {
    node->erase(node->begin() + static_cast<std::ptrdiff_t>(std::stoul(leaf)));
    return true;
  }
  return false;
}

// --- validate ---------------------------------------------------------------

std::string_view to_string(ViolationCode c) {
  switch (c) {
    case ViolationCode::missing_required: return "missing_required";
    case ViolationCode::wrong_type: return "wrong_type";
    case ViolationCode::out_of_range: return "out_of_range";
    case ViolationCode::bad_enum: return "bad_enum";
    case ViolationCode::bad_pattern: return "bad_pattern";
    case ViolationCode::bad_timestamp: return "bad_timestamp";
    case ViolationCode::unknown_key: return "unknown_key";
  }
  return "wrong_type";
}

namespace {

class Validator {
 public:
  explicit Validator(const SchemaDefinition& schema) : schema_(schema) {}

  ValidationReport run(const Json& candidate) {
    if (!candidate.is_object()) {
      add("", ViolationCode::wrong_type, "record must be an object");
      return finish();
    }
    check_object_keys(candidate, "");
    for (const auto& e : schema_.entries()) check_entry(candidate, e);
    cross_field(candidate);
    return finish();
  }

 private:
  void add(std::string path, ViolationCode code, std::string msg) {
    out_.push_back({std::move(path), code, std::move(msg)});
  }

  ValidationReport finish() {
    std::stable_sort(out_.begin(), out_.end(), [](const auto& a, const auto& b) {
      if (a.field_path != b.field_path) return a.field_path < b.field_path;
      return a.code < b.code;
    });
    ValidationReport r;
    r.violations = std::move(out_);
    r.valid = r.violations.empty();
    return r;
  }

  void check_object_keys(const Json& obj, const std::string& path) {
    for (const auto& [key, value] : obj.items()) {
      std::string child = path.empty() ? key : path + "." + key;
      if (!schema_.find(child)) {
        add(child, ViolationCode::unknown_key, "key '" + key + "' is not part of the schema");
      }
    }
  }

  void check_entry(const Json& root, const SchemaEntry& e) {
    auto parts = split_path(e.field_path);
    // Parent must exist as an object; otherwise the parent's own violation covers it.
    const Json* parent = &root;
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
      auto it = parent->find(parts[i]);
      if (it == parent->end() || !it->is_object()) return;
      parent = &*it;
    }
    auto it = parent->find(parts.back());
    const auto& path = e.field_path;
    if (it == parent->end()) {
      if (e.required) add(path, ViolationCode::missing_required, "required field is missing");
      return;
    }
    const Json& v = *it;
    if (v.is_null()) {
      if (e.required) {
        add(path, e.value_kind == ValueKind::section ? ViolationCode::wrong_type
                                                      : ViolationCode::missing_required,
            "required field is null");
      }
      return;
    }
    switch (e.value_kind) {
      case ValueKind::section:
        if (!v.is_object()) {
          add(path, ViolationCode::wrong_type, "section must be an object");
        } else {
          check_object_keys(v, path);
        }
        break;
      case ValueKind::string:
        if (!v.is_string()) return add(path, ViolationCode::wrong_type, "expected string");
        check_pattern(e, path, v.get_ref<const std::string&>());
        break;
      case ValueKind::integer:
        if (!v.is_number_integer()) return add(path, ViolationCode::wrong_type, "expected integer");
        check_range(e, path, v.get<double>());
        break;
      case ValueKind::decimal:
        if (!v.is_number()) return add(path, ViolationCode::wrong_type, "expected number");
        check_range(e, path, v.get<double>());
        break;
      case ValueKind::boolean:
        if (!v.is_boolean()) add(path, ViolationCode::wrong_type, "expected boolean");
        break;
      case ValueKind::enumeration: {
        if (!v.is_string()) return add(path, ViolationCode::wrong_type, "expected enum string");
        const auto& s = v.get_ref<const std::string&>();
        if (std::find(e.enum_values.begin(), e.enum_values.end(), s) == e.enum_values.end()) {
          add(path, ViolationCode::bad_enum, "'" + s + "' is not one of the allowed values");
        }
        break;
      }
      case ValueKind::timestamp:
        if (!v.is_string()) return add(path, ViolationCode::wrong_type, "expected ISO 8601 string");
        if (!parse_iso8601(v.get_ref<const std::string&>())) {
          add(path, ViolationCode::bad_timestamp,
              "'" + v.get<std::string>() + "' is not an ISO 8601 date or date-time");
        }
        break;
      case ValueKind::list:
        if (!v.is_array()) return add(path, ViolationCode::wrong_type, "expected list");
        for (size_t i = 0; i < v.size(); ++i) {
          auto ipath = path + "." + std::to_string(i);
          if (!v[i].is_string()) {
            add(ipath, ViolationCode::wrong_type, "list element must be a string");
          } else {
            check_pattern(e, ipath, v[i].get_ref<const std::string&>());
          }
        }
        break;
      case ValueKind::map:
        check_origin_map(path, v);
        break;
    }
  }

  void check_pattern(const SchemaEntry& e, const std::string& path, const std::string& s) {
    const Pattern* p = schema_.compiled_pattern(e.field_path);
    if (p && !p->matches_anywhere(s)) {
      add(path, ViolationCode::bad_pattern, "value does not match pattern " + p->source());
    }
  }

  void check_range(const SchemaEntry& e, const std::string& path, double x) {
    if (!e.numeric_range) return;
    if (!std::isfinite(x) || x < e.numeric_range->first || x > e.numeric_range->second) {
      std::ostringstream msg;
      msg << "value " << x << " outside [" << e.numeric_range->first << ", "
          << e.numeric_range->second << "]";
      add(path, ViolationCode::out_of_range, msg.str());
    }
  }

  void check_origin_map(const std::string& path, const Json& v) {
    if (!v.is_object()) return add(path, ViolationCode::wrong_type, "expected object map");
    for (const auto& [key, origin] : v.items()) {
      bool path_ok = false;
      try {
        path_ok = schema_.addresses_field(key);
      } catch (const PathSyntaxError&) {
      }
      if (!path_ok) {
        add(path, ViolationCode::unknown_key, "origin key '" + key + "' is not a record field path");
      }
      if (!origin.is_object()) {
        add(path, ViolationCode::wrong_type, "origin for '" + key + "' must be an object");
        continue;
      }
      bool typed = true;
      for (const char* f : {"segment_index", "char_start", "char_end"}) {
        auto it = origin.find(f);
        if (it == origin.end() || !it->is_number_integer()) {
          add(path, ViolationCode::wrong_type,
              "origin for '" + key + "' needs integer " + f);
          typed = false;
        }
      }
      for (const auto& [k, _] : origin.items()) {
        if (k != "segment_index" && k != "char_start" && k != "char_end") {
          add(path, ViolationCode::unknown_key, "origin for '" + key + "' has extra key " + k);
        }
      }
      if (!typed) continue;
      auto seg = origin["segment_index"].get<long long>();
      auto b = origin["char_start"].get<long long>();
      auto en = origin["char_end"].get<long long>();
      if (seg < 0 || b < 0 || en < b) {
        add(path, ViolationCode::out_of_range, "origin for '" + key + "' has an invalid span");
      }
    }
  }

  // Constraints that relate two fields. Only evaluated when both fields are well typed.
  void cross_field(const Json& root) {
    auto get = [&](const char* path) -> const Json* {
      const Json* v = resolve_path(root, path);
      return (v && !v->is_null()) ? v : nullptr;
    };
    const char* pairs[][2] = {{"demographic.age_min", "demographic.age_max"},
                              {"demographic.height_min_cm", "demographic.height_max_cm"},
                              {"demographic.weight_min_kg", "demographic.weight_max_kg"}};
    for (auto& [lo, hi] : pairs) {
      auto* a = get(lo);
      auto* b = get(hi);
      if (a && b && a->is_number() && b->is_number() && a->get<double>() > b->get<double>()) {
        add(hi, ViolationCode::out_of_range, std::string("must be >= ") + lo);
      }
    }

    auto* lat = get("spatial.lat");
    auto* lon = get("spatial.lon");
    if ((lat == nullptr) != (lon == nullptr)) {
      add(lat ? "spatial.lat" : "spatial.lon", ViolationCode::out_of_range,
          "lat and lon must both be set or both be null");
    }
    auto* method = get("spatial.geocode_method");
    if (method && method->is_string() && *method == "none" && (lat || lon)) {
      add("spatial.geocode_method", ViolationCode::bad_enum,
          "geocode_method none is inconsistent with present coordinates");
    }

    auto* seen = get("temporal.last_seen_ts");
    auto* reported = get("temporal.reported_missing_ts");
    if (seen && reported && seen->is_string() && reported->is_string()) {
      auto a = parse_iso8601(seen->get<std::string>());
      auto b = parse_iso8601(reported->get<std::string>());
      if (a && b && a->precision == TimePrecision::datetime &&
          b->precision == TimePrecision::datetime && a->sort_key() > b->sort_key()) {
        add("temporal.reported_missing_ts", ViolationCode::out_of_range,
            "reported_missing_ts precedes last_seen_ts");
      }
    }

    auto* path = get("provenance.extraction_path");
    auto* repairs = get("provenance.repair_count");
    if (path && repairs && *path == "rule" && repairs->is_number_integer() &&
        repairs->get<long long>() != 0) {
      add("provenance.repair_count", ViolationCode::out_of_range,
          "rule-path records cannot carry repairs");
    }
  }

  const SchemaDefinition& schema_;
  std::vector<ValidationViolation> out_;
};

}  // namespace

ValidationReport validate(const Json& candidate, const SchemaDefinition& schema) {
  return Validator(schema).run(candidate);
}

}  // namespace guardian
