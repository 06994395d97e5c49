#include "guardian/harmonize.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "guardian/pattern.hpp"

namespace guardian {

std::string_view to_string(TransformId t) {
  switch (t) {
    case TransformId::none: return "none";
    case TransformId::timestamp: return "timestamp";
    case TransformId::height: return "height";
    case TransformId::weight: return "weight";
    case TransformId::sex_enum: return "sex_enum";
    case TransformId::status_enum: return "status_enum";
    case TransformId::place_parts: return "place_parts";
    case TransformId::cue_list: return "cue_list";
  }
  return "none";
}

std::optional<TransformId> parse_transform_id(std::string_view s) {
  for (auto t : {TransformId::none, TransformId::timestamp, TransformId::height, TransformId::weight,
                 TransformId::sex_enum, TransformId::status_enum, TransformId::place_parts,
                 TransformId::cue_list}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

MappingTable::MappingTable(std::vector<KeyMapping> mappings) : mappings_(std::move(mappings)) {
  for (size_t i = 0; i < mappings_.size(); ++i) {
    auto key = std::make_pair(mappings_[i].source_label, mappings_[i].source_key);
    if (!index_.emplace(key, i).second) {
      throw ConfigError("duplicate mapping for (" + key.first + ", " + key.second + ")");
    }
  }
}

const KeyMapping* MappingTable::lookup(std::string_view source_label, std::string_view source_key) const {
  for (std::string label : {std::string(source_label), std::string("*")}) {
    auto it = index_.find({label, std::string(source_key)});
    if (it != index_.end()) return &mappings_[it->second];
  }
  return nullptr;
}

std::vector<KeyMapping> parse_mappings(std::string_view text) {
  std::vector<KeyMapping> out;
  int lineno = 0;
  for (const auto& line : split(text, '\n')) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto where = "mapping line " + std::to_string(lineno) + ": ";
    try {
      Json j = Json::parse(line);
      auto t = parse_transform_id(j.value("transform", "none"));
      if (!t) throw ConfigError(where + "unknown transform");
      out.push_back({j.value("source_label", "*"), j.at("source_key").get<std::string>(),
                     j.at("target_path").get<std::string>(), *t});
      split_path(out.back().target_path);
    } catch (const Json::exception& e) {
      throw ConfigError(where + e.what());
    } catch (const PathSyntaxError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return out;
}

MappingTable load_mappings(const std::string& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  if (ec) throw ConfigError("cannot read mappings directory " + dir + ": " + ec.message());
  std::sort(files.begin(), files.end());
  std::vector<KeyMapping> all;
  for (const auto& f : files) {
    try {
      auto part = parse_mappings(read_file(f.string()));
      all.insert(all.end(), part.begin(), part.end());
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
  }
  return MappingTable(std::move(all));
}

// --- value normalizers --------------------------------------------------------

namespace {

int to_int(std::string_view s) { return std::stoi(std::string(s)); }

std::optional<unsigned> month_number(std::string_view name) {
  static const char* names[] = {"january", "february", "march",     "april",   "may",      "june",
                                "july",    "august",   "september", "october", "november", "december"};
  auto lower = to_lower(name);
  if (lower == "sept") return 9;
  for (unsigned i = 0; i < 12; ++i) {
    std::string_view full = names[i];
    if (lower == full || (lower.size() == 3 && full.substr(0, 3) == lower)) return i + 1;
  }
  return std::nullopt;
}

std::string two(int v) {
  std::string s = std::to_string(v);
  return s.size() < 2 ? "0" + s : s;
}

std::string group(std::string_view text, const PatternMatch& m, size_t i) {
  if (i >= m.groups.size() || !m.groups[i]) return {};
  return std::string(text.substr(m.groups[i]->begin, m.groups[i]->size()));
}

}  // namespace

std::optional<NormalizedTimestamp> normalize_timestamp(std::string_view raw, std::string_view tz_default) {
  std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  if (auto iso = parse_iso8601(s)) return NormalizedTimestamp{s, iso->precision};

  static const Pattern numeric(
      "\\A(\\d{1,2})/(\\d{1,2})/(\\d{4})(?:[ T]+(\\d{1,2}):(\\d{2})(?::(\\d{2}))?\\s*([AaPp][Mm])?)?\\z");
  static const Pattern spelled("\\A([A-Za-z]+)\\.?\\s+(\\d{1,2})(?:st|nd|rd|th)?,?\\s+(\\d{4})\\z");

  if (auto m = numeric.find(s)) {
    unsigned month = static_cast<unsigned>(to_int(group(s, *m, 0)));
    unsigned day = static_cast<unsigned>(to_int(group(s, *m, 1)));
    int year = to_int(group(s, *m, 2));
    if (!valid_calendar_date(year, month, day)) return std::nullopt;
    std::string date = format_iso_date(year, month, day);
    auto hh = group(s, *m, 3);
    if (hh.empty()) return NormalizedTimestamp{date, TimePrecision::date};
    int hour = to_int(hh);
    int minute = to_int(group(s, *m, 4));
    auto ss = group(s, *m, 5);
    int second = ss.empty() ? 0 : to_int(ss);
    auto ampm = to_lower(group(s, *m, 6));
    if (!ampm.empty()) {
      if (hour < 1 || hour > 12) return std::nullopt;
      if (ampm == "am" && hour == 12) hour = 0;
      if (ampm == "pm" && hour != 12) hour += 12;
    }
    if (hour > 23 || minute > 59 || second > 59) return std::nullopt;
    std::string out = date + "T" + two(hour) + ":" + two(minute) + ":" + two(second);
    static const Pattern offset("\\A[+-]\\d{2}:\\d{2}\\z");
    if (offset.full_match(tz_default)) {
      out += tz_default;
    } else if (tz_default == "Z" || tz_default == "UTC") {
      out += "Z";
    }
    return NormalizedTimestamp{out, TimePrecision::datetime};
  }
  if (auto m = spelled.find(s)) {
    auto month = month_number(group(s, *m, 0));
    if (!month) return std::nullopt;
    unsigned day = static_cast<unsigned>(to_int(group(s, *m, 1)));
    int year = to_int(group(s, *m, 2));
    if (!valid_calendar_date(year, *month, day)) return std::nullopt;
    return NormalizedTimestamp{format_iso_date(year, *month, day), TimePrecision::date};
  }
  return std::nullopt;
}

namespace {

enum class Unit { none, feet_inches, inches, cm, lb, kg };

struct Quantity {
  double value = 0;  // inches for length units, the stated unit otherwise
  Unit unit = Unit::none;
};

std::vector<std::string> range_parts(std::string_view raw) {
  static const Pattern sep("\\s*(?:-|\xE2\x80\x93|\\bto\\b)\\s*", {true});
  std::vector<std::string> parts;
  std::string s = trim(raw);
  size_t from = 0;
  for (const auto& m : sep.find_all(s)) {
    if (m.whole.begin == 0) return {};
    parts.push_back(trim(std::string_view(s).substr(from, m.whole.begin - from)));
    from = m.whole.end;
  }
  parts.push_back(trim(std::string_view(s).substr(from)));
  if (parts.size() > 2) return {};
  for (const auto& p : parts) {
    if (p.empty()) return {};
  }
  return parts;
}

std::optional<Quantity> parse_length(std::string_view raw) {
  static const Pattern feet(
      "\\A(\\d+(?:\\.\\d+)?)\\s*(?:'|\xE2\x80\x99|ft\\.?|feet|foot)\\s*"
      "(?:(\\d+(?:\\.\\d+)?)\\s*(?:\"|''|\xE2\x80\x9D|in\\.?|inches|inch)?)?\\z",
      {true});
  static const Pattern inches("\\A(\\d+(?:\\.\\d+)?)\\s*(?:\"|''|\xE2\x80\x9D|in\\.?|inches|inch)\\z", {true});
  static const Pattern cm("\\A(\\d+(?:\\.\\d+)?)\\s*(?:cm|centimeters?|centimetres?)\\z", {true});
  static const Pattern bare("\\A(\\d+(?:\\.\\d+)?)\\z");
  std::string s = trim(raw);
  if (auto m = feet.find(s)) {
    double ft = std::stod(group(s, *m, 0));
    auto in = group(s, *m, 1);
    return Quantity{ft * 12 + (in.empty() ? 0 : std::stod(in)), Unit::feet_inches};
  }
  if (auto m = inches.find(s)) return Quantity{std::stod(group(s, *m, 0)), Unit::inches};
  if (auto m = cm.find(s)) return Quantity{std::stod(group(s, *m, 0)), Unit::cm};
  if (auto m = bare.find(s)) return Quantity{std::stod(group(s, *m, 0)), Unit::none};
  return std::nullopt;
}

std::optional<Quantity> parse_mass(std::string_view raw) {
  static const Pattern p("\\A(\\d+(?:\\.\\d+)?)\\s*(lbs?\\.?|pounds?|kg|kgs|kilograms?)?\\z", {true});
  std::string s = trim(raw);
  auto m = p.find(s);
  if (!m) return std::nullopt;
  auto unit = to_lower(group(s, *m, 1));
  Unit u = unit.empty() ? Unit::none : (unit[0] == 'k' ? Unit::kg : Unit::lb);
  return Quantity{std::stod(group(s, *m, 0)), u};
}

long long tenths(double v) { return std::llround(v * 10); }

// Half-up rounding in integer arithmetic over tenths of the input unit.
int inches_to_cm(double in) { return static_cast<int>((tenths(in) * 254 + 500) / 1000); }
int cm_to_int(double cm) { return static_cast<int>((tenths(cm) + 5) / 10); }
int lb_to_kg(double lb) { return static_cast<int>((tenths(lb) * 45359237LL + 500000000LL) / 1000000000LL); }

template <class Parse, class Convert>
std::optional<MetricRange> convert_range(std::string_view raw, Parse parse, Convert convert) {
  auto parts = range_parts(raw);
  if (parts.empty()) return std::nullopt;
  std::vector<Quantity> qs;
  for (const auto& p : parts) {
    auto q = parse(p);
    if (!q) return std::nullopt;
    qs.push_back(*q);
  }
  // A bare number borrows the unit of the other endpoint.
  for (auto& q : qs) {
    if (q.unit != Unit::none) continue;
    for (const auto& other : qs) {
      if (other.unit != Unit::none) q.unit = other.unit;
    }
  }
  std::vector<int> out;
  for (const auto& q : qs) {
    if (q.value <= 0) return std::nullopt;
    auto v = convert(q);
    if (!v || *v <= 0) return std::nullopt;
    out.push_back(*v);
  }
  return MetricRange{out.front(), out.back()};
}

}  // namespace

std::optional<MetricRange> normalize_height(std::string_view raw) {
  return convert_range(raw, parse_length, [](const Quantity& q) -> std::optional<int> {
    switch (q.unit) {
      case Unit::feet_inches:
      case Unit::inches: return inches_to_cm(q.value);
      case Unit::cm: return cm_to_int(q.value);
      default: return std::nullopt;  // a bare number alone is ambiguous
    }
  });
}

std::optional<MetricRange> normalize_weight(std::string_view raw) {
  return convert_range(raw, parse_mass, [](const Quantity& q) -> std::optional<int> {
    if (q.unit == Unit::kg) return cm_to_int(q.value);
    return lb_to_kg(q.value);
  });
}

PlaceParts parse_place_parts(std::string_view raw) {
  static const Pattern p(
      "\\A([A-Za-z][A-Za-z .'-]*?)\\s*,\\s*([A-Za-z][A-Za-z .]*?)\\.?(?:\\s+(\\d{5}(?:-\\d{4})?))?\\z");
  std::string s = trim(raw);
  PlaceParts parts;
  auto m = p.find(s);
  if (!m) return parts;
  parts.city = trim(group(s, *m, 0));
  parts.state = trim(group(s, *m, 1));
  auto zip = group(s, *m, 2);
  if (!zip.empty()) parts.postal_code = zip;
  return parts;
}

std::optional<Sex> normalize_sex(std::string_view raw) {
  auto s = canonical_text(raw);
  if (s == "female" || s == "f" || s == "woman" || s == "girl") return Sex::female;
  if (s == "male" || s == "m" || s == "man" || s == "boy") return Sex::male;
  if (s == "unknown" || s == "undisclosed" || s == "not specified") return Sex::unknown;
  return std::nullopt;
}

std::optional<CaseStatus> normalize_status(std::string_view raw) {
  auto s = canonical_text(raw);
  if (s == "missing" || s == "active" || s == "open") return CaseStatus::missing;
  if (s == "located" || s == "found" || s == "located alive" || s == "recovered") return CaseStatus::located;
  if (s == "deceased" || s == "located deceased" || s == "dead") return CaseStatus::deceased;
  if (s == "unknown") return CaseStatus::unknown;
  return std::nullopt;
}

std::vector<std::string> split_cues(std::string_view raw) {
  static const Pattern sep("\\s*(?:,|;|/|\\bor\\b|\\band\\b)\\s*", {true});
  std::vector<std::string> out;
  std::string s(raw);
  size_t from = 0;
  auto take = [&](size_t end) {
    auto item = trim(std::string_view(s).substr(from, end - from));
    while (!item.empty() && (item.back() == '.' || item.back() == '!')) item.pop_back();
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  };
  for (const auto& m : sep.find_all(s)) {
    take(m.whole.begin);
    from = m.whole.end;
  }
  take(s.size());
  return out;
}

// --- harmonize ----------------------------------------------------------------

namespace {

struct SourceField {
  std::string key;
  Json value;
  std::optional<FieldOrigin> origin;
};

Json origin_json(const FieldOrigin& o) {
  return Json{{"segment_index", o.segment_index}, {"char_start", o.char_start}, {"char_end", o.char_end}};
}

bool is_index(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

TransformId default_transform(const SchemaEntry& e) {
  if (e.value_kind == ValueKind::timestamp) return TransformId::timestamp;
  if (e.value_kind == ValueKind::list) return TransformId::cue_list;
  if (e.field_path == "demographic.sex") return TransformId::sex_enum;
  if (e.field_path == "outcome.status") return TransformId::status_enum;
  return TransformId::none;
}

std::string parent_path(const std::string& path) {
  auto dot = path.rfind('.');
  return dot == std::string::npos ? std::string() : path.substr(0, dot);
}

class Harmonizer {
 public:
  Harmonizer(const MappingTable& mappings, const SchemaDefinition& schema, const HarmonizeOptions& opts,
             std::string source_label)
      : mappings_(mappings), schema_(schema), opts_(opts), label_(std::move(source_label)) {
    out_.record = record_skeleton(schema);
  }

  void add(const SourceField& f) {
    KeyMapping m;
    if (!resolve(f.key, m)) {
      drop(f.key, "no mapping for key");
      return;
    }
    apply(m, f);
  }

  HarmonizedRecord finish(const Json* provenance) {
    for (const auto& [target, raw, origin] : places_) fill_place(target, raw, origin);
    Json& rec = out_.record;
    if (rec["outcome"]["status"].is_null()) rec["outcome"]["status"] = "missing";
    bool any_ts = !rec["temporal"]["last_seen_ts"].is_null() || !rec["temporal"]["reported_missing_ts"].is_null() ||
                  !rec["outcome"]["status_ts"].is_null();
    if (any_ts && rec["temporal"]["timezone"].is_null() && !opts_.tz_default.empty()) {
      rec["temporal"]["timezone"] = opts_.tz_default;
    }
    if (provenance) {
      rec["provenance"] = *provenance;
    } else {
      rec["provenance"]["field_origins"] = origins_;
    }
    return std::move(out_);
  }

 private:
  bool resolve(const std::string& key, KeyMapping& m) {
    if (auto* found = mappings_.lookup(label_, key)) {
      m = *found;
      return true;
    }
    // List elements map through their list.
    std::string base = key;
    auto dot = key.rfind('.');
    if (dot != std::string::npos && is_index(std::string_view(key).substr(dot + 1))) {
      base = key.substr(0, dot);
      if (auto* found = mappings_.lookup(label_, base)) {
        m = *found;
        return true;
      }
    }
    const SchemaEntry* e = schema_.find(base);
    if (!e || e->value_kind == ValueKind::section || e->value_kind == ValueKind::map) return false;
    if (base.rfind("provenance.", 0) == 0) return false;
    if (base != key && e->value_kind != ValueKind::list) return false;
    m = KeyMapping{"*", key, base, default_transform(*e)};
    return true;
  }

  void drop(const std::string& key, const std::string& reason) {
    out_.dropped_fields.emplace_back(key, reason);
    out_.notices.push_back({WarnCode::harmonize_unmapped_key, key + ": " + reason});
  }

  void unparsed(const std::string& target, const Json& value, std::string_view what) {
    std::string shown = value.is_string() ? value.get<std::string>() : value.dump();
    out_.notices.push_back(
        {WarnCode::harmonize_unparsed_value, target + ": cannot read " + std::string(what) + " from '" + shown + "'"});
  }

  void implausible(const std::string& target, const Json& value) {
    std::string shown = value.is_string() ? value.get<std::string>() : value.dump();
    out_.notices.push_back({WarnCode::harmonize_implausible_value, target + ": implausible value '" + shown + "'"});
  }

  void write(const std::string& path, Json value, const std::optional<FieldOrigin>& origin) {
    Json& slot = const_cast<Json&>(*resolve_path(out_.record, parent_path(path)));
    auto leaf = path.substr(path.rfind('.') == std::string::npos ? 0 : path.rfind('.') + 1);
    slot[leaf] = std::move(value);
    if (origin) origins_[path] = origin_json(*origin);
  }

  void append_item(const std::string& list_path, const std::string& item, const std::optional<FieldOrigin>& origin) {
    Json& list = const_cast<Json&>(*resolve_path(out_.record, list_path));
    auto key = canonical_text(item);
    for (const auto& existing : list) {
      if (existing.is_string() && canonical_text(existing.get<std::string>()) == key) return;
    }
    if (origin) origins_[list_path + "." + std::to_string(list.size())] = origin_json(*origin);
    list.push_back(item);
  }

  const SchemaEntry* target_entry(const std::string& path) {
    const SchemaEntry* e = schema_.find(path);
    if (!e) out_.notices.push_back({WarnCode::harmonize_unmapped_key, "mapping target " + path + " not in schema"});
    return e;
  }

  void apply(const KeyMapping& m, const SourceField& f) {
    const Json& v = f.value;
    if (v.is_null()) return;
    if (v.is_string() && trim(v.get<std::string>()).empty()) return;
    std::string text = v.is_string() ? trim(v.get<std::string>()) : std::string();
    out_.applied_transforms.emplace_back(m.target_path, m.transform);

    switch (m.transform) {
      case TransformId::timestamp: {
        if (!target_entry(m.target_path)) return;
        auto ts = v.is_string() ? normalize_timestamp(text, opts_.tz_default) : std::nullopt;
        if (!ts) return unparsed(m.target_path, v, "a timestamp");
        write(m.target_path, ts->iso, f.origin);
        return;
      }
      case TransformId::height:
      case TransformId::weight: {
        bool h = m.transform == TransformId::height;
        auto lo = m.target_path + (h ? "_min_cm" : "_min_kg");
        auto hi = m.target_path + (h ? "_max_cm" : "_max_kg");
        if (!target_entry(lo) || !target_entry(hi)) return;
        if (!v.is_string()) return unparsed(m.target_path, v, h ? "a height" : "a weight");
        auto r = h ? normalize_height(text) : normalize_weight(text);
        if (!r) {
          static const Pattern zero("\\A0+(\\.0+)?\\s*[A-Za-z]*\\.?\\z");
          if (zero.full_match(text)) return implausible(m.target_path, v);
          return unparsed(m.target_path, v, h ? "a height" : "a weight");
        }
        write(lo, r->min, f.origin);
        write(hi, r->max, f.origin);
        return;
      }
      case TransformId::sex_enum: {
        if (!target_entry(m.target_path)) return;
        auto s = v.is_string() ? normalize_sex(text) : std::nullopt;
        if (!s) return unparsed(m.target_path, v, "a sex");
        write(m.target_path, std::string(to_string(*s)), f.origin);
        return;
      }
      case TransformId::status_enum: {
        if (!target_entry(m.target_path)) return;
        auto s = v.is_string() ? normalize_status(text) : std::nullopt;
        if (!s) return unparsed(m.target_path, v, "a case status");
        write(m.target_path, std::string(to_string(*s)), f.origin);
        return;
      }
      case TransformId::place_parts: {
        if (!target_entry(m.target_path)) return;
        if (!v.is_string()) return unparsed(m.target_path, v, "a place");
        write(m.target_path, text, f.origin);
        places_.emplace_back(m.target_path, text, f.origin);
        return;
      }
      case TransformId::cue_list: {
        const SchemaEntry* e = target_entry(m.target_path);
        if (!e) return;
        if (e->value_kind != ValueKind::list) return unparsed(m.target_path, v, "a list");
        if (v.is_array()) {
          for (const auto& item : v) {
            if (item.is_string() && !trim(item.get<std::string>()).empty()) {
              append_item(m.target_path, trim(item.get<std::string>()), f.origin);
            }
          }
        } else if (v.is_string()) {
          for (const auto& item : split_cues(text)) append_item(m.target_path, item, f.origin);
        } else {
          unparsed(m.target_path, v, "a list");
        }
        return;
      }
      case TransformId::none: break;
    }

    const SchemaEntry* e = target_entry(m.target_path);
    if (!e) return;
    switch (e->value_kind) {
      case ValueKind::string:
        if (v.is_string()) return write(m.target_path, text, f.origin);
        if (v.is_number()) return write(m.target_path, v.dump(), f.origin);
        return unparsed(m.target_path, v, "text");
      case ValueKind::integer: {
        static const Pattern p("\\A[+-]?\\d{1,9}\\z");
        if (v.is_number_integer()) return write(m.target_path, v, f.origin);
        if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>() &&
            std::abs(v.get<double>()) < 1e9) {
          return write(m.target_path, static_cast<long long>(v.get<double>()), f.origin);
        }
        if (v.is_string() && p.full_match(text)) return write(m.target_path, std::stoll(text), f.origin);
        return unparsed(m.target_path, v, "an integer");
      }
      case ValueKind::decimal: {
        static const Pattern p("\\A[+-]?(\\d+(\\.\\d*)?|\\.\\d+)\\z");
        if (v.is_number()) return write(m.target_path, v, f.origin);
        if (v.is_string() && p.full_match(text)) return write(m.target_path, std::stod(text), f.origin);
        return unparsed(m.target_path, v, "a number");
      }
      case ValueKind::boolean: {
        if (v.is_boolean()) return write(m.target_path, v, f.origin);
        auto t = to_lower(text);
        if (t == "true" || t == "yes") return write(m.target_path, true, f.origin);
        if (t == "false" || t == "no") return write(m.target_path, false, f.origin);
        return unparsed(m.target_path, v, "a boolean");
      }
      case ValueKind::enumeration: {
        auto t = to_lower(text);
        if (std::find(e->enum_values.begin(), e->enum_values.end(), t) != e->enum_values.end()) {
          return write(m.target_path, t, f.origin);
        }
        return unparsed(m.target_path, v, "an enumeration value");
      }
      case ValueKind::timestamp: {
        auto ts = v.is_string() ? normalize_timestamp(text, opts_.tz_default) : std::nullopt;
        if (!ts) return unparsed(m.target_path, v, "a timestamp");
        return write(m.target_path, ts->iso, f.origin);
      }
      default:
        return unparsed(m.target_path, v, "a scalar");
    }
  }

  void fill_place(const std::string& target, const std::string& raw, const std::optional<FieldOrigin>& origin) {
    auto parts = parse_place_parts(raw);
    auto parent = parent_path(target);
    auto fill = [&](const char* leaf, const std::optional<std::string>& value) {
      if (!value) return;
      auto path = parent.empty() ? std::string(leaf) : parent + "." + leaf;
      if (!schema_.find(path)) return;
      const Json* cur = resolve_path(out_.record, path);
      if (cur && !cur->is_null()) return;
      write(path, *value, origin);
    };
    fill("city", parts.city);
    fill("state", parts.state);
    fill("postal_code", parts.postal_code);
  }

  const MappingTable& mappings_;
  const SchemaDefinition& schema_;
  const HarmonizeOptions& opts_;
  std::string label_;
  HarmonizedRecord out_;
  Json origins_ = Json::object();
  std::vector<std::tuple<std::string, std::string, std::optional<FieldOrigin>>> places_;
};

}  // namespace

HarmonizedRecord harmonize(const DraftRecord& draft, const MappingTable& mappings, const SchemaDefinition& schema,
                           const HarmonizeOptions& opts) {
  Harmonizer h(mappings, schema, opts, draft.source_label);
  // List items in numeric index order (".10" after ".9").
  std::vector<const FieldCandidate*> ordered;
  for (const auto& kv : draft.candidates) ordered.push_back(&kv.second);
  auto split_index = [](const std::string& k) -> std::pair<std::string, long> {
    auto dot = k.rfind('.');
    if (dot != std::string::npos && is_index(std::string_view(k).substr(dot + 1)) && k.size() - dot < 10) {
      return {k.substr(0, dot), std::stol(k.substr(dot + 1))};
    }
    return {k, -1};
  };
  std::stable_sort(ordered.begin(), ordered.end(), [&](const FieldCandidate* a, const FieldCandidate* b) {
    return split_index(a->field_path) < split_index(b->field_path);
  });
  for (const FieldCandidate* cp : ordered) {
    const auto& c = *cp;
    const auto& key = c.field_path;
    h.add(SourceField{key, c.raw_value,
                      FieldOrigin{draft.segment_index, static_cast<int>(c.char_start), static_cast<int>(c.char_end)}});
  }
  return h.finish(nullptr);
}

HarmonizedRecord harmonize(const Json& candidate, const std::string& source_label, const MappingTable& mappings,
                           const SchemaDefinition& schema, const HarmonizeOptions& opts) {
  Harmonizer h(mappings, schema, opts, source_label);
  const Json* provenance = nullptr;
  if (candidate.is_object()) {
    for (const auto& [key, value] : candidate.items()) {
      if (key == "provenance") {
        provenance = &value;
        continue;
      }
      const SchemaEntry* e = schema.find(key);
      if (e && e->value_kind == ValueKind::section && value.is_object()) {
        for (const auto& [child, cv] : value.items()) h.add(SourceField{key + "." + child, cv, std::nullopt});
      } else {
        h.add(SourceField{key, value, std::nullopt});
      }
    }
  }
  return h.finish(provenance);
}

}  // namespace guardian
