#pragma once

// The canonical case schema, held as data, and the strict validator that
// checks generic nested candidates against it.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "guardian/common.hpp"
#include "guardian/pattern.hpp"

namespace guardian {

enum class Sex { female, male, unknown };
enum class GeocodeMethod { source_provided, gazetteer, none };
enum class CaseStatus { missing, located, deceased, unknown };

std::string_view to_string(Sex s);
std::string_view to_string(GeocodeMethod m);
std::string_view to_string(CaseStatus s);
std::optional<Sex> parse_sex(std::string_view s);
std::optional<GeocodeMethod> parse_geocode_method(std::string_view s);
std::optional<CaseStatus> parse_case_status(std::string_view s);

struct Demographic {
  std::optional<std::string> name;
  Sex sex = Sex::unknown;
  std::optional<int> age_years, age_min, age_max;
  std::optional<int> height_min_cm, height_max_cm;
  std::optional<int> weight_min_kg, weight_max_kg;
  std::optional<std::string> race_ethnicity;
  bool operator==(const Demographic&) const = default;
};

struct Spatial {
  std::optional<std::string> last_seen_location, city, county, state, postal_code;
  std::optional<double> lat, lon;
  GeocodeMethod geocode_method = GeocodeMethod::none;
  std::optional<bool> geocode_plausible;
  bool operator==(const Spatial&) const = default;
};

struct Temporal {
  std::optional<std::string> last_seen_ts, reported_missing_ts, timezone;
  bool operator==(const Temporal&) const = default;
};

struct Narrative {
  std::optional<std::string> circumstances, clothing_description, distinctive_features;
  std::vector<std::string> movement_cues;
  bool operator==(const Narrative&) const = default;
};

struct Outcome {
  CaseStatus status = CaseStatus::missing;
  std::optional<std::string> status_ts;
  bool operator==(const Outcome&) const = default;
};

/// Where in the source a field value was read from.
struct FieldOrigin {
  int segment_index = 0;
  int char_start = 0;
  int char_end = 0;
  bool operator==(const FieldOrigin&) const = default;
};

struct Provenance {
  std::string source_label = "unknown";
  SourceFamily source_family = SourceFamily::unknown;
  ExtractionPath extraction_path = ExtractionPath::rule;
  Engine engine_used = Engine::plaintext;
  std::string document_id;
  std::map<std::string, FieldOrigin> field_origins;
  std::string ingest_ts;
  int repair_count = 0;
  int warnings_count = 0;
  bool operator==(const Provenance&) const = default;
};

struct CaseRecord {
  std::string case_id;
  Demographic demographic;
  Spatial spatial;
  Temporal temporal;
  Narrative narrative_osint;
  Outcome outcome;
  Provenance provenance;
  bool operator==(const CaseRecord&) const = default;
};

/// Serializes with every key present (nulls for missing values), in schema order.
Json to_json(const CaseRecord& r);

/// Inverse of to_json. Missing keys take the type defaults; values of the
/// wrong JSON type throw Error. Does not check ranges or patterns.
CaseRecord case_record_from_json(const Json& j);

// ---------------------------------------------------------------------------

enum class ValueKind { string, integer, decimal, boolean, enumeration, list, section, timestamp, map };

std::string_view to_string(ValueKind k);
std::optional<ValueKind> parse_value_kind(std::string_view s);

struct SchemaEntry {
  std::string field_path;
  int position = 0;  // declaration order; drives serialized key and column order
  ValueKind value_kind = ValueKind::string;
  bool required = false;
  std::vector<std::string> enum_values;
  std::optional<std::pair<double, double>> numeric_range;
  std::optional<std::string> pattern;  // for lists, applies to each element
  bool operator==(const SchemaEntry&) const = default;
};

class SchemaDefinition {
 public:
  SchemaDefinition() = default;
  /// Throws ConfigError on duplicate paths, orphans or bad patterns.
  explicit SchemaDefinition(std::vector<SchemaEntry> entries);

  const std::vector<SchemaEntry>& entries() const { return entries_; }
  const SchemaEntry* find(std::string_view path) const;
  /// Direct children of a section path ("" for the root), in position order.
  std::vector<const SchemaEntry*> children(std::string_view path) const;
  /// Leaf entries (everything but sections), in position order.
  std::vector<const SchemaEntry*> leaves() const;
  const Pattern* compiled_pattern(std::string_view path) const;

  /// True for an entry path or an element path below a list entry.
  bool addresses_field(std::string_view path) const;

  bool operator==(const SchemaDefinition& o) const { return entries_ == o.entries_; }

 private:
  std::vector<SchemaEntry> entries_;
  std::map<std::string, size_t, std::less<>> index_;
  std::map<std::string, Pattern, std::less<>> patterns_;
};

SchemaDefinition default_schema();

/// One JSON object per line, sorted by field_path.
std::string serialize_schema(const SchemaDefinition& schema);
SchemaDefinition parse_schema(std::string_view text);
SchemaDefinition load_schema(const std::string& path);

/// A record with every section materialized and every leaf null (lists
/// empty, maps empty).
Json record_skeleton(const SchemaDefinition& schema);

// ---------------------------------------------------------------------------

enum class ViolationCode {
  missing_required,
  wrong_type,
  out_of_range,
  bad_enum,
  bad_pattern,
  bad_timestamp,
  unknown_key
};

std::string_view to_string(ViolationCode c);

struct ValidationViolation {
  std::string field_path;
  ViolationCode code;
  std::string message;
  bool operator==(const ValidationViolation&) const = default;
};

struct ValidationReport {
  bool valid = true;
  std::vector<ValidationViolation> violations;
};

/// Reports every violation, sorted by (field_path, code). Never throws on a
/// malformed candidate.
ValidationReport validate(const Json& candidate, const SchemaDefinition& schema);

/// Returns the addressed value or nullptr when absent. Numeric segments
/// index into arrays. The empty path addresses the whole record.
/// Throws PathSyntaxError for empty segments or illegal characters.
const Json* resolve_path(const Json& record, std::string_view field_path);

std::vector<std::string> split_path(std::string_view field_path);

/// Sets the addressed value, creating intermediate objects. A numeric
/// segment on an array may address an existing element or append one.
/// Throws PathSyntaxError when the path runs through a scalar.
void assign_path(Json& record, std::string_view field_path, Json value);

/// Removes the addressed value; false when it was absent.
bool erase_path(Json& record, std::string_view field_path);

}  // namespace guardian
