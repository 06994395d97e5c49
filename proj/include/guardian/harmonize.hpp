#pragma once

// Maps source-specific fields onto canonical schema paths and normalizes
// units, enumerations and timestamps. Shared by both extraction paths.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "guardian/common.hpp"
#include "guardian/rule_parsers.hpp"
#include "guardian/schema.hpp"
#include "guardian/timeutil.hpp"
#include "guardian/warnings.hpp"

namespace guardian {

enum class TransformId { none, timestamp, height, weight, sex_enum, status_enum, place_parts, cue_list };

std::string_view to_string(TransformId t);
std::optional<TransformId> parse_transform_id(std::string_view s);

/// source_label "*" applies to every source. For height and weight the
/// target is a prefix: "demographic.height" writes demographic.height_min_cm
/// and demographic.height_max_cm. For place_parts the target is the free-text
/// location path; city, state and postal_code are filled beside it when
/// not already set.
struct KeyMapping {
  std::string source_label;
  std::string source_key;
  std::string target_path;
  TransformId transform = TransformId::none;
};

class MappingTable {
 public:
  MappingTable() = default;
  /// Throws ConfigError on a duplicate (source_label, source_key).
  explicit MappingTable(std::vector<KeyMapping> mappings);
  /// Exact label first, then "*".
  const KeyMapping* lookup(std::string_view source_label, std::string_view source_key) const;
  const std::vector<KeyMapping>& mappings() const { return mappings_; }

 private:
  std::vector<KeyMapping> mappings_;
  std::map<std::pair<std::string, std::string>, size_t> index_;
};

/// JSONL: {"source_label","source_key","target_path","transform"}.
std::vector<KeyMapping> parse_mappings(std::string_view text);
/// Every *.jsonl file in the directory, in file-name order.
MappingTable load_mappings(const std::string& dir);

struct HarmonizeOptions {
  std::string tz_default = "America/New_York";
};

struct HarmonizedRecord {
  Json record;
  std::vector<std::pair<std::string, TransformId>> applied_transforms;
  std::vector<std::pair<std::string, std::string>> dropped_fields;  // (source_key, reason)
  std::vector<Notice> notices;
};

/// Rule path. Field origins for every written path are taken from the
/// candidate spans; other provenance fields are left for the caller.
HarmonizedRecord harmonize(const DraftRecord& draft, const MappingTable& mappings,
                           const SchemaDefinition& schema, const HarmonizeOptions& opts = {});

/// Model path: identity mapping over the candidate's schema leaves plus the
/// default transform for each path. Provenance is carried over unchanged.
HarmonizedRecord harmonize(const Json& candidate, const std::string& source_label,
                           const MappingTable& mappings, const SchemaDefinition& schema,
                           const HarmonizeOptions& opts = {});

struct NormalizedTimestamp {
  std::string iso;
  TimePrecision precision = TimePrecision::date;
};

/// Accepts MM/DD/YYYY (optionally followed by HH:MM), "Month D, YYYY" and
/// ISO 8601. Date-only input stays date-only. A local time gets tz_default
/// appended when tz_default is a numeric offset; the clock is never shifted.
std::optional<NormalizedTimestamp> normalize_timestamp(std::string_view raw,
                                                       std::string_view tz_default = "");

struct MetricRange {
  int min = 0;
  int max = 0;
  bool operator==(const MetricRange&) const = default;
};

/// Feet/inches (5'4", 5 ft 4 in), inches (64 in) or centimetres (163 cm);
/// single values or ranges joined by "-", "to". Rounded half-up.
std::optional<MetricRange> normalize_height(std::string_view raw);
/// Pounds (or kg) as single values or ranges; null for non-positive weights.
std::optional<MetricRange> normalize_weight(std::string_view raw);

struct PlaceParts {
  std::optional<std::string> city, state, postal_code;
  bool operator==(const PlaceParts&) const = default;
};

/// "City, State ZIP" or "City, State"; anything else gives all nulls.
PlaceParts parse_place_parts(std::string_view raw);

std::optional<Sex> normalize_sex(std::string_view raw);
std::optional<CaseStatus> normalize_status(std::string_view raw);

/// Splits a cue phrase ("Maryland or Delaware") into items.
std::vector<std::string> split_cues(std::string_view raw);

}  // namespace guardian
