#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace guardian {

enum class Stage { extract, detect, parse, sanitize, harmonize, geocode, validate, repair, emit };
enum class Severity { info, warning, error };

// Registry of warning codes. The string form ("stage.name") is what lands in
// the warning log; README lists the meaning of each.
enum class WarnCode {
  extract_below_quality,
  extract_failed,
  detect_unknown_source,
  parse_generic_fallback,
  parse_duplicate_match,
  parse_missing_case_id,
  parse_empty_segment,
  sanitize_dropped_key,
  sanitize_unparseable,
  sanitize_backend_error,
  harmonize_unparsed_value,
  harmonize_unmapped_key,
  harmonize_implausible_value,
  geocode_ambiguous,
  geocode_no_match,
  geocode_implausible,
  geocode_bad_query,
  validate_violation,
  validate_rejected,
  repair_attempt_failed,
  repair_reverted_edit,
  repair_exhausted,
  emit_duplicate_case_id,
};

std::string_view to_string(WarnCode c);
std::string_view to_string(Stage s);
std::string_view to_string(Severity s);
Stage stage_of(WarnCode c);
Severity default_severity(WarnCode c);
const std::vector<WarnCode>& all_warn_codes();

/// A warning raised by a pure pipeline step, logged later by the caller.
struct Notice {
  WarnCode code;
  std::string message;
};

}  // namespace guardian
