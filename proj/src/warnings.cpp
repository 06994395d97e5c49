#include "guardian/warnings.hpp"

namespace guardian {

std::string_view to_string(WarnCode c) {
  switch (c) {
    case WarnCode::extract_below_quality: return "extract.below_quality";
    case WarnCode::extract_failed: return "extract.failed";
    case WarnCode::detect_unknown_source: return "detect.unknown_source";
    case WarnCode::parse_generic_fallback: return "parse.generic_fallback";
    case WarnCode::parse_duplicate_match: return "parse.duplicate_match";
    case WarnCode::parse_missing_case_id: return "parse.missing_case_id";
    case WarnCode::parse_empty_segment: return "parse.empty_segment";
    case WarnCode::sanitize_dropped_key: return "sanitize.dropped_key";
    case WarnCode::sanitize_unparseable: return "sanitize.unparseable";
    case WarnCode::sanitize_backend_error: return "sanitize.backend_error";
    case WarnCode::harmonize_unparsed_value: return "harmonize.unparsed_value";
    case WarnCode::harmonize_unmapped_key: return "harmonize.unmapped_key";
    case WarnCode::harmonize_implausible_value: return "harmonize.implausible_value";
    case WarnCode::geocode_ambiguous: return "geocode.ambiguous";
    case WarnCode::geocode_no_match: return "geocode.no_match";
    case WarnCode::geocode_implausible: return "geocode.implausible";
    case WarnCode::geocode_bad_query: return "geocode.bad_query";
    case WarnCode::validate_violation: return "validate.violation";
    case WarnCode::validate_rejected: return "validate.rejected";
    case WarnCode::repair_attempt_failed: return "repair.attempt_failed";
    case WarnCode::repair_reverted_edit: return "repair.reverted_edit";
    case WarnCode::repair_exhausted: return "repair.exhausted";
    case WarnCode::emit_duplicate_case_id: return "emit.duplicate_case_id";
  }
  return "unknown";
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::extract: return "extract";
    case Stage::detect: return "detect";
    case Stage::parse: return "parse";
    case Stage::sanitize: return "sanitize";
    case Stage::harmonize: return "harmonize";
    case Stage::geocode: return "geocode";
    case Stage::validate: return "validate";
    case Stage::repair: return "repair";
    case Stage::emit: return "emit";
  }
  return "emit";
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::info: return "info";
    case Severity::warning: return "warning";
    case Severity::error: return "error";
  }
  return "warning";
}

Stage stage_of(WarnCode c) {
  auto name = to_string(c);
  auto prefix = name.substr(0, name.find('.'));
  for (auto s : {Stage::extract, Stage::detect, Stage::parse, Stage::sanitize, Stage::harmonize,
                 Stage::geocode, Stage::validate, Stage::repair, Stage::emit}) {
    if (to_string(s) == prefix) return s;
  }
  return Stage::emit;
}

Severity default_severity(WarnCode c) {
  switch (c) {
    case WarnCode::extract_failed:
    case WarnCode::sanitize_unparseable:
    case WarnCode::sanitize_backend_error:
    case WarnCode::validate_rejected:
    case WarnCode::repair_exhausted:
      return Severity::error;
    case WarnCode::parse_duplicate_match:
    case WarnCode::parse_empty_segment:
    case WarnCode::sanitize_dropped_key:
    case WarnCode::harmonize_unmapped_key:
    case WarnCode::geocode_no_match:
      return Severity::info;
    default:
      return Severity::warning;
  }
}

const std::vector<WarnCode>& all_warn_codes() {
  static const std::vector<WarnCode> codes = [] {
    std::vector<WarnCode> v;
    for (int i = 0; i <= static_cast<int>(WarnCode::emit_duplicate_case_id); ++i) {
      v.push_back(static_cast<WarnCode>(i));
    }
    return v;
  }();
  return codes;
}

}  // namespace guardian
