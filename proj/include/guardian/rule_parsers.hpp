#pragma once

// Deterministic label/pattern extraction. Every rule captures exactly one
// group; the candidate keeps the span it was read from.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guardian/common.hpp"
#include "guardian/pattern.hpp"
#include "guardian/source_detect.hpp"
#include "guardian/text_acquire.hpp"
#include "guardian/warnings.hpp"

namespace guardian {

/// Text after this line is not part of the document proper (synthetic
/// corpora place their gold trailer there). Parsers never read past it.
inline constexpr std::string_view kEndOfDocumentSentinel = "%%END-OF-DOCUMENT%%";

/// The segment text up to (not including) the sentinel line.
std::string_view strip_trailer(std::string_view text);

/// Where a rule looks: each line, each blank-line-delimited block, or the
/// whole segment.
enum class RuleScope { line, section, document };

std::string_view to_string(RuleScope s);

struct LabelRule {
  std::string pattern_id;
  std::string field_path;
  Pattern pattern;
  RuleScope scope = RuleScope::line;
  /// When set, every match is collected and each capture is split into list
  /// items (field_path.0, field_path.1, ...) at separator matches.
  std::optional<Pattern> item_split;
};

struct FieldCandidate {
  std::string field_path;
  std::string raw_value;
  size_t char_start = 0;
  size_t char_end = 0;
  std::string pattern_id;
  bool operator==(const FieldCandidate&) const = default;
};

struct DraftRecord {
  std::map<std::string, FieldCandidate> candidates;
  std::string source_label;
  int segment_index = 0;
  std::vector<Notice> notices;
};

/// Rule lists per source family.
struct RuleSets {
  std::map<SourceFamily, std::vector<LabelRule>> by_family;
  const std::vector<LabelRule>& rules_for(SourceFamily f) const;
};

/// One rule per line: {"pattern_id","field_path","pattern","scope",
/// "case_sensitive"?, "item_split"?}. Throws ConfigError when a pattern is
/// invalid or does not have exactly one capture group.
std::vector<LabelRule> parse_rules(std::string_view text);
std::vector<LabelRule> load_rules(const std::string& path);
/// Loads <dir>/registry_form.jsonl, bulletin.jsonl, narrative_profile.jsonl
/// (missing files give empty rule lists).
RuleSets load_rulesets(const std::string& dir);

/// Applies rules in order; first match wins per field path.
DraftRecord apply_rules(const CaseSegment& segment, const std::vector<LabelRule>& rules,
                        const std::string& source_label);

DraftRecord parse_registry_form(const CaseSegment& segment, const std::vector<LabelRule>& rules,
                                const std::string& source_label = "unknown");
DraftRecord parse_bulletin(const CaseSegment& segment, const std::vector<LabelRule>& rules,
                           const std::string& source_label = "unknown");
/// As apply_rules, and falls back to the longest prose block for
/// narrative_osint.circumstances when no rule produced it.
DraftRecord parse_narrative_profile(const CaseSegment& segment, const std::vector<LabelRule>& rules,
                                    const std::string& source_label = "unknown");

/// Routes to the family parser; unknown families use the registry rules and
/// carry a fallback notice.
DraftRecord dispatch(const DetectionResult& detection, const CaseSegment& segment,
                     const RuleSets& rulesets);

}  // namespace guardian
