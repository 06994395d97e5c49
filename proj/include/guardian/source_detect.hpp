#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "guardian/common.hpp"
#include "guardian/pattern.hpp"

namespace guardian {

/// Stable textual markers identifying one document source.
struct SourceSignature {
  std::string source_label;
  SourceFamily family = SourceFamily::unknown;
  std::vector<Pattern> markers;
  int min_markers = 2;
  int priority = 0;  // lower wins ties
  /// Case-segment header patterns used when splitting this source's documents.
  std::vector<Pattern> case_headers;
};

struct MarkerHit {
  size_t pattern_index = 0;
  size_t offset = 0;
  bool operator==(const MarkerHit&) const = default;
};

struct DetectionResult {
  std::string source_label = "unknown";
  SourceFamily family = SourceFamily::unknown;
  std::vector<MarkerHit> matched_markers;
  int score = 0;  // distinct matched patterns of the reported signature
  /// Index into the signature list; -1 for unknown.
  int signature_index = -1;
};

/// Highest distinct-marker score among signatures meeting min_markers wins;
/// ties go to lower priority, then lexicographically smaller label.
DetectionResult detect_source(std::string_view text, const std::vector<SourceSignature>& signatures);

/// JSONL, one signature per line:
///   {"source_label":..., "family":..., "markers":[...], "min_markers":2,
///    "priority":1, "case_sensitive":false, "case_headers":[...]}
/// Throws ConfigError on parse errors, duplicate labels, invalid patterns,
/// empty marker lists or min_markers outside [1, markers].
std::vector<SourceSignature> load_signatures(const std::string& path);
std::vector<SourceSignature> parse_signatures(std::string_view text);

}  // namespace guardian
