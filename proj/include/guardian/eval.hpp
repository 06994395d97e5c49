#pragma once

// Gold-aligned evaluation: slot-level precision/recall/F1, structured-field
// accuracy, key-field completeness, geocoding rates, repair rates and
// runtime statistics.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "guardian/common.hpp"
#include "guardian/schema.hpp"

namespace guardian {

enum class Comparator { exact_canonical, numeric_eq, timestamp_eq, set_eq };
std::string_view to_string(Comparator c);

struct MatchRule {
  std::string field_path;
  Comparator comparator = Comparator::exact_canonical;
};

/// Every non-provenance leaf except case_id and the free-prose clothing and
/// distinctive-feature fields, with the comparator implied by its kind.
std::vector<MatchRule> default_match_rules(const SchemaDefinition& schema);
/// The scored paths minus narrative_osint.circumstances.
std::vector<std::string> structured_paths(const std::vector<MatchRule>& rules);
/// name, last_seen_ts, city, state, circumstances.
std::vector<std::string> default_key_fields();

/// The slot value used for scoring: absent, null, "", [] and the enum
/// sentinels (sex "unknown", status "unknown", geocode_method "none") are null.
std::optional<Json> slot_value(const Json& record, const std::string& path);
/// Compares two non-null slot values.
bool values_match(const Json& predicted, const Json& gold, Comparator c);

struct AlignmentResult {
  std::vector<std::pair<Json, Json>> pairs;  // (parsed, gold), in gold case_id order
  std::vector<std::string> unmatched_parsed;
  std::vector<std::string> unmatched_gold;
  std::vector<Json> unmatched_parsed_records;
  std::vector<Json> unmatched_gold_records;
};

/// Exact case_id join. Throws Error on a duplicate id on either side.
AlignmentResult align(const std::vector<Json>& parsed, const std::vector<Json>& gold);

struct PrfResult {
  long tp = 0, fp = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0;
};

/// Micro-averaged over (pair, field) slots. A mismatch counts as one FP and
/// one FN; unmatched records count every non-null slot.
PrfResult field_prf(const AlignmentResult& alignment, const std::vector<MatchRule>& rules);

struct Rate {
  double value = 0;
  /// True when the denominator was zero and the value is a convention.
  bool degenerate = false;
};

/// Matches over aligned structured slots with non-null gold.
Rate structured_field_accuracy(const AlignmentResult& alignment, const std::vector<MatchRule>& rules,
                               const std::vector<std::string>& paths);

struct Completeness {
  Rate overall;
  std::map<std::string, double> by_field;
};

Completeness completeness(const std::vector<Json>& records, const std::vector<std::string>& key_fields);

struct GeocodeRates {
  Rate success;    // vacuous 1.0 when nothing needed geocoding
  Rate plausible;  // 0 with degenerate flag when no record has coordinates
};

GeocodeRates geocode_rates(const std::vector<Json>& records);

/// One model-path candidate's passage through validation and repair.
struct CandidateLog {
  std::string document_id;
  int segment_index = 0;
  std::optional<std::string> case_id;
  bool pre_valid = false;
  int repair_attempts = 0;
  bool post_valid = false;
};

Json to_json(const CandidateLog& c);
CandidateLog candidate_log_from_json(const Json& j);

struct RepairStats {
  Rate pre_pass, post_pass, repair_rate;
};

RepairStats repair_stats(const std::vector<CandidateLog>& log);

struct RuntimeStats {
  double mean_s = 0;
  double p95_s = 0;  // nearest rank
};

/// Throws Error on an empty sample.
RuntimeStats runtime_stats(const std::vector<double>& per_record_seconds);

struct MetricsReport {
  std::string path_label;
  PrfResult prf;
  Rate structured_field_accuracy;
  Completeness completeness;
  GeocodeRates geocode;
  std::optional<RepairStats> repair;
  std::optional<RuntimeStats> runtime;
  long record_count = 0;
  long gold_count = 0;
  std::vector<std::string> notes;
  std::string config_digest;
};

Json to_json(const MetricsReport& r);

struct EvalInputs {
  std::vector<Json> parsed;
  std::vector<Json> gold;
  std::vector<CandidateLog> candidates;  // model path only
  std::vector<double> runtimes;
};

MetricsReport evaluate_records(const std::string& path_label, const EvalInputs& in, const SchemaDefinition& schema,
                               const std::vector<std::string>& key_fields = default_key_fields());

/// Side-by-side console table, one column per report.
std::string comparison_table(const std::vector<MetricsReport>& reports);

/// Hex SHA-256 of the compact JSON dump.
std::string config_digest(const Json& config);

}  // namespace guardian
