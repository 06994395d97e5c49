#pragma once

// End-to-end orchestration: ingest, detect, split, rule and/or model path,
// shared harmonization, geocoding and validation, per-path emission, and
// gold-aligned evaluation of the emitted files.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "guardian/common.hpp"
#include "guardian/eval.hpp"
#include "guardian/llm_extract.hpp"
#include "guardian/text_acquire.hpp"

namespace guardian {

enum class PathsEnabled { rule, llm, both };
std::string_view to_string(PathsEnabled p);
std::optional<PathsEnabled> parse_paths_enabled(std::string_view s);

struct RunConfig {
  std::filesystem::path input_dir;
  std::filesystem::path output_dir;
  PathsEnabled paths = PathsEnabled::both;
  std::filesystem::path schema_path;  // empty: built-in schema
  std::filesystem::path signatures_path;
  std::filesystem::path rulesets_dir;
  std::filesystem::path mappings_dir;
  std::filesystem::path gazetteer_path;
  std::filesystem::path regions_path;
  std::filesystem::path cache_path;  // empty: <output_dir>/geocode_cache.tsv
  std::filesystem::path engines_path;
  /// oracle, dropout_oracle, invalid_then_fix, never_fix or wire.
  std::string backend = "oracle";
  /// Dropout probability or injection rate for the offline backends.
  double backend_param = 0.0;
  size_t budget_chars = kDefaultBudgetChars;
  int max_repair_attempts = kDefaultMaxRepairAttempts;
  int max_in_flight = 4;
  int workers = 1;
  double request_timeout_s = 60;
  std::optional<std::filesystem::path> gold_path;
  std::optional<std::uint64_t> seed;
  /// Overrides the per-document file modification time.
  std::optional<std::string> ingest_ts;
  std::string tz_default = "America/New_York";
  QualityThresholds quality;

  /// Every path pointing at the bundled data directory.
  static RunConfig with_bundled_data();
  /// Throws ConfigError when a referenced path is missing or a value is out of range.
  void validate() const;
};

Json to_json(const RunConfig& c);

struct RunSummary {
  long documents_in = 0;
  long documents_failed = 0;
  long segments = 0;
  long records_out_rule = 0;
  long records_out_llm = 0;
  std::map<std::string, size_t> warnings_by_severity;
  double runtime_rule_s = 0;  // summed per-record wall time
  double runtime_llm_s = 0;
  long long backend_calls = 0;
  long long cache_hits = 0;
  long long cache_misses = 0;
  long long gazetteer_lookups = 0;
  std::string config_digest;
};

Json to_json(const RunSummary& s);

/// Output file names inside output_dir.
namespace output_files {
inline constexpr const char* rule_jsonl = "cases_rule.jsonl";
inline constexpr const char* rule_csv = "cases_rule.csv";
inline constexpr const char* llm_jsonl = "cases_llm.jsonl";
inline constexpr const char* llm_csv = "cases_llm.csv";
inline constexpr const char* warnings = "warnings.jsonl";
inline constexpr const char* run_log = "run_log.jsonl";
inline constexpr const char* runtimes = "runtimes.jsonl";
inline constexpr const char* summary = "run_summary.json";
inline constexpr const char* comparison = "comparison.txt";
}  // namespace output_files

/// Runs the pipeline. A non-null backend replaces the configured one (tests).
/// Startup problems throw ConfigError; per-document failures become warnings.
RunSummary run(const RunConfig& config, Backend* backend_override = nullptr);

/// Scores each enabled path's JSONL in output_dir against the gold file and
/// writes metrics_<path>.json plus the comparison table. Throws ConfigError
/// without a gold path.
std::vector<MetricsReport> evaluate(const RunConfig& config);

}  // namespace guardian
