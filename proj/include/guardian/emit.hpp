#pragma once

// Output artifacts: JSONL in schema key order, the flattened CSV view, and
// the structured warning log.

#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "guardian/common.hpp"
#include "guardian/schema.hpp"
#include "guardian/warnings.hpp"

namespace guardian {

struct FlatRow {
  std::vector<std::pair<std::string, std::string>> columns;
  /// nullptr when the column is absent.
  const std::string* get(std::string_view name) const;
};

/// Depth-first, in the record's key order. Lists give path.0, path.1, ...;
/// field origins give provenance.field_origins.<field path>.<attribute>.
/// Null is "", booleans "true"/"false", decimals shortest round-trip.
FlatRow flatten(const Json& record);
FlatRow flatten(const CaseRecord& record);

/// Inverse of flatten, typed by the schema. Empty cells are null; empty
/// list cells are skipped. Columns the schema does not know are placed at
/// their path so validation reports them.
Json unflatten(const FlatRow& row, const SchemaDefinition& schema);

/// Reorders keys into schema order; unknown keys keep their place after the known ones.
Json in_schema_order(const Json& record, const SchemaDefinition& schema);

/// One object per line, schema key order, LF endings. Returns the line count.
size_t write_jsonl(const std::vector<Json>& records, const std::string& path, const SchemaDefinition& schema);
std::string to_jsonl(const std::vector<Json>& records, const SchemaDefinition& schema);

/// Union of the rows' columns: schema position, then list index, then map
/// key, then attribute. Unknown columns sort last by name.
std::vector<std::string> csv_columns(const std::vector<FlatRow>& rows, const SchemaDefinition& schema);
std::string to_csv(const std::vector<Json>& records, const SchemaDefinition& schema);
size_t write_csv(const std::vector<Json>& records, const std::string& path, const SchemaDefinition& schema);

/// Quotes fields holding a comma, quote, CR or LF; quotes are doubled.
std::string csv_escape(std::string_view field);
/// Parses CSV text (quoted fields may span lines). Throws Error on an
/// unterminated quote.
std::vector<std::vector<std::string>> read_csv(std::string_view text);
/// Header plus rows back into FlatRows.
std::vector<FlatRow> csv_rows(std::string_view text);

struct WarningLogEntry {
  std::string document_id;
  std::optional<std::string> case_id;
  Stage stage = Stage::emit;
  Severity severity = Severity::warning;
  std::string code;
  std::string message;
  std::string ts;  // filled by the sink when empty
};

Json to_json(const WarningLogEntry& e);
WarningLogEntry make_entry(const Notice& n, std::string document_id, std::optional<std::string> case_id);

/// Thread-safe, append-only warning log. Every call writes one line; there
/// is no deduplication.
class WarningSink {
 public:
  WarningSink() = default;
  explicit WarningSink(std::ostream* out) : out_(out) {}
  void log(WarningLogEntry e);
  size_t count() const;
  size_t count(Severity s) const;
  std::map<std::string, size_t> by_severity() const;
  std::vector<WarningLogEntry> entries() const;

 private:
  mutable std::mutex mu_;
  std::ostream* out_ = nullptr;
  std::vector<WarningLogEntry> entries_;
};

void log_warning(const WarningLogEntry& entry, WarningSink& sink);

/// Sorts by ascending case_id (stable) and drops later duplicates, logging
/// each drop.
std::vector<Json> order_for_output(std::vector<Json> records, WarningSink* sink = nullptr);

}  // namespace guardian
