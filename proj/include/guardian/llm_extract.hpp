#pragma once

// Schema-guided extraction through a pluggable text-generation backend:
// prompt construction, transport with retry, candidate sanitizing and the
// bounded validator-guided repair loop.

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "guardian/common.hpp"
#include "guardian/schema.hpp"
#include "guardian/warnings.hpp"

namespace guardian {

inline constexpr size_t kDefaultBudgetChars = 24000;
inline constexpr int kDefaultMaxRepairAttempts = 2;

/// Section titles whose blocks survive truncation first.
const std::vector<std::string>& default_priority_headers();

/// Unchanged when it fits. Otherwise the blocks under priority headers (in
/// document order), then the head of the remaining text, cut at the budget.
std::string truncate_for_budget(std::string_view text, size_t budget_chars,
                                const std::vector<std::string>& priority_headers);

struct ExtractionPrompt {
  std::string instruction;
  std::string schema_text;
  std::string document_text;
  int max_output_hint = 4096;
};

struct RepairPrompt {
  std::string current_record_text;
  std::vector<std::string> violation_messages;
  std::string instruction;
};

/// The schema shown to the model leaves out provenance, which the pipeline
/// stamps itself.
ExtractionPrompt build_extraction_prompt(std::string_view text, const SchemaDefinition& schema,
                                         size_t budget_chars = kDefaultBudgetChars);
RepairPrompt build_repair_prompt(const Json& candidate, const ValidationReport& report);

enum class Tier { extract, repair };
std::string_view to_string(Tier t);

struct BackendRequest {
  std::variant<ExtractionPrompt, RepairPrompt> prompt;
  Tier tier = Tier::extract;
  double timeout_s = 60;
  std::string request_id;
  /// Offline doubles only: the whole document text and the segment ordinal.
  /// Never sent over the wire.
  std::string source_text;
  int segment_index = 0;
  /// Position of the document in the run's sorted input list.
  int document_ordinal = 0;

  /// The rendered text a model receives.
  std::string prompt_text() const;
};

struct BackendResponse {
  std::string text;
  long long latency_ms = 0;
  std::string backend_label;
};

class BackendError : public Error {
 public:
  enum class Kind { timeout, transport, empty_response };
  BackendError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(BackendError::Kind k);

class Backend {
 public:
  virtual ~Backend() = default;
  /// One exchange; throws BackendError. Counted in calls().
  BackendResponse complete(const BackendRequest& req) {
    ++calls_;
    return do_complete(req);
  }
  virtual std::string label() const = 0;
  long long calls() const { return calls_.load(); }

 protected:
  virtual BackendResponse do_complete(const BackendRequest& req) = 0;

 private:
  std::atomic<long long> calls_{0};
};

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds base_delay{50};
  /// Replaceable for tests.
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// Retries transport failures with exponential backoff (base, 2*base, ...).
/// Timeouts and empty responses are not retried. Latency covers the
/// successful attempt only.
BackendResponse call_backend(const BackendRequest& req, Backend& backend, const RetryPolicy& policy = {});

class CandidateParseError : public Error {
 public:
  using Error::Error;
};

struct SanitizedCandidate {
  Json candidate;
  std::vector<Notice> notices;
};

/// Finds the first well-formed top-level object in the text, drops keys the
/// schema does not know (and provenance), and turns numeric strings into
/// numbers at numeric paths. Throws CandidateParseError when no object exists.
SanitizedCandidate sanitize_candidate(std::string_view response_text, const SchemaDefinition& schema);

struct RepairOutcome {
  Json record;
  int attempts = 0;
  bool passed = false;
  std::vector<Notice> notices;
};

struct RepairOptions {
  int max_attempts = kDefaultMaxRepairAttempts;
  double timeout_s = 60;
  std::string request_id_prefix = "repair";
  RetryPolicy retry;
  /// Copied into each repair request for offline doubles.
  std::string source_text;
  int segment_index = 0;
  int document_ordinal = 0;
};

/// Keeps `prior` except at the cited paths (and below them), where the
/// proposal's value is taken, or removed when the proposal lacks it. Each
/// other difference is reported as a reverted edit.
Json apply_minimal_edits(const Json& prior, const Json& proposal, const std::vector<std::string>& cited_paths,
                         std::vector<Notice>* notices = nullptr);

/// Validates; while violations remain and attempts are left, asks the repair
/// tier for minimal edits. Backend and parse failures count as attempts.
RepairOutcome repair_loop(Json candidate, const SchemaDefinition& schema, Backend& backend,
                          const RepairOptions& opts = {});

}  // namespace guardian
