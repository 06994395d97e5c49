#pragma once

// Document text acquisition: an engine cascade (layout, basic, OCR, or a
// plaintext passthrough), whitespace pre-normalization, and case splitting.

#include <filesystem>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guardian/common.hpp"
#include "guardian/pattern.hpp"

namespace guardian {

struct RawDocument {
  enum class Kind { pdf, plaintext };
  std::string document_id;  // file stem
  std::filesystem::path path;
  Kind declared_kind = Kind::plaintext;
};

/// Builds a RawDocument from a path; ".pdf" (any case) is pdf, anything else plaintext.
RawDocument make_document(const std::filesystem::path& path);

/// One extraction engine. External engines run `command_template` through
/// /bin/sh after substituting {input} and {output} with shell-quoted paths;
/// without an {output} placeholder the engine's stdout is captured.
struct EngineSpec {
  Engine engine = Engine::plaintext;
  std::string command_template;
  double timeout_s = 60;
};

/// Loads engine specs from JSONL ({"engine":..., "command":..., "timeout_s":...}).
std::vector<EngineSpec> load_engine_chain(const std::string& path);

struct QualityThresholds {
  size_t min_chars = 64;
  double min_alnum = 0.3;
};

struct EngineAttempt {
  enum class Outcome { accepted, low_quality, failed, timeout };
  Engine engine = Engine::plaintext;
  Outcome outcome = Outcome::failed;
  std::string detail;
  long long millis = 0;
};

std::string_view to_string(EngineAttempt::Outcome o);

struct ExtractedText {
  std::string text;  // pre-normalized
  Engine engine_used = Engine::plaintext;
  size_t char_count = 0;
  double alnum_ratio = 0;
  /// Set when no engine met the thresholds and the best result was kept.
  bool below_quality = false;
  std::vector<EngineAttempt> attempts;
};

/// char_count and alnum_ratio (ASCII alphanumeric bytes / max(1, bytes)).
std::pair<size_t, double> text_quality(std::string_view text);

class EngineFailure : public Error {
 public:
  using Error::Error;
};

class EngineTimeout : public EngineFailure {
 public:
  using EngineFailure::EngineFailure;
};

/// Every engine in the chain errored; carries one cause per engine.
class ExtractionError : public Error {
 public:
  ExtractionError(std::string document_id, std::vector<EngineAttempt> causes);
  const std::vector<EngineAttempt>& causes() const { return causes_; }

 private:
  std::vector<EngineAttempt> causes_;
};

/// Runs one engine over one document and returns the raw text.
/// Throws EngineFailure (or EngineTimeout).
class EngineRunner {
 public:
  virtual ~EngineRunner() = default;
  virtual std::string run(const EngineSpec& spec, const RawDocument& doc) = 0;
};

/// Reads plaintext documents directly and runs external engines as subprocesses.
class SubprocessRunner : public EngineRunner {
 public:
  std::string run(const EngineSpec& spec, const RawDocument& doc) override;
};

/// Runs a shell command with a deadline, returning stdout. Throws
/// EngineTimeout past the deadline and EngineFailure on nonzero exit.
std::string run_command(const std::string& command, double timeout_s);

struct CallLogEntry {
  std::string document_id;
  Engine engine = Engine::plaintext;
  EngineAttempt::Outcome outcome = EngineAttempt::Outcome::failed;
  long long millis = 0;
};

/// Engine call log; one JSON object per line when a stream is attached.
/// Safe for concurrent appends.
class CallLog {
 public:
  CallLog() = default;
  explicit CallLog(std::ostream* sink) : sink_(sink) {}
  void append(const CallLogEntry& e);
  std::vector<CallLogEntry> entries() const;

 private:
  mutable std::mutex mu_;
  std::ostream* sink_ = nullptr;
  std::vector<CallLogEntry> entries_;
};

/// Runs the chain in order and returns the first result meeting both
/// thresholds, or the best-scoring one flagged below_quality. Throws
/// ConfigError for an empty chain or an OCR engine that is not last, and
/// ExtractionError when every engine errored.
ExtractedText extract_text(const RawDocument& doc, std::span<const EngineSpec> chain,
                           const QualityThresholds& quality, EngineRunner& runner,
                           CallLog* log = nullptr);

/// Line endings to LF, horizontal whitespace runs to one space, control
/// characters other than LF removed, lines trimmed, 3+ blank lines to one.
std::string prenormalize(std::string_view text);

struct CaseSegment {
  int segment_index = 0;
  std::string text;
  size_t char_start = 0;
  size_t char_end = 0;
};

/// Starts a new segment at every header match. Text ahead of the first
/// header stays in segment 0. No match yields one segment for the whole
/// text (also for empty text).
std::vector<CaseSegment> split_cases(std::string_view text, std::span<const Pattern> headers);
/// Compiles the sources first; throws ConfigError on an invalid pattern.
std::vector<CaseSegment> split_cases(std::string_view text,
                                     const std::vector<std::string>& header_patterns);

}  // namespace guardian
