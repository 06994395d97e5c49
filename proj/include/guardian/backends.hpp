#pragma once

// Concrete backends: offline doubles that read the gold trailer of
// synthetic documents, a scripted double, and the HTTP wire backend.

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "guardian/llm_extract.hpp"

namespace guardian {

/// One trailer line: {"ordinal":N,"gold":{...}}. Lines follow the
/// end-of-document sentinel.
std::string make_gold_marker(int ordinal, const Json& gold);
/// The gold object for the given segment ordinal, if the trailer has one.
std::optional<Json> find_gold_marker(std::string_view document_text, int ordinal);

/// Replies with the gold record (without provenance). Odd ordinals get the
/// object wrapped in prose and a code fence, which sanitizing must strip.
/// Repair requests are echoed unchanged.
class OracleBackend : public Backend {
 public:
  std::string label() const override { return "oracle"; }

 protected:
  BackendResponse do_complete(const BackendRequest& req) override;
  /// The candidate handed back for an extraction request; nullopt when the
  /// document carries no marker.
  virtual std::optional<Json> candidate_for(const BackendRequest& req);
  virtual std::string repair(const RepairPrompt& prompt);
};

/// Oracle with each non-provenance leaf other than case_id nulled (lists
/// emptied) with probability p, seeded by the case_id so results do not
/// depend on call order. Dropping either coordinate drops both.
class DropoutOracleBackend : public OracleBackend {
 public:
  explicit DropoutOracleBackend(double p, std::uint64_t seed = 0) : p_(p), seed_(seed) {}
  std::string label() const override { return "dropout_oracle"; }

 protected:
  std::optional<Json> candidate_for(const BackendRequest& req) override;

 private:
  double p_;
  std::uint64_t seed_;
};

/// Oracle whose first answer is schema-invalid for a `rate` share of the
/// documents: document ordinal i is broken when floor((i+1)r) > floor(ir).
/// Broken candidates cycle through a dropped outcome section, a text
/// age_years and an impossible last_seen_ts. Repair answers fix exactly the
/// cited violations (null, re-typed prior value, or schema default).
class InvalidThenFixBackend : public OracleBackend {
 public:
  explicit InvalidThenFixBackend(double rate) : rate_(rate) {}
  std::string label() const override { return "invalid_then_fix"; }
  static bool injects(int document_ordinal, double rate);

 protected:
  std::optional<Json> candidate_for(const BackendRequest& req) override;
  std::string repair(const RepairPrompt& prompt) override;

 private:
  double rate_;
};

/// Breaks the same candidates, and answers every repair with the record unchanged.
class NeverFixBackend : public InvalidThenFixBackend {
 public:
  using InvalidThenFixBackend::InvalidThenFixBackend;
  std::string label() const override { return "never_fix"; }

 protected:
  std::string repair(const RepairPrompt& prompt) override;
};

/// Replays a fixed script. Each step either answers or fails, after an
/// optional delay; the last step repeats once the script runs out.
class ScriptedBackend : public Backend {
 public:
  struct Step {
    std::string text;
    std::optional<BackendError::Kind> error;
    std::chrono::milliseconds latency{0};
  };
  explicit ScriptedBackend(std::deque<Step> steps) : steps_(std::move(steps)) {}
  std::string label() const override { return "scripted"; }

 protected:
  BackendResponse do_complete(const BackendRequest& req) override;

 private:
  std::mutex mu_;
  std::deque<Step> steps_;
};

/// Endpoints and credentials come from the environment:
///   GUARDIAN_LLM_EXTRACT_URL, GUARDIAN_LLM_REPAIR_URL (defaults to the extract URL),
///   GUARDIAN_LLM_API_KEY, GUARDIAN_LLM_EXTRACT_MODEL, GUARDIAN_LLM_REPAIR_MODEL.
struct WireConfig {
  std::string extract_url;
  std::string repair_url;
  std::string api_key;
  std::string extract_model;
  std::string repair_model;
  /// Throws ConfigError when no extract URL is set.
  static WireConfig from_env();
};

/// POSTs {"request_id","tier","model","prompt_text"} as JSON and expects
/// {"text": ...} back. Plain http only.
class WireBackend : public Backend {
 public:
  explicit WireBackend(WireConfig config);
  std::string label() const override { return "wire"; }

 protected:
  BackendResponse do_complete(const BackendRequest& req) override;

 private:
  WireConfig config_;
};

/// "oracle", "dropout_oracle", "invalid_then_fix", "never_fix" or "wire".
/// `param` is the dropout probability or the injection rate.
std::unique_ptr<Backend> make_backend(std::string_view name, double param = 0.0, std::uint64_t seed = 0);

}  // namespace guardian
