#include "guardian/llm_extract.hpp"

#include <map>
#include <thread>

#include "guardian/pattern.hpp"

namespace guardian {

const std::vector<std::string>& default_priority_headers() {
  static const std::vector<std::string> headers = {"Circumstances of Disappearance", "Details of Disappearance",
                                                   "DETAILS:", "Last Known Location", "Date of Last Contact"};
  return headers;
}

std::string truncate_for_budget(std::string_view text, size_t budget_chars,
                                const std::vector<std::string>& priority_headers) {
  if (text.size() <= budget_chars) return std::string(text);

  auto lines = split(text, '\n');
  std::vector<bool> priority(lines.size(), false);
  for (size_t i = 0; i < lines.size(); ++i) {
    bool header = false;
    for (const auto& h : priority_headers) {
      if (starts_with_icase(lines[i], h)) header = true;
    }
    if (!header) continue;
    for (size_t j = i; j < lines.size() && (j == i || !trim(lines[j]).empty()); ++j) priority[j] = true;
  }

  std::string first, rest;
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string& target = priority[i] ? first : rest;
    if (!target.empty()) target += '\n';
    target += lines[i];
  }
  std::string out = first.substr(0, budget_chars);
  if (out.size() + 1 < budget_chars && !rest.empty()) {
    if (!out.empty()) out += '\n';
    out += rest.substr(0, budget_chars - out.size());
  }
  return out;
}

namespace {

const char* kExtractInstruction =
    "Extract one case record from the document below. Reply with a single JSON object that follows the "
    "schema: use only the listed field paths, nest them by section, and put null where the document does "
    "not state a value. Extract only what the document states; do not guess or add facts. Do not include "
    "provenance fields. Reply with the JSON object only.";

const char* kRepairInstruction =
    "The JSON record below fails schema validation. Make the minimal edits needed to satisfy the schema: "
    "change only the fields named in the violations, keep every other field exactly as it is, and do not "
    "add facts. Use null or the schema default when a value cannot be corrected. Reply with the corrected "
    "JSON object only.";

}  // namespace

ExtractionPrompt build_extraction_prompt(std::string_view text, const SchemaDefinition& schema, size_t budget_chars) {
  std::vector<SchemaEntry> shown;
  for (const auto& e : schema.entries()) {
    if (e.field_path != "provenance" && e.field_path.rfind("provenance.", 0) != 0) shown.push_back(e);
  }
  ExtractionPrompt p;
  p.instruction = kExtractInstruction;
  p.schema_text = serialize_schema(SchemaDefinition(std::move(shown)));
  p.document_text = truncate_for_budget(text, budget_chars, default_priority_headers());
  return p;
}

RepairPrompt build_repair_prompt(const Json& candidate, const ValidationReport& report) {
  RepairPrompt p;
  p.instruction = kRepairInstruction;
  p.current_record_text = candidate.dump();
  for (const auto& v : report.violations) {
    p.violation_messages.push_back((v.field_path.empty() ? std::string("<record>") : v.field_path) + ": " +
                                   std::string(to_string(v.code)) + ": " + v.message);
  }
  return p;
}

std::string_view to_string(Tier t) { return t == Tier::extract ? "extract" : "repair"; }

std::string BackendRequest::prompt_text() const {
  if (auto* e = std::get_if<ExtractionPrompt>(&prompt)) {
    return e->instruction + "\n\nSCHEMA (one field per line):\n" + e->schema_text + "\nDOCUMENT:\n" +
           e->document_text + "\n";
  }
  const auto& r = std::get<RepairPrompt>(prompt);
  std::string out = r.instruction + "\n\nVIOLATIONS:\n";
  for (const auto& m : r.violation_messages) out += "- " + m + "\n";
  out += "\nCURRENT RECORD:\n" + r.current_record_text + "\n";
  return out;
}

std::string_view to_string(BackendError::Kind k) {
  switch (k) {
    case BackendError::Kind::timeout: return "timeout";
    case BackendError::Kind::transport: return "transport";
    case BackendError::Kind::empty_response: return "empty_response";
  }
  return "transport";
}

BackendResponse call_backend(const BackendRequest& req, Backend& backend, const RetryPolicy& policy) {
  for (int attempt = 0;; ++attempt) {
    try {
      auto start = std::chrono::steady_clock::now();
      BackendResponse resp = backend.complete(req);
      auto elapsed = std::chrono::steady_clock::now() - start;
      resp.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
      if (resp.backend_label.empty()) resp.backend_label = backend.label();
      if (trim(resp.text).empty()) {
        throw BackendError(BackendError::Kind::empty_response, "backend returned an empty response");
      }
      return resp;
    } catch (const BackendError& e) {
      if (e.kind() != BackendError::Kind::transport || attempt >= policy.max_retries) throw;
      auto delay = policy.base_delay * (1LL << attempt);
      if (policy.sleep) {
        policy.sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
    }
  }
}

// --- sanitize ----------------------------------------------------------------

namespace {

/// End (exclusive) of the balanced object starting at `open`, or npos.
size_t object_end(std::string_view s, size_t open) {
  int depth = 0;
  bool in_string = false, escaped = false;
  for (size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

Json coerce(const SchemaEntry& e, const Json& v) {
  if (!v.is_string()) return v;
  static const Pattern integer("\\A\\s*[+-]?\\d{1,15}\\s*\\z");
  static const Pattern decimal("\\A\\s*[+-]?(\\d+(\\.\\d*)?|\\.\\d+)([eE][+-]?\\d+)?\\s*\\z");
  auto s = v.get<std::string>();
  if (e.value_kind == ValueKind::integer && integer.full_match(s)) return std::stoll(trim(s));
  if (e.value_kind == ValueKind::decimal && decimal.full_match(s)) return std::stod(trim(s));
  return v;
}

}  // namespace

SanitizedCandidate sanitize_candidate(std::string_view text, const SchemaDefinition& schema) {
  std::optional<Json> parsed;
  for (size_t pos = text.find('{'); pos != std::string_view::npos; pos = text.find('{', pos + 1)) {
    size_t end = object_end(text, pos);
    if (end == std::string_view::npos) continue;
    Json j = Json::parse(text.substr(pos, end - pos), nullptr, false);
    if (!j.is_discarded() && j.is_object()) {
      parsed = std::move(j);
      break;
    }
  }
  if (!parsed) throw CandidateParseError("no JSON object found in backend response");

  SanitizedCandidate out;
  out.candidate = Json::object();
  auto dropped = [&](const std::string& path, const std::string& why) {
    out.notices.push_back({WarnCode::sanitize_dropped_key, path + ": " + why});
  };
  for (const auto& [key, value] : parsed->items()) {
    if (key == "provenance") {
      dropped(key, "provenance is stamped by the pipeline");
      continue;
    }
    const SchemaEntry* e = schema.find(key);
    if (!e) {
      dropped(key, "not in schema");
      continue;
    }
    if (e->value_kind != ValueKind::section || !value.is_object()) {
      out.candidate[key] = coerce(*e, value);
      continue;
    }
    Json section = Json::object();
    for (const auto& [child, cv] : value.items()) {
      auto path = key + "." + child;
      const SchemaEntry* ce = schema.find(path);
      if (!ce) {
        dropped(path, "not in schema");
        continue;
      }
      section[child] = coerce(*ce, cv);
    }
    out.candidate[key] = std::move(section);
  }
  return out;
}

// --- repair --------------------------------------------------------------------

namespace {

void collect_leaves(const Json& j, const std::string& prefix, std::map<std::string, std::string>& out) {
  if (j.is_object() && !j.empty()) {
    for (const auto& [k, v] : j.items()) collect_leaves(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array() && !j.empty()) {
    for (size_t i = 0; i < j.size(); ++i) collect_leaves(j[i], prefix + "." + std::to_string(i), out);
  } else {
    out[prefix] = j.dump();
  }
}

bool under(const std::string& path, const std::string& cited) {
  return cited.empty() || path == cited || (path.size() > cited.size() && path.compare(0, cited.size(), cited) == 0 &&
                                            path[cited.size()] == '.');
}

}  // namespace

Json apply_minimal_edits(const Json& prior, const Json& proposal, const std::vector<std::string>& cited_paths,
                         std::vector<Notice>* notices) {
  Json result = prior;
  for (const auto& path : cited_paths) {
    if (path.empty()) {
      result = proposal;
      return result;
    }
    try {
      if (const Json* v = resolve_path(proposal, path)) {
        assign_path(result, path, *v);
      } else {
        erase_path(result, path);
      }
    } catch (const PathSyntaxError&) {
      // The proposal restructured a parent; leave the prior value.
    }
  }
  if (notices) {
    std::map<std::string, std::string> before, after;
    collect_leaves(result, "", before);
    collect_leaves(proposal, "", after);
    std::map<std::string, bool> seen;
    for (const auto& [p, v] : after) {
      auto it = before.find(p);
      if (it == before.end() || it->second != v) seen[p] = true;
    }
    for (const auto& [p, v] : before) {
      if (!after.count(p)) seen[p] = true;
    }
    for (const auto& [p, _] : seen) {
      bool cited = false;
      for (const auto& c : cited_paths) cited = cited || under(p, c) || under(c, p);
      if (!cited) notices->push_back({WarnCode::repair_reverted_edit, "uncited change at " + p + " reverted"});
    }
  }
  return result;
}

RepairOutcome repair_loop(Json candidate, const SchemaDefinition& schema, Backend& backend, const RepairOptions& opts) {
  if (opts.max_attempts < 1) throw Error("max_attempts must be at least 1");
  RepairOutcome out;
  ValidationReport report = validate(candidate, schema);
  while (!report.valid && out.attempts < opts.max_attempts) {
    ++out.attempts;
    BackendRequest req;
    req.prompt = build_repair_prompt(candidate, report);
    req.tier = Tier::repair;
    req.timeout_s = opts.timeout_s;
    req.request_id = opts.request_id_prefix + "-" + std::to_string(out.attempts);
    req.source_text = opts.source_text;
    req.segment_index = opts.segment_index;
    req.document_ordinal = opts.document_ordinal;
    try {
      auto resp = call_backend(req, backend, opts.retry);
      auto sanitized = sanitize_candidate(resp.text, schema);
      out.notices.insert(out.notices.end(), sanitized.notices.begin(), sanitized.notices.end());
      // Provenance belongs to the pipeline, not the model.
      if (candidate.is_object() && candidate.contains("provenance")) {
        sanitized.candidate["provenance"] = candidate["provenance"];
      }
      std::vector<std::string> cited;
      for (const auto& v : report.violations) cited.push_back(v.field_path);
      candidate = apply_minimal_edits(candidate, sanitized.candidate, cited, &out.notices);
    } catch (const BackendError& e) {
      out.notices.push_back({WarnCode::repair_attempt_failed,
                             "attempt " + std::to_string(out.attempts) + ": " + std::string(to_string(e.kind())) +
                                 ": " + e.what()});
      continue;
    } catch (const CandidateParseError& e) {
      out.notices.push_back(
          {WarnCode::repair_attempt_failed, "attempt " + std::to_string(out.attempts) + ": " + e.what()});
      continue;
    }
    report = validate(candidate, schema);
  }
  out.passed = report.valid;
  out.record = std::move(candidate);
  if (!out.passed) {
    out.notices.push_back({WarnCode::repair_exhausted, std::to_string(report.violations.size()) +
                                                           " violations remain after " +
                                                           std::to_string(out.attempts) + " repair attempts"});
  }
  return out;
}

}  // namespace guardian
