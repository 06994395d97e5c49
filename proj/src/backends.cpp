#include "guardian/backends.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <httplib.h>

#include "guardian/rule_parsers.hpp"

namespace guardian {

std::string make_gold_marker(int ordinal, const Json& gold) {
  Json m = Json::object();
  m["ordinal"] = ordinal;
  m["gold"] = gold;
  return m.dump();
}

std::optional<Json> find_gold_marker(std::string_view document_text, int ordinal) {
  auto body = strip_trailer(document_text);
  if (body.size() == document_text.size()) return std::nullopt;
  for (const auto& line : split(document_text.substr(body.size()), '\n')) {
    auto t = trim(line);
    if (t.empty() || t[0] != '{') continue;
    Json j = Json::parse(t, nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    if (j.value("ordinal", -1) == ordinal && j.contains("gold")) return j["gold"];
  }
  return std::nullopt;
}

// --- oracle ---------------------------------------------------------------------

std::optional<Json> OracleBackend::candidate_for(const BackendRequest& req) {
  auto gold = find_gold_marker(req.source_text, req.segment_index);
  if (!gold) return std::nullopt;
  gold->erase("provenance");
  return gold;
}

std::string OracleBackend::repair(const RepairPrompt& prompt) { return prompt.current_record_text; }

BackendResponse OracleBackend::do_complete(const BackendRequest& req) {
  BackendResponse resp;
  resp.backend_label = label();
  if (auto* r = std::get_if<RepairPrompt>(&req.prompt)) {
    resp.text = repair(*r);
    return resp;
  }
  auto cand = candidate_for(req);
  if (!cand) {
    resp.text = "No case record could be found in this document.";
    return resp;
  }
  if (req.segment_index % 2 == 1 || req.document_ordinal % 2 == 1) {
    resp.text = "Here is the extracted record:\n```json\n" + cand->dump(2) + "\n```\nLet me know if you need more.";
  } else {
    resp.text = cand->dump();
  }
  return resp;
}

// --- dropout oracle -----------------------------------------------------------------

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Uniform double in [0,1) from the top 53 bits; portable across libraries.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0); }

}  // namespace

std::optional<Json> DropoutOracleBackend::candidate_for(const BackendRequest& req) {
  auto cand = OracleBackend::candidate_for(req);
  if (!cand) return cand;
  std::mt19937_64 rng(fnv1a((*cand)["case_id"].is_string() ? (*cand)["case_id"].get<std::string>() : std::string()) ^ seed_);
  for (auto& [section, body] : cand->items()) {
    if (!body.is_object()) continue;
    for (auto& [key, value] : body.items()) {
      bool drop = unit(rng) < p_;
      if (!drop) continue;
      value = value.is_array() ? Json::array() : Json();
    }
  }
  // Coordinates are one fact; a lone latitude would be a schema violation.
  if (cand->contains("spatial") && (*cand)["spatial"].is_object()) {
    auto& s = (*cand)["spatial"];
    if (s.value("lat", Json()).is_null() || s.value("lon", Json()).is_null()) s["lat"] = s["lon"] = nullptr;
  }
  return cand;
}

// --- invalid then fix -------------------------------------------------------------------

bool InvalidThenFixBackend::injects(int i, double rate) {
  constexpr double eps = 1e-9;
  return std::floor((i + 1) * rate + eps) > std::floor(i * rate + eps);
}

std::optional<Json> InvalidThenFixBackend::candidate_for(const BackendRequest& req) {
  auto cand = OracleBackend::candidate_for(req);
  if (!cand || !injects(req.document_ordinal, rate_)) return cand;
  constexpr double eps = 1e-9;
  long k = static_cast<long>(std::floor((req.document_ordinal + 1) * rate_ + eps)) - 1;
  switch (k % 3) {
    case 0: cand->erase("outcome"); break;
    case 1: (*cand)["demographic"]["age_years"] = "about twenty"; break;
    default: (*cand)["temporal"]["last_seen_ts"] = "13/45/2020"; break;
  }
  return cand;
}

namespace {

Json default_section(const SchemaDefinition& schema, const std::string& section) {
  Json sk = record_skeleton(schema);
  Json s = sk.contains(section) ? sk[section] : Json::object();
  if (section == "outcome") s["status"] = "unknown";
  return s;
}

Json retype(const SchemaEntry& e, const Json& prior) {
  if (prior.is_string()) {
    auto t = trim(prior.get<std::string>());
    bool digits = !t.empty() && t.find_first_not_of("0123456789") == std::string::npos && t.size() < 10;
    if (e.value_kind == ValueKind::integer && digits) return std::stoll(t);
    if (e.value_kind == ValueKind::decimal && digits) return std::stod(t);
  }
  if (e.value_kind == ValueKind::string && prior.is_number()) return prior.dump();
  if (e.value_kind == ValueKind::list) return Json::array();
  if (e.value_kind == ValueKind::section) return Json::object();
  return nullptr;
}

}  // namespace

std::string InvalidThenFixBackend::repair(const RepairPrompt& prompt) {
  static const SchemaDefinition schema = default_schema();
  Json rec = Json::parse(prompt.current_record_text, nullptr, false);
  if (rec.is_discarded()) return prompt.current_record_text;
  for (const auto& msg : prompt.violation_messages) {
    auto parts = split(msg, ':');
    if (parts.size() < 2) continue;
    std::string path = trim(parts[0]);
    std::string code = trim(parts[1]);
    if (path == "<record>") continue;
    const SchemaEntry* e = schema.find(path);
    const Json* cur = resolve_path(rec, path);
    try {
      if (code == "missing_required") {
        if (e && e->value_kind == ValueKind::section) assign_path(rec, path, default_section(schema, path));
      } else if (code == "wrong_type") {
        if (e && e->value_kind == ValueKind::section) {
          assign_path(rec, path, default_section(schema, path));
        } else {
          assign_path(rec, path, e && cur ? retype(*e, *cur) : Json());
        }
      } else if (code == "bad_enum") {
        bool has_unknown = e && std::find(e->enum_values.begin(), e->enum_values.end(), "unknown") != e->enum_values.end();
        assign_path(rec, path, has_unknown ? Json("unknown") : Json());
      } else if (code == "unknown_key") {
        erase_path(rec, path);
      } else {
        assign_path(rec, path, Json());  // out_of_range, bad_pattern, bad_timestamp
      }
    } catch (const PathSyntaxError&) {
    }
  }
  return rec.dump();
}

std::string NeverFixBackend::repair(const RepairPrompt& prompt) { return prompt.current_record_text; }

// --- scripted -------------------------------------------------------------------------

BackendResponse ScriptedBackend::do_complete(const BackendRequest&) {
  Step step;
  {
    std::lock_guard lock(mu_);
    if (steps_.empty()) throw BackendError(BackendError::Kind::transport, "script exhausted");
    step = steps_.front();
    if (steps_.size() > 1) steps_.pop_front();
  }
  if (step.latency.count() > 0) std::this_thread::sleep_for(step.latency);
  if (step.error) throw BackendError(*step.error, "scripted " + std::string(to_string(*step.error)));
  return BackendResponse{step.text, 0, label()};
}

// --- wire -----------------------------------------------------------------------------

namespace {

std::string env(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
  if (url.compare(0, scheme, "http") != 0) throw ConfigError("only http endpoints are supported: " + url);
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

WireConfig WireConfig::from_env() {
  WireConfig c;
  c.extract_url = env("GUARDIAN_LLM_EXTRACT_URL");
  c.repair_url = env("GUARDIAN_LLM_REPAIR_URL");
  c.api_key = env("GUARDIAN_LLM_API_KEY");
  c.extract_model = env("GUARDIAN_LLM_EXTRACT_MODEL");
  c.repair_model = env("GUARDIAN_LLM_REPAIR_MODEL");
  if (c.extract_url.empty()) throw ConfigError("GUARDIAN_LLM_EXTRACT_URL is not set");
  if (c.repair_url.empty()) c.repair_url = c.extract_url;
  if (c.repair_model.empty()) c.repair_model = c.extract_model;
  return c;
}

WireBackend::WireBackend(WireConfig config) : config_(std::move(config)) {
  split_url(config_.extract_url);
  split_url(config_.repair_url.empty() ? config_.extract_url : config_.repair_url);
}

BackendResponse WireBackend::do_complete(const BackendRequest& req) {
  bool repair = req.tier == Tier::repair;
  auto url = split_url(repair && !config_.repair_url.empty() ? config_.repair_url : config_.extract_url);
  httplib::Client client(url.origin);
  auto secs = static_cast<time_t>(req.timeout_s);
  auto usecs = static_cast<time_t>((req.timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  Json body = Json::object();
  body["request_id"] = req.request_id;
  body["tier"] = std::string(to_string(req.tier));
  body["model"] = repair ? config_.repair_model : config_.extract_model;
  body["prompt_text"] = req.prompt_text();
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto start = std::chrono::steady_clock::now();
  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!res) {
    auto err = res.error();
    bool timed_out = err == httplib::Error::ConnectionTimeout ||
                     ((err == httplib::Error::Read || err == httplib::Error::Write) && elapsed >= req.timeout_s * 0.9);
    throw BackendError(timed_out ? BackendError::Kind::timeout : BackendError::Kind::transport,
                       "request " + req.request_id + ": " + httplib::to_string(err));
  }
  if (res->status != 200) {
    throw BackendError(BackendError::Kind::transport,
                       "request " + req.request_id + ": HTTP status " + std::to_string(res->status));
  }
  Json reply = Json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
    throw BackendError(BackendError::Kind::empty_response, "request " + req.request_id + ": reply has no text");
  }
  return BackendResponse{reply["text"].get<std::string>(), 0, label()};
}

std::unique_ptr<Backend> make_backend(std::string_view name, double param, std::uint64_t seed) {
  if (name == "oracle") return std::make_unique<OracleBackend>();
  if (name == "dropout_oracle") return std::make_unique<DropoutOracleBackend>(param, seed);
  if (name == "invalid_then_fix") return std::make_unique<InvalidThenFixBackend>(param);
  if (name == "never_fix") return std::make_unique<NeverFixBackend>(param);
  if (name == "wire") return std::make_unique<WireBackend>(WireConfig::from_env());
  throw ConfigError("unknown backend " + std::string(name));
}

}  // namespace guardian
