#include "guardian/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <semaphore>
#include <sstream>
#include <thread>

#include "guardian/backends.hpp"
#include "guardian/emit.hpp"
#include "guardian/geocode.hpp"
#include "guardian/harmonize.hpp"
#include "guardian/rule_parsers.hpp"
#include "guardian/schema.hpp"
#include "guardian/source_detect.hpp"
#include "guardian/timeutil.hpp"

namespace guardian {

namespace fs = std::filesystem;

std::string_view to_string(PathsEnabled p) {
  switch (p) {
    case PathsEnabled::rule: return "rule";
    case PathsEnabled::llm: return "llm";
    case PathsEnabled::both: return "both";
  }
  return "both";
}

std::optional<PathsEnabled> parse_paths_enabled(std::string_view s) {
  if (s == "rule") return PathsEnabled::rule;
  if (s == "llm") return PathsEnabled::llm;
  if (s == "both") return PathsEnabled::both;
  return std::nullopt;
}

RunConfig RunConfig::with_bundled_data() {
  fs::path data = GUARDIAN_DATA_DIR;
  RunConfig c;
  c.signatures_path = data / "signatures.jsonl";
  c.rulesets_dir = data / "rulesets";
  c.mappings_dir = data / "mappings";
  c.gazetteer_path = data / "gazetteer.tsv";
  c.regions_path = data / "regions.tsv";
  c.engines_path = data / "engines.jsonl";
  return c;
}

void RunConfig::validate() const {
  auto need = [](const fs::path& p, const char* what, bool dir) {
    if (p.empty()) throw ConfigError(std::string(what) + " is not set");
    std::error_code ec;
    bool ok = dir ? fs::is_directory(p, ec) : fs::is_regular_file(p, ec);
    if (!ok) throw ConfigError(std::string(what) + " not found: " + p.string());
  };
  need(input_dir, "input directory", true);
  if (output_dir.empty()) throw ConfigError("output directory is not set");
  if (!schema_path.empty()) need(schema_path, "schema file", false);
  need(signatures_path, "signatures file", false);
  need(rulesets_dir, "rulesets directory", true);
  need(mappings_dir, "mappings directory", true);
  need(gazetteer_path, "gazetteer file", false);
  need(regions_path, "regions file", false);
  need(engines_path, "engine chain file", false);
  if (gold_path) need(*gold_path, "gold file", false);
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (max_in_flight < 1 || max_in_flight > 1024) throw ConfigError("max_in_flight must be in [1, 1024]");
  if (max_repair_attempts < 0) throw ConfigError("max_repair_attempts must be non-negative");
  if (budget_chars < 256) throw ConfigError("budget_chars must be at least 256");
  if (request_timeout_s <= 0) throw ConfigError("request timeout must be positive");
  if (!(backend_param >= 0.0 && backend_param <= 1.0)) throw ConfigError("backend parameter must be in [0,1]");
  if (ingest_ts && !parse_iso8601(*ingest_ts)) throw ConfigError("ingest_ts is not an ISO 8601 timestamp");
}

Json to_json(const RunConfig& c) {
  auto opt_path = [](const std::optional<fs::path>& p) { return p ? Json(p->string()) : Json(); };
  Json j = Json::object();
  j["input_dir"] = c.input_dir.string();
  j["output_dir"] = c.output_dir.string();
  j["paths"] = std::string(to_string(c.paths));
  j["schema_path"] = c.schema_path.string();
  j["signatures_path"] = c.signatures_path.string();
  j["rulesets_dir"] = c.rulesets_dir.string();
  j["mappings_dir"] = c.mappings_dir.string();
  j["gazetteer_path"] = c.gazetteer_path.string();
  j["regions_path"] = c.regions_path.string();
  j["cache_path"] = c.cache_path.string();
  j["engines_path"] = c.engines_path.string();
  j["backend"] = c.backend;
  j["backend_param"] = c.backend_param;
  j["budget_chars"] = c.budget_chars;
  j["max_repair_attempts"] = c.max_repair_attempts;
  j["max_in_flight"] = c.max_in_flight;
  j["request_timeout_s"] = c.request_timeout_s;
  j["gold_path"] = opt_path(c.gold_path);
  j["seed"] = c.seed ? Json(*c.seed) : Json();
  j["ingest_ts"] = c.ingest_ts ? Json(*c.ingest_ts) : Json();
  j["tz_default"] = c.tz_default;
  j["quality_min_chars"] = c.quality.min_chars;
  j["quality_min_alnum"] = c.quality.min_alnum;
  return j;
}

Json to_json(const RunSummary& s) {
  Json j = Json::object();
  j["documents_in"] = s.documents_in;
  j["documents_failed"] = s.documents_failed;
  j["segments"] = s.segments;
  j["records_out_rule"] = s.records_out_rule;
  j["records_out_llm"] = s.records_out_llm;
  Json w = Json::object();
  for (const auto& [k, v] : s.warnings_by_severity) w[k] = v;
  j["warnings_by_severity"] = w;
  j["runtime_rule_s"] = s.runtime_rule_s;
  j["runtime_llm_s"] = s.runtime_llm_s;
  j["backend_calls"] = s.backend_calls;
  j["cache_hits"] = s.cache_hits;
  j["cache_misses"] = s.cache_misses;
  j["gazetteer_lookups"] = s.gazetteer_lookups;
  j["config_digest"] = s.config_digest;
  return j;
}

namespace {

// Caps the number of requests in flight across workers.
class ThrottledBackend : public Backend {
 public:
  ThrottledBackend(Backend& inner, int max_in_flight) : inner_(inner), slots_(max_in_flight) {}
  std::string label() const override { return inner_.label(); }

 protected:
  BackendResponse do_complete(const BackendRequest& req) override {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{slots_};
    return inner_.complete(req);
  }

 private:
  Backend& inner_;
  std::counting_semaphore<1024> slots_;
};

struct Resources {
  SchemaDefinition schema;
  std::vector<SourceSignature> signatures;
  RuleSets rulesets;
  MappingTable mappings;
  Gazetteer gazetteer;
  RegionTable regions;
  std::unique_ptr<GeocodeCache> cache;
  std::vector<EngineSpec> pdf_chain;
  std::unique_ptr<Backend> owned_backend;
  Backend* backend = nullptr;
};

struct RuntimeEntry {
  std::string path;
  std::string document_id;
  std::string case_id;
  double seconds = 0;
};

struct DocResult {
  std::vector<Json> rule_records;
  std::vector<Json> llm_records;
  std::vector<WarningLogEntry> warnings;
  std::vector<CandidateLog> candidates;
  std::vector<RuntimeEntry> runtimes;
  long segments = 0;
  bool failed = false;
};

std::vector<fs::path> list_documents(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = to_lower(entry.path().extension().string());
    if (ext == ".txt" || ext == ".pdf") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string mtime_iso(const fs::path& p) {
  auto ft = fs::last_write_time(p);
  auto sys = std::chrono::file_clock::to_sys(ft);
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::time_point_cast<std::chrono::seconds>(sys));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

class DocumentProcessor {
 public:
  DocumentProcessor(const RunConfig& cfg, Resources& res) : cfg_(cfg), res_(res) {}

  DocResult process(const fs::path& path, int ordinal) {
    DocResult out;
    RawDocument doc = make_document(path);
    auto warn = [&](const Notice& n, std::optional<std::string> case_id = std::nullopt) {
      out.warnings.push_back(make_entry(n, doc.document_id, std::move(case_id)));
    };

    ExtractedText extracted;
    try {
      static const std::vector<EngineSpec> plaintext_chain{EngineSpec{Engine::plaintext, "", 60}};
      const auto& chain = doc.declared_kind == RawDocument::Kind::plaintext ? plaintext_chain : res_.pdf_chain;
      SubprocessRunner runner;
      extracted = extract_text(doc, chain, cfg_.quality, runner);
    } catch (const ExtractionError& e) {
      warn({WarnCode::extract_failed, e.what()});
      out.failed = true;
      return out;
    }
    if (extracted.below_quality) {
      warn({WarnCode::extract_below_quality, "kept best text from " + std::string(to_string(extracted.engine_used)) +
                                                 " (" + std::to_string(extracted.char_count) + " chars)"});
    }

    const std::string& full_text = extracted.text;
    std::string body(strip_trailer(full_text));
    DetectionResult detection = detect_source(body, res_.signatures);
    if (detection.family == SourceFamily::unknown) {
      warn({WarnCode::detect_unknown_source, "no signature reached its marker threshold"});
    }
    std::vector<CaseSegment> segments;
    if (detection.signature_index >= 0) {
      segments = split_cases(body, res_.signatures[static_cast<size_t>(detection.signature_index)].case_headers);
    } else {
      segments = split_cases(body, std::span<const Pattern>{});
    }
    std::string ingest = cfg_.ingest_ts ? *cfg_.ingest_ts : mtime_iso(path);

    bool rule_on = cfg_.paths != PathsEnabled::llm;
    bool llm_on = cfg_.paths != PathsEnabled::rule;
    // Unknown sources go to the model path when it runs; the rule path then skips them.
    bool rule_for_doc = rule_on && !(detection.family == SourceFamily::unknown && llm_on);

    for (const auto& seg : segments) {
      ++out.segments;
      if (trim(seg.text).empty()) {
        warn({WarnCode::parse_empty_segment, "segment " + std::to_string(seg.segment_index) + " is empty"});
        continue;
      }
      Stamp stamp{detection, doc, extracted.engine_used, ingest, seg.segment_index};
      if (rule_for_doc) rule_path(seg, stamp, out);
      if (llm_on) llm_path(seg, stamp, full_text, ordinal, out);
    }
    return out;
  }

 private:
  struct Stamp {
    const DetectionResult& detection;
    const RawDocument& doc;
    Engine engine;
    std::string ingest_ts;
    int segment_index;
  };

  void stamp_provenance(Json& rec, const Stamp& s, ExtractionPath path, int repairs) {
    Json& p = rec["provenance"];
    if (!p.is_object()) p = Json::object();
    p["source_label"] = s.detection.source_label;
    p["source_family"] = std::string(to_string(s.detection.family));
    p["extraction_path"] = std::string(to_string(path));
    p["engine_used"] = std::string(to_string(s.engine));
    p["document_id"] = s.doc.document_id;
    if (!p.contains("field_origins") || !p["field_origins"].is_object()) p["field_origins"] = Json::object();
    p["ingest_ts"] = s.ingest_ts;
    p["repair_count"] = repairs;
    p["warnings_count"] = 0;
  }

  static std::optional<std::string> case_id_of(const Json& rec) {
    if (rec.is_object() && rec.contains("case_id") && rec["case_id"].is_string()) return rec["case_id"].get<std::string>();
    return std::nullopt;
  }

  void flush(std::vector<Notice>& notices, const Stamp& s, const std::optional<std::string>& case_id, DocResult& out) {
    for (const auto& n : notices) out.warnings.push_back(make_entry(n, s.doc.document_id, case_id));
    notices.clear();
  }

  static void add_violations(const ValidationReport& report, std::vector<Notice>& notices) {
    for (const auto& v : report.violations) {
      notices.push_back({WarnCode::validate_violation,
                         v.field_path + ": " + std::string(to_string(v.code)) + ": " + v.message});
    }
  }

  void rule_path(const CaseSegment& seg, const Stamp& s, DocResult& out) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<Notice> notices;
    DraftRecord draft = dispatch(s.detection, seg, res_.rulesets);
    notices.insert(notices.end(), draft.notices.begin(), draft.notices.end());
    HarmonizedRecord h = harmonize(draft, res_.mappings, res_.schema, HarmonizeOptions{cfg_.tz_default});
    notices.insert(notices.end(), h.notices.begin(), h.notices.end());
    Json rec = std::move(h.record);
    if (!case_id_of(rec)) {
      std::string fallback = s.doc.document_id + "#" + std::to_string(s.segment_index);
      notices.push_back({WarnCode::parse_missing_case_id, "no case identifier; using " + fallback});
      rec["case_id"] = fallback;
    }
    stamp_provenance(rec, s, ExtractionPath::rule, 0);
    auto geo = geocode_record(rec, res_.gazetteer, res_.regions, *res_.cache);
    notices.insert(notices.end(), geo.begin(), geo.end());
    add_violations(validate(rec, res_.schema), notices);
    rec["provenance"]["warnings_count"] = static_cast<long long>(notices.size());
    auto id = case_id_of(rec);
    flush(notices, s, id, out);
    out.runtimes.push_back({"rule", s.doc.document_id, id.value_or(""), seconds_since(t0)});
    out.rule_records.push_back(std::move(rec));
  }

  void llm_path(const CaseSegment& seg, const Stamp& s, const std::string& full_text, int ordinal, DocResult& out) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<Notice> notices;
    std::string request_base = s.doc.document_id + "#" + std::to_string(s.segment_index);
    std::string prompt_source(strip_trailer(seg.text));

    BackendRequest req;
    req.prompt = build_extraction_prompt(prompt_source, res_.schema, cfg_.budget_chars);
    req.tier = Tier::extract;
    req.timeout_s = cfg_.request_timeout_s;
    req.source_text = full_text;
    req.segment_index = s.segment_index;
    req.document_ordinal = ordinal;

    std::optional<SanitizedCandidate> sanitized;
    for (int attempt = 0; attempt < 2 && !sanitized; ++attempt) {
      req.request_id = request_base + "/extract/" + std::to_string(attempt);
      try {
        auto resp = call_backend(req, *res_.backend);
        sanitized = sanitize_candidate(resp.text, res_.schema);
      } catch (const BackendError& e) {
        notices.push_back({WarnCode::sanitize_backend_error,
                           std::string(to_string(e.kind())) + ": " + e.what()});
        break;
      } catch (const CandidateParseError& e) {
        if (attempt == 1) notices.push_back({WarnCode::sanitize_unparseable, e.what()});
      }
    }
    if (!sanitized) {
      flush(notices, s, std::nullopt, out);
      return;
    }
    notices.insert(notices.end(), sanitized->notices.begin(), sanitized->notices.end());
    Json cand = std::move(sanitized->candidate);
    stamp_provenance(cand, s, ExtractionPath::llm, 0);
    auto id = case_id_of(cand);

    CandidateLog log;
    log.document_id = s.doc.document_id;
    log.segment_index = s.segment_index;
    log.case_id = id;
    log.pre_valid = validate(cand, res_.schema).valid;

    RepairOptions ropts;
    ropts.max_attempts = cfg_.max_repair_attempts;
    ropts.timeout_s = cfg_.request_timeout_s;
    ropts.request_id_prefix = request_base + "/repair";
    ropts.source_text = full_text;
    ropts.segment_index = s.segment_index;
    ropts.document_ordinal = ordinal;
    RepairOutcome repaired = repair_loop(std::move(cand), res_.schema, *res_.backend, ropts);
    notices.insert(notices.end(), repaired.notices.begin(), repaired.notices.end());
    log.repair_attempts = repaired.attempts;

    if (!repaired.passed) {
      notices.push_back({WarnCode::validate_rejected, "candidate still invalid after " +
                                                          std::to_string(repaired.attempts) + " repair attempt(s)"});
      out.candidates.push_back(log);
      flush(notices, s, id, out);
      return;
    }

    HarmonizedRecord h = harmonize(repaired.record, s.detection.source_label, res_.mappings, res_.schema,
                                   HarmonizeOptions{cfg_.tz_default});
    notices.insert(notices.end(), h.notices.begin(), h.notices.end());
    Json rec = std::move(h.record);
    rec["provenance"]["repair_count"] = repaired.attempts;
    auto geo = geocode_record(rec, res_.gazetteer, res_.regions, *res_.cache);
    notices.insert(notices.end(), geo.begin(), geo.end());
    auto final_report = validate(rec, res_.schema);
    id = case_id_of(rec);
    if (!final_report.valid) {
      add_violations(final_report, notices);
      notices.push_back({WarnCode::validate_rejected, "record invalid after harmonization"});
      out.candidates.push_back(log);
      flush(notices, s, id, out);
      return;
    }
    log.post_valid = true;
    out.candidates.push_back(log);
    rec["provenance"]["warnings_count"] = static_cast<long long>(notices.size());
    flush(notices, s, id, out);
    out.runtimes.push_back({"llm", s.doc.document_id, id.value_or(""), seconds_since(t0)});
    out.llm_records.push_back(std::move(rec));
  }

  const RunConfig& cfg_;
  Resources& res_;
};

Resources load_resources(const RunConfig& cfg, Backend* override_backend) {
  Resources r;
  r.schema = cfg.schema_path.empty() ? default_schema() : load_schema(cfg.schema_path.string());
  r.signatures = load_signatures(cfg.signatures_path.string());
  r.rulesets = load_rulesets(cfg.rulesets_dir.string());
  r.mappings = load_mappings(cfg.mappings_dir.string());
  r.gazetteer = Gazetteer::load(cfg.gazetteer_path.string());
  r.regions = RegionTable::load(cfg.regions_path.string());
  fs::path cache = cfg.cache_path.empty() ? cfg.output_dir / "geocode_cache.tsv" : cfg.cache_path;
  if (cache.has_parent_path()) fs::create_directories(cache.parent_path());
  r.cache = std::make_unique<GeocodeCache>(cache.string());
  for (auto& spec : load_engine_chain(cfg.engines_path.string())) {
    if (spec.engine != Engine::plaintext) r.pdf_chain.push_back(std::move(spec));
  }
  if (r.pdf_chain.empty()) r.pdf_chain.push_back(EngineSpec{Engine::plaintext, "", 60});
  if (override_backend) {
    r.backend = override_backend;
  } else if (cfg.paths != PathsEnabled::rule) {
    r.owned_backend = make_backend(cfg.backend, cfg.backend_param, cfg.seed.value_or(0));
    r.backend = r.owned_backend.get();
  }
  return r;
}

void write_lines(const fs::path& path, const std::vector<Json>& lines) {
  std::string text;
  for (const auto& j : lines) text += j.dump() + "\n";
  write_file(path.string(), text);
}

}  // namespace

RunSummary run(const RunConfig& config, Backend* backend_override) {
  config.validate();
  fs::create_directories(config.output_dir);
  Resources res = load_resources(config, backend_override);
  std::optional<ThrottledBackend> throttled;
  Backend* raw_backend = res.backend;
  if (res.backend) {
    throttled.emplace(*res.backend, config.max_in_flight);
    res.backend = &*throttled;
  }

  auto docs = list_documents(config.input_dir);
  std::vector<DocResult> results(docs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    DocumentProcessor proc(config, res);
    for (size_t i = next++; i < docs.size(); i = next++) {
      try {
        results[i] = proc.process(docs[i], static_cast<int>(i));
      } catch (const std::exception& e) {
        DocResult failed;
        failed.failed = true;
        failed.warnings.push_back(make_entry({WarnCode::extract_failed, std::string("document skipped: ") + e.what()},
                                             docs[i].stem().string(), std::nullopt));
        results[i] = std::move(failed);
      }
    }
  };
  int nthreads = std::max(1, std::min<int>(config.workers, static_cast<int>(std::max<size_t>(docs.size(), 1))));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  res.cache->compact();

  std::ofstream warn_out(config.output_dir / output_files::warnings, std::ios::binary | std::ios::trunc);
  WarningSink sink(&warn_out);
  RunSummary summary;
  summary.documents_in = static_cast<long>(docs.size());
  std::vector<Json> rule_records, llm_records, run_log, runtimes;
  for (auto& r : results) {
    for (auto& w : r.warnings) sink.log(std::move(w));
    summary.segments += r.segments;
    summary.documents_failed += r.failed ? 1 : 0;
    for (auto& rec : r.rule_records) rule_records.push_back(std::move(rec));
    for (auto& rec : r.llm_records) llm_records.push_back(std::move(rec));
    for (const auto& c : r.candidates) run_log.push_back(to_json(c));
    for (const auto& t : r.runtimes) {
      runtimes.push_back(Json{{"path", t.path}, {"document_id", t.document_id}, {"case_id", t.case_id}, {"seconds", t.seconds}});
      (t.path == "rule" ? summary.runtime_rule_s : summary.runtime_llm_s) += t.seconds;
    }
  }

  rule_records = order_for_output(std::move(rule_records), &sink);
  llm_records = order_for_output(std::move(llm_records), &sink);
  const auto& out = config.output_dir;
  if (config.paths != PathsEnabled::llm) {
    summary.records_out_rule = static_cast<long>(write_jsonl(rule_records, (out / output_files::rule_jsonl).string(), res.schema));
    write_csv(rule_records, (out / output_files::rule_csv).string(), res.schema);
  }
  if (config.paths != PathsEnabled::rule) {
    summary.records_out_llm = static_cast<long>(write_jsonl(llm_records, (out / output_files::llm_jsonl).string(), res.schema));
    write_csv(llm_records, (out / output_files::llm_csv).string(), res.schema);
  }
  write_lines(out / output_files::run_log, run_log);
  write_lines(out / output_files::runtimes, runtimes);

  summary.warnings_by_severity = sink.by_severity();
  summary.backend_calls = raw_backend ? raw_backend->calls() : 0;
  summary.cache_hits = res.cache->hits();
  summary.cache_misses = res.cache->misses();
  summary.gazetteer_lookups = res.gazetteer.lookups();
  summary.config_digest = config_digest(to_json(config));
  write_file((out / output_files::summary).string(), to_json(summary).dump(2) + "\n");
  return summary;
}

std::vector<MetricsReport> evaluate(const RunConfig& config) {
  if (!config.gold_path) throw ConfigError("evaluation needs a gold file");
  std::error_code ec;
  if (!fs::is_regular_file(*config.gold_path, ec)) throw ConfigError("gold file not found: " + config.gold_path->string());
  SchemaDefinition schema = config.schema_path.empty() ? default_schema() : load_schema(config.schema_path.string());
  auto gold = read_jsonl(config.gold_path->string());
  const auto& out = config.output_dir;

  std::vector<CandidateLog> candidates;
  if (fs::exists(out / output_files::run_log)) {
    for (const auto& j : read_jsonl((out / output_files::run_log).string())) candidates.push_back(candidate_log_from_json(j));
  }
  std::map<std::string, std::vector<double>> times;
  if (fs::exists(out / output_files::runtimes)) {
    for (const auto& j : read_jsonl((out / output_files::runtimes).string())) {
      times[j.value("path", "")].push_back(j.value("seconds", 0.0));
    }
  }

  std::vector<MetricsReport> reports;
  auto digest = config_digest(to_json(config));
  for (const char* path : {"rule", "llm"}) {
    bool on = std::string_view(path) == "rule" ? config.paths != PathsEnabled::llm : config.paths != PathsEnabled::rule;
    if (!on) continue;
    fs::path file = out / (std::string("cases_") + path + ".jsonl");
    if (!fs::exists(file)) throw ConfigError("no output for the " + std::string(path) + " path: " + file.string());
    EvalInputs in;
    in.parsed = read_jsonl(file.string());
    in.gold = gold;
    if (std::string_view(path) == "llm") in.candidates = candidates;
    in.runtimes = times[path];
    MetricsReport r = evaluate_records(path, in, schema);
    r.config_digest = digest;
    write_file((out / (std::string("metrics_") + path + ".json")).string(), to_json(r).dump(2) + "\n");
    reports.push_back(std::move(r));
  }
  write_file((out / output_files::comparison).string(), comparison_table(reports));
  return reports;
}

}  // namespace guardian
