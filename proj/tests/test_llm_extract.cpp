#include <doctest.h>

#include <httplib.h>

#include <cstdlib>
#include <thread>

#include "guardian/backends.hpp"
#include "guardian/llm_extract.hpp"
#include "guardian/rule_parsers.hpp"
#include "support.hpp"

using namespace guardian;
using Step = ScriptedBackend::Step;

namespace {

RetryPolicy instant_retry(std::vector<long long>* delays = nullptr) {
  RetryPolicy p;
  p.sleep = [delays](std::chrono::milliseconds d) {
    if (delays) delays->push_back(d.count());
  };
  return p;
}

BackendRequest extract_request(const std::string& doc_text = "", int ordinal = 0) {
  BackendRequest r;
  r.prompt = build_extraction_prompt("text", default_schema());
  r.request_id = "req-1";
  r.source_text = doc_text;
  r.document_ordinal = ordinal;
  return r;
}

Json valid_candidate() {
  auto r = testsupport::minimal_record("VA-9");
  r["demographic"]["name"] = "Jane Roe";
  r["demographic"]["age_years"] = 31;
  return r;
}

bool has_code(const std::vector<Notice>& ns, WarnCode c) {
  for (const auto& n : ns) {
    if (n.code == c) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("truncate_for_budget") {
  std::string hundred(100, 'x');
  CHECK(truncate_for_budget(hundred, 500, {}) == hundred);
  CHECK(truncate_for_budget("abcdefghijKLM", 10, {}) == "abcdefghij");

  std::string doc = "Header line\n" + std::string(300, 'h') + "\n\nCircumstances\nShe left the store at dusk.\n";
  auto cut = truncate_for_budget(doc, 120, {"Circumstances"});
  CHECK(cut.size() <= 120);
  auto at = cut.find("She left the store at dusk.");
  REQUIRE(at != std::string::npos);
  // The priority block precedes the generic head text.
  auto head = cut.find("hhhh");
  CHECK((head == std::string::npos || at < head));
}

TEST_CASE("extraction prompt") {
  auto schema = default_schema();
  auto p = build_extraction_prompt("Name: Jane Roe", schema, 1000);
  CHECK(p.document_text == "Name: Jane Roe");
  CHECK(p.schema_text.find("demographic.name") != std::string::npos);
  CHECK(p.schema_text.find("provenance") == std::string::npos);
  CHECK(p.instruction.find("only what the document states") != std::string::npos);
  auto req = extract_request();
  req.prompt = p;
  auto text = req.prompt_text();
  CHECK(text.find(p.schema_text) != std::string::npos);
  CHECK(text.find("Name: Jane Roe") != std::string::npos);

  CHECK(build_extraction_prompt("", schema).document_text.empty());
  CHECK(build_extraction_prompt(std::string(5000, 'z'), schema, 1000).document_text.size() <= 1000);
}

TEST_CASE("call_backend retry policy") {
  ScriptedBackend failing({Step{"", BackendError::Kind::transport, {}}});
  std::vector<long long> delays;
  try {
    call_backend(extract_request(), failing, instant_retry(&delays));
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::transport);
  }
  CHECK(failing.calls() == 3);
  CHECK(delays == std::vector<long long>{50, 100});

  ScriptedBackend flaky({Step{"", BackendError::Kind::transport, {}}, Step{"{}", std::nullopt, {}}});
  CHECK(call_backend(extract_request(), flaky, instant_retry()).text == "{}");
  CHECK(flaky.calls() == 2);

  ScriptedBackend timeout({Step{"", BackendError::Kind::timeout, {}}});
  CHECK_THROWS_AS(call_backend(extract_request(), timeout, instant_retry()), BackendError);
  CHECK(timeout.calls() == 1);

  ScriptedBackend empty({Step{"   ", std::nullopt, {}}});
  try {
    call_backend(extract_request(), empty, instant_retry());
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::empty_response);
  }
}

TEST_CASE("latency is measured") {
  ScriptedBackend slow({Step{"{}", std::nullopt, std::chrono::milliseconds(50)}});
  auto r = call_backend(extract_request(), slow, instant_retry());
  CHECK(r.latency_ms >= 50);
  CHECK(r.latency_ms < 500);
}

TEST_CASE("sanitize_candidate") {
  auto schema = default_schema();
  auto s = sanitize_candidate(R"(Here is the record: {"case_id":"A1","demographic":{"name":"X"}} hope it helps)",
                              schema);
  CHECK(s.candidate["case_id"] == "A1");
  CHECK(s.candidate["demographic"]["name"] == "X");

  s = sanitize_candidate("```json\n{\"case_id\":\"A1\"}\n```", schema);
  CHECK(s.candidate["case_id"] == "A1");

  s = sanitize_candidate(R"({"case_id":"A1","demographic":{"zodiac_sign":"leo"},"zodiac_sign":"leo"})", schema);
  CHECK_FALSE(s.candidate.contains("zodiac_sign"));
  CHECK_FALSE(s.candidate["demographic"].contains("zodiac_sign"));
  CHECK(has_code(s.notices, WarnCode::sanitize_dropped_key));

  s = sanitize_candidate(R"({"demographic":{"age_years":"31","name":"42"},"spatial":{"lat":"38.5"}})", schema);
  CHECK(s.candidate["demographic"]["age_years"] == 31);
  CHECK(s.candidate["demographic"]["name"] == "42");
  CHECK(s.candidate["spatial"]["lat"] == 38.5);

  // Provenance is the pipeline's to stamp.
  s = sanitize_candidate(R"({"case_id":"A1","provenance":{"repair_count":5}})", schema);
  CHECK_FALSE(s.candidate.contains("provenance"));

  CHECK_THROWS_AS(sanitize_candidate("I cannot help", schema), CandidateParseError);
  CHECK_THROWS_AS(sanitize_candidate("{not json", schema), CandidateParseError);
  // Never invents values.
  s = sanitize_candidate(R"({"case_id":"A1"})", schema);
  CHECK(s.candidate.size() == 1);
}

TEST_CASE("repair loop: already valid") {
  ScriptedBackend unused({Step{"", BackendError::Kind::transport, {}}});
  auto out = repair_loop(valid_candidate(), default_schema(), unused);
  CHECK(out.attempts == 0);
  CHECK(out.passed);
  CHECK(unused.calls() == 0);
}

TEST_CASE("repair loop: scripted fix of a missing section") {
  auto broken = valid_candidate();
  broken.erase("outcome");
  auto fixed = broken;
  fixed["outcome"] = {{"status", "unknown"}};
  ScriptedBackend fixer({Step{fixed.dump(), std::nullopt, {}}});
  auto out = repair_loop(broken, default_schema(), fixer);
  CHECK(out.attempts == 1);
  CHECK(out.passed);
  CHECK(out.record["outcome"]["status"] == "unknown");
  CHECK(validate(out.record, default_schema()).valid);
}

TEST_CASE("repair loop: exhaustion") {
  auto broken = valid_candidate();
  broken["demographic"]["age_years"] = "thirty";
  ScriptedBackend stubborn({Step{broken.dump(), std::nullopt, {}}});
  RepairOptions opts;
  opts.max_attempts = 3;
  auto out = repair_loop(broken, default_schema(), stubborn, opts);
  CHECK(out.attempts == 3);
  CHECK_FALSE(out.passed);
  CHECK(has_code(out.notices, WarnCode::repair_exhausted));

  ScriptedBackend down({Step{"", BackendError::Kind::timeout, {}}});
  out = repair_loop(broken, default_schema(), down);
  CHECK(out.attempts == kDefaultMaxRepairAttempts);
  CHECK_FALSE(out.passed);
  CHECK(has_code(out.notices, WarnCode::repair_attempt_failed));
  RepairOptions none;
  none.max_attempts = 0;
  CHECK_THROWS(repair_loop(broken, default_schema(), down, none));
}

TEST_CASE("repair loop reverts edits outside cited paths") {
  auto broken = valid_candidate();
  broken["demographic"]["age_years"] = "thirty";
  auto proposal = broken;
  proposal["demographic"]["age_years"] = 30;
  proposal["demographic"]["name"] = "Someone Else";
  proposal["spatial"]["city"] = "Invented";
  ScriptedBackend meddler({Step{proposal.dump(), std::nullopt, {}}});
  auto out = repair_loop(broken, default_schema(), meddler);
  CHECK(out.passed);
  CHECK(out.record["demographic"]["age_years"] == 30);
  CHECK(out.record["demographic"]["name"] == "Jane Roe");
  CHECK(out.record["spatial"]["city"].is_null());
  CHECK(has_code(out.notices, WarnCode::repair_reverted_edit));
}

TEST_CASE("apply_minimal_edits") {
  Json prior = {{"a", {{"x", 1}, {"y", 2}}}, {"b", 3}};
  Json proposal = {{"a", {{"x", 9}, {"y", 8}}}, {"c", 4}};
  std::vector<Notice> notes;
  auto out = apply_minimal_edits(prior, proposal, {"a.x", "b"}, &notes);
  CHECK(out == Json{{"a", {{"x", 9}, {"y", 2}}}});
  CHECK(notes.size() == 2);  // a.y and c
}

TEST_CASE("oracle doubles") {
  auto doc = read_file(testsupport::fixture_path("trace_registry.txt"));
  auto gold = find_gold_marker(doc, 0);
  REQUIRE(gold);
  CHECK_FALSE(find_gold_marker(doc, 1));
  CHECK_FALSE(find_gold_marker("no trailer", 0));

  OracleBackend oracle;
  auto resp = oracle.complete(extract_request(doc, 0));
  auto cand = sanitize_candidate(resp.text, default_schema()).candidate;
  auto expected = *gold;
  expected.erase("provenance");
  CHECK(cand == expected);

  // Dropout is deterministic per case and keeps coordinates paired.
  DropoutOracleBackend drop(0.5, 3);
  auto a = sanitize_candidate(drop.complete(extract_request(doc)).text, default_schema()).candidate;
  auto b = sanitize_candidate(drop.complete(extract_request(doc)).text, default_schema()).candidate;
  CHECK(a == b);
  CHECK(a["spatial"]["lat"].is_null() == a["spatial"]["lon"].is_null());
  CHECK(a["case_id"] == "TRACE-0001");

  CHECK(InvalidThenFixBackend::injects(4, 0.2));
  CHECK_FALSE(InvalidThenFixBackend::injects(3, 0.2));
  int injected = 0;
  for (int i = 0; i < 50; ++i) injected += InvalidThenFixBackend::injects(i, 0.2);
  CHECK(injected == 10);

  InvalidThenFixBackend itf(1.0);
  auto bad = sanitize_candidate(itf.complete(extract_request(doc, 0)).text, default_schema()).candidate;
  bad["provenance"] = testsupport::minimal_record()["provenance"];
  CHECK_FALSE(validate(bad, default_schema()).valid);
  RepairOptions opts;
  opts.source_text = doc;
  auto fixed = repair_loop(bad, default_schema(), itf, opts);
  CHECK(fixed.passed);
  CHECK(fixed.attempts == 1);

  NeverFixBackend nf(1.0);
  auto stuck = repair_loop(bad, default_schema(), nf, opts);
  CHECK_FALSE(stuck.passed);
  CHECK(stuck.attempts == kDefaultMaxRepairAttempts);
}

TEST_CASE("make_backend") {
  CHECK(make_backend("oracle")->label() == "oracle");
  CHECK(make_backend("dropout_oracle", 0.1)->label() == "dropout_oracle");
  CHECK(make_backend("never_fix", 0.2)->label() == "never_fix");
  CHECK_THROWS_AS(make_backend("gpt"), ConfigError);
}

TEST_CASE("wire backend contract") {
  httplib::Server server;
  Json seen;
  std::string auth;
  server.Post("/v1/extract", [&](const httplib::Request& req, httplib::Response& res) {
    seen = Json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(R"({"text":"{\"case_id\":\"W-1\"}"})", "application/json");
  });
  server.Post("/v1/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  WireConfig cfg;
  cfg.extract_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/extract";
  cfg.repair_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/broken";
  cfg.api_key = "k";
  cfg.extract_model = "small";
  WireBackend wire(cfg);
  auto req = extract_request("SECRET SOURCE TEXT");
  auto resp = call_backend(req, wire, instant_retry());
  CHECK(resp.text == R"({"case_id":"W-1"})");
  CHECK(seen["request_id"] == "req-1");
  CHECK(seen["tier"] == "extract");
  CHECK(seen["model"] == "small");
  CHECK(seen["prompt_text"].get<std::string>().find("SECRET SOURCE TEXT") == std::string::npos);
  CHECK(auth == "Bearer k");

  BackendRequest repair;
  repair.prompt = build_repair_prompt(valid_candidate(), ValidationReport{false, {{"x", ViolationCode::bad_enum, "m"}}});
  repair.tier = Tier::repair;
  CHECK_THROWS_AS(call_backend(repair, wire, instant_retry()), BackendError);

  server.stop();
  t.join();

  unsetenv("GUARDIAN_LLM_EXTRACT_URL");
  CHECK_THROWS_AS(WireConfig::from_env(), ConfigError);
  setenv("GUARDIAN_LLM_EXTRACT_URL", "http://127.0.0.1:1/x", 1);
  auto env = WireConfig::from_env();
  CHECK(env.repair_url == env.extract_url);
  unsetenv("GUARDIAN_LLM_EXTRACT_URL");
}
