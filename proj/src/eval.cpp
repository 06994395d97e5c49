#include "guardian/eval.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "guardian/timeutil.hpp"

namespace guardian {

std::string_view to_string(Comparator c) {
  switch (c) {
    case Comparator::exact_canonical: return "exact_canonical";
    case Comparator::numeric_eq: return "numeric_eq";
    case Comparator::timestamp_eq: return "timestamp_eq";
    case Comparator::set_eq: return "set_eq";
  }
  return "exact_canonical";
}

std::vector<MatchRule> default_match_rules(const SchemaDefinition& schema) {
  static const std::set<std::string> excluded = {"case_id", "narrative_osint.clothing_description",
                                                 "narrative_osint.distinctive_features"};
  std::vector<MatchRule> rules;
  for (const auto* e : schema.leaves()) {
    if (e->field_path.rfind("provenance", 0) == 0 || excluded.count(e->field_path)) continue;
    Comparator c = Comparator::exact_canonical;
    switch (e->value_kind) {
      case ValueKind::integer:
      case ValueKind::decimal: c = Comparator::numeric_eq; break;
      case ValueKind::timestamp: c = Comparator::timestamp_eq; break;
      case ValueKind::list: c = Comparator::set_eq; break;
      case ValueKind::map: continue;
      default: break;
    }
    rules.push_back({e->field_path, c});
  }
  return rules;
}

std::vector<std::string> structured_paths(const std::vector<MatchRule>& rules) {
  std::vector<std::string> out;
  for (const auto& r : rules) {
    if (r.field_path != "narrative_osint.circumstances") out.push_back(r.field_path);
  }
  return out;
}

std::vector<std::string> default_key_fields() {
  return {"demographic.name", "temporal.last_seen_ts", "spatial.city", "spatial.state",
          "narrative_osint.circumstances"};
}

std::optional<Json> slot_value(const Json& record, const std::string& path) {
  const Json* v = resolve_path(record, path);
  if (!v || v->is_null()) return std::nullopt;
  if (v->is_string()) {
    auto s = v->get<std::string>();
    if (trim(s).empty()) return std::nullopt;
    if ((path == "demographic.sex" || path == "outcome.status") && s == "unknown") return std::nullopt;
    if (path == "spatial.geocode_method" && s == "none") return std::nullopt;
  }
  if (v->is_array() && v->empty()) return std::nullopt;
  return *v;
}

namespace {

std::string canon(const Json& v) { return v.is_string() ? canonical_text(v.get<std::string>()) : v.dump(); }

bool timestamps_match(const Json& p, const Json& g) {
  if (!p.is_string() || !g.is_string()) return canon(p) == canon(g);
  auto pt = parse_iso8601(p.get<std::string>());
  auto gt = parse_iso8601(g.get<std::string>());
  if (!pt || !gt) return canon(p) == canon(g);
  bool same_date = pt->year == gt->year && pt->month == gt->month && pt->day == gt->day;
  if (gt->precision == TimePrecision::date) return same_date;
  if (pt->precision != TimePrecision::datetime) return false;
  if (pt->offset_minutes && gt->offset_minutes) return pt->sort_key() == gt->sort_key();
  return same_date && pt->hour == gt->hour && pt->minute == gt->minute && pt->second == gt->second;
}

}  // namespace

bool values_match(const Json& predicted, const Json& gold, Comparator c) {
  switch (c) {
    case Comparator::numeric_eq:
      if (predicted.is_number() && gold.is_number()) return predicted.get<double>() == gold.get<double>();
      return canon(predicted) == canon(gold);
    case Comparator::timestamp_eq:
      return timestamps_match(predicted, gold);
    case Comparator::set_eq: {
      if (!predicted.is_array() || !gold.is_array()) return canon(predicted) == canon(gold);
      std::set<std::string> a, b;
      for (const auto& x : predicted) a.insert(canon(x));
      for (const auto& x : gold) b.insert(canon(x));
      return a == b;
    }
    case Comparator::exact_canonical:
      return canon(predicted) == canon(gold);
  }
  return false;
}

AlignmentResult align(const std::vector<Json>& parsed, const std::vector<Json>& gold) {
  auto index = [](const std::vector<Json>& recs, const char* side) {
    std::map<std::string, size_t> idx;
    for (size_t i = 0; i < recs.size(); ++i) {
      const Json* v = recs[i].is_object() && recs[i].contains("case_id") ? &recs[i]["case_id"] : nullptr;
      auto id = v && v->is_string() ? v->get<std::string>() : std::string();
      if (!idx.emplace(id, i).second) throw Error(std::string("duplicate case_id in ") + side + ": " + id);
    }
    return idx;
  };
  auto p = index(parsed, "parsed records");
  auto g = index(gold, "gold records");
  AlignmentResult out;
  for (const auto& [id, gi] : g) {
    auto it = p.find(id);
    if (it == p.end()) {
      out.unmatched_gold.push_back(id);
      out.unmatched_gold_records.push_back(gold[gi]);
    } else {
      out.pairs.emplace_back(parsed[it->second], gold[gi]);
    }
  }
  for (const auto& [id, pi] : p) {
    if (!g.count(id)) {
      out.unmatched_parsed.push_back(id);
      out.unmatched_parsed_records.push_back(parsed[pi]);
    }
  }
  return out;
}

namespace {
double ratio(long num, long den) { return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0; }
}  // namespace

PrfResult field_prf(const AlignmentResult& alignment, const std::vector<MatchRule>& rules) {
  PrfResult r;
  for (const auto& [parsed, gold] : alignment.pairs) {
    for (const auto& rule : rules) {
      auto p = slot_value(parsed, rule.field_path);
      auto g = slot_value(gold, rule.field_path);
      if (p && g) {
        if (values_match(*p, *g, rule.comparator)) {
          ++r.tp;
        } else {
          ++r.fp;
          ++r.fn;
        }
      } else if (p) {
        ++r.fp;
      } else if (g) {
        ++r.fn;
      }
    }
  }
  for (const auto& gold : alignment.unmatched_gold_records) {
    for (const auto& rule : rules) r.fn += slot_value(gold, rule.field_path) ? 1 : 0;
  }
  for (const auto& parsed : alignment.unmatched_parsed_records) {
    for (const auto& rule : rules) r.fp += slot_value(parsed, rule.field_path) ? 1 : 0;
  }
  r.precision = ratio(r.tp, r.tp + r.fp);
  r.recall = ratio(r.tp, r.tp + r.fn);
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

Rate structured_field_accuracy(const AlignmentResult& alignment, const std::vector<MatchRule>& rules,
                               const std::vector<std::string>& paths) {
  std::map<std::string, Comparator> cmp;
  for (const auto& r : rules) cmp[r.field_path] = r.comparator;
  long slots = 0, matches = 0;
  for (const auto& [parsed, gold] : alignment.pairs) {
    for (const auto& path : paths) {
      auto g = slot_value(gold, path);
      if (!g) continue;
      ++slots;
      auto p = slot_value(parsed, path);
      auto it = cmp.find(path);
      if (p && values_match(*p, *g, it == cmp.end() ? Comparator::exact_canonical : it->second)) ++matches;
    }
  }
  return {ratio(matches, slots), slots == 0};
}

Completeness completeness(const std::vector<Json>& records, const std::vector<std::string>& key_fields) {
  Completeness c;
  long filled = 0, slots = 0;
  for (const auto& f : key_fields) {
    long n = 0;
    for (const auto& r : records) {
      const Json* v = resolve_path(r, f);
      bool ok = v && !v->is_null() && !(v->is_string() && trim(v->get<std::string>()).empty()) &&
                !(v->is_array() && v->empty());
      n += ok ? 1 : 0;
    }
    c.by_field[f] = ratio(n, static_cast<long>(records.size()));
    filled += n;
    slots += static_cast<long>(records.size());
  }
  c.overall = {ratio(filled, slots), slots == 0};
  return c;
}

GeocodeRates geocode_rates(const std::vector<Json>& records) {
  long need = 0, success = 0, with_coords = 0, plausible = 0;
  for (const auto& r : records) {
    const Json* method = resolve_path(r, "spatial.geocode_method");
    const Json* lat = resolve_path(r, "spatial.lat");
    const Json* lon = resolve_path(r, "spatial.lon");
    bool coords = lat && lon && lat->is_number() && lon->is_number();
    bool provided = method && method->is_string() && *method == "source_provided";
    if (!provided) {
      ++need;
      success += coords ? 1 : 0;
    }
    if (coords) {
      ++with_coords;
      const Json* p = resolve_path(r, "spatial.geocode_plausible");
      plausible += (p && p->is_boolean() && p->get<bool>()) ? 1 : 0;
    }
  }
  GeocodeRates g;
  g.success = need == 0 ? Rate{1.0, true} : Rate{ratio(success, need), false};
  g.plausible = {ratio(plausible, with_coords), with_coords == 0};
  return g;
}

Json to_json(const CandidateLog& c) {
  Json j = Json::object();
  j["document_id"] = c.document_id;
  j["segment_index"] = c.segment_index;
  j["case_id"] = c.case_id ? Json(*c.case_id) : Json();
  j["pre_valid"] = c.pre_valid;
  j["repair_attempts"] = c.repair_attempts;
  j["post_valid"] = c.post_valid;
  return j;
}

CandidateLog candidate_log_from_json(const Json& j) {
  CandidateLog c;
  c.document_id = j.value("document_id", "");
  c.segment_index = j.value("segment_index", 0);
  if (j.contains("case_id") && j["case_id"].is_string()) c.case_id = j["case_id"].get<std::string>();
  c.pre_valid = j.value("pre_valid", false);
  c.repair_attempts = j.value("repair_attempts", 0);
  c.post_valid = j.value("post_valid", false);
  return c;
}

RepairStats repair_stats(const std::vector<CandidateLog>& log) {
  long n = static_cast<long>(log.size()), pre = 0, post = 0, repaired = 0;
  for (const auto& c : log) {
    pre += c.pre_valid ? 1 : 0;
    post += c.post_valid ? 1 : 0;
    repaired += c.repair_attempts >= 1 ? 1 : 0;
  }
  bool empty = n == 0;
  return {{ratio(pre, n), empty}, {ratio(post, n), empty}, {ratio(repaired, n), empty}};
}

RuntimeStats runtime_stats(const std::vector<double>& s) {
  if (s.empty()) throw Error("runtime_stats: empty sample");
  double sum = 0;
  for (double v : s) sum += v;
  auto sorted = s;
  std::sort(sorted.begin(), sorted.end());
  auto rank = static_cast<size_t>(std::ceil(0.95 * static_cast<double>(sorted.size())));
  return {sum / static_cast<double>(s.size()), sorted[std::max<size_t>(rank, 1) - 1]};
}

namespace {
Json rate_json(const Rate& r) { return r.value; }
}  // namespace

Json to_json(const MetricsReport& r) {
  Json j = Json::object();
  j["path"] = r.path_label;
  j["precision"] = r.prf.precision;
  j["recall"] = r.prf.recall;
  j["f1"] = r.prf.f1;
  j["tp"] = r.prf.tp;
  j["fp"] = r.prf.fp;
  j["fn"] = r.prf.fn;
  j["structured_field_accuracy"] = rate_json(r.structured_field_accuracy);
  j["completeness_overall"] = rate_json(r.completeness.overall);
  Json by = Json::object();
  for (const auto& [k, v] : r.completeness.by_field) by[k] = v;
  j["completeness_by_field"] = by;
  j["geocode_success_rate"] = rate_json(r.geocode.success);
  j["geocode_plausible_rate"] = rate_json(r.geocode.plausible);
  j["pre_pass_rate"] = r.repair ? Json(r.repair->pre_pass.value) : Json();
  j["post_pass_rate"] = r.repair ? Json(r.repair->post_pass.value) : Json();
  j["repair_rate"] = r.repair ? Json(r.repair->repair_rate.value) : Json();
  j["runtime_mean_s"] = r.runtime ? Json(r.runtime->mean_s) : Json();
  j["runtime_p95_s"] = r.runtime ? Json(r.runtime->p95_s) : Json();
  j["record_count"] = r.record_count;
  j["gold_count"] = r.gold_count;
  j["notes"] = r.notes;
  j["config_digest"] = r.config_digest;
  return j;
}

MetricsReport evaluate_records(const std::string& path_label, const EvalInputs& in, const SchemaDefinition& schema,
                               const std::vector<std::string>& key_fields) {
  MetricsReport r;
  r.path_label = path_label;
  auto rules = default_match_rules(schema);
  auto alignment = align(in.parsed, in.gold);
  r.prf = field_prf(alignment, rules);
  r.structured_field_accuracy = structured_field_accuracy(alignment, rules, structured_paths(rules));
  if (r.structured_field_accuracy.degenerate) r.notes.push_back("structured_field_accuracy: no gold slots; reported 0");
  r.completeness = completeness(in.parsed, key_fields);
  if (r.completeness.overall.degenerate) r.notes.push_back("completeness: no records; reported 0");
  r.geocode = geocode_rates(in.parsed);
  if (r.geocode.success.degenerate) r.notes.push_back("geocode_success_rate: nothing needed geocoding; reported 1");
  if (r.geocode.plausible.degenerate) r.notes.push_back("geocode_plausible_rate: no coordinates; reported 0");
  if (!in.candidates.empty()) r.repair = repair_stats(in.candidates);
  if (!in.runtimes.empty()) r.runtime = runtime_stats(in.runtimes);
  r.record_count = static_cast<long>(in.parsed.size());
  r.gold_count = static_cast<long>(in.gold.size());
  if (!alignment.unmatched_gold.empty()) {
    r.notes.push_back(std::to_string(alignment.unmatched_gold.size()) + " gold cases without a parsed record");
  }
  if (!alignment.unmatched_parsed.empty()) {
    r.notes.push_back(std::to_string(alignment.unmatched_parsed.size()) + " parsed records without gold");
  }
  return r;
}

std::string comparison_table(const std::vector<MetricsReport>& reports) {
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  auto num = [](double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
  };
  auto add = [&](const std::string& name, auto get) {
    std::vector<std::string> cells;
    for (const auto& r : reports) cells.push_back(get(r));
    rows.emplace_back(name, cells);
  };
  add("records", [](const MetricsReport& r) { return std::to_string(r.record_count); });
  add("precision", [&](const MetricsReport& r) { return num(r.prf.precision); });
  add("recall", [&](const MetricsReport& r) { return num(r.prf.recall); });
  add("f1", [&](const MetricsReport& r) { return num(r.prf.f1); });
  add("structured_field_accuracy", [&](const MetricsReport& r) { return num(r.structured_field_accuracy.value); });
  add("completeness_overall", [&](const MetricsReport& r) { return num(r.completeness.overall.value); });
  add("geocode_success_rate", [&](const MetricsReport& r) { return num(r.geocode.success.value); });
  add("geocode_plausible_rate", [&](const MetricsReport& r) { return num(r.geocode.plausible.value); });
  add("pre_pass_rate", [&](const MetricsReport& r) { return r.repair ? num(r.repair->pre_pass.value) : "-"; });
  add("post_pass_rate", [&](const MetricsReport& r) { return r.repair ? num(r.repair->post_pass.value) : "-"; });
  add("repair_rate", [&](const MetricsReport& r) { return r.repair ? num(r.repair->repair_rate.value) : "-"; });
  add("runtime_mean_s", [&](const MetricsReport& r) { return r.runtime ? num(r.runtime->mean_s) : "-"; });
  add("runtime_p95_s", [&](const MetricsReport& r) { return r.runtime ? num(r.runtime->p95_s) : "-"; });

  size_t w0 = std::string("metric").size();
  for (const auto& [name, _] : rows) w0 = std::max(w0, name.size());
  std::vector<size_t> w;
  for (const auto& r : reports) w.push_back(std::max<size_t>(r.path_label.size(), 6));
  for (const auto& [_, cells] : rows) {
    for (size_t i = 0; i < cells.size(); ++i) w[i] = std::max(w[i], cells[i].size());
  }
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(w0)) << "metric";
  for (size_t i = 0; i < reports.size(); ++i) {
    os << "  " << std::right << std::setw(static_cast<int>(w[i])) << reports[i].path_label;
  }
  os << '\n';
  for (const auto& [name, cells] : rows) {
    os << std::left << std::setw(static_cast<int>(w0)) << name;
    for (size_t i = 0; i < cells.size(); ++i) os << "  " << std::right << std::setw(static_cast<int>(w[i])) << cells[i];
    os << '\n';
  }
  return os.str();
}

std::string config_digest(const Json& config) {
  auto text = config.dump();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

}  // namespace guardian
