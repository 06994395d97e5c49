#include "guardian/emit.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>

#include "guardian/pattern.hpp"
#include "guardian/timeutil.hpp"

namespace guardian {

const std::string* FlatRow::get(std::string_view name) const {
  for (const auto& [k, v] : columns) {
    if (k == name) return &v;
  }
  return nullptr;
}

namespace {

std::string scalar_text(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return v.dump();
  if (v.is_number_float()) return format_decimal(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

void flatten_into(const Json& v, const std::string& prefix, FlatRow& row) {
  if (v.is_object()) {
    for (const auto& [k, child] : v.items()) flatten_into(child, prefix.empty() ? k : prefix + "." + k, row);
  } else if (v.is_array()) {
    for (size_t i = 0; i < v.size(); ++i) flatten_into(v[i], prefix + "." + std::to_string(i), row);
  } else {
    row.columns.emplace_back(prefix, scalar_text(v));
  }
}

struct Addressed {
  const SchemaEntry* entry = nullptr;
  std::vector<std::string> rest;  // segments after the entry path
};

Addressed address(std::string_view column, const SchemaDefinition& schema) {
  auto parts = split(column, '.');
  for (size_t n = parts.size(); n >= 1; --n) {
    std::string prefix;
    for (size_t i = 0; i < n; ++i) prefix += (i ? "." : "") + parts[i];
    const SchemaEntry* e = schema.find(prefix);
    if (e && e->value_kind != ValueKind::section) {
      return {e, std::vector<std::string>(parts.begin() + static_cast<std::ptrdiff_t>(n), parts.end())};
    }
  }
  return {};
}

bool all_digits(std::string_view s) {
  return !s.empty() && s.size() < 10 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int attr_rank(std::string_view a) {
  if (a == "segment_index") return 0;
  if (a == "char_start") return 1;
  if (a == "char_end") return 2;
  return 3;
}

using ColumnKey = std::tuple<int, int, long, std::string, int, std::string>;

ColumnKey column_key(const std::string& c, const SchemaDefinition& schema) {
  auto a = address(c, schema);
  if (!a.entry) return {1, 0, 0, "", 0, c};
  long idx = -1;
  std::string map_key;
  int rank = 0;
  if (a.entry->value_kind == ValueKind::list && a.rest.size() == 1 && all_digits(a.rest[0])) {
    idx = std::stol(a.rest[0]);
  } else if (a.entry->value_kind == ValueKind::map && a.rest.size() >= 2) {
    for (size_t i = 0; i + 1 < a.rest.size(); ++i) map_key += (i ? "." : "") + a.rest[i];
    rank = attr_rank(a.rest.back());
  } else if (!a.rest.empty()) {
    return {1, 0, 0, "", 0, c};
  }
  return {0, a.entry->position, idx, map_key, rank, c};
}

Json typed(const SchemaEntry& e, const std::string& cell) {
  static const Pattern integer("\\A[+-]?\\d{1,18}\\z");
  static const Pattern decimal("\\A[+-]?(\\d+(\\.\\d*)?|\\.\\d+)([eE][+-]?\\d+)?\\z");
  if (cell.empty()) return nullptr;
  switch (e.value_kind) {
    case ValueKind::integer:
      if (integer.full_match(cell)) return std::stoll(cell);
      return cell;
    case ValueKind::decimal:
      if (decimal.full_match(cell)) return std::stod(cell);
      return cell;
    case ValueKind::boolean:
      if (cell == "true") return true;
      if (cell == "false") return false;
      return cell;
    default:
      return cell;
  }
}

}  // namespace

FlatRow flatten(const Json& record) {
  FlatRow row;
  flatten_into(record, "", row);
  return row;
}

FlatRow flatten(const CaseRecord& record) { return flatten(to_json(record)); }

Json unflatten(const FlatRow& row, const SchemaDefinition& schema) {
  Json rec = record_skeleton(schema);
  std::map<std::string, std::map<long, std::string>> lists;
  std::map<std::string, std::map<std::string, Json>> maps;
  for (const auto& [name, cell] : row.columns) {
    auto a = address(name, schema);
    auto unknown = [&] {
      Json v = cell.empty() ? Json() : Json(cell);
      try {
        assign_path(rec, name, v);
      } catch (const PathSyntaxError&) {
        rec[name] = v;
      }
    };
    if (!a.entry) {
      unknown();
      continue;
    }
    const auto& path = a.entry->field_path;
    if (a.entry->value_kind == ValueKind::list) {
      if (a.rest.size() == 1 && all_digits(a.rest[0])) {
        if (!cell.empty()) lists[path][std::stol(a.rest[0])] = cell;
      } else {
        unknown();
      }
      continue;
    }
    if (a.entry->value_kind == ValueKind::map) {
      if (a.rest.size() < 2) {
        unknown();
        continue;
      }
      std::string key;
      for (size_t i = 0; i + 1 < a.rest.size(); ++i) key += (i ? "." : "") + a.rest[i];
      auto& obj = maps[path][key];
      if (obj.is_null()) obj = Json::object();
      static const Pattern integer("\\A[+-]?\\d{1,18}\\z");
      if (cell.empty()) {
        obj[a.rest.back()] = nullptr;
      } else if (integer.full_match(cell)) {
        obj[a.rest.back()] = std::stoll(cell);
      } else {
        obj[a.rest.back()] = cell;
      }
      continue;
    }
    if (!a.rest.empty()) {
      unknown();
      continue;
    }
    assign_path(rec, path, typed(*a.entry, cell));
  }
  for (const auto& [path, items] : lists) {
    Json arr = Json::array();
    for (const auto& [idx, v] : items) arr.push_back(v);
    assign_path(rec, path, arr);
  }
  for (const auto& [path, entries] : maps) {
    Json obj = Json::object();
    for (const auto& [key, attrs] : entries) {
      bool any = false;
      for (const auto& [_, v] : attrs.items()) any = any || !v.is_null();
      if (any) obj[key] = attrs;
    }
    assign_path(rec, path, obj);
  }
  return rec;
}

namespace {

Json ordered(const Json& node, const std::string& prefix, const SchemaDefinition& schema) {
  if (!node.is_object()) return node;
  const SchemaEntry* self = prefix.empty() ? nullptr : schema.find(prefix);
  if (self && self->value_kind == ValueKind::map) {
    std::vector<std::string> keys;
    for (const auto& [k, _] : node.items()) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    Json out = Json::object();
    for (const auto& k : keys) out[k] = node[k];
    return out;
  }
  if (self && self->value_kind != ValueKind::section) return node;
  Json out = Json::object();
  for (const auto* child : schema.children(prefix)) {
    auto key = child->field_path.substr(prefix.empty() ? 0 : prefix.size() + 1);
    auto it = node.find(key);
    if (it != node.end()) out[key] = ordered(*it, child->field_path, schema);
  }
  for (const auto& [k, v] : node.items()) {
    if (!out.contains(k)) out[k] = v;
  }
  return out;
}

}  // namespace

Json in_schema_order(const Json& record, const SchemaDefinition& schema) { return ordered(record, "", schema); }

std::string to_jsonl(const std::vector<Json>& records, const SchemaDefinition& schema) {
  std::string out;
  for (const auto& r : records) {
    out += in_schema_order(r, schema).dump(-1, ' ', false, Json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

size_t write_jsonl(const std::vector<Json>& records, const std::string& path, const SchemaDefinition& schema) {
  write_file(path, to_jsonl(records, schema));
  return records.size();
}

std::vector<std::string> csv_columns(const std::vector<FlatRow>& rows, const SchemaDefinition& schema) {
  std::map<std::string, ColumnKey> keys;
  for (const auto& row : rows) {
    for (const auto& [name, _] : row.columns) {
      if (!keys.count(name)) keys.emplace(name, column_key(name, schema));
    }
  }
  std::vector<std::string> cols;
  for (const auto& [name, _] : keys) cols.push_back(name);
  std::sort(cols.begin(), cols.end(), [&](const std::string& a, const std::string& b) { return keys[a] < keys[b]; });
  return cols;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string to_csv(const std::vector<Json>& records, const SchemaDefinition& schema) {
  std::vector<FlatRow> rows;
  for (const auto& r : records) rows.push_back(flatten(in_schema_order(r, schema)));
  auto cols = csv_columns(rows, schema);
  std::string out;
  for (size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + csv_escape(cols[i]);
  out += '\n';
  for (const auto& row : rows) {
    std::map<std::string_view, const std::string*> cells;
    for (const auto& [k, v] : row.columns) cells[k] = &v;
    for (size_t i = 0; i < cols.size(); ++i) {
      if (i) out += ',';
      auto it = cells.find(cols[i]);
      if (it != cells.end()) out += csv_escape(*it->second);
    }
    out += '\n';
  }
  return out;
}

size_t write_csv(const std::vector<Json>& records, const std::string& path, const SchemaDefinition& schema) {
  write_file(path, to_csv(records, schema));
  return records.size();
}

std::vector<std::vector<std::string>> read_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
      rows.push_back(std::move(row));
      row.clear();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw Error("unterminated quoted CSV field");
  if (field_started || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<FlatRow> csv_rows(std::string_view text) {
  auto table = read_csv(text);
  std::vector<FlatRow> out;
  if (table.empty()) return out;
  const auto& header = table.front();
  for (size_t r = 1; r < table.size(); ++r) {
    if (table[r].size() != header.size()) {
      throw Error("CSV row " + std::to_string(r) + " has " + std::to_string(table[r].size()) + " fields, expected " +
                  std::to_string(header.size()));
    }
    FlatRow row;
    for (size_t c = 0; c < header.size(); ++c) row.columns.emplace_back(header[c], table[r][c]);
    out.push_back(std::move(row));
  }
  return out;
}

// --- warnings -------------------------------------------------------------------

Json to_json(const WarningLogEntry& e) {
  Json j = Json::object();
  j["document_id"] = e.document_id;
  j["case_id"] = e.case_id ? Json(*e.case_id) : Json();
  j["stage"] = std::string(to_string(e.stage));
  j["severity"] = std::string(to_string(e.severity));
  j["code"] = e.code;
  j["message"] = e.message;
  j["ts"] = e.ts;
  return j;
}

WarningLogEntry make_entry(const Notice& n, std::string document_id, std::optional<std::string> case_id) {
  WarningLogEntry e;
  e.document_id = std::move(document_id);
  e.case_id = std::move(case_id);
  e.stage = stage_of(n.code);
  e.severity = default_severity(n.code);
  e.code = std::string(to_string(n.code));
  e.message = n.message;
  return e;
}

void WarningSink::log(WarningLogEntry e) {
  if (e.ts.empty()) e.ts = utc_now_iso();
  std::lock_guard lock(mu_);
  if (out_) {
    *out_ << to_json(e).dump(-1, ' ', false, Json::error_handler_t::replace) << '\n';
    out_->flush();
  }
  entries_.push_back(std::move(e));
}

size_t WarningSink::count() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

size_t WarningSink::count(Severity s) const {
  std::lock_guard lock(mu_);
  return static_cast<size_t>(
      std::count_if(entries_.begin(), entries_.end(), [&](const WarningLogEntry& e) { return e.severity == s; }));
}

std::map<std::string, size_t> WarningSink::by_severity() const {
  std::map<std::string, size_t> out;
  for (auto s : {Severity::info, Severity::warning, Severity::error}) out[std::string(to_string(s))] = count(s);
  return out;
}

std::vector<WarningLogEntry> WarningSink::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

void log_warning(const WarningLogEntry& entry, WarningSink& sink) { sink.log(entry); }

std::vector<Json> order_for_output(std::vector<Json> records, WarningSink* sink) {
  auto text = [](const Json& obj, const char* key) {
    auto it = obj.is_object() ? obj.find(key) : obj.end();
    return it != obj.end() && it->is_string() ? it->get<std::string>() : std::string();
  };
  auto id = [&](const Json& r) { return text(r, "case_id"); };
  std::stable_sort(records.begin(), records.end(), [&](const Json& a, const Json& b) { return id(a) < id(b); });
  std::vector<Json> out;
  for (auto& r : records) {
    if (!out.empty() && id(out.back()) == id(r)) {
      if (sink) {
        WarningLogEntry e;
        e.document_id = r.contains("provenance") ? text(r["provenance"], "document_id") : "";
        e.case_id = id(r);
        e.stage = Stage::emit;
        e.severity = default_severity(WarnCode::emit_duplicate_case_id);
        e.code = std::string(to_string(WarnCode::emit_duplicate_case_id));
        e.message = "duplicate case_id " + id(r) + " dropped";
        sink->log(std::move(e));
      }
      continue;
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace guardian
