#include "guardian/common.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace guardian {

std::string_view to_string(SourceFamily f) {
  switch (f) {
    case SourceFamily::registry_form: return "registry_form";
    case SourceFamily::bulletin: return "bulletin";
    case SourceFamily::narrative_profile: return "narrative_profile";
    case SourceFamily::unknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(ExtractionPath p) {
  return p == ExtractionPath::rule ? "rule" : "llm";
}

std::string_view to_string(Engine e) {
  switch (e) {
    case Engine::layout: return "layout";
    case Engine::basic: return "basic";
    case Engine::ocr: return "ocr";
    case Engine::plaintext: return "plaintext";
  }
  return "plaintext";
}

std::optional<SourceFamily> parse_source_family(std::string_view s) {
  for (auto f : {SourceFamily::registry_form, SourceFamily::bulletin,
                 SourceFamily::narrative_profile, SourceFamily::unknown}) {
    if (to_string(f) == s) return f;
  }
  return std::nullopt;
}

std::optional<ExtractionPath> parse_extraction_path(std::string_view s) {
  if (s == "rule") return ExtractionPath::rule;
  if (s == "llm") return ExtractionPath::llm;
  return std::nullopt;
}

std::optional<Engine> parse_engine(std::string_view s) {
  for (auto e : {Engine::layout, Engine::basic, Engine::ocr, Engine::plaintext}) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

namespace {
bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}
}  // namespace

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(s.substr(start));
      return parts;
    }
    parts.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

bool starts_with_icase(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  return to_lower(s.substr(0, prefix.size())) == to_lower(prefix);
}

std::string canonical_text(std::string_view s) { return to_lower(collapse_spaces(s)); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed: " + path);
}

std::vector<Json> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<Json> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      rows.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

std::string format_decimal(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace guardian
