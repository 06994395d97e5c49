#include "guardian/rule_parsers.hpp"

#include <filesystem>
#include <set>

namespace guardian {

std::string_view strip_trailer(std::string_view text) {
  size_t pos = 0;
  while (pos <= text.size()) {
    auto hit = text.find(kEndOfDocumentSentinel, pos);
    if (hit == std::string_view::npos) return text;
    bool line_start = hit == 0 || text[hit - 1] == '\n';
    if (line_start) return text.substr(0, hit);
    pos = hit + 1;
  }
  return text;
}

std::string_view to_string(RuleScope s) {
  switch (s) {
    case RuleScope::line: return "line";
    case RuleScope::section: return "section";
    case RuleScope::document: return "document";
  }
  return "line";
}

const std::vector<LabelRule>& RuleSets::rules_for(SourceFamily f) const {
  static const std::vector<LabelRule> none;
  auto it = by_family.find(f);
  return it == by_family.end() ? none : it->second;
}

std::vector<LabelRule> parse_rules(std::string_view text) {
  std::vector<LabelRule> rules;
  int lineno = 0;
  for (const auto& line : split(text, '\n')) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto where = "rule line " + std::to_string(lineno) + ": ";
    try {
      Json j = Json::parse(line);
      auto scope_name = j.value("scope", "line");
      RuleScope scope;
      if (scope_name == "line") {
        scope = RuleScope::line;
      } else if (scope_name == "section") {
        scope = RuleScope::section;
      } else if (scope_name == "document") {
        scope = RuleScope::document;
      } else {
        throw ConfigError(where + "unknown scope " + scope_name);
      }
      Pattern::Options opts{!j.value("case_sensitive", false)};
      LabelRule rule{j.at("pattern_id").get<std::string>(), j.at("field_path").get<std::string>(),
                     Pattern(j.at("pattern").get<std::string>(), opts), scope, std::nullopt};
      if (rule.pattern.capture_count() != 1) {
        throw ConfigError(where + "pattern " + rule.pattern_id + " must have exactly one capture group");
      }
      if (j.contains("item_split")) rule.item_split.emplace(j["item_split"].get<std::string>(), opts);
      rules.push_back(std::move(rule));
    } catch (const Json::exception& e) {
      throw ConfigError(where + e.what());
    }
  }
  return rules;
}

std::vector<LabelRule> load_rules(const std::string& path) {
  try {
    return parse_rules(read_file(path));
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
}

RuleSets load_rulesets(const std::string& dir) {
  RuleSets sets;
  for (auto fam : {SourceFamily::registry_form, SourceFamily::bulletin, SourceFamily::narrative_profile}) {
    auto path = std::filesystem::path(dir) / (std::string(to_string(fam)) + ".jsonl");
    if (std::filesystem::exists(path)) sets.by_family[fam] = load_rules(path.string());
  }
  return sets;
}

namespace {

struct Unit {
  size_t offset;
  std::string_view text;
};

std::vector<Unit> units_for(std::string_view text, RuleScope scope) {
  std::vector<Unit> units;
  if (scope == RuleScope::document) {
    units.push_back({0, text});
    return units;
  }
  if (scope == RuleScope::line) {
    size_t start = 0;
    while (start <= text.size()) {
      size_t nl = text.find('\n', start);
      size_t end = nl == std::string_view::npos ? text.size() : nl;
      units.push_back({start, text.substr(start, end - start)});
      if (nl == std::string_view::npos) break;
      start = nl + 1;
    }
    return units;
  }
  // Blocks: maximal runs of non-empty lines.
  size_t start = 0;
  std::optional<size_t> block_start;
  size_t block_end = 0;
  while (start <= text.size()) {
    size_t nl = text.find('\n', start);
    size_t end = nl == std::string_view::npos ? text.size() : nl;
    bool blank = trim(text.substr(start, end - start)).empty();
    if (!blank) {
      if (!block_start) block_start = start;
      block_end = end;
    } else if (block_start) {
      units.push_back({*block_start, text.substr(*block_start, block_end - *block_start)});
      block_start.reset();
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (block_start) units.push_back({*block_start, text.substr(*block_start, block_end - *block_start)});
  return units;
}

bool is_space(char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; }

/// Shrinks a span to exclude surrounding whitespace.
Span trimmed(std::string_view text, Span s) {
  while (s.begin < s.end && is_space(text[s.begin])) ++s.begin;
  while (s.end > s.begin && is_space(text[s.end - 1])) --s.end;
  return s;
}

void add_candidate(DraftRecord& draft, std::string_view text, const std::string& path, Span span,
                   const std::string& pattern_id) {
  if (draft.candidates.count(path)) {
    draft.notices.push_back({WarnCode::parse_duplicate_match,
                             "later match for " + path + " by " + pattern_id + " dropped"});
    return;
  }
  draft.candidates[path] = FieldCandidate{path, std::string(text.substr(span.begin, span.size())),
                                          span.begin, span.end, pattern_id};
}

}  // namespace

DraftRecord apply_rules(const CaseSegment& segment, const std::vector<LabelRule>& rules,
                        const std::string& source_label) {
  DraftRecord draft;
  draft.source_label = source_label;
  draft.segment_index = segment.segment_index;
  std::string_view text = strip_trailer(segment.text);

  for (const auto& rule : rules) {
    std::vector<Span> captures;
    for (const auto& unit : units_for(text, rule.scope)) {
      for (const auto& m : rule.pattern.find_all(unit.text)) {
        if (m.groups.empty() || !m.groups[0]) continue;
        Span s{unit.offset + m.groups[0]->begin, unit.offset + m.groups[0]->end};
        s = trimmed(text, s);
        if (s.size() > 0) captures.push_back(s);
      }
    }
    if (captures.empty()) continue;

    if (!rule.item_split) {
      add_candidate(draft, text, rule.field_path, captures.front(), rule.pattern_id);
      for (size_t i = 1; i < captures.size(); ++i) {
        draft.notices.push_back({WarnCode::parse_duplicate_match,
                                 "later match for " + rule.field_path + " by " + rule.pattern_id +
                                     " dropped"});
      }
      continue;
    }

    // List-valued: split every capture into items, skipping repeats.
    std::set<std::string> seen;
    size_t next_index = 0;
    while (draft.candidates.count(rule.field_path + "." + std::to_string(next_index))) ++next_index;
    for (const auto& cap : captures) {
      std::string_view body = text.substr(cap.begin, cap.size());
      size_t item_begin = 0;
      auto emit_item = [&](size_t b, size_t e) {
        Span s = trimmed(text, Span{cap.begin + b, cap.begin + e});
        if (s.size() == 0) return;
        auto key = canonical_text(text.substr(s.begin, s.size()));
        if (!seen.insert(key).second) return;
        add_candidate(draft, text, rule.field_path + "." + std::to_string(next_index++), s,
                      rule.pattern_id);
      };
      for (const auto& sep : rule.item_split->find_all(body)) {
        if (sep.whole.size() == 0) continue;
        emit_item(item_begin, sep.whole.begin);
        item_begin = sep.whole.end;
      }
      emit_item(item_begin, body.size());
    }
  }
  return draft;
}

DraftRecord parse_registry_form(const CaseSegment& segment, const std::vector<LabelRule>& rules,
                                const std::string& source_label) {
  return apply_rules(segment, rules, source_label);
}

DraftRecord parse_bulletin(const CaseSegment& segment, const std::vector<LabelRule>& rules,
                           const std::string& source_label) {
  return apply_rules(segment, rules, source_label);
}

namespace {
const Pattern& label_line() {
  static const Pattern p("^[A-Za-z][A-Za-z /#()&-]{0,40}:");
  return p;
}
}  // namespace

DraftRecord parse_narrative_profile(const CaseSegment& segment, const std::vector<LabelRule>& rules,
                                    const std::string& source_label) {
  DraftRecord draft = apply_rules(segment, rules, source_label);
  const std::string key = "narrative_osint.circumstances";
  if (draft.candidates.count(key)) return draft;

  // Main prose block: the longest block containing a sentence and no label lines.
  std::string_view text = strip_trailer(segment.text);
  std::optional<Span> best;
  for (const auto& unit : units_for(text, RuleScope::section)) {
    if (unit.text.find(". ") == std::string_view::npos && unit.text.back() != '.') continue;
    if (label_line().matches_anywhere(unit.text)) continue;
    Span s = trimmed(text, Span{unit.offset, unit.offset + unit.text.size()});
    if (!best || s.size() > best->size()) best = s;
  }
  if (best) add_candidate(draft, text, key, *best, "narrative.main_prose");
  return draft;
}

DraftRecord dispatch(const DetectionResult& detection, const CaseSegment& segment,
                     const RuleSets& rulesets) {
  switch (detection.family) {
    case SourceFamily::registry_form:
      return parse_registry_form(segment, rulesets.rules_for(SourceFamily::registry_form),
                                 detection.source_label);
    case SourceFamily::bulletin:
      return parse_bulletin(segment, rulesets.rules_for(SourceFamily::bulletin), detection.source_label);
    case SourceFamily::narrative_profile:
      return parse_narrative_profile(segment, rulesets.rules_for(SourceFamily::narrative_profile),
                                     detection.source_label);
    case SourceFamily::unknown:
      break;
  }
  DraftRecord draft = parse_registry_form(segment, rulesets.rules_for(SourceFamily::registry_form),
                                          detection.source_label);
  draft.notices.insert(draft.notices.begin(),
                       Notice{WarnCode::parse_generic_fallback,
                              "unknown source; parsed with generic registry-form rules"});
  return draft;
}

}  // namespace guardian
