#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace guardian {

/// Half-open byte span [begin, end) into the searched text.
struct Span {
  size_t begin = 0;
  size_t end = 0;
  size_t size() const { return end - begin; }
  bool operator==(const Span&) const = default;
};

struct PatternMatch {
  Span whole;
  std::vector<std::optional<Span>> groups;  // groups[0] is capture group 1
};

/// A compiled perl-syntax regular expression. `^`/`$` match at line
/// boundaries and `.` never crosses a newline. Immutable once built, so a
/// single instance may be shared across threads.
class Pattern {
 public:
  struct Options {
    bool case_insensitive = false;
  };

  /// Throws ConfigError when the source does not compile.
  explicit Pattern(std::string source);
  Pattern(std::string source, Options opts);

  const std::string& source() const { return source_; }
  bool case_insensitive() const { return opts_.case_insensitive; }
  size_t capture_count() const;

  std::optional<PatternMatch> find(std::string_view text, size_t from = 0) const;
  std::vector<PatternMatch> find_all(std::string_view text) const;
  bool matches_anywhere(std::string_view text) const { return find(text).has_value(); }
  /// True when the whole text matches.
  bool full_match(std::string_view text) const;

 private:
  struct Impl;
  std::string source_;
  Options opts_;
  std::shared_ptr<const Impl> impl_;
};

}  // namespace guardian
