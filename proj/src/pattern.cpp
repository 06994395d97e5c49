#include "guardian/pattern.hpp"

#include <boost/regex.hpp>

#include "guardian/common.hpp"

namespace guardian {

struct Pattern::Impl {
  boost::regex re;
};

Pattern::Pattern(std::string source) : Pattern(std::move(source), Options{}) {}

Pattern::Pattern(std::string source, Options opts) : source_(std::move(source)), opts_(opts) {
  boost::regex::flag_type flags = boost::regex::perl;
  if (opts_.case_insensitive) flags |= boost::regex::icase;
  try {
    auto impl = std::make_shared<Impl>();
    impl->re.assign(source_, flags);
    impl_ = std::move(impl);
  } catch (const boost::regex_error& e) {
    throw ConfigError("invalid pattern '" + source_ + "': " + e.what());
  }
}

size_t Pattern::capture_count() const { return impl_->re.mark_count(); }

namespace {
constexpr auto kMatchFlags = boost::match_not_dot_newline;

PatternMatch convert(const boost::match_results<std::string_view::const_iterator>& m,
                     std::string_view::const_iterator base) {
  PatternMatch out;
  out.whole = Span{static_cast<size_t>(m[0].first - base), static_cast<size_t>(m[0].second - base)};
  for (size_t i = 1; i < m.size(); ++i) {
    if (m[i].matched) {
      out.groups.emplace_back(Span{static_cast<size_t>(m[i].first - base),
                                   static_cast<size_t>(m[i].second - base)});
    } else {
      out.groups.emplace_back(std::nullopt);
    }
  }
  return out;
}
}  // namespace

std::optional<PatternMatch> Pattern::find(std::string_view text, size_t from) const {
  if (from > text.size()) return std::nullopt;
  boost::match_results<std::string_view::const_iterator> m;
  auto flags = kMatchFlags;
  if (from > 0) flags |= boost::match_prev_avail;
  if (!boost::regex_search(text.begin() + static_cast<std::ptrdiff_t>(from), text.end(), m,
                           impl_->re, flags)) {
    return std::nullopt;
  }
  return convert(m, text.begin());
}

std::vector<PatternMatch> Pattern::find_all(std::string_view text) const {
  std::vector<PatternMatch> out;
  size_t from = 0;
  while (from <= text.size()) {
    auto m = find(text, from);
    if (!m) break;
    size_t next = m->whole.end;
    if (m->whole.end == m->whole.begin) ++next;
    out.push_back(std::move(*m));
    from = next;
  }
  return out;
}

bool Pattern::full_match(std::string_view text) const {
  return boost::regex_match(text.begin(), text.end(), impl_->re, kMatchFlags);
}

}  // namespace guardian
