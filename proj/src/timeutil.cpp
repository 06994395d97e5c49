#include "guardian/timeutil.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>

namespace guardian {

namespace {

bool read_digits(std::string_view s, size_t& pos, size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (size_t i = 0; i < n; ++i) {
    char c = s[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  pos += n;
  return true;
}

bool expect(std::string_view s, size_t& pos, char c) {
  if (pos < s.size() && s[pos] == c) {
    ++pos;
    return true;
  }
  return false;
}

}  // namespace

bool valid_calendar_date(int year, unsigned month, unsigned day) {
  using namespace std::chrono;
  return year_month_day{std::chrono::year{year}, std::chrono::month{month},
                        std::chrono::day{day}}
      .ok();
}

double IsoTimestamp::sort_key() const {
  using namespace std::chrono;
  auto days = sys_days{year_month_day{std::chrono::year{year}, std::chrono::month{month},
                                      std::chrono::day{day}}};
  double t = static_cast<double>(days.time_since_epoch().count()) * 86400.0 +
             hour * 3600.0 + minute * 60.0 + second;
  if (offset_minutes) t -= *offset_minutes * 60.0;
  return t;
}

std::optional<IsoTimestamp> parse_iso8601(std::string_view s) {
  IsoTimestamp ts;
  size_t pos = 0;
  int y = 0, mo = 0, d = 0;
  if (!read_digits(s, pos, 4, y) || !expect(s, pos, '-') || !read_digits(s, pos, 2, mo) ||
      !expect(s, pos, '-') || !read_digits(s, pos, 2, d)) {
    return std::nullopt;
  }
  if (!valid_calendar_date(y, static_cast<unsigned>(mo), static_cast<unsigned>(d))) {
    return std::nullopt;
  }
  ts.year = y;
  ts.month = static_cast<unsigned>(mo);
  ts.day = static_cast<unsigned>(d);
  if (pos == s.size()) return ts;

  if (!expect(s, pos, 'T')) return std::nullopt;
  ts.precision = TimePrecision::datetime;
  int h = 0, mi = 0;
  if (!read_digits(s, pos, 2, h) || !expect(s, pos, ':') || !read_digits(s, pos, 2, mi)) {
    return std::nullopt;
  }
  if (h > 23 || mi > 59) return std::nullopt;
  ts.hour = h;
  ts.minute = mi;
  if (expect(s, pos, ':')) {
    int sec = 0;
    if (!read_digits(s, pos, 2, sec) || sec > 60) return std::nullopt;
    ts.second = sec;
    if (expect(s, pos, '.')) {
      double scale = 0.1;
      size_t start = pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        ts.second += (s[pos] - '0') * scale;
        scale /= 10;
        ++pos;
      }
      if (pos == start) return std::nullopt;
    }
  }
  if (pos == s.size()) return ts;
  if (expect(s, pos, 'Z')) {
    ts.offset_minutes = 0;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    int sign = s[pos] == '-' ? -1 : 1;
    ++pos;
    int oh = 0, om = 0;
    if (!read_digits(s, pos, 2, oh)) return std::nullopt;
    expect(s, pos, ':');
    if (!read_digits(s, pos, 2, om)) return std::nullopt;
    if (oh > 14 || om > 59) return std::nullopt;
    ts.offset_minutes = sign * (oh * 60 + om);
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  return ts;
}

std::string format_iso_date(int year, unsigned month, unsigned day) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
  return buf;
}

std::string utc_now_iso() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace guardian
