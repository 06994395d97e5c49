#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace guardian {

enum class TimePrecision { date, datetime };

/// A parsed ISO 8601 calendar date or date-time.
struct IsoTimestamp {
  int year = 0;
  unsigned month = 0;
  unsigned day = 0;
  TimePrecision precision = TimePrecision::date;
  int hour = 0, minute = 0;
  double second = 0;
  std::optional<int> offset_minutes;  // nullopt: local time without offset

  /// Seconds since epoch, shifted to UTC when an offset is present.
  double sort_key() const;
};

/// Accepts YYYY-MM-DD and YYYY-MM-DDTHH:MM[:SS[.fff]][Z|+HH:MM|-HH:MM].
/// Rejects calendar-invalid dates (2023-02-30).
std::optional<IsoTimestamp> parse_iso8601(std::string_view s);

bool valid_calendar_date(int year, unsigned month, unsigned day);

std::string format_iso_date(int year, unsigned month, unsigned day);

/// Current wall clock as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_now_iso();

}  // namespace guardian
