#include "tkg/time.hpp"

#include <chrono>
#include <cstdio>

namespace tkg {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  using namespace std::chrono;
  const sys_days sd = year{static_cast<int>(y)} / month{m} / day{d};
  return sd.time_since_epoch().count();
}

bool valid_date(int y, unsigned m, unsigned d) {
  using namespace std::chrono;
  return year_month_day{year{y}, month{m}, day{d}}.ok();
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

bool read_digits(std::string_view s, std::size_t& pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  pos += n;
  return true;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
  if (pos < s.size() && s[pos] == c) {
    ++pos;
    return true;
  }
  return false;
}

}  // namespace

Timestamp Timestamp::from_civil(int year, unsigned month, unsigned day, unsigned hour, unsigned minute,
                                unsigned second, unsigned millis) {
  const std::int64_t days = days_from_civil(year, month, day);
  return Timestamp{days * kMillisPerDay + static_cast<std::int64_t>(hour) * 3'600'000 +
                   static_cast<std::int64_t>(minute) * 60'000 + static_cast<std::int64_t>(second) * 1'000 +
                   static_cast<std::int64_t>(millis)};
}

CivilTime to_civil(Timestamp t) {
  using namespace std::chrono;
  const std::int64_t days = floor_div(t.ms, kMillisPerDay);
  std::int64_t rem = t.ms - days * kMillisPerDay;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  CivilTime c{};
  c.year = static_cast<int>(ymd.year());
  c.month = static_cast<unsigned>(ymd.month());
  c.day = static_cast<unsigned>(ymd.day());
  c.hour = static_cast<unsigned>(rem / 3'600'000);
  rem %= 3'600'000;
  c.minute = static_cast<unsigned>(rem / 60'000);
  rem %= 60'000;
  c.second = static_cast<unsigned>(rem / 1'000);
  c.millis = static_cast<unsigned>(rem % 1'000);
  return c;
}

std::optional<Timestamp> parse_iso8601(std::string_view s) {
  std::size_t pos = 0;
  int y, mo, d;
  if (!read_digits(s, pos, 4, y) || !expect(s, pos, '-') || !read_digits(s, pos, 2, mo) || !expect(s, pos, '-') ||
      !read_digits(s, pos, 2, d))
    return std::nullopt;
  if (!valid_date(y, static_cast<unsigned>(mo), static_cast<unsigned>(d))) return std::nullopt;
  int h = 0, mi = 0, sec = 0, ms = 0;
  std::int64_t offset_min = 0;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ') return std::nullopt;
    ++pos;
    if (!read_digits(s, pos, 2, h) || !expect(s, pos, ':') || !read_digits(s, pos, 2, mi)) return std::nullopt;
    if (expect(s, pos, ':')) {
      if (!read_digits(s, pos, 2, sec)) return std::nullopt;
      if (expect(s, pos, '.') || expect(s, pos, ',')) {
        int digits = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
          if (digits < 3) ms = ms * 10 + (s[pos] - '0');
          ++digits;
          ++pos;
        }
        if (digits == 0) return std::nullopt;
        for (int i = digits; i < 3; ++i) ms *= 10;
      }
    }
    if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
    if (pos < s.size()) {
      if (s[pos] == 'Z' || s[pos] == 'z') {
        ++pos;
      } else if (s[pos] == '+' || s[pos] == '-') {
        const int sign = s[pos] == '-' ? -1 : 1;
        ++pos;
        int oh, om = 0;
        if (!read_digits(s, pos, 2, oh)) return std::nullopt;
        if (expect(s, pos, ':')) {
          if (!read_digits(s, pos, 2, om)) return std::nullopt;
        } else if (pos < s.size()) {
          if (!read_digits(s, pos, 2, om)) return std::nullopt;
        }
        if (oh > 23 || om > 59) return std::nullopt;
        offset_min = sign * (oh * 60 + om);
      } else {
        return std::nullopt;
      }
    }
  }
  if (pos != s.size()) return std::nullopt;
  Timestamp t = Timestamp::from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), static_cast<unsigned>(h),
                                      static_cast<unsigned>(mi), static_cast<unsigned>(sec), static_cast<unsigned>(ms));
  t.ms -= offset_min * 60'000;
  return t;
}

std::string format_iso8601(Timestamp t) {
  const auto c = to_civil(t);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02u:%02u:%02u.%03uZ", c.year, c.month, c.day, c.hour, c.minute,
                c.second, c.millis);
  return buf;
}

std::string format_date_or_datetime(Timestamp t) {
  const auto c = to_civil(t);
  if (c.hour == 0 && c.minute == 0 && c.second == 0 && c.millis == 0) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", c.year, c.month, c.day);
    return buf;
  }
  return format_iso8601(t);
}

Timestamp add_days(Timestamp t, std::int64_t days) { return Timestamp{t.ms + days * kMillisPerDay}; }

Timestamp add_months(Timestamp t, std::int64_t months) {
  using namespace std::chrono;
  const auto c = to_civil(t);
  std::int64_t total = static_cast<std::int64_t>(c.year) * 12 + (c.month - 1) + months;
  const int y = static_cast<int>(floor_div(total, 12));
  const unsigned m = static_cast<unsigned>(total - static_cast<std::int64_t>(y) * 12 + 1);
  // clamp day to the target month's length
  const unsigned last = static_cast<unsigned>(year_month_day_last{year{y}, month_day_last{month{m}}}.day());
  const unsigned d = c.day > last ? last : c.day;
  return Timestamp::from_civil(y, m, d, c.hour, c.minute, c.second, c.millis);
}

Timestamp add_years(Timestamp t, std::int64_t years) { return add_months(t, years * 12); }

Timestamp SystemClock::now() const {
  using namespace std::chrono;
  return Timestamp{duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count()};
}

}  // namespace tkg
