#pragma once

#include <atomic>
#include <compare>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace tkg {

/// UTC instant, millisecond precision, epoch based.
struct Timestamp {
  std::int64_t ms = 0;

  auto operator<=>(const Timestamp&) const = default;

  static Timestamp from_civil(int year, unsigned month, unsigned day, unsigned hour = 0,
                              unsigned minute = 0, unsigned second = 0, unsigned millis = 0);
};

struct CivilTime {
  int year;
  unsigned month, day, hour, minute, second, millis;
};

CivilTime to_civil(Timestamp t);

/// Accepts YYYY-MM-DD, YYYY-MM-DDTHH:MM[:SS[.fff...]] with optional Z or
/// +HH:MM / -HH:MM offset. Fractional digits past milliseconds are truncated.
std::optional<Timestamp> parse_iso8601(std::string_view text);

/// Always YYYY-MM-DDTHH:MM:SS.sssZ.
std::string format_iso8601(Timestamp t);

/// YYYY-MM-DD when the instant is midnight UTC, full timestamp otherwise.
std::string format_date_or_datetime(Timestamp t);

Timestamp add_days(Timestamp t, std::int64_t days);
Timestamp add_months(Timestamp t, std::int64_t months);
Timestamp add_years(Timestamp t, std::int64_t years);

inline constexpr std::int64_t kMillisPerDay = 86'400'000;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() const override;
};

/// Test clock: returns `start` and advances by `step_ms` on every read.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Timestamp start = Timestamp{}, std::int64_t step_ms = 1)
      : current_(start.ms), step_(step_ms) {}

  Timestamp now() const override { return Timestamp{current_.fetch_add(step_, std::memory_order_relaxed)}; }
  void set(Timestamp t) { current_.store(t.ms); }

 private:
  mutable std::atomic<std::int64_t> current_;
  std::int64_t step_;
};

}  // namespace tkg
