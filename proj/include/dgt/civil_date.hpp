#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace dgt {

enum class Weekday { Monday, Tuesday, Wednesday, Thursday, Friday, Saturday, Sunday };

/// A proleptic Gregorian calendar date. Always valid once constructed.
class CivilDate {
 public:
  /// Throws std::invalid_argument for out-of-range fields (e.g. 2017-02-29).
  CivilDate(int year, int month, int day);

  /// Accepts ISO `YYYY-MM-DD` or the dataset's `MM_DD_YY` (years 2000-2099).
  static CivilDate parse(std::string_view text);
  static std::optional<CivilDate> try_parse(std::string_view text);

  /// Inverse of days_since_epoch().
  static CivilDate from_days(std::int64_t days);

  int year() const { return year_; }
  int month() const { return month_; }
  int day() const { return day_; }

  /// Days since 1970-01-01 (negative before).
  std::int64_t days_since_epoch() const;
  Weekday weekday() const;

  std::string iso() const;

  auto operator<=>(const CivilDate&) const = default;

 private:
  int year_;
  int month_;
  int day_;
};

bool is_leap_year(int year);
int days_in_month(int year, int month);

inline Weekday weekday_of(const CivilDate& date) { return date.weekday(); }

}  // namespace dgt
