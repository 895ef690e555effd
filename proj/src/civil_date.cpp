#include "dgt/civil_date.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace dgt {

bool is_leap_year(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

int days_in_month(int year, int month) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month < 1 || month > 12) throw std::invalid_argument("month out of range");
  return month == 2 && is_leap_year(year) ? 29 : kDays[month - 1];
}

CivilDate::CivilDate(int year, int month, int day) : year_(year), month_(month), day_(day) {
  if (month < 1 || month > 12) {
    throw std::invalid_argument("invalid month " + std::to_string(month));
  }
  if (day < 1 || day > days_in_month(year, month)) {
    throw std::invalid_argument("invalid day " + std::to_string(day) + " for " +
                                std::to_string(year) + "-" + std::to_string(month));
  }
}

namespace {

std::optional<int> digits(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::optional<CivilDate> CivilDate::try_parse(std::string_view t) {
  std::optional<int> y, m, d;
  if (t.size() == 10 && t[4] == '-' && t[7] == '-') {
    y = digits(t.substr(0, 4));
    m = digits(t.substr(5, 2));
    d = digits(t.substr(8, 2));
  } else if (t.size() == 8 && t[2] == '_' && t[5] == '_') {
    m = digits(t.substr(0, 2));
    d = digits(t.substr(3, 2));
    y = digits(t.substr(6, 2));
    if (y) *y += 2000;
  }
  if (!y || !m || !d) return std::nullopt;
  if (*m < 1 || *m > 12 || *d < 1 || *d > days_in_month(*y, *m)) return std::nullopt;
  return CivilDate(*y, *m, *d);
}

CivilDate CivilDate::parse(std::string_view text) {
  if (auto d = try_parse(text)) return *d;
  throw std::invalid_argument("unrecognized date '" + std::string(text) +
                              "' (expected YYYY-MM-DD or MM_DD_YY)");
}

// Era-based conversion; see H. Hinnant, "chrono-Compatible Low-Level Date Algorithms".
std::int64_t CivilDate::days_since_epoch() const {
  const std::int64_t y = year_ - (month_ <= 2 ? 1 : 0);
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const std::int64_t yoe = y - era * 400;
  const std::int64_t mp = (month_ + 9) % 12;
  const std::int64_t doy = (153 * mp + 2) / 5 + day_ - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

CivilDate CivilDate::from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  const int d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  const int m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  const int y = static_cast<int>(yoe + era * 400 + (m <= 2 ? 1 : 0));
  return CivilDate(y, m, d);
}

Weekday CivilDate::weekday() const {
  // 1970-01-01 was a Thursday (index 3 counting from Monday).
  const std::int64_t z = days_since_epoch();
  return static_cast<Weekday>(((z % 7) + 7 + 3) % 7);
}

std::string CivilDate::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year_, month_, day_);
  return buf;
}

}  // namespace dgt
