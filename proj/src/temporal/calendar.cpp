#include "ssmamba/temporal/calendar.hpp"

#include <charconv>
#include <cstdio>

#include "ssmamba/errors.hpp"

namespace ssmamba::temporal {

namespace {

// Proleptic Gregorian conversions, era-based (H. Hinnant's civil algorithms).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
  int year;
  int month;
  int day;
};

Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

int days_in_month(int year, int month) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return month == 2 && is_leap_year(year) ? 29 : kDays[month - 1];
}

constexpr std::array<std::string_view, kCalendarFieldCount> kFieldNames{
    "ordinal", "year", "month", "day", "dow", "doy", "quarter"};

}  // namespace

bool is_leap_year(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

Date Date::from_ordinal(std::int64_t days) {
  if (days < kMinOrdinal || days > kMaxOrdinal) {
    throw InputError("date ordinal " + std::to_string(days) + " outside [1900-01-01, 2200-12-31]");
  }
  return Date(days);
}

Date Date::from_ymd(int year, int month, int day) {
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month)) {
    throw InputError("invalid calendar date " + std::to_string(year) + "-" + std::to_string(month) +
                     "-" + std::to_string(day));
  }
  return from_ordinal(days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)));
}

Date Date::parse(std::string_view iso) {
  const auto fail = [&](const char* why) {
    return InputError("invalid date '" + std::string(iso) + "': " + why);
  };
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') throw fail("expected YYYY-MM-DD");
  auto number = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    const char* first = iso.data() + pos;
    for (std::size_t i = 0; i < len; ++i) {
      if (first[i] < '0' || first[i] > '9') throw fail("non-digit character");
    }
    std::from_chars(first, first + len, v);
    return v;
  };
  const int y = number(0, 4), m = number(5, 2), d = number(8, 2);
  if (m < 1 || m > 12) throw fail("month out of range");
  if (d < 1 || d > days_in_month(y, m)) throw fail("day out of range");
  const std::int64_t ord = days_from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
  if (ord < kMinOrdinal || ord > kMaxOrdinal) throw fail("outside [1900-01-01, 2200-12-31]");
  return Date(ord);
}

std::string Date::to_string() const {
  const Civil c = civil_from_days(days_);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", c.year, c.month, c.day);
  return buf;
}

std::string_view field_name(CalendarField f) { return kFieldNames[static_cast<std::size_t>(f)]; }

CalendarField parse_field(std::string_view name) {
  for (std::size_t i = 0; i < kFieldNames.size(); ++i) {
    if (kFieldNames[i] == name) return static_cast<CalendarField>(i);
  }
  throw ConfigError("unknown calendar feature '" + std::string(name) + "'");
}

double CalendarDescriptor::field(CalendarField f) const {
  switch (f) {
    case CalendarField::ordinal: return static_cast<double>(ordinal);
    case CalendarField::year: return year;
    case CalendarField::month: return month;
    case CalendarField::day: return day;
    case CalendarField::dow: return dow;
    case CalendarField::doy: return doy;
    case CalendarField::quarter: return quarter;
  }
  return 0.0;
}

CalendarDescriptor calendar_descriptor(Date date) {
  const std::int64_t z = date.ordinal();
  const Civil c = civil_from_days(z);
  CalendarDescriptor d;
  d.ordinal = z;
  d.year = c.year;
  d.month = c.month;
  d.day = c.day;
  // 1970-01-01 was a Thursday (Monday-based index 3).
  d.dow = static_cast<int>(((z % 7) + 7 + 3) % 7);
  d.doy = static_cast<int>(z - days_from_civil(c.year, 1, 1)) + 1;
  d.quarter = (c.month - 1) / 3 + 1;
  return d;
}

CalendarDescriptor calendar_descriptor(std::string_view iso) { return calendar_descriptor(Date::parse(iso)); }

}  // namespace ssmamba::temporal
