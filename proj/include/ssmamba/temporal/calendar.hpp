#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace ssmamba::temporal {

// A Gregorian day, stored as days since 1970-01-01.
class Date {
 public:
  static constexpr std::int64_t kMinOrdinal = -25567;  // 1900-01-01
  static constexpr std::int64_t kMaxOrdinal = 84370;   // 2200-12-31

  constexpr Date() = default;
  static Date from_ordinal(std::int64_t days);
  static Date from_ymd(int year, int month, int day);
  // Strict YYYY-MM-DD. Throws InputError naming the string on failure.
  static Date parse(std::string_view iso);

  std::int64_t ordinal() const { return days_; }
  std::string to_string() const;
  Date next() const { return from_ordinal(days_ + 1); }

  auto operator<=>(const Date&) const = default;

 private:
  explicit constexpr Date(std::int64_t days) : days_(days) {}
  std::int64_t days_ = 0;
};

enum class CalendarField : int { ordinal = 0, year, month, day, dow, doy, quarter };
inline constexpr std::size_t kCalendarFieldCount = 7;
inline constexpr std::array<CalendarField, kCalendarFieldCount> kAllCalendarFields{
    CalendarField::ordinal, CalendarField::year, CalendarField::month, CalendarField::day,
    CalendarField::dow,     CalendarField::doy,  CalendarField::quarter};

std::string_view field_name(CalendarField f);
CalendarField parse_field(std::string_view name);

struct CalendarDescriptor {
  std::int64_t ordinal = 0;
  int year = 1970;
  int month = 1;
  int day = 1;
  int dow = 0;  // Monday = 0
  int doy = 1;
  int quarter = 1;

  double field(CalendarField f) const;
  bool operator==(const CalendarDescriptor&) const = default;
};

CalendarDescriptor calendar_descriptor(Date date);
CalendarDescriptor calendar_descriptor(std::string_view iso);

bool is_leap_year(int year);

}  // namespace ssmamba::temporal
