#pragma once

#include <cstdint>
#include <string>
#include <string_view>

// Naive local-time calendar arithmetic at hour and day resolution. Hour stamps
// count hours since 1970-01-01T00 with every day exactly 24 hours long, which is
// how the hourly event aggregates are keyed.
namespace emsf::cal {

using HourStamp = std::int64_t;
using DayStamp = std::int64_t;

struct CivilDate {
    int year;
    unsigned month;
    unsigned day;
};

DayStamp day_from_civil(int year, unsigned month, unsigned day);
CivilDate civil_from_day(DayStamp day);

inline DayStamp day_of(HourStamp h) { return h >= 0 ? h / 24 : -((-h + 23) / 24); }
inline int hour_of(HourStamp h) { return static_cast<int>(h - day_of(h) * 24); }
inline HourStamp first_hour(DayStamp d) { return d * 24; }

// 1 = Monday ... 7 = Sunday.
int iso_weekday(DayStamp day);
// 1 = Jan-Mar ... 4 = Oct-Dec.
int quarter(DayStamp day);

// Monday of ISO week `week` of ISO year `year`.
DayStamp iso_week_monday(int year, int week);
int iso_weeks_in_year(int year);

// Accepts YYYY-MM-DD followed by 'T' or ' ' and HH, optionally :MM[:SS];
// minutes and seconds are truncated. Throws ParseError without location.
HourStamp parse_hour(std::string_view text);
DayStamp parse_day(std::string_view text);

std::string format_hour(HourStamp h);  // YYYY-MM-DDTHH
std::string format_day(DayStamp d);    // YYYY-MM-DD

}  // namespace emsf::cal
