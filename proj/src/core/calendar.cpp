#include "core/calendar.hpp"

#include <chrono>
#include <cstdio>

#include "core/error.hpp"

namespace emsf::cal {

namespace chr = std::chrono;

DayStamp day_from_civil(int year, unsigned month, unsigned day) {
    const chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
    if (!ymd.ok()) {
        throw ParseError("invalid calendar date " + std::to_string(year) + "-" +
                         std::to_string(month) + "-" + std::to_string(day));
    }
    return chr::sys_days{ymd}.time_since_epoch().count();
}

CivilDate civil_from_day(DayStamp day) {
    const chr::year_month_day ymd{chr::sys_days{chr::days{day}}};
    return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
            static_cast<unsigned>(ymd.day())};
}

int iso_weekday(DayStamp day) {
    return static_cast<int>(chr::weekday{chr::sys_days{chr::days{day}}}.iso_encoding());
}

int quarter(DayStamp day) {
    return static_cast<int>((civil_from_day(day).month - 1) / 3 + 1);
}

DayStamp iso_week_monday(int year, int week) {
    // January 4th always lies in ISO week 1.
    const DayStamp jan4 = day_from_civil(year, 1, 4);
    const DayStamp week1_monday = jan4 - (iso_weekday(jan4) - 1);
    return week1_monday + 7 * static_cast<DayStamp>(week - 1);
}

int iso_weeks_in_year(int year) {
    return static_cast<int>((iso_week_monday(year + 1, 1) - iso_week_monday(year, 1)) / 7);
}

namespace {

bool read_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
    if (pos + n > s.size()) return false;
    int v = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

}  // namespace

DayStamp parse_day(std::string_view text) {
    const auto s = trim(text);
    int y = 0, m = 0, d = 0;
    if (s.size() < 10 || !read_digits(s, 0, 4, y) || s[4] != '-' || !read_digits(s, 5, 2, m) ||
        s[7] != '-' || !read_digits(s, 8, 2, d)) {
        throw ParseError("malformed date '" + std::string(s) + "'");
    }
    return day_from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

HourStamp parse_hour(std::string_view text) {
    const auto s = trim(text);
    const DayStamp day = parse_day(s.substr(0, 10));
    int hh = 0;
    if (s.size() < 13 || (s[10] != 'T' && s[10] != ' ') || !read_digits(s, 11, 2, hh) || hh > 23) {
        throw ParseError("malformed timestamp '" + std::string(s) + "'");
    }
    if (s.size() > 13) {
        int mm = 0;
        if (s[13] != ':' || !read_digits(s, 14, 2, mm) || mm > 59) {
            throw ParseError("malformed timestamp '" + std::string(s) + "'");
        }
        if (s.size() > 16) {
            int ss = 0;
            if (s[16] != ':' || !read_digits(s, 17, 2, ss) || ss > 60 || s.size() > 19) {
                throw ParseError("malformed timestamp '" + std::string(s) + "'");
            }
        }
    }
    return first_hour(day) + hh;
}

std::string format_day(DayStamp d) {
    const auto c = civil_from_day(d);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", c.year, c.month, c.day);
    return buf;
}

std::string format_hour(HourStamp h) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "T%02d", hour_of(h));
    return format_day(day_of(h)) + buf;
}

}  // namespace emsf::cal
