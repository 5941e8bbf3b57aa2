#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fcattn {

// Calendar date with day precision. Internally backed by a serial day
// number (days since 1970-01-01) so week arithmetic is cheap.
struct Date {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31

    auto operator<=>(const Date&) const = default;

    std::string to_iso() const;  // "YYYY-MM-DD"
};

// Days since 1970-01-01 (can be negative).
std::int64_t days_from_civil(const Date& d);
Date civil_from_days(std::int64_t z);

// 1 = Monday ... 7 = Sunday.
int iso_weekday(const Date& d);

bool is_valid_date(int year, int month, int day);

// Strict "YYYY-MM-DD".
std::optional<Date> parse_iso_date(const std::string& s);

// ISO plus a small set of spelled-out forms seen in hand-entered exports:
//   "15th of March of 2020", "15 March 2020", "March 15, 2020".
std::optional<Date> parse_date_lenient(const std::string& s);

// Monday of the week containing d.
Date week_monday(const Date& d);

// Weekly grid used throughout: ISO weeks of two consecutive years,
// identified by the ISO date of their Monday.
struct WeekGrid {
    std::vector<Date> mondays;   // contiguous, strictly increasing
    std::size_t split = 0;       // index of the first week of the second year

    std::size_t size() const { return mondays.size(); }
    std::size_t first_year_weeks() const { return split; }
    std::size_t second_year_weeks() const { return mondays.size() - split; }

    // Index of the week containing d, if d falls inside the grid.
    std::optional<std::size_t> week_index(const Date& d) const;
    std::vector<std::string> labels() const;
};

// ISO weeks of year1 followed by ISO weeks of year1+1 (a week belongs to
// the year containing its Thursday). For (2019, 2020): 52 + 53 = 105 weeks.
WeekGrid make_week_grid(int year1);

}  // namespace fcattn
