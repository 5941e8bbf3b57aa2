#include "fcattn/dates.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <sstream>

namespace fcattn {

std::string Date::to_iso() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(const Date& d) {
    std::int64_t y = d.year;
    unsigned m = static_cast<unsigned>(d.month);
    unsigned dd = static_cast<unsigned>(d.day);
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + dd - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

Date civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned dd = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(dd)};
}

int iso_weekday(const Date& d) {
    std::int64_t z = days_from_civil(d);
    // 1970-01-01 was a Thursday (ISO weekday 4).
    int w = static_cast<int>(((z % 7) + 7 + 3) % 7) + 1;
    return w;
}

bool is_valid_date(int year, int month, int day) {
    if (month < 1 || month > 12 || day < 1) return false;
    static constexpr std::array<int, 12> mdays = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int dim = mdays[month - 1];
    if (month == 2) {
        bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        if (leap) dim = 29;
    }
    return day <= dim;
}

std::optional<Date> parse_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    int y = std::stoi(s.substr(0, 4));
    int m = std::stoi(s.substr(5, 2));
    int d = std::stoi(s.substr(8, 2));
    if (!is_valid_date(y, m, d)) return std::nullopt;
    return Date{y, m, d};
}

namespace {

int month_from_name(const std::string& name) {
    static constexpr std::array<const char*, 12> names = {
        "january", "february", "march",     "april",   "may",      "june",
        "july",    "august",   "september", "october", "november", "december"};
    for (int i = 0; i < 12; ++i)
        if (name == names[static_cast<std::size_t>(i)]) return i + 1;
    return 0;
}

std::string strip_ordinal(std::string w) {
    // "15th" -> "15"
    if (w.size() > 2) {
        std::string suf = w.substr(w.size() - 2);
        if (suf == "st" || suf == "nd" || suf == "rd" || suf == "th") {
            std::string head = w.substr(0, w.size() - 2);
            if (!head.empty() && std::all_of(head.begin(), head.end(), [](unsigned char c) {
                    return std::isdigit(c);
                }))
                return head;
        }
    }
    return w;
}

}  // namespace

std::optional<Date> parse_date_lenient(const std::string& s) {
    if (auto iso = parse_iso_date(s)) return iso;

    // Tokenize on spaces/commas, lowercase, drop the filler word "of".
    std::vector<std::string> words;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == ',' || c == '\t') {
            if (!cur.empty()) words.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (!cur.empty()) words.push_back(cur);
    std::erase_if(words, [](const std::string& w) { return w == "of" || w == "the"; });
    if (words.size() != 3) return std::nullopt;

    auto as_int = [](const std::string& w) -> std::optional<int> {
        if (w.empty() || w.size() > 4) return std::nullopt;
        for (unsigned char c : w)
            if (!std::isdigit(c)) return std::nullopt;
        return std::stoi(w);
    };

    int day = 0, month = 0, year = 0;
    // "15th March 2020" / "15 march 2020"
    if (auto d = as_int(strip_ordinal(words[0]))) {
        month = month_from_name(words[1]);
        if (auto y = as_int(words[2])) year = *y;
        day = *d;
    } else {
        // "March 15 2020"
        month = month_from_name(words[0]);
        if (auto d2 = as_int(strip_ordinal(words[1]))) day = *d2;
        if (auto y = as_int(words[2])) year = *y;
    }
    if (month == 0 || day == 0 || year < 1000) return std::nullopt;
    if (!is_valid_date(year, month, day)) return std::nullopt;
    return Date{year, month, day};
}

Date week_monday(const Date& d) {
    std::int64_t z = days_from_civil(d);
    return civil_from_days(z - (iso_weekday(d) - 1));
}

std::optional<std::size_t> WeekGrid::week_index(const Date& d) const {
    if (mondays.empty()) return std::nullopt;
    Date m = week_monday(d);
    std::int64_t off = days_from_civil(m) - days_from_civil(mondays.front());
    if (off < 0 || off % 7 != 0) return std::nullopt;
    std::size_t idx = static_cast<std::size_t>(off / 7);
    if (idx >= mondays.size()) return std::nullopt;
    return idx;
}

std::vector<std::string> WeekGrid::labels() const {
    std::vector<std::string> out;
    out.reserve(mondays.size());
    for (const Date& m : mondays) out.push_back(m.to_iso());
    return out;
}

WeekGrid make_week_grid(int year1) {
    // First ISO week of a year is the week containing Jan 4.
    auto first_monday = [](int y) { return week_monday(Date{y, 1, 4}); };
    Date start = first_monday(year1);
    Date mid = first_monday(year1 + 1);
    Date end = first_monday(year1 + 2);

    WeekGrid g;
    for (std::int64_t z = days_from_civil(start); z < days_from_civil(end); z += 7)
        g.mondays.push_back(civil_from_days(z));
    g.split = static_cast<std::size_t>((days_from_civil(mid) - days_from_civil(start)) / 7);
    return g;
}

}  // namespace fcattn
