#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace proact {

// Calendar date at day granularity, stored as days since 1970-01-01.
// All pipeline arithmetic (windows, cadences, exclusion clocks) runs on
// this type; there are no timestamps anywhere in the data model.
class Date {
  public:
    constexpr Date() = default;
    constexpr explicit Date(std::int32_t days_since_epoch) : days_{days_since_epoch} {}

    static Date from_ymd(int year, int month, int day);
    static std::optional<Date> parse(std::string_view iso); // strict YYYY-MM-DD

    constexpr std::int32_t days() const { return days_; }
    void to_ymd(int &year, int &month, int &day) const;
    int year() const;
    int month() const;
    std::string to_string() const; // YYYY-MM-DD

    Date add_days(int n) const { return Date{days_ + n}; }
    Date add_months(int n) const; // day-of-month clamped to target month length
    Date month_floor() const;     // first day of the month

    auto operator<=>(const Date &) const = default;

  private:
    std::int32_t days_ = 0;
};

inline Date operator+(Date d, int n) { return d.add_days(n); }
inline Date operator-(Date d, int n) { return d.add_days(-n); }
inline int operator-(Date a, Date b) { return a.days() - b.days(); }

// Whole-month difference between the month of `a` and the month of `b`
// (days within the month are ignored).
int months_between(Date later, Date earlier);

namespace detail {

// Civil-calendar conversions on the proleptic Gregorian calendar.
constexpr std::int32_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int32_t>(doe) - 719468;
}

constexpr void civil_from_days(std::int32_t z, int &y, int &m, int &d) {
    z += 719468;
    const std::int32_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int yr = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = yr + (m <= 2);
}

constexpr bool is_leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

constexpr int days_in_month(int y, int m) {
    constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y))
        return 29;
    return lengths[m - 1];
}

} // namespace detail

inline Date Date::from_ymd(int year, int month, int day) {
    if (month < 1 || month > 12 || day < 1 || day > detail::days_in_month(year, month))
        throw std::invalid_argument("invalid calendar date");
    return Date{detail::days_from_civil(year, month, day)};
}

inline std::optional<Date> Date::parse(std::string_view iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
        return std::nullopt;
    auto digits = [](std::string_view s, int &out) {
        out = 0;
        for (char c : s) {
            if (c < '0' || c > '9')
                return false;
            out = out * 10 + (c - '0');
        }
        return true;
    };
    int y = 0, m = 0, d = 0;
    if (!digits(iso.substr(0, 4), y) || !digits(iso.substr(5, 2), m) || !digits(iso.substr(8, 2), d))
        return std::nullopt;
    if (m < 1 || m > 12 || d < 1 || d > detail::days_in_month(y, m))
        return std::nullopt;
    return Date{detail::days_from_civil(y, m, d)};
}

inline void Date::to_ymd(int &year, int &month, int &day) const {
    detail::civil_from_days(days_, year, month, day);
}

inline int Date::year() const {
    int y, m, d;
    to_ymd(y, m, d);
    return y;
}

inline int Date::month() const {
    int y, m, d;
    to_ymd(y, m, d);
    return m;
}

inline std::string Date::to_string() const {
    int y, m, d;
    to_ymd(y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

inline Date Date::add_months(int n) const {
    int y, m, d;
    to_ymd(y, m, d);
    int total = (y * 12 + (m - 1)) + n;
    int ny = total / 12;
    int nm = total % 12;
    if (nm < 0) {
        nm += 12;
        ny -= 1;
    }
    nm += 1;
    int nd = std::min(d, detail::days_in_month(ny, nm));
    return Date{detail::days_from_civil(ny, nm, nd)};
}

inline Date Date::month_floor() const {
    int y, m, d;
    to_ymd(y, m, d);
    return Date{detail::days_from_civil(y, m, 1)};
}

inline int months_between(Date later, Date earlier) {
    int y1, m1, d1, y2, m2, d2;
    later.to_ymd(y1, m1, d1);
    earlier.to_ymd(y2, m2, d2);
    return (y1 * 12 + m1) - (y2 * 12 + m2);
}

} // namespace proact
