#include "aml/common/calendar.hpp"

#include <array>

#include <fmt/format.h>

namespace aml {

namespace {

constexpr std::array<int, 12> kMonthLengths{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

}  // namespace

int day_of_year(std::int64_t day) {
    const std::int64_t zero_based = ((day - 1) % kDaysPerYear + kDaysPerYear) % kDaysPerYear;
    return static_cast<int>(zero_based) + 1;
}

int month_of_day(std::int64_t day) {
    int remaining = day_of_year(day);
    for (int month = 0; month < 12; ++month) {
        if (remaining <= kMonthLengths[month]) return month + 1;
        remaining -= kMonthLengths[month];
    }
    return 12;
}

std::string iso_date(std::int64_t day) {
    const std::int64_t year = 2023 + (day - 1) / kDaysPerYear;
    int remaining = day_of_year(day);
    int month = 0;
    while (remaining > kMonthLengths[month]) {
        remaining -= kMonthLengths[month];
        ++month;
    }
    return fmt::format("{:04d}-{:02d}-{:02d}", year, month + 1, remaining);
}

}  // namespace aml
