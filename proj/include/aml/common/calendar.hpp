#pragma once

#include <cstdint>
#include <string>

namespace aml {

// Simulated calendar: a fixed non-leap year (2023). Day 1 is January 1st;
// day indices past 365 wrap into the following year's calendar.

inline constexpr std::int64_t kTicksPerDay = 86'400;
inline constexpr int kDaysPerYear = 365;

/// Day of year in [1, 365] for any positive day index.
int day_of_year(std::int64_t day);

/// Month in [1, 12] for any positive day index.
int month_of_day(std::int64_t day);

/// ISO date (YYYY-MM-DD) of a day index, starting 2023-01-01.
std::string iso_date(std::int64_t day);

}  // namespace aml
