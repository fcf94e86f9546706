#pragma once

#include <chrono>
#include <string>

namespace synthvol::dates {

using Date = std::chrono::sys_days;

/// YYYY-MM-DD; throws std::invalid_argument otherwise.
Date parse_iso(const std::string& text);
std::string format_iso(Date d);

/// to - from in calendar days.
int calendar_days(Date from, Date to);

/// Number of Monday-Friday days in (from, to]; negative when to < from.
int weekdays_between(Date from, Date to);

}  // namespace synthvol::dates
