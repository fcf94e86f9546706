#include "synthvol/dates.hpp"

#include <cstdio>
#include <stdexcept>

namespace synthvol::dates {
namespace {

using namespace std::chrono;

// Weekdays in (epoch, d]; 1970-01-01 was a Thursday.
long weekdays_since_epoch(Date d) {
  const long n = d.time_since_epoch().count();
  const long weeks = n >= 0 ? n / 7 : -((-n + 6) / 7);
  const long rem = n - weeks * 7;  // 0..6, days after a Thursday
  // Days after Thursday: Fri(1) Sat(2) Sun(3) Mon(4) Tue(5) Wed(6)
  static constexpr long kPartial[7] = {0, 1, 1, 1, 2, 3, 4};
  return weeks * 5 + kPartial[rem];
}

}  // namespace

Date parse_iso(const std::string& text) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
      std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw std::invalid_argument("expected a YYYY-MM-DD date, got '" + text + "'");
  }
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date '" + text + "'");
  return sys_days{ymd};
}

std::string format_iso(Date d) {
  const year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

int calendar_days(Date from, Date to) { return static_cast<int>((to - from).count()); }

int weekdays_between(Date from, Date to) {
  return static_cast<int>(weekdays_since_epoch(to) - weekdays_since_epoch(from));
}

}  // namespace synthvol::dates
