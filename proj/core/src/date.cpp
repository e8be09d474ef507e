#include "ubsb/date.hpp"

#include <charconv>
#include <cstdio>

#include "ubsb/error.hpp"

namespace ubsb {

using namespace std::chrono;

Date parse_date(std::string_view text) {
  auto fail = [&] { return DataError("invalid date '" + std::string(text) + "' (expected YYYY-MM-DD)"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw fail();
  int y = 0;
  unsigned m = 0, d = 0;
  auto parse = [&](std::string_view part, auto& out) {
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    if (ec != std::errc{} || ptr != part.data() + part.size()) throw fail();
  };
  parse(text.substr(0, 4), y);
  parse(text.substr(5, 2), m);
  parse(text.substr(8, 2), d);
  const Date date{year{y}, month{m}, day{d}};
  if (!date.ok()) throw fail();
  return date;
}

std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

Date subtract_months(const Date& date, int months_back) {
  const year_month shifted = year_month{date.year(), date.month()} - months{months_back};
  const day last = year_month_day_last{shifted.year(), month_day_last{shifted.month()}}.day();
  return Date{shifted.year(), shifted.month(), std::min(date.day(), last)};
}

int months_between(const Date& earlier, const Date& later) {
  int m = (static_cast<int>(later.year()) - static_cast<int>(earlier.year())) * 12 +
          (static_cast<int>(static_cast<unsigned>(later.month())) -
           static_cast<int>(static_cast<unsigned>(earlier.month())));
  if (m > 0 && later.day() < earlier.day()) --m;
  if (m < 0 && later.day() > earlier.day()) ++m;
  return m;
}

}  // namespace ubsb
