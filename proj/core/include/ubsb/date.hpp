#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace ubsb {

using Date = std::chrono::year_month_day;

/// Parses YYYY-MM-DD. Throws DataError on malformed or invalid dates.
Date parse_date(std::string_view text);
std::string format_date(const Date& date);

/// `date` shifted back by `months`, clamping the day to the end of the
/// resulting month (2025-03-31 minus one month is 2025-02-28).
Date subtract_months(const Date& date, int months);

/// Whole calendar months elapsed from `earlier` to `later`. Negative when
/// `earlier` is after `later`.
int months_between(const Date& earlier, const Date& later);

}  // namespace ubsb
