// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sentirisk {

using Date = std::chrono::year_month_day;

/// Strict YYYY-MM-DD.
Date parse_date(std::string_view text);
std::string format_date(Date date);

struct MarketBar {
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;
};

/// Rejects non-positive or non-finite prices, negative volume, and bars
/// whose high/low do not bracket open and close.
void validate_bar(const MarketBar& bar);

/// Header must be exactly `date,open,high,low,close,volume`.
std::vector<MarketBar> read_market_csv(std::istream& in);
std::vector<MarketBar> read_market_csv(const std::filesystem::path& path);
void write_market_csv(std::ostream& out, const std::vector<MarketBar>& bars);

}  // namespace sentirisk
