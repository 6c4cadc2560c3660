// SPDX-License-Identifier: Apache-2.0
#include "sentirisk/market.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "sentirisk/errors.hpp"

namespace sentirisk {
namespace {

double parse_number(std::string_view field, const std::string& where) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw DataError(where + "invalid number '" + std::string(field) + "'");
  }
  return value;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Date parse_date(std::string_view text) {
  using namespace std::chrono;
  auto digits = [&](std::size_t pos, std::size_t n) {
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
      if (text[i] < '0' || text[i] > '9') throw DataError("invalid date '" + std::string(text) + "'");
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw DataError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
  }
  const Date d{year{digits(0, 4)}, month{static_cast<unsigned>(digits(5, 2))},
               day{static_cast<unsigned>(digits(8, 2))}};
  if (!d.ok()) throw DataError("invalid calendar date '" + std::string(text) + "'");
  return d;
}

std::string format_date(Date date) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

void validate_bar(const MarketBar& bar) {
  const std::string where = "bar " + format_date(bar.date) + ": ";
  for (double v : {bar.open, bar.high, bar.low, bar.close, bar.volume}) {
    if (!std::isfinite(v)) throw DataError(where + "non-finite value");
  }
  if (bar.open <= 0.0 || bar.high <= 0.0 || bar.low <= 0.0 || bar.close <= 0.0) {
    throw DataError(where + "prices must be positive");
  }
  if (bar.volume < 0.0) throw DataError(where + "negative volume");
  if (bar.low > bar.high) throw DataError(where + "low above high");
  if (bar.low > std::min(bar.open, bar.close)) throw DataError(where + "low above open/close");
  if (bar.high < std::max(bar.open, bar.close)) throw DataError(where + "high below open/close");
}

std::vector<MarketBar> read_market_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("market csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "date,open,high,low,close,volume") {
    throw DataError("market csv: header must be 'date,open,high,low,close,volume', got '" + line +
                    "'");
  }
  std::vector<MarketBar> bars;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = "market csv line " + std::to_string(line_no) + ": ";
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 6) {
      throw DataError(where + "expected 6 fields, got " + std::to_string(fields.size()));
    }
    MarketBar bar;
    try {
      bar.date = parse_date(fields[0]);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    bar.open = parse_number(fields[1], where);
    bar.high = parse_number(fields[2], where);
    bar.low = parse_number(fields[3], where);
    bar.close = parse_number(fields[4], where);
    bar.volume = parse_number(fields[5], where);
    try {
      validate_bar(bar);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    bars.push_back(bar);
  }
  return bars;
}

std::vector<MarketBar> read_market_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open market file " + path.string());
  return read_market_csv(in);
}

void write_market_csv(std::ostream& out, const std::vector<MarketBar>& bars) {
  out << "date,open,high,low,close,volume\n";
  for (const auto& bar : bars) {
    out << format_date(bar.date) << ',' << format_number(bar.open) << ','
        << format_number(bar.high) << ',' << format_number(bar.low) << ','
        << format_number(bar.close) << ',' << format_number(bar.volume) << '\n';
  }
}

}  // namespace sentirisk
