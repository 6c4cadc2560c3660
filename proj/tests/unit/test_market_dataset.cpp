// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "sentirisk/dataset.hpp"
#include "sentirisk/errors.hpp"
#include "synthetic.hpp"

using namespace sentirisk;
using namespace std::chrono;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MarketBar bar(Date d, double close) { return {d, close, close * 1.01, close * 0.99, close, 1000.0}; }

LabeledDoc doc_at(sys_seconds ts, Sentiment label) { return {ts, {2, 3}, label}; }

std::vector<AlignedDay> plain_days(std::size_t n) {
  std::vector<MarketBar> bars;
  const auto dates = testing::consecutive_dates(n);
  for (std::size_t i = 0; i < n; ++i) bars.push_back(bar(dates[i], 100.0 + static_cast<double>(i)));
  return align_days(bars, {}).days;
}

}  // namespace

TEST_CASE("market csv") {
  std::istringstream good("date,open,high,low,close,volume\n2024-01-02,10,11,9.5,10.5,1200\n2024-01-03,10.5,10.6,10,10.2,800\n");
  const auto bars = read_market_csv(good);
  REQUIRE(bars.size() == 2);
  CHECK(bars[0].date == 2024y / January / 2);
  CHECK(bars[1].close == 10.2);

  std::istringstream header("Date,Open,High,Low,Close,Volume\n");
  CHECK_THROWS_AS(read_market_csv(header), DataError);
  std::istringstream negative("date,open,high,low,close,volume\n2024-01-02,10,11,9,10,-5\n");
  CHECK_THROWS_AS(read_market_csv(negative), DataError);
  std::istringstream bracket("date,open,high,low,close,volume\n2024-01-02,10,9,8,10,5\n");
  CHECK_THROWS_AS(read_market_csv(bracket), DataError);
  std::istringstream junk("date,open,high,low,close,volume\n2024-01-02,ten,11,9,10,5\n");
  CHECK_THROWS_AS(read_market_csv(junk), DataError);

  std::ostringstream out;
  write_market_csv(out, bars);
  std::istringstream again(out.str());
  const auto back = read_market_csv(again);
  CHECK(back[1].close == bars[1].close);
  CHECK(back[0].volume == bars[0].volume);
}

TEST_CASE("market features") {
  const MarketBar b{2024y / January / 2, 100.0, 104.0, 98.0, 102.0, 999.0};
  const Matrix f = market_features(b, 101.0, true);
  CHECK_THAT(f(0, 0), WithinRel(std::log(102.0 / 101.0), 1e-15));
  CHECK_THAT(f(1, 0), WithinRel(6.0 / 102.0, 1e-15));
  CHECK_THAT(f(2, 0), WithinRel(0.02, 1e-13));
  CHECK_THAT(f(3, 0), WithinRel(std::log(1000.0), 1e-15));
  CHECK(f(4, 0) == 1.0);
}

TEST_CASE("alignment rolls weekend text forward and votes labels") {
  // 2024-01-05 is a Friday; the next bar after it is Monday 2024-01-08.
  const std::vector<MarketBar> bars = {bar(2024y / January / 5, 10), bar(2024y / January / 8, 11),
                                       bar(2024y / January / 9, 12)};
  const sys_days saturday{2024y / January / 6};
  const sys_days monday{2024y / January / 8};
  const std::vector<LabeledDoc> docs = {
      doc_at(saturday + 12h, Sentiment::positive), doc_at(monday + 1h, Sentiment::positive),
      doc_at(monday + 20h, Sentiment::negative), doc_at(sys_days{2024y / January / 20}, Sentiment::negative)};
  const Alignment a = align_days(bars, docs);
  REQUIRE(a.days.size() == 3);
  CHECK(a.days[0].docs.empty());
  CHECK_FALSE(a.days[0].has_text);
  CHECK(a.days[0].label == Sentiment::neutral);
  CHECK(a.days[0].features(4, 0) == 0.0);
  CHECK(a.days[1].docs.size() == 3);
  CHECK(a.days[1].label == Sentiment::positive);
  CHECK(a.days[1].features(4, 0) == 1.0);
  REQUIRE(a.dropped.size() == 1);
  CHECK(a.dropped[0].index == 3);
  CHECK(a.days[0].features(0, 0) == 0.0);

  const std::vector<LabeledDoc> tie = {doc_at(monday, Sentiment::positive), doc_at(monday, Sentiment::negative)};
  CHECK(align_days(bars, tie).days[1].label == Sentiment::neutral);

  const std::vector<MarketBar> unsorted = {bars[1], bars[0]};
  CHECK_THROWS_AS(align_days(unsorted, {}), DataError);
  const std::vector<MarketBar> dup = {bars[0], bars[0]};
  CHECK_THROWS_AS(align_days(dup, {}), DataError);
}

TEST_CASE("every doc lands on one day or is dropped") {
  std::mt19937_64 rng(3);
  std::vector<MarketBar> bars;
  const auto dates = testing::consecutive_dates(40);
  for (std::size_t i = 0; i < 40; i += 1 + rng() % 3) bars.push_back(bar(dates[i], 50.0));
  std::vector<LabeledDoc> docs;
  for (int i = 0; i < 200; ++i) {
    docs.push_back(doc_at(sys_days{dates[0]} + hours{rng() % (45 * 24)}, sentiment_from_index(rng() % 3)));
  }
  const Alignment a = align_days(bars, docs);
  std::size_t placed = 0;
  for (const auto& d : a.days) placed += d.docs.size();
  CHECK(placed + a.dropped.size() == docs.size());
  for (const auto& d : a.dropped) CHECK(floor<days>(docs[d.index].timestamp) > sys_days{bars.back().date});
}

TEST_CASE("windows") {
  CHECK(make_windows(plain_days(25), 20).size() == 5);
  const auto days21 = plain_days(21);
  const auto one = make_windows(days21, 20);
  REQUIRE(one.size() == 1);
  CHECK(one[0].target_date == days21[20].date);
  CHECK(one[0].prev_close == days21[19].close);
  CHECK(one[0].inputs.size() == 20);
  CHECK_THROWS_AS(make_windows(plain_days(20), 20), DataError);
}

TEST_CASE("split counts") {
  const SplitCounts a = split_counts(10, {0.6, 0.2, 0.2});
  CHECK((a.train == 6 && a.val == 2 && a.test == 2));
  const SplitCounts b = split_counts(10, {0.7, 0.15, 0.15});
  CHECK((b.train == 7 && b.val == 1 && b.test == 2));
  CHECK_THROWS_AS(split_counts(10, {1.0, 0.0, 0.0}), DataError);
  CHECK_THROWS_AS(split_counts(10, {0.5, 0.2, 0.2}), DataError);

  // Oracle: boundaries are floor(n * train) and floor(n * (train + val)).
  for (std::size_t n = 1; n < 300; ++n) {
    const SplitCounts c = split_counts(n, {0.7, 0.15, 0.15});
    const auto first = static_cast<std::size_t>(std::floor(static_cast<double>(n) * 0.7 + 1e-9));
    const auto second = static_cast<std::size_t>(std::floor(static_cast<double>(n) * 0.85 + 1e-9));
    CHECK(c.train == first);
    CHECK(c.val == second - first);
    CHECK(c.train + c.val + c.test == n);
  }

  const std::vector<int> items = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const Splits<int> s = split_chronological(items, {0.6, 0.2, 0.2});
  CHECK(s.train == std::vector<int>{0, 1, 2, 3, 4, 5});
  CHECK(s.val == std::vector<int>{6, 7});
  CHECK(s.test == std::vector<int>{8, 9});
}

TEST_CASE("no split leakage") {
  const auto data = testing::make_sinusoid_data(300, 100, 10, 40, 1, 20, 5);
  const auto& sp = data.splits;
  REQUIRE_FALSE(sp.val.empty());
  REQUIRE_FALSE(sp.test.empty());
  const auto latest_input = [](const std::vector<WindowSample>& v) {
    sys_days m = sys_days{v.front().inputs.back().date};
    for (const auto& s : v) m = std::max(m, sys_days{s.inputs.back().date});
    return m;
  };
  const auto earliest_target = [](const std::vector<WindowSample>& v) {
    sys_days m = sys_days{v.front().target_date};
    for (const auto& s : v) m = std::min(m, sys_days{s.target_date});
    return m;
  };
  const auto latest_target = [](const std::vector<WindowSample>& v) {
    sys_days m = sys_days{v.front().target_date};
    for (const auto& s : v) m = std::max(m, sys_days{s.target_date});
    return m;
  };
  CHECK(latest_input(sp.train) < earliest_target(sp.val));
  CHECK(latest_target(sp.train) < earliest_target(sp.val));
  CHECK(latest_input(sp.val) < earliest_target(sp.test));
  CHECK(latest_target(sp.val) < earliest_target(sp.test));
}

TEST_CASE("normalization uses train statistics only") {
  std::vector<MarketBar> bars;
  const auto dates = testing::consecutive_dates(60);
  std::mt19937_64 rng(12);
  double price = 50.0;
  for (std::size_t i = 0; i < 60; ++i) {
    price *= std::exp(0.02 * (testing::unit_uniform(rng) - 0.5));
    bars.push_back({dates[i], price, price * 1.02, price * 0.97, price, 500.0 + 100.0 * static_cast<double>(i % 7)});
  }
  const Alignment aligned = align_days(bars, {});
  auto splits = split_chronological(make_windows(aligned.days, 10), SplitRatios{});
  const NormStats stats = fit_norm_stats(splits.train);

  // Recompute from the distinct raw days the train windows cover.
  const std::size_t covered = splits.train.size() + 10 - 1;
  for (std::size_t f = 0; f < kNormalizedFeatureCount; ++f) {
    double mean = 0.0;
    for (std::size_t d = 0; d < covered; ++d) mean += aligned.days[d].features(f, 0);
    mean /= static_cast<double>(covered);
    double var = 0.0;
    for (std::size_t d = 0; d < covered; ++d) var += std::pow(aligned.days[d].features(f, 0) - mean, 2);
    const double raw_sd = std::sqrt(var / static_cast<double>(covered));
    const double sd = raw_sd <= 1e-12 ? 1.0 : raw_sd;
    CHECK_THAT(stats.mean[f], WithinAbs(mean, 1e-12));
    CHECK_THAT(stats.stddev[f], WithinRel(sd, 1e-9));
  }

  const double raw_target = splits.val[0].target_return;
  apply_norm_stats(stats, splits.val);
  CHECK_THAT(splits.val[0].target_return, WithinAbs((raw_target - stats.mean[0]) / stats.stddev[0], 1e-15));
  CHECK_THAT(invert_return(splits.val[0].target_return, splits.val[0].prev_close, stats),
             WithinRel(splits.val[0].target_close, 1e-12));
}

TEST_CASE("prepared dataset round trip") {
  const std::vector<MarketBar> bars = [] {
    std::vector<MarketBar> out;
    const auto dates = testing::consecutive_dates(30);
    for (std::size_t i = 0; i < 30; ++i) out.push_back(bar(dates[i], 20.0 + std::sin(static_cast<double>(i))));
    return out;
  }();
  std::vector<RawTextDoc> docs;
  for (int i = 0; i < 30; i += 2) {
    docs.push_back({sys_days{bars[static_cast<std::size_t>(i)].date} + 3h, i % 4 ? "Good strong day" : "bad weak $XYZ", "news", {}});
  }
  docs.push_back({sys_days{bars[5].date}, "labelled text", "desk", Sentiment::negative});
  const Lexicon lex{{"good", "strong"}, {"bad", "weak"}};
  PrepareOptions opt;
  opt.window = 5;
  opt.max_doc_len = 4;
  const PreparedDataset data = prepare_dataset(bars, docs, lex, opt);
  CHECK(data.splits.train.size() + data.splits.val.size() + data.splits.test.size() == 25);
  CHECK(data.splits.train.front().inputs[2].label == Sentiment::positive);

  const auto dir = std::filesystem::temp_directory_path() / "sentirisk_prepared_test";
  std::filesystem::remove_all(dir);
  write_prepared_dataset(data, dir);
  const PreparedDataset back = read_prepared_dataset(dir);
  CHECK(back.vocab.tokens() == data.vocab.tokens());
  CHECK(back.window == 5);
  CHECK(back.max_doc_len == 4);
  CHECK(back.stats.mean == data.stats.mean);
  CHECK(back.stats.stddev == data.stats.stddev);
  REQUIRE(back.splits.test.size() == data.splits.test.size());
  for (std::size_t i = 0; i < data.splits.test.size(); ++i) {
    const auto& a = data.splits.test[i];
    const auto& b = back.splits.test[i];
    CHECK(a.target_return == b.target_return);
    CHECK(a.target_date == b.target_date);
    CHECK(a.inputs.back().features == b.inputs.back().features);
    CHECK(a.inputs.back().docs == b.inputs.back().docs);
  }
  std::filesystem::remove_all(dir);
}
