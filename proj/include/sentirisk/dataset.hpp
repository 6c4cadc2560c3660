// SPDX-License-Identifier: Apache-2.0
//
// Joins market bars and labeled documents into trading days, cuts sliding
// windows, splits them chronologically and normalizes market features with
// statistics fitted on the training split alone.
#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentirisk/market.hpp"
#include "sentirisk/matrix.hpp"
#include "sentirisk/text.hpp"

namespace sentirisk {

struct LabeledDoc {
  std::chrono::sys_seconds timestamp;
  std::vector<TokenId> ids;
  Sentiment label = Sentiment::neutral;
};

/// Per-day market features, in this order.
inline constexpr std::array<std::string_view, 5> kMarketFeatureNames = {
    "log_return", "range", "gap", "log_volume", "has_text"};
inline constexpr std::size_t kMarketFeatureCount = kMarketFeatureNames.size();
/// The first four features are z-scored; has_text stays 0/1.
inline constexpr std::size_t kNormalizedFeatureCount = 4;

struct AlignedDay {
  Date date;
  Matrix features;  ///< kMarketFeatureCount x 1
  std::vector<std::vector<TokenId>> docs;
  Sentiment label = Sentiment::neutral;
  bool has_text = false;
  double close = 0.0;
};

struct DroppedDoc {
  std::size_t index;
  std::string reason;
};

struct Alignment {
  std::vector<AlignedDay> days;
  std::vector<DroppedDoc> dropped;
};

/// Raw (unnormalized) market features of a bar given the previous close.
/// The first bar of a series uses its own close, giving a zero log-return.
Matrix market_features(const MarketBar& bar, double prev_close, bool has_text);

/// Attaches each doc to the first trading date on or after its UTC date.
/// Docs after the last bar are dropped with a reason. Day label is the
/// strict majority class of its docs; ties and empty days are neutral.
Alignment align_days(std::span<const MarketBar> bars, std::span<const LabeledDoc> docs);

struct WindowSample {
  std::vector<AlignedDay> inputs;
  double target_return = 0.0;  ///< next-day log-return; z-scored once normalized
  Sentiment target_class = Sentiment::neutral;
  Date target_date;
  double prev_close = 0.0;
  double target_close = 0.0;
};

std::vector<WindowSample> make_windows(std::span<const AlignedDay> days, std::size_t window = 20);

struct SplitRatios {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;

  void validate() const;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

/// Boundaries are floor(n * train) and floor(n * (train + val)); whatever is
/// left after the second boundary is the test split. For n = 10 and
/// (0.7, 0.15, 0.15) the boundaries are 7 and floor(8.5) = 8, giving 7/1/2.
SplitCounts split_counts(std::size_t n, const SplitRatios& ratios);

template <typename T>
struct Splits {
  std::vector<T> train;
  std::vector<T> val;
  std::vector<T> test;
};

template <typename T>
Splits<T> split_chronological(std::vector<T> items, const SplitRatios& ratios) {
  const SplitCounts counts = split_counts(items.size(), ratios);
  Splits<T> out;
  auto first = std::make_move_iterator(items.begin());
  out.train.assign(first, first + counts.train);
  out.val.assign(first + counts.train, first + counts.train + counts.val);
  out.test.assign(first + counts.train + counts.val, std::make_move_iterator(items.end()));
  return out;
}

using SampleSplits = Splits<WindowSample>;

struct NormStats {
  std::array<double, kNormalizedFeatureCount> mean{};
  std::array<double, kNormalizedFeatureCount> stddev{};
};

/// Population mean/stddev over the distinct input days of the given samples.
/// A zero stddev is replaced by 1.
NormStats fit_norm_stats(std::span<const WindowSample> train);
void apply_norm_stats(const NormStats& stats, std::span<WindowSample> samples);

/// Maps a normalized log-return back to a close price.
double invert_return(double normalized_return, double prev_close, const NormStats& stats);

struct PrepareOptions {
  std::size_t min_freq = 1;
  std::size_t max_vocab = 20000;
  std::size_t max_doc_len = 32;
  std::size_t window = 20;
  SplitRatios ratios;
};

struct PreparedDataset {
  Vocabulary vocab;
  NormStats stats;
  std::size_t window = 20;
  std::size_t max_doc_len = 32;
  SplitRatios ratios;
  SampleSplits splits;
  std::size_t dropped_docs = 0;
};

/// clean -> label (supplied labels win) -> vocab -> encode -> align ->
/// window -> split -> normalize.
PreparedDataset prepare_dataset(std::span<const MarketBar> bars, std::span<const RawTextDoc> docs,
                                const Lexicon& lexicon, const PrepareOptions& options);

/// Writes vocab.txt, samples.jsonl and norm_stats.json into dir.
void write_prepared_dataset(const PreparedDataset& data, const std::filesystem::path& dir);
PreparedDataset read_prepared_dataset(const std::filesystem::path& dir);

}  // namespace sentirisk
