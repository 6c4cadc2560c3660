// SPDX-License-Identifier: Apache-2.0
#include "sentirisk/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"
#include "sentirisk/errors.hpp"

namespace sentirisk {
namespace {

using json = nlohmann::json;

std::vector<double> to_vector(const Matrix& m) {
  return std::vector<double>(m.values().begin(), m.values().end());
}

json day_to_json(const AlignedDay& day) {
  return json{{"date", format_date(day.date)},     {"features", to_vector(day.features)},
              {"label", to_string(day.label)},     {"has_text", day.has_text},
              {"close", day.close},                {"docs", day.docs}};
}

Sentiment sentiment_field(const json& j, const char* key) {
  const auto name = j.at(key).get<std::string>();
  const auto s = parse_sentiment(name);
  if (!s) throw DataError(std::string("unknown sentiment '") + name + "'");
  return *s;
}

AlignedDay day_from_json(const json& j) {
  AlignedDay day;
  day.date = parse_date(j.at("date").get<std::string>());
  auto features = j.at("features").get<std::vector<double>>();
  if (features.size() != kMarketFeatureCount) {
    throw DataError("day " + format_date(day.date) + ": expected " +
                    std::to_string(kMarketFeatureCount) + " features");
  }
  day.features = Matrix::column(std::move(features));
  day.label = sentiment_field(j, "label");
  day.has_text = j.at("has_text").get<bool>();
  day.close = j.at("close").get<double>();
  day.docs = j.at("docs").get<std::vector<std::vector<TokenId>>>();
  return day;
}

json sample_to_json(const WindowSample& s, std::string_view split) {
  json inputs = json::array();
  for (const auto& day : s.inputs) inputs.push_back(day_to_json(day));
  return json{{"split", split},
              {"target_date", format_date(s.target_date)},
              {"target_return", s.target_return},
              {"target_class", to_string(s.target_class)},
              {"prev_close", s.prev_close},
              {"target_close", s.target_close},
              {"inputs", std::move(inputs)}};
}

WindowSample sample_from_json(const json& j) {
  WindowSample s;
  for (const auto& day : j.at("inputs")) s.inputs.push_back(day_from_json(day));
  s.target_date = parse_date(j.at("target_date").get<std::string>());
  s.target_return = j.at("target_return").get<double>();
  s.target_class = sentiment_field(j, "target_class");
  s.prev_close = j.at("prev_close").get<double>();
  s.target_close = j.at("target_close").get<double>();
  return s;
}

}  // namespace

Matrix market_features(const MarketBar& bar, double prev_close, bool has_text) {
  return Matrix::column({std::log(bar.close / prev_close), (bar.high - bar.low) / bar.close,
                         (bar.close - bar.open) / bar.open, std::log1p(bar.volume),
                         has_text ? 1.0 : 0.0});
}

Alignment align_days(std::span<const MarketBar> bars, std::span<const LabeledDoc> docs) {
  using namespace std::chrono;
  for (std::size_t i = 1; i < bars.size(); ++i) {
    if (!(sys_days{bars[i - 1].date} < sys_days{bars[i].date})) {
      throw DataError("market bars must have strictly increasing dates; " +
                      format_date(bars[i].date) + " follows " + format_date(bars[i - 1].date));
    }
  }

  Alignment out;
  std::vector<std::vector<std::size_t>> attached(bars.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const sys_days doc_day = floor<days>(docs[d].timestamp);
    const auto it = std::lower_bound(
        bars.begin(), bars.end(), doc_day,
        [](const MarketBar& bar, sys_days day) { return sys_days{bar.date} < day; });
    if (it == bars.end()) {
      out.dropped.push_back({d, "timestamp " + format_date(year_month_day{doc_day}) +
                                    " is after the last trading day"});
      continue;
    }
    attached[static_cast<std::size_t>(it - bars.begin())].push_back(d);
  }

  out.days.reserve(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    AlignedDay day;
    day.date = bars[i].date;
    day.close = bars[i].close;
    day.has_text = !attached[i].empty();
    std::array<std::size_t, kSentimentClasses> votes{};
    for (std::size_t d : attached[i]) {
      day.docs.push_back(docs[d].ids);
      ++votes[index_of(docs[d].label)];
    }
    const auto top = std::max_element(votes.begin(), votes.end());
    if (day.has_text && std::count(votes.begin(), votes.end(), *top) == 1) {
      day.label = sentiment_from_index(static_cast<std::size_t>(top - votes.begin()));
    }
    const double prev_close = i == 0 ? bars[i].close : bars[i - 1].close;
    day.features = market_features(bars[i], prev_close, day.has_text);
    out.days.push_back(std::move(day));
  }
  return out;
}

std::vector<WindowSample> make_windows(std::span<const AlignedDay> days, std::size_t window) {
  if (window == 0) throw DataError("make_windows: window must be positive");
  if (days.size() <= window) {
    throw DataError("make_windows: " + std::to_string(days.size()) +
                    " days cannot fill a window of " + std::to_string(window) +
                    " plus a target day");
  }
  std::vector<WindowSample> samples;
  samples.reserve(days.size() - window);
  for (std::size_t t = 0; t + window < days.size(); ++t) {
    const AlignedDay& target = days[t + window];
    WindowSample s;
    s.inputs.assign(days.begin() + static_cast<std::ptrdiff_t>(t),
                    days.begin() + static_cast<std::ptrdiff_t>(t + window));
    s.target_return = target.features(0, 0);
    s.target_class = target.label;
    s.target_date = target.date;
    s.prev_close = days[t + window - 1].close;
    s.target_close = target.close;
    samples.push_back(std::move(s));
  }
  return samples;
}

void SplitRatios::validate() const {
  if (!(train > 0.0 && val > 0.0 && test > 0.0)) {
    throw DataError("split ratios must all be positive");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) throw DataError("split ratios must sum to 1");
}

SplitCounts split_counts(std::size_t n, const SplitRatios& ratios) {
  ratios.validate();
  // The small slack keeps sums such as 0.1 + 0.7 from landing just below an
  // integer boundary.
  const auto boundary = [n](double fraction) {
    const auto b = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
    return std::min(b, n);
  };
  const std::size_t train_end = boundary(ratios.train);
  const std::size_t val_end = std::max(train_end, boundary(ratios.train + ratios.val));
  return {train_end, val_end - train_end, n - val_end};
}

NormStats fit_norm_stats(std::span<const WindowSample> train) {
  if (train.empty()) throw DataError("cannot fit normalization statistics on an empty split");
  using namespace std::chrono;
  std::set<sys_days> seen;
  std::vector<const Matrix*> distinct;
  for (const auto& sample : train) {
    for (const auto& day : sample.inputs) {
      if (seen.insert(sys_days{day.date}).second) distinct.push_back(&day.features);
    }
  }
  const double n = static_cast<double>(distinct.size());
  NormStats stats;
  for (std::size_t f = 0; f < kNormalizedFeatureCount; ++f) {
    double mean = 0.0;
    for (const Matrix* m : distinct) mean += (*m)(f, 0);
    mean /= n;
    double var = 0.0;
    for (const Matrix* m : distinct) var += ((*m)(f, 0) - mean) * ((*m)(f, 0) - mean);
    const double sd = std::sqrt(var / n);
    stats.mean[f] = mean;
    stats.stddev[f] = sd > 1e-12 ? sd : 1.0;
  }
  return stats;
}

void apply_norm_stats(const NormStats& stats, std::span<WindowSample> samples) {
  for (auto& sample : samples) {
    for (auto& day : sample.inputs) {
      for (std::size_t f = 0; f < kNormalizedFeatureCount; ++f) {
        day.features(f, 0) = (day.features(f, 0) - stats.mean[f]) / stats.stddev[f];
      }
    }
    sample.target_return = (sample.target_return - stats.mean[0]) / stats.stddev[0];
  }
}

double invert_return(double normalized_return, double prev_close, const NormStats& stats) {
  return prev_close * std::exp(normalized_return * stats.stddev[0] + stats.mean[0]);
}

PreparedDataset prepare_dataset(std::span<const MarketBar> bars, std::span<const RawTextDoc> docs,
                                const Lexicon& lexicon, const PrepareOptions& options) {
  for (const auto& bar : bars) validate_bar(bar);
  std::vector<std::string> cleaned;
  cleaned.reserve(docs.size());
  for (const auto& doc : docs) cleaned.push_back(clean_text(doc.text));

  PreparedDataset data;
  data.vocab = build_vocab(cleaned, options.min_freq, options.max_vocab);
  data.window = options.window;
  data.max_doc_len = options.max_doc_len;
  data.ratios = options.ratios;

  std::vector<LabeledDoc> labeled;
  labeled.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    labeled.push_back({docs[i].timestamp, encode_doc(cleaned[i], data.vocab, options.max_doc_len),
                       docs[i].label.value_or(label_sentiment(cleaned[i], lexicon))});
  }

  Alignment aligned = align_days(bars, labeled);
  data.dropped_docs = aligned.dropped.size();
  data.splits = split_chronological(make_windows(aligned.days, options.window), options.ratios);
  data.stats = fit_norm_stats(data.splits.train);
  apply_norm_stats(data.stats, data.splits.train);
  apply_norm_stats(data.stats, data.splits.val);
  apply_norm_stats(data.stats, data.splits.test);
  return data;
}

void write_prepared_dataset(const PreparedDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  data.vocab.write(dir / "vocab.txt");

  std::ofstream samples(dir / "samples.jsonl");
  if (!samples) throw DataError("cannot write " + (dir / "samples.jsonl").string());
  const std::pair<std::string_view, const std::vector<WindowSample>*> parts[] = {
      {"train", &data.splits.train}, {"val", &data.splits.val}, {"test", &data.splits.test}};
  for (const auto& [name, split] : parts)
    for (const auto& s : *split) samples << sample_to_json(s, name).dump() << '\n';

  json stats = {
      {"features", std::vector<std::string>(kMarketFeatureNames.begin(),
                                            kMarketFeatureNames.begin() + kNormalizedFeatureCount)},
      {"mean", data.stats.mean},
      {"std", data.stats.stddev},
      {"window", data.window},
      {"max_doc_len", data.max_doc_len},
      {"ratios", {data.ratios.train, data.ratios.val, data.ratios.test}},
      {"counts",
       {{"train", data.splits.train.size()},
        {"val", data.splits.val.size()},
        {"test", data.splits.test.size()}}},
      {"dropped_docs", data.dropped_docs}};
  std::ofstream out(dir / "norm_stats.json");
  if (!out) throw DataError("cannot write " + (dir / "norm_stats.json").string());
  out << stats.dump(2) << '\n';
}

PreparedDataset read_prepared_dataset(const std::filesystem::path& dir) {
  PreparedDataset data;
  data.vocab = Vocabulary::read(dir / "vocab.txt");

  std::ifstream stats_in(dir / "norm_stats.json");
  if (!stats_in) throw DataError("missing normalization statistics in " + dir.string());
  try {
    const json stats = json::parse(stats_in);
    const auto mean = stats.at("mean").get<std::vector<double>>();
    const auto sd = stats.at("std").get<std::vector<double>>();
    if (mean.size() != kNormalizedFeatureCount || sd.size() != kNormalizedFeatureCount) {
      throw DataError("norm_stats.json: expected " + std::to_string(kNormalizedFeatureCount) +
                      " means and stds");
    }
    std::copy(mean.begin(), mean.end(), data.stats.mean.begin());
    std::copy(sd.begin(), sd.end(), data.stats.stddev.begin());
    data.window = stats.at("window").get<std::size_t>();
    data.max_doc_len = stats.at("max_doc_len").get<std::size_t>();
    const auto ratios = stats.at("ratios").get<std::vector<double>>();
    if (ratios.size() != 3) throw DataError("norm_stats.json: ratios must have 3 entries");
    data.ratios = {ratios[0], ratios[1], ratios[2]};
    data.dropped_docs = stats.value("dropped_docs", std::size_t{0});
  } catch (const json::exception& e) {
    throw DataError(std::string("norm_stats.json: ") + e.what());
  }

  std::ifstream samples(dir / "samples.jsonl");
  if (!samples) throw DataError("missing samples.jsonl in " + dir.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(samples, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const auto split = j.at("split").get<std::string>();
      WindowSample s = sample_from_json(j);
      if (s.inputs.size() != data.window) throw DataError("window length mismatch");
      if (split == "train") {
        data.splits.train.push_back(std::move(s));
      } else if (split == "val") {
        data.splits.val.push_back(std::move(s));
      } else if (split == "test") {
        data.splits.test.push_back(std::move(s));
      } else {
        throw DataError("unknown split '" + split + "'");
      }
    } catch (const json::exception& e) {
      throw DataError("samples.jsonl line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("samples.jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return data;
}

}  // namespace sentirisk
