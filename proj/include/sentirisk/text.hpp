// SPDX-License-Identifier: Apache-2.0
//
// Text side of the data pipeline: JSONL ingestion, cleaning, lexicon
// labeling, vocabulary construction and fixed-length encoding.
#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentirisk/layers.hpp"

namespace sentirisk {

/// Class indices follow this order everywhere: negative, neutral, positive.
enum class Sentiment : int { negative = 0, neutral = 1, positive = 2 };

inline constexpr std::size_t kSentimentClasses = 3;

std::string_view to_string(Sentiment s);
std::optional<Sentiment> parse_sentiment(std::string_view name);
Sentiment sentiment_from_index(std::size_t index);
inline std::size_t index_of(Sentiment s) { return static_cast<std::size_t>(s); }

struct RawTextDoc {
  std::chrono::sys_seconds timestamp;
  std::string text;
  std::string source;
  std::optional<Sentiment> label;
};

/// ISO-8601 date or date-time. A missing offset means UTC.
std::chrono::sys_seconds parse_timestamp(std::string_view text);

/// One JSON object per line: timestamp, text, source and an optional label.
std::vector<RawTextDoc> read_text_jsonl(std::istream& in);
std::vector<RawTextDoc> read_text_jsonl(const std::filesystem::path& path);

/// Lowercases, strips URLs and every character outside [a-z0-9 $ whitespace],
/// drops the '$' of cashtags, collapses whitespace and trims.
std::string clean_text(std::string_view raw);

std::vector<std::string_view> split_tokens(std::string_view cleaned);

struct Lexicon {
  std::set<std::string, std::less<>> positive;
  std::set<std::string, std::less<>> negative;
};

/// Two files, one token per line. Blank lines are skipped.
Lexicon read_lexicon(const std::filesystem::path& positive, const std::filesystem::path& negative);

/// Positive when positive hits outnumber negative hits, negative when the
/// reverse holds, neutral otherwise.
Sentiment label_sentiment(std::string_view cleaned, const Lexicon& lexicon);

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnknown = 1;

  Vocabulary() = default;
  /// tokens[i] receives id i + 2.
  explicit Vocabulary(std::vector<std::string> tokens);

  TokenId id_of(std::string_view token) const;
  std::optional<TokenId> find(std::string_view token) const;
  std::string_view token(TokenId id) const;
  std::size_t size() const { return tokens_.size() + 2; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  void write(const std::filesystem::path& path) const;
  static Vocabulary read(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, TokenId, std::less<>> ids_;
};

/// Keeps tokens seen at least min_freq times, ranked by frequency then
/// lexicographically, capped so that size() <= max_size.
Vocabulary build_vocab(std::span<const std::string> corpus, std::size_t min_freq,
                       std::size_t max_size);

/// Whitespace split, unknown tokens map to 1, right-padded with 0 or truncated.
std::vector<TokenId> encode_doc(std::string_view cleaned, const Vocabulary& vocab,
                                std::size_t max_len);

}  // namespace sentirisk
