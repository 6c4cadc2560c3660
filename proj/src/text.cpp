// SPDX-License-Identifier: Apache-2.0
#include "sentirisk/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <unordered_map>

#include "json.hpp"
#include "sentirisk/errors.hpp"

namespace sentirisk {
namespace {

using json = nlohmann::json;

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_lower_alnum(char c) { return (c >= 'a' && c <= 'z') || is_digit(c); }

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool is_scheme_char(char c) { return is_lower_alnum(c) || c == '+' || c == '-' || c == '.'; }

int read_digits(std::string_view text, std::size_t& pos, std::size_t count) {
  if (pos + count > text.size()) throw DataError("timestamp too short: '" + std::string(text) + "'");
  int value = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = text[pos + i];
    if (!is_digit(c)) throw DataError("malformed timestamp: '" + std::string(text) + "'");
    value = value * 10 + (c - '0');
  }
  pos += count;
  return value;
}

void expect_char(std::string_view text, std::size_t& pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw DataError("malformed timestamp: '" + std::string(text) + "'");
  }
  ++pos;
}

// Removes URL runs from a lowercased token (a maximal non-space run).
std::string strip_urls(std::string_view token) {
  std::size_t cut = token.size();
  // A scheme is a letter followed by letters, digits, '+', '-' or '.'.
  for (std::size_t sep = token.find("://"); sep != std::string_view::npos;
       sep = token.find("://", sep + 1)) {
    std::size_t start = sep;
    while (start > 0 && is_scheme_char(token[start - 1])) --start;
    while (start < sep && !(token[start] >= 'a' && token[start] <= 'z')) ++start;
    if (start < sep) {
      cut = std::min(cut, start);
      break;
    }
  }
  for (std::size_t pos = token.find("www."); pos != std::string_view::npos;
       pos = token.find("www.", pos + 1)) {
    if (pos == 0 || !is_lower_alnum(token[pos - 1])) {
      cut = std::min(cut, pos);
      break;
    }
  }
  return std::string(token.substr(0, cut));
}

}  // namespace

std::string_view to_string(Sentiment s) {
  switch (s) {
    case Sentiment::negative:
      return "negative";
    case Sentiment::neutral:
      return "neutral";
    case Sentiment::positive:
      return "positive";
  }
  return "neutral";
}

std::optional<Sentiment> parse_sentiment(std::string_view name) {
  if (name == "negative") return Sentiment::negative;
  if (name == "neutral") return Sentiment::neutral;
  if (name == "positive") return Sentiment::positive;
  return std::nullopt;
}

Sentiment sentiment_from_index(std::size_t index) {
  if (index >= kSentimentClasses) {
    throw std::out_of_range("sentiment class index " + std::to_string(index) + " out of range");
  }
  return static_cast<Sentiment>(index);
}

std::chrono::sys_seconds parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  std::size_t pos = 0;
  const int y = read_digits(text, pos, 4);
  expect_char(text, pos, '-');
  const int mo = read_digits(text, pos, 2);
  expect_char(text, pos, '-');
  const int d = read_digits(text, pos, 2);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw DataError("invalid calendar date in timestamp '" + std::string(text) + "'");

  int hh = 0, mm = 0, ss = 0;
  int offset_minutes = 0;
  if (pos < text.size()) {
    if (text[pos] != 'T' && text[pos] != ' ') {
      throw DataError("malformed timestamp: '" + std::string(text) + "'");
    }
    ++pos;
    hh = read_digits(text, pos, 2);
    expect_char(text, pos, ':');
    mm = read_digits(text, pos, 2);
    if (pos < text.size() && text[pos] == ':') {
      ++pos;
      ss = read_digits(text, pos, 2);
      if (pos < text.size() && text[pos] == '.') {
        ++pos;
        const std::size_t frac_start = pos;
        while (pos < text.size() && is_digit(text[pos])) ++pos;
        if (pos == frac_start) throw DataError("malformed timestamp: '" + std::string(text) + "'");
      }
    }
    if (pos < text.size()) {
      const char tz = text[pos];
      if (tz == 'Z' || tz == 'z') {
        ++pos;
      } else if (tz == '+' || tz == '-') {
        ++pos;
        const int oh = read_digits(text, pos, 2);
        if (pos < text.size() && text[pos] == ':') ++pos;
        const int om = read_digits(text, pos, 2);
        offset_minutes = (tz == '+' ? 1 : -1) * (oh * 60 + om);
      }
    }
    if (pos != text.size() || hh > 23 || mm > 59 || ss > 60) {
      throw DataError("malformed timestamp: '" + std::string(text) + "'");
    }
  }
  const sys_seconds local = sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
  return local - minutes{offset_minutes};
}

std::vector<RawTextDoc> read_text_jsonl(std::istream& in) {
  std::vector<RawTextDoc> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), is_space)) continue;
    const std::string where = "text jsonl line " + std::to_string(line_no) + ": ";
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + e.what());
    }
    if (!obj.is_object()) throw DataError(where + "expected a JSON object");
    for (const char* key : {"timestamp", "text", "source"}) {
      if (!obj.contains(key) || !obj[key].is_string()) {
        throw DataError(where + "missing string field '" + key + "'");
      }
    }
    RawTextDoc doc;
    try {
      doc.timestamp = parse_timestamp(obj["timestamp"].get<std::string>());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    doc.text = obj["text"].get<std::string>();
    doc.source = obj["source"].get<std::string>();
    if (doc.text.empty()) throw DataError(where + "empty text");
    if (obj.contains("label") && !obj["label"].is_null()) {
      if (!obj["label"].is_string()) throw DataError(where + "label must be a string");
      doc.label = parse_sentiment(obj["label"].get<std::string>());
      if (!doc.label) {
        throw DataError(where + "unknown label '" + obj["label"].get<std::string>() + "'");
      }
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<RawTextDoc> read_text_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open text file " + path.string());
  return read_text_jsonl(in);
}

std::string clean_text(std::string_view raw) {
  std::string lowered(raw.size(), '\0');
  std::transform(raw.begin(), raw.end(), lowered.begin(), ascii_lower);

  std::string out;
  out.reserve(lowered.size());
  std::size_t pos = 0;
  while (pos < lowered.size()) {
    while (pos < lowered.size() && is_space(lowered[pos])) ++pos;
    const std::size_t start = pos;
    while (pos < lowered.size() && !is_space(lowered[pos])) ++pos;
    if (start == pos) break;

    std::string kept;
    for (char c : strip_urls(std::string_view(lowered).substr(start, pos - start))) {
      // '$' is allowed through the filter and then dropped, which turns
      // cashtags into their bare ticker.
      if (is_lower_alnum(c)) kept.push_back(c);
    }
    if (kept.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += kept;
  }
  return out;
}

std::vector<std::string_view> split_tokens(std::string_view cleaned) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < cleaned.size()) {
    while (pos < cleaned.size() && is_space(cleaned[pos])) ++pos;
    const std::size_t start = pos;
    while (pos < cleaned.size() && !is_space(cleaned[pos])) ++pos;
    if (pos > start) tokens.push_back(cleaned.substr(start, pos - start));
  }
  return tokens;
}

Lexicon read_lexicon(const std::filesystem::path& positive, const std::filesystem::path& negative) {
  auto load = [](const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open lexicon file " + path.string());
    std::set<std::string, std::less<>> words;
    std::string line;
    while (std::getline(in, line)) {
      for (auto token : split_tokens(line)) words.emplace(token);
    }
    return words;
  };
  return Lexicon{load(positive), load(negative)};
}

Sentiment label_sentiment(std::string_view cleaned, const Lexicon& lexicon) {
  long score = 0;
  for (auto token : split_tokens(cleaned)) {
    if (lexicon.positive.contains(token)) ++score;
    if (lexicon.negative.contains(token)) --score;
  }
  if (score > 0) return Sentiment::positive;
  if (score < 0) return Sentiment::negative;
  return Sentiment::neutral;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw DataError("vocabulary contains an empty token");
    if (!ids_.emplace(tokens_[i], static_cast<TokenId>(i + 2)).second) {
      throw DataError("vocabulary contains duplicate token '" + tokens_[i] + "'");
    }
  }
}

TokenId Vocabulary::id_of(std::string_view token) const {
  return find(token).value_or(kUnknown);
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  return std::nullopt;
}

std::string_view Vocabulary::token(TokenId id) const {
  if (id == kPad) return "<pad>";
  if (id == kUnknown) return "<unk>";
  if (id - 2 >= tokens_.size()) throw std::out_of_range("token id out of range");
  return tokens_[id - 2];
}

void Vocabulary::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary " + path.string());
  for (const auto& token : tokens_) out << token << '\n';
}

Vocabulary Vocabulary::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary build_vocab(std::span<const std::string> corpus, std::size_t min_freq,
                       std::size_t max_size) {
  if (min_freq < 1) throw std::invalid_argument("build_vocab: min_freq must be >= 1");
  std::unordered_map<std::string_view, std::size_t> counts;
  for (const auto& doc : corpus)
    for (auto token : split_tokens(doc)) ++counts[token];

  std::vector<std::pair<std::string_view, std::size_t>> ranked;
  for (const auto& [token, count] : counts)
    if (count >= min_freq) ranked.emplace_back(token, count);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  const std::size_t capacity = max_size > 2 ? max_size - 2 : 0;
  if (ranked.size() > capacity) ranked.resize(capacity);
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (const auto& entry : ranked) tokens.emplace_back(entry.first);
  return Vocabulary(std::move(tokens));
}

std::vector<TokenId> encode_doc(std::string_view cleaned, const Vocabulary& vocab,
                                std::size_t max_len) {
  if (max_len < 1) throw std::invalid_argument("encode_doc: max_len must be >= 1");
  std::vector<TokenId> ids(max_len, Vocabulary::kPad);
  std::size_t i = 0;
  for (auto token : split_tokens(cleaned)) {
    if (i == max_len) break;
    ids[i++] = vocab.id_of(token);
  }
  return ids;
}

}  // namespace sentirisk
