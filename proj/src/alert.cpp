// SPDX-License-Identifier: Apache-2.0
#include "sentirisk/alert.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "sentirisk/errors.hpp"

namespace sentirisk {

double risk_score(const std::array<double, 3>& p, double predicted_return) {
  double total = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw DataError("risk_score: probabilities must lie in [0,1]");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DataError("risk_score: probabilities must sum to 1");
  if (!std::isfinite(predicted_return)) throw DataError("risk_score: predicted return is not finite");
  const double p_neg = p[index_of(Sentiment::negative)];
  if (predicted_return >= 0.0) return p_neg;
  return std::min(1.0, p_neg + 0.5 * std::clamp(-predicted_return, 0.0, 1.0));
}

double risk_score(const Matrix& class_probs, double predicted_return) {
  if (class_probs.rows() != 3 || class_probs.cols() != 1) {
    throw DataError("risk_score: expected a 3x1 probability vector, got " + class_probs.shape_string());
  }
  return risk_score(std::array<double, 3>{class_probs(0, 0), class_probs(1, 0), class_probs(2, 0)},
                    predicted_return);
}

std::string_view to_string(AlertKind kind) {
  switch (kind) {
    case AlertKind::bearish_flip:
      return "bearish_flip";
    case AlertKind::bullish_flip:
      return "bullish_flip";
    case AlertKind::risk_threshold:
      return "risk_threshold";
  }
  return "risk_threshold";
}

void AlertRuleConfig::validate() const {
  if (!(risk_threshold > 0.0 && risk_threshold < 1.0)) {
    throw std::invalid_argument("alert rules: risk_threshold must lie in (0,1)");
  }
}

std::vector<Alert> detect_inflections(std::span<const DailyPrediction> predictions,
                                      const AlertRuleConfig& rules) {
  rules.validate();
  std::vector<Alert> alerts;
  for (std::size_t t = 0; t < predictions.size(); ++t) {
    const DailyPrediction& day = predictions[t];
    if (t > 0 && !(predictions[t - 1].date < day.date)) {
      throw DataError("predictions are not in strictly increasing date order at " + format_date(day.date));
    }
    const double risk = risk_score(day.probs, day.predicted_return);
    const Alert base{day.date, AlertKind::risk_threshold, day.probs[index_of(day.predicted_class)],
                     day.predicted_class, day.predicted_return, risk};
    if (t > 0) {
      const Sentiment prev = predictions[t - 1].predicted_class;
      if (prev == Sentiment::positive && day.predicted_class == Sentiment::negative) {
        Alert a = base;
        a.kind = AlertKind::bearish_flip;
        alerts.push_back(a);
      } else if (prev == Sentiment::negative && day.predicted_class == Sentiment::positive) {
        Alert a = base;
        a.kind = AlertKind::bullish_flip;
        alerts.push_back(a);
      }
    }
    if (risk >= rules.risk_threshold) alerts.push_back(base);
  }
  return alerts;
}

std::vector<DailyPrediction> predict_daily(const CnnGruModel& model,
                                           std::span<const WindowSample> samples) {
  if (model.config.num_classes != 3) throw ShapeError("predict_daily needs a 3-class model");
  std::vector<DailyPrediction> out;
  out.reserve(samples.size());
  for (const WindowSample& s : samples) {
    const ForwardResult fwd = model_forward(model, s);
    const Matrix p = softmax(fwd.class_logits);
    DailyPrediction d{s.target_date, Sentiment::negative, {p(0, 0), p(1, 0), p(2, 0)}, fwd.price_pred};
    const auto best = std::max_element(d.probs.begin(), d.probs.end()) - d.probs.begin();
    d.predicted_class = sentiment_from_index(static_cast<std::size_t>(best));
    out.push_back(d);
  }
  return out;
}

void write_alerts_jsonl(std::span<const Alert> alerts, std::ostream& out) {
  for (const Alert& a : alerts) {
    nlohmann::json j = {{"date", format_date(a.date)},
                        {"kind", to_string(a.kind)},
                        {"confidence", a.confidence},
                        {"predicted_class", to_string(a.predicted_class)},
                        {"predicted_return", a.predicted_return},
                        {"risk_score", a.risk_score}};
    out << j.dump() << '\n';
  }
}

void write_daily_predictions_jsonl(std::span<const DailyPrediction> rows, std::ostream& out) {
  for (const DailyPrediction& d : rows) {
    nlohmann::json j = {{"date", format_date(d.date)},
                        {"predicted_class", to_string(d.predicted_class)},
                        {"probs", d.probs},
                        {"predicted_return", d.predicted_return}};
    out << j.dump() << '\n';
  }
}

std::vector<DailyPrediction> read_daily_predictions_jsonl(std::istream& in) {
  std::vector<DailyPrediction> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "predictions line " + std::to_string(line_no) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      DailyPrediction d;
      d.date = parse_date(j.at("date").get<std::string>());
      const auto cls = parse_sentiment(j.at("predicted_class").get<std::string>());
      if (!cls) throw DataError("unknown predicted_class");
      d.predicted_class = *cls;
      const auto& probs = j.at("probs");
      if (!probs.is_array() || probs.size() != 3) throw DataError("probs must hold 3 numbers");
      for (std::size_t k = 0; k < 3; ++k) d.probs[k] = probs[k].get<double>();
      d.predicted_return = j.at("predicted_return").get<double>();
      rows.push_back(d);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + e.what());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  return rows;
}

std::vector<DailyPrediction> read_daily_predictions_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open predictions file " + path.string());
  return read_daily_predictions_jsonl(in);
}

}  // namespace sentirisk
