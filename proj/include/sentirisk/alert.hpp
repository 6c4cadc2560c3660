// SPDX-License-Identifier: Apache-2.0
//
// Risk alerts raised on day-over-day sentiment flips and on high risk scores.
#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sentirisk/model.hpp"

namespace sentirisk {

struct DailyPrediction {
  Date date;
  Sentiment predicted_class = Sentiment::neutral;
  std::array<double, 3> probs{};  ///< (negative, neutral, positive)
  double predicted_return = 0.0;  ///< normalized log-return
};

/// p_neg if predicted_return >= 0, otherwise min(1, p_neg + 0.5 * clamp(-ret, 0, 1)).
/// Probabilities must be finite, in [0,1] and sum to 1 within 1e-9.
double risk_score(const Matrix& class_probs, double predicted_return);
double risk_score(const std::array<double, 3>& class_probs, double predicted_return);

enum class AlertKind { bearish_flip, bullish_flip, risk_threshold };

std::string_view to_string(AlertKind kind);

struct Alert {
  Date date;
  AlertKind kind = AlertKind::risk_threshold;
  double confidence = 0.0;  ///< probability of the predicted class
  Sentiment predicted_class = Sentiment::neutral;
  double predicted_return = 0.0;
  double risk_score = 0.0;
};

struct AlertRuleConfig {
  double risk_threshold = 0.7;

  void validate() const;
};

/// Predictions must be strictly increasing in date. On a given day flip
/// alerts precede the risk_threshold alert.
std::vector<Alert> detect_inflections(std::span<const DailyPrediction> predictions,
                                      const AlertRuleConfig& rules);

/// Class probabilities and return for each sample's target date.
std::vector<DailyPrediction> predict_daily(const CnnGruModel& model,
                                           std::span<const WindowSample> samples);

void write_alerts_jsonl(std::span<const Alert> alerts, std::ostream& out);

/// One object per line: date, predicted_class, probs [neg, neu, pos], predicted_return.
void write_daily_predictions_jsonl(std::span<const DailyPrediction> rows, std::ostream& out);
std::vector<DailyPrediction> read_daily_predictions_jsonl(std::istream& in);
std::vector<DailyPrediction> read_daily_predictions_jsonl(const std::filesystem::path& path);

}  // namespace sentirisk
