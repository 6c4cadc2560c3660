// SPDX-License-Identifier: Apache-2.0
#include "sentirisk/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "sentirisk/errors.hpp"

namespace sentirisk {

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
  if (classes == 0) throw std::invalid_argument("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::size_t count) {
  if (truth >= classes_ || predicted >= classes_) {
    throw std::out_of_range("confusion matrix: class index out of range");
  }
  counts_[truth * classes_ + predicted] += count;
}

std::size_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
  if (truth >= classes_ || predicted >= classes_) {
    throw std::out_of_range("confusion matrix: class index out of range");
  }
  return counts_[truth * classes_ + predicted];
}

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (std::size_t c : counts_) n += c;
  return n;
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < classes_; ++p) n += at(truth, p);
  return n;
}

std::size_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < classes_; ++t) n += at(t, predicted);
  return n;
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> labels,
                                 std::span<const std::size_t> predictions, std::size_t classes) {
  if (labels.size() != predictions.size()) {
    throw std::invalid_argument("confusion matrix: " + std::to_string(labels.size()) +
                                " labels vs " + std::to_string(predictions.size()) + " predictions");
  }
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) cm.add(labels[i], predictions[i]);
  return cm;
}

namespace {
double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

double class_precision(const ConfusionMatrix& cm, std::size_t k) {
  return ratio(cm.at(k, k), cm.col_sum(k));
}

double class_recall(const ConfusionMatrix& cm, std::size_t k) {
  return ratio(cm.at(k, k), cm.row_sum(k));
}

double class_f1(const ConfusionMatrix& cm, std::size_t k) {
  // 2TP / (2TP + FP + FN), identical to the harmonic mean when both exist.
  const std::size_t tp = cm.at(k, k);
  const std::size_t fp = cm.col_sum(k) - tp;
  const std::size_t fn = cm.row_sum(k) - tp;
  return ratio(2 * tp, 2 * tp + fp + fn);
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.confusion = cm;
  r.samples = cm.total();
  std::size_t correct = 0;
  double p = 0.0, rec = 0.0, f1 = 0.0;
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    correct += cm.at(k, k);
    p += class_precision(cm, k);
    rec += class_recall(cm, k);
    f1 += class_f1(cm, k);
  }
  const double classes = static_cast<double>(cm.classes());
  r.accuracy = ratio(correct, r.samples);
  r.macro_precision = p / classes;
  r.macro_recall = rec / classes;
  r.macro_f1 = f1 / classes;
  return r;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::json matrix = nlohmann::json::array();
  for (std::size_t t = 0; t < report.confusion.classes(); ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < report.confusion.classes(); ++p) row.push_back(report.confusion.at(t, p));
    matrix.push_back(std::move(row));
  }
  nlohmann::json j = {{"samples", report.samples},
                      {"accuracy", report.accuracy},
                      {"macro_precision", report.macro_precision},
                      {"macro_recall", report.macro_recall},
                      {"macro_f1", report.macro_f1},
                      {"regression_mse", report.regression_mse},
                      {"confusion_matrix", std::move(matrix)}};
  return j.dump(2);
}

MetricsReport report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& rows = j.at("confusion_matrix");
    ConfusionMatrix cm(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (rows[t].size() != rows.size()) throw DataError("confusion matrix must be square");
      for (std::size_t p = 0; p < rows.size(); ++p) {
        cm.add(t, p, rows[t][p].get<std::size_t>());
      }
    }
    MetricsReport r = metrics_from_confusion(cm);
    r.regression_mse = j.at("regression_mse").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed metrics report: ") + e.what());
  }
}

std::string render_table(std::span<const TableRow> rows) {
  std::ostringstream out;
  out << "Model\tAc\tRec\tF1\n";
  char buf[128];
  for (const TableRow& row : rows) {
    std::snprintf(buf, sizeof buf, "\t%.2f%%\t%.2f%%\t%.2f\n", row.accuracy * 100.0,
                  row.recall * 100.0, row.f1);
    out << row.model << buf;
  }
  return out.str();
}

}  // namespace sentirisk
