// SPDX-License-Identifier: Apache-2.0
//
// Classification metrics derived from a confusion matrix, plus the
// regression error over normalized returns.
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sentirisk {

/// Rows are true classes, columns are predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);

  void add(std::size_t truth, std::size_t predicted, std::size_t count = 1);
  std::size_t at(std::size_t truth, std::size_t predicted) const;
  std::size_t classes() const { return classes_; }
  std::size_t total() const;
  std::size_t row_sum(std::size_t truth) const;
  std::size_t col_sum(std::size_t predicted) const;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion_matrix(std::span<const std::size_t> labels,
                                 std::span<const std::size_t> predictions, std::size_t classes);

// Per-class scores. A zero denominator yields 0.
double class_precision(const ConfusionMatrix& cm, std::size_t k);
double class_recall(const ConfusionMatrix& cm, std::size_t k);
double class_f1(const ConfusionMatrix& cm, std::size_t k);

struct MetricsReport {
  ConfusionMatrix confusion{3};
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double regression_mse = 0.0;
  std::size_t samples = 0;
};

/// Every classification field is recomputed from the matrix; regression_mse
/// is left at zero.
MetricsReport metrics_from_confusion(const ConfusionMatrix& cm);

std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const std::string& text);

struct TableRow {
  std::string model;
  double accuracy = 0.0;  ///< fraction in [0,1]
  double recall = 0.0;    ///< fraction in [0,1]
  double f1 = 0.0;
};

/// Tab-separated "Model Ac Rec F1" table; Ac and Rec as percentages with two
/// decimals, F1 with two decimals.
std::string render_table(std::span<const TableRow> rows);

}  // namespace sentirisk
