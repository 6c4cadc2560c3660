// SPDX-License-Identifier: Apache-2.0
//
// Mini-batch training with early stopping, evaluation, forward-chaining
// cross-validation, ablation comparison and price export.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sentirisk/dataset.hpp"
#include "sentirisk/metrics.hpp"
#include "sentirisk/model.hpp"

namespace sentirisk {

enum class OptimizerKind { adam, sgd };

std::string_view to_string(OptimizerKind kind);
std::optional<OptimizerKind> parse_optimizer(std::string_view name);

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch_size = 50;
  std::size_t epochs = 100;
  /// Training stops once this many consecutive epochs fail to lower the
  /// validation joint loss. 0 stops at the first non-improving epoch.
  std::size_t patience = 10;
  OptimizerKind optimizer = OptimizerKind::adam;
  double weight_decay = 0.0;
  std::uint64_t seed = 42;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  ///< 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_mse = 0.0;
  double train_ce = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainResult {
  CnnGruModel model;  ///< parameters from the epoch with the lowest validation loss
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

/// Mean per-sample losses over the split.
LossBreakdown evaluate_loss(const CnnGruModel& model, std::span<const WindowSample> samples);

/// Progress lines go to log when it is non-null.
TrainResult train(CnnGruModel model, std::span<const WindowSample> train_set,
                  std::span<const WindowSample> val_set, const TrainConfig& cfg,
                  std::ostream* log = nullptr);

void write_history_jsonl(std::span<const EpochRecord> history, std::ostream& out);
void write_history_jsonl(std::span<const EpochRecord> history, const std::filesystem::path& path);

/// Argmax class per sample.
std::vector<std::size_t> predict_classes(const CnnGruModel& model,
                                         std::span<const WindowSample> samples);

MetricsReport evaluate(const CnnGruModel& model, std::span<const WindowSample> samples);

struct CVPlan {
  std::size_t k = 5;
};

/// Contiguous fold boundaries [begin, end) over n chronologically ordered
/// samples. The last fold absorbs the remainder.
std::vector<std::pair<std::size_t, std::size_t>> cv_folds(std::size_t n, const CVPlan& plan);

struct CVCandidate {
  ModelConfig model;
  TrainConfig train;
  ArchKind arch = ArchKind::CnnGru;
};

struct CVResult {
  std::size_t best_index = 0;
  std::vector<double> mean_val_loss;  ///< one entry per candidate, grid order
};

/// Round i trains on folds [0, i] and validates on fold i + 1. Ties go to the
/// earliest candidate.
CVResult cross_validate(std::span<const CVCandidate> grid, std::span<const WindowSample> samples,
                        const CVPlan& plan, std::ostream* log = nullptr);

struct AblationRun {
  ArchKind arch = ArchKind::CnnGru;
  TrainResult result;
  MetricsReport train;
  MetricsReport val;
  MetricsReport test;
};

/// Trains CnnOnly, GruOnly and CnnGru from the same config and seeds.
std::map<ArchKind, AblationRun> compare_ablations(const SampleSplits& splits,
                                                  const ModelConfig& model_cfg,
                                                  const TrainConfig& train_cfg,
                                                  std::ostream* log = nullptr);

/// Table rows in CNN, GRU, CNN+GRU order from the chosen split's metrics.
std::vector<TableRow> ablation_table(const std::map<ArchKind, AblationRun>& runs,
                                     std::string_view split = "test");

struct PricePrediction {
  Date date;
  double true_close = 0.0;
  double pred_close = 0.0;
};

/// Inverts predicted normalized returns to prices using the prior day's close.
std::vector<PricePrediction> predict_prices(const CnnGruModel& model,
                                            std::span<const WindowSample> samples,
                                            const std::optional<NormStats>& stats);
std::vector<PricePrediction> predict_prices(std::span<const double> normalized_returns,
                                            std::span<const WindowSample> samples,
                                            const std::optional<NormStats>& stats);

void write_predictions_csv(std::span<const PricePrediction> rows, std::ostream& out);
void export_predictions(const CnnGruModel& model, std::span<const WindowSample> samples,
                        const std::optional<NormStats>& stats, const std::filesystem::path& path);

}  // namespace sentirisk
