// SPDX-License-Identifier: Apache-2.0
#include "sentirisk/train.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "json.hpp"
#include "sentirisk/errors.hpp"

namespace sentirisk {
namespace {

std::vector<Matrix*> tensor_list(ModelParams& params) {
  std::vector<Matrix*> out;
  for_each_tensor(params, [&](std::string_view, Matrix& m) { out.push_back(&m); });
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::size_t argmax(const Matrix& column) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < column.rows(); ++i) {
    if (column(i, 0) > column(best, 0)) best = i;
  }
  return best;
}

}  // namespace

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::adam ? "adam" : "sgd";
}

std::optional<OptimizerKind> parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("train config: lr must be positive");
  if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (weight_decay < 0.0) throw std::invalid_argument("train config: weight_decay must be >= 0");
}

LossBreakdown evaluate_loss(const CnnGruModel& model, std::span<const WindowSample> samples) {
  if (samples.empty()) throw DataError("cannot evaluate on an empty split");
  LossBreakdown total;
  for (const WindowSample& s : samples) {
    const LossBreakdown l = sample_loss(model, model_forward(model, s), targets_of(s));
    total.joint += l.joint;
    total.mse += l.mse;
    total.ce += l.ce;
  }
  const double n = static_cast<double>(samples.size());
  return {total.joint / n, total.mse / n, total.ce / n};
}

TrainResult train(CnnGruModel model, std::span<const WindowSample> train_set,
                  std::span<const WindowSample> val_set, const TrainConfig& cfg, std::ostream* log) {
  cfg.validate();
  if (train_set.empty()) throw DataError("training split is empty");
  if (val_set.empty()) throw DataError("validation split is empty");

  const AdamConfig adam_cfg{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};
  const SGDConfig sgd_cfg{cfg.lr, cfg.weight_decay};
  std::vector<Matrix*> params = tensor_list(model.params);
  std::vector<AdamState> adam;
  for (Matrix* p : params) adam.push_back(AdamState::zeros_like(*p));

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result{model, {}, 0, std::numeric_limits<double>::infinity()};
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng() % i]);
    }
    LossBreakdown sum;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      ModelParams grads = zeros_like(model.params);
      for (std::size_t b = start; b < stop; ++b) {
        const WindowSample& sample = train_set[order[b]];
        const ForwardResult fwd = model_forward(model, sample);
        const LossBreakdown l = model_backward(model, fwd.cache, targets_of(sample), grads);
        if (!std::isfinite(l.joint)) {
          throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                             ", sample dated " + format_date(sample.target_date) +
                             " (mse " + format_double(l.mse) + ", ce " + format_double(l.ce) + ")");
        }
        sum.joint += l.joint;
        sum.mse += l.mse;
        sum.ce += l.ce;
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      std::vector<Matrix*> g = tensor_list(grads);
      for (std::size_t t = 0; t < params.size(); ++t) {
        for (double& v : g[t]->values()) v *= inv;
        if (cfg.optimizer == OptimizerKind::adam) {
          adam_update(*params[t], *g[t], adam[t], adam_cfg);
        } else {
          sgd_update(*params[t], *g[t], sgd_cfg);
        }
      }
    }

    const double n = static_cast<double>(train_set.size());
    EpochRecord rec{epoch, sum.joint / n, evaluate_loss(model, val_set).joint, sum.mse / n, sum.ce / n};
    if (!std::isfinite(rec.val_loss)) {
      throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back(rec);
    if (log != nullptr) {
      *log << "epoch " << epoch << " train " << format_double(rec.train_loss) << " val "
           << format_double(rec.val_loss) << '\n';
    }
    if (rec.val_loss < result.best_val_loss) {
      result.best_val_loss = rec.val_loss;
      result.best_epoch = epoch;
      result.model.params = model.params;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  return result;
}

void write_history_jsonl(std::span<const EpochRecord> history, std::ostream& out) {
  for (const EpochRecord& r : history) {
    nlohmann::json j = {{"epoch", r.epoch},
                        {"train_loss", r.train_loss},
                        {"val_loss", r.val_loss},
                        {"train_mse", r.train_mse},
                        {"train_ce", r.train_ce}};
    out << j.dump() << '\n';
  }
}

void write_history_jsonl(std::span<const EpochRecord> history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write history file " + path.string());
  write_history_jsonl(history, out);
}

std::vector<std::size_t> predict_classes(const CnnGruModel& model,
                                         std::span<const WindowSample> samples) {
  std::vector<std::size_t> out;
  out.reserve(samples.size());
  for (const WindowSample& s : samples) out.push_back(argmax(model_forward(model, s).class_logits));
  return out;
}

MetricsReport evaluate(const CnnGruModel& model, std::span<const WindowSample> samples) {
  if (samples.empty()) throw DataError("cannot evaluate on an empty split");
  ConfusionMatrix cm(model.config.num_classes);
  double sq = 0.0;
  for (const WindowSample& s : samples) {
    const ForwardResult fwd = model_forward(model, s);
    cm.add(index_of(s.target_class), argmax(fwd.class_logits));
    const double d = fwd.price_pred - s.target_return;
    sq += d * d;
  }
  MetricsReport report = metrics_from_confusion(cm);
  report.regression_mse = sq / static_cast<double>(samples.size());
  return report;
}

std::vector<std::pair<std::size_t, std::size_t>> cv_folds(std::size_t n, const CVPlan& plan) {
  if (plan.k < 2) throw std::invalid_argument("cross-validation needs k >= 2");
  if (n < plan.k) {
    throw DataError("cross-validation: " + std::to_string(n) + " samples cannot fill " +
                    std::to_string(plan.k) + " folds");
  }
  const std::size_t size = n / plan.k;
  std::vector<std::pair<std::size_t, std::size_t>> folds;
  for (std::size_t i = 0; i < plan.k; ++i) {
    folds.emplace_back(i * size, i + 1 == plan.k ? n : (i + 1) * size);
  }
  return folds;
}

CVResult cross_validate(std::span<const CVCandidate> grid, std::span<const WindowSample> samples,
                        const CVPlan& plan, std::ostream* log) {
  if (grid.empty()) throw std::invalid_argument("cross-validation grid is empty");
  const auto folds = cv_folds(samples.size(), plan);
  CVResult result;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < folds.size(); ++i) {
      const auto train_part = samples.subspan(0, folds[i].second);
      const auto val_part = samples.subspan(folds[i + 1].first, folds[i + 1].second - folds[i + 1].first);
      const TrainResult r = train(build_model(grid[c].model, grid[c].arch), train_part, val_part, grid[c].train);
      total += r.best_val_loss;
    }
    const double mean = total / static_cast<double>(folds.size() - 1);
    result.mean_val_loss.push_back(mean);
    if (log != nullptr) *log << "cv candidate " << c << " mean val loss " << format_double(mean) << '\n';
    if (mean < result.mean_val_loss[result.best_index]) result.best_index = c;
  }
  return result;
}

std::map<ArchKind, AblationRun> compare_ablations(const SampleSplits& splits,
                                                  const ModelConfig& model_cfg,
                                                  const TrainConfig& train_cfg, std::ostream* log) {
  if (splits.test.empty()) throw DataError("test split is empty");
  std::map<ArchKind, AblationRun> runs;
  for (ArchKind arch : {ArchKind::CnnOnly, ArchKind::GruOnly, ArchKind::CnnGru}) {
    if (log != nullptr) *log << "training " << to_string(arch) << '\n';
    AblationRun run;
    run.arch = arch;
    run.result = train(build_model(model_cfg, arch), splits.train, splits.val, train_cfg);
    run.train = evaluate(run.result.model, splits.train);
    run.val = evaluate(run.result.model, splits.val);
    run.test = evaluate(run.result.model, splits.test);
    runs.emplace(arch, std::move(run));
  }
  return runs;
}

std::vector<TableRow> ablation_table(const std::map<ArchKind, AblationRun>& runs,
                                     std::string_view split) {
  std::vector<TableRow> rows;
  for (ArchKind arch : {ArchKind::CnnOnly, ArchKind::GruOnly, ArchKind::CnnGru}) {
    const auto it = runs.find(arch);
    if (it == runs.end()) continue;
    const MetricsReport& m = split == "train" ? it->second.train
                             : split == "val" ? it->second.val
                                              : it->second.test;
    rows.push_back({std::string(table_label(arch)), m.accuracy, m.macro_recall, m.macro_f1});
  }
  return rows;
}

std::vector<PricePrediction> predict_prices(std::span<const double> normalized_returns,
                                            std::span<const WindowSample> samples,
                                            const std::optional<NormStats>& stats) {
  if (!stats) throw DataError("normalization statistics are missing; cannot invert returns");
  if (normalized_returns.size() != samples.size()) {
    throw std::invalid_argument("predict_prices: one return per sample is required");
  }
  std::vector<PricePrediction> rows;
  rows.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    rows.push_back({samples[i].target_date, samples[i].target_close,
                    invert_return(normalized_returns[i], samples[i].prev_close, *stats)});
  }
  return rows;
}

std::vector<PricePrediction> predict_prices(const CnnGruModel& model,
                                            std::span<const WindowSample> samples,
                                            const std::optional<NormStats>& stats) {
  if (!stats) throw DataError("normalization statistics are missing; cannot invert returns");
  std::vector<double> returns;
  returns.reserve(samples.size());
  for (const WindowSample& s : samples) returns.push_back(model_forward(model, s).price_pred);
  return predict_prices(returns, samples, stats);
}

void write_predictions_csv(std::span<const PricePrediction> rows, std::ostream& out) {
  out << "date,true_close,pred_close\n";
  for (const PricePrediction& r : rows) {
    out << format_date(r.date) << ',' << format_double(r.true_close) << ','
        << format_double(r.pred_close) << '\n';
  }
}

void export_predictions(const CnnGruModel& model, std::span<const WindowSample> samples,
                        const std::optional<NormStats>& stats, const std::filesystem::path& path) {
  const auto rows = predict_prices(model, samples, stats);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write predictions file " + path.string());
  write_predictions_csv(rows, out);
}

}  // namespace sentirisk
