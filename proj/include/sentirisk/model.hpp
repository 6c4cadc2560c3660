// SPDX-License-Identifier: Apache-2.0
//
// The CNN-GRU model and its two ablations.
//
// Per day, each document is embedded, convolved, passed through ReLU and
// max-pooled over time; the pooled vectors of a day's documents are averaged
// into a text vector and concatenated with the day's market features. The
// GRU runs over the window of day vectors and attention pooling (or the last
// hidden state) feeds a one-output regression head and a class head.
//
//   CnnOnly: day vectors are averaged over the window, no recurrence.
//   GruOnly: the text vector is the mean token embedding, no convolution.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sentirisk/dataset.hpp"
#include "sentirisk/layers.hpp"
#include "sentirisk/loss.hpp"

namespace sentirisk {

enum class ArchKind { CnnGru, CnnOnly, GruOnly };

/// "cnn-gru", "cnn" or "gru".
std::string_view to_string(ArchKind arch);
std::optional<ArchKind> parse_arch(std::string_view name);
/// Row label used in comparison tables: "CNN+GRU", "CNN", "GRU".
std::string_view table_label(ArchKind arch);

struct ModelConfig {
  std::size_t vocab_size = 2;
  std::size_t embed_dim = 64;
  std::size_t num_filters = 64;
  std::size_t kernel_width = 3;
  std::size_t conv_stride = 3;
  std::size_t gru_hidden = 32;
  std::size_t attention_dim = 32;
  std::size_t window = 20;
  std::size_t max_doc_len = 32;
  std::size_t market_features = kMarketFeatureCount;
  std::size_t num_classes = kSentimentClasses;
  bool attention_enabled = true;
  double lambda = 0.5;
  std::uint64_t seed = 42;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct ModelParams {
  EmbeddingTable embedding;
  std::optional<Conv1DParams> conv;
  std::optional<GRUParams> gru;
  std::optional<AttentionParams> attention;
  DenseParams reg_head;
  DenseParams cls_head;
};

struct CnnGruModel {
  ModelConfig config;
  ArchKind arch = ArchKind::CnnGru;
  ModelParams params;

  bool uses_conv() const { return arch != ArchKind::GruOnly; }
  bool uses_gru() const { return arch != ArchKind::CnnOnly; }
  bool uses_attention() const { return uses_gru() && config.attention_enabled; }
  /// Width of the per-day vector fed to the GRU (or averaged by CnnOnly).
  std::size_t day_vector_size() const;
};

CnnGruModel build_model(const ModelConfig& cfg, ArchKind arch);

/// Visits every trainable tensor with a stable name, in a fixed order.
void for_each_tensor(ModelParams& params, const std::function<void(std::string_view, Matrix&)>& fn);
void for_each_tensor(const ModelParams& params,
                     const std::function<void(std::string_view, const Matrix&)>& fn);

/// Same tensors, same shapes, all zero.
ModelParams zeros_like(const ModelParams& params);

std::size_t count_params(const CnnGruModel& model);
/// Parameters held by the GRU gate matrices alone: 3 * h * (h + d).
std::size_t count_gru_params(const CnnGruModel& model);

struct DocCache {
  std::vector<TokenId> ids;  ///< padded to max_doc_len
  Conv1DCache conv;
  Matrix pre_activation;  ///< conv output before ReLU
  MaxPoolResult pool;
  std::size_t token_count = 0;  ///< non-pad tokens, used by the mean-embedding path
};

struct DayCache {
  std::vector<DocCache> docs;
};

struct ForwardCache {
  std::vector<DayCache> days;
  std::vector<Matrix> day_vectors;
  std::optional<GRUSequence> gru;
  std::optional<AttentionCache> attention;
  Matrix pooled;  ///< input to both heads
  Matrix reg_out;
  Matrix logits;
};

struct ForwardResult {
  double price_pred = 0.0;
  Matrix class_logits;
  ForwardCache cache;
};

ForwardResult model_forward(const CnnGruModel& model, const WindowSample& sample);

struct Targets {
  double target_return = 0.0;
  std::size_t target_class = 0;
};

Targets targets_of(const WindowSample& sample);

struct LossBreakdown {
  double joint = 0.0;
  double mse = 0.0;
  double ce = 0.0;
};

LossBreakdown sample_loss(const CnnGruModel& model, const ForwardResult& forward,
                          const Targets& targets);

/// Adds the gradient of the joint loss for one sample into grads and returns
/// the loss. The embedding pad row never receives gradient.
LossBreakdown model_backward(const CnnGruModel& model, const ForwardCache& cache,
                             const Targets& targets, ModelParams& grads);

// Checkpoints: versioned JSON holding the config block and every tensor as
// nested arrays. Doubles are written in shortest round-trip form.
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const CnnGruModel& model, const std::filesystem::path& path);
CnnGruModel load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_to_string(const CnnGruModel& model);
CnnGruModel checkpoint_from_string(const std::string& text);

}  // namespace sentirisk
