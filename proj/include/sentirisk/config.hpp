// SPDX-License-Identifier: Apache-2.0
//
// One flat JSON object configures every subcommand. Recognized keys:
//
//   arch, attention ("on"/"off" or bool), embed_dim, num_filters,
//   kernel_width, conv_stride, gru_hidden, attention_dim, window,
//   max_doc_len, lambda, seed, lr, batch_size, epochs, patience, optimizer,
//   weight_decay, risk_threshold, min_freq, max_vocab, train_ratio,
//   val_ratio, test_ratio
//
// Unknown keys are rejected.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "sentirisk/alert.hpp"
#include "sentirisk/dataset.hpp"
#include "sentirisk/model.hpp"
#include "sentirisk/train.hpp"

namespace sentirisk {

struct RunConfig {
  ArchKind arch = ArchKind::CnnGru;
  ModelConfig model;
  TrainConfig train;
  AlertRuleConfig alert;
  PrepareOptions prepare;

  void set_seed(std::uint64_t seed);
  void validate() const;
};

RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& cfg);

/// --seed wins; otherwise SENTI_RISK_SEED if set; otherwise nullopt.
std::optional<std::uint64_t> resolve_seed(std::optional<std::uint64_t> flag);

}  // namespace sentirisk
