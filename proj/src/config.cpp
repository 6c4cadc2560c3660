// SPDX-License-Identifier: Apache-2.0
#include "sentirisk/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sentirisk/errors.hpp"

namespace sentirisk {

using json = nlohmann::json;

void RunConfig::set_seed(std::uint64_t seed) {
  model.seed = seed;
  train.seed = seed;
}

void RunConfig::validate() const {
  try {
    model.validate();
    train.validate();
    alert.validate();
    prepare.ratios.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  if (model.window != prepare.window || model.max_doc_len != prepare.max_doc_len) {
    throw DataError("config: window and max_doc_len disagree between model and prepare");
  }
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("config must be a JSON object");

  RunConfig cfg;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "arch") {
        const auto arch = parse_arch(value.get<std::string>());
        if (!arch) throw DataError("config: unknown arch " + value.dump());
        cfg.arch = *arch;
      } else if (key == "attention") {
        if (value.is_boolean()) {
          cfg.model.attention_enabled = value.get<bool>();
        } else {
          const auto s = value.get<std::string>();
          if (s != "on" && s != "off") throw DataError("config: attention must be on or off");
          cfg.model.attention_enabled = s == "on";
        }
      } else if (key == "embed_dim") {
        cfg.model.embed_dim = value.get<std::size_t>();
      } else if (key == "num_filters") {
        cfg.model.num_filters = value.get<std::size_t>();
      } else if (key == "kernel_width") {
        cfg.model.kernel_width = value.get<std::size_t>();
      } else if (key == "conv_stride") {
        cfg.model.conv_stride = value.get<std::size_t>();
      } else if (key == "gru_hidden") {
        cfg.model.gru_hidden = value.get<std::size_t>();
      } else if (key == "attention_dim") {
        cfg.model.attention_dim = value.get<std::size_t>();
      } else if (key == "window") {
        cfg.model.window = cfg.prepare.window = value.get<std::size_t>();
      } else if (key == "max_doc_len") {
        cfg.model.max_doc_len = cfg.prepare.max_doc_len = value.get<std::size_t>();
      } else if (key == "lambda") {
        cfg.model.lambda = value.get<double>();
      } else if (key == "seed") {
        cfg.set_seed(value.get<std::uint64_t>());
      } else if (key == "lr") {
        cfg.train.lr = value.get<double>();
      } else if (key == "batch_size") {
        cfg.train.batch_size = value.get<std::size_t>();
      } else if (key == "epochs") {
        cfg.train.epochs = value.get<std::size_t>();
      } else if (key == "patience") {
        cfg.train.patience = value.get<std::size_t>();
      } else if (key == "optimizer") {
        const auto kind = parse_optimizer(value.get<std::string>());
        if (!kind) throw DataError("config: optimizer must be adam or sgd");
        cfg.train.optimizer = *kind;
      } else if (key == "weight_decay") {
        cfg.train.weight_decay = value.get<double>();
      } else if (key == "risk_threshold") {
        cfg.alert.risk_threshold = value.get<double>();
      } else if (key == "min_freq") {
        cfg.prepare.min_freq = value.get<std::size_t>();
      } else if (key == "max_vocab") {
        cfg.prepare.max_vocab = value.get<std::size_t>();
      } else if (key == "train_ratio") {
        cfg.prepare.ratios.train = value.get<double>();
      } else if (key == "val_ratio") {
        cfg.prepare.ratios.val = value.get<double>();
      } else if (key == "test_ratio") {
        cfg.prepare.ratios.test = value.get<double>();
      } else {
        throw DataError("config: unknown key '" + key + "'");
      }
    } catch (const json::exception& e) {
      throw DataError("config: bad value for '" + key + "': " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return run_config_from_json(buffer.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
  const json j = {{"arch", to_string(cfg.arch)},
                  {"attention", cfg.model.attention_enabled ? "on" : "off"},
                  {"embed_dim", cfg.model.embed_dim},
                  {"num_filters", cfg.model.num_filters},
                  {"kernel_width", cfg.model.kernel_width},
                  {"conv_stride", cfg.model.conv_stride},
                  {"gru_hidden", cfg.model.gru_hidden},
                  {"attention_dim", cfg.model.attention_dim},
                  {"window", cfg.model.window},
                  {"max_doc_len", cfg.model.max_doc_len},
                  {"lambda", cfg.model.lambda},
                  {"seed", cfg.model.seed},
                  {"lr", cfg.train.lr},
                  {"batch_size", cfg.train.batch_size},
                  {"epochs", cfg.train.epochs},
                  {"patience", cfg.train.patience},
                  {"optimizer", to_string(cfg.train.optimizer)},
                  {"weight_decay", cfg.train.weight_decay},
                  {"risk_threshold", cfg.alert.risk_threshold},
                  {"min_freq", cfg.prepare.min_freq},
                  {"max_vocab", cfg.prepare.max_vocab},
                  {"train_ratio", cfg.prepare.ratios.train},
                  {"val_ratio", cfg.prepare.ratios.val},
                  {"test_ratio", cfg.prepare.ratios.test}};
  return j.dump(2);
}

std::optional<std::uint64_t> resolve_seed(std::optional<std::uint64_t> flag) {
  if (flag) return flag;
  const char* env = std::getenv("SENTI_RISK_SEED");
  if (env == nullptr || *env == '\0') return std::nullopt;
  std::uint64_t seed = 0;
  const std::string_view text(env);
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw DataError("SENTI_RISK_SEED is not an unsigned integer: " + std::string(text));
  }
  return seed;
}

}  // namespace sentirisk
