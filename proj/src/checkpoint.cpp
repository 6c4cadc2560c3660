// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sentirisk/errors.hpp"
#include "sentirisk/model.hpp"

namespace sentirisk {
namespace {

using json = nlohmann::json;

constexpr const char* kFormatName = "sentirisk-checkpoint";

json config_to_json(const ModelConfig& c) {
  return json{{"vocab_size", c.vocab_size},
              {"embed_dim", c.embed_dim},
              {"num_filters", c.num_filters},
              {"kernel_width", c.kernel_width},
              {"conv_stride", c.conv_stride},
              {"gru_hidden", c.gru_hidden},
              {"attention_dim", c.attention_dim},
              {"window", c.window},
              {"max_doc_len", c.max_doc_len},
              {"market_features", c.market_features},
              {"num_classes", c.num_classes},
              {"attention_enabled", c.attention_enabled},
              {"lambda", c.lambda},
              {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.num_filters = j.at("num_filters").get<std::size_t>();
  c.kernel_width = j.at("kernel_width").get<std::size_t>();
  c.conv_stride = j.at("conv_stride").get<std::size_t>();
  c.gru_hidden = j.at("gru_hidden").get<std::size_t>();
  c.attention_dim = j.at("attention_dim").get<std::size_t>();
  c.window = j.at("window").get<std::size_t>();
  c.max_doc_len = j.at("max_doc_len").get<std::size_t>();
  c.market_features = j.at("market_features").get<std::size_t>();
  c.num_classes = j.at("num_classes").get<std::size_t>();
  c.attention_enabled = j.at("attention_enabled").get<bool>();
  c.lambda = j.at("lambda").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json tensor_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

void tensor_from_json(const json& rows, Matrix& into, std::string_view name) {
  const std::string label(name);
  if (!rows.is_array() || rows.size() != into.rows()) {
    throw CheckpointError("checkpoint tensor '" + label + "' has the wrong shape; expected " +
                          into.shape_string());
  }
  for (std::size_t r = 0; r < into.rows(); ++r) {
    const json& row = rows[r];
    if (!row.is_array() || row.size() != into.cols()) {
      throw CheckpointError("checkpoint tensor '" + label + "' has the wrong shape; expected " +
                            into.shape_string());
    }
    for (std::size_t c = 0; c < into.cols(); ++c) {
      if (!row[c].is_number()) {
        throw CheckpointError("checkpoint tensor '" + label + "' holds a non-numeric value");
      }
      into(r, c) = row[c].get<double>();
    }
  }
}

}  // namespace

std::string checkpoint_to_string(const CnnGruModel& model) {
  json tensors = json::object();
  for_each_tensor(model.params, [&](std::string_view name, const Matrix& m) {
    tensors[std::string(name)] = tensor_to_json(m);
  });
  json root = {{"format", kFormatName},
               {"version", kCheckpointVersion},
               {"arch", to_string(model.arch)},
               {"config", config_to_json(model.config)},
               {"tensors", std::move(tensors)}};
  return root.dump(1) + "\n";
}

CnnGruModel checkpoint_from_string(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CheckpointError(std::string("checkpoint is not valid JSON (truncated?): ") + e.what());
  }
  try {
    if (root.value("format", std::string{}) != kFormatName) {
      throw CheckpointError("not a sentirisk checkpoint (format field missing or wrong)");
    }
    const json& version = root.at("version");
    if (!version.is_number_integer() || version.get<int>() != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " + version.dump() + " (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    }
    const auto arch = parse_arch(root.at("arch").get<std::string>());
    if (!arch) throw CheckpointError("unknown architecture '" + root.at("arch").dump() + "'");

    CnnGruModel model = build_model(config_from_json(root.at("config")), *arch);
    const json& tensors = root.at("tensors");
    if (!tensors.is_object()) throw CheckpointError("checkpoint 'tensors' must be an object");
    std::set<std::string> expected;
    for_each_tensor(model.params, [&](std::string_view name, Matrix& m) {
      const std::string key(name);
      expected.insert(key);
      if (!tensors.contains(key)) throw CheckpointError("checkpoint is missing tensor '" + key + "'");
      tensor_from_json(tensors[key], m, name);
    });
    for (const auto& [key, value] : tensors.items()) {
      if (!expected.contains(key)) {
        throw CheckpointError("checkpoint has unexpected tensor '" + key + "'");
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint config rejected: ") + e.what());
  }
}

void save_checkpoint(const CnnGruModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << checkpoint_to_string(model);
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

CnnGruModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_string(buffer.str());
}

}  // namespace sentirisk
