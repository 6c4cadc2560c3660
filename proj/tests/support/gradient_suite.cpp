// SPDX-License-Identifier: Apache-2.0
#include "gradient_suite.hpp"

#include <random>

#include "sentirisk/layers.hpp"
#include "sentirisk/loss.hpp"
#include "synthetic.hpp"

namespace sentirisk::testing {

std::vector<TensorCheck> check_conv1d(std::uint64_t seed, std::size_t stride) {
  std::mt19937_64 rng(seed);
  const std::size_t len = 15, channels = 40, width = 3, filters = 3;
  Matrix input = random_matrix(len, channels, rng);
  Conv1DParams params;
  params.stride = stride;
  for (std::size_t f = 0; f < filters; ++f) params.kernels.push_back(random_matrix(width, channels, rng));
  const std::size_t out_len = conv1d_output_length(len, width, stride);
  const Matrix weights = random_matrix(out_len, filters, rng);

  Conv1DParams grads = params;
  for (Matrix& k : grads.kernels) k.fill(0.0);
  const Conv1DResult fwd = conv1d_forward(params, input);
  const Matrix d_input = conv1d_backward(params, fwd.cache, weights, grads);

  const auto loss = [&] { return project(conv1d_forward(params, input).output, weights); };
  const std::string tag = "conv1d(stride " + std::to_string(stride) + ")/";
  std::vector<TensorCheck> out;
  out.push_back({tag + "input", check_tensor(input, d_input, loss, rng)});
  for (std::size_t f = 0; f < filters; ++f) {
    out.push_back({tag + "kernel" + std::to_string(f), check_tensor(params.kernels[f], grads.kernels[f], loss, rng)});
  }
  return out;
}

std::vector<TensorCheck> check_max_pool(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix featmap = random_matrix(20, 8, rng);
  const Matrix weights = random_matrix(8, 1, rng);
  const Matrix d_featmap = global_max_pool_backward(global_max_pool(featmap), weights);
  const auto loss = [&] { return project(global_max_pool(featmap).pooled, weights); };
  return {{"max_pool/featmap", check_tensor(featmap, d_featmap, loss, rng)}};
}

namespace {

GRUParams random_gru(std::size_t h, std::size_t d, std::mt19937_64& rng) {
  return {random_matrix(h, h + d, rng), random_matrix(h, h + d, rng), random_matrix(h, h + d, rng)};
}

GRUParams zero_grads(const GRUParams& p) {
  return {Matrix(p.W_z.rows(), p.W_z.cols()), Matrix(p.W_r.rows(), p.W_r.cols()), Matrix(p.W.rows(), p.W.cols())};
}

}  // namespace

std::vector<TensorCheck> check_gru_step(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t h = 8, d = 6;
  GRUParams params = random_gru(h, d, rng);
  Matrix h_prev = random_matrix(h, 1, rng);
  Matrix x = random_matrix(d, 1, rng);
  const Matrix weights = random_matrix(h, 1, rng);

  GRUParams grads = zero_grads(params);
  const GRUStepGrads g = gru_step_backward(params, gru_step(params, h_prev, x), weights, grads);
  const auto loss = [&] { return project(gru_step(params, h_prev, x).h_t, weights); };
  return {{"gru_step/W_z", check_tensor(params.W_z, grads.W_z, loss, rng)},
          {"gru_step/W_r", check_tensor(params.W_r, grads.W_r, loss, rng)},
          {"gru_step/W", check_tensor(params.W, grads.W, loss, rng)},
          {"gru_step/h_prev", check_tensor(h_prev, g.h_prev, loss, rng)},
          {"gru_step/x", check_tensor(x, g.x_t, loss, rng)}};
}

std::vector<TensorCheck> check_gru_sequence(std::uint64_t seed, std::size_t steps) {
  std::mt19937_64 rng(seed);
  const std::size_t h = 8, d = 6;
  GRUParams params = random_gru(h, d, rng);
  std::vector<Matrix> inputs;
  std::vector<Matrix> weights;
  for (std::size_t t = 0; t < steps; ++t) {
    inputs.push_back(random_matrix(d, 1, rng));
    weights.push_back(random_matrix(h, 1, rng));
  }
  Matrix h0 = random_matrix(h, 1, rng);

  GRUParams grads = zero_grads(params);
  const GRUSequence fwd = gru_forward(params, inputs, h0);
  const GRUSequenceGrads g = gru_backward(params, fwd.caches, weights, grads);
  const auto loss = [&] {
    const GRUSequence seq = gru_forward(params, inputs, h0);
    double total = 0.0;
    for (std::size_t t = 0; t < steps; ++t) total += project(seq.hiddens[t], weights[t]);
    return total;
  };
  const std::string tag = "gru_unrolled(" + std::to_string(steps) + ")/";
  std::vector<TensorCheck> out = {{tag + "W_z", check_tensor(params.W_z, grads.W_z, loss, rng)},
                                  {tag + "W_r", check_tensor(params.W_r, grads.W_r, loss, rng)},
                                  {tag + "W", check_tensor(params.W, grads.W, loss, rng)},
                                  {tag + "h0", check_tensor(h0, g.h0, loss, rng)}};
  for (std::size_t t = 0; t < steps; ++t) {
    out.push_back({tag + "x" + std::to_string(t), check_tensor(inputs[t], g.inputs[t], loss, rng)});
  }
  return out;
}

std::vector<TensorCheck> check_attention(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t h = 8, a = 16, steps = 6;
  AttentionParams params{random_matrix(a, h, rng), random_matrix(a, 1, rng)};
  std::vector<Matrix> hiddens;
  for (std::size_t t = 0; t < steps; ++t) hiddens.push_back(random_matrix(h, 1, rng));
  const Matrix weights = random_matrix(h, 1, rng);

  AttentionParams grads{Matrix(a, h), Matrix(a, 1)};
  const AttentionResult fwd = attention_pool(params, hiddens);
  const std::vector<Matrix> d_hidden = attention_backward(params, fwd.cache, weights, grads);
  const auto loss = [&] { return project(attention_pool(params, hiddens).context, weights); };
  std::vector<TensorCheck> out = {{"attention/W_a", check_tensor(params.W_a, grads.W_a, loss, rng)},
                                  {"attention/u", check_tensor(params.u, grads.u, loss, rng)}};
  for (std::size_t t = 0; t < steps; ++t) {
    out.push_back({"attention/h" + std::to_string(t), check_tensor(hiddens[t], d_hidden[t], loss, rng)});
  }
  return out;
}

std::vector<TensorCheck> check_dense(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  DenseParams params{random_matrix(12, 10, rng), random_matrix(12, 1, rng)};
  Matrix x = random_matrix(10, 1, rng);
  const Matrix weights = random_matrix(12, 1, rng);
  DenseParams grads{Matrix(12, 10), Matrix(12, 1)};
  const Matrix dx = dense_backward(params, x, weights, grads);
  const auto loss = [&] { return project(dense_forward(params, x), weights); };
  return {{"dense/W", check_tensor(params.W, grads.W, loss, rng)},
          {"dense/b", check_tensor(params.b, grads.b, loss, rng)},
          {"dense/x", check_tensor(x, dx, loss, rng)}};
}

std::vector<TensorCheck> check_embedding(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t vocab = 30, dim = 6, len = 10;
  EmbeddingTable table{random_matrix(vocab, dim, rng)};
  std::vector<TokenId> ids = {0, 5, 5, 17, 3, 0, 29, 1};
  const Matrix weights = random_matrix(len, dim, rng);
  Matrix grad(vocab, dim);
  embed_backward(fit_length(ids, len), weights, grad);
  const auto loss = [&] { return project(embed_lookup(table, ids, len), weights); };
  return {{"embedding/table", check_tensor(table.table, grad, loss, rng, 200)}};
}

std::vector<TensorCheck> check_losses(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix pred = random_matrix(7, 1, rng);
  const Matrix target = random_matrix(7, 1, rng);
  Matrix logits = random_matrix(3, 1, rng, 3.0);
  const std::size_t label = 2;
  return {{"mse/pred", check_tensor(pred, mse_grad(pred, target), [&] { return mse(pred, target); }, rng)},
          {"cross_entropy/logits",
           check_tensor(logits, cross_entropy_grad(logits, label), [&] { return cross_entropy(logits, label); }, rng)}};
}

ModelConfig tiny_model_config(std::uint64_t seed, bool attention) {
  ModelConfig cfg;
  cfg.vocab_size = 9;
  cfg.embed_dim = 3;
  cfg.num_filters = 2;
  cfg.kernel_width = 2;
  cfg.conv_stride = 1;
  cfg.gru_hidden = 2;
  cfg.attention_dim = 3;
  cfg.window = 3;
  cfg.max_doc_len = 5;
  cfg.attention_enabled = attention;
  cfg.seed = seed;
  return cfg;
}

std::vector<TensorCheck> check_full_model(const ModelConfig& cfg, ArchKind arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CnnGruModel model = build_model(cfg, arch);
  // Larger weights than the Glorot init keep every gradient well away from zero.
  for_each_tensor(model.params, [&](std::string_view, Matrix& m) {
    for (double& v : m.values()) v = 2.0 * unit_uniform(rng) - 1.0;
  });
  for (std::size_t j = 0; j < cfg.embed_dim; ++j) model.params.embedding.table(0, j) = 0.0;

  std::vector<WindowSample> samples = random_samples(cfg, 1, rng);
  WindowSample& sample = samples.front();
  // Every day carries text so all text paths see gradient.
  for (AlignedDay& day : sample.inputs) {
    day.has_text = true;
    while (day.docs.size() < 2) {
      std::vector<TokenId> doc(cfg.max_doc_len);
      for (auto& id : doc) id = static_cast<TokenId>(1 + rng() % (cfg.vocab_size - 1));
      day.docs.push_back(std::move(doc));
    }
  }
  const Targets targets = targets_of(sample);

  ModelParams grads = zeros_like(model.params);
  model_backward(model, model_forward(model, sample).cache, targets, grads);
  const auto loss = [&] { return sample_loss(model, model_forward(model, sample), targets).joint; };

  std::vector<Matrix*> analytic;
  for_each_tensor(grads, [&](std::string_view, Matrix& m) { analytic.push_back(&m); });
  std::vector<TensorCheck> out;
  std::size_t i = 0;
  const std::string tag = "model(" + std::string(to_string(arch)) + (cfg.attention_enabled ? ",attention" : "") + ")/";
  for_each_tensor(model.params, [&](std::string_view name, Matrix& m) {
    out.push_back({tag + std::string(name), check_tensor(m, *analytic[i++], loss, rng)});
  });
  return out;
}

}  // namespace sentirisk::testing
