// SPDX-License-Identifier: Apache-2.0
#include "sentirisk/model.hpp"

#include <random>
#include <string>

#include "sentirisk/errors.hpp"

namespace sentirisk {
namespace {

void require_positive(std::size_t value, const char* name) {
  if (value == 0) throw std::invalid_argument(std::string("model config: ") + name + " must be positive");
}

Matrix column_mean_of_tokens(const Matrix& embedded, std::span<const TokenId> ids,
                             std::size_t& count) {
  Matrix out(embedded.cols(), 1);
  count = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == Vocabulary::kPad) continue;
    ++count;
    for (std::size_t j = 0; j < embedded.cols(); ++j) out(j, 0) += embedded(i, j);
  }
  if (count > 0) {
    for (double& v : out.values()) v /= static_cast<double>(count);
  }
  return out;
}

}  // namespace

std::string_view to_string(ArchKind arch) {
  switch (arch) {
    case ArchKind::CnnGru:
      return "cnn-gru";
    case ArchKind::CnnOnly:
      return "cnn";
    case ArchKind::GruOnly:
      return "gru";
  }
  return "cnn-gru";
}

std::optional<ArchKind> parse_arch(std::string_view name) {
  if (name == "cnn-gru") return ArchKind::CnnGru;
  if (name == "cnn") return ArchKind::CnnOnly;
  if (name == "gru") return ArchKind::GruOnly;
  return std::nullopt;
}

std::string_view table_label(ArchKind arch) {
  switch (arch) {
    case ArchKind::CnnGru:
      return "CNN+GRU";
    case ArchKind::CnnOnly:
      return "CNN";
    case ArchKind::GruOnly:
      return "GRU";
  }
  return "CNN+GRU";
}

void ModelConfig::validate() const {
  if (vocab_size < 2) throw std::invalid_argument("model config: vocab_size must be >= 2");
  require_positive(embed_dim, "embed_dim");
  require_positive(num_filters, "num_filters");
  require_positive(kernel_width, "kernel_width");
  require_positive(conv_stride, "conv_stride");
  require_positive(gru_hidden, "gru_hidden");
  require_positive(attention_dim, "attention_dim");
  require_positive(window, "window");
  require_positive(max_doc_len, "max_doc_len");
  require_positive(market_features, "market_features");
  require_positive(num_classes, "num_classes");
  JointLossConfig{lambda}.validate();
}

std::size_t CnnGruModel::day_vector_size() const {
  const std::size_t text = uses_conv() ? config.num_filters : config.embed_dim;
  return text + config.market_features;
}

CnnGruModel build_model(const ModelConfig& cfg, ArchKind arch) {
  cfg.validate();
  CnnGruModel model{cfg, arch, {}};
  if (model.uses_conv() && cfg.max_doc_len < cfg.kernel_width) {
    throw std::invalid_argument("model config: max_doc_len " + std::to_string(cfg.max_doc_len) +
                                " is shorter than kernel_width " +
                                std::to_string(cfg.kernel_width));
  }
  std::mt19937_64 rng(cfg.seed);
  ModelParams& p = model.params;

  p.embedding.table = Matrix(cfg.vocab_size, cfg.embed_dim);
  glorot_uniform(p.embedding.table, cfg.vocab_size, cfg.embed_dim, rng);
  for (std::size_t j = 0; j < cfg.embed_dim; ++j) p.embedding.table(Vocabulary::kPad, j) = 0.0;

  if (model.uses_conv()) {
    Conv1DParams conv;
    conv.stride = cfg.conv_stride;
    for (std::size_t f = 0; f < cfg.num_filters; ++f) {
      Matrix kernel(cfg.kernel_width, cfg.embed_dim);
      glorot_uniform(kernel, cfg.kernel_width * cfg.embed_dim, cfg.kernel_width * cfg.num_filters,
                     rng);
      conv.kernels.push_back(std::move(kernel));
    }
    p.conv = std::move(conv);
  }

  const std::size_t day = model.day_vector_size();
  std::size_t head_in = day;
  if (model.uses_gru()) {
    const std::size_t h = cfg.gru_hidden;
    GRUParams gru{Matrix(h, h + day), Matrix(h, h + day), Matrix(h, h + day)};
    glorot_uniform(gru.W_z, h + day, h, rng);
    glorot_uniform(gru.W_r, h + day, h, rng);
    glorot_uniform(gru.W, h + day, h, rng);
    p.gru = std::move(gru);
    head_in = h;
    if (model.uses_attention()) {
      AttentionParams att{Matrix(cfg.attention_dim, h), Matrix(cfg.attention_dim, 1)};
      glorot_uniform(att.W_a, h, cfg.attention_dim, rng);
      glorot_uniform(att.u, cfg.attention_dim, 1, rng);
      p.attention = std::move(att);
    }
  }

  p.reg_head = {Matrix(1, head_in), Matrix(1, 1)};
  glorot_uniform(p.reg_head.W, head_in, 1, rng);
  p.cls_head = {Matrix(cfg.num_classes, head_in), Matrix(cfg.num_classes, 1)};
  glorot_uniform(p.cls_head.W, head_in, cfg.num_classes, rng);
  return model;
}

void for_each_tensor(ModelParams& params,
                     const std::function<void(std::string_view, Matrix&)>& fn) {
  fn("embedding", params.embedding.table);
  if (params.conv) {
    for (std::size_t f = 0; f < params.conv->kernels.size(); ++f) {
      fn("conv.kernel." + std::to_string(f), params.conv->kernels[f]);
    }
  }
  if (params.gru) {
    fn("gru.W_z", params.gru->W_z);
    fn("gru.W_r", params.gru->W_r);
    fn("gru.W", params.gru->W);
  }
  if (params.attention) {
    fn("attention.W_a", params.attention->W_a);
    fn("attention.u", params.attention->u);
  }
  fn("head.reg.W", params.reg_head.W);
  fn("head.reg.b", params.reg_head.b);
  fn("head.cls.W", params.cls_head.W);
  fn("head.cls.b", params.cls_head.b);
}

void for_each_tensor(const ModelParams& params,
                     const std::function<void(std::string_view, const Matrix&)>& fn) {
  for_each_tensor(const_cast<ModelParams&>(params),
                  [&](std::string_view name, Matrix& m) { fn(name, m); });
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams out = params;
  for_each_tensor(out, [](std::string_view, Matrix& m) { m.fill(0.0); });
  return out;
}

std::size_t count_params(const CnnGruModel& model) {
  std::size_t total = 0;
  for_each_tensor(model.params, [&](std::string_view, const Matrix& m) { total += m.size(); });
  return total;
}

std::size_t count_gru_params(const CnnGruModel& model) {
  if (!model.params.gru) return 0;
  const auto& g = *model.params.gru;
  return g.W_z.size() + g.W_r.size() + g.W.size();
}

ForwardResult model_forward(const CnnGruModel& model, const WindowSample& sample) {
  const ModelConfig& cfg = model.config;
  const ModelParams& p = model.params;
  if (sample.inputs.size() != cfg.window) {
    throw ShapeError("model_forward: sample has " + std::to_string(sample.inputs.size()) +
                     " days, model window is " + std::to_string(cfg.window));
  }

  ForwardResult result;
  ForwardCache& cache = result.cache;
  const std::size_t text_dim = model.uses_conv() ? cfg.num_filters : cfg.embed_dim;
  cache.days.resize(sample.inputs.size());
  cache.day_vectors.reserve(sample.inputs.size());

  for (std::size_t d = 0; d < sample.inputs.size(); ++d) {
    const AlignedDay& day = sample.inputs[d];
    if (day.features.rows() != cfg.market_features || day.features.cols() != 1) {
      throw ShapeError("model_forward: day " + format_date(day.date) + " has features " +
                       day.features.shape_string() + ", expected " +
                       std::to_string(cfg.market_features) + "x1");
    }
    Matrix text(text_dim, 1);
    DayCache& day_cache = cache.days[d];
    if (day.has_text && !day.docs.empty()) {
      for (const auto& raw_ids : day.docs) {
        DocCache doc;
        doc.ids = fit_length(raw_ids, cfg.max_doc_len);
        Matrix embedded = embed_lookup(p.embedding, doc.ids, cfg.max_doc_len);
        if (model.uses_conv()) {
          Conv1DResult conv = conv1d_forward(*p.conv, embedded);
          doc.pool = global_max_pool(activate(Activation::relu, conv.output));
          doc.pre_activation = std::move(conv.output);
          doc.conv = std::move(conv.cache);
          add_into(text, doc.pool.pooled);
        } else {
          add_into(text, column_mean_of_tokens(embedded, doc.ids, doc.token_count));
        }
        day_cache.docs.push_back(std::move(doc));
      }
      for (double& v : text.values()) v /= static_cast<double>(day.docs.size());
    }
    cache.day_vectors.push_back(concat_rows(text, day.features));
  }

  if (model.uses_gru()) {
    cache.gru = gru_forward(*p.gru, cache.day_vectors);
    if (model.uses_attention()) {
      AttentionResult att = attention_pool(*p.attention, cache.gru->hiddens);
      cache.pooled = std::move(att.context);
      cache.attention = std::move(att.cache);
    } else {
      cache.pooled = cache.gru->hiddens.back();
    }
  } else {
    cache.pooled = Matrix(model.day_vector_size(), 1);
    for (const Matrix& v : cache.day_vectors) add_into(cache.pooled, v);
    for (double& v : cache.pooled.values()) v /= static_cast<double>(cache.day_vectors.size());
  }

  cache.reg_out = dense_forward(p.reg_head, cache.pooled);
  cache.logits = dense_forward(p.cls_head, cache.pooled);
  result.price_pred = cache.reg_out(0, 0);
  result.class_logits = cache.logits;
  return result;
}

Targets targets_of(const WindowSample& sample) {
  return {sample.target_return, index_of(sample.target_class)};
}

LossBreakdown sample_loss(const CnnGruModel& model, const ForwardResult& forward,
                          const Targets& targets) {
  LossBreakdown loss;
  const double diff = forward.price_pred - targets.target_return;
  loss.mse = diff * diff;
  loss.ce = cross_entropy(forward.class_logits, targets.target_class);
  loss.joint = joint_loss(loss.mse, loss.ce, JointLossConfig{model.config.lambda});
  return loss;
}

LossBreakdown model_backward(const CnnGruModel& model, const ForwardCache& cache,
                             const Targets& targets, ModelParams& grads) {
  const ModelConfig& cfg = model.config;
  const ModelParams& p = model.params;
  const double lambda = cfg.lambda;
  if (cache.day_vectors.size() != cfg.window || cache.days.size() != cfg.window) {
    throw ShapeError("model_backward: cache does not match the model window");
  }
  if (model.uses_gru() != cache.gru.has_value() ||
      model.uses_attention() != cache.attention.has_value()) {
    throw ShapeError("model_backward: cache was produced by a different architecture");
  }

  LossBreakdown loss;
  const double diff = cache.reg_out(0, 0) - targets.target_return;
  loss.mse = diff * diff;
  loss.ce = cross_entropy(cache.logits, targets.target_class);
  loss.joint = joint_loss(loss.mse, loss.ce, JointLossConfig{lambda});

  const Matrix d_reg(1, 1, lambda * 2.0 * diff);
  const Matrix d_logits = scale(cross_entropy_grad(cache.logits, targets.target_class), 1.0 - lambda);
  Matrix d_pooled = dense_backward(p.reg_head, cache.pooled, d_reg, grads.reg_head);
  add_into(d_pooled, dense_backward(p.cls_head, cache.pooled, d_logits, grads.cls_head));

  const std::size_t steps = cache.day_vectors.size();
  std::vector<Matrix> d_days;
  if (model.uses_gru()) {
    std::vector<Matrix> hidden_grads(steps, Matrix(cfg.gru_hidden, 1));
    if (model.uses_attention()) {
      hidden_grads = attention_backward(*p.attention, *cache.attention, d_pooled, *grads.attention);
    } else {
      hidden_grads.back() = d_pooled;
    }
    d_days = gru_backward(*p.gru, cache.gru->caches, hidden_grads, *grads.gru).inputs;
  } else {
    d_days.assign(steps, scale(d_pooled, 1.0 / static_cast<double>(steps)));
  }

  const std::size_t text_dim = model.uses_conv() ? cfg.num_filters : cfg.embed_dim;
  for (std::size_t d = 0; d < steps; ++d) {
    const DayCache& day = cache.days[d];
    if (day.docs.empty()) continue;
    const Matrix d_text =
        scale(slice_rows(d_days[d], 0, text_dim), 1.0 / static_cast<double>(day.docs.size()));
    for (const DocCache& doc : day.docs) {
      Matrix d_embedded(cfg.max_doc_len, cfg.embed_dim);
      if (model.uses_conv()) {
        Matrix d_act = global_max_pool_backward(doc.pool, d_text);
        auto pre = doc.pre_activation.values();
        auto g = d_act.values();
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (pre[i] <= 0.0) g[i] = 0.0;
        }
        d_embedded = conv1d_backward(*p.conv, doc.conv, d_act, *grads.conv);
      } else if (doc.token_count > 0) {
        const double share = 1.0 / static_cast<double>(doc.token_count);
        for (std::size_t i = 0; i < doc.ids.size(); ++i) {
          if (doc.ids[i] == Vocabulary::kPad) continue;
          for (std::size_t j = 0; j < cfg.embed_dim; ++j) d_embedded(i, j) = d_text(j, 0) * share;
        }
      }
      embed_backward(doc.ids, d_embedded, grads.embedding.table);
    }
  }
  return loss;
}

}  // namespace sentirisk
