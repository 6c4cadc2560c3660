// SPDX-License-Identifier: Apache-2.0
#include "sentirisk/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sentirisk {
namespace {

// acc += u * v^T for column vectors u, v.
void outer_into(Matrix& acc, const Matrix& u, const Matrix& v) {
  if (acc.rows() != u.rows() || acc.cols() != v.rows() || u.cols() != 1 || v.cols() != 1) {
    throw ShapeError("outer_into: " + acc.shape_string() + " += " + u.shape_string() + " * " +
                     v.shape_string() + "^T");
  }
  for (std::size_t i = 0; i < u.rows(); ++i) {
    const double ui = u(i, 0);
    for (std::size_t j = 0; j < v.rows(); ++j) acc(i, j) += ui * v(j, 0);
  }
}

void require_column_of(const char* what, const Matrix& m, std::size_t n) {
  if (m.rows() != n || m.cols() != 1) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(n) + "x1, got " +
                     m.shape_string());
  }
}

}  // namespace

double uniform_symmetric(std::mt19937_64& rng, double bound) {
  // 53 random mantissa bits; identical on every standard library.
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return (2.0 * unit - 1.0) * bound;
}

void glorot_uniform(Matrix& m, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : m.values()) v = uniform_symmetric(rng, bound);
}

// ---------------------------------------------------------------------------

std::vector<TokenId> fit_length(std::span<const TokenId> ids, std::size_t max_len) {
  std::vector<TokenId> out(max_len, 0);
  const std::size_t n = std::min(ids.size(), max_len);
  for (std::size_t i = 0; i < n; ++i) out[i] = ids[i];
  return out;
}

Matrix embed_lookup(const EmbeddingTable& table, std::span<const TokenId> ids,
                    std::size_t max_len) {
  if (max_len == 0) throw ShapeError("embed_lookup: max_len must be positive");
  const std::size_t dim = table.embed_dim();
  Matrix out(max_len, dim);
  const std::size_t n = std::min(ids.size(), max_len);
  for (std::size_t i = 0; i < n; ++i) {
    const TokenId id = ids[i];
    if (id >= table.vocab_size()) {
      throw std::out_of_range("embed_lookup: token id " + std::to_string(id) +
                       " out of range for vocabulary of size " +
                       std::to_string(table.vocab_size()));
    }
    if (id == 0) continue;  // id 0 is padding and embeds to zeros
    for (std::size_t j = 0; j < dim; ++j) out(i, j) = table.table(id, j);
  }
  return out;
}

void embed_backward(std::span<const TokenId> ids, const Matrix& upstream, Matrix& table_grad) {
  if (upstream.cols() != table_grad.cols() || upstream.rows() != ids.size()) {
    throw ShapeError("embed_backward: upstream " + upstream.shape_string() + " for " +
                     std::to_string(ids.size()) + " ids and table " + table_grad.shape_string());
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const TokenId id = ids[i];
    if (id == 0) continue;
    if (id >= table_grad.rows()) {
      throw ShapeError("embed_backward: token id " + std::to_string(id) + " out of range");
    }
    for (std::size_t j = 0; j < upstream.cols(); ++j) table_grad(id, j) += upstream(i, j);
  }
}

// ---------------------------------------------------------------------------

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel_width,
                                 std::size_t stride) {
  if (kernel_width == 0 || stride == 0) {
    throw ShapeError("conv1d: kernel width and stride must be positive");
  }
  if (length < kernel_width) {
    throw ShapeError("conv1d: input length " + std::to_string(length) +
                     " shorter than kernel width " + std::to_string(kernel_width));
  }
  return (length - kernel_width) / stride + 1;
}

Conv1DResult conv1d_forward(const Conv1DParams& params, const Matrix& input) {
  if (params.kernels.empty()) throw ShapeError("conv1d_forward: no filters");
  const std::size_t width = params.kernel_width();
  const std::size_t channels = params.in_channels();
  if (input.cols() != channels) {
    throw ShapeError("conv1d_forward: input " + input.shape_string() + " has " +
                     std::to_string(input.cols()) + " channels, kernels expect " +
                     std::to_string(channels));
  }
  const std::size_t out_len = conv1d_output_length(input.rows(), width, params.stride);
  Matrix out(out_len, params.num_filters());
  for (std::size_t t = 0; t < out_len; ++t) {
    const std::size_t start = t * params.stride;
    for (std::size_t f = 0; f < params.num_filters(); ++f) {
      const Matrix& kernel = params.kernels[f];
      double acc = 0.0;
      for (std::size_t k = 0; k < width; ++k)
        for (std::size_t c = 0; c < channels; ++c) acc += input(start + k, c) * kernel(k, c);
      out(t, f) = acc;
    }
  }
  return {std::move(out), Conv1DCache{input}};
}

Matrix conv1d_backward(const Conv1DParams& params, const Conv1DCache& cache,
                       const Matrix& upstream, Conv1DParams& grads) {
  const Matrix& input = cache.input;
  const std::size_t width = params.kernel_width();
  const std::size_t channels = params.in_channels();
  const std::size_t out_len = conv1d_output_length(input.rows(), width, params.stride);
  if (upstream.rows() != out_len || upstream.cols() != params.num_filters()) {
    throw ShapeError("conv1d_backward: upstream " + upstream.shape_string() + ", expected " +
                     std::to_string(out_len) + "x" + std::to_string(params.num_filters()));
  }
  if (grads.kernels.size() != params.kernels.size()) {
    throw ShapeError("conv1d_backward: gradient holder has the wrong filter count");
  }
  Matrix d_input(input.rows(), input.cols());
  for (std::size_t t = 0; t < out_len; ++t) {
    const std::size_t start = t * params.stride;
    for (std::size_t f = 0; f < params.num_filters(); ++f) {
      const double g = upstream(t, f);
      if (g == 0.0) continue;
      const Matrix& kernel = params.kernels[f];
      Matrix& d_kernel = grads.kernels[f];
      for (std::size_t k = 0; k < width; ++k) {
        for (std::size_t c = 0; c < channels; ++c) {
          d_kernel(k, c) += g * input(start + k, c);
          d_input(start + k, c) += g * kernel(k, c);
        }
      }
    }
  }
  return d_input;
}

// ---------------------------------------------------------------------------

MaxPoolResult global_max_pool(const Matrix& featmap) {
  if (featmap.empty()) throw ShapeError("global_max_pool: empty feature map");
  MaxPoolResult result{Matrix(featmap.cols(), 1), std::vector<std::size_t>(featmap.cols(), 0),
                       featmap.rows()};
  for (std::size_t f = 0; f < featmap.cols(); ++f) {
    std::size_t best = 0;
    for (std::size_t t = 1; t < featmap.rows(); ++t) {
      if (featmap(t, f) > featmap(best, f)) best = t;
    }
    result.argmax[f] = best;
    result.pooled(f, 0) = featmap(best, f);
  }
  return result;
}

Matrix global_max_pool_backward(const MaxPoolResult& memo, const Matrix& upstream) {
  require_column_of("global_max_pool_backward", upstream, memo.argmax.size());
  Matrix d_featmap(memo.length, memo.argmax.size());
  for (std::size_t f = 0; f < memo.argmax.size(); ++f) d_featmap(memo.argmax[f], f) = upstream(f, 0);
  return d_featmap;
}

// ---------------------------------------------------------------------------

GRUStepCache gru_step(const GRUParams& params, const Matrix& h_prev, const Matrix& x_t) {
  const std::size_t hidden = params.hidden_size();
  require_column_of("gru_step h_prev", h_prev, hidden);
  require_column_of("gru_step x_t", x_t, params.input_size());
  if (!params.W_r.same_shape(params.W_z) || !params.W.same_shape(params.W_z)) {
    throw ShapeError("gru_step: gate matrices disagree in shape");
  }

  GRUStepCache cache;
  const Matrix hx = concat_rows(h_prev, x_t);
  cache.z_t = activate(Activation::sigmoid, matmul(params.W_z, hx));
  cache.r_t = activate(Activation::sigmoid, matmul(params.W_r, hx));
  const Matrix rhx = concat_rows(hadamard(cache.r_t, h_prev), x_t);
  cache.h_tilde = activate(Activation::tanh, matmul(params.W, rhx));

  cache.h_t = Matrix(hidden, 1);
  for (std::size_t i = 0; i < hidden; ++i) {
    const double z = cache.z_t(i, 0);
    cache.h_t(i, 0) = (1.0 - z) * h_prev(i, 0) + z * cache.h_tilde(i, 0);
  }
  cache.x_t = x_t;
  cache.h_prev = h_prev;
  return cache;
}

GRUStepGrads gru_step_backward(const GRUParams& params, const GRUStepCache& cache,
                               const Matrix& dh_t, GRUParams& grads) {
  const std::size_t hidden = params.hidden_size();
  require_column_of("gru_step_backward dh_t", dh_t, hidden);
  if (!grads.W_z.same_shape(params.W_z) || !grads.W_r.same_shape(params.W_r) ||
      !grads.W.same_shape(params.W)) {
    throw ShapeError("gru_step_backward: gradient holder shape mismatch");
  }

  Matrix dz(hidden, 1);
  Matrix d_tilde(hidden, 1);
  Matrix dh_prev(hidden, 1);
  for (std::size_t i = 0; i < hidden; ++i) {
    const double g = dh_t(i, 0);
    const double z = cache.z_t(i, 0);
    dz(i, 0) = g * (cache.h_tilde(i, 0) - cache.h_prev(i, 0));
    d_tilde(i, 0) = g * z;
    dh_prev(i, 0) = g * (1.0 - z);
  }

  // Candidate: h~ = tanh(W [r*h; x]).
  Matrix d_pre_tilde(hidden, 1);
  for (std::size_t i = 0; i < hidden; ++i) {
    const double ht = cache.h_tilde(i, 0);
    d_pre_tilde(i, 0) = d_tilde(i, 0) * (1.0 - ht * ht);
  }
  const Matrix rh = hadamard(cache.r_t, cache.h_prev);
  outer_into(grads.W, d_pre_tilde, concat_rows(rh, cache.x_t));
  const Matrix d_rhx = matmul_at(params.W, d_pre_tilde);

  Matrix dx = slice_rows(d_rhx, hidden, d_rhx.rows() - hidden);
  Matrix dr(hidden, 1);
  for (std::size_t i = 0; i < hidden; ++i) {
    const double d_rh = d_rhx(i, 0);
    dr(i, 0) = d_rh * cache.h_prev(i, 0);
    dh_prev(i, 0) += d_rh * cache.r_t(i, 0);
  }

  // Gates: z = sigmoid(W_z [h; x]), r = sigmoid(W_r [h; x]).
  Matrix d_pre_z(hidden, 1);
  Matrix d_pre_r(hidden, 1);
  for (std::size_t i = 0; i < hidden; ++i) {
    const double z = cache.z_t(i, 0);
    const double r = cache.r_t(i, 0);
    d_pre_z(i, 0) = dz(i, 0) * z * (1.0 - z);
    d_pre_r(i, 0) = dr(i, 0) * r * (1.0 - r);
  }
  const Matrix hx = concat_rows(cache.h_prev, cache.x_t);
  outer_into(grads.W_z, d_pre_z, hx);
  outer_into(grads.W_r, d_pre_r, hx);
  Matrix d_hx = matmul_at(params.W_z, d_pre_z);
  add_into(d_hx, matmul_at(params.W_r, d_pre_r));

  for (std::size_t i = 0; i < hidden; ++i) dh_prev(i, 0) += d_hx(i, 0);
  for (std::size_t i = 0; i < dx.rows(); ++i) dx(i, 0) += d_hx(hidden + i, 0);
  return {std::move(dh_prev), std::move(dx)};
}

GRUSequence gru_forward(const GRUParams& params, std::span<const Matrix> inputs,
                        const Matrix& h0) {
  if (inputs.empty()) throw ShapeError("gru_forward: empty input sequence");
  GRUSequence seq;
  seq.hiddens.reserve(inputs.size());
  seq.caches.reserve(inputs.size());
  Matrix h = h0.empty() ? Matrix(params.hidden_size(), 1) : h0;
  for (const Matrix& x : inputs) {
    seq.caches.push_back(gru_step(params, h, x));
    h = seq.caches.back().h_t;
    seq.hiddens.push_back(h);
  }
  return seq;
}

GRUSequenceGrads gru_backward(const GRUParams& params, std::span<const GRUStepCache> caches,
                              std::span<const Matrix> hidden_grads, GRUParams& grads) {
  if (caches.empty()) throw ShapeError("gru_backward: empty cache sequence");
  if (hidden_grads.size() != caches.size()) {
    throw ShapeError("gru_backward: " + std::to_string(hidden_grads.size()) +
                     " hidden gradients for " + std::to_string(caches.size()) + " steps");
  }
  GRUSequenceGrads out;
  out.inputs.resize(caches.size());
  Matrix carry(params.hidden_size(), 1);
  for (std::size_t t = caches.size(); t-- > 0;) {
    Matrix dh = add(carry, hidden_grads[t]);
    GRUStepGrads step = gru_step_backward(params, caches[t], dh, grads);
    out.inputs[t] = std::move(step.x_t);
    carry = std::move(step.h_prev);
  }
  out.h0 = std::move(carry);
  return out;
}

// ---------------------------------------------------------------------------

AttentionResult attention_pool(const AttentionParams& params, std::span<const Matrix> hiddens) {
  if (hiddens.empty()) throw ShapeError("attention_pool: empty hidden sequence");
  const std::size_t hidden = params.W_a.cols();
  require_column_of("attention_pool u", params.u, params.W_a.rows());

  AttentionResult result;
  AttentionCache& cache = result.cache;
  cache.hiddens.assign(hiddens.begin(), hiddens.end());
  cache.projected.reserve(hiddens.size());
  Matrix scores(hiddens.size(), 1);
  for (std::size_t i = 0; i < hiddens.size(); ++i) {
    require_column_of("attention_pool hidden", hiddens[i], hidden);
    cache.projected.push_back(activate(Activation::tanh, matmul(params.W_a, hiddens[i])));
    const Matrix& p = cache.projected.back();
    double s = 0.0;
    for (std::size_t j = 0; j < p.rows(); ++j) s += params.u(j, 0) * p(j, 0);
    scores(i, 0) = s;
  }
  cache.weights = softmax(scores);
  result.context = Matrix(hidden, 1);
  for (std::size_t i = 0; i < hiddens.size(); ++i)
    axpy_into(result.context, cache.weights(i, 0), hiddens[i]);
  result.weights = cache.weights;
  return result;
}

std::vector<Matrix> attention_backward(const AttentionParams& params, const AttentionCache& cache,
                                       const Matrix& d_context, AttentionParams& grads) {
  const std::size_t steps = cache.hiddens.size();
  const std::size_t hidden = params.W_a.cols();
  require_column_of("attention_backward d_context", d_context, hidden);
  if (!grads.W_a.same_shape(params.W_a) || !grads.u.same_shape(params.u)) {
    throw ShapeError("attention_backward: gradient holder shape mismatch");
  }

  std::vector<double> d_weight(steps);
  double weighted = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < hidden; ++j) dot += cache.hiddens[i](j, 0) * d_context(j, 0);
    d_weight[i] = dot;
    weighted += cache.weights(i, 0) * dot;
  }

  std::vector<Matrix> d_hiddens;
  d_hiddens.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double w = cache.weights(i, 0);
    Matrix dh = scale(d_context, w);
    const double d_score = w * (d_weight[i] - weighted);
    const Matrix& p = cache.projected[i];
    Matrix d_pre(p.rows(), 1);
    for (std::size_t j = 0; j < p.rows(); ++j) {
      grads.u(j, 0) += d_score * p(j, 0);
      d_pre(j, 0) = d_score * params.u(j, 0) * (1.0 - p(j, 0) * p(j, 0));
    }
    outer_into(grads.W_a, d_pre, cache.hiddens[i]);
    add_into(dh, matmul_at(params.W_a, d_pre));
    d_hiddens.push_back(std::move(dh));
  }
  return d_hiddens;
}

// ---------------------------------------------------------------------------

Matrix dense_forward(const DenseParams& params, const Matrix& x) {
  require_column_of("dense_forward x", x, params.W.cols());
  require_column_of("dense_forward b", params.b, params.W.rows());
  Matrix y = matmul(params.W, x);
  add_into(y, params.b);
  return y;
}

Matrix dense_backward(const DenseParams& params, const Matrix& x, const Matrix& upstream,
                      DenseParams& grads) {
  require_column_of("dense_backward x", x, params.W.cols());
  require_column_of("dense_backward upstream", upstream, params.W.rows());
  outer_into(grads.W, upstream, x);
  add_into(grads.b, upstream);
  return matmul_at(params.W, upstream);
}

}  // namespace sentirisk
