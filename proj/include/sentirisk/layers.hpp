// SPDX-License-Identifier: Apache-2.0
//
// Forward and backward passes for the layers of the text/market model:
// embedding lookup, strided 1-D convolution, global max pooling, a bias-free
// GRU cell, additive attention pooling and dense layers.
//
// Backward functions accumulate parameter gradients into a caller-owned
// gradient struct of the same type as the parameters, so gradients can be
// summed across time steps, documents and batch items without extra copies.
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sentirisk/matrix.hpp"

namespace sentirisk {

using TokenId = std::uint32_t;

/// Deterministic uniform draw in [-bound, bound] from a 64-bit engine.
double uniform_symmetric(std::mt19937_64& rng, double bound);
/// Fills m with U[-s, s], s = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Matrix& m, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Embedding

/// vocab_size x embed_dim. Row 0 is the pad token: zero and never updated.
struct EmbeddingTable {
  Matrix table;

  std::size_t vocab_size() const { return table.rows(); }
  std::size_t embed_dim() const { return table.cols(); }
};

/// Pads with 0 or truncates ids to exactly max_len.
std::vector<TokenId> fit_length(std::span<const TokenId> ids, std::size_t max_len);

/// max_len x embed_dim; row i is table row ids[i] after padding/truncation,
/// zeros for pad ids. Ids past the table throw std::out_of_range.
Matrix embed_lookup(const EmbeddingTable& table, std::span<const TokenId> ids,
                    std::size_t max_len);

/// Scatters upstream rows into table_grad. Row 0 never receives gradient.
void embed_backward(std::span<const TokenId> ids, const Matrix& upstream, Matrix& table_grad);

// ---------------------------------------------------------------------------
// Conv1D

struct Conv1DParams {
  /// One kernel_width x in_channels matrix per filter.
  std::vector<Matrix> kernels;
  std::size_t stride = 3;

  std::size_t num_filters() const { return kernels.size(); }
  std::size_t kernel_width() const { return kernels.empty() ? 0 : kernels.front().rows(); }
  std::size_t in_channels() const { return kernels.empty() ? 0 : kernels.front().cols(); }
};

struct Conv1DCache {
  Matrix input;
};

struct Conv1DResult {
  Matrix output;  ///< out_len x num_filters, before any activation
  Conv1DCache cache;
};

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel_width, std::size_t stride);

Conv1DResult conv1d_forward(const Conv1DParams& params, const Matrix& input);

/// Returns the input gradient; kernel gradients accumulate into grads.kernels.
Matrix conv1d_backward(const Conv1DParams& params, const Conv1DCache& cache,
                       const Matrix& upstream, Conv1DParams& grads);

// ---------------------------------------------------------------------------
// Global max pooling over time

struct MaxPoolResult {
  Matrix pooled;                    ///< num_filters x 1
  std::vector<std::size_t> argmax;  ///< winning time index per filter, ties -> smallest
  std::size_t length = 0;           ///< out_len of the pooled feature map
};

MaxPoolResult global_max_pool(const Matrix& featmap);

/// Routes each filter's gradient to its winning time step.
Matrix global_max_pool_backward(const MaxPoolResult& memo, const Matrix& upstream);

// ---------------------------------------------------------------------------
// GRU

/// Gate weights acting on [h_prev; x_t]. No biases.
struct GRUParams {
  Matrix W_z;
  Matrix W_r;
  Matrix W;

  std::size_t hidden_size() const { return W_z.rows(); }
  std::size_t input_size() const { return W_z.cols() - W_z.rows(); }
};

struct GRUStepCache {
  Matrix x_t;
  Matrix h_prev;
  Matrix z_t;
  Matrix r_t;
  Matrix h_tilde;
  Matrix h_t;
};

/// One step:
///   z = sigmoid(W_z [h_prev; x]),  r = sigmoid(W_r [h_prev; x])
///   h~ = tanh(W [r * h_prev; x]),  h = (1 - z) * h_prev + z * h~
/// The new state is cache.h_t.
GRUStepCache gru_step(const GRUParams& params, const Matrix& h_prev, const Matrix& x_t);

struct GRUStepGrads {
  Matrix h_prev;
  Matrix x_t;
};

GRUStepGrads gru_step_backward(const GRUParams& params, const GRUStepCache& cache,
                               const Matrix& dh_t, GRUParams& grads);

struct GRUSequence {
  std::vector<Matrix> hiddens;
  std::vector<GRUStepCache> caches;
};

/// Folds gru_step over inputs. An empty h0 means zeros.
GRUSequence gru_forward(const GRUParams& params, std::span<const Matrix> inputs,
                        const Matrix& h0 = {});

struct GRUSequenceGrads {
  std::vector<Matrix> inputs;
  Matrix h0;
};

/// Backprop through time. hidden_grads[t] is the loss gradient arriving at
/// h_t from outside the recurrence (zero matrices are fine).
GRUSequenceGrads gru_backward(const GRUParams& params, std::span<const GRUStepCache> caches,
                              std::span<const Matrix> hidden_grads, GRUParams& grads);

// ---------------------------------------------------------------------------
// Additive attention pooling

struct AttentionParams {
  Matrix W_a;  ///< attention_dim x hidden
  Matrix u;    ///< attention_dim x 1
};

struct AttentionCache {
  std::vector<Matrix> hiddens;
  std::vector<Matrix> projected;  ///< tanh(W_a h_i)
  Matrix weights;                 ///< T x 1, softmax of the scores
};

struct AttentionResult {
  Matrix context;
  Matrix weights;
  AttentionCache cache;
};

/// score_i = u^T tanh(W_a h_i); weights = softmax(scores); context = sum_i w_i h_i.
AttentionResult attention_pool(const AttentionParams& params, std::span<const Matrix> hiddens);

/// Returns d loss / d h_i for every hidden state.
std::vector<Matrix> attention_backward(const AttentionParams& params, const AttentionCache& cache,
                                       const Matrix& d_context, AttentionParams& grads);

// ---------------------------------------------------------------------------
// Dense

struct DenseParams {
  Matrix W;  ///< out x in
  Matrix b;  ///< out x 1
};

Matrix dense_forward(const DenseParams& params, const Matrix& x);

/// Returns the input gradient; accumulates dW and db into grads.
Matrix dense_backward(const DenseParams& params, const Matrix& x, const Matrix& upstream,
                      DenseParams& grads);

}  // namespace sentirisk
