// SPDX-License-Identifier: Apache-2.0
//
// Regression and classification losses, the weighted joint objective, and
// the two parameter update rules (plain gradient descent and Adam).
#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>

#include "sentirisk/matrix.hpp"

namespace sentirisk {

double mse(const Matrix& pred, const Matrix& target);
/// d mse / d pred.
Matrix mse_grad(const Matrix& pred, const Matrix& target);

/// -log(softmax(logits)[label]), probability clamped below at 1e-12.
double cross_entropy(const Matrix& logits, std::size_t label);
/// d cross_entropy / d logits = softmax(logits) - onehot(label).
Matrix cross_entropy_grad(const Matrix& logits, std::size_t label);

struct JointLossConfig {
  double lambda = 0.5;  ///< weight on the MSE term; (1 - lambda) goes to cross-entropy

  void validate() const;
};

double joint_loss(double mse_value, double ce_value, const JointLossConfig& cfg);

struct SGDConfig {
  double alpha = 1e-4;
  double weight_decay = 0.0;

  void validate() const;
};

/// param - alpha * (grad + weight_decay * param).
Matrix sgd_step(const Matrix& param, const Matrix& grad, const SGDConfig& cfg);
void sgd_update(Matrix& param, const Matrix& grad, const SGDConfig& cfg);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  ///< L2 term added to the gradient

  void validate() const;
};

struct AdamState {
  Matrix m;
  Matrix v;
  std::uint64_t t = 0;

  static AdamState zeros_like(const Matrix& param);
};

std::pair<Matrix, AdamState> adam_step(const Matrix& param, const Matrix& grad,
                                       const AdamState& state, const AdamConfig& cfg);
void adam_update(Matrix& param, const Matrix& grad, AdamState& state, const AdamConfig& cfg);

}  // namespace sentirisk
