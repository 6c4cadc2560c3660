// SPDX-License-Identifier: Apache-2.0
#include "sentirisk/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sentirisk {
namespace {

void require_same(const char* op, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

void require_label(const Matrix& logits, std::size_t label) {
  if (logits.cols() != 1 || logits.rows() == 0) {
    throw ShapeError("cross_entropy: logits must be a column, got " + logits.shape_string());
  }
  if (label >= logits.rows()) {
    throw std::out_of_range("cross_entropy: label " + std::to_string(label) +
                            " out of range for " + std::to_string(logits.rows()) + " classes");
  }
}

}  // namespace

double mse(const Matrix& pred, const Matrix& target) {
  require_same("mse", pred, target);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.values()[i] - target.values()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

Matrix mse_grad(const Matrix& pred, const Matrix& target) {
  require_same("mse_grad", pred, target);
  Matrix g = subtract(pred, target);
  const double k = 2.0 / static_cast<double>(pred.size());
  for (double& v : g.values()) v *= k;
  return g;
}

double cross_entropy(const Matrix& logits, std::size_t label) {
  require_label(logits, label);
  const Matrix p = softmax(logits);
  return -std::log(std::max(p(label, 0), 1e-12));
}

Matrix cross_entropy_grad(const Matrix& logits, std::size_t label) {
  require_label(logits, label);
  Matrix g = softmax(logits);
  g(label, 0) -= 1.0;
  return g;
}

void JointLossConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("joint loss lambda must lie in [0, 1], got " +
                                std::to_string(lambda));
  }
}

double joint_loss(double mse_value, double ce_value, const JointLossConfig& cfg) {
  return cfg.lambda * mse_value + (1.0 - cfg.lambda) * ce_value;
}

void SGDConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("sgd alpha must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("sgd weight_decay must be >= 0");
}

Matrix sgd_step(const Matrix& param, const Matrix& grad, const SGDConfig& cfg) {
  Matrix out = param;
  sgd_update(out, grad, cfg);
  return out;
}

void sgd_update(Matrix& param, const Matrix& grad, const SGDConfig& cfg) {
  require_same("sgd_step", param, grad);
  auto p = param.values();
  auto g = grad.values();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= cfg.alpha * (g[i] + cfg.weight_decay * p[i]);
}

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("adam lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("adam eps must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("adam weight_decay must be >= 0");
}

AdamState AdamState::zeros_like(const Matrix& param) {
  return AdamState{Matrix(param.rows(), param.cols()), Matrix(param.rows(), param.cols()), 0};
}

std::pair<Matrix, AdamState> adam_step(const Matrix& param, const Matrix& grad,
                                       const AdamState& state, const AdamConfig& cfg) {
  Matrix p = param;
  AdamState s = state;
  adam_update(p, grad, s, cfg);
  return {std::move(p), std::move(s)};
}

void adam_update(Matrix& param, const Matrix& grad, AdamState& state, const AdamConfig& cfg) {
  require_same("adam_step", param, grad);
  require_same("adam_step m", param, state.m);
  require_same("adam_step v", param, state.v);
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  auto p = param.values();
  auto g = grad.values();
  auto m = state.m.values();
  auto v = state.v.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = g[i] + cfg.weight_decay * p[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    p[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

}  // namespace sentirisk
