// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "gradient_suite.hpp"
#include "sentirisk/loss.hpp"
#include "synthetic.hpp"

using namespace sentirisk;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("mse") {
  const Matrix p = Matrix::column({0.5, -1.0});
  CHECK(mse(p, p) == 0.0);
  CHECK(mse(Matrix::column({1}), Matrix::column({3})) == 4.0);

  std::mt19937_64 rng(1);
  const Matrix a = testing::random_matrix(7, 1, rng);
  const Matrix b = testing::random_matrix(7, 1, rng);
  double want = 0.0;
  for (std::size_t i = 0; i < 7; ++i) want += (a(i, 0) - b(i, 0)) * (a(i, 0) - b(i, 0));
  CHECK_THAT(mse(a, b), WithinRel(want / 7.0, 1e-14));
}

TEST_CASE("cross entropy") {
  CHECK_THAT(cross_entropy(Matrix::column({0, 0, 0}), 1), WithinAbs(std::log(3.0), 1e-15));
  CHECK_THAT(cross_entropy(Matrix::column({100, 0, 0}), 0), WithinAbs(0.0, 1e-40));
  CHECK(std::isfinite(cross_entropy(Matrix::column({-1000, 1000, 0}), 0)));
  CHECK_THROWS_AS(cross_entropy(Matrix::column({0, 0, 0}), 3), std::out_of_range);

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix logits = testing::random_matrix(3, 1, rng, 5.0);
    const std::size_t label = rng() % 3;
    long double total = 0.0L;
    for (std::size_t k = 0; k < 3; ++k) total += std::exp(static_cast<long double>(logits(k, 0)));
    const long double want = -(logits(label, 0) - std::log(total));
    CHECK_THAT(cross_entropy(logits, label), WithinRel(static_cast<double>(want), 1e-13));
  }
}

TEST_CASE("joint loss") {
  CHECK(joint_loss(0.2, 0.8, {1.0}) == 0.2);
  CHECK(joint_loss(0.2, 0.8, {0.0}) == 0.8);
  CHECK_THAT(joint_loss(0.2, 0.8, {0.5}), WithinAbs(0.5, 1e-16));
  CHECK_THROWS_AS(JointLossConfig{1.5}.validate(), std::invalid_argument);
}

TEST_CASE("loss gradients match finite differences") {
  for (const auto& c : testing::check_losses(9)) {
    INFO(c.name << " worst " << c.result.worst);
    CHECK(c.result.max_rel_error <= 1e-4);
  }
}

TEST_CASE("sgd") {
  const Matrix w = Matrix::column({1.0});
  CHECK(sgd_step(w, Matrix::column({2.0}), {0.1, 0.0})(0, 0) == 0.8);
  CHECK(sgd_step(w, Matrix::column({0.0}), {0.1, 0.0}) == w);
  CHECK_THAT(sgd_step(w, Matrix::column({0.0}), {0.1, 0.1})(0, 0), WithinAbs(0.99, 1e-15));
}

TEST_CASE("adam first step moves by about lr") {
  const AdamConfig cfg{1e-3};
  for (double g : {1e-4, 0.3, 50.0, -7.0}) {
    const Matrix p = Matrix::column({2.0});
    const auto [next, state] = adam_step(p, Matrix::column({g}), AdamState::zeros_like(p), cfg);
    CHECK_THAT(std::abs(next(0, 0) - 2.0), WithinRel(1e-3, 1e-3));
    CHECK(state.t == 1);
  }
  Matrix p = Matrix::column({0.5, -0.5});
  AdamState s = AdamState::zeros_like(p);
  for (int i = 0; i < 5; ++i) adam_update(p, Matrix(2, 1), s, cfg);
  CHECK(p == Matrix::column({0.5, -0.5}));
}

TEST_CASE("adam matches the textbook recurrence") {
  std::mt19937_64 rng(4);
  const AdamConfig cfg{1e-2, 0.9, 0.999, 1e-8, 0.0};
  Matrix p = testing::random_matrix(3, 2, rng);
  AdamState s = AdamState::zeros_like(p);
  std::vector<double> ref(p.values().begin(), p.values().end());
  std::vector<double> m(6, 0.0), v(6, 0.0);
  for (int t = 1; t <= 10; ++t) {
    const Matrix g = testing::random_matrix(3, 2, rng);
    adam_update(p, g, s, cfg);
    for (std::size_t i = 0; i < 6; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g.values()[i];
      v[i] = 0.999 * v[i] + 0.001 * g.values()[i] * g.values()[i];
      const double mh = m[i] / (1.0 - std::pow(0.9, t));
      const double vh = v[i] / (1.0 - std::pow(0.999, t));
      ref[i] -= 1e-2 * mh / (std::sqrt(vh) + 1e-8);
      CHECK_THAT(p.values()[i], WithinAbs(ref[i], 1e-15));
    }
  }
}

TEST_CASE("optimizer configs validate") {
  CHECK_THROWS_AS(AdamConfig{0.0}.validate(), std::invalid_argument);
  CHECK_THROWS_AS((AdamConfig{1e-3, 1.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((SGDConfig{-1.0}).validate(), std::invalid_argument);
  CHECK_NOTHROW(AdamConfig{}.validate());
}
