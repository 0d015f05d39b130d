#include <cmath>
#include <cstring>
#include <random>

#include "doctest.h"

#include "cascnn/ops.hpp"
#include "cascnn/optim.hpp"
#include "oracles.hpp"

using cascnn::AdamConfig;
using cascnn::Parameter;
using cascnn::Tensor;

TEST_CASE("xavier_normal is deterministic per seed") {
  std::mt19937_64 rng1(11), rng2(11);
  Tensor a = cascnn::xavier_normal({4, 7}, 7, 4, rng1);
  Tensor b = cascnn::xavier_normal({4, 7}, 7, 4, rng2);
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  CHECK_THROWS_AS(cascnn::xavier_normal({2}, 0, 1, rng1), cascnn::ConfigError);
}

TEST_CASE("xavier_normal moments match the target distribution") {
  const std::size_t fan_in = 30, fan_out = 10;
  const std::size_t draws = 100000;
  std::mt19937_64 rng(12);
  Tensor t = cascnn::xavier_normal({draws}, fan_in, fan_out, rng);

  double mean = 0.0;
  for (double v : t.values()) mean += v;
  mean /= static_cast<double>(draws);
  double var = 0.0;
  for (double v : t.values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(draws - 1);

  const double target_var = 2.0 / static_cast<double>(fan_in + fan_out);
  CHECK(std::abs(var - target_var) < 0.05 * target_var);
  // Mean within three standard errors.
  const double stderr_mean = std::sqrt(target_var / static_cast<double>(draws));
  CHECK(std::abs(mean) < 3.0 * stderr_mean);
}

TEST_CASE("adam: zero gradient leaves the parameter unchanged") {
  Parameter p("p", Tensor::from_values({3}, {1.0, -2.0, 0.25}));
  const std::vector<double> before = p.value.values();
  p.value.zero_grad();
  std::vector<Parameter*> params{&p};
  adam_step(params, AdamConfig{});
  CHECK(p.value.values() == before);
  CHECK(p.steps == 1);
}

TEST_CASE("adam: first step moves by about lr in the gradient direction") {
  Parameter p("p", Tensor::from_values({2}, {0.5, -0.5}));
  Tensor loss = cascnn::sum(cascnn::mul(p.value, Tensor::from_values({2}, {3.0, -7.0})));
  loss.backward();  // gradient is (3, -7)
  std::vector<Parameter*> params{&p};
  const AdamConfig config{};
  adam_step(params, config);
  // Bias-corrected first step: update = lr * g / (|g| + eps) ~ lr * sign(g).
  CHECK(p.value.at(0) == doctest::Approx(0.5 - config.lr).epsilon(1e-6));
  CHECK(p.value.at(1) == doctest::Approx(-0.5 + config.lr).epsilon(1e-6));
}

TEST_CASE("adam: two steps with constant gradient match a scalar trace") {
  const double g = 2.5;
  const AdamConfig config{};

  // Hand evaluation of the update rule.
  double m = 0.0, v = 0.0, x = 1.0;
  for (int step = 1; step <= 2; ++step) {
    m = config.beta1 * m + (1 - config.beta1) * g;
    v = config.beta2 * v + (1 - config.beta2) * g * g;
    const double m_hat = m / (1 - std::pow(config.beta1, step));
    const double v_hat = v / (1 - std::pow(config.beta2, step));
    x -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }

  Parameter p("p", Tensor::scalar(1.0));
  std::vector<Parameter*> params{&p};
  for (int step = 0; step < 2; ++step) {
    p.value.zero_grad();
    Tensor loss = cascnn::scale(p.value, g);
    loss.backward();
    adam_step(params, config);
  }
  CHECK(p.value.item() == doctest::Approx(x).epsilon(1e-12));
}

TEST_CASE("sgd step is a plain scaled subtraction") {
  Parameter p("p", Tensor::from_values({2}, {1.0, 2.0}));
  p.value.zero_grad();
  Tensor loss = cascnn::sum(cascnn::mul(p.value, p.value));
  loss.backward();  // gradient 2x
  std::vector<Parameter*> params{&p};
  sgd_step(params, 0.1);
  CHECK(p.value.at(0) == doctest::Approx(1.0 - 0.1 * 2.0));
  CHECK(p.value.at(1) == doctest::Approx(2.0 - 0.1 * 4.0));
}
