#include <cstring>

#include "doctest.h"

#include "cascnn/ops.hpp"
#include "cascnn/tensor.hpp"
#include "oracles.hpp"

using cascnn::Tensor;

TEST_CASE("tensor construction and access") {
  Tensor t = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.rank() == 2);
  CHECK(t.size() == 6);
  CHECK(t.at(1, 2) == 6.0);
  t.at(0, 1) = 9.0;
  CHECK(t.values()[1] == 9.0);

  CHECK_THROWS_AS(Tensor::from_values({2, 2}, {1, 2, 3}), cascnn::DimensionError);
  CHECK_THROWS_AS(Tensor::zeros({0, 3}), cascnn::DimensionError);
  CHECK_THROWS_AS(t.item(), cascnn::UsageError);
  CHECK(Tensor::scalar(4.5).item() == 4.5);
}

TEST_CASE("backward requires a scalar") {
  Tensor t = Tensor::zeros({2, 2});
  CHECK_THROWS_AS(t.backward(), cascnn::UsageError);
  Tensor undefined;
  CHECK_THROWS_AS(undefined.backward(), cascnn::UsageError);
}

TEST_CASE("loss = sum(x) gives unit gradients") {
  Tensor x = Tensor::from_values({3}, {1.0, -2.0, 0.5});
  Tensor loss = cascnn::sum(x);
  loss.backward();
  for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("loss = sum(x*x) gives 2x") {
  Tensor x = Tensor::from_values({4}, {1.0, -2.0, 0.5, 3.0});
  Tensor loss = cascnn::sum(cascnn::mul(x, x));
  loss.backward();
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(x.grad()[i] == 2.0 * x.values()[i]);
}

TEST_CASE("gradient accumulation: two backward passes double the gradient") {
  std::mt19937_64 rng(7);
  Tensor x = oracles::random_tensor({3, 3}, rng);
  Tensor w = oracles::random_tensor({3, 3}, rng);

  auto build = [&]() { return cascnn::sum(cascnn::mul(cascnn::sigmoid(x), w)); };

  Tensor once = build();
  once.backward();
  const std::vector<double> single = x.grad();

  x.zero_grad();
  w.zero_grad();
  Tensor loss = build();
  loss.backward();
  loss.backward();
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(x.grad()[i] == 2.0 * single[i]);
}

TEST_CASE("forward and gradients are bit-deterministic") {
  auto run = [](std::uint64_t seed, std::vector<double>& grads) {
    std::mt19937_64 rng(seed);
    Tensor x = oracles::random_tensor({2, 4, 4}, rng);
    Tensor w = oracles::random_tensor({3, 2, 3, 3}, rng);
    Tensor b = oracles::random_tensor({3}, rng);
    Tensor loss = cascnn::sum(cascnn::relu(cascnn::conv2d_same(x, w, b)));
    loss.backward();
    grads = w.grad();
    return loss.item();
  };
  std::vector<double> g1, g2;
  const double l1 = run(99, g1);
  const double l2 = run(99, g2);
  CHECK(std::memcmp(&l1, &l2, sizeof(double)) == 0);
  REQUIRE(g1.size() == g2.size());
  CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
}

TEST_CASE("reshape preserves values and routes gradients") {
  Tensor x = Tensor::from_values({2, 2}, {1, 2, 3, 4});
  Tensor r = cascnn::reshape(x, {4});
  CHECK(r.values() == x.values());
  CHECK_THROWS_AS(cascnn::reshape(x, {3}), cascnn::DimensionError);
  Tensor loss = cascnn::sum(cascnn::mul(r, r));
  loss.backward();
  CHECK(x.grad()[2] == 6.0);
}
