#include <random>

#include "doctest.h"

#include "cascnn/ops.hpp"
#include "oracles.hpp"

using cascnn::Tensor;
using oracles::random_tensor;

namespace {

// Finite-difference check of one operation against every differentiable input.
void check_op_gradients(const std::function<Tensor()>& forward, std::vector<Tensor*> leaves) {
  for (Tensor* leaf : leaves) leaf->zero_grad();
  Tensor loss_t = cascnn::sum(forward());
  loss_t.backward();
  auto loss_value = [&]() { return cascnn::sum(forward()).item(); };
  for (Tensor* leaf : leaves) {
    const std::vector<double> fd = oracles::fd_gradient(loss_value, *leaf);
    CHECK(oracles::gradients_close(leaf->grad(), fd));
  }
}

}  // namespace

TEST_CASE("conv2d_same: identity kernel reproduces the input") {
  std::mt19937_64 rng(1);
  Tensor input = random_tensor({1, 3, 3}, rng);
  Tensor weight = Tensor::zeros({1, 1, 3, 3});
  weight.at(0, 0, 1, 1) = 1.0;
  Tensor bias = Tensor::zeros({1});
  Tensor out = cascnn::conv2d_same(input, weight, bias);
  for (std::size_t i = 0; i < input.size(); ++i) CHECK(out.values()[i] == input.values()[i]);
}

TEST_CASE("conv2d_same: zero weights give a constant bias plane") {
  std::mt19937_64 rng(2);
  Tensor input = random_tensor({2, 4, 5}, rng);
  Tensor weight = Tensor::zeros({3, 2, 3, 3});
  Tensor bias = Tensor::from_values({3}, {0.5, -1.5, 2.0});
  Tensor out = cascnn::conv2d_same(input, weight, bias);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t x = 0; x < 4; ++x) {
      for (std::size_t y = 0; y < 5; ++y) CHECK(out.at(c, x, y) == bias.at(c));
    }
  }
}

TEST_CASE("conv2d_same: all-ones 3x3 kernel on a 2x2 input") {
  Tensor input = Tensor::from_values({1, 2, 2}, {1, 2, 3, 4});
  Tensor weight = Tensor::full({1, 1, 3, 3}, 1.0);
  Tensor bias = Tensor::zeros({1});
  Tensor expected = oracles::conv2d_brute(input, weight, bias);
  // Every 3x3 window covers the whole 2x2 input.
  for (double v : expected.values()) CHECK(v == 10.0);
  Tensor out = cascnn::conv2d_same(input, weight, bias);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.values()[i] == expected.values()[i]);
}

TEST_CASE("conv2d_same matches the brute-force oracle on random shapes") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> dim(1, 6);
  std::uniform_int_distribution<int> kpick(0, 2);
  const std::size_t kernel_sizes[] = {1, 3, 5};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t c_in = dim(rng) % 3 + 1;
    const std::size_t c_out = dim(rng) % 3 + 1;
    const std::size_t h = dim(rng);
    const std::size_t w = dim(rng);
    const std::size_t k = kernel_sizes[kpick(rng)];
    Tensor input = random_tensor({c_in, h, w}, rng);
    Tensor weight = random_tensor({c_out, c_in, k, k}, rng);
    Tensor bias = random_tensor({c_out}, rng);
    Tensor fast = cascnn::conv2d_same(input, weight, bias);
    Tensor brute = oracles::conv2d_brute(input, weight, bias);
    CHECK(oracles::max_rel_error(fast.values(), brute.values()) < 1e-12);
  }
}

TEST_CASE("conv2d_same rejects bad shapes with the offending axis") {
  Tensor input = Tensor::zeros({2, 3, 3});
  CHECK_THROWS_AS(cascnn::conv2d_same(input, Tensor::zeros({1, 3, 3, 3}), Tensor::zeros({1})),
                  cascnn::DimensionError);
  CHECK_THROWS_AS(cascnn::conv2d_same(input, Tensor::zeros({1, 2, 2, 2}), Tensor::zeros({1})),
                  cascnn::DimensionError);
  CHECK_THROWS_AS(cascnn::conv2d_same(input, Tensor::zeros({1, 2, 3, 3}), Tensor::zeros({2})),
                  cascnn::DimensionError);
  CHECK_THROWS_AS(cascnn::conv2d_same(input, Tensor::zeros({1, 2, 3, 5}), Tensor::zeros({1})),
                  cascnn::DimensionError);
}

TEST_CASE("conv1x1: identity weight reproduces the input") {
  std::mt19937_64 rng(4);
  Tensor input = random_tensor({3, 2, 2}, rng);
  Tensor weight = Tensor::zeros({3, 3});
  for (std::size_t i = 0; i < 3; ++i) weight.at(i, i) = 1.0;
  Tensor out = cascnn::conv1x1(input, weight, Tensor::zeros({3}));
  for (std::size_t i = 0; i < input.size(); ++i) CHECK(out.values()[i] == input.values()[i]);
}

TEST_CASE("conv1x1: row of ones sums the channels") {
  std::mt19937_64 rng(5);
  Tensor input = random_tensor({2, 3, 3}, rng);
  Tensor weight = Tensor::full({1, 2}, 1.0);
  Tensor out = cascnn::conv1x1(input, weight, Tensor::zeros({1}));
  for (std::size_t x = 0; x < 3; ++x) {
    for (std::size_t y = 0; y < 3; ++y) {
      CHECK(out.at(0, x, y) == doctest::Approx(input.at(0, x, y) + input.at(1, x, y)));
    }
  }
}

TEST_CASE("conv1x1 matches the per-position matrix product oracle") {
  std::mt19937_64 rng(6);
  Tensor input = random_tensor({2, 4, 4}, rng);
  Tensor weight = random_tensor({3, 2}, rng);
  Tensor bias = random_tensor({3}, rng);
  Tensor out = cascnn::conv1x1(input, weight, bias);
  Tensor expected = oracles::conv1x1_matmul(input, weight, bias);
  CHECK(oracles::max_rel_error(out.values(), expected.values()) < 1e-12);
}

TEST_CASE("conv1x1 equals conv2d_same with k=1 exactly") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t c_in = trial % 3 + 1;
    const std::size_t c_out = trial % 4 + 1;
    Tensor input = random_tensor({c_in, 3, 5}, rng);
    Tensor weight = random_tensor({c_out, c_in}, rng);
    Tensor bias = random_tensor({c_out}, rng);
    Tensor via_1x1 = cascnn::conv1x1(input, weight, bias);
    Tensor as_conv = cascnn::conv2d_same(input, cascnn::reshape(weight, {c_out, c_in, 1, 1}), bias);
    for (std::size_t i = 0; i < via_1x1.size(); ++i) {
      CHECK(via_1x1.values()[i] == as_conv.values()[i]);
    }
  }
}

TEST_CASE("global_avg_pool basics") {
  Tensor constant = Tensor::full({2, 3, 3}, 4.25);
  Tensor pooled = cascnn::global_avg_pool(constant);
  CHECK(pooled.at(0) == 4.25);
  CHECK(pooled.at(1) == 4.25);

  Tensor channel = Tensor::from_values({1, 2, 2}, {1, 3, 5, 7});
  CHECK(cascnn::global_avg_pool(channel).at(0) == 4.0);

  Tensor zeros = Tensor::zeros({3, 2, 2});
  Tensor pooled_zeros = cascnn::global_avg_pool(zeros);
  for (double v : pooled_zeros.values()) CHECK(v == 0.0);
}

TEST_CASE("dense basics and oracle") {
  std::mt19937_64 rng(8);
  Tensor x = random_tensor({3}, rng);

  Tensor eye = Tensor::zeros({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  Tensor out = cascnn::dense(x, eye, Tensor::zeros({3}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(out.at(i) == x.at(i));

  Tensor b = Tensor::from_values({2}, {3.5, -1.0});
  Tensor zero_w = Tensor::zeros({2, 3});
  Tensor biased = cascnn::dense(x, zero_w, b);
  CHECK(biased.at(0) == 3.5);
  CHECK(biased.at(1) == -1.0);

  Tensor w = random_tensor({3, 2}, rng);
  Tensor x2 = random_tensor({2}, rng);
  Tensor b3 = random_tensor({3}, rng);
  Tensor got = cascnn::dense(x2, w, b3);
  Tensor expected = oracles::dense_matvec(x2, w, b3);
  CHECK(oracles::max_rel_error(got.values(), expected.values()) < 1e-12);
}

TEST_CASE("activation and broadcast examples") {
  CHECK(cascnn::sigmoid(Tensor::scalar(0.0)).item() == 0.5);

  Tensor zero = Tensor::zeros({2, 2});
  Tensor v = Tensor::from_values({2}, {1, 2});
  Tensor rows = cascnn::broadcast_rows(zero, v);
  CHECK(rows.at(0, 0) == 1.0);
  CHECK(rows.at(0, 1) == 1.0);
  CHECK(rows.at(1, 0) == 2.0);
  CHECK(rows.at(1, 1) == 2.0);

  std::mt19937_64 rng(9);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({3, 4}, rng);
  Tensor sum_t = cascnn::add(a, b);
  Tensor prod = cascnn::mul(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(sum_t.values()[i] == a.values()[i] + b.values()[i]);
    CHECK(prod.values()[i] == a.values()[i] * b.values()[i]);
  }
  CHECK_THROWS_AS(cascnn::add(a, Tensor::zeros({4, 3})), cascnn::DimensionError);

  Tensor x = random_tensor({2, 3, 3}, rng);
  Tensor s = random_tensor({2}, rng);
  Tensor scaled = cascnn::scale_channels(x, s);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < 9; ++i) {
      CHECK(scaled.values()[c * 9 + i] == x.values()[c * 9 + i] * s.at(c));
    }
  }

  Tensor m3 = random_tensor({2, 3, 4}, rng);
  Tensor v3 = random_tensor({3}, rng);
  Tensor lifted = cascnn::add_row_vector(m3, v3);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(lifted.at(c, i, j) == m3.at(c, i, j) + v3.at(i));
      }
    }
  }
}

TEST_CASE("relu subgradient at zero is zero") {
  Tensor x = Tensor::from_values({3}, {-1.0, 0.0, 2.0});
  Tensor loss = cascnn::sum(cascnn::relu(x));
  loss.backward();
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 0.0);
  CHECK(x.grad()[2] == 1.0);
}

TEST_CASE("finite-difference gradients for every operation") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 100; ++trial) {
    // conv2d_same
    {
      const std::size_t k = (trial % 2 == 0) ? 3 : 5;
      Tensor input = random_tensor({2, 4, 4}, rng);
      Tensor weight = random_tensor({2, 2, k, k}, rng);
      Tensor bias = random_tensor({2}, rng);
      check_op_gradients([&]() { return cascnn::conv2d_same(input, weight, bias); },
                         {&input, &weight, &bias});
    }
    // conv1x1
    {
      Tensor input = random_tensor({3, 3, 3}, rng);
      Tensor weight = random_tensor({2, 3}, rng);
      Tensor bias = random_tensor({2}, rng);
      check_op_gradients([&]() { return cascnn::conv1x1(input, weight, bias); },
                         {&input, &weight, &bias});
    }
    // dense
    {
      Tensor input = random_tensor({4}, rng);
      Tensor weight = random_tensor({3, 4}, rng);
      Tensor bias = random_tensor({3}, rng);
      check_op_gradients([&]() { return cascnn::dense(input, weight, bias); },
                         {&input, &weight, &bias});
    }
    // global_avg_pool
    {
      Tensor input = random_tensor({3, 2, 4}, rng);
      check_op_gradients([&]() { return cascnn::global_avg_pool(input); }, {&input});
    }
    // activations and elementwise ops; inputs shifted away from the relu kink
    {
      Tensor a = random_tensor({3, 3}, rng, 0.2, 1.2);
      Tensor b = random_tensor({3, 3}, rng, -1.2, -0.2);
      check_op_gradients([&]() { return cascnn::relu(cascnn::mul(a, b)); }, {&a, &b});
      check_op_gradients([&]() { return cascnn::sigmoid(cascnn::sub(a, b)); }, {&a, &b});
      check_op_gradients([&]() { return cascnn::scale(cascnn::add(a, b), -2.5); }, {&a, &b});
    }
    // scale_channels
    {
      Tensor x = random_tensor({2, 3, 3}, rng);
      Tensor s = random_tensor({2}, rng);
      check_op_gradients([&]() { return cascnn::scale_channels(x, s); }, {&x, &s});
    }
    // broadcast_rows and add_row_vector
    {
      Tensor m = random_tensor({3, 4}, rng);
      Tensor v = random_tensor({3}, rng);
      check_op_gradients([&]() { return cascnn::broadcast_rows(m, v); }, {&m, &v});
      Tensor x3 = random_tensor({2, 3, 4}, rng);
      check_op_gradients([&]() { return cascnn::add_row_vector(x3, v); }, {&x3, &v});
    }
  }
}
