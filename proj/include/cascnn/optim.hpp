#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cascnn/tensor.hpp"

namespace cascnn {

// Draw from normal(0, 2 / (fan_in + fan_out)); deterministic for a given rng state.
Tensor xavier_normal(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

// A named leaf tensor with optimizer state. Moment buffers start at zero.
struct Parameter {
  std::string name;
  Tensor value;
  std::vector<double> m1;  // first-moment estimate
  std::vector<double> m2;  // second-moment estimate
  std::int64_t steps = 0;

  Parameter() = default;
  Parameter(std::string param_name, Tensor initial)
      : name(std::move(param_name)),
        value(std::move(initial)),
        m1(value.size(), 0.0),
        m2(value.size(), 0.0) {}
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update from the gradients accumulated in each
// parameter's value. Missing (never written) gradients count as zero.
void adam_step(std::span<Parameter* const> params, const AdamConfig& config);

// Plain gradient descent, provided as a sensitivity switch.
void sgd_step(std::span<Parameter* const> params, double lr);

void zero_grad(std::span<Parameter* const> params);

}  // namespace cascnn
