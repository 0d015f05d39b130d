#include "cascnn/optim.hpp"

#include <cmath>

namespace cascnn {

Tensor xavier_normal(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  if (fan_in == 0 || fan_out == 0) {
    throw ConfigError("xavier_normal: fan_in and fan_out must be positive");
  }
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

void adam_step(std::span<Parameter* const> params, const AdamConfig& config) {
  for (Parameter* param : params) {
    param->steps += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(param->steps));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(param->steps));
    const std::vector<double>& grad = param->value.grad();
    double* values = param->value.data();
    for (std::size_t i = 0; i < param->value.size(); ++i) {
      const double g = grad.empty() ? 0.0 : grad[i];
      param->m1[i] = config.beta1 * param->m1[i] + (1.0 - config.beta1) * g;
      param->m2[i] = config.beta2 * param->m2[i] + (1.0 - config.beta2) * g * g;
      const double m_hat = param->m1[i] / bc1;
      const double v_hat = param->m2[i] / bc2;
      values[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

void sgd_step(std::span<Parameter* const> params, double lr) {
  for (Parameter* param : params) {
    param->steps += 1;
    const std::vector<double>& grad = param->value.grad();
    if (grad.empty()) continue;
    double* values = param->value.data();
    for (std::size_t i = 0; i < param->value.size(); ++i) values[i] -= lr * grad[i];
  }
}

void zero_grad(std::span<Parameter* const> params) {
  for (Parameter* param : params) param->value.zero_grad();
}

}  // namespace cascnn
