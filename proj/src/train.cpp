#include "cascnn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "cascnn/ops.hpp"

namespace cascnn {

std::size_t mask_kept_count(const Tensor& mask) {
  std::size_t kept = 0;
  for (double v : mask.values()) {
    if (v != 0.0) ++kept;
  }
  return kept;
}

Tensor masked_mse(const Tensor& pred, const Tensor& target, const Tensor& mask) {
  const std::size_t kept = mask_kept_count(mask);
  if (kept == 0) throw DegenerateMaskError("mask keeps zero cells");
  const Tensor diff = sub(pred, target);
  const Tensor masked = mul(diff, mask);
  return scale(sum(mul(masked, masked)), 1.0 / static_cast<double>(kept));
}

MaskedGradientReport verify_masked_gradient(Model& model, const Sample& sample) {
  MaskedGradientReport report;
  const std::size_t n = sample.mask.shape()[0];

  // Gradient side: d(loss)/d(pred) must be exactly zero wherever mask is zero.
  Tensor pred = model.forward(sample.history, sample.inflow_win, sample.outflow_win);
  Tensor loss = masked_mse(pred, sample.target, sample.mask);
  loss.backward();
  const std::vector<double>& pred_grad = pred.grad();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (sample.mask.at(i, j) == 0.0 && pred_grad[i * n + j] != 0.0) {
        report.gradient_violations.emplace_back(i, j);
      }
      if (sample.mask.at(i, j) == 0.0) ++report.masked_cells;
    }
  }

  // Value side: replacing masked targets must leave the loss bit-identical.
  const double base_loss = loss.item();
  Tensor perturbed = Tensor::from_values(sample.target.shape(), sample.target.values());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (sample.mask.at(i, j) != 0.0) continue;
      const double saved = perturbed.at(i, j);
      perturbed.at(i, j) = saved + 1000.0 + static_cast<double>(i * n + j);
      Tensor probe_pred = model.forward(sample.history, sample.inflow_win, sample.outflow_win);
      const double probe_loss = masked_mse(probe_pred, perturbed, sample.mask).item();
      if (probe_loss != base_loss) report.loss_violations.emplace_back(i, j);
      perturbed.at(i, j) = saved;
    }
  }

  report.ok = report.gradient_violations.empty() && report.loss_violations.empty();
  return report;
}

namespace {

// Loss of one sample under the configured loss mode.
Tensor sample_loss(Model& model, const Sample& sample, const Tensor& all_ones, bool masked) {
  const Tensor pred = model.forward(sample.history, sample.inflow_win, sample.outflow_win);
  return masked_mse(pred, sample.target, masked ? sample.mask : all_ones);
}

bool sample_usable(const Sample& sample, bool masked) {
  return !masked || mask_kept_count(sample.mask) > 0;
}

}  // namespace

TrainState fit(Model& model, const std::vector<Sample>& train_samples,
               const std::vector<Sample>& val_samples, const TrainConfig& config) {
  if (train_samples.empty()) throw ConfigError("fit: empty training set");
  if (config.batch_size == 0) throw ConfigError("fit: batch_size must be >= 1");
  if (config.patience == 0) throw ConfigError("fit: patience must be >= 1");

  const auto start_time = std::chrono::steady_clock::now();
  TrainState state;
  const std::size_t n = model.config().n;
  const Tensor all_ones = Tensor::full({n, n}, 1.0);

  std::vector<const Sample*> train;
  for (const Sample& sample : train_samples) {
    if (sample_usable(sample, config.masked_loss)) {
      train.push_back(&sample);
    } else {
      ++state.skipped_train_samples;
    }
  }
  std::vector<const Sample*> val;
  for (const Sample& sample : val_samples) {
    if (sample_usable(sample, config.masked_loss)) {
      val.push_back(&sample);
    } else {
      ++state.skipped_val_samples;
    }
  }
  if (train.empty()) throw ConfigError("fit: every training sample has a degenerate mask");

  std::vector<Parameter*> params = model.parameters();
  const AdamConfig adam{config.lr, 0.9, 0.999, 1e-8};
  std::mt19937_64 rng(config.seed);

  auto snapshot = [&params]() {
    std::vector<std::vector<double>> copy;
    copy.reserve(params.size());
    for (Parameter* p : params) copy.push_back(p->value.values());
    return copy;
  };
  auto restore = [&params](const std::vector<std::vector<double>>& copy) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value.values() = copy[i];
  };

  std::vector<std::vector<double>> best_params = snapshot();
  std::size_t epochs_since_improvement = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);

    double train_loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(begin + config.batch_size, order.size());
      zero_grad(params);
      Tensor batch_loss;
      for (std::size_t b = begin; b < end; ++b) {
        const Tensor loss = sample_loss(model, *train[order[b]], all_ones, config.masked_loss);
        batch_loss = batch_loss.defined() ? add(batch_loss, loss) : loss;
      }
      batch_loss = scale(batch_loss, 1.0 / static_cast<double>(end - begin));
      const double loss_value = batch_loss.item();
      if (!std::isfinite(loss_value)) {
        throw NumericError("training diverged: loss " + std::to_string(loss_value) + " at epoch " +
                           std::to_string(epoch) + ", batch starting at sample " +
                           std::to_string(begin));
      }
      train_loss_sum += loss_value * static_cast<double>(end - begin);
      batch_loss.backward();
      if (config.optimizer == TrainConfig::Optimizer::kAdam) {
        adam_step(params, adam);
      } else {
        sgd_step(params, config.lr);
      }
    }

    EpochStats stats;
    stats.train_loss = train_loss_sum / static_cast<double>(train.size());

    double val_loss_sum = 0.0;
    for (const Sample* sample : val) {
      val_loss_sum += sample_loss(model, *sample, all_ones, config.masked_loss).item();
    }
    // With no validation samples early stopping falls back to the train loss.
    stats.val_loss =
        val.empty() ? stats.train_loss : val_loss_sum / static_cast<double>(val.size());
    if (!std::isfinite(stats.val_loss)) {
      throw NumericError("training diverged: validation loss is not finite at epoch " +
                         std::to_string(epoch));
    }
    state.history.push_back(stats);

    if (stats.val_loss < state.best_val_loss) {
      state.best_val_loss = stats.val_loss;
      state.best_epoch = epoch;
      best_params = snapshot();
      epochs_since_improvement = 0;
    } else {
      ++epochs_since_improvement;
    }
    if (epochs_since_improvement >= config.patience) {
      state.stop_reason = "early_stop";
      break;
    }
  }
  if (state.stop_reason.empty()) state.stop_reason = "max_epochs";

  restore(best_params);
  state.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return state;
}

}  // namespace cascnn
