#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cascnn/afc.hpp"
#include "cascnn/model.hpp"
#include "cascnn/tensor.hpp"

namespace cascnn {

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  bool masked_loss = true;  // false: plain MSE (all-ones mask)
  enum class Optimizer { kAdam, kSgd } optimizer = Optimizer::kAdam;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainState {
  std::vector<EpochStats> history;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;  // 1-based
  std::string stop_reason;
  std::size_t skipped_train_samples = 0;
  std::size_t skipped_val_samples = 0;
  double wall_seconds = 0.0;
};

// Masked mean-squared error over the kept cells, as a graph scalar. Masked
// cells contribute neither to the value nor to any gradient.
Tensor masked_mse(const Tensor& pred, const Tensor& target, const Tensor& mask);

// Kept-cell count of a {0,1} mask tensor.
std::size_t mask_kept_count(const Tensor& mask);

struct MaskedGradientReport {
  bool ok = true;
  // Masked cells whose prediction gradient is not exactly zero.
  std::vector<std::pair<std::size_t, std::size_t>> gradient_violations;
  // Masked cells where perturbing the target changed the loss bits.
  std::vector<std::pair<std::size_t, std::size_t>> loss_violations;
  std::size_t masked_cells = 0;
};

// Checks the non-backpropagation property on one sample: the prediction
// gradient vanishes exactly at masked cells and the loss value is bit-identical
// under arbitrary masked-target perturbations.
MaskedGradientReport verify_masked_gradient(Model& model, const Sample& sample);

// Mini-batch optimization with early stopping on the validation loss. Samples
// whose mask keeps zero cells are skipped and counted. Returns the state with
// the best-validation weights restored into the model.
TrainState fit(Model& model, const std::vector<Sample>& train_samples,
               const std::vector<Sample>& val_samples, const TrainConfig& config);

}  // namespace cascnn
