#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cascnn/optim.hpp"
#include "cascnn/tensor.hpp"

namespace cascnn {

struct ModelConfig {
  std::size_t n = 20;              // stations
  std::size_t history_days = 5;    // x
  std::size_t flow_steps = 5;      // y
  std::vector<std::size_t> kernels = {3, 5};
  std::size_t filters_layer1 = 16;
  std::size_t filters_layer2 = 1;
  std::size_t reduction = 2;       // attention reduction R
  bool no_split = false;           // single 3x3 kernel instead of the split pair
  bool no_channel_attention = false;
  bool no_inflow = false;
  bool no_outflow = false;
  bool ca_after_layer2 = false;

  // Kernel set after applying the no_split ablation.
  std::vector<std::size_t> effective_kernels() const;
  void validate() const;
};

// Squeeze/excitation network of one channel-attention block. Hidden width is
// max(1, C / R).
struct AttentionNet {
  std::size_t channels = 0;
  std::size_t hidden = 0;
  Parameter w1, b1, w2, b2;
};

AttentionNet make_attention_net(const std::string& name_prefix, std::size_t channels,
                                std::size_t reduction, std::mt19937_64& rng);

struct ChannelAttentionResult {
  Tensor scaled;  // per-channel rescaled input
  Tensor delta;   // attention vector, each component in (0, 1)
};

// delta = sigmoid(W2 relu(W1 gap(x) + b1) + b2); scaled[c] = delta[c] * x[c].
ChannelAttentionResult channel_attention(const Tensor& x, const AttentionNet& net);

// One kernel branch of a split convolution layer.
struct ConvBranch {
  std::size_t kernel = 0;
  Parameter weight, bias;
  std::optional<AttentionNet> attention;
};

// Sum of same-padded convolutions over all branches; when a branch carries an
// attention net, its output is channel-attended before the sum.
Tensor split_conv(const Tensor& x, const std::vector<ConvBranch>& branches, bool with_attention);

// Real-time branch: collapse the flow windows with 1x1 convolutions over the
// time-step channel axis, multiply them and weight by the per-station vector.
// Ablated directions drop their factor; ablating both is a configuration error.
Tensor gate_branch(const Tensor& inflow_win, const Tensor& outflow_win, const Tensor& in_weight,
                   const Tensor& in_bias, const Tensor& out_weight, const Tensor& out_bias,
                   const Tensor& gate_vector, bool no_inflow, bool no_outflow);

class Model {
 public:
  virtual ~Model() = default;
  virtual Tensor forward(const Tensor& history, const Tensor& inflow_win,
                         const Tensor& outflow_win) = 0;
  virtual std::vector<Parameter*> parameters() = 0;
  virtual std::string kind() const = 0;
  virtual const ModelConfig& config() const = 0;
};

// The two-branch network: channel-attended history trunk with split
// convolutions, inflow/outflow gate fused by rows, and a 1x1 output head.
class CasCnn : public Model {
 public:
  CasCnn(ModelConfig config, std::uint64_t seed);

  Tensor forward(const Tensor& history, const Tensor& inflow_win,
                 const Tensor& outflow_win) override;
  std::vector<Parameter*> parameters() override;
  std::string kind() const override { return "cascnn"; }
  const ModelConfig& config() const override { return config_; }

  bool has_gate() const { return gate_vector_.has_value(); }
  const Parameter& gate_vector() const;

 private:
  ModelConfig config_;
  std::optional<AttentionNet> input_attention_;
  std::vector<ConvBranch> layer1_;
  std::vector<ConvBranch> layer2_;
  std::optional<Parameter> gate_in_weight_, gate_in_bias_;
  std::optional<Parameter> gate_out_weight_, gate_out_bias_;
  std::optional<Parameter> gate_vector_;
  Parameter head_weight_, head_bias_;
};

// Plain three-layer CNN over the history stack (8, 16, 1 filters, 5x5 kernels,
// ReLU on the first two layers). Ignores the flow inputs.
class PlainCnn2d : public Model {
 public:
  PlainCnn2d(ModelConfig config, std::uint64_t seed);

  Tensor forward(const Tensor& history, const Tensor& inflow_win,
                 const Tensor& outflow_win) override;
  std::vector<Parameter*> parameters() override;
  std::string kind() const override { return "cnn2d"; }
  const ModelConfig& config() const override { return config_; }

 private:
  ModelConfig config_;
  Parameter w1_, b1_, w2_, b2_, w3_, b3_;
};

std::unique_ptr<Model> build_model(const std::string& kind, const ModelConfig& config,
                                   std::uint64_t seed);

}  // namespace cascnn
