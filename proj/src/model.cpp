#include "cascnn/model.hpp"

#include <algorithm>

#include "cascnn/ops.hpp"

namespace cascnn {

std::vector<std::size_t> ModelConfig::effective_kernels() const {
  if (no_split) return {3};
  return kernels;
}

void ModelConfig::validate() const {
  if (n < 2) throw ConfigError("model needs at least 2 stations");
  if (history_days == 0) throw ConfigError("history_days must be at least 1");
  if (flow_steps == 0) throw ConfigError("flow_steps must be at least 1");
  if (kernels.empty()) throw ConfigError("kernel set must be nonempty");
  for (std::size_t k : kernels) {
    if (k % 2 == 0) throw ConfigError("kernel size " + std::to_string(k) + " is even");
  }
  if (filters_layer1 == 0 || filters_layer2 == 0) throw ConfigError("filter counts must be >= 1");
  if (reduction == 0) throw ConfigError("attention reduction R must be >= 1");
  // no_inflow together with no_outflow is legal: the gate branch vanishes and
  // the model degenerates to its trunk.
}

namespace {

std::size_t attention_hidden(std::size_t channels, std::size_t reduction) {
  return std::max<std::size_t>(1, channels / reduction);
}

}  // namespace

AttentionNet make_attention_net(const std::string& name_prefix, std::size_t channels,
                                std::size_t reduction, std::mt19937_64& rng) {
  AttentionNet net;
  net.channels = channels;
  net.hidden = attention_hidden(channels, reduction);
  net.w1 = Parameter(name_prefix + ".w1",
                     xavier_normal({net.hidden, channels}, channels, net.hidden, rng));
  net.b1 = Parameter(name_prefix + ".b1", Tensor::zeros({net.hidden}));
  net.w2 = Parameter(name_prefix + ".w2",
                     xavier_normal({channels, net.hidden}, net.hidden, channels, rng));
  net.b2 = Parameter(name_prefix + ".b2", Tensor::zeros({channels}));
  return net;
}

ChannelAttentionResult channel_attention(const Tensor& x, const AttentionNet& net) {
  if (x.rank() != 3 || x.shape()[0] != net.channels) {
    throw DimensionError("channel_attention: input axis 0 must have extent " +
                         std::to_string(net.channels));
  }
  const Tensor pooled = global_avg_pool(x);
  const Tensor hidden = relu(dense(pooled, net.w1.value, net.b1.value));
  const Tensor delta = sigmoid(dense(hidden, net.w2.value, net.b2.value));
  return {scale_channels(x, delta), delta};
}

Tensor split_conv(const Tensor& x, const std::vector<ConvBranch>& branches, bool with_attention) {
  if (branches.empty()) throw ConfigError("split_conv: no kernel branches");
  Tensor out;
  for (const ConvBranch& branch : branches) {
    Tensor branch_out = conv2d_same(x, branch.weight.value, branch.bias.value);
    if (with_attention) {
      if (!branch.attention) throw ConfigError("split_conv: branch lacks an attention net");
      branch_out = channel_attention(branch_out, *branch.attention).scaled;
    }
    out = out.defined() ? add(out, branch_out) : branch_out;
  }
  return out;
}

Tensor gate_branch(const Tensor& inflow_win, const Tensor& outflow_win, const Tensor& in_weight,
                   const Tensor& in_bias, const Tensor& out_weight, const Tensor& out_bias,
                   const Tensor& gate_vector, bool no_inflow, bool no_outflow) {
  if (no_inflow && no_outflow) {
    throw ConfigError("gate_branch: both directions ablated, the branch vanishes");
  }
  const std::size_t stations = gate_vector.shape()[0];

  auto collapse = [stations](const Tensor& window, const Tensor& weight,
                             const Tensor& bias) -> Tensor {
    if (window.rank() != 2 || window.shape()[1] != stations) {
      throw DimensionError("gate_branch: flow window axis 1 must have extent " +
                           std::to_string(stations));
    }
    const std::size_t steps = window.shape()[0];
    // Time steps become channels over an n x 1 spatial extent.
    const Tensor as_channels = reshape(window, {steps, stations, 1});
    return reshape(conv1x1(as_channels, weight, bias), {stations});
  };

  Tensor fused;
  if (!no_inflow) fused = collapse(inflow_win, in_weight, in_bias);
  if (!no_outflow) {
    const Tensor collapsed = collapse(outflow_win, out_weight, out_bias);
    fused = fused.defined() ? mul(fused, collapsed) : collapsed;
  }
  return mul(gate_vector, fused);
}

CasCnn::CasCnn(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t n = config_.n;
  const auto kernels = config_.effective_kernels();

  if (!config_.no_channel_attention) {
    input_attention_ =
        make_attention_net("input_attention", config_.history_days, config_.reduction, rng);
  }

  auto make_layer = [&](const std::string& layer_name, std::size_t c_in, std::size_t c_out,
                        bool attended) {
    std::vector<ConvBranch> layer;
    for (std::size_t k : kernels) {
      ConvBranch branch;
      branch.kernel = k;
      const std::string prefix = layer_name + ".k" + std::to_string(k);
      branch.weight = Parameter(prefix + ".weight", xavier_normal({c_out, c_in, k, k},
                                                                  c_in * k * k, c_out * k * k, rng));
      branch.bias = Parameter(prefix + ".bias", Tensor::zeros({c_out}));
      if (attended) {
        branch.attention =
            make_attention_net(prefix + ".attention", c_out, config_.reduction, rng);
      }
      layer.push_back(std::move(branch));
    }
    return layer;
  };

  layer1_ = make_layer("layer1", config_.history_days, config_.filters_layer1,
                       !config_.no_channel_attention);
  layer2_ = make_layer("layer2", config_.filters_layer1, config_.filters_layer2,
                       config_.ca_after_layer2 && !config_.no_channel_attention);

  if (!(config_.no_inflow && config_.no_outflow)) {
    if (!config_.no_inflow) {
      gate_in_weight_ = Parameter(
          "gate.inflow.weight", xavier_normal({1, config_.flow_steps}, config_.flow_steps, 1, rng));
      gate_in_bias_ = Parameter("gate.inflow.bias", Tensor::zeros({1}));
    }
    if (!config_.no_outflow) {
      gate_out_weight_ = Parameter("gate.outflow.weight", xavier_normal({1, config_.flow_steps},
                                                                        config_.flow_steps, 1, rng));
      gate_out_bias_ = Parameter("gate.outflow.bias", Tensor::zeros({1}));
    }
    // Neutral-scale start for the interpretable per-station weights.
    gate_vector_ = Parameter("gate.w", Tensor::full({n}, 1.0));
  }

  head_weight_ = Parameter("head.weight", xavier_normal({1, config_.filters_layer2},
                                                        config_.filters_layer2, 1, rng));
  head_bias_ = Parameter("head.bias", Tensor::zeros({1}));
}

const Parameter& CasCnn::gate_vector() const {
  if (!gate_vector_) throw UsageError("model has no gate vector (both flow branches ablated)");
  return *gate_vector_;
}

Tensor CasCnn::forward(const Tensor& history, const Tensor& inflow_win,
                       const Tensor& outflow_win) {
  const std::size_t n = config_.n;
  if (history.rank() != 3 || history.shape()[0] != config_.history_days ||
      history.shape()[1] != n || history.shape()[2] != n) {
    throw DimensionError("forward: history must be " + std::to_string(config_.history_days) +
                         " x " + std::to_string(n) + " x " + std::to_string(n));
  }

  Tensor trunk_in = history;
  if (input_attention_) trunk_in = channel_attention(trunk_in, *input_attention_).scaled;

  const Tensor l1 = relu(split_conv(trunk_in, layer1_, !config_.no_channel_attention));
  const Tensor trunk = split_conv(l1, layer2_, config_.ca_after_layer2 &&
                                                   !config_.no_channel_attention);

  Tensor fused = trunk;
  if (gate_vector_) {
    const Tensor gate =
        gate_branch(inflow_win, outflow_win,
                    gate_in_weight_ ? gate_in_weight_->value : Tensor(),
                    gate_in_bias_ ? gate_in_bias_->value : Tensor(),
                    gate_out_weight_ ? gate_out_weight_->value : Tensor(),
                    gate_out_bias_ ? gate_out_bias_->value : Tensor(), gate_vector_->value,
                    config_.no_inflow, config_.no_outflow);
    fused = add_row_vector(trunk, gate);
  }

  const Tensor out = conv1x1(fused, head_weight_.value, head_bias_.value);
  return reshape(out, {n, n});
}

std::vector<Parameter*> CasCnn::parameters() {
  std::vector<Parameter*> params;
  auto push_attention = [&params](std::optional<AttentionNet>& net) {
    if (!net) return;
    params.push_back(&net->w1);
    params.push_back(&net->b1);
    params.push_back(&net->w2);
    params.push_back(&net->b2);
  };
  push_attention(input_attention_);
  for (auto* layer : {&layer1_, &layer2_}) {
    for (ConvBranch& branch : *layer) {
      params.push_back(&branch.weight);
      params.push_back(&branch.bias);
      push_attention(branch.attention);
    }
  }
  for (auto* opt : {&gate_in_weight_, &gate_in_bias_, &gate_out_weight_, &gate_out_bias_,
                    &gate_vector_}) {
    if (opt->has_value()) params.push_back(&opt->value());
  }
  params.push_back(&head_weight_);
  params.push_back(&head_bias_);
  return params;
}

PlainCnn2d::PlainCnn2d(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t x = config_.history_days;
  constexpr std::size_t k = 5;
  w1_ = Parameter("conv1.weight", xavier_normal({8, x, k, k}, x * k * k, 8 * k * k, rng));
  b1_ = Parameter("conv1.bias", Tensor::zeros({8}));
  w2_ = Parameter("conv2.weight", xavier_normal({16, 8, k, k}, 8 * k * k, 16 * k * k, rng));
  b2_ = Parameter("conv2.bias", Tensor::zeros({16}));
  w3_ = Parameter("conv3.weight", xavier_normal({1, 16, k, k}, 16 * k * k, 1 * k * k, rng));
  b3_ = Parameter("conv3.bias", Tensor::zeros({1}));
}

Tensor PlainCnn2d::forward(const Tensor& history, const Tensor& /*inflow_win*/,
                           const Tensor& /*outflow_win*/) {
  const std::size_t n = config_.n;
  const Tensor h1 = relu(conv2d_same(history, w1_.value, b1_.value));
  const Tensor h2 = relu(conv2d_same(h1, w2_.value, b2_.value));
  const Tensor out = conv2d_same(h2, w3_.value, b3_.value);
  return reshape(out, {n, n});
}

std::vector<Parameter*> PlainCnn2d::parameters() {
  return {&w1_, &b1_, &w2_, &b2_, &w3_, &b3_};
}

std::unique_ptr<Model> build_model(const std::string& kind, const ModelConfig& config,
                                   std::uint64_t seed) {
  if (kind == "cascnn") return std::make_unique<CasCnn>(config, seed);
  if (kind == "cnn2d") return std::make_unique<PlainCnn2d>(config, seed);
  throw ConfigError("unknown model kind '" + kind + "', expected cascnn or cnn2d");
}

}  // namespace cascnn
