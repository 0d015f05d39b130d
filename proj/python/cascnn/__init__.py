"""Short-term metro origin-destination demand prediction.

Thin Python surface over the C++ core: tensor operations with reverse-mode
gradients, the channel-attentive split-CNN model, and the synthetic-data /
training / evaluation pipeline.
"""

from ._core import (
    ConfigError,
    DataError,
    DimensionError,
    Model,
    ModelConfig,
    NumericError,
    PreparedData,
    Tensor,
    add,
    broadcast_rows,
    build_model,
    conv1x1,
    conv2d_same,
    dense,
    evaluate,
    fit,
    generate,
    global_avg_pool,
    load_checkpoint,
    masked_mse,
    model_config_for,
    mul,
    prepare,
    relu,
    save_checkpoint,
    scale,
    scale_channels,
    sigmoid,
    sub,
    sum,
    xavier_normal,
)

__all__ = [
    "ConfigError",
    "DataError",
    "DimensionError",
    "Model",
    "ModelConfig",
    "NumericError",
    "PreparedData",
    "Tensor",
    "add",
    "broadcast_rows",
    "build_model",
    "conv1x1",
    "conv2d_same",
    "dense",
    "evaluate",
    "fit",
    "generate",
    "global_avg_pool",
    "load_checkpoint",
    "masked_mse",
    "model_config_for",
    "mul",
    "prepare",
    "relu",
    "save_checkpoint",
    "scale",
    "scale_channels",
    "sigmoid",
    "sub",
    "sum",
    "xavier_normal",
]
