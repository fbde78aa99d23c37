"""Dense float64 tensors with taped reverse-mode differentiation, plus the
transformer building blocks shared by both encoders."""

from .tensor import Param, Tape, Tensor, backward
from . import ops
from .layers import (
    AttentionParams,
    BlockSpec,
    EqBlockParams,
    LayerNormParams,
    LinearParams,
    SoilBlockParams,
    eq_encoder_block,
    ffn,
    glorot_uniform,
    init_attention,
    init_linear,
    init_layer_norm,
    linear,
    multi_head_attention,
    positional_encoding,
    soil_encoder_block,
)

__all__ = [
    "Param",
    "Tape",
    "Tensor",
    "backward",
    "ops",
    "AttentionParams",
    "BlockSpec",
    "EqBlockParams",
    "LayerNormParams",
    "LinearParams",
    "SoilBlockParams",
    "eq_encoder_block",
    "ffn",
    "glorot_uniform",
    "init_attention",
    "init_linear",
    "init_layer_norm",
    "linear",
    "multi_head_attention",
    "positional_encoding",
    "soil_encoder_block",
]
