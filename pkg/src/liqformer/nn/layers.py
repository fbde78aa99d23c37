"""Transformer building blocks shared by the earthquake and soil encoders."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import ConfigError, ShapeError
from ..rng import SplitMix64
from . import ops
from .tensor import Param, Tensor


@dataclass(frozen=True)
class BlockSpec:
    """Dimensions and constants of one encoder block."""

    n_heads: int
    d_model: int = 64
    d_ff: int = 128
    leaky_slope: float = 0.01
    ln_eps: float = 1e-5
    dropout_rate: float = 0.1

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ConfigError(f"n_heads={self.n_heads} must divide d_model={self.d_model}")

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads


@dataclass
class LinearParams:
    w: Param
    b: Param


@dataclass
class LayerNormParams:
    gamma: Param
    beta: Param


@dataclass
class AttentionParams:
    """Per-head projection matrices plus the output projection."""

    q: tuple[Param, ...]
    k: tuple[Param, ...]
    v: tuple[Param, ...]
    o: Param


@dataclass
class EqBlockParams:
    attn: AttentionParams
    ln: LayerNormParams


@dataclass
class SoilBlockParams:
    attn: AttentionParams
    ln1: LayerNormParams
    ffn1: LinearParams
    ffn2: LinearParams
    ln2: LayerNormParams


def glorot_uniform(rng: SplitMix64, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform_range(-limit, limit, shape)


def init_linear(rng: SplitMix64, d_in: int, d_out: int) -> LinearParams:
    return LinearParams(
        w=Param(glorot_uniform(rng, d_in, d_out, (d_in, d_out))),
        b=Param(np.zeros(d_out)),
    )


def init_layer_norm(d: int) -> LayerNormParams:
    return LayerNormParams(gamma=Param(np.ones(d)), beta=Param(np.zeros(d)))


def init_attention(rng: SplitMix64, spec: BlockSpec) -> AttentionParams:
    d, dh = spec.d_model, spec.d_head
    mk = lambda: Param(glorot_uniform(rng, d, dh, (d, dh)))
    return AttentionParams(
        q=tuple(mk() for _ in range(spec.n_heads)),
        k=tuple(mk() for _ in range(spec.n_heads)),
        v=tuple(mk() for _ in range(spec.n_heads)),
        o=Param(glorot_uniform(rng, d, d, (d, d))),
    )


@lru_cache(maxsize=32)
def positional_encoding(length: int, d_model: int) -> np.ndarray:
    """Sinusoidal position table, shape [length, d_model]; constant."""
    if d_model % 2 != 0:
        raise ConfigError(f"d_model must be even for sinusoidal encoding, got {d_model}")
    pos = np.arange(length)[:, None]
    i = np.arange(d_model // 2)[None, :]
    angle = pos / np.power(10000.0, 2.0 * i / d_model)
    pe = np.zeros((length, d_model))
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle)
    pe.setflags(write=False)
    return pe


def linear(x: Tensor, p: LinearParams) -> Tensor:
    """Affine map over the last dimension, broadcast over leading dims."""
    if x.data.shape[-1] != p.w.shape[0]:
        raise ShapeError(f"linear expects last dim {p.w.shape[0]}, got {x.data.shape}")
    return ops.add(ops.matmul(x, p.w.value), p.b.value)


def multi_head_attention(x: Tensor, p: AttentionParams, spec: BlockSpec) -> Tensor:
    """Self-attention: softmax(Q_h K_h^T / sqrt(d_head)) V_h per head,
    heads concatenated and projected. No masking.

    The per-head weights are stacked so each of Q/K/V is one matmul.
    """
    if x.data.shape[-1] != spec.d_model:
        raise ShapeError(f"attention expects d_model={spec.d_model}, got {x.data.shape}")
    h, dh = spec.n_heads, spec.d_head
    lead = x.data.shape[:-1]

    def project(ws: tuple[Param, ...]) -> Tensor:
        stacked = ops.concat_last([w.value for w in ws])  # [d_model, h*dh]
        proj = ops.matmul(x, stacked)  # [..., L, h*dh]
        split = ops.reshape(proj, lead + (h, dh))  # [..., L, h, dh]
        return ops.swap_axes(split, -3, -2)  # [..., h, L, dh]

    q = project(p.q)
    k = project(p.k)
    v = project(p.v)
    scores = ops.scale(ops.matmul(q, ops.transpose_last2(k)), 1.0 / np.sqrt(dh))
    attn = ops.softmax_last(scores)
    z = ops.matmul(attn, v)  # [..., h, L, dh]
    merged = ops.reshape(ops.swap_axes(z, -3, -2), lead + (h * dh,))
    return ops.matmul(merged, p.o.value)


def ffn(x: Tensor, p1: LinearParams, p2: LinearParams, slope: float = 0.01) -> Tensor:
    """Position-wise feed-forward: W2 LeakyReLU(W1 x + b1) + b2."""
    return linear(ops.leaky_relu(linear(x, p1), slope), p2)


def eq_encoder_block(x: Tensor, p: EqBlockParams, spec: BlockSpec) -> Tensor:
    """Attention, residual, layer norm; the earthquake block has no FFN."""
    attended = multi_head_attention(x, p.attn, spec)
    return ops.layer_norm(ops.add(x, attended), p.ln.gamma.value, p.ln.beta.value, spec.ln_eps)


def soil_encoder_block(
    x: Tensor, p: SoilBlockParams, spec: BlockSpec, rng: SplitMix64 | None = None, mode: str = ops.MODE_EVAL
) -> Tensor:
    """Full soil block: residual attention + LN, FFN + LN inside an outer
    residual, then a dropout residual off the block input."""
    inner = ops.layer_norm(
        ops.add(x, multi_head_attention(x, p.attn, spec)), p.ln1.gamma.value, p.ln1.beta.value, spec.ln_eps
    )
    transformed = ops.layer_norm(
        ffn(inner, p.ffn1, p.ffn2, spec.leaky_slope), p.ln2.gamma.value, p.ln2.beta.value, spec.ln_eps
    )
    x_out = ops.add(x, transformed)
    return ops.add(x, ops.dropout(x_out, spec.dropout_rate, mode, rng))
