"""Primitive differentiable operations.

Each op computes its result eagerly with numpy and registers a
vector-Jacobian product on the active tape. Shapes broadcast like numpy;
gradients are reduced back to the input shapes.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ShapeError
from ..rng import SplitMix64
from .tensor import Tensor, record

MODE_TRAIN = "train"
MODE_EVAL = "eval"


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum g down to `shape` after numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, s) in enumerate(zip(g.shape, shape)) if s == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def constant(data) -> Tensor:
    return Tensor(data)


def add(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data + b.data)
    sa, sb = a.data.shape, b.data.shape
    record(out, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))
    return out


def add_const(a: Tensor, c) -> Tensor:
    out = Tensor(a.data + c)
    record(out, (a,), lambda g: (_unbroadcast(g, a.data.shape),))
    return out


def rsub_const(c, a: Tensor) -> Tensor:
    """c - a for a non-differentiable constant c."""
    out = Tensor(c - a.data)
    record(out, (a,), lambda g: (_unbroadcast(-g, a.data.shape),))
    return out


def mul_const(a: Tensor, c) -> Tensor:
    """Elementwise product with a constant array or scalar."""
    out = Tensor(a.data * c)
    record(out, (a,), lambda g: (_unbroadcast(g * c, a.data.shape),))
    return out


def scale(a: Tensor, c: float) -> Tensor:
    out = Tensor(a.data * c)
    record(out, (a,), lambda g: (g * c,))
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeError(f"matmul needs >= 2-D operands, got {a.data.shape} @ {b.data.shape}")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ShapeError(f"matmul inner dims differ: {a.data.shape} @ {b.data.shape}")
    ad, bd = a.data, b.data
    if bd.ndim == 2 and ad.ndim > 2:
        # one flat GEMM instead of a tiny GEMM per leading slice
        k, n = bd.shape
        a2 = ad.reshape(-1, k)
        out = Tensor((a2 @ bd).reshape(ad.shape[:-1] + (n,)))

        def vjp(g):
            g2 = g.reshape(-1, n)
            return (g2 @ bd.T).reshape(ad.shape), a2.T @ g2

        record(out, (a, b), vjp)
        return out
    out = Tensor(np.matmul(ad, bd))

    def vjp(g):
        ga = _unbroadcast(np.matmul(g, np.swapaxes(bd, -1, -2)), ad.shape)
        gb = _unbroadcast(np.matmul(np.swapaxes(ad, -1, -2), g), bd.shape)
        return ga, gb

    record(out, (a, b), vjp)
    return out


def transpose_last2(a: Tensor) -> Tensor:
    out = Tensor(np.swapaxes(a.data, -1, -2))
    record(out, (a,), lambda g: (np.swapaxes(g, -1, -2),))
    return out


def swap_axes(a: Tensor, ax1: int, ax2: int) -> Tensor:
    out = Tensor(np.swapaxes(a.data, ax1, ax2))
    record(out, (a,), lambda g: (np.swapaxes(g, ax1, ax2),))
    return out


def reshape(a: Tensor, shape) -> Tensor:
    out = Tensor(a.data.reshape(shape))
    orig = a.data.shape
    record(out, (a,), lambda g: (g.reshape(orig),))
    return out


def concat_last(tensors: list[Tensor]) -> Tensor:
    out = Tensor(np.concatenate([t.data for t in tensors], axis=-1))
    widths = [t.data.shape[-1] for t in tensors]
    offsets = np.cumsum([0] + widths)

    def vjp(g):
        return tuple(g[..., offsets[i] : offsets[i + 1]] for i in range(len(widths)))

    record(out, tuple(tensors), vjp)
    return out


def slice_last(a: Tensor, start: int, stop: int) -> Tensor:
    out = Tensor(a.data[..., start:stop])
    shape = a.data.shape

    def vjp(g):
        full = np.zeros(shape)
        full[..., start:stop] = g
        return (full,)

    record(out, (a,), vjp)
    return out


def leaky_relu(a: Tensor, slope: float = 0.01) -> Tensor:
    # exactly-zero inputs take the slope branch by convention
    factor = np.where(a.data > 0, 1.0, slope)
    out = Tensor(a.data * factor)
    record(out, (a,), lambda g: (g * factor,))
    return out


def softmax_last(a: Tensor) -> Tensor:
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(s)
    record(out, (a,), lambda g: (s * (g - (g * s).sum(axis=-1, keepdims=True)),))
    return out


def log(a: Tensor) -> Tensor:
    out = Tensor(np.log(a.data))
    record(out, (a,), lambda g: (g / a.data,))
    return out


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    out = Tensor(np.clip(a.data, lo, hi))
    inside = (a.data > lo) & (a.data < hi)
    record(out, (a,), lambda g: (g * inside,))
    return out


def mean_all(a: Tensor) -> Tensor:
    if a.data.size == 0:
        raise ShapeError("mean of an empty tensor")
    out = Tensor(a.data.mean())
    n = a.data.size
    shape = a.data.shape
    record(out, (a,), lambda g: (np.full(shape, float(g) / n),))
    return out


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last dimension (population variance)."""
    d = x.data.shape[-1]
    if gamma.data.shape != (d,) or beta.data.shape != (d,):
        raise ShapeError(f"layer_norm affine params must have shape ({d},)")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = np.mean(xc * xc, axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = Tensor(xhat * gamma.data + beta.data)

    def vjp(g):
        flat_axes = tuple(range(g.ndim - 1))
        dgamma = (g * xhat).sum(axis=flat_axes)
        dbeta = g.sum(axis=flat_axes)
        gxh = g * gamma.data
        dx = inv * (
            gxh
            - gxh.mean(axis=-1, keepdims=True)
            - xhat * (gxh * xhat).mean(axis=-1, keepdims=True)
        )
        return dx, dgamma, dbeta

    record(out, (x, gamma, beta), vjp)
    return out


def adaptive_avg_pool(x: Tensor, l_out: int) -> Tensor:
    """Mean-pool axis -2 from length L to l_out with floor-split windows."""
    l_in = x.data.shape[-2]
    if l_out < 1 or l_in < l_out:
        raise ShapeError(f"cannot pool length {l_in} to {l_out}")
    bounds = [(i * l_in) // l_out for i in range(l_out + 1)]
    pieces = [x.data[..., bounds[i] : bounds[i + 1], :].mean(axis=-2, keepdims=True) for i in range(l_out)]
    out = Tensor(np.concatenate(pieces, axis=-2))
    shape = x.data.shape

    def vjp(g):
        dx = np.zeros(shape)
        for i in range(l_out):
            w = bounds[i + 1] - bounds[i]
            dx[..., bounds[i] : bounds[i + 1], :] = g[..., i : i + 1, :] / w
        return (dx,)

    record(out, (x,), vjp)
    return out


def dropout(x: Tensor, rate: float, mode: str, rng: SplitMix64 | None) -> Tensor:
    """Inverted dropout; identity in eval mode or at rate 0."""
    if not (0 <= rate < 1):
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if mode == MODE_EVAL or rate == 0.0:
        return x
    if mode != MODE_TRAIN:
        raise ConfigError(f"unknown mode {mode!r}")
    if rng is None:
        raise ConfigError("train-mode dropout needs an rng stream")
    keep = rng.uniform_array(x.data.shape) >= rate
    factor = keep / (1.0 - rate)
    out = Tensor(x.data * factor)
    record(out, (x,), lambda g: (g * factor,))
    return out
