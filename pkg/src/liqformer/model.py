"""The tripartite network: earthquake signal processor, soil profile
encoder, and site-feature fusion head.

Both encoder streams emit [10 x 64]; their last-dim concatenation [10 x 128]
is flattened through the fusion MLP together with the 4 site scalars to a
2-class softmax. Ablations zero a stream's contribution without removing
its parameters, so parameter counts stay constant across stream ablations.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .data import N_LAYERS, SiteRecord, Standardizer, standardize_site
from .errors import ConfigError, ShapeError
from .nn import (
    AttentionParams,
    BlockSpec,
    EqBlockParams,
    LayerNormParams,
    LinearParams,
    Param,
    SoilBlockParams,
    Tensor,
    linear,
    eq_encoder_block,
    ffn,
    glorot_uniform,
    ops,
    positional_encoding,
    soil_encoder_block,
)
from .rng import SplitMix64
from .signal import Spectrum

SOIL_CHANNELS = 2  # standardized SPT + raw soil-type token
N_SITE_FEATURES = 4
N_CLASSES = 2


@dataclass(frozen=True)
class ModelConfig:
    """Architecture knobs; defaults are the proposed configuration."""

    soil_heads: int = 4
    soil_loops: int = 2
    eq_heads: int = 2
    eq_loops: int = 1
    use_eq_stream: bool = True
    use_site_stream: bool = True
    d_model: int = 64
    l_soil: int = 10
    l_pool: int = 10
    l_spec: int = 256
    h1: int = 256
    h2: int = 64
    d_ff: int = 128
    dropout_rate: float = 0.1
    eq_channels: int = 1  # 2 adds a normalized bin-frequency channel
    seed: int = 0

    def __post_init__(self):
        if self.l_soil != N_LAYERS or self.l_pool != N_LAYERS:
            raise ConfigError("both stream lengths are fixed at 10")
        for name in ("soil_heads", "eq_heads"):
            h = getattr(self, name)
            if h < 1 or self.d_model % h != 0:
                raise ConfigError(f"{name}={h} must divide d_model={self.d_model}")
        if self.soil_loops < 0 or self.eq_loops < 0:
            raise ConfigError("loop counts must be >= 0")
        if self.l_spec < self.l_pool:
            raise ConfigError(f"l_spec={self.l_spec} must be >= l_pool={self.l_pool}")
        if self.eq_channels not in (1, 2):
            raise ConfigError(f"eq_channels must be 1 or 2, got {self.eq_channels}")
        if not (0 <= self.dropout_rate < 1):
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.h1 < 1 or self.h2 < 1:
            raise ConfigError("fusion head widths must be >= 1")

    @property
    def flat_dim(self) -> int:
        return self.l_pool * 2 * self.d_model

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


def _attention_shapes(prefix: str, d_model: int, n_heads: int) -> list[tuple[str, tuple[int, ...]]]:
    dh = d_model // n_heads
    shapes = []
    for kind in ("q", "k", "v"):
        shapes += [(f"{prefix}.{kind}{h}", (d_model, dh)) for h in range(n_heads)]
    shapes.append((f"{prefix}.o", (d_model, d_model)))
    return shapes


def param_shapes(cfg: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Ordered (name, shape) enumeration of every trainable tensor."""
    d = cfg.d_model
    shapes: list[tuple[str, tuple[int, ...]]] = []
    shapes += [("eq.proj.w", (cfg.eq_channels, d)), ("eq.proj.b", (d,))]
    for i in range(cfg.eq_loops):
        shapes += _attention_shapes(f"eq.block{i}.attn", d, cfg.eq_heads)
        shapes += [(f"eq.block{i}.ln.gamma", (d,)), (f"eq.block{i}.ln.beta", (d,))]
    shapes += [
        ("eq.fc_out.w", (d, d)),
        ("eq.fc_out.b", (d,)),
        ("eq.fc1.w", (d, d)),
        ("eq.fc1.b", (d,)),
    ]
    shapes += [("soil.proj.w", (SOIL_CHANNELS, d)), ("soil.proj.b", (d,))]
    for i in range(cfg.soil_loops):
        shapes += _attention_shapes(f"soil.block{i}.attn", d, cfg.soil_heads)
        shapes += [
            (f"soil.block{i}.ln1.gamma", (d,)),
            (f"soil.block{i}.ln1.beta", (d,)),
            (f"soil.block{i}.ffn1.w", (d, cfg.d_ff)),
            (f"soil.block{i}.ffn1.b", (cfg.d_ff,)),
            (f"soil.block{i}.ffn2.w", (cfg.d_ff, d)),
            (f"soil.block{i}.ffn2.b", (d,)),
            (f"soil.block{i}.ln2.gamma", (d,)),
            (f"soil.block{i}.ln2.beta", (d,)),
        ]
    shapes += [
        ("head.fc1.w", (cfg.flat_dim, cfg.h1)),
        ("head.fc1.b", (cfg.h1,)),
        ("head.fc2.w", (cfg.h1 + N_SITE_FEATURES, cfg.h2)),
        ("head.fc2.b", (cfg.h2,)),
        ("head.fc3.w", (cfg.h2, N_CLASSES)),
        ("head.fc3.b", (N_CLASSES,)),
    ]
    return shapes


def count_params(cfg: ModelConfig) -> int:
    """Total scalar parameter count for the configuration."""
    return int(sum(np.prod(s) for _, s in param_shapes(cfg)))


def _init_array(rng: SplitMix64, name: str, shape: tuple[int, ...]) -> np.ndarray:
    if name.endswith(".gamma"):
        return np.ones(shape)
    if name.endswith(".beta") or name.endswith(".b"):
        return np.zeros(shape)
    return glorot_uniform(rng, shape[0], shape[1], shape)


class ModelParams:
    """All weights, addressable by name and by structured accessors."""

    def __init__(self, cfg: ModelConfig, by_name: dict[str, Param]):
        self.cfg = cfg
        self._order = [n for n, _ in param_shapes(cfg)]
        missing = [n for n in self._order if n not in by_name]
        if missing:
            raise ShapeError(f"missing parameters: {missing[:3]}...")
        self._by_name = by_name
        d = cfg.d_model

        def lin(prefix: str) -> LinearParams:
            return LinearParams(w=by_name[f"{prefix}.w"], b=by_name[f"{prefix}.b"])

        def ln(prefix: str) -> LayerNormParams:
            return LayerNormParams(gamma=by_name[f"{prefix}.gamma"], beta=by_name[f"{prefix}.beta"])

        def attn(prefix: str, n_heads: int) -> AttentionParams:
            return AttentionParams(
                q=tuple(by_name[f"{prefix}.q{h}"] for h in range(n_heads)),
                k=tuple(by_name[f"{prefix}.k{h}"] for h in range(n_heads)),
                v=tuple(by_name[f"{prefix}.v{h}"] for h in range(n_heads)),
                o=by_name[f"{prefix}.o"],
            )

        self.eq_proj = lin("eq.proj")
        self.eq_blocks = [
            EqBlockParams(attn=attn(f"eq.block{i}.attn", cfg.eq_heads), ln=ln(f"eq.block{i}.ln"))
            for i in range(cfg.eq_loops)
        ]
        self.fc_out = lin("eq.fc_out")
        self.fc1 = lin("eq.fc1")
        self.soil_proj = lin("soil.proj")
        self.soil_blocks = [
            SoilBlockParams(
                attn=attn(f"soil.block{i}.attn", cfg.soil_heads),
                ln1=ln(f"soil.block{i}.ln1"),
                ffn1=lin(f"soil.block{i}.ffn1"),
                ffn2=lin(f"soil.block{i}.ffn2"),
                ln2=ln(f"soil.block{i}.ln2"),
            )
            for i in range(cfg.soil_loops)
        ]
        self.head1 = lin("head.fc1")
        self.head2 = lin("head.fc2")
        self.head3 = lin("head.fc3")

    def named(self) -> list[tuple[str, Param]]:
        return [(n, self._by_name[n]) for n in self._order]

    def zero_grads(self) -> None:
        for _, p in self.named():
            p.zero_grad()

    def copy(self) -> "ModelParams":
        return ModelParams(self.cfg, {n: Param(p.data.copy()) for n, p in self.named()})

    def n_scalars(self) -> int:
        return sum(p.data.size for _, p in self.named())


def init_params(cfg: ModelConfig, seed: int | None = None) -> ModelParams:
    """Glorot-uniform weights, zero biases, unit layer-norm gains."""
    rng = SplitMix64(cfg.seed if seed is None else seed)
    by_name = {name: Param(_init_array(rng, name, shape)) for name, shape in param_shapes(cfg)}
    return ModelParams(cfg, by_name)


@dataclass(frozen=True)
class BatchInputs:
    """Model-ready arrays; SPT and site scalars are standardized upstream."""

    spectra: np.ndarray  # [B, l_spec]
    spt: np.ndarray  # [B, 10]
    tokens: np.ndarray  # [B, 10]
    site: np.ndarray  # [B, 4]

    def __post_init__(self):
        b = self.spt.shape[0]
        for name, arr, cols in (("spt", self.spt, N_LAYERS), ("tokens", self.tokens, N_LAYERS), ("site", self.site, N_SITE_FEATURES)):
            if arr.shape != (b, cols):
                raise ShapeError(f"{name} must be [{b}, {cols}], got {arr.shape}")
        if self.spectra.ndim != 2 or self.spectra.shape[0] != b:
            raise ShapeError(f"spectra must be [{b}, l_spec], got {self.spectra.shape}")

    def __len__(self) -> int:
        return self.spt.shape[0]

    def take(self, idx) -> "BatchInputs":
        return BatchInputs(self.spectra[idx], self.spt[idx], self.tokens[idx], self.site[idx])


def build_inputs(
    sites: list[SiteRecord], spectra: list[Spectrum], standardizer: Standardizer
) -> BatchInputs:
    if len(sites) != len(spectra):
        raise ShapeError(f"{len(sites)} sites but {len(spectra)} spectra")
    spt_rows, site_rows = [], []
    for s in sites:
        spt_std, site_std = standardize_site(standardizer, s)
        spt_rows.append(spt_std)
        site_rows.append(site_std)
    return BatchInputs(
        spectra=np.array([sp.bins for sp in spectra], dtype=np.float64),
        spt=np.array(spt_rows),
        tokens=np.array([s.soil_tokens for s in sites]),
        site=np.array(site_rows),
    )


@dataclass(frozen=True)
class Prediction:
    p_noliq: float
    p_liq: float
    logits: tuple[float, float]

    @property
    def predicted_label(self) -> int:
        # ties at 0.5 resolve to not-liquefied
        return 1 if self.p_liq > self.p_noliq else 0


def soil_encoder_forward(
    params: ModelParams, cfg: ModelConfig, inputs: BatchInputs, mode: str = ops.MODE_EVAL, rng: SplitMix64 | None = None
) -> Tensor:
    """[B, 10, 2] -> projection + positions -> stacked blocks -> [B, 10, 64]."""
    spec = BlockSpec(n_heads=cfg.soil_heads, d_model=cfg.d_model, d_ff=cfg.d_ff, dropout_rate=cfg.dropout_rate)
    x = Tensor(np.stack([inputs.spt, inputs.tokens], axis=-1))
    h = linear(x, params.soil_proj)
    h = ops.add_const(h, positional_encoding(cfg.l_soil, cfg.d_model))
    for block in params.soil_blocks:
        h = soil_encoder_block(h, block, spec, rng, mode)
    return h


def eq_encoder_forward(params: ModelParams, cfg: ModelConfig, inputs: BatchInputs) -> Tensor:
    """[B, l_spec] -> projection + positions -> blocks -> FC stack -> pooled [B, 10, 64]."""
    if inputs.spectra.shape[1] != cfg.l_spec:
        raise ShapeError(f"spectra length {inputs.spectra.shape[1]} != l_spec {cfg.l_spec}")
    spec = BlockSpec(n_heads=cfg.eq_heads, d_model=cfg.d_model, d_ff=cfg.d_ff, dropout_rate=cfg.dropout_rate)
    if cfg.eq_channels == 1:
        x = inputs.spectra[..., None]
    else:
        freq = np.linspace(0.0, 1.0, cfg.l_spec)
        x = np.stack([inputs.spectra, np.broadcast_to(freq, inputs.spectra.shape)], axis=-1)
    h = linear(Tensor(x), params.eq_proj)
    h = ops.add_const(h, positional_encoding(cfg.l_spec, cfg.d_model))
    for block in params.eq_blocks:
        h = eq_encoder_block(h, block, spec)
    h = linear(ops.leaky_relu(linear(h, params.fc_out), spec.leaky_slope), params.fc1)
    return ops.adaptive_avg_pool(h, cfg.l_pool)


def forward_batch(
    params: ModelParams,
    cfg: ModelConfig,
    inputs: BatchInputs,
    mode: str = ops.MODE_EVAL,
    rng: SplitMix64 | None = None,
) -> tuple[Tensor, Tensor]:
    """Returns (probabilities [B, 2], logits [B, 2]). Class 1 is liquefied."""
    b = len(inputs)
    h_soil = soil_encoder_forward(params, cfg, inputs, mode, rng)
    if cfg.use_eq_stream:
        h_eq = eq_encoder_forward(params, cfg, inputs)
    else:
        h_eq = Tensor(np.zeros((b, cfg.l_pool, cfg.d_model)))
    combined = ops.concat_last([h_soil, h_eq])
    flat = ops.reshape(combined, (b, cfg.flat_dim))
    h1 = ops.leaky_relu(linear(flat, params.head1), 0.01)
    site = Tensor(inputs.site if cfg.use_site_stream else np.zeros((b, N_SITE_FEATURES)))
    h2 = ops.leaky_relu(linear(ops.concat_last([h1, site]), params.head2), 0.01)
    logits = linear(h2, params.head3)
    return ops.softmax_last(logits), logits


def predict_batch(params: ModelParams, cfg: ModelConfig, inputs: BatchInputs) -> list[Prediction]:
    probs, logits = forward_batch(params, cfg, inputs, ops.MODE_EVAL, None)
    return [
        Prediction(p_noliq=float(p[0]), p_liq=float(p[1]), logits=(float(l[0]), float(l[1])))
        for p, l in zip(probs.data, logits.data)
    ]


def predict_single(params: ModelParams, cfg: ModelConfig, inputs: BatchInputs) -> Prediction:
    if len(inputs) != 1:
        raise ShapeError(f"predict_single expects a batch of 1, got {len(inputs)}")
    return predict_batch(params, cfg, inputs)[0]
