"""Loss, optimizer, training loop, metrics, and cross-validation."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, fit_site_standardizer, kfold_indices
from .errors import ConfigError, InputError, ShapeError, StateError
from .model import (
    BatchInputs,
    ModelConfig,
    ModelParams,
    build_inputs,
    forward_batch,
    init_params,
)
from .nn import Tape, Tensor, backward, ops
from .rng import SplitMix64

P_CLAMP = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    batch_size: int = 20
    lr: float = 1e-4
    weight_decay: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    checkpoint_metric: str = "val_accuracy"

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.lr > 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.checkpoint_metric != "val_accuracy":
            raise ConfigError(f"unsupported checkpoint metric {self.checkpoint_metric!r}")


@dataclass(frozen=True)
class Metrics:
    loss: float
    accuracy: float
    recall: float | None
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class EpochRow:
    epoch: int
    train_loss: float
    val_loss: float
    val_accuracy: float
    val_recall: float | None
    checkpointed: bool


@dataclass(frozen=True)
class FoldReport:
    folds: tuple[Metrics, ...]
    mean_accuracy: float
    std_accuracy: float  # population form


def bce_loss(y_true: np.ndarray, p_liq: Tensor) -> Tensor:
    """Mean binary cross-entropy against the liquefied-class probability.

    Probabilities are clamped to [1e-12, 1 - 1e-12] before the logs.
    """
    y = np.asarray(y_true, dtype=np.float64).reshape(-1)
    if y.size == 0:
        raise InputError("empty batch")
    if p_liq.data.reshape(-1).shape != y.shape:
        raise ShapeError(f"labels {y.shape} vs probabilities {p_liq.data.shape}")
    flat = ops.reshape(p_liq, y.shape)
    pc = ops.clip(flat, P_CLAMP, 1.0 - P_CLAMP)
    term = ops.add(
        ops.mul_const(ops.log(pc), y),
        ops.mul_const(ops.log(ops.rsub_const(1.0, pc)), 1.0 - y),
    )
    return ops.scale(ops.mean_all(term), -1.0)


def bce_value(y_true: np.ndarray, p_liq: np.ndarray) -> float:
    y = np.asarray(y_true, dtype=np.float64)
    p = np.clip(np.asarray(p_liq, dtype=np.float64), P_CLAMP, 1.0 - P_CLAMP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def bce_from_probs(y_true: np.ndarray, probs: Tensor) -> Tensor:
    return bce_loss(y_true, ops.slice_last(probs, 1, 2))


class AdamState:
    """First/second moment accumulators, keyed like ModelParams.named()."""

    def __init__(self, params: ModelParams):
        self.t = 0
        self.m = {n: np.zeros_like(p.data) for n, p in params.named()}
        self.v = {n: np.zeros_like(p.data) for n, p in params.named()}


def adam_step(params: ModelParams, state: AdamState, cfg) -> None:
    """One Adam update with decoupled weight decay.

    theta <- theta - lr*wd*theta - lr * m_hat / (sqrt(v_hat) + eps).
    cfg is duck-typed (lr, weight_decay, beta1, beta2, adam_eps) so the
    optimizer can be exercised outside a validated TrainConfig.
    """
    state.t += 1
    b1, b2 = cfg.beta1, cfg.beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    decay = 1.0 - cfg.lr * cfg.weight_decay
    step_scale = cfg.lr / bc1
    inv_bc2 = 1.0 / bc2
    for name, p in params.named():
        g = p.value.grad
        m = state.m[name]
        v = state.v[name]
        m *= b1
        v *= b2
        if g is not None:
            if g.shape != p.data.shape:
                raise ShapeError(f"gradient shape {g.shape} != param {p.data.shape} for {name}")
            m += (1.0 - b1) * g
            v += (1.0 - b2) * (g * g)
        denom = np.sqrt(v * inv_bc2)
        denom += cfg.adam_eps
        update = np.divide(m, denom, out=denom)
        theta = p.data
        theta *= decay
        theta -= step_scale * update


def compute_metrics(y_true: np.ndarray, p_liq: np.ndarray) -> Metrics:
    """Argmax decisions (ties go to not-liquefied), recall on the liquefied
    class, absent when the partition has no liquefied samples."""
    y = np.asarray(y_true, dtype=np.int64)
    if y.size == 0:
        raise InputError("empty partition")
    p = np.asarray(p_liq, dtype=np.float64)
    pred = (p > 0.5).astype(np.int64)
    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    tn = int(np.sum((pred == 0) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    recall = tp / (tp + fn) if (tp + fn) > 0 else None
    return Metrics(
        loss=bce_value(y, p),
        accuracy=(tp + tn) / y.size,
        recall=recall,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
    )


def _dataset_inputs(ds: Dataset) -> tuple[BatchInputs, np.ndarray]:
    if ds.standardizer is None:
        raise StateError("dataset has no fitted standardizer")
    if len(ds) == 0:
        raise InputError("empty partition")
    sites = list(ds.sites)
    spectra = [ds.spectrum_for(s) for s in sites]
    return build_inputs(sites, spectra, ds.standardizer), ds.labels()


def _eval_inputs(params: ModelParams, cfg: ModelConfig, inputs: BatchInputs, y: np.ndarray) -> Metrics:
    probs, _ = forward_batch(params, cfg, inputs, ops.MODE_EVAL, None)
    return compute_metrics(y, probs.data[:, 1])


def evaluate(params: ModelParams, cfg: ModelConfig, ds: Dataset) -> Metrics:
    """Eval-mode forward over a full partition."""
    inputs, y = _dataset_inputs(ds)
    return _eval_inputs(params, cfg, inputs, y)


@dataclass
class TrainResult:
    model_cfg: ModelConfig
    best_params: ModelParams
    best_epoch: int
    best_metrics: Metrics
    log: list[EpochRow]


def train(
    train_ds: Dataset, val_ds: Dataset, model_cfg: ModelConfig, train_cfg: TrainConfig
) -> TrainResult:
    """Seeded minibatch training; keeps the parameters from the epoch whose
    validation accuracy strictly exceeded the best seen (ties keep earlier)."""
    train_inputs, y_train = _dataset_inputs(train_ds)
    val_inputs, y_val = _dataset_inputs(val_ds)
    n = len(train_inputs)

    params = init_params(model_cfg, seed=train_cfg.seed)
    state = AdamState(params)
    master = SplitMix64(train_cfg.seed)
    rng_shuffle = master.derive(1)
    rng_dropout = master.derive(2)

    best_params = params.copy()
    best_epoch = 0
    best_acc = -1.0
    best_metrics: Metrics | None = None
    log: list[EpochRow] = []

    for epoch in range(1, train_cfg.epochs + 1):
        order = np.array(rng_shuffle.permutation(n))
        loss_sum = 0.0
        for start in range(0, n, train_cfg.batch_size):
            idx = order[start : start + train_cfg.batch_size]
            batch = train_inputs.take(idx)
            params.zero_grads()
            with Tape() as tape:
                probs, _ = forward_batch(params, model_cfg, batch, ops.MODE_TRAIN, rng_dropout)
                loss = bce_from_probs(y_train[idx], probs)
            backward(tape, loss)
            adam_step(params, state, train_cfg)
            loss_sum += loss.item() * len(idx)
        val_metrics = _eval_inputs(params, model_cfg, val_inputs, y_val)
        checkpointed = val_metrics.accuracy > best_acc
        if checkpointed:
            best_acc = val_metrics.accuracy
            best_params = params.copy()
            best_epoch = epoch
            best_metrics = val_metrics
        log.append(
            EpochRow(
                epoch=epoch,
                train_loss=loss_sum / n,
                val_loss=val_metrics.loss,
                val_accuracy=val_metrics.accuracy,
                val_recall=val_metrics.recall,
                checkpointed=checkpointed,
            )
        )
    assert best_metrics is not None
    return TrainResult(
        model_cfg=model_cfg,
        best_params=best_params,
        best_epoch=best_epoch,
        best_metrics=best_metrics,
        log=log,
    )


def epoch_log_csv(log: list[EpochRow]) -> str:
    lines = ["epoch,train_loss,val_loss,val_accuracy,val_recall,checkpointed"]
    for row in log:
        recall = "" if row.val_recall is None else repr(row.val_recall)
        lines.append(
            f"{row.epoch},{repr(row.train_loss)},{repr(row.val_loss)},"
            f"{repr(row.val_accuracy)},{recall},{int(row.checkpointed)}"
        )
    return "\n".join(lines) + "\n"


def cross_validate(
    ds: Dataset, model_cfg: ModelConfig, train_cfg: TrainConfig, k: int = 10
) -> FoldReport:
    """k-fold protocol: train on k-1 folds with a fresh seed-derived init,
    validate on the held-out fold; per-fold standardizers are refitted."""
    folds = kfold_indices(len(ds), k, train_cfg.seed)
    all_idx = set(range(len(ds)))
    fold_metrics: list[Metrics] = []
    for i, val_idx in enumerate(folds):
        train_idx = sorted(all_idx - set(val_idx))
        std = fit_site_standardizer([ds.sites[j] for j in train_idx])
        fold_train = ds.subset(train_idx).with_standardizer(std)
        fold_val = ds.subset(val_idx).with_standardizer(std)
        fold_cfg = replace(train_cfg, seed=train_cfg.seed ^ i)
        result = train(fold_train, fold_val, model_cfg, fold_cfg)
        fold_metrics.append(result.best_metrics)
    acc = np.array([m.accuracy for m in fold_metrics])
    return FoldReport(
        folds=tuple(fold_metrics),
        mean_accuracy=float(acc.mean()),
        std_accuracy=float(acc.std()),
    )
