"""Tensors, trainable parameters, and the gradient tape.

The tape records every primitive op in execution order together with a
closure computing its vector-Jacobian product. `backward` walks the record
in exact reverse order, seeding the scalar loss with gradient 1 and summing
contributions wherever a tensor fans out. Gradients land on leaf tensors
only (anything not produced by a taped op), which is where parameters live.
"""

from __future__ import annotations

import threading

import numpy as np

from ..errors import ShapeError, StateError


class Tensor:
    """Immutable-by-convention dense array of float64 values."""

    __slots__ = ("data", "grad")

    def __init__(self, data):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Tensor(shape={self.data.shape})"


class Param:
    """Trainable tensor with a gradient accumulator."""

    __slots__ = ("value",)

    def __init__(self, data):
        self.value = Tensor(data)

    @property
    def data(self) -> np.ndarray:
        return self.value.data

    @data.setter
    def data(self, arr: np.ndarray) -> None:
        if arr.shape != self.value.data.shape:
            raise ShapeError(f"param update shape {arr.shape} != {self.value.data.shape}")
        self.value.data = arr

    @property
    def grad(self) -> np.ndarray:
        if self.value.grad is None:
            self.value.grad = np.zeros_like(self.value.data)
        return self.value.grad

    def zero_grad(self) -> None:
        self.value.grad = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.data.shape

    def __repr__(self) -> str:  # pragma: no cover
        return f"Param(shape={self.value.data.shape})"


_ACTIVE = threading.local()


class Tape:
    """Ordered record of primitive ops for one forward episode."""

    __slots__ = ("_entries", "_prev")

    def __init__(self):
        self._entries: list[tuple[Tensor, tuple[Tensor, ...], object]] = []
        self._prev = None

    def __enter__(self) -> "Tape":
        self._prev = getattr(_ACTIVE, "tape", None)
        _ACTIVE.tape = self
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE.tape = self._prev
        self._prev = None

    def __len__(self) -> int:
        return len(self._entries)


def record(out: Tensor, inputs: tuple[Tensor, ...], vjp) -> None:
    """Append an op to the active tape, if any.

    `vjp(g)` must return one gradient array (or None) per input; returned
    arrays are never mutated by the accumulator, so views are acceptable.
    """
    tape = getattr(_ACTIVE, "tape", None)
    if tape is not None:
        tape._entries.append((out, inputs, vjp))


def recording() -> bool:
    return getattr(_ACTIVE, "tape", None) is not None


def backward(tape: Tape, loss: Tensor) -> None:
    """Populate .grad on every leaf tensor reachable from `loss`.

    Gradients accumulate additively at fan-out; repeated calls keep
    accumulating, which is what minibatch training relies on.
    """
    if loss.data.size != 1:
        raise ShapeError(f"loss must be a scalar, got shape {loss.data.shape}")
    entries = tape._entries
    if not entries:
        raise StateError("backward called before any forward pass was recorded")
    produced = {id(e[0]) for e in entries}
    if id(loss) not in produced:
        raise StateError("loss tensor was not produced under this tape")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    holders: dict[int, Tensor] = {}
    for out, inputs, vjp in reversed(entries):
        g = grads.pop(id(out), None)
        if g is None:
            continue
        for t, gt in zip(inputs, vjp(g)):
            if gt is None:
                continue
            tid = id(t)
            prev = grads.get(tid)
            grads[tid] = gt if prev is None else prev + gt
            holders[tid] = t
    for tid, g in grads.items():
        if tid in produced:
            continue  # dead intermediate branch
        t = holders[tid]
        t.grad = g if t.grad is None else t.grad + g
