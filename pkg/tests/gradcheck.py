"""Finite-difference gradient checking used across the nn/model/train tests.

Central differences with magnitude-scaled step; comparison rule
|analytic - numeric| <= atol + rtol * (|analytic| + |numeric|).
The atol term absorbs the double-precision noise floor of the difference
quotient on near-zero gradients; a wrong gradient (sign or factor error)
still exceeds the bound by orders of magnitude.
"""

from __future__ import annotations

import numpy as np

from liqformer.nn import Tape, Tensor, backward


def numeric_scalar(fn) -> float:
    """Evaluate fn() -> Tensor without recording anything."""
    return fn().item()


def gradcheck(
    fn,
    tensors: list[Tensor],
    rtol: float = 1e-4,
    atol: float = 1e-8,
    h: float = 1e-5,
    max_coords: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Compare taped gradients of the scalar fn() against central differences.

    Checks every coordinate of every tensor unless max_coords caps the
    per-tensor sample. Returns the worst absolute deviation scaled by the
    comparison denominator (handy for reporting).
    """
    with Tape() as tape:
        loss = fn()
    backward(tape, loss)
    analytic = [np.array(t.grad) if t.grad is not None else np.zeros_like(t.data) for t in tensors]
    worst = 0.0
    for t, full_grad in zip(tensors, analytic):
        flat = t.data.reshape(-1)
        grad_flat = full_grad.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            picker = rng if rng is not None else np.random.default_rng(0)
            coords = picker.choice(flat.size, size=max_coords, replace=False)
        for idx in coords:
            orig = flat[idx]
            step = h * max(1.0, abs(orig))
            flat[idx] = orig + step
            f_plus = numeric_scalar(fn)
            flat[idx] = orig - step
            f_minus = numeric_scalar(fn)
            flat[idx] = orig
            numeric = (f_plus - f_minus) / (2.0 * step)
            a = grad_flat[idx]

            def mismatch(n: float) -> bool:
                return abs(a - n) > atol + rtol * (abs(a) + abs(n))

            if mismatch(numeric):
                # the base step can straddle a LeakyReLU kink or pick up
                # curvature truncation; a refined step converges to the
                # analytic value only when the gradient is actually right
                refined = numeric
                for shrink in (10.0, 100.0):
                    fine = step / shrink
                    flat[idx] = orig + fine
                    f_plus = numeric_scalar(fn)
                    flat[idx] = orig - fine
                    f_minus = numeric_scalar(fn)
                    flat[idx] = orig
                    refined = (f_plus - f_minus) / (2.0 * fine)
                    if not mismatch(refined):
                        break
                if mismatch(refined):
                    raise AssertionError(
                        f"gradient mismatch at coord {idx} of tensor shape {t.data.shape}: "
                        f"analytic={a!r} numeric={numeric!r} refined={refined!r}"
                    )
                numeric = refined
            err = abs(a - numeric)
            worst = max(worst, err / max(abs(a) + abs(numeric), 1.0))
        # clear accumulated grads so callers can reuse tensors
        t.grad = None
    return worst
