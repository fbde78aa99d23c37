"""Ground-motion spectral preprocessing.

A raw acceleration time series is turned into the fixed-length input the
earthquake encoder consumes: zero-pad to a power of two, take the FFT
magnitude over the non-negative frequencies, average it into equal-width
bands over [0, f_max], and normalize. A zero-energy marker motion encodes
to the all-zeros spectrum.

All arithmetic is double precision and every function here is pure.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import InputError, RowError, SchemaError

DEFAULT_SPECTRUM_LEN = 256
DEFAULT_F_MAX_HZ = 25.0
DEFAULT_EPS = 1e-8

NORM_ENERGY = "energy"
NORM_MAX = "max"


@dataclass(frozen=True)
class MotionRecord:
    """Acceleration time series in g at a fixed sampling interval."""

    samples: np.ndarray
    dt: float
    id: str = ""

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise InputError("motion needs a non-empty 1-D sample array")
        if not np.isfinite(arr).all():
            raise InputError(f"motion {self.id!r} contains non-finite samples")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InputError(f"motion {self.id!r} has invalid dt={self.dt}")
        object.__setattr__(self, "samples", arr)

    @property
    def pga(self) -> float:
        """Peak ground acceleration, max |a|."""
        return float(np.max(np.abs(self.samples)))

    def scaled(self, factor: float) -> "MotionRecord":
        return MotionRecord(self.samples * factor, self.dt, self.id)


class NullMotion:
    """Marker for the zero-energy motion used in data augmentation."""

    __slots__ = ()

    def __repr__(self) -> str:  # pragma: no cover
        return "NullMotion()"


@dataclass(frozen=True)
class SpectralConfig:
    """How motions are reduced to encoder inputs."""

    l_spec: int = DEFAULT_SPECTRUM_LEN
    f_max: float = DEFAULT_F_MAX_HZ
    norm_kind: str = NORM_ENERGY
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if self.l_spec < 1:
            raise InputError(f"l_spec must be >= 1, got {self.l_spec}")
        if not (np.isfinite(self.f_max) and self.f_max > 0):
            raise InputError(f"f_max must be positive, got {self.f_max}")
        if self.norm_kind not in (NORM_ENERGY, NORM_MAX):
            raise InputError(f"unknown norm_kind {self.norm_kind!r}")


@dataclass(frozen=True)
class Spectrum:
    """Normalized magnitude spectrum over [0, f_max]."""

    bins: np.ndarray
    f_max: float
    norm_kind: str

    def __post_init__(self):
        arr = np.asarray(self.bins, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise InputError("spectrum bins must be a non-empty 1-D array")
        if not np.isfinite(arr).all():
            raise InputError("spectrum bins contain non-finite values")
        if (arr < 0).any():
            raise InputError("spectrum bins must be non-negative")
        object.__setattr__(self, "bins", arr)

    def __len__(self) -> int:
        return self.bins.size

    @property
    def is_null(self) -> bool:
        return not self.bins.any()


def zero_spectrum(cfg: SpectralConfig) -> Spectrum:
    return Spectrum(np.zeros(cfg.l_spec), cfg.f_max, cfg.norm_kind)


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev = (rev << 1) | ((idx >> b) & 1)
    return rev


def _fft_pow2(x: np.ndarray) -> np.ndarray:
    """Iterative radix-2 decimation-in-time FFT; len(x) must be 2**k."""
    n = x.size
    if n == 1:
        return x.astype(np.complex128)
    a = x.astype(np.complex128)[_bit_reverse_indices(n)]
    half = 1
    while half < n:
        w = np.exp((-1j * np.pi / half) * np.arange(half))
        a = a.reshape(-1, 2, half)
        even = a[:, 0, :]
        odd = a[:, 1, :] * w
        a = np.concatenate([even + odd, even - odd], axis=1).reshape(-1)
        half *= 2
    return a


def next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def fft_magnitude(motion: MotionRecord) -> tuple[np.ndarray, float]:
    """|DFT| of the zero-padded signal over the non-negative frequencies.

    Returns (magnitudes, f_step): N/2 + 1 bins after padding to the next
    power of two N, spaced 1/(N*dt) Hz apart.
    """
    n = next_pow2(motion.samples.size)
    padded = np.zeros(n, dtype=np.float64)
    padded[: motion.samples.size] = motion.samples
    spec = _fft_pow2(padded)
    mags = np.abs(spec[: n // 2 + 1])
    return mags, 1.0 / (n * motion.dt)


def band_resample(mags: np.ndarray, f_step: float, f_max: float, l_spec: int) -> np.ndarray:
    """Average source bins into l_spec equal-width bands over [0, f_max].

    Source bin k sits at center frequency k*f_step. A band mean over an
    empty band is 0. The last band is closed at f_max.
    """
    mags = np.asarray(mags, dtype=np.float64)
    if l_spec < 1:
        raise InputError(f"l_spec must be >= 1, got {l_spec}")
    nyquist = (mags.size - 1) * f_step
    if f_max > nyquist * (1 + 1e-12):
        raise InputError(f"f_max={f_max} exceeds source Nyquist {nyquist}")
    centers = np.arange(mags.size) * f_step
    width = f_max / l_spec
    band = np.floor(centers / width).astype(np.int64)
    band[np.isclose(centers, f_max, rtol=1e-12, atol=0.0)] = l_spec - 1
    keep = (band >= 0) & (band < l_spec)
    sums = np.bincount(band[keep], weights=mags[keep], minlength=l_spec)
    counts = np.bincount(band[keep], minlength=l_spec)
    out = np.zeros(l_spec, dtype=np.float64)
    nonzero = counts > 0
    out[nonzero] = sums[nonzero] / counts[nonzero]
    return out


def spectral_divisor(bins: np.ndarray, kind: str, eps: float = DEFAULT_EPS) -> float:
    """Normalization divisor; shared by the plain and frozen-scale paths."""
    bins = np.asarray(bins, dtype=np.float64)
    if kind == NORM_ENERGY:
        return float(np.sqrt(np.sum(bins * bins) + eps))
    if kind == NORM_MAX:
        return float(np.max(bins) + eps) if bins.size else eps
    raise InputError(f"unknown norm_kind {kind!r}")


def normalize_spectrum(bins: np.ndarray, kind: str = NORM_ENERGY, eps: float = DEFAULT_EPS) -> np.ndarray:
    bins = np.asarray(bins, dtype=np.float64)
    if not np.isfinite(bins).all():
        raise InputError("bins contain non-finite values")
    if (bins < 0).any():
        raise InputError("bins must be non-negative")
    return bins / spectral_divisor(bins, kind, eps)


def encode_motion(motion: MotionRecord | NullMotion, cfg: SpectralConfig = SpectralConfig()) -> Spectrum:
    """Full chain: FFT magnitude -> band averages -> normalization."""
    if isinstance(motion, NullMotion):
        return zero_spectrum(cfg)
    mags, f_step = fft_magnitude(motion)
    bins = band_resample(mags, f_step, cfg.f_max, cfg.l_spec)
    return Spectrum(normalize_spectrum(bins, cfg.norm_kind, cfg.eps), cfg.f_max, cfg.norm_kind)


def encode_motion_scaled(
    motion: MotionRecord | NullMotion, cfg: SpectralConfig, factor: float
) -> Spectrum:
    """Encode an amplitude-scaled motion against the unscaled divisor.

    Plain normalization is (nearly) amplitude-invariant, so what-if scaling
    freezes the divisor at its factor=1 value: the result is the canonical
    spectrum multiplied by the factor, and at factor 1.0 it is bit-identical
    to encode_motion.
    """
    if not (np.isfinite(factor) and factor >= 0):
        raise InputError(f"scale factor must be finite and >= 0, got {factor}")
    if isinstance(motion, NullMotion):
        return zero_spectrum(cfg)
    base_mags, f_step = fft_magnitude(motion)
    base_bins = band_resample(base_mags, f_step, cfg.f_max, cfg.l_spec)
    divisor = spectral_divisor(base_bins, cfg.norm_kind, cfg.eps)
    mags, f_step = fft_magnitude(motion.scaled(factor))
    bins = band_resample(mags, f_step, cfg.f_max, cfg.l_spec)
    return Spectrum(bins / divisor, cfg.f_max, cfg.norm_kind)


MOTION_CSV_HEADER = ("t", "a")
_DT_REL_TOL = 1e-9


def read_motion_csv(text: str, motion_id: str = "") -> MotionRecord:
    """Parse the `t,a` motion format; dt is inferred from the first two rows.

    The time column must be uniformly spaced within 1e-9 relative tolerance.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("motion file is empty") from None
    header = [c.strip().lstrip("﻿") for c in header]
    if tuple(header) != MOTION_CSV_HEADER:
        raise SchemaError(f"motion header must be 't,a', got {','.join(header)!r}")
    times: list[float] = []
    accels: list[float] = []
    for i, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise RowError(i, f"expected 2 columns, got {len(row)}")
        try:
            times.append(float(row[0]))
            accels.append(float(row[1]))
        except ValueError:
            raise RowError(i, f"non-numeric cell in {row!r}") from None
    if len(times) < 2:
        raise SchemaError("motion file needs at least 2 data rows to infer dt")
    dt = times[1] - times[0]
    if dt <= 0:
        raise SchemaError(f"non-increasing time column, dt={dt}")
    t = np.asarray(times)
    if np.max(np.abs(np.diff(t) - dt)) > _DT_REL_TOL * abs(dt):
        raise SchemaError("time column is not uniformly spaced within 1e-9 relative tolerance")
    return MotionRecord(np.asarray(accels), dt, motion_id)


def write_motion_csv(motion: MotionRecord) -> str:
    lines = ["t,a"]
    for i, a in enumerate(motion.samples):
        lines.append(f"{repr(i * motion.dt)},{repr(float(a))}")
    return "\n".join(lines) + "\n"
