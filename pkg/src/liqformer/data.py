"""Site records, file ingestion, CPT->SPT conversion, standardization,
null-motion augmentation, and dataset splitting."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DomainError,
    FitError,
    InputError,
    RowError,
    SchemaError,
    SplitError,
    StateError,
)
from .rng import SplitMix64
from .signal import SpectralConfig, Spectrum, zero_spectrum

SOIL_SAND = 1
SOIL_SILTY_SAND = 2
SOIL_CLAY = 3
SOIL_TYPES = (SOIL_SAND, SOIL_SILTY_SAND, SOIL_CLAY)

# soil behavior type index for the three mapped classes
IC_BY_SOIL_TYPE = {SOIL_SAND: 1.7, SOIL_SILTY_SAND: 2.2, SOIL_CLAY: 2.95}

N_LAYERS = 10
NULL_MOTION_ID = "__null__"

LABEL_NOT_LIQUEFIED = 0
LABEL_LIQUEFIED = 1


@dataclass(frozen=True)
class SoilLayer:
    """One 1 m depth interval: SPT blow count plus a soil-type token."""

    spt_n: float
    soil_type: int

    def __post_init__(self):
        if not (math.isfinite(self.spt_n) and self.spt_n >= 0):
            raise InputError(f"spt_n must be finite and >= 0, got {self.spt_n}")
        if self.soil_type not in SOIL_TYPES:
            raise InputError(f"soil_type out of domain: {self.soil_type}")


@dataclass(frozen=True)
class SiteRecord:
    """A 10-layer profile with site scalars, motion reference, and label."""

    site_id: str
    layers: tuple[SoilLayer, ...]
    vs30: float
    dist_epi: float
    wt_depth: float
    dist_water: float
    motion_id: str
    label: int
    is_null_twin: bool = False

    def __post_init__(self):
        if len(self.layers) != N_LAYERS:
            raise InputError(f"site {self.site_id!r} needs exactly {N_LAYERS} layers, got {len(self.layers)}")
        if not (math.isfinite(self.vs30) and self.vs30 > 0):
            raise InputError(f"vs30 must be > 0, got {self.vs30}")
        for name in ("dist_epi", "wt_depth", "dist_water"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InputError(f"{name} must be finite and >= 0, got {v}")
        if self.label not in (LABEL_NOT_LIQUEFIED, LABEL_LIQUEFIED):
            raise InputError(f"label must be 0 or 1, got {self.label}")

    @property
    def spt_values(self) -> np.ndarray:
        return np.array([l.spt_n for l in self.layers], dtype=np.float64)

    @property
    def soil_tokens(self) -> np.ndarray:
        return np.array([l.soil_type for l in self.layers], dtype=np.float64)

    @property
    def site_scalars(self) -> np.ndarray:
        return np.array([self.vs30, self.dist_epi, self.wt_depth, self.dist_water], dtype=np.float64)


@dataclass(frozen=True)
class CptSample:
    """Cone resistance (MPa) with its soil behavior type index."""

    qt: float
    ic: float

    def __post_init__(self):
        if not (math.isfinite(self.qt) and self.qt > 0):
            raise DomainError(f"qt must be > 0, got {self.qt}")
        if not (math.isfinite(self.ic) and self.ic > 0):
            raise DomainError(f"ic must be > 0, got {self.ic}")


ATMOSPHERIC_PRESSURE_MPA = 0.1


def cpt_to_spt(sample: CptSample, pa: float = ATMOSPHERIC_PRESSURE_MPA) -> float:
    """Equivalent N60 blow count from cone resistance.

    qt/pa = A * N60^B with A = 92.728*ic^-2.746 and
    B = -0.1185*ic^2 + 0.5333*ic - 0.0764.
    """
    a = 92.728 * sample.ic ** (-2.746)
    b = -0.1185 * sample.ic**2 + 0.5333 * sample.ic - 0.0764
    if b <= 0:
        raise DomainError(f"exponent B={b} is not positive for ic={sample.ic}")
    return (sample.qt / (pa * a)) ** (1.0 / b)


# ---------------------------------------------------------------------------
# sites CSV

SITE_CSV_COLUMNS = (
    ["site_id", "label"]
    + [f"spt_{i}" for i in range(1, N_LAYERS + 1)]
    + [f"soil_{i}" for i in range(1, N_LAYERS + 1)]
    + ["vs30", "dist_epi", "wt_depth", "dist_water", "motion_id"]
)


def _parse_float(row_no: int, name: str, raw: str) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise RowError(row_no, f"non-numeric {name}: {raw!r}") from None
    if not math.isfinite(v):
        raise RowError(row_no, f"{name} must be finite, got {raw!r}")
    return v


def _parse_int(row_no: int, name: str, raw: str) -> int:
    v = _parse_float(row_no, name, raw)
    if v != int(v):
        raise RowError(row_no, f"{name} must be an integer, got {raw!r}")
    return int(v)


def parse_sites_csv(text: str) -> list[SiteRecord]:
    """Parse the canonical sites table; total: any malformed input raises."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = [c.strip().lstrip("﻿") for c in next(reader)]
    except StopIteration:
        raise SchemaError("sites file is empty") from None
    expected = SITE_CSV_COLUMNS
    if header != expected:
        missing = [c for c in expected if c not in header]
        if missing:
            raise SchemaError(f"missing column {missing[0]!r}")
        extra = [c for c in header if c not in expected]
        if extra:
            raise SchemaError(f"unexpected column {extra[0]!r}")
        raise SchemaError("columns out of order; expected " + ",".join(expected))
    sites: list[SiteRecord] = []
    for row_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(expected):
            raise RowError(row_no, f"expected {len(expected)} cells, got {len(row)}")
        cells = dict(zip(expected, (c.strip() for c in row)))
        soil_tokens = []
        for i in range(1, N_LAYERS + 1):
            tok = _parse_int(row_no, f"soil_{i}", cells[f"soil_{i}"])
            if tok not in SOIL_TYPES:
                raise RowError(row_no, f"soil_type out of domain: soil_{i}={tok}")
            soil_tokens.append(tok)
        try:
            layers = tuple(
                SoilLayer(_parse_float(row_no, f"spt_{i}", cells[f"spt_{i}"]), soil_tokens[i - 1])
                for i in range(1, N_LAYERS + 1)
            )
            site = SiteRecord(
                site_id=cells["site_id"],
                layers=layers,
                vs30=_parse_float(row_no, "vs30", cells["vs30"]),
                dist_epi=_parse_float(row_no, "dist_epi", cells["dist_epi"]),
                wt_depth=_parse_float(row_no, "wt_depth", cells["wt_depth"]),
                dist_water=_parse_float(row_no, "dist_water", cells["dist_water"]),
                motion_id=cells["motion_id"],
                label=_parse_int(row_no, "label", cells["label"]),
            )
        except InputError as exc:
            if isinstance(exc, RowError):
                raise
            raise RowError(row_no, str(exc)) from None
        sites.append(site)
    return sites


def sites_to_csv(sites: list[SiteRecord]) -> str:
    out = [",".join(SITE_CSV_COLUMNS)]
    for s in sites:
        cells = [s.site_id, str(s.label)]
        cells += [repr(l.spt_n) for l in s.layers]
        cells += [str(l.soil_type) for l in s.layers]
        cells += [repr(s.vs30), repr(s.dist_epi), repr(s.wt_depth), repr(s.dist_water), s.motion_id]
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# standardization

# spectra are already normalized and soil tokens are categorical, so only
# these feature columns are standardized
STANDARDIZED_FEATURES = tuple(
    [f"spt_{i}" for i in range(1, N_LAYERS + 1)] + ["vs30", "dist_epi", "wt_depth", "dist_water"]
)


@dataclass(frozen=True)
class Standardizer:
    """Per-feature (x - mu) / sigma with population sigma; sigma=0 maps to 0."""

    names: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, columns: dict[str, np.ndarray]) -> "Standardizer":
        names = tuple(columns.keys())
        if not names:
            raise FitError("no feature columns to fit")
        rows = {len(np.asarray(v)) for v in columns.values()}
        if len(rows) != 1:
            raise FitError(f"ragged columns: {sorted(rows)}")
        n = rows.pop()
        if n < 2:
            raise FitError(f"need at least 2 rows to fit, got {n}")
        mean = np.array([np.mean(columns[k]) for k in names])
        std = np.array([np.std(columns[k]) for k in names])  # population form
        return cls(names, mean, std)

    def apply(self, row: dict[str, float]) -> dict[str, float]:
        out = {}
        for i, name in enumerate(self.names):
            if name not in row:
                raise InputError(f"feature {name!r} missing from row")
            s = self.std[i]
            out[name] = (row[name] - self.mean[i]) / s if s > 0 else 0.0
        return out

    def transform_matrix(self, values: np.ndarray) -> np.ndarray:
        """Vectorized apply over rows ordered like self.names."""
        values = np.asarray(values, dtype=np.float64)
        safe = np.where(self.std > 0, self.std, 1.0)
        out = (values - self.mean) / safe
        return np.where(self.std > 0, out, 0.0)


def fit_site_standardizer(sites: list[SiteRecord]) -> Standardizer:
    if not sites:
        raise FitError("cannot fit a standardizer on zero sites")
    cols: dict[str, np.ndarray] = {}
    for i in range(N_LAYERS):
        cols[f"spt_{i + 1}"] = np.array([s.layers[i].spt_n for s in sites])
    for name in ("vs30", "dist_epi", "wt_depth", "dist_water"):
        cols[name] = np.array([getattr(s, name) for s in sites])
    return Standardizer.fit(cols)


def standardize_features(std: Standardizer, spt: np.ndarray, site4: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Standardize raw (10 SPT values, 4 site scalars) arrays."""
    if tuple(std.names) != STANDARDIZED_FEATURES:
        raise StateError("standardizer was not fitted on the site feature set")
    out = std.transform_matrix(np.concatenate([spt, site4]))
    return out[:N_LAYERS], out[N_LAYERS:]


def standardize_site(std: Standardizer, site: SiteRecord) -> tuple[np.ndarray, np.ndarray]:
    """Returns (standardized 10 SPT values, standardized 4 site scalars)."""
    return standardize_features(std, site.spt_values, site.site_scalars)


def site_to_dict(site: SiteRecord) -> dict:
    """Flat JSON object using the CSV column names."""
    d = {"site_id": site.site_id, "label": site.label}
    for i, layer in enumerate(site.layers, start=1):
        d[f"spt_{i}"] = layer.spt_n
    for i, layer in enumerate(site.layers, start=1):
        d[f"soil_{i}"] = layer.soil_type
    d.update(
        vs30=site.vs30,
        dist_epi=site.dist_epi,
        wt_depth=site.wt_depth,
        dist_water=site.dist_water,
        motion_id=site.motion_id,
    )
    if site.is_null_twin:
        d["is_null_twin"] = True
    return d


def site_from_dict(d: dict) -> SiteRecord:
    missing = [c for c in SITE_CSV_COLUMNS if c not in d]
    if missing:
        raise SchemaError(f"missing field {missing[0]!r}")
    layers = tuple(SoilLayer(float(d[f"spt_{i}"]), int(d[f"soil_{i}"])) for i in range(1, N_LAYERS + 1))
    return SiteRecord(
        site_id=str(d["site_id"]),
        layers=layers,
        vs30=float(d["vs30"]),
        dist_epi=float(d["dist_epi"]),
        wt_depth=float(d["wt_depth"]),
        dist_water=float(d["dist_water"]),
        motion_id=str(d["motion_id"]),
        label=int(d["label"]),
        is_null_twin=bool(d.get("is_null_twin", False)),
    )


# ---------------------------------------------------------------------------
# dataset

@dataclass(frozen=True)
class Dataset:
    """Immutable bundle of sites, encoded motion spectra, and the fitted
    standardizer (if any)."""

    sites: tuple[SiteRecord, ...]
    motions: dict[str, Spectrum]
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    standardizer: Standardizer | None = None

    def __post_init__(self):
        for s in self.sites:
            if not s.is_null_twin and s.motion_id not in self.motions:
                raise InputError(f"site {s.site_id!r} references unknown motion {s.motion_id!r}")

    def __len__(self) -> int:
        return len(self.sites)

    def spectrum_for(self, site: SiteRecord) -> Spectrum:
        if site.is_null_twin or site.motion_id == NULL_MOTION_ID:
            return zero_spectrum(self.spectral)
        return self.motions[site.motion_id]

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.sites], dtype=np.int64)

    def subset(self, indices) -> "Dataset":
        return replace(self, sites=tuple(self.sites[i] for i in indices))

    def with_standardizer(self, std: Standardizer) -> "Dataset":
        return replace(self, standardizer=std)


def augment_null_motion(ds: Dataset) -> Dataset:
    """Pair every site with a zero-motion, forced not-liquefied twin."""
    if any(s.is_null_twin for s in ds.sites):
        raise StateError("dataset already contains null-motion twins")
    twins = [
        replace(
            s,
            site_id=f"{s.site_id}__null",
            motion_id=NULL_MOTION_ID,
            label=LABEL_NOT_LIQUEFIED,
            is_null_twin=True,
        )
        for s in ds.sites
    ]
    return replace(ds, sites=ds.sites + tuple(twins))


def stratified_split(ds: Dataset, val_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Label-stratified (train, val) split, deterministic in the seed."""
    if not (0 < val_fraction < 1):
        raise SplitError(f"val_fraction must be in (0, 1), got {val_fraction}")
    n = len(ds.sites)
    rng = SplitMix64(seed)
    order = rng.permutation(n)
    val_idx: list[int] = []
    train_idx: list[int] = []
    for label in (LABEL_NOT_LIQUEFIED, LABEL_LIQUEFIED):
        cls = [i for i in order if ds.sites[i].label == label]
        n_val = int(round(val_fraction * len(cls)))
        val_idx.extend(cls[:n_val])
        train_idx.extend(cls[n_val:])
    if not val_idx or not train_idx:
        raise SplitError(
            f"split of {n} records at val_fraction={val_fraction} leaves an empty partition"
        )
    return ds.subset(sorted(train_idx)), ds.subset(sorted(val_idx))


def kfold_indices(n: int, k: int, seed: int) -> list[list[int]]:
    """k disjoint validation index sets covering range(n), sizes within 1."""
    if k < 2:
        raise SplitError(f"k must be >= 2, got {k}")
    if k > n:
        raise SplitError(f"k={k} exceeds the number of records n={n}")
    order = SplitMix64(seed).permutation(n)
    base, extra = divmod(n, k)
    folds = []
    pos = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(sorted(order[pos : pos + size]))
        pos += size
    return folds
