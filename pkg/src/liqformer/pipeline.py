"""End-to-end glue: corpus preparation, prepared-dataset persistence, and
the Predictor shared by the CLI and the HTTP service (one code path)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, model_version
from .data import (
    Dataset,
    SiteRecord,
    Standardizer,
    augment_null_motion,
    fit_site_standardizer,
    parse_sites_csv,
    site_from_dict,
    site_to_dict,
    standardize_features,
    stratified_split,
)
from .errors import InputError, SchemaError, ShapeError
from .explain import Attribution, Instance, ModelFn, SensitivityGrid, sensitivity_grid, shapley_sample
from .model import BatchInputs, ModelConfig, ModelParams, Prediction, predict_batch, predict_single
from .signal import MotionRecord, NullMotion, SpectralConfig, Spectrum, encode_motion, read_motion_csv

PREPARED_FORMAT_VERSION = 1
DEFAULT_VAL_FRACTION = 0.05


@dataclass(frozen=True)
class PreparedData:
    """Augmented dataset with its train/val partition and fitted scaler."""

    dataset: Dataset
    train_ids: tuple[str, ...]
    val_ids: tuple[str, ...]
    seed: int
    val_fraction: float

    def _subset(self, ids: tuple[str, ...]) -> Dataset:
        wanted = set(ids)
        idx = [i for i, s in enumerate(self.dataset.sites) if s.site_id in wanted]
        return self.dataset.subset(idx)

    @property
    def train(self) -> Dataset:
        return self._subset(self.train_ids)

    @property
    def val(self) -> Dataset:
        return self._subset(self.val_ids)


def prepare(
    sites: list[SiteRecord],
    motions: dict[str, MotionRecord],
    spectral: SpectralConfig = SpectralConfig(),
    seed: int = 0,
    val_fraction: float = DEFAULT_VAL_FRACTION,
) -> PreparedData:
    """Encode motions, augment with null-motion twins, split, and fit the
    standardizer on the training partition only."""
    spectra = {mid: encode_motion(m, spectral) for mid, m in motions.items()}
    ds = Dataset(sites=tuple(sites), motions=spectra, spectral=spectral)
    ds = augment_null_motion(ds)
    train_ds, val_ds = stratified_split(ds, val_fraction, seed)
    std = fit_site_standardizer(list(train_ds.sites))
    return PreparedData(
        dataset=ds.with_standardizer(std),
        train_ids=tuple(s.site_id for s in train_ds.sites),
        val_ids=tuple(s.site_id for s in val_ds.sites),
        seed=seed,
        val_fraction=val_fraction,
    )


def load_sites_csv(path: str | Path) -> list[SiteRecord]:
    return parse_sites_csv(Path(path).read_text())


def load_motions_dir(motions_dir: str | Path, motion_ids: set[str]) -> dict[str, MotionRecord]:
    """Read `<motion_id>.csv` for every referenced id."""
    out: dict[str, MotionRecord] = {}
    base = Path(motions_dir)
    for mid in sorted(motion_ids):
        path = base / f"{mid}.csv"
        if not path.exists():
            raise InputError(f"motion file not found: {path}")
        out[mid] = read_motion_csv(path.read_text(), mid)
    return out


def prepare_from_files(
    sites_csv: str | Path,
    motions_dir: str | Path,
    spectral: SpectralConfig = SpectralConfig(),
    seed: int = 0,
    val_fraction: float = DEFAULT_VAL_FRACTION,
) -> PreparedData:
    sites = load_sites_csv(sites_csv)
    motions = load_motions_dir(motions_dir, {s.motion_id for s in sites})
    return prepare(sites, motions, spectral, seed, val_fraction)


def save_prepared(path: str | Path, prepared: PreparedData) -> None:
    ds = prepared.dataset
    if ds.standardizer is None:
        raise InputError("prepared dataset is missing its standardizer")
    doc = {
        "format_version": PREPARED_FORMAT_VERSION,
        "seed": prepared.seed,
        "val_fraction": prepared.val_fraction,
        "spectral": {
            "l_spec": ds.spectral.l_spec,
            "f_max": ds.spectral.f_max,
            "norm_kind": ds.spectral.norm_kind,
            "eps": ds.spectral.eps,
        },
        "standardizer": {
            "names": list(ds.standardizer.names),
            "mean": [float(v) for v in ds.standardizer.mean],
            "std": [float(v) for v in ds.standardizer.std],
        },
        "sites": [site_to_dict(s) for s in ds.sites],
        "spectra": {mid: [float(v) for v in sp.bins] for mid, sp in ds.motions.items()},
        "split": {"train": list(prepared.train_ids), "val": list(prepared.val_ids)},
    }
    Path(path).write_text(json.dumps(doc))


def load_prepared(path: str | Path) -> PreparedData:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"unreadable prepared dataset: {exc}") from None
    if doc.get("format_version") != PREPARED_FORMAT_VERSION:
        raise SchemaError(f"unsupported prepared format_version {doc.get('format_version')}")
    spectral = SpectralConfig(
        l_spec=int(doc["spectral"]["l_spec"]),
        f_max=float(doc["spectral"]["f_max"]),
        norm_kind=str(doc["spectral"]["norm_kind"]),
        eps=float(doc["spectral"]["eps"]),
    )
    std = Standardizer(
        names=tuple(doc["standardizer"]["names"]),
        mean=np.array(doc["standardizer"]["mean"], dtype=np.float64),
        std=np.array(doc["standardizer"]["std"], dtype=np.float64),
    )
    motions = {
        mid: Spectrum(np.array(bins, dtype=np.float64), spectral.f_max, spectral.norm_kind)
        for mid, bins in doc["spectra"].items()
    }
    sites = tuple(site_from_dict(d) for d in doc["sites"])
    ds = Dataset(sites=sites, motions=motions, spectral=spectral, standardizer=std)
    return PreparedData(
        dataset=ds,
        train_ids=tuple(doc["split"]["train"]),
        val_ids=tuple(doc["split"]["val"]),
        seed=int(doc["seed"]),
        val_fraction=float(doc["val_fraction"]),
    )


class Predictor:
    """A loaded checkpoint plus the artifacts needed to serve it."""

    def __init__(
        self,
        cfg: ModelConfig,
        params: ModelParams,
        standardizer: Standardizer,
        spectral: SpectralConfig,
        version: str = "unversioned",
    ):
        if cfg.l_spec != spectral.l_spec:
            raise ShapeError(
                f"model expects l_spec={cfg.l_spec} but the spectral config produces {spectral.l_spec}"
            )
        self.cfg = cfg
        self.params = params
        self.standardizer = standardizer
        self.spectral = spectral
        self.version = version

    @classmethod
    def from_checkpoint_bytes(
        cls, blob: bytes, standardizer: Standardizer, spectral: SpectralConfig
    ) -> "Predictor":
        cfg, params = load_checkpoint(blob)
        return cls(cfg, params, standardizer, spectral, version=model_version(blob))

    def _inputs(self, instances: list[Instance]) -> BatchInputs:
        spt_rows, site_rows = [], []
        for inst in instances:
            spt_std, site_std = standardize_features(self.standardizer, inst.spt, inst.site4)
            spt_rows.append(spt_std)
            site_rows.append(site_std)
        return BatchInputs(
            spectra=np.array([inst.spectrum.bins for inst in instances]),
            spt=np.array(spt_rows),
            tokens=np.array([inst.tokens for inst in instances]),
            site=np.array(site_rows),
        )

    def instance_for_site(self, site: SiteRecord, spectrum: Spectrum) -> Instance:
        return Instance.from_site(site, spectrum)

    def predict_instance(self, inst: Instance) -> Prediction:
        return predict_single(self.params, self.cfg, self._inputs([inst]))

    def predict_site(self, site: SiteRecord, spectrum: Spectrum) -> Prediction:
        return self.predict_instance(self.instance_for_site(site, spectrum))

    def attribution_fn(self) -> ModelFn:
        """Batched p_liq evaluator for the Shapley estimators."""

        def f(instances) -> np.ndarray:
            preds = predict_batch(self.params, self.cfg, self._inputs(list(instances)))
            return np.array([p.p_liq for p in preds])

        return f

    def explain_instance(
        self, inst: Instance, background: list[Instance], n_perms: int = 2000, seed: int = 0
    ) -> Attribution:
        return shapley_sample(self.attribution_fn(), inst, background, n_perms=n_perms, seed=seed)

    def sensitivity(
        self,
        site: SiteRecord,
        motion: MotionRecord | NullMotion,
        pga_factors,
        spt_factors,
    ) -> SensitivityGrid:
        return sensitivity_grid(
            lambda inst: self.predict_instance(inst).p_liq,
            site,
            motion,
            self.spectral,
            pga_factors,
            spt_factors,
        )

    def background_from(self, ds: Dataset) -> list[Instance]:
        return [Instance.from_site(s, ds.spectrum_for(s)) for s in ds.sites]


# the ablation configuration matrix: component removals, head-count and
# loop-count variants, and the proposed architecture
ABLATION_MATRIX: tuple[tuple[str, dict], ...] = (
    ("no_ground_motion", {"use_eq_stream": False}),
    ("no_site_feature", {"use_site_stream": False}),
    ("soil_heads_8", {"soil_heads": 8}),
    ("soil_loops_4", {"soil_loops": 4}),
    ("soil_heads_1", {"soil_heads": 1}),
    ("eq_heads_8", {"eq_heads": 8}),
    ("eq_heads_1", {"eq_heads": 1}),
    ("proposed", {}),
)


@dataclass(frozen=True)
class AblationRow:
    name: str
    val_accuracy: float
    val_recall: float | None
    best_epoch: int
    n_params: int


def run_ablation(prepared: PreparedData, base_cfg: ModelConfig, train_cfg) -> list[AblationRow]:
    """Train every ablation configuration and report validation metrics."""
    from dataclasses import replace as dc_replace

    from .model import count_params
    from .train import train

    rows = []
    for name, overrides in ABLATION_MATRIX:
        cfg = dc_replace(base_cfg, **overrides)
        result = train(prepared.train, prepared.val, cfg, train_cfg)
        rows.append(
            AblationRow(
                name=name,
                val_accuracy=result.best_metrics.accuracy,
                val_recall=result.best_metrics.recall,
                best_epoch=result.best_epoch,
                n_params=count_params(cfg),
            )
        )
    return rows


def ablation_csv(rows: list[AblationRow]) -> str:
    lines = ["name,val_accuracy,val_recall,best_epoch,n_params"]
    for r in rows:
        recall = "" if r.val_recall is None else repr(r.val_recall)
        lines.append(f"{r.name},{repr(r.val_accuracy)},{recall},{r.best_epoch},{r.n_params}")
    return "\n".join(lines) + "\n"
