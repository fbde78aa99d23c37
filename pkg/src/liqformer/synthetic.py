"""Synthetic fixture corpus with a known labeling rule.

Real case histories are not shipped, so tests and the desk-scale pipeline
run on generated sites whose label follows a fixed rule:

    liquefied = high-energy motion AND low mean SPT AND shallow water table

Strong motions are narrowband low-frequency pulses; weak motions are
small-amplitude high-frequency noise, so the energy rule stays visible in
the normalized spectrum shape the model actually sees.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import LABEL_LIQUEFIED, LABEL_NOT_LIQUEFIED, SiteRecord, SoilLayer, sites_to_csv
from .rng import SplitMix64
from .signal import MotionRecord, write_motion_csv

MOTION_DT = 0.02  # 50 Hz sampling, Nyquist at the 25 Hz band edge
MOTION_SAMPLES = 640

ENERGY_THRESHOLD = 0.05  # sum(a^2)*dt, in g^2 s
MEAN_SPT_THRESHOLD = 15.0
WT_DEPTH_THRESHOLD = 3.5  # m


def motion_energy(motion: MotionRecord) -> float:
    return float(np.sum(motion.samples**2) * motion.dt)


def label_rule(energy: float, mean_spt: float, wt_depth: float) -> int:
    liquefied = (
        energy > ENERGY_THRESHOLD
        and mean_spt < MEAN_SPT_THRESHOLD
        and wt_depth < WT_DEPTH_THRESHOLD
    )
    return LABEL_LIQUEFIED if liquefied else LABEL_NOT_LIQUEFIED


def _strong_motion(rng: SplitMix64, motion_id: str) -> MotionRecord:
    amp = rng.uniform_range(0.25, 0.7, ())[()]
    f0 = rng.uniform_range(1.0, 5.0, ())[()]
    t = np.arange(MOTION_SAMPLES) * MOTION_DT
    envelope = np.hanning(MOTION_SAMPLES)
    noise = 0.02 * amp * (rng.uniform_array(MOTION_SAMPLES) - 0.5)
    return MotionRecord(amp * np.sin(2 * np.pi * f0 * t) * envelope + noise, MOTION_DT, motion_id)


def _weak_motion(rng: SplitMix64, motion_id: str) -> MotionRecord:
    amp = rng.uniform_range(0.008, 0.04, ())[()]
    f0 = rng.uniform_range(12.0, 22.0, ())[()]
    t = np.arange(MOTION_SAMPLES) * MOTION_DT
    envelope = np.hanning(MOTION_SAMPLES)
    noise = 0.3 * amp * (rng.uniform_array(MOTION_SAMPLES) - 0.5)
    return MotionRecord(amp * np.sin(2 * np.pi * f0 * t) * envelope + noise, MOTION_DT, motion_id)


@dataclass(frozen=True)
class SyntheticCorpus:
    sites: list[SiteRecord]
    motions: dict[str, MotionRecord]


def generate_corpus(n_sites: int = 165, seed: int = 0, n_strong: int = 18, n_weak: int = 6) -> SyntheticCorpus:
    """Sites with clear margins around every rule threshold (~60-65% liquefied)."""
    rng = SplitMix64(seed)
    motions: dict[str, MotionRecord] = {}
    strong_ids, weak_ids = [], []
    for i in range(n_strong):
        mid = f"eq_strong_{i:02d}"
        motions[mid] = _strong_motion(rng.derive(1000 + i), mid)
        strong_ids.append(mid)
    for i in range(n_weak):
        mid = f"eq_weak_{i:02d}"
        motions[mid] = _weak_motion(rng.derive(2000 + i), mid)
        weak_ids.append(mid)
    # the rule must separate the two pools cleanly
    assert all(motion_energy(motions[m]) > ENERGY_THRESHOLD for m in strong_ids)
    assert all(motion_energy(motions[m]) < ENERGY_THRESHOLD for m in weak_ids)

    sites: list[SiteRecord] = []
    for i in range(n_sites):
        srng = rng.derive(i)
        strong = srng.uniform() < 0.85
        low_spt = srng.uniform() < 0.85
        shallow = srng.uniform() < 0.85
        motion_id = (strong_ids if strong else weak_ids)[srng.int_below(len(strong_ids if strong else weak_ids))]
        if low_spt:
            spt = srng.uniform_range(3.0, 12.0, 10)
        else:
            spt = srng.uniform_range(18.0, 35.0, 10)
        wt_depth = srng.uniform_range(0.3, 2.5, ())[()] if shallow else srng.uniform_range(4.5, 9.0, ())[()]
        layers = tuple(
            SoilLayer(float(spt[j]), int(srng.int_below(3)) + 1) for j in range(10)
        )
        site = SiteRecord(
            site_id=f"site_{i:03d}",
            layers=layers,
            vs30=float(srng.uniform_range(120.0, 500.0, ())[()]),
            dist_epi=float(srng.uniform_range(1.0, 100.0, ())[()]),
            wt_depth=float(wt_depth),
            dist_water=float(srng.uniform_range(0.0, 35.0, ())[()]),
            motion_id=motion_id,
            label=label_rule(motion_energy(motions[motion_id]), float(np.mean(spt)), float(wt_depth)),
        )
        sites.append(site)
    return SyntheticCorpus(sites=sites, motions=motions)


def write_corpus(corpus: SyntheticCorpus, out_dir: str | Path) -> tuple[Path, Path]:
    """Write sites.csv plus a motions/ directory; returns both paths."""
    out = Path(out_dir)
    motions_dir = out / "motions"
    motions_dir.mkdir(parents=True, exist_ok=True)
    sites_path = out / "sites.csv"
    sites_path.write_text(sites_to_csv(corpus.sites))
    for mid, motion in corpus.motions.items():
        (motions_dir / f"{mid}.csv").write_text(write_motion_csv(motion))
    return sites_path, motions_dir
