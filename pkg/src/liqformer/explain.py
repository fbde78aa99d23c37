"""Grouped-feature Shapley attribution and what-if sensitivity sweeps.

The model input is partitioned into 25 groups: the whole spectrum (EQ),
the ten SPT values, the ten soil-type tokens, and the four site scalars.
Coalition values follow the marginal convention: a present group keeps the
instance's value, an absent scalar group takes the background mean, and an
absent EQ group becomes the zero-motion spectrum. The empty coalition is
special-cased to the mean model output over the background instances, which
is also the reported base value, so attributions telescope exactly to
f(x) - base.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable, Iterable, Sequence

import numpy as np

from .data import N_LAYERS, SiteRecord
from .errors import CapacityError, InputError
from .rng import SplitMix64
from .signal import MotionRecord, NullMotion, SpectralConfig, Spectrum, encode_motion_scaled

GROUP_EQ = "EQ"
GROUP_NAMES: tuple[str, ...] = (
    (GROUP_EQ,)
    + tuple(f"SPT_{i}" for i in range(1, N_LAYERS + 1))
    + tuple(f"Soil_{i}" for i in range(1, N_LAYERS + 1))
    + ("VS30", "Dist_epi", "WT", "Dist_Water")
)
_SITE4_GROUPS = ("VS30", "Dist_epi", "WT", "Dist_Water")


@dataclass(frozen=True)
class Instance:
    """Raw (unstandardized) model input for one scenario."""

    spectrum: Spectrum
    spt: np.ndarray
    tokens: np.ndarray
    site4: np.ndarray  # vs30, dist_epi, wt_depth, dist_water

    @classmethod
    def from_site(cls, site: SiteRecord, spectrum: Spectrum) -> "Instance":
        return cls(
            spectrum=spectrum,
            spt=site.spt_values,
            tokens=site.soil_tokens,
            site4=site.site_scalars,
        )


# f evaluates a batch of instances to their liquefied-class probabilities
ModelFn = Callable[[Sequence[Instance]], np.ndarray]


@dataclass(frozen=True)
class Attribution:
    group_names: tuple[str, ...]
    phi: np.ndarray
    base_value: float
    fx: float
    n_samples: int
    std_err: np.ndarray  # zeros for the exact computation

    def phi_by_name(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.group_names, self.phi)}

    def additivity_residual(self) -> float:
        return abs(self.base_value + float(np.sum(self.phi)) - self.fx)

    def to_json_dict(self) -> dict:
        return {
            "base_value": self.base_value,
            "fx": self.fx,
            "n_samples": self.n_samples,
            "groups": [
                {"name": n, "phi": float(p), "std_err": float(s)}
                for n, p, s in zip(self.group_names, self.phi, self.std_err)
            ],
        }


def _scalar_value(instance: Instance, group: str) -> float:
    if group.startswith("SPT_"):
        return float(instance.spt[int(group[4:]) - 1])
    if group.startswith("Soil_"):
        return float(instance.tokens[int(group[5:]) - 1])
    return float(instance.site4[_SITE4_GROUPS.index(group)])


def background_means(background: Sequence[Instance]) -> dict[str, float]:
    if not background:
        raise InputError("background set is empty")
    means: dict[str, float] = {}
    for g in GROUP_NAMES:
        if g == GROUP_EQ:
            continue
        means[g] = float(np.mean([_scalar_value(b, g) for b in background]))
    return means


def _compose(instance: Instance, present: frozenset[str], means: dict[str, float], null_spectrum: Spectrum) -> Instance:
    spt = instance.spt.copy()
    tokens = instance.tokens.copy()
    site4 = instance.site4.copy()
    for i in range(N_LAYERS):
        if f"SPT_{i + 1}" not in present:
            spt[i] = means[f"SPT_{i + 1}"]
        if f"Soil_{i + 1}" not in present:
            tokens[i] = means[f"Soil_{i + 1}"]
    for j, g in enumerate(_SITE4_GROUPS):
        if g not in present:
            site4[j] = means[g]
    spectrum = instance.spectrum if GROUP_EQ in present else null_spectrum
    return Instance(spectrum=spectrum, spt=spt, tokens=tokens, site4=site4)


def mask_instance(instance: Instance, present: Iterable[str], background: Sequence[Instance]) -> Instance:
    """Model-ready input with absent groups replaced by background values."""
    present_set = frozenset(present)
    unknown = present_set - set(GROUP_NAMES)
    if unknown:
        raise InputError(f"unknown groups: {sorted(unknown)}")
    means = background_means(background)
    null_spec = Spectrum(np.zeros(len(instance.spectrum)), instance.spectrum.f_max, instance.spectrum.norm_kind)
    return _compose(instance, present_set, means, null_spec)


class _CoalitionValues:
    """Caches v(S) over the active groups.

    For the full 25-group game the empty coalition evaluates to the mean
    model output over the background instances (the reported base value).
    For restricted games (some groups frozen at the instance), the empty
    coalition is the masked evaluation with only the frozen groups kept,
    so frozen effects never leak into the active attributions.
    """

    def __init__(self, f: ModelFn, instance: Instance, background: Sequence[Instance], frozen_present: frozenset[str]):
        if not background:
            raise InputError("background set is empty")
        self.f = f
        self.instance = instance
        self.means = background_means(background)
        self.null_spectrum = Spectrum(
            np.zeros(len(instance.spectrum)), instance.spectrum.f_max, instance.spectrum.norm_kind
        )
        self.frozen = frozen_present
        if frozen_present:
            self.base_value = float(f([_compose(instance, frozen_present, self.means, self.null_spectrum)])[0])
        else:
            self.base_value = float(np.mean(f(list(background))))
        self._cache: dict[frozenset[str], float] = {}

    def compose(self, active_present: frozenset[str]) -> Instance:
        return _compose(self.instance, active_present | self.frozen, self.means, self.null_spectrum)

    def value(self, active_present: frozenset[str]) -> float:
        if not active_present:
            return self.base_value
        got = self._cache.get(active_present)
        if got is None:
            got = float(self.f([self.compose(active_present)])[0])
            self._cache[active_present] = got
        return got

    def values_batch(self, coalitions: list[frozenset[str]]) -> list[float]:
        to_eval = [s for s in set(coalitions) if s and s not in self._cache]
        if to_eval:
            outs = self.f([self.compose(s) for s in to_eval])
            for s, v in zip(to_eval, outs):
                self._cache[s] = float(v)
        return [self.value(s) for s in coalitions]


EXACT_GROUP_CAP = 15


def shapley_exact(
    f: ModelFn,
    instance: Instance,
    groups: Sequence[str],
    background: Sequence[Instance],
) -> Attribution:
    """Exact weighted-marginal Shapley values over <= 15 active groups;
    groups not listed stay frozen at the instance values."""
    groups = list(groups)
    if len(groups) > EXACT_GROUP_CAP:
        raise CapacityError(
            f"{len(groups)} active groups exceed the 2^{EXACT_GROUP_CAP} coalition cap; "
            "use shapley_sample instead"
        )
    unknown = set(groups) - set(GROUP_NAMES)
    if unknown:
        raise InputError(f"unknown groups: {sorted(unknown)}")
    frozen = frozenset(GROUP_NAMES) - set(groups)
    values = _CoalitionValues(f, instance, background, frozen)
    a = len(groups)
    # evaluate all coalitions in one batched sweep
    coalitions = []
    for bits in range(1 << a):
        coalitions.append(frozenset(groups[i] for i in range(a) if bits >> i & 1))
    values.values_batch(coalitions)

    fact = [factorial(i) for i in range(a + 1)]
    denom = fact[a]
    phi = np.zeros(a)
    for bits in range(1 << a):
        s = frozenset(groups[i] for i in range(a) if bits >> i & 1)
        size = len(s)
        weight = fact[size] * fact[a - size - 1] / denom if size < a else 0.0
        if size == a:
            continue
        v_s = values.value(s)
        for i in range(a):
            if bits >> i & 1:
                continue
            v_si = values.value(s | {groups[i]})
            phi[i] += weight * (v_si - v_s)
    fx = values.value(frozenset(groups))
    return Attribution(
        group_names=tuple(groups),
        phi=phi,
        base_value=values.base_value,
        fx=fx,
        n_samples=1 << a,
        std_err=np.zeros(a),
    )


def shapley_sample(
    f: ModelFn,
    instance: Instance,
    background: Sequence[Instance],
    n_perms: int = 2000,
    seed: int = 0,
    groups: Sequence[str] = GROUP_NAMES,
) -> Attribution:
    """Antithetic permutation estimator: each sampled permutation is
    traversed forward and reversed, accumulating marginal contributions.

    n_perms counts base permutations; the reported n_samples is the number
    of traversals (2 * n_perms). Deterministic under the seed.
    """
    if n_perms < 2:
        raise InputError(f"n_perms must be >= 2, got {n_perms}")
    groups = list(groups)
    frozen = frozenset(GROUP_NAMES) - set(groups)
    values = _CoalitionValues(f, instance, background, frozen)
    a = len(groups)
    rng = SplitMix64(seed)
    contributions = np.zeros((2 * n_perms, a))
    index_of = {g: i for i, g in enumerate(groups)}
    for p in range(n_perms):
        perm = [groups[i] for i in rng.permutation(a)]
        for t, order in enumerate((perm, perm[::-1])):
            prefixes = []
            acc: frozenset[str] = frozenset()
            for g in order:
                acc = acc | {g}
                prefixes.append(acc)
            vals = values.values_batch(prefixes)
            prev = values.base_value
            row = contributions[2 * p + t]
            for g, v in zip(order, vals):
                row[index_of[g]] = v - prev
                prev = v
    phi = contributions.mean(axis=0)
    n_trav = 2 * n_perms
    std_err = contributions.std(axis=0, ddof=1) / np.sqrt(n_trav)
    fx = values.value(frozenset(groups))
    return Attribution(
        group_names=tuple(groups),
        phi=phi,
        base_value=values.base_value,
        fx=fx,
        n_samples=n_trav,
        std_err=std_err,
    )


def global_importance(attrs: Sequence[Attribution]) -> list[tuple[str, float]]:
    """Mean |phi| per group, descending; ties keep the group-list order."""
    if not attrs:
        raise InputError("need at least one attribution")
    names = attrs[0].group_names
    for a in attrs:
        if a.group_names != names:
            raise InputError("attributions cover different group lists")
    mean_abs = np.mean([np.abs(a.phi) for a in attrs], axis=0)
    order = sorted(range(len(names)), key=lambda i: (-mean_abs[i], i))
    return [(names[i], float(mean_abs[i])) for i in order]


def beeswarm_csv(
    attrs: Sequence[Attribution],
    instances: Sequence[Instance],
    standardizer=None,
    instance_ids: Sequence[str] | None = None,
) -> str:
    """One row per (instance, group): the feature value as the model saw it
    plus its attribution.

    Scalar SPT and site features report their standardized values when a
    standardizer is given; soil tokens are categorical and stay raw. The EQ
    group reports the spectrum's L2 norm (0 for the null motion).
    """
    if len(attrs) != len(instances):
        raise InputError(f"{len(attrs)} attributions but {len(instances)} instances")
    ids = instance_ids if instance_ids is not None else [str(i) for i in range(len(attrs))]
    lines = ["instance,group,value,phi"]
    for inst_id, attr, inst in zip(ids, attrs, instances):
        if standardizer is not None:
            from .data import standardize_features

            spt_vals, site_vals = standardize_features(standardizer, inst.spt, inst.site4)
        else:
            spt_vals, site_vals = inst.spt, inst.site4
        for name, phi in zip(attr.group_names, attr.phi):
            if name == GROUP_EQ:
                value = float(np.linalg.norm(inst.spectrum.bins))
            elif name.startswith("SPT_"):
                value = float(spt_vals[int(name[4:]) - 1])
            elif name.startswith("Soil_"):
                value = float(inst.tokens[int(name[5:]) - 1])
            else:
                value = float(site_vals[_SITE4_GROUPS.index(name)])
            lines.append(f"{inst_id},{name},{repr(value)},{repr(float(phi))}")
    return "\n".join(lines) + "\n"


def waterfall_export(attr: Attribution) -> dict:
    """Ordered contribution rows from base_value to fx."""
    order = sorted(range(len(attr.group_names)), key=lambda i: (-abs(attr.phi[i]), i))
    rows = []
    running = attr.base_value
    for i in order:
        running += float(attr.phi[i])
        rows.append({"group": attr.group_names[i], "phi": float(attr.phi[i]), "running_total": running})
    return {"base_value": attr.base_value, "fx": attr.fx, "rows": rows}


@dataclass(frozen=True)
class SensitivityGrid:
    pga_factors: tuple[float, ...]
    spt_factors: tuple[float, ...]
    p: np.ndarray  # shape [len(pga_factors), len(spt_factors)]

    def to_json_dict(self) -> dict:
        return {
            "pga_factors": list(self.pga_factors),
            "spt_factors": list(self.spt_factors),
            "p": [[float(v) for v in row] for row in self.p],
        }


def sensitivity_grid(
    f_single: Callable[[Instance], float],
    site: SiteRecord,
    motion: MotionRecord | NullMotion,
    spectral: SpectralConfig,
    pga_factors: Sequence[float],
    spt_factors: Sequence[float],
) -> SensitivityGrid:
    """p_liq over the (PGA scale, SPT multiplier) grid.

    Motion scaling keeps the normalization divisor frozen at its factor-1
    value so amplitude information survives; the (1.0, 1.0) cell is
    bit-identical to the unmodified prediction.
    """
    pga = [float(a) for a in pga_factors]
    spt = [float(s) for s in spt_factors]
    if not pga or not spt:
        raise InputError("factor lists must be non-empty")
    for a in pga:
        if not (np.isfinite(a) and 0.0 <= a <= 1.0):
            raise InputError(f"pga factor {a} outside [0, 1]")
    for s in spt:
        if not (np.isfinite(s) and s >= 0.0):
            raise InputError(f"spt factor {s} must be >= 0")
    grid = np.zeros((len(pga), len(spt)))
    for i, a in enumerate(pga):
        spectrum = encode_motion_scaled(motion, spectral, a)
        for j, s in enumerate(spt):
            inst = Instance(
                spectrum=spectrum,
                spt=site.spt_values * s,
                tokens=site.soil_tokens,
                site4=site.site_scalars,
            )
            grid[i, j] = f_single(inst)
    return SensitivityGrid(pga_factors=tuple(pga), spt_factors=tuple(spt), p=grid)
