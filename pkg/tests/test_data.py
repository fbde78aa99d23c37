import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liqformer.data import (
    CptSample,
    Dataset,
    SiteRecord,
    SoilLayer,
    Standardizer,
    augment_null_motion,
    cpt_to_spt,
    fit_site_standardizer,
    kfold_indices,
    parse_sites_csv,
    sites_to_csv,
    standardize_site,
    stratified_split,
    SITE_CSV_COLUMNS,
)
from liqformer.errors import DomainError, FitError, RowError, SchemaError, SplitError, StateError
from liqformer.signal import SpectralConfig, Spectrum


def make_site(site_id="s1", label=1, spt=None, soil=None, motion_id="m1", **kw):
    spt = spt if spt is not None else [5.0 + i for i in range(10)]
    soil = soil if soil is not None else [1, 2, 3, 1, 2, 3, 1, 2, 3, 1]
    layers = tuple(SoilLayer(s, t) for s, t in zip(spt, soil))
    defaults = dict(vs30=200.0, dist_epi=12.0, wt_depth=1.5, dist_water=8.0)
    defaults.update(kw)
    return SiteRecord(site_id=site_id, layers=layers, motion_id=motion_id, label=label, **defaults)


def make_dataset(n=6, l_spec=16):
    cfg = SpectralConfig(l_spec=l_spec)
    bins = np.zeros(l_spec)
    bins[1] = 1.0
    motions = {"m1": Spectrum(bins, cfg.f_max, cfg.norm_kind)}
    sites = tuple(make_site(site_id=f"s{i}", label=i % 2) for i in range(n))
    return Dataset(sites=sites, motions=motions, spectral=cfg)


class TestCptToSpt:
    def test_intermediates_ic_sand(self):
        # frozen from direct evaluation of the A/B formulas
        ic = 1.7
        a = 92.728 * ic ** (-2.746)
        b = -0.1185 * ic**2 + 0.5333 * ic - 0.0764
        assert a == pytest.approx(21.59723504174202, abs=1e-9)
        assert b == pytest.approx(0.4877449999999999, abs=1e-12)

    def test_n60_is_one_at_qt_equals_pa_a(self):
        for ic in (1.7, 2.2, 2.95):
            a = 92.728 * ic ** (-2.746)
            assert cpt_to_spt(CptSample(qt=0.1 * a, ic=ic)) == pytest.approx(1.0, abs=1e-12)

    def test_clay_sample_against_oracle(self):
        # independent re-evaluation, different operator arrangement
        ic, qt, pa = 2.95, 2.0, 0.1
        a = 92.728 / np.exp(2.746 * np.log(ic))
        b = -0.1185 * ic * ic + 0.5333 * ic - 0.0764
        expected = np.exp(np.log(qt / (pa * a)) / b)
        got = cpt_to_spt(CptSample(qt=qt, ic=ic))
        assert got == pytest.approx(expected, abs=1e-9)
        assert got == pytest.approx(21.884264162635375, abs=1e-9)

    @pytest.mark.parametrize("ic", [1.7, 2.2, 2.95])
    def test_monotone_in_qt(self, ic):
        qts = np.linspace(0.05, 30.0, 100)
        vals = [cpt_to_spt(CptSample(qt=q, ic=ic)) for q in qts]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            CptSample(qt=-1.0, ic=1.7)
        with pytest.raises(DomainError):
            cpt_to_spt(CptSample(qt=1.0, ic=6.0))  # B goes negative


class TestSitesCsv:
    def test_round_trip_one_row(self):
        text = sites_to_csv([make_site()])
        sites = parse_sites_csv(text)
        assert len(sites) == 1
        assert len(sites[0].layers) == 10
        assert sites[0].label == 1

    def test_soil_out_of_domain(self):
        text = sites_to_csv([make_site()]).replace("\n", "\n", 1)
        lines = text.splitlines()
        cells = lines[1].split(",")
        cells[SITE_CSV_COLUMNS.index("soil_4")] = "5"
        bad = lines[0] + "\n" + ",".join(cells) + "\n"
        with pytest.raises(RowError, match="soil_type out of domain"):
            parse_sites_csv(bad)

    def test_missing_column_named(self):
        cols = [c for c in SITE_CSV_COLUMNS if c != "spt_10"]
        with pytest.raises(SchemaError, match="spt_10"):
            parse_sites_csv(",".join(cols) + "\n")

    def test_non_numeric_cell(self):
        lines = sites_to_csv([make_site()]).splitlines()
        cells = lines[1].split(",")
        cells[SITE_CSV_COLUMNS.index("vs30")] = "fast"
        with pytest.raises(RowError):
            parse_sites_csv(lines[0] + "\n" + ",".join(cells) + "\n")

    @given(st.integers(min_value=0, max_value=10**9))
    @settings(max_examples=80, deadline=None)
    def test_parsing_is_total_under_corruption(self, seed):
        """Random cell corruption either parses fully or raises a structured
        package error, never a foreign exception or partial output."""
        from liqformer.errors import LiqformerError

        rng = np.random.default_rng(seed)
        text = sites_to_csv([make_site(site_id=f"s{i}") for i in range(3)])
        lines = text.strip().split("\n")
        row = int(rng.integers(0, len(lines)))
        cells = lines[row].split(",")
        col = int(rng.integers(0, len(cells)))
        cells[col] = str(rng.choice(["", "NaN", "-3", "7.5", "inf", "soil", "1e999", "2"]))
        lines[row] = ",".join(cells)
        corrupted = "\n".join(lines) + "\n"
        try:
            sites = parse_sites_csv(corrupted)
        except LiqformerError:
            return
        assert all(len(s.layers) == 10 for s in sites)


class TestStandardizer:
    def test_hand_arithmetic(self):
        s = Standardizer.fit({"x": np.array([1.0, 2.0, 3.0])})
        assert s.mean[0] == pytest.approx(2.0)
        assert s.std[0] == pytest.approx(0.816496580927726, abs=1e-12)

    def test_constant_column(self):
        s = Standardizer.fit({"x": np.array([5.0, 5.0, 5.0])})
        assert s.std[0] == 0.0
        assert s.apply({"x": 5.0})["x"] == 0.0
        assert s.apply({"x": 9.0})["x"] == 0.0

    def test_idempotent_on_standardized(self):
        col = np.array([-1.2, 0.3, 0.9, -0.4, 0.4])
        col = (col - col.mean()) / col.std()
        s = Standardizer.fit({"x": col})
        assert s.mean[0] == pytest.approx(0.0, abs=1e-12)
        assert s.std[0] == pytest.approx(1.0, abs=1e-12)

    @given(
        st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=2, max_size=40).filter(
            lambda v: np.std(v) > 1e-6
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_fit_apply_gives_zero_mean_unit_std(self, vals):
        col = np.asarray(vals)
        s = Standardizer.fit({"x": col})
        out = np.array([s.apply({"x": v})["x"] for v in vals])
        assert abs(out.mean()) < 1e-9
        assert np.std(out) == pytest.approx(1.0, abs=1e-9)

    def test_round_trip_inversion(self):
        col = np.array([3.0, 7.5, -2.0, 4.4])
        s = Standardizer.fit({"x": col})
        z = s.apply({"x": 7.5})["x"]
        assert z * s.std[0] + s.mean[0] == pytest.approx(7.5, abs=1e-12)

    def test_fit_errors(self):
        with pytest.raises(FitError):
            Standardizer.fit({})
        with pytest.raises(FitError):
            Standardizer.fit({"x": np.array([1.0])})

    def test_site_standardizer_covers_feature_list(self):
        sites = [make_site(site_id=f"s{i}", vs30=150.0 + i) for i in range(4)]
        std = fit_site_standardizer(sites)
        spt_std, site_std = standardize_site(std, sites[0])
        assert spt_std.shape == (10,)
        assert site_std.shape == (4,)
        # identical spt columns across sites -> sigma 0 -> standardized to 0
        assert np.all(spt_std == 0.0)


class TestAugmentNullMotion:
    def test_doubles_and_labels(self):
        ds = make_dataset(n=5)
        out = augment_null_motion(ds)
        assert len(out) == 10
        twins = [s for s in out.sites if s.is_null_twin]
        assert len(twins) == 5
        assert all(t.label == 0 for t in twins)
        assert out.sites[:5] == ds.sites

    def test_twin_has_zero_spectrum(self):
        out = augment_null_motion(make_dataset(n=2))
        twin = [s for s in out.sites if s.is_null_twin][0]
        assert out.spectrum_for(twin).is_null

    def test_double_augment_rejected(self):
        out = augment_null_motion(make_dataset(n=2))
        with pytest.raises(StateError):
            augment_null_motion(out)

    def test_empty_dataset(self):
        ds = Dataset(sites=(), motions={}, spectral=SpectralConfig(l_spec=8))
        assert len(augment_null_motion(ds)) == 0


class TestSplits:
    def test_330_records_val_size(self):
        ds = make_dataset(n=330)
        train, val = stratified_split(ds, 0.05, seed=1)
        assert len(val) in (16, 17)
        assert len(train) + len(val) == 330

    def test_deterministic(self):
        ds = make_dataset(n=40)
        a = stratified_split(ds, 0.2, seed=9)
        b = stratified_split(ds, 0.2, seed=9)
        assert [s.site_id for s in a[1].sites] == [s.site_id for s in b[1].sites]

    def test_proportions_within_one_sample(self):
        ds = make_dataset(n=100)
        train, val = stratified_split(ds, 0.1, seed=3)
        global_pos = sum(ds.labels()) / len(ds)
        for part in (train, val):
            pos = sum(part.labels())
            assert abs(pos - global_pos * len(part)) <= 1.0

    def test_single_label_dataset(self):
        cfg = SpectralConfig(l_spec=8)
        motions = {"m1": Spectrum(np.ones(8), cfg.f_max, cfg.norm_kind)}
        sites = tuple(make_site(site_id=f"s{i}", label=1) for i in range(20))
        ds = Dataset(sites=sites, motions=motions, spectral=cfg)
        train, val = stratified_split(ds, 0.1, seed=0)
        assert all(s.label == 1 for s in train.sites + val.sites)

    def test_empty_partition_rejected(self):
        ds = make_dataset(n=4)
        with pytest.raises(SplitError):
            stratified_split(ds, 0.01, seed=0)

    def test_kfold_exact_partition(self):
        folds = kfold_indices(330, 10, seed=5)
        assert len(folds) == 10
        assert all(len(f) == 33 for f in folds)
        merged = sorted(i for f in folds for i in f)
        assert merged == list(range(330))

    def test_kfold_singletons(self):
        folds = kfold_indices(10, 10, seed=2)
        assert sorted(len(f) for f in folds) == [1] * 10

    @given(st.integers(min_value=2, max_value=40), st.integers(min_value=2, max_value=12))
    @settings(max_examples=60, deadline=None)
    def test_kfold_property(self, n, k):
        if k > n:
            with pytest.raises(SplitError):
                kfold_indices(n, k, seed=1)
            return
        folds = kfold_indices(n, k, seed=1)
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 1
        assert sorted(i for f in folds for i in f) == list(range(n))
