import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liqformer.errors import InputError, SchemaError
from liqformer.signal import (
    MotionRecord,
    NullMotion,
    SpectralConfig,
    band_resample,
    encode_motion,
    encode_motion_scaled,
    fft_magnitude,
    next_pow2,
    normalize_spectrum,
    read_motion_csv,
    write_motion_csv,
)


def dft_oracle(x: np.ndarray) -> np.ndarray:
    """Direct O(N^2) DFT, independent of the radix-2 path."""
    n = len(x)
    k = np.arange(n)[:, None]
    return (x[None, :] * np.exp(-2j * np.pi * k * np.arange(n) / n)).sum(axis=1)


class TestFftMagnitude:
    def test_unit_impulse_flat_spectrum(self):
        mags, f_step = fft_magnitude(MotionRecord([1, 0, 0, 0], dt=0.01))
        np.testing.assert_allclose(mags, [1.0, 1.0, 1.0], atol=1e-15)
        assert f_step == pytest.approx(25.0)

    def test_zero_signal(self):
        mags, _ = fft_magnitude(MotionRecord([0, 0, 0, 0], dt=0.01))
        assert np.all(mags == 0)

    def test_cosine_peak_at_nearest_bin(self):
        # 5 Hz cosine, 1 s at 100 Hz, padded to 128 samples
        t = np.arange(100) / 100.0
        motion = MotionRecord(np.cos(2 * np.pi * 5 * t), dt=0.01)
        mags, f_step = fft_magnitude(motion)
        assert len(mags) == 65
        assert int(np.argmax(mags)) == round(5 / f_step) == 6

    def test_matches_direct_dft_all_lengths(self):
        rng = np.random.default_rng(0)
        for n in range(1, 65):
            x = rng.normal(size=n)
            mags, _ = fft_magnitude(MotionRecord(x, dt=0.02))
            n_pad = next_pow2(n)
            padded = np.zeros(n_pad)
            padded[:n] = x
            expected = np.abs(dft_oracle(padded))[: n_pad // 2 + 1]
            np.testing.assert_allclose(mags, expected, atol=1e-9)

    def test_parseval(self):
        rng = np.random.default_rng(1)
        for n in (8, 32, 64):
            x = rng.normal(size=n)
            motion = MotionRecord(x, dt=0.01)
            mags, _ = fft_magnitude(motion)
            # rebuild the full two-sided energy from the one-sided bins
            full = np.concatenate([mags, mags[-2:0:-1]])
            lhs = np.sum(full**2)
            rhs = n * np.sum(x**2)
            assert lhs == pytest.approx(rhs, rel=1e-6)

    def test_rejects_nonfinite_and_bad_dt(self):
        with pytest.raises(InputError):
            MotionRecord([1.0, np.nan], dt=0.01)
        with pytest.raises(InputError):
            MotionRecord([1.0, 2.0], dt=0.0)
        with pytest.raises(InputError):
            MotionRecord([], dt=0.01)

    def test_deterministic(self):
        x = np.random.default_rng(2).normal(size=50)
        a, _ = fft_magnitude(MotionRecord(x, dt=0.01))
        b, _ = fft_magnitude(MotionRecord(x, dt=0.01))
        assert np.array_equal(a, b)


class TestBandResample:
    def test_constant_input(self):
        out = band_resample(np.full(9, 3.5), f_step=1.0, f_max=8.0, l_spec=4)
        np.testing.assert_allclose(out, 3.5)

    def test_pairwise_means(self):
        out = band_resample(np.array([0.0, 2.0, 4.0, 6.0]), f_step=1.0, f_max=3.0, l_spec=2)
        np.testing.assert_allclose(out, [1.0, 5.0])

    def test_identity_when_aligned(self):
        mags = np.arange(8.0)
        out = band_resample(mags, f_step=1.0, f_max=7.0, l_spec=8)
        np.testing.assert_allclose(out, mags)

    def test_empty_band_is_zero(self):
        out = band_resample(np.array([1.0, 1.0]), f_step=1.0, f_max=1.0, l_spec=4)
        assert out[1] == 0.0 and out[2] == 0.0

    def test_f_max_above_nyquist_rejected(self):
        with pytest.raises(InputError):
            band_resample(np.ones(4), f_step=1.0, f_max=3.1, l_spec=2)


class TestNormalizeSpectrum:
    def test_three_four_five(self):
        out = normalize_spectrum(np.array([3.0, 4.0]), "energy")
        np.testing.assert_allclose(out, [0.6, 0.8], atol=1e-8)

    def test_zero_input_both_kinds(self):
        for kind in ("energy", "max"):
            out = normalize_spectrum(np.zeros(3), kind)
            assert np.all(out == 0)

    def test_uniform_max(self):
        out = normalize_spectrum(np.full(4, 2.0), "max")
        np.testing.assert_allclose(out, 1.0, atol=1e-7)

    @given(st.lists(st.floats(min_value=0.0, max_value=1e3), min_size=1, max_size=64))
    @settings(max_examples=100, deadline=None)
    def test_energy_norm_bound(self, vals):
        bins = np.asarray(vals)
        if np.sum(bins**2) < 1e-2:
            bins = bins + 1.0  # keep energy well above eps
        out = normalize_spectrum(bins, "energy")
        assert 1 - 1e-6 <= np.linalg.norm(out) <= 1.0


class TestEncodeMotion:
    def test_null_motion_is_zeros(self):
        spec = encode_motion(NullMotion(), SpectralConfig())
        assert len(spec) == 256
        assert spec.is_null

    def test_energy_norm_near_one(self):
        t = np.arange(512) * 0.01
        motion = MotionRecord(0.3 * np.sin(2 * np.pi * 2 * t), dt=0.01)
        spec = encode_motion(motion, SpectralConfig(l_spec=64))
        assert 1 - 1e-6 <= np.linalg.norm(spec.bins) <= 1.0

    @pytest.mark.parametrize("k", [0.5, 2.0, 10.0])
    def test_amplitude_scale_invariance(self, k):
        t = np.arange(400) * 0.01
        x = np.sin(2 * np.pi * 3 * t) + 0.2 * np.sin(2 * np.pi * 7 * t)
        cfg = SpectralConfig(l_spec=64)
        a = encode_motion(MotionRecord(x, 0.01), cfg)
        b = encode_motion(MotionRecord(k * x, 0.01), cfg)
        np.testing.assert_allclose(a.bins, b.bins, atol=1e-9)

    def test_deterministic_bits(self):
        x = np.random.default_rng(3).normal(size=300)
        cfg = SpectralConfig(l_spec=32)
        a = encode_motion(MotionRecord(x, 0.01), cfg)
        b = encode_motion(MotionRecord(x, 0.01), cfg)
        assert np.array_equal(a.bins, b.bins)


class TestEncodeMotionScaled:
    def _motion(self):
        t = np.arange(600) * 0.01
        return MotionRecord(0.5 * np.sin(2 * np.pi * 2.5 * t) * np.hanning(600), dt=0.01)

    def test_factor_one_bit_identical_to_plain(self):
        cfg = SpectralConfig(l_spec=64)
        motion = self._motion()
        plain = encode_motion(motion, cfg)
        scaled = encode_motion_scaled(motion, cfg, 1.0)
        assert np.array_equal(plain.bins, scaled.bins)

    def test_factor_zero_is_null(self):
        spec = encode_motion_scaled(self._motion(), SpectralConfig(l_spec=64), 0.0)
        assert spec.is_null

    def test_amplitude_survives_linearly(self):
        cfg = SpectralConfig(l_spec=64)
        motion = self._motion()
        base = encode_motion_scaled(motion, cfg, 1.0)
        half = encode_motion_scaled(motion, cfg, 0.5)
        np.testing.assert_allclose(half.bins, 0.5 * base.bins, rtol=1e-12)


class TestMotionCsv:
    def test_round_trip(self):
        motion = MotionRecord(np.array([0.0, 0.1, -0.2, 0.05]), dt=0.02, id="m1")
        text = write_motion_csv(motion)
        back = read_motion_csv(text, "m1")
        assert back.dt == pytest.approx(0.02)
        np.testing.assert_allclose(back.samples, motion.samples)

    def test_bad_header(self):
        with pytest.raises(SchemaError):
            read_motion_csv("time,accel\n0,0\n0.1,0\n")

    def test_nonuniform_spacing(self):
        with pytest.raises(SchemaError):
            read_motion_csv("t,a\n0.0,0\n0.01,0\n0.03,0\n")

    def test_needs_two_rows(self):
        with pytest.raises(SchemaError):
            read_motion_csv("t,a\n0.0,0.5\n")
