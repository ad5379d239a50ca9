import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csisrc.model import BandDescriptor, CsiVector, DimensionError
from csisrc.preprocess import (BandSelection, SmoothingConfig, amplitude,
                               sanitise, slice_band, smooth)


def band(n, bw=125.0):
    return BandDescriptor(center_freq_mhz=5800.0, total_bandwidth_mhz=bw,
                          num_subcarriers=n)


def vec(values, bw=125.0):
    values = np.asarray(values, complex)
    return CsiVector(values=values, band=band(len(values), bw))


def random_vec(rng, n=16):
    return vec(rng.standard_normal(n) + 1j * rng.standard_normal(n))


class TestSanitise:
    def test_constant_phase_removed(self):
        amps = np.array([1.0, 2.0, 0.5, 3.0])
        out = sanitise(vec(amps * np.exp(1j * 0.9)))
        np.testing.assert_allclose(np.angle(out.values), 0, atol=1e-12)
        np.testing.assert_allclose(np.abs(out.values), amps, atol=1e-12)

    def test_linear_phase_removed(self):
        n = 32
        phases = 0.21 * np.arange(n) - 1.4
        out = sanitise(vec(np.exp(1j * phases)))
        np.testing.assert_allclose(np.angle(out.values), 0, atol=1e-9)

    def test_amplitude_preserved_random(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            x = random_vec(rng)
            out = sanitise(x)
            np.testing.assert_allclose(np.abs(out.values),
                                       np.abs(x.values), atol=1e-12)

    def test_idempotent_random(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            once = sanitise(random_vec(rng))
            twice = sanitise(once)
            np.testing.assert_allclose(twice.values, once.values,
                                       atol=1e-12)

    def test_residual_trend_is_zero(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            x = sanitise(random_vec(rng, 64))
            u = np.unwrap(np.angle(x.values))
            slope, intercept = np.polyfit(np.arange(64), u, 1)
            # intercept compared modulo one whole turn: phase is only
            # defined up to 2*pi, and unwrap may land on any branch
            intercept -= 2 * np.pi * np.round(intercept / (2 * np.pi))
            assert abs(slope) < 1e-9 and abs(intercept) < 1e-9

    def test_zero_amplitude_passes_through(self):
        x = vec([0, 1j, 2j, 3j])
        out = sanitise(x)
        assert out.values[0] == 0
        np.testing.assert_allclose(np.abs(out.values), [0, 1, 2, 3],
                                   atol=1e-12)


class TestSmooth:
    def test_alpha_one_is_identity(self):
        rng = np.random.default_rng(1)
        stream = [random_vec(rng, 4) for _ in range(5)]
        out = smooth(stream, SmoothingConfig(alpha=1.0))
        for a, b in zip(stream, out):
            np.testing.assert_array_equal(a.values, b.values)

    def test_constant_stream_fixed_point(self):
        x = vec([1 + 2j, 3 - 1j])
        out = smooth([x, x, x], SmoothingConfig(alpha=0.3))
        for o in out:
            np.testing.assert_allclose(o.values, x.values, atol=1e-15)

    def test_recurrence_values(self):
        stream = [vec([0.0]), vec([2.0])]
        out = smooth(stream, SmoothingConfig(alpha=0.5))
        assert out[0].values[0] == 0.0
        assert out[1].values[0] == 1.0

    def test_mismatched_lengths(self):
        with pytest.raises(DimensionError):
            smooth([vec([1.0]), vec([1.0, 2.0])])

    def test_alpha_range_validated(self):
        with pytest.raises(ValueError):
            SmoothingConfig(alpha=0.0)
        with pytest.raises(ValueError):
            SmoothingConfig(alpha=1.5)


class TestAmplitude:
    def test_zero_vector(self):
        np.testing.assert_array_equal(amplitude(vec([0, 0])), [0.0, 0.0])

    def test_pythagorean(self):
        assert amplitude(vec([3 + 4j]))[0] == 5.0

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_reverse_triangle_inequality(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        b = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        assert np.all(np.abs(a - b) >= np.abs(np.abs(a) - np.abs(b)) - 1e-12)


class TestSliceBand:
    def test_full_width_is_identity(self):
        rng = np.random.default_rng(2)
        x = random_vec(rng, 10)
        sel = BandSelection.from_band(x.band, 0.0, 125.0)
        out = slice_band(x, sel)
        np.testing.assert_array_equal(out.values, x.values)

    def test_20mhz_of_320_subcarriers(self):
        x = vec(np.ones(320))
        sel = BandSelection.from_band(x.band, 0.0, 20.0)
        assert len(slice_band(x, sel)) == 51  # floor(20*320/125)

    def test_5mhz_of_320_subcarriers(self):
        x = vec(np.ones(320))
        sel = BandSelection.from_band(x.band, 0.0, 5.0)
        assert len(slice_band(x, sel)) == 12  # floor(5*320/125)

    def test_out_of_band_selection_rejected(self):
        x = vec(np.ones(320))
        with pytest.raises(ValueError):
            BandSelection.from_band(x.band, 110.0, 20.0)

    def test_slice_commutes_with_amplitude(self):
        rng = np.random.default_rng(3)
        x = random_vec(rng, 20)
        sel = BandSelection.from_band(x.band, 25.0, 50.0)
        np.testing.assert_array_equal(amplitude(slice_band(x, sel)),
                                      amplitude(x)[sel.lo:sel.hi])
