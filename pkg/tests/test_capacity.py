import math

import numpy as np
import pytest

from gramspec.capacity import NoiseLevel, capacity_from_limit, capacity_from_spectrum
from gramspec.closed_forms import mp_density
from gramspec.errors import InvalidInput
from gramspec.measures import VarianceProfile
from gramspec.simulator import EnsembleSpec, SpectrumSample, sample_spectrum
from gramspec.spectra import DensityCurve


def narrow_bump_curve(center=1.0, width=1e-5):
    """Unit-mass triangular bump, a stand-in for a point mass at `center`."""
    x = np.linspace(center - width, center + width, 2001)
    vals = np.clip(1 - np.abs(x - center) / width, 0, None) / width
    return DensityCurve(x, vals, 1e-6)


class TestCapacityFromSpectrum:
    def test_single_unit_eigenvalue(self):
        sample = SpectrumSample(np.array([1.0]), None, (1, 1))
        assert capacity_from_spectrum(sample, NoiseLevel(1.0)) == pytest.approx(math.log(2))

    def test_zero_spectrum(self):
        sample = SpectrumSample(np.zeros(4), None, (4, 6))
        assert capacity_from_spectrum(sample, NoiseLevel(2.0)) == 0.0

    def test_bits_flag(self):
        sample = SpectrumSample(np.array([1.0]), None, (1, 1))
        assert capacity_from_spectrum(sample, NoiseLevel(1.0), bits=True) == pytest.approx(1.0)

    def test_monotone_in_noise(self):
        sample = SpectrumSample(np.sort(np.random.default_rng(0).uniform(0, 4, 20)),
                                None, (20, 30))
        caps = [capacity_from_spectrum(sample, NoiseLevel(s)) for s in (0.5, 1, 2, 4)]
        assert all(a > b for a, b in zip(caps, caps[1:]))

    def test_scale_invariance(self):
        rng = np.random.default_rng(1)
        ev = np.sort(rng.uniform(0, 3, 10))
        a = 2.7
        c1 = capacity_from_spectrum(SpectrumSample(ev, None, (10, 12)), NoiseLevel(1.0))
        c2 = capacity_from_spectrum(SpectrumSample(a * ev, None, (10, 12)), NoiseLevel(a))
        assert c1 == pytest.approx(c2, rel=1e-12)


class TestCapacityFromLimit:
    def test_point_mass_at_one(self):
        val = capacity_from_limit(narrow_bump_curve(), 1.0, NoiseLevel(1.0))
        assert val == pytest.approx(math.log(2), rel=1e-6)

    def test_vanishes_for_large_noise(self):
        curve = narrow_bump_curve()
        vals = [capacity_from_limit(curve, 1.0, NoiseLevel(s)) for s in (1, 10, 1e4)]
        assert vals[0] > vals[1] > vals[2]
        assert vals[-1] <= 1e-3

    def test_transposed_curve_rejected(self):
        x = np.linspace(0, 2, 100)
        curve = DensityCurve(x, 0.5 * np.ones(100), 1e-3, atom_at_zero=0.5)
        with pytest.raises(InvalidInput):
            capacity_from_limit(curve, 0.5, NoiseLevel(1.0))

    def test_mp_empirical_matches_limit(self):
        prof = VarianceProfile.constant(1.0)
        noise = NoiseLevel(1.0)
        caps = [capacity_from_spectrum(
            sample_spectrum(EnsembleSpec("gaussian", s, 200, 400), prof, np.zeros(200)),
            noise) for s in range(10)]
        grid = np.linspace(0, 1.2 * (1 + np.sqrt(0.5)) ** 2, 4000)
        curve = DensityCurve(grid, mp_density(grid, 0.5, 1.0), 1e-3)
        limit = capacity_from_limit(curve, 0.5, noise)
        assert abs(np.mean(caps) - limit) / limit <= 0.02

    def test_empirical_gap_shrinks_with_size(self):
        prof = VarianceProfile.constant(1.0)
        noise = NoiseLevel(1.0)
        grid = np.linspace(0, 1.2 * (1 + np.sqrt(0.5)) ** 2, 4000)
        curve = DensityCurve(grid, mp_density(grid, 0.5, 1.0), 1e-3)
        limit = capacity_from_limit(curve, 0.5, noise)
        gaps = []
        for n_rows, n_cols in ((50, 100), (200, 400)):
            caps = [capacity_from_spectrum(
                sample_spectrum(EnsembleSpec("gaussian", s, n_rows, n_cols),
                                prof, np.zeros(n_rows)), noise)
                for s in range(10)]
            gaps.append(abs(np.median(caps) - limit))
        assert gaps[1] <= gaps[0]


class TestNoiseLevel:
    def test_positive_required(self):
        with pytest.raises(InvalidInput):
            NoiseLevel(0.0)
