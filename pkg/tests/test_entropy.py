import math

import numpy as np
import pytest
from scipy import special

from ecf8.entropy import (
    EmptyInputError,
    ExponentHistogram,
    StableModel,
    closed_form_entropy,
    compression_floor_bits,
    empirical_exponent_entropy,
    entropy_bounds,
    geometric_pmf,
    ideal_exponent,
    sample_stable,
    shannon_entropy,
)

ALPHA_GRID = np.linspace(0.1, 2.0, 50)


def series_entropy(alpha, kmax=64):
    """Direct -sum p log2 p over |k| <= kmax."""
    k = np.arange(-kmax, kmax + 1)
    p = geometric_pmf(StableModel(alpha), k)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def histo(*counts):
    c = np.zeros(16, dtype=np.int64)
    c[:len(counts)] = counts
    return ExponentHistogram(c)


class TestShannon:
    def test_degenerate(self):
        assert shannon_entropy(histo(0, 0, 9)) == 0.0

    def test_uniform(self):
        assert shannon_entropy(ExponentHistogram(np.ones(16, dtype=int))) == pytest.approx(4.0)

    def test_dyadic(self):
        assert shannon_entropy(histo(1, 1, 2, 4)) == pytest.approx(1.75, abs=1e-12)

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            shannon_entropy(ExponentHistogram())

    def test_histogram_invariants(self):
        h = ExponentHistogram.from_fp8(np.arange(256, dtype=np.uint8))
        assert h.total == 256 and (h.counts == 16).all()
        with pytest.raises(ValueError):
            ExponentHistogram(np.ones(15))


class TestGeometricLaw:
    def test_alpha2_values(self):
        m = StableModel(2.0)
        assert geometric_pmf(m, 0) == pytest.approx(0.6, abs=1e-15)
        assert geometric_pmf(m, 1) == pytest.approx(0.15, abs=1e-15)
        assert geometric_pmf(m, -1) == geometric_pmf(m, 1)

    @pytest.mark.parametrize("alpha", ALPHA_GRID)
    def test_normalised(self, alpha):
        k = np.arange(-64, 65)
        # beyond |k| = 64 the mass is below 2 q^65 / (1 + q); tiny for alpha >= 0.5
        tail = 2 * StableModel(alpha).q ** 65 / (1 + StableModel(alpha).q)
        assert geometric_pmf(StableModel(alpha), k).sum() == pytest.approx(1.0, abs=1e-9 + tail)

    def test_normalised_101_terms(self):
        k = np.arange(-50, 51)
        assert geometric_pmf(StableModel(2.0), k).sum() == pytest.approx(1.0, abs=1e-9)

    def test_model_validation(self):
        for bad in (0.0, -1.0, 2.5):
            with pytest.raises(ValueError):
                StableModel(bad)
        with pytest.raises(ValueError):
            StableModel(1.0, gamma=0.0)


class TestBounds:
    def test_alpha2(self):
        lo, hi = entropy_bounds(2.0)
        assert lo == pytest.approx(1.6, abs=1e-12)
        assert hi == pytest.approx(8 / 3, abs=1e-12)
        assert round(hi, 2) == 2.67

    def test_alpha1(self):
        assert entropy_bounds(1.0) == pytest.approx((2 / 3, 2.0))

    def test_strict(self, rng):
        for a in rng.uniform(1e-6, 2.0, 100):
            lo, hi = entropy_bounds(a)
            assert lo < hi

    @pytest.mark.parametrize("alpha", [0.0, -0.3])
    def test_invalid(self, alpha):
        with pytest.raises(ValueError):
            entropy_bounds(alpha)


class TestClosedForm:
    def test_alpha2_value(self):
        # -log2(0.6) + 2 * 0.25 * 2 / (1.25 * 0.75)
        expected = -math.log2(0.6) + 1.0 / 0.9375
        assert closed_form_entropy(2.0) == pytest.approx(expected, abs=1e-12)
        assert closed_form_entropy(2.0) == pytest.approx(series_entropy(2.0), abs=1e-9)
        assert 1.6 <= closed_form_entropy(2.0) <= 2.667

    def test_alpha1_matches_series(self):
        assert closed_form_entropy(1.0) == pytest.approx(series_entropy(1.0), abs=1e-9)

    @pytest.mark.parametrize("alpha", ALPHA_GRID)
    def test_matches_series(self, alpha):
        # a fixed |k| <= 64 window leaves > 1e-9 of tail entropy once alpha < ~0.6
        kmax = max(64, math.ceil(64 / alpha))
        assert abs(closed_form_entropy(StableModel(alpha)) - series_entropy(alpha, kmax)) < 1e-9

    @pytest.mark.parametrize("alpha", ALPHA_GRID[ALPHA_GRID >= 1.48])
    def test_sandwich_where_it_holds(self, alpha):
        lo, hi = entropy_bounds(alpha)
        assert lo <= closed_form_entropy(alpha) <= hi

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0, 1.4])
    def test_upper_bound_exceeded_for_small_alpha(self, alpha):
        # The entropy diverges as alpha -> 0 while the upper bound tends to 1/ln 2.
        assert closed_form_entropy(alpha) > entropy_bounds(alpha)[1]

    def test_floor(self):
        f = compression_floor_bits()
        assert f == pytest.approx(4.667, abs=1e-3)
        assert f - entropy_bounds(2.0)[1] == pytest.approx(2.0, abs=1e-15)
        assert f < 8


class TestSampler:
    def test_empty(self):
        assert sample_stable(1.5, 1.0, 0, 0).size == 0

    def test_deterministic(self):
        a = sample_stable(1.3, 2.0, 1000, 7)
        b = sample_stable(1.3, 2.0, 1000, 7)
        assert (a == b).all()
        assert not (a == sample_stable(1.3, 2.0, 1000, 8)).all()

    @pytest.mark.parametrize("alpha, gamma", [(0.0, 1.0), (2.1, 1.0), (1.0, 0.0), (1.0, -1.0)])
    def test_invalid(self, alpha, gamma):
        with pytest.raises(ValueError):
            sample_stable(alpha, gamma, 10, 0)

    def test_gaussian_variance(self):
        gamma = 1.7
        x = sample_stable(2.0, gamma, 10**6, 11)
        assert x.var() == pytest.approx(2 * gamma**2, rel=0.02)

    def test_tail_slope(self):
        x = np.abs(sample_stable(1.5, 1.0, 10**6, 3))
        grid = np.logspace(1, 2, 11)
        tail = np.array([(x > v).mean() for v in grid])
        slope = np.polyfit(np.log(grid), np.log(tail), 1)[0]
        assert slope == pytest.approx(-1.5, abs=0.1)

    def test_cauchy_quartiles(self):
        x = sample_stable(1.0, 2.0, 200_000, 5)
        q1, q3 = np.percentile(x, [25, 75])
        assert q1 == pytest.approx(-2.0, rel=0.03)
        assert q3 == pytest.approx(2.0, rel=0.03)


class TestIdealExponent:
    @pytest.mark.parametrize("x, e", [(1.0, 0), (-3.0, 1), (0.3, -2), (2.0, 1), (0.5, -1)])
    def test_values(self, x, e):
        assert ideal_exponent(x) == e

    def test_zero(self):
        with pytest.raises(ValueError, match="zero has no exponent"):
            ideal_exponent(0.0)

    def test_constant(self):
        assert empirical_exponent_entropy(np.full(100, 3.3)) == 0.0

    def test_all_zero(self):
        with pytest.raises(EmptyInputError):
            empirical_exponent_entropy(np.zeros(10))


def gaussian_exponent_entropy(sigma, kmin=-80, kmax=20):
    """Exact entropy of floor(log2|X|) for X ~ N(0, sigma^2), by integrating the law per octave."""
    k = np.arange(kmin, kmax + 1, dtype=float)
    edges = np.exp2(np.append(k, kmax + 1))
    cdf = special.erf(edges / (sigma * math.sqrt(2)))
    p = np.diff(cdf)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def test_empirical_matches_exact_gaussian_law():
    # Independent check of the sampler path: at alpha = 2 the exponent law is known exactly.
    x = sample_stable(2.0, 1.0, 10**6, 2024)
    exact = gaussian_exponent_entropy(math.sqrt(2))
    assert empirical_exponent_entropy(x) == pytest.approx(exact, abs=0.01)
    lo, hi = entropy_bounds(2.0)
    assert lo <= empirical_exponent_entropy(x) <= hi
