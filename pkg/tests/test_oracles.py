import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from stickyzz.oracles import (
    dirichlet_mc,
    inclusion_probability_1d,
    ks_distance_exponential,
    ks_exponential,
    posterior_slab_moments_1d,
    refresh_survival_series,
)


class TestSurvivalSeries:
    def test_no_refresh(self):
        assert refresh_survival_series(1.7, 2.0, 0) == 1.0

    @pytest.mark.parametrize("a", [0.0, 0.3, 1.0])
    def test_small_m_closed_forms(self, a):
        # E over Dirichlet(1,1) and Dirichlet(1,1,1) worked out by hand
        assert refresh_survival_series(a, 1.0, 1) == pytest.approx(1 - a / 2, rel=1e-14)
        assert refresh_survival_series(a, 1.0, 2) == pytest.approx(1 - 2 * a / 3 + a * a / 12, rel=1e-14)

    @given(st.floats(0.0, 2.0), st.integers(0, 60))
    @settings(max_examples=50)
    def test_decreasing_in_s(self, s, m):
        assert refresh_survival_series(s + 0.1, 1.0, m) <= refresh_survival_series(s, 1.0, m) + 1e-12

    @pytest.mark.parametrize("ratio", [0.25, 0.5, 1.0, 1.5, 2.0])
    def test_exponential_limit(self, ratio):
        assert refresh_survival_series(ratio * 3.0, 3.0, 200) == pytest.approx(math.exp(-ratio), abs=0.01)

    def test_bad_m(self):
        with pytest.raises(ValueError):
            refresh_survival_series(1.0, 1.0, -1)


class TestDirichletMc:
    def test_no_refresh(self):
        est, se = dirichlet_mc(0.5, 1.0, 0, n_samples=2000, rng_seed=0)
        assert est == 1.0 and se == 0.0

    def test_matches_series_at_width(self):
        est, se = dirichlet_mc(1.0, 1.0, 2, n_samples=200_000, rng_seed=1)
        assert abs(est - refresh_survival_series(1.0, 1.0, 2)) <= 3 * se

    def test_indicators_matter_beyond_width(self):
        with_ind, se1 = dirichlet_mc(2.0, 1.0, 2, n_samples=200_000, rng_seed=2)
        without, se2 = dirichlet_mc(2.0, 1.0, 2, n_samples=200_000, rng_seed=2, indicators=False)
        assert abs(without - refresh_survival_series(2.0, 1.0, 2)) <= 3 * se2
        assert with_ind - without > 10 * math.hypot(se1, se2)

    def test_bounded_beyond_width(self):
        est, _ = dirichlet_mc(3.0, 1.0, 5, n_samples=50_000, rng_seed=3)
        assert 0.0 <= est <= 1.0

    def test_needs_samples(self):
        with pytest.raises(ValueError):
            dirichlet_mc(1.0, 1.0, 2, n_samples=10)


def evidence_ratio_by_quadrature(g, y, noise_var, slab_var):
    """m1 / m0 with the slab integral done numerically."""
    def integrand(x):
        r = y - g * x
        return math.exp(-(r @ r - y @ y) / (2 * noise_var)) * stats.norm.pdf(x, 0, math.sqrt(slab_var))

    return integrate.quad(integrand, -np.inf, np.inf, epsabs=0, epsrel=1e-12)[0]


class TestInclusion:
    @pytest.mark.parametrize(
        "g,y,p",
        [([1.0, 0.5, -0.3], [0.8, 0.6, 0.1], 0.3), ([2.0, 1.0], [0.1, -0.2], 0.5), ([0.4] * 5, [1.0] * 5, 0.05)],
    )
    @pytest.mark.parametrize("noise_var,slab_var", [(1.0, 1.0), (0.5, 3.0)])
    def test_against_quadrature(self, g, y, p, noise_var, slab_var):
        g, y = np.array(g), np.array(y)
        bf = evidence_ratio_by_quadrature(g, y, noise_var, slab_var)
        truth = p * bf / (p * bf + 1 - p)
        assert inclusion_probability_1d(g, y, noise_var, p, slab_var) == pytest.approx(truth, rel=1e-9)

    def test_zero_design_returns_prior(self):
        assert inclusion_probability_1d([0.0, 0.0], [1.0, 2.0], 1.0, 0.37) == pytest.approx(0.37)

    def test_bad_input(self):
        with pytest.raises(ValueError):
            inclusion_probability_1d([1.0], [1.0, 2.0], 1.0, 0.5)
        with pytest.raises(ValueError):
            inclusion_probability_1d([1.0], [1.0], 1.0, 1.0)

    def test_slab_moments(self):
        g, y = np.array([1.0, 2.0]), np.array([1.0, 1.0])
        mean, var = posterior_slab_moments_1d(g, y, 1.0, 1.0)
        assert var == pytest.approx(1 / 6) and mean == pytest.approx(3 / 6)


class TestKs:
    def test_accepts_exponential(self):
        x = np.random.default_rng(0).exponential(2.0, 5000)
        res = ks_exponential(x, 2.0)
        assert res.passed and res.n == 5000

    def test_rejects_wrong_mean(self):
        x = np.random.default_rng(1).exponential(2.0, 5000)
        assert not ks_exponential(x, 2.5).passed

    def test_rejects_deterministic(self):
        assert ks_distance_exponential(np.full(1000, 2.0), 2.0) == pytest.approx(1 - math.exp(-1), rel=1e-12)
        assert not ks_exponential(np.full(1000, 2.0), 2.0).passed

    def test_bad_input(self):
        with pytest.raises(ValueError):
            ks_exponential(np.ones(10), 1.0)
        with pytest.raises(ValueError):
            ks_exponential(np.r_[np.ones(200), -1.0], 1.0)
