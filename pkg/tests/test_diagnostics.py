import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stickyzz.diagnostics import (
    EssReport,
    Trajectory,
    batch_means_se,
    ess,
    ess_report,
    extract_samples,
    integrated_autocorr_time,
    regeneration_times,
    regenerative_variance,
    statistic_set,
    time_average,
)
from stickyzz.model import build_model
from stickyzz.sticky import StickyState, simulate_sticky


def ramp():
    """x = t on [0, 2]."""
    return Trajectory([0.0], [[0.0]], [[1.0]], 2.0)


def triangle_wave(n_periods=50):
    """Deterministic zig-zag between 0 and 2 with period 4."""
    t = 2.0 * np.arange(2 * n_periods)
    x = np.where(np.arange(t.size) % 2 == 0, 0.0, 2.0)
    v = np.where(np.arange(t.size) % 2 == 0, 1.0, -1.0)
    return Trajectory(t, x[:, None], v[:, None], t[-1] + 2.0)


def std_normal_trajectory(horizon, seed):
    model, geo = build_model(np.zeros((1, 1)), np.zeros(1), 1.0, 0.5)
    return simulate_sticky(model, geo, StickyState([0.0], [1.0]), horizon, rng_seed=seed, spike=False)


class TestTrajectory:
    def test_validation(self):
        with pytest.raises(ValueError):
            Trajectory([0.0, 0.0], [[0.0], [1.0]], [[1.0], [1.0]], 2.0)
        with pytest.raises(ValueError):
            Trajectory([0.0, 3.0], [[0.0], [1.0]], [[1.0], [1.0]], 2.0)
        with pytest.raises(ValueError):
            Trajectory([], np.zeros((0, 1)), np.zeros((0, 1)), 2.0)

    def test_position_at(self):
        tr = triangle_wave(2)
        np.testing.assert_allclose(tr.position_at([0.0, 1.0, 2.0, 3.0, 5.5])[:, 0], [0.0, 1.0, 2.0, 1.0, 1.5])
        with pytest.raises(ValueError):
            tr.position_at(100.0)


class TestTimeAverage:
    def test_examples(self):
        assert time_average(ramp(), "identity", 0) == pytest.approx(1.0)
        assert time_average(ramp(), "square", 0) == pytest.approx(4.0 / 3.0)
        stuck_half = Trajectory([0.0, 1.0], [[0.0], [0.0]], [[0.0], [1.0]], 2.0)
        assert time_average(stuck_half, "zero_indicator", 0) == pytest.approx(0.5)

    def test_unknown_functional(self):
        with pytest.raises(ValueError):
            time_average(ramp(), "cube")

    def test_agrees_with_fine_grid(self):
        tr = std_normal_trajectory(2000.0, 1)
        grid = extract_samples(tr, 0.01)
        assert abs(time_average(tr, "identity", 0) - grid.mean()) <= 1e-3
        assert abs(time_average(tr, "square", 0) - (grid**2).mean()) <= 1e-3


class TestExtractSamples:
    def test_grid(self):
        tr = Trajectory([0.0], [[0.0]], [[1.0]], 4.0)
        np.testing.assert_allclose(extract_samples(tr, 2.0)[:, 0], [0.0, 2.0, 4.0])

    def test_bad_spacing(self):
        with pytest.raises(ValueError):
            extract_samples(ramp(), 0.0)

    def test_large_spacing_warns(self):
        with pytest.warns(UserWarning):
            s = extract_samples(ramp(), 10.0)
        assert s.shape == (1, 1)


class TestEss:
    def test_iid(self):
        x = np.random.default_rng(0).standard_normal(1000)
        assert 800 <= ess(x) <= 1200

    def test_duplicated(self):
        x = np.repeat(np.random.default_rng(1).standard_normal(500), 2)
        assert 400 <= ess(x) <= 600

    def test_ar1(self):
        # integrated autocorrelation time (1 + phi) / (1 - phi) = 3 for phi = 0.5
        rng = np.random.default_rng(2)
        n, phi = 100_000, 0.5
        e = rng.standard_normal(n)
        x = np.empty(n)
        x[0] = e[0]
        for i in range(1, n):
            x[i] = phi * x[i - 1] + e[i]
        assert integrated_autocorr_time(x) == pytest.approx(3.0, rel=0.1)

    def test_bad_series(self):
        with pytest.raises(ValueError):
            ess(np.ones(100))
        with pytest.raises(ValueError):
            ess(np.array([1.0, np.nan] * 10))
        with pytest.raises(ValueError):
            ess(np.arange(5.0))

    @given(st.floats(-100, 100), st.floats(0.01, 100), st.integers(0, 1000))
    @settings(max_examples=30)
    def test_affine_invariant(self, shift, scale, seed):
        x = np.random.default_rng(seed).standard_normal(300).cumsum()
        assert ess(shift + scale * x) == pytest.approx(ess(x), rel=1e-6)


class TestStatisticSet:
    def test_counts_and_values(self):
        p, block_size = 200, 20
        blocks = np.repeat(np.arange(10), block_size)
        nonzero = np.arange(0, p, block_size)
        samples = np.random.default_rng(0).standard_normal((7, p))
        stats = statistic_set(samples, nonzero, blocks)
        assert len(stats) == 20
        np.testing.assert_array_equal(stats["coef_20"], samples[:, 20])
        np.testing.assert_allclose(stats["block_1"], np.sum(samples[:, 21:40] ** 2, axis=1))

    def test_forty_statistics(self):
        blocks = np.repeat(np.arange(20), 10)
        stats = statistic_set(np.zeros((3, 200)), np.arange(0, 200, 10), blocks)
        assert len(stats) == 40

    def test_bad_blocks(self):
        with pytest.raises(ValueError):
            statistic_set(np.zeros((3, 4)), [0], [0, 0, 1])
        with pytest.raises(ValueError):
            statistic_set(np.zeros((3, 2)), [1], [0, 1])


class TestEssReport:
    def test_summary(self):
        rep = EssReport(["a", "b", "c"], [10.0, 40.0, 20.0], 2.0)
        assert rep.min_ess == 10.0 and rep.median_ess == 20.0 and rep.ess_per_second == 5.0
        assert rep.as_dict()["per_statistic_ess"] == {"a": 10.0, "b": 40.0, "c": 20.0}

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            EssReport(["a"], [0.0], 1.0)

    def test_from_statistics(self):
        rng = np.random.default_rng(3)
        rep = ess_report({"x": rng.standard_normal(500), "y": rng.standard_normal(500)}, 1.0)
        assert rep.names == ["x", "y"] and rep.min_ess > 300


class TestRegeneration:
    def test_times_triangle(self):
        np.testing.assert_allclose(regeneration_times(triangle_wave(5), 1.0, 1.0), 1.0 + 4.0 * np.arange(5))
        np.testing.assert_allclose(regeneration_times(triangle_wave(5), 1.0, -1.0), 3.0 + 4.0 * np.arange(5))

    def test_times_against_fine_grid(self):
        tr = std_normal_trajectory(300.0, 4)
        times = regeneration_times(tr, 0.5, 1.0)
        step = 1e-3
        grid = np.arange(0.0, 300.0, step)
        x = tr.position_at(grid)[:, 0]
        up = np.flatnonzero((x[:-1] < 0.5) & (x[1:] >= 0.5))
        assert times.size == up.size
        assert np.all(np.abs(times - grid[up + 1]) <= step)

    def test_periodic_has_zero_variance(self):
        assert regenerative_variance(triangle_wave(60), (1.0, 1.0)) == pytest.approx(0.0, abs=1e-20)

    def test_level_must_be_nonzero(self):
        with pytest.raises(ValueError):
            regenerative_variance(triangle_wave(60), (0.0, 1.0))

    def test_too_few_regenerations(self):
        with pytest.raises(ValueError):
            regenerative_variance(triangle_wave(10), (1.0, 1.0))

    def test_agrees_with_batch_means(self):
        tr = std_normal_trajectory(1e5, 5)
        sigma2 = regenerative_variance(tr, (1.0, 1.0))
        bm = batch_means_se(tr, "identity", 0) ** 2 * tr.duration
        assert 0.5 <= sigma2 / bm <= 2.0


def test_batch_means_needs_two():
    with pytest.raises(ValueError):
        batch_means_se(ramp(), n_batches=1)


def test_no_warning_on_normal_spacing():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        extract_samples(ramp(), 0.5)
