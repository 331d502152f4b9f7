import math

import numpy as np
import pytest
from scipy import stats

from stickyzz import sticky
from stickyzz.diagnostics import batch_means_se, time_average
from stickyzz.latent import sticking_time_distribution
from stickyzz.model import build_model
from stickyzz.oracles import inclusion_probability_1d, ks_exponential
from stickyzz.sticky import StickyState, run_sticky, simulate_sticky, stationary_check


def std_normal_model():
    """1-d target whose only gradient is the standard normal slab."""
    return build_model(np.zeros((1, 1)), np.zeros(1), 1.0, 0.5)


def conjugate_model():
    g = np.array([1.0, 0.5, -0.3])
    y = np.array([0.8, 0.6, 0.1])
    return g, y, build_model(g[:, None], y, 1.0, 0.3)


class TestState:
    def test_stuck_must_be_zero(self):
        with pytest.raises(ValueError):
            StickyState([0.5], [1.0], [True], [3.0])

    def test_unstick_after_clock(self):
        with pytest.raises(ValueError):
            StickyState([0.0], [1.0], [True], [1.0], clock=2.0)

    def test_non_finite(self):
        with pytest.raises(ValueError):
            StickyState([np.nan], [1.0])

    def test_velocity_signs(self):
        with pytest.raises(ValueError):
            StickyState([1.0], [0.5])

    def test_initial_state_schedules_unstick(self):
        _, geo = std_normal_model()
        st = sticky.initial_state([0.0, 1.0], 3, stuck=[True, False], geometry=geo)
        assert st.stuck.tolist() == [True, False]
        assert st.unstick_time[0] > 0
        with pytest.raises(ValueError):
            sticky.initial_state([0.0], 3, stuck=[True])


class TestSimulate:
    def test_first_event_is_stick_on_flat_target(self):
        model, geo = build_model(np.zeros((1, 1)), np.zeros(1), 1.0, 0.5, slab_var=1e14)
        traj = simulate_sticky(model, geo, StickyState([1.0], [-1.0]), 1.5, rng_seed=0)
        assert traj.times[1] == pytest.approx(1.0, abs=1e-12)
        assert traj.positions[1, 0] == 0.0
        assert traj.velocities[1, 0] == 0.0
        assert traj.meta["counts"]["stick"] == 1 and traj.meta["counts"]["bounce"] == 0

    def test_scheduled_unstick_and_velocity_preserved(self):
        model, geo = std_normal_model()
        st = StickyState([0.0], [-1.0], [True], [3.7])
        traj = simulate_sticky(model, geo, st, 3.8, rng_seed=1)
        assert traj.times[1] == pytest.approx(3.7)
        assert traj.velocities[0, 0] == 0.0
        assert traj.velocities[1, 0] == -1.0

    def test_first_bounce_law_on_standard_normal(self):
        # from x = 0 with v = +1 the rate is t, so the first bounce is Rayleigh
        model, geo = std_normal_model()
        firsts = []
        for seed in range(3000):
            traj = simulate_sticky(model, geo, StickyState([0.0], [1.0]), 50.0, rng_seed=seed, spike=False)
            firsts.append(traj.times[1])
        res = stats.kstest(firsts, lambda t: 1 - np.exp(-0.5 * np.square(t)))
        assert res.pvalue > 0.01

    def test_rejects_bad_horizon(self):
        model, geo = std_normal_model()
        for h in (0.0, -1.0, np.inf):
            with pytest.raises(ValueError):
                simulate_sticky(model, geo, StickyState([1.0], [1.0]), h)

    def test_event_cap(self):
        model, geo = std_normal_model()
        with pytest.raises(RuntimeError):
            run_sticky(model, geo, StickyState([1.0], [1.0]), 1e6, 0, max_events=10)

    def test_reproducible(self):
        _, _, (model, geo) = conjugate_model()
        a = simulate_sticky(model, geo, StickyState([0.5], [1.0]), 500.0, rng_seed=9)
        b = simulate_sticky(model, geo, StickyState([0.5], [1.0]), 500.0, rng_seed=9)
        np.testing.assert_array_equal(a.times, b.times)
        np.testing.assert_array_equal(a.positions, b.positions)

    def test_sticks_only_at_zero_and_keeps_velocity(self):
        rng = np.random.default_rng(0)
        g = rng.standard_normal((20, 3))
        model, geo = build_model(g, g @ [0.3, 0.0, -0.2] + rng.standard_normal(20), 1.0, 0.4)
        traj = simulate_sticky(model, geo, sticky.initial_state([0.3, -0.2, 0.1], 2), 2000.0, rng_seed=2)
        total = 0
        for i in range(3):
            x, v = traj.positions[:, i], traj.velocities[:, i]
            starts = np.flatnonzero((v[1:] == 0) & (v[:-1] != 0)) + 1
            total += starts.size
            assert np.all(x[starts] == 0.0)
            for s in starts:
                e = s + np.argmax(v[s:] != 0) if np.any(v[s:] != 0) else None
                if e is not None and e > s:
                    assert v[e] == v[s - 1]
        assert total > 30

    def test_mirror_symmetry(self):
        g, y, (model, geo) = conjugate_model()
        mirrored, _ = build_model(g[:, None], -y, 1.0, 0.3)
        a = simulate_sticky(model, geo, StickyState([0.4], [1.0]), 300.0, rng_seed=5)
        b = simulate_sticky(mirrored, geo, StickyState([-0.4], [-1.0]), 300.0, rng_seed=5)
        np.testing.assert_allclose(a.times, b.times, rtol=1e-12)
        np.testing.assert_allclose(a.positions, -b.positions, atol=1e-10)

    def test_grid_samples_match_trajectory(self):
        _, _, (model, geo) = conjugate_model()
        st = StickyState([0.5], [1.0])
        rec = run_sticky(model, geo, st, 300.0, 4, record=True, spacing=2.0)
        grid = run_sticky(model, geo, st, 300.0, 4, record=False, spacing=2.0)
        assert grid.samples.shape == (151, 1)
        np.testing.assert_allclose(grid.samples, rec.trajectory.position_at(2.0 * np.arange(151)), atol=1e-10)
        assert grid.final_state.clock == 300.0

    def test_continuation(self):
        _, _, (model, geo) = conjugate_model()
        run = run_sticky(model, geo, StickyState([0.5], [1.0]), 100.0, 1)
        more = run_sticky(model, geo, run.final_state, 100.0, 2)
        assert more.trajectory.start == 100.0 and more.final_state.clock == 200.0


class TestStationarity:
    def test_standard_normal_moments(self):
        model, geo = std_normal_model()
        rep = stationary_check(model, geo, 1e5, rng_seed=3)
        assert abs(rep["mean"][0]) <= 0.02
        assert abs(rep["second_moment"][0] - 1) <= 0.03
        assert not rep["low_confidence"]

    def test_short_run_flagged(self):
        model, geo = std_normal_model()
        assert stationary_check(model, geo, 5.0, rng_seed=3)["low_confidence"]
        with pytest.raises(ValueError):
            stationary_check(model, geo, 0.0)

    def test_correlated_gaussian(self):
        rng = np.random.default_rng(8)
        g = rng.standard_normal((6, 2)) + np.array([[1.0, 1.0]])
        y = rng.standard_normal(6)
        model, geo = build_model(g, y, 1.0, 0.5)
        prec = model.gram + np.eye(2)
        cov = np.linalg.inv(prec)
        mean = cov @ model.xty
        traj = simulate_sticky(model, geo, StickyState([0.0, 0.0], [1.0, -1.0]), 1e5, rng_seed=8, spike=False)
        m = time_average(traj, "identity")
        se = batch_means_se(traj, "identity")
        assert np.all(np.abs(m - mean) <= 3 * se)
        m2 = time_average(traj, "square")
        se2 = batch_means_se(traj, "square")
        assert np.all(np.abs(m2 - (np.diag(cov) + mean**2)) <= 3 * se2)


def test_exponential_sticking_durations():
    _, _, (model, geo) = conjugate_model()
    traj = simulate_sticky(model, geo, StickyState([0.5], [1.0]), 1.2e5, rng_seed=21)
    d = sticking_time_distribution(traj).durations
    assert d.size >= 10_000
    assert ks_exponential(d[:10_000], geo.width).passed


def test_conjugate_inclusion():
    g, y, (model, geo) = conjugate_model()
    traj = simulate_sticky(model, geo, StickyState([0.5], [1.0]), 1e5, rng_seed=13)
    est = 1 - time_average(traj, "zero_indicator", 0)
    se = batch_means_se(traj, "zero_indicator", 0)
    assert abs(est - inclusion_probability_1d(g, y, 1.0, 0.3)) <= 3 * se
    assert math.isfinite(se) and se > 0
