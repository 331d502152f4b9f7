"""Original sticky zig-zag: exponential sticking at zero with mean ``w``."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _zigzag
from .diagnostics import Trajectory, batch_means_se, time_average
from .model import LatentGeometry, SpikeSlabModel

DEFAULT_MAX_EVENTS = 10**9


@dataclass
class StickyState:
    position: np.ndarray
    velocity: np.ndarray
    stuck: np.ndarray = None
    unstick_time: np.ndarray = None
    clock: float = 0.0

    def __post_init__(self):
        self.position = np.array(self.position, dtype=float, ndmin=1)
        self.velocity = np.array(self.velocity, dtype=float, ndmin=1)
        p = self.position.size
        if self.stuck is None:
            self.stuck = np.zeros(p, dtype=bool)
        self.stuck = np.array(self.stuck, dtype=bool, ndmin=1)
        if self.unstick_time is None:
            self.unstick_time = np.full(p, np.nan)
        self.unstick_time = np.array(self.unstick_time, dtype=float, ndmin=1)
        if not (self.velocity.size == p and self.stuck.size == p and self.unstick_time.size == p):
            raise ValueError("state arrays must share one length")
        if not (np.all(np.isfinite(self.position)) and np.isfinite(self.clock)):
            raise ValueError("non-finite state")
        if not np.all(np.abs(self.velocity) == 1.0):
            raise ValueError("velocity entries must be +1 or -1")
        if np.any(self.position[self.stuck] != 0.0):
            raise ValueError("stuck coordinates must sit exactly at zero")
        if np.any(~(self.unstick_time[self.stuck] > self.clock)):
            raise ValueError("every stuck coordinate needs an unstick time after the clock")

    def copy(self) -> "StickyState":
        return StickyState(
            self.position.copy(), self.velocity.copy(), self.stuck.copy(),
            self.unstick_time.copy(), self.clock,
        )


def initial_state(position, rng_seed=None, stuck=None, geometry: LatentGeometry | None = None):
    """Uniform random velocities; ``stuck`` coordinates get a fresh exponential clock."""
    rng = np.random.default_rng(rng_seed)
    position = np.array(position, dtype=float, ndmin=1)
    velocity = rng.choice([-1.0, 1.0], size=position.size)
    stuck = np.zeros(position.size, dtype=bool) if stuck is None else np.array(stuck, dtype=bool)
    unstick = np.full(position.size, np.nan)
    if stuck.any():
        if geometry is None:
            raise ValueError("geometry is required to schedule unstick times")
        position[stuck] = 0.0
        unstick[stuck] = geometry.width * rng.exponential(size=stuck.sum())
    return StickyState(position, velocity, stuck, unstick, 0.0)


@dataclass
class Run:
    """Output of one engine call."""

    trajectory: Trajectory | None
    samples: np.ndarray | None
    counts: dict
    final_state: object
    wall_seconds: float
    latent_trajectory: Trajectory | None = None
    extra: dict = field(default_factory=dict)


def run_sticky(
    model: SpikeSlabModel,
    geometry: LatentGeometry,
    initial: StickyState,
    horizon: float,
    rng_seed=None,
    record: bool = True,
    spacing: float | None = None,
    spike: bool = True,
    max_events: int = DEFAULT_MAX_EVENTS,
) -> Run:
    if not (np.isfinite(horizon) and horizon > 0):
        raise ValueError("horizon must be positive and finite")
    st = initial.copy()
    if st.position.size != model.dim:
        raise ValueError(f"state has dimension {st.position.size}, model has {model.dim}")
    release = np.where(st.stuck, st.unstick_time, np.inf)
    offset = np.zeros(model.dim)
    start = time.perf_counter()
    status, clock, counters, rt, rx, rv, rin, _, grid = _zigzag.zigzag_run(
        model.gram, model.xty, model.noise_var, model.slab_var,
        _zigzag.MODE_ORIGINAL, spike, geometry.width, geometry.half_extent, 1.0, 0.0,
        st.position, st.velocity, st.stuck, offset, release, st.clock, st.clock + horizon,
        _zigzag.numba_seed(rng_seed), record, float(spacing or 0.0), max_events,
    )
    wall = time.perf_counter() - start
    if status != 0:
        raise RuntimeError(f"event cap of {max_events} exceeded at t={clock:.6g}")
    st.clock = clock
    st.unstick_time = np.where(st.stuck, release, np.nan)
    traj = None
    if record:
        traj = Trajectory(rt, rx, np.where(rin, 0.0, rv), clock, "collapsed")
    return Run(traj, grid if spacing else None, _zigzag.counters_dict(counters), st, wall)


def simulate_sticky(model, geometry, initial, horizon, rng_seed=None, spike=True, **kw) -> Trajectory:
    """Event log of the original sticky zig-zag from ``initial`` over ``horizon``.

    Run statistics and the final state land in ``trajectory.meta``.
    """
    run = run_sticky(model, geometry, initial, horizon, rng_seed, record=True, spike=spike, **kw)
    run.trajectory.meta.update(counts=run.counts, final_state=run.final_state, wall_seconds=run.wall_seconds)
    return run.trajectory


def stationary_check(model: SpikeSlabModel, geometry: LatentGeometry, duration: float, rng_seed=None, n_batches=50):
    """Time-average first and second moments of the spike-free zig-zag.

    Flags the report as low confidence when fewer than 100 events occurred.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    init = initial_state(np.zeros(model.dim), rng_seed)
    traj = simulate_sticky(model, geometry, init, duration, rng_seed, spike=False)
    return {
        "mean": time_average(traj, "identity"),
        "second_moment": time_average(traj, "square"),
        "mean_se": batch_means_se(traj, "identity", n_batches=n_batches),
        "second_moment_se": batch_means_se(traj, "square", n_batches=n_batches),
        "n_events": traj.n_events,
        "low_confidence": traj.n_events < 100,
    }
