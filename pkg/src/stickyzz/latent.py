"""Latent sticky zig-zag: a plain zig-zag on the latent continuous density.

Sticking happens while a coordinate crosses the flat universe, so with no
refreshment every sticking time equals the universe width.  Optional
position refreshment inside the universe and rescaled universes (with
reflective crossings at the density jump) are supported.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _zigzag
from .diagnostics import Trajectory
from .model import LatentGeometry, SpikeSlabModel
from .sticky import DEFAULT_MAX_EVENTS, Run


@dataclass
class LatentState:
    position: np.ndarray
    velocity: np.ndarray
    clock: float = 0.0

    def __post_init__(self):
        self.position = np.array(self.position, dtype=float, ndmin=1)
        self.velocity = np.array(self.velocity, dtype=float, ndmin=1)
        if self.velocity.size != self.position.size:
            raise ValueError("position and velocity lengths differ")
        if not (np.all(np.isfinite(self.position)) and np.isfinite(self.clock)):
            raise ValueError("non-finite state")
        if not np.all(np.abs(self.velocity) == 1.0):
            raise ValueError("velocity entries must be +1 or -1")

    def copy(self) -> "LatentState":
        return LatentState(self.position.copy(), self.velocity.copy(), self.clock)


def initial_state(geometry: LatentGeometry, position, true_zero=None, rng_seed=None, jitter=0.0):
    """Latent starting point from original-space values.

    ``true_zero`` coordinates are drawn uniformly inside the universe; the
    others start at their given value (plus optional Gaussian ``jitter``),
    mapped out of the universe.  Velocities are uniform on ``{-1, 1}^p``.
    """
    rng = np.random.default_rng(rng_seed)
    x = np.array(position, dtype=float, ndmin=1)
    p = x.size
    zero = np.zeros(p, dtype=bool) if true_zero is None else np.array(true_zero, dtype=bool)
    velocity = rng.choice([-1.0, 1.0], size=p)
    noise = rng.normal(0.0, jitter, size=p) if jitter > 0 else np.zeros(p)
    h = geometry.half_extent
    latent = np.empty(p)
    vals = x[~zero] + noise[~zero]
    side = np.where(vals >= 0, 1.0, -1.0)
    latent[~zero] = vals + side * h
    latent[zero] = rng.uniform(-h, h, size=zero.sum())
    return LatentState(latent, velocity, 0.0)


def _split_latent(position, velocity, h):
    inside = np.abs(position) <= h
    x = np.where(inside, 0.0, position - np.sign(position) * h)
    offset = np.where(inside, position, 0.0)
    return x, velocity.copy(), inside, offset


def _latent_positions(x, v, inside, offset, h):
    side = np.where(x > 0, 1.0, np.where(x < 0, -1.0, v))
    return np.where(inside, offset, x + side * h)


def run_latent(
    model: SpikeSlabModel,
    geometry: LatentGeometry,
    initial: LatentState,
    horizon: float,
    refresh_rate: float = 0.0,
    rng_seed=None,
    record: bool = True,
    spacing: float | None = None,
    spike: bool = True,
    max_events: int = DEFAULT_MAX_EVENTS,
) -> Run:
    if not (np.isfinite(horizon) and horizon > 0):
        raise ValueError("horizon must be positive and finite")
    if not refresh_rate >= 0:
        raise ValueError("refresh_rate must be nonnegative")
    if initial.position.size != model.dim:
        raise ValueError(f"state has dimension {initial.position.size}, model has {model.dim}")
    h = geometry.half_extent if spike else 0.0
    if spike:
        x, v, inside, offset = _split_latent(initial.position, initial.velocity, h)
    else:
        x, v = initial.position.copy(), initial.velocity.copy()
        inside, offset = np.zeros(x.size, dtype=bool), np.zeros(x.size)
    release = np.full(x.size, np.inf)

    start = time.perf_counter()
    status, clock, counters, rt, rx, rv, rin, roff, grid = _zigzag.zigzag_run(
        model.gram, model.xty, model.noise_var, model.slab_var,
        _zigzag.MODE_LATENT, spike, geometry.width, h, geometry.scale, float(refresh_rate),
        x, v, inside, offset, release, initial.clock, initial.clock + horizon,
        _zigzag.numba_seed(rng_seed), record, float(spacing or 0.0), max_events,
    )
    wall = time.perf_counter() - start
    if status != 0:
        raise RuntimeError(f"event cap of {max_events} exceeded at t={clock:.6g}")

    final = LatentState(_latent_positions(x, v, inside, offset, h), v, clock)
    traj = latent_traj = None
    if record:
        traj = Trajectory(rt, rx, np.where(rin, 0.0, rv), clock, "collapsed")
        latent_traj = Trajectory(rt, _latent_positions(rx, rv, rin, roff, h), rv, clock, "latent")
    return Run(traj, grid if spacing else None, _zigzag.counters_dict(counters), final, wall, latent_traj)


def simulate_latent(
    model, geometry, initial, horizon, refresh_rate=0.0, rng_seed=None, spike=True, **kw
):
    """Return ``(latent_trajectory, collapsed_trajectory)``.

    Run statistics and the final state land in ``collapsed_trajectory.meta``.
    """
    run = run_latent(model, geometry, initial, horizon, refresh_rate, rng_seed, True, spike=spike, **kw)
    run.trajectory.meta.update(counts=run.counts, final_state=run.final_state, wall_seconds=run.wall_seconds)
    run.latent_trajectory.meta = run.trajectory.meta
    return run.latent_trajectory, run.trajectory


def simulate_scaled(model, geometry, initial, horizon, rng_seed=None, refresh_rate=0.0, **kw):
    """Latent sampler on a universe of width ``scale * w``.

    Crossing into the universe succeeds with probability ``min(1, 1/scale)``
    and out of it with ``min(1, scale)``; failures flip the velocity.
    """
    if not geometry.scale > 0:
        raise ValueError("scale must be positive")
    return simulate_latent(model, geometry, initial, horizon, refresh_rate, rng_seed, **kw)


@dataclass
class StickingTimes:
    durations: np.ndarray
    same_side: np.ndarray
    coordinates: np.ndarray

    @property
    def n(self) -> int:
        return self.durations.size


def sticking_time_distribution(trajectory: Trajectory, index=None) -> StickingTimes:
    """Completed stuck periods of a collapsed trajectory.

    A period counts only if it starts after the first record and ends before
    the horizon.  ``same_side`` marks exits back through the entry side.
    """
    coords = range(trajectory.dim) if index is None else [index]
    durations, same, which = [], [], []
    t = trajectory.times
    n = t.size
    for i in coords:
        x = trajectory.positions[:, i]
        v = trajectory.velocities[:, i]
        stuck = np.concatenate([[False], (x == 0.0) & (v == 0.0), [False]]).astype(np.int8)
        d = np.diff(stuck)
        starts = np.flatnonzero(d == 1)
        ends = np.flatnonzero(d == -1)
        done = (starts > 0) & (ends < n)
        starts, ends = starts[done], ends[done]
        if not starts.size:
            continue
        durations.append(t[ends] - t[starts])
        same.append(v[ends] == -v[starts - 1])
        which.append(np.full(starts.size, i))
    if not durations:
        raise ValueError("trajectory contains no completed sticking periods")
    return StickingTimes(np.concatenate(durations), np.concatenate(same), np.concatenate(which))
