"""Hamiltonian sticky zig-zag: exact Laplace-momentum dynamics on the latent density.

Between events every outside coordinate's momentum follows a quadratic in
time, so flips (momentum zeros) and universe crossings are located in closed
form.  Momenta are stored as magnitude ``m`` and direction ``v``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _zigzag
from ._zigzag import RECOMPUTE_EVERY, _full_gradient, _shift_slope
from .events import _momentum_zero_time
from .latent import initial_state as latent_initial_state
from .model import LatentGeometry, SpikeSlabModel, potential
from .sticky import Run

DEFAULT_TRAVEL_RANGE = (2.0, 6.0)
DEFAULT_EVENT_CAP = 10**7

C_FLIP = 0
C_ENTRY = 1
C_EXIT = 2
C_EVENTS = 3
C_REFRESHED = 4
COUNTER_NAMES = ("flip", "entry", "exit", "events", "refreshed")


@dataclass
class HzzState:
    position: np.ndarray
    momentum: np.ndarray
    clock: float = 0.0

    def __post_init__(self):
        self.position = np.array(self.position, dtype=float, ndmin=1)
        self.momentum = np.array(self.momentum, dtype=float, ndmin=1)
        if self.position.size != self.momentum.size:
            raise ValueError("position and momentum lengths differ")
        if not (np.all(np.isfinite(self.position)) and np.all(np.isfinite(self.momentum))):
            raise ValueError("non-finite state")

    @property
    def velocity(self) -> np.ndarray:
        return np.where(self.momentum < 0, -1.0, 1.0)

    def copy(self) -> "HzzState":
        return HzzState(self.position.copy(), self.momentum.copy(), self.clock)


@njit(cache=True)
def _integrate(gram, xty, noise_var, slab_var, spike, h, x, inside, exit_at, v, m, v_eff, g, b,
               clock, duration, max_events, counters, work):
    """Advance from ``clock`` by ``duration``; ``g``/``b`` must match the state on entry.

    Inside coordinates carry their exit time in ``exit_at`` instead of an
    offset.  ``work[0]`` counts events since the last full gradient refresh.
    """
    p = x.shape[0]
    end = clock + duration
    n_events = 0
    while True:
        best_t = end - clock
        best_i = -1
        best_k = 0
        for i in range(p):
            if inside[i]:
                t = exit_at[i] - clock
                if t < 0.0:
                    t = 0.0
                if t < best_t:
                    best_t = t
                    best_i = i
                    best_k = 2
            else:
                # boundary before flip on exact ties
                if spike and x[i] * v[i] < 0.0:
                    t = -x[i] / v[i]
                    if t < best_t:
                        best_t = t
                        best_i = i
                        best_k = 1
                t = _momentum_zero_time(m[i], v[i] * g[i], v[i] * b[i])
                if t < best_t:
                    best_t = t
                    best_i = i
                    best_k = 3

        tau = best_t
        for i in range(p):
            if not inside[i]:
                mi = m[i] - (v[i] * g[i]) * tau - 0.5 * (v[i] * b[i]) * tau * tau
                m[i] = mi if mi > 0.0 else 0.0
                x[i] += v[i] * tau
            g[i] += b[i] * tau
        if best_i < 0:
            return 0
        clock += tau

        i = best_i
        if best_k == 3:
            m[i] = 0.0
            v[i] = -v[i]
            v_eff[i] = v[i]
            _shift_slope(gram, noise_var, slab_var, b, i, 2.0 * v[i])
            counters[C_FLIP] += 1
        elif best_k == 1:
            x[i] = 0.0
            inside[i] = True
            exit_at[i] = clock + 2.0 * h
            v_eff[i] = 0.0
            _shift_slope(gram, noise_var, slab_var, b, i, -v[i])
            counters[C_ENTRY] += 1
        else:
            inside[i] = False
            x[i] = 0.0
            v_eff[i] = v[i]
            _shift_slope(gram, noise_var, slab_var, b, i, v[i])
            counters[C_EXIT] += 1
        counters[C_EVENTS] += 1
        n_events += 1
        work[0] += 1
        if work[0] >= RECOMPUTE_EVERY:
            _full_gradient(gram, xty, noise_var, slab_var, x, v_eff, g, b)
            work[0] = 0
        if n_events >= max_events:
            return 1


@njit(cache=True)
def _setup(gram, xty, noise_var, slab_var, h, x, inside, offset, v, clock):
    p = x.shape[0]
    v_eff = np.empty(p)
    exit_at = np.empty(p)
    for i in range(p):
        v_eff[i] = 0.0 if inside[i] else v[i]
        exit_at[i] = clock + h - v[i] * offset[i] if inside[i] else np.inf
    g = np.empty(p)
    b = np.empty(p)
    _full_gradient(gram, xty, noise_var, slab_var, x, v_eff, g, b)
    return v_eff, exit_at, g, b


@njit(cache=True)
def _offsets(inside, v, exit_at, clock, h):
    p = inside.shape[0]
    out = np.zeros(p)
    for i in range(p):
        if inside[i]:
            out[i] = v[i] * (h - (exit_at[i] - clock))
    return out


@njit(cache=True)
def _chain(gram, xty, noise_var, slab_var, spike, h, x, inside, offset, v, m,
           n_iter, lo, hi, seed, max_events, full_refresh):
    np.random.seed(seed)
    p = x.shape[0]
    counters = np.zeros(5, dtype=np.int64)
    work = np.zeros(1, dtype=np.int64)
    samples = np.empty((n_iter, p))
    clock = 0.0
    v_eff, exit_at, g, b = _setup(gram, xty, noise_var, slab_var, h, x, inside, offset, v, clock)
    for it in range(n_iter):
        for i in range(p):
            if full_refresh or not inside[i]:
                z = np.random.laplace(0.0, 1.0)
                vi = -1.0 if z < 0.0 else 1.0
                m[i] = abs(z)
                if inside[i]:
                    off = v[i] * (h - (exit_at[i] - clock))
                    exit_at[i] = clock + h - vi * off
                elif vi != v[i]:
                    _shift_slope(gram, noise_var, slab_var, b, i, 2.0 * vi)
                    v_eff[i] = vi
                v[i] = vi
                counters[C_REFRESHED] += 1
        duration = lo + (hi - lo) * np.random.random()
        status = _integrate(gram, xty, noise_var, slab_var, spike, h, x, inside, exit_at, v, m,
                            v_eff, g, b, clock, duration, max_events, counters, work)
        clock += duration
        if status != 0:
            offset[:] = _offsets(inside, v, exit_at, clock, h)
            return 1, it, counters, samples[:it], clock
        for i in range(p):
            samples[it, i] = x[i]
    offset[:] = _offsets(inside, v, exit_at, clock, h)
    return 0, n_iter, counters, samples, clock


@njit(cache=True)
def _integrate_once(gram, xty, noise_var, slab_var, spike, h, x, inside, offset, v, m, duration,
                    max_events, counters):
    v_eff, exit_at, g, b = _setup(gram, xty, noise_var, slab_var, h, x, inside, offset, v, 0.0)
    work = np.zeros(1, dtype=np.int64)
    status = _integrate(gram, xty, noise_var, slab_var, spike, h, x, inside, exit_at, v, m,
                        v_eff, g, b, 0.0, duration, max_events, counters, work)
    offset[:] = _offsets(inside, v, exit_at, duration, h)
    return status


def _unpack(state: HzzState, h: float, spike: bool):
    xt = state.position
    v = state.velocity
    m = np.abs(state.momentum)
    if spike:
        inside = np.abs(xt) <= h
        x = np.where(inside, 0.0, xt - np.sign(xt) * h)
        offset = np.where(inside, xt, 0.0)
    else:
        inside = np.zeros(xt.size, dtype=bool)
        x = xt.copy()
        offset = np.zeros(xt.size)
    return x, inside, offset, v, m


def _pack(x, inside, offset, v, m, h, clock) -> HzzState:
    side = np.where(x > 0, 1.0, np.where(x < 0, -1.0, v))
    position = np.where(inside, offset, x + side * h)
    return HzzState(position, v * m, clock)


def integrate(model: SpikeSlabModel, geometry: LatentGeometry, state: HzzState, duration: float,
              spike: bool = True, max_events: int = DEFAULT_EVENT_CAP) -> HzzState:
    """Run the exact Hamiltonian flow for ``duration`` time units."""
    if not (np.isfinite(duration) and duration > 0):
        raise ValueError("duration must be positive and finite")
    if spike and geometry.scale != 1.0:
        raise ValueError("the Hamiltonian sampler needs a continuous (scale 1) universe")
    h = geometry.half_extent if spike else 0.0
    x, inside, offset, v, m = _unpack(state, h, spike)
    counters = np.zeros(5, dtype=np.int64)
    status = _integrate_once(model.gram, model.xty, model.noise_var, model.slab_var, spike, h,
                             x, inside, offset, v, m, float(duration), max_events, counters)
    if status != 0:
        raise RuntimeError(f"more than {max_events} events in one trajectory; dynamics diverged")
    return _pack(x, inside, offset, v, m, h, state.clock + duration)


def hamiltonian(model: SpikeSlabModel, geometry: LatentGeometry, state: HzzState, spike: bool = True) -> float:
    """Total energy ``U(position) + sum |momentum|``."""
    if spike:
        u = potential(model, geometry, state.position)
    else:
        x = state.position
        r = model.response - model.design @ x
        u = 0.5 * r @ r / model.noise_var + 0.5 * x @ x / model.slab_var
    return float(u + np.abs(state.momentum).sum())


def initial_state(geometry: LatentGeometry, position, true_zero=None, rng_seed=None, jitter=0.0) -> HzzState:
    """Latent start as for the latent sampler, with iid Laplace(1) momenta."""
    rng = np.random.default_rng(rng_seed)
    lat = latent_initial_state(geometry, position, true_zero, rng, jitter)
    return HzzState(lat.position, rng.laplace(0.0, 1.0, size=lat.position.size), 0.0)


def _check_range(travel_range):
    lo, hi = map(float, travel_range)
    if not (0 < lo < hi):
        raise ValueError("travel_range must satisfy 0 < lo < hi")
    return lo, hi


def run_hzz(
    model: SpikeSlabModel,
    geometry: LatentGeometry,
    initial: HzzState,
    n_iterations: int,
    travel_range=DEFAULT_TRAVEL_RANGE,
    rng_seed=None,
    spike: bool = True,
    full_refresh: bool = False,
    max_events: int = DEFAULT_EVENT_CAP,
) -> Run:
    if n_iterations < 1:
        raise ValueError("n_iterations must be at least 1")
    if spike and geometry.scale != 1.0:
        raise ValueError("the Hamiltonian sampler needs a continuous (scale 1) universe")
    lo, hi = _check_range(travel_range)
    h = geometry.half_extent if spike else 0.0
    x, inside, offset, v, m = _unpack(initial, h, spike)
    start = time.perf_counter()
    status, done, counters, samples, total = _chain(
        model.gram, model.xty, model.noise_var, model.slab_var, spike, h,
        x, inside, offset, v, m, int(n_iterations), lo, hi,
        _zigzag.numba_seed(rng_seed), max_events, full_refresh,
    )
    wall = time.perf_counter() - start
    if status != 0:
        raise RuntimeError(f"iteration {done}: more than {max_events} events in one trajectory")
    counts = {k: int(c) for k, c in zip(COUNTER_NAMES, counters)}
    final = _pack(x, inside, offset, v, m, h, initial.clock + total)
    return Run(None, samples, counts, final, wall)


def step(model, geometry, state: HzzState, travel_range=DEFAULT_TRAVEL_RANGE, rng_seed=None, spike=True):
    """One iteration: refresh outside momenta, travel a uniform time, emit the collapsed position."""
    run = run_hzz(model, geometry, state, 1, travel_range, rng_seed, spike)
    return run.final_state, run.samples[0]


def run_chain(model, geometry, initial: HzzState, n_iterations: int, travel_range=DEFAULT_TRAVEL_RANGE,
              rng_seed=None, spike=True) -> np.ndarray:
    """``n_iterations`` collapsed samples; reproducible for a fixed seed."""
    return run_hzz(model, geometry, initial, n_iterations, travel_range, rng_seed, spike).samples
