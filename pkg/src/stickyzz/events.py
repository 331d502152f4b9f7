"""Closed-form event-time solvers shared by the samplers.

The ``_``-prefixed functions are jitted scalar kernels used inside the event
loops; the public wrappers validate input and return :class:`EventTime`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

INF = np.inf


class EventKind(enum.IntEnum):
    # Order doubles as the tie-break order between simultaneous events.
    STICK = 0
    UNSTICK = 1
    BOUNCE = 2
    BOUNDARY = 3
    REFRESH = 4
    HORIZON = 5


@dataclass(frozen=True)
class EventTime:
    time: float
    kind: EventKind

    def __post_init__(self):
        if not self.time >= 0:
            raise ValueError(f"event time must be nonnegative, got {self.time}")


@njit(cache=True)
def _first_arrival_linear(a, b, e):
    if b == 0.0:
        if a > 0.0:
            return e / a
        return INF
    if b > 0.0:
        if a >= 0.0:
            return 2.0 * e / (a + math.sqrt(a * a + 2.0 * b * e))
        return -a / b + math.sqrt(2.0 * e / b)
    # decreasing rate
    if a <= 0.0:
        return INF
    disc = a * a + 2.0 * b * e
    if disc < 0.0:
        return INF
    return 2.0 * e / (a + math.sqrt(disc))


@njit(cache=True)
def _momentum_zero_time(m, a, b):
    """First t > 0 with ``m - a t - b t^2 / 2 = 0`` for ``m >= 0``."""
    if m <= 0.0:
        # Sitting on zero: decreasing means flip now, otherwise look for the return.
        if a > 0.0:
            return 0.0
        if a == 0.0:
            return INF
        if b > 0.0:
            return -2.0 * a / b
        return INF
    if b == 0.0:
        if a > 0.0:
            return m / a
        return INF
    # b/2 t^2 + a t - m = 0
    disc = a * a + 2.0 * b * m
    if disc < 0.0:
        return INF
    sq = math.sqrt(disc)
    q = -0.5 * (a + sq) if a >= 0.0 else -0.5 * (a - sq)
    best = INF
    if q != 0.0:
        r1 = q / (0.5 * b)
        r2 = -m / q
        if r1 > 0.0 and r1 < best:
            best = r1
        if r2 > 0.0 and r2 < best:
            best = r2
    return best


@njit(cache=True)
def _time_to_level(x, v, level):
    t = (level - x) / v
    if t > 0.0:
        return t
    return INF


def _check_finite(*vals):
    for val in vals:
        if not np.isfinite(val):
            raise ValueError(f"non-finite input {val!r}")


def first_arrival_linear(intercept: float, slope: float, exp_draw: float) -> EventTime:
    """Invert the cumulative hazard of the rate ``max(0, a + b t)`` at ``exp_draw``."""
    _check_finite(intercept, slope, exp_draw)
    if not exp_draw > 0:
        raise ValueError("exp_draw must be positive")
    t = _first_arrival_linear(float(intercept), float(slope), float(exp_draw))
    return EventTime(t, EventKind.BOUNCE if np.isfinite(t) else EventKind.HORIZON)


def momentum_zero_time(momentum: float, intercept: float, slope: float) -> EventTime:
    """First sign change of ``p(t) = p0 - a t - b t^2 / 2``.

    Negative momenta are handled by reflecting the whole path, so the solver
    only ever sees a nonnegative magnitude.
    """
    _check_finite(momentum, intercept, slope)
    s = -1.0 if momentum < 0 else 1.0
    t = _momentum_zero_time(abs(float(momentum)), s * intercept, s * slope)
    return EventTime(t, EventKind.BOUNCE if np.isfinite(t) else EventKind.HORIZON)


def boundary_hit(position: float, velocity: float, thresholds) -> EventTime:
    if abs(velocity) != 1:
        raise ValueError("velocity must be +1 or -1")
    best = INF
    for level in thresholds:
        best = min(best, _time_to_level(float(position), float(velocity), float(level)))
    return EventTime(best, EventKind.BOUNDARY if np.isfinite(best) else EventKind.HORIZON)
