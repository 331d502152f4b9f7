"""Trajectory functionals and efficiency metrics."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

FUNCTIONALS = ("identity", "square", "zero_indicator")


@dataclass
class Trajectory:
    """Piecewise-linear path: on ``[times[k], times[k+1])`` the position is
    ``positions[k] + (t - times[k]) * velocities[k]``; the last segment runs to
    ``horizon``.

    ``velocities`` are the rates of change of the stored positions, so a
    coordinate that is stuck at zero has velocity 0 in the collapsed space.
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    horizon: float
    space: str = "collapsed"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        self.velocities = np.atleast_2d(np.asarray(self.velocities, dtype=float))
        if self.positions.shape[0] != self.times.shape[0]:
            self.positions = self.positions.T
            self.velocities = self.velocities.T
        if self.times.size == 0:
            raise ValueError("empty trajectory")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("event times must be strictly increasing")
        if self.times[-1] > self.horizon:
            raise ValueError("last event lies beyond the horizon")

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def duration(self) -> float:
        return float(self.horizon - self.times[0])

    @property
    def n_events(self) -> int:
        return self.times.size - 1

    def durations(self) -> np.ndarray:
        return np.diff(np.append(self.times, self.horizon))

    def coordinate(self, i: int) -> "Trajectory":
        return Trajectory(
            self.times, self.positions[:, [i]], self.velocities[:, [i]], self.horizon, self.space
        )

    def position_at(self, t):
        """Exact positions at the given time(s); shape ``(len(t), dim)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < self.times[0]) or np.any(t > self.horizon):
            raise ValueError("query time outside the trajectory")
        k = np.searchsorted(self.times, t, side="right") - 1
        return self.positions[k] + (t - self.times[k])[:, None] * self.velocities[k]

    def _segment_integrals(self, functional: str) -> np.ndarray:
        return _integrate_segment(self.positions, self.velocities, self.durations()[:, None], functional)

    def cumulative_integral(self, t, functional: str) -> np.ndarray:
        """``int_{start}^{t} f(x_s) ds`` for each coordinate; shape ``(len(t), dim)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        seg = self._segment_integrals(functional)
        cum = np.vstack([np.zeros((1, self.dim)), np.cumsum(seg, axis=0)])
        k = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 1)
        d = (t - self.times[k])[:, None]
        return cum[k] + _integrate_segment(self.positions[k], self.velocities[k], d, functional)


def _integrate_segment(x, v, d, functional):
    if functional == "identity":
        return x * d + 0.5 * v * d**2
    if functional == "square":
        return x**2 * d + x * v * d**2 + v**2 * d**3 / 3.0
    if functional == "zero_indicator":
        return np.where((x == 0.0) & (v == 0.0), d, 0.0)
    raise ValueError(f"unknown functional {functional!r}; expected one of {FUNCTIONALS}")


def time_average(trajectory: Trajectory, functional: str = "identity", index=None):
    """Exact time average of ``functional`` over the whole trajectory."""
    if trajectory.duration <= 0:
        raise ValueError("trajectory has zero duration")
    avg = trajectory._segment_integrals(functional).sum(axis=0) / trajectory.duration
    if index is None:
        return avg
    return float(avg[index])


def batch_means_se(trajectory: Trajectory, functional: str = "identity", index=None, n_batches: int = 50):
    """Standard error of :func:`time_average` from equal-time batch means."""
    if n_batches < 2:
        raise ValueError("need at least two batches")
    edges = np.linspace(trajectory.start, trajectory.horizon, n_batches + 1)
    cum = trajectory.cumulative_integral(edges, functional)
    batch = np.diff(cum, axis=0) / np.diff(edges)[:, None]
    se = batch.std(axis=0, ddof=1) / np.sqrt(n_batches)
    if index is None:
        return se
    return float(se[index])


def extract_samples(trajectory: Trajectory, spacing: float = 2.0) -> np.ndarray:
    """Positions at ``start, start + spacing, ...`` up to the horizon."""
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    if spacing > trajectory.duration:
        warnings.warn("spacing exceeds trajectory duration; returning the initial position only")
    n = int(np.floor(trajectory.duration / spacing + 1e-12)) + 1
    t = trajectory.start + spacing * np.arange(n)
    t = np.minimum(t, trajectory.horizon)
    return trajectory.position_at(t)


def _autocorrelation(x: np.ndarray) -> np.ndarray:
    n = x.size
    xc = x - x.mean()
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(xc, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n] / n
    return acov / acov[0]


def integrated_autocorr_time(series) -> float:
    """Geyer's initial monotone positive sequence estimate of ``1 + 2 sum rho_k``."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < 10:
        raise ValueError("series must be 1-d with at least 10 entries")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    if np.var(x) <= 1e-300 or np.ptp(x) == 0:
        raise ValueError("series has zero variance")
    rho = _autocorrelation(x)
    n_pairs = rho.size // 2
    pairs = rho[: 2 * n_pairs : 2] + rho[1 : 2 * n_pairs : 2]
    total = 0.0
    prev = np.inf
    for gamma in pairs:
        if gamma <= 0:
            break
        gamma = min(gamma, prev)
        total += gamma
        prev = gamma
    return max(-1.0 + 2.0 * total, 1.0 / x.size)


def ess(series) -> float:
    """Effective sample size ``n / (1 + 2 sum rho_k)``."""
    x = np.asarray(series, dtype=float)
    return x.size / integrated_autocorr_time(x)


def statistic_set(samples, true_nonzero, blocks) -> dict:
    """Per-coefficient series for true signals plus per-block sums of squares
    of the true-zero coefficients.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    p = samples.shape[1]
    blocks = np.asarray(blocks)
    if blocks.shape != (p,):
        raise ValueError(f"blocks must assign each of the {p} coordinates")
    nonzero = np.zeros(p, dtype=bool)
    nonzero[np.asarray(true_nonzero, dtype=int)] = True

    stats = {}
    for j in np.flatnonzero(nonzero):
        stats[f"coef_{j}"] = samples[:, j].copy()
    for label in np.unique(blocks):
        members = (blocks == label) & ~nonzero
        if not members.any():
            raise ValueError(f"block {label} has no true-zero coordinates")
        stats[f"block_{label}"] = np.sum(samples[:, members] ** 2, axis=1)
    return stats


@dataclass
class EssReport:
    names: list
    ess: np.ndarray
    wall_seconds: float

    def __post_init__(self):
        self.ess = np.asarray(self.ess, dtype=float)
        if np.any(self.ess <= 0):
            raise ValueError("effective sample sizes must be positive")

    @property
    def min_ess(self) -> float:
        return float(self.ess.min())

    @property
    def median_ess(self) -> float:
        return float(np.median(self.ess))

    @property
    def ess_per_second(self) -> float:
        return self.min_ess / self.wall_seconds if self.wall_seconds > 0 else float("inf")

    def as_dict(self) -> dict:
        return {
            "per_statistic_ess": dict(zip(self.names, map(float, self.ess))),
            "min_ess": self.min_ess,
            "median_ess": self.median_ess,
            "wall_seconds": float(self.wall_seconds),
            "ess_per_second": self.ess_per_second,
        }


def ess_report(stats: dict, wall_seconds: float) -> EssReport:
    names = list(stats)
    return EssReport(names, np.array([ess(stats[k]) for k in names]), wall_seconds)


def regeneration_times(trajectory: Trajectory, x0: float, v0: float, index: int = 0) -> np.ndarray:
    """Times at which coordinate ``index`` passes ``x0`` moving with velocity ``v0``."""
    t = trajectory.times
    end = np.append(t[1:], trajectory.horizon)
    x = trajectory.positions[:, index]
    v = trajectory.velocities[:, index]
    moving = v == v0
    hit = np.full(t.shape, np.nan)
    hit[moving] = t[moving] + (x0 - x[moving]) / v[moving]
    ok = moving & (hit >= t) & (hit < end)
    return hit[ok]


def regenerative_variance(
    trajectory: Trajectory,
    regen_point=(1.0, 1.0),
    functional: str = "identity",
    index: int = 0,
    min_regenerations: int = 30,
) -> float:
    """Asymptotic variance of the time average from i.i.d. regeneration cycles.

    Cycles are delimited by returns of coordinate ``index`` to
    ``(x0, v0)``; the estimate is ``Var(Y_j - mu T_j) / mean(T_j)`` with
    ``Y_j`` the cycle integrals and ``T_j`` the cycle lengths.
    """
    x0, v0 = regen_point
    if x0 == 0:
        raise ValueError("regeneration level must be nonzero")
    times = regeneration_times(trajectory, x0, v0, index)
    if times.size < min_regenerations:
        raise ValueError(f"only {times.size} regenerations found, need {min_regenerations}")
    cum = trajectory.cumulative_integral(times, functional)[:, index]
    lengths = np.diff(times)
    integrals = np.diff(cum)
    mu = integrals.sum() / lengths.sum()
    return float(np.var(integrals - mu * lengths, ddof=1) / lengths.mean())
