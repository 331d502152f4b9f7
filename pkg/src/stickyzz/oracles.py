"""Independent reference values for checking the samplers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class GofResult:
    statistic: float
    threshold: float
    n: int

    @property
    def passed(self) -> bool:
        return self.statistic <= self.threshold


def refresh_survival_series(s: float, w: float, m: int) -> float:
    """Probability of staying ``s`` time units in a width-``w`` universe given
    ``m`` uniform position refreshes.

    Sum over ``k <= m`` of ``prod_{l<k} (m-l)/(m+k-l) * (-s/w)^k / k!``; the
    product form stays finite for large ``m``.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    r = -s / w
    total = 0.0
    coef = 1.0  # prod_{l<k} (m-l)/(m+k-l)
    power = 1.0  # r^k / k!
    for k in range(m + 1):
        if k > 0:
            coef *= (m - k + 1) / (m + k)
            power *= r / k
        total += coef * power
    return total


def dirichlet_mc(s, w, m, n_samples=10**6, rng_seed=None, indicators=True, chunk=200_000):
    """Monte Carlo estimate of ``E[prod_k 1(s q_k < w) prod_{k>=1} (1 - s q_k / w)]``
    with ``q ~ Dirichlet(1, ..., 1)`` of length ``m + 1``.

    Returns ``(estimate, standard_error)``.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    rng = np.random.default_rng(rng_seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_samples:
        n = min(chunk, n_samples - done)
        e = rng.exponential(size=(n, m + 1))
        q = e / e.sum(axis=1, keepdims=True)
        sq = s * q
        vals = np.prod(1.0 - sq[:, 1:] / w, axis=1)
        if indicators:
            vals = vals * np.all(sq < w, axis=1)
        total += vals.sum()
        total_sq += (vals**2).sum()
        done += n
    mean = total / n_samples
    var = max(total_sq / n_samples - mean**2, 0.0)
    return mean, math.sqrt(var / (n_samples - 1))


def inclusion_probability_1d(design, response, noise_var, slab_prob, slab_var=1.0) -> float:
    """Posterior ``P(x != 0 | y)`` for a single coefficient with a Gaussian slab."""
    g = np.asarray(design, dtype=float).ravel()
    y = np.asarray(response, dtype=float).ravel()
    if g.size != y.size or g.size == 0:
        raise ValueError("design column and response must share a nonzero length")
    if not (noise_var > 0 and slab_var > 0 and 0 < slab_prob < 1):
        raise ValueError("invalid variance or slab probability")
    gg = g @ g
    gy = g @ y
    denom = noise_var + slab_var * gg
    # log m1/m0 for y ~ N(0, s2 I + slab_var g g') versus N(0, s2 I)
    log_bf = 0.5 * math.log(noise_var / denom) + slab_var * gy**2 / (2.0 * noise_var * denom)
    log_odds = math.log(slab_prob / (1.0 - slab_prob)) + log_bf
    return 1.0 / (1.0 + math.exp(-log_odds)) if log_odds > -700 else 0.0


def posterior_slab_moments_1d(design, response, noise_var, slab_var=1.0):
    """Mean and variance of ``x`` given ``x != 0`` (conjugate Gaussian)."""
    g = np.asarray(design, dtype=float).ravel()
    y = np.asarray(response, dtype=float).ravel()
    prec = g @ g / noise_var + 1.0 / slab_var
    return (g @ y / noise_var) / prec, 1.0 / prec


def ks_exponential(samples, mean: float, alpha: float = 0.01) -> GofResult:
    """One-sample KS test against Exp(mean) with the asymptotic Kolmogorov threshold."""
    x = np.asarray(samples, dtype=float)
    if x.size < 100:
        raise ValueError("need at least 100 samples")
    if np.any(x <= 0):
        raise ValueError("samples must be positive")
    d = stats.kstest(x, "expon", args=(0.0, mean)).statistic
    threshold = stats.kstwobign.ppf(1.0 - alpha) / math.sqrt(x.size)
    return GofResult(float(d), float(threshold), int(x.size))


def ks_distance_exponential(samples, mean: float) -> float:
    """Sup distance between the empirical CDF and Exp(mean); no sample-size checks."""
    x = np.asarray(samples, dtype=float)
    return float(stats.kstest(x, "expon", args=(0.0, mean)).statistic)
