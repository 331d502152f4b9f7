"""Spike-and-slab Gaussian regression target and its latent-universe geometry.

The latent representation replaces the point mass at zero with a flat density
on ``[-half_extent, half_extent]``.  Coordinates inside that interval are
"stuck" at zero in the original space; outside it they are shifted towards
zero by ``half_extent`` (see :func:`collapse`).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class SpikeSlabModel:
    """Gaussian linear model ``y = G x + eps`` with a spike-and-slab prior on ``x``.

    The slab is a mean-zero Gaussian with variance ``slab_var``.  ``gram`` and
    ``xty`` are precomputed once since every sampler event touches them.
    """

    design: np.ndarray
    response: np.ndarray
    noise_var: float
    slab_prob: float
    slab_var: float = 1.0
    gram: np.ndarray = field(repr=False, default=None)
    xty: np.ndarray = field(repr=False, default=None)

    @property
    def n_obs(self) -> int:
        return self.design.shape[0]

    @property
    def dim(self) -> int:
        return self.design.shape[1]

    @property
    def slab_density_at_zero(self) -> float:
        return 1.0 / (SQRT_2PI * np.sqrt(self.slab_var))

    def with_response(self, response) -> "SpikeSlabModel":
        model, _ = build_model(self.design, response, self.noise_var, self.slab_prob, self.slab_var)
        return model


@dataclass(frozen=True)
class LatentGeometry:
    """Width and height of the latent universe replacing the spike."""

    width: float
    scale: float
    half_extent: float
    plateau_height: float

    @classmethod
    def from_width(cls, width: float, slab_density_at_zero: float, scale: float = 1.0):
        if not scale > 0:
            raise ValueError("scale must be positive")
        return cls(
            width=float(width),
            scale=float(scale),
            half_extent=0.5 * scale * width,
            plateau_height=slab_density_at_zero / scale,
        )

    def rescaled(self, scale: float) -> "LatentGeometry":
        return LatentGeometry.from_width(self.width, self.plateau_height * self.scale, scale)


@dataclass(frozen=True)
class RaySlope:
    """Affine gradient along a ray: ``grad_i(t) = intercepts[i] + slopes[i] * t``."""

    intercepts: np.ndarray
    slopes: np.ndarray
    valid_until: float


def universe_width(slab_prob: float, slab_density_at_zero: float) -> float:
    """Mean sticking time ``(1 - p_slab) / (p_slab * pi_slab(0))``."""
    return (1.0 - slab_prob) / (slab_prob * slab_density_at_zero)


def build_model(design, response, noise_var, slab_prob, slab_var=1.0, scale=1.0):
    """Validate inputs and return ``(SpikeSlabModel, LatentGeometry)``."""
    design = np.array(design, dtype=float)
    response = np.array(response, dtype=float)
    if design.ndim == 1:
        design = design[:, None]
    if design.ndim != 2 or response.ndim != 1:
        raise ValueError("design must be 2-d and response 1-d")
    n, p = design.shape
    if n == 0 or p == 0:
        raise ValueError(f"degenerate dimensions n={n}, p={p}")
    if response.shape[0] != n:
        raise ValueError(f"response has length {response.shape[0]}, expected {n}")
    if not (np.all(np.isfinite(design)) and np.all(np.isfinite(response))):
        raise ValueError("design and response must be finite")
    noise_var = float(noise_var)
    slab_prob = float(slab_prob)
    slab_var = float(slab_var)
    if not (np.isfinite(noise_var) and noise_var > 0):
        raise ValueError("noise_var must be positive and finite")
    if not (0.0 < slab_prob < 1.0):
        raise ValueError("slab_prob must lie in (0, 1)")
    if not (np.isfinite(slab_var) and slab_var > 0):
        raise ValueError("slab_var must be positive and finite")

    gram = design.T @ design
    gram = 0.5 * (gram + gram.T)
    model = SpikeSlabModel(
        design=design,
        response=response,
        noise_var=noise_var,
        slab_prob=slab_prob,
        slab_var=slab_var,
        gram=gram,
        xty=design.T @ response,
    )
    pi0 = model.slab_density_at_zero
    geometry = LatentGeometry.from_width(universe_width(slab_prob, pi0), pi0, scale)
    return model, geometry


def collapse(latent_position, geometry: LatentGeometry):
    """Map latent coordinates to the original space.

    ``|x| <= half_extent`` goes to 0, everything else is shifted towards zero
    by ``half_extent``.
    """
    x = np.asarray(latent_position, dtype=float)
    h = geometry.half_extent
    return np.where(np.abs(x) <= h, 0.0, x - np.sign(x) * h)


def inside_universe(latent_position, geometry: LatentGeometry):
    return np.abs(np.asarray(latent_position, dtype=float)) <= geometry.half_extent


def expand(position, geometry: LatentGeometry, side=None):
    """Right inverse of :func:`collapse` for nonzero coordinates.

    Zero coordinates are placed on the boundary given by ``side`` (default +).
    """
    x = np.asarray(position, dtype=float)
    s = np.sign(x)
    if side is not None:
        s = np.where(s == 0, np.sign(side), s)
    s = np.where(s == 0, 1.0, s)
    return x + s * geometry.half_extent


def _likelihood_gradient(model: SpikeSlabModel, x):
    return (model.gram @ x - model.xty) / model.noise_var


def potential(model: SpikeSlabModel, geometry: LatentGeometry, latent_position) -> float:
    """``-log`` of the latent posterior density, up to an additive constant.

    The constant is chosen so the outside branch equals
    ``||y - Gx||^2 / (2 sigma^2) + x^2 / (2 slab_var)``; inside coordinates add
    ``log(scale)`` which vanishes for the continuous ``scale = 1`` universe.
    """
    xt = np.asarray(latent_position, dtype=float)
    x = collapse(xt, geometry)
    resid = model.response - model.design @ x
    u = 0.5 * resid @ resid / model.noise_var + 0.5 * x @ x / model.slab_var
    n_inside = np.count_nonzero(np.abs(xt) <= geometry.half_extent)
    return float(u + n_inside * np.log(geometry.scale))


def potential_gradient(model: SpikeSlabModel, geometry: LatentGeometry, latent_position):
    """Gradient of :func:`potential`; exactly zero on plateau coordinates."""
    xt = np.asarray(latent_position, dtype=float)
    x = collapse(xt, geometry)
    grad = _likelihood_gradient(model, x) + x / model.slab_var
    grad[np.abs(xt) <= geometry.half_extent] = 0.0
    return grad


def ray_slope(model: SpikeSlabModel, geometry: LatentGeometry, latent_position, velocity) -> RaySlope:
    xt = np.asarray(latent_position, dtype=float)
    v = np.asarray(velocity, dtype=float)
    if not np.all(np.abs(v) == 1.0):
        raise ValueError("velocity entries must be +1 or -1")
    h = geometry.half_extent
    inside = np.abs(xt) <= h
    v_eff = np.where(inside, 0.0, v)
    slopes = model.gram @ v_eff / model.noise_var + v_eff / model.slab_var
    slopes[inside] = 0.0
    intercepts = potential_gradient(model, geometry, xt)

    x = collapse(xt, geometry)
    times = np.full(xt.shape, np.inf)
    heading_in = ~inside & (x * v < 0)
    times[heading_in] = np.abs(x[heading_in])
    times[inside] = h - v[inside] * xt[inside]
    valid = float(times.min()) if times.size else np.inf
    return RaySlope(intercepts=intercepts, slopes=slopes, valid_until=valid)
