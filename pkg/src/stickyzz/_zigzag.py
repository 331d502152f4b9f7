"""Jitted event loop shared by the original and latent sticky zig-zag samplers.

Both samplers keep the collapsed position ``x`` and a per-coordinate
``inside`` flag.  For the original sampler an inside coordinate is stuck with
a pre-drawn release time; for the latent sampler it carries a latent offset
in ``[-h, h]`` and leaves when that offset reaches the far boundary.  Inside
the loop the latent offset is stored implicitly as its exit time in
``release_at`` so inside coordinates cost nothing between events.

Gradient bookkeeping is incremental: ``g`` is the full gradient of the
Gaussian part at the collapsed position and ``b`` its time derivative along
the current effective velocity.  Changing one coordinate's effective velocity
costs one Gram column.
"""
import numpy as np
from numba import njit

from .events import _first_arrival_linear

MODE_ORIGINAL = 0
MODE_LATENT = 1

K_STICK = 0
K_UNSTICK = 1
K_BOUNCE = 2
K_BOUNDARY = 3
K_REFRESH = 4
K_HORIZON = 5

# counter slots
C_BOUNCE = 0
C_STICK = 1
C_UNSTICK = 2
C_ENTRY_ATTEMPT = 3
C_ENTRY_REJECT = 4
C_EXIT_ATTEMPT = 5
C_EXIT_REJECT = 6
C_REFRESH = 7
C_EVENTS = 8
N_COUNTERS = 9

COUNTER_NAMES = (
    "bounce",
    "stick",
    "unstick",
    "entry_attempts",
    "entry_rejects",
    "exit_attempts",
    "exit_rejects",
    "refresh",
    "events",
)

RECOMPUTE_EVERY = 1000


@njit(cache=True)
def _full_gradient(gram, xty, noise_var, slab_var, x, v_eff, g, b):
    p = x.shape[0]
    for i in range(p):
        gi = -xty[i]
        bi = 0.0
        for j in range(p):
            gi += gram[i, j] * x[j]
            bi += gram[i, j] * v_eff[j]
        g[i] = gi / noise_var + x[i] / slab_var
        b[i] = bi / noise_var + v_eff[i] / slab_var


@njit(cache=True)
def _shift_slope(gram, noise_var, slab_var, b, i, delta):
    # effective velocity of coordinate i changed by ``delta``
    p = b.shape[0]
    for j in range(p):
        b[j] += gram[j, i] * delta / noise_var
    b[i] += delta / slab_var


@njit(cache=True)
def _grow_rows(a, n):
    out = np.empty((n, a.shape[1]), dtype=a.dtype)
    out[: a.shape[0]] = a
    return out


@njit(cache=True)
def _grow(a, n):
    out = np.empty(n, dtype=a.dtype)
    out[: a.shape[0]] = a
    return out


@njit(cache=True)
def _offsets(inside, v, exit_at, clock, h, out):
    for i in range(inside.shape[0]):
        out[i] = v[i] * (h - (exit_at[i] - clock)) if inside[i] else 0.0


@njit(cache=True)
def zigzag_run(
    gram, xty, noise_var, slab_var,
    mode, spike, width, half_extent, scale, refresh_rate,
    x, v, inside, offset, release_at, clock0, horizon, seed,
    record, spacing, max_events,
):
    """Simulate from ``clock0`` to ``horizon``; state arrays are updated in place.

    Returns ``(status, clock, counters, rec_t, rec_x, rec_v, rec_in, rec_off, grid)``.
    ``status`` is 0 on success and 1 if ``max_events`` was exceeded.
    """
    np.random.seed(seed)
    p = x.shape[0]
    h = half_extent
    latent = mode == MODE_LATENT
    leave_kind = K_BOUNDARY if latent else K_UNSTICK
    if not latent:
        refresh_rate = 0.0
    counters = np.zeros(N_COUNTERS, dtype=np.int64)

    v_eff = np.empty(p)
    for i in range(p):
        v_eff[i] = 0.0 if inside[i] else v[i]
        if latent and inside[i]:
            release_at[i] = clock0 + h - v[i] * offset[i]
    g = np.empty(p)
    b = np.empty(p)
    _full_gradient(gram, xty, noise_var, slab_var, x, v_eff, g, b)

    cap = 1024 if record else 1
    rec_t = np.empty(cap)
    rec_x = np.empty((cap, p))
    rec_v = np.empty((cap, p))
    rec_in = np.empty((cap, p), dtype=np.bool_)
    rec_off = np.empty((cap, p))
    n_rec = 0
    if record:
        rec_t[0] = clock0
        rec_x[0] = x
        rec_v[0] = v
        rec_in[0] = inside
        rec_off[0] = offset
        n_rec = 1

    if spacing > 0.0:
        n_grid = int(np.floor((horizon - clock0) / spacing + 1e-12)) + 1
    else:
        n_grid = 0
    grid = np.empty((n_grid, p))
    k_grid = 0

    clock = clock0
    status = 0
    since_recompute = 0
    while True:
        best_t = horizon - clock
        best_i = -1
        best_k = K_HORIZON
        for i in range(p):
            if not inside[i]:
                if spike and x[i] * v[i] < 0.0:
                    t = -x[i] / v[i]
                    if t < best_t:
                        best_t = t
                        best_i = i
                        best_k = K_STICK
                e = np.random.exponential()
                t = _first_arrival_linear(v[i] * g[i], v[i] * b[i], e)
                if t < best_t:
                    best_t = t
                    best_i = i
                    best_k = K_BOUNCE
            else:
                t = release_at[i] - clock
                if t < 0.0:
                    t = 0.0
                if t < best_t:
                    best_t = t
                    best_i = i
                    best_k = leave_kind
                if refresh_rate > 0.0:
                    t = np.random.exponential() / refresh_rate
                    if t < best_t:
                        best_t = t
                        best_i = i
                        best_k = K_REFRESH

        tau = best_t
        while k_grid < n_grid and clock0 + k_grid * spacing < clock + tau:
            dt = clock0 + k_grid * spacing - clock
            for i in range(p):
                grid[k_grid, i] = x[i] + v_eff[i] * dt
            k_grid += 1

        for i in range(p):
            if not inside[i]:
                x[i] += v[i] * tau
            g[i] += b[i] * tau

        if best_k == K_HORIZON:
            clock = horizon
            break
        clock += tau

        i = best_i
        if best_k == K_BOUNCE:
            v[i] = -v[i]
            v_eff[i] = v[i]
            _shift_slope(gram, noise_var, slab_var, b, i, 2.0 * v[i])
            counters[C_BOUNCE] += 1
        elif best_k == K_STICK:
            x[i] = 0.0
            counters[C_ENTRY_ATTEMPT] += 1
            accept = True
            if latent and scale > 1.0:
                accept = np.random.random() < 1.0 / scale
            if accept:
                inside[i] = True
                v_eff[i] = 0.0
                _shift_slope(gram, noise_var, slab_var, b, i, -v[i])
                if latent:
                    release_at[i] = clock + 2.0 * h
                else:
                    release_at[i] = clock + width * np.random.exponential()
                counters[C_STICK] += 1
            else:
                v[i] = -v[i]
                v_eff[i] = v[i]
                _shift_slope(gram, noise_var, slab_var, b, i, 2.0 * v[i])
                counters[C_ENTRY_REJECT] += 1
        elif best_k == K_UNSTICK or best_k == K_BOUNDARY:
            counters[C_EXIT_ATTEMPT] += 1
            accept = True
            if latent and scale < 1.0:
                accept = np.random.random() < scale
            if accept:
                inside[i] = False
                x[i] = 0.0
                v_eff[i] = v[i]
                _shift_slope(gram, noise_var, slab_var, b, i, v[i])
                counters[C_UNSTICK] += 1
            else:
                # reflected back across the whole universe
                v[i] = -v[i]
                release_at[i] = clock + 2.0 * h
                counters[C_EXIT_REJECT] += 1
        else:
            u = h * (2.0 * np.random.random() - 1.0)
            release_at[i] = clock + h - v[i] * u
            counters[C_REFRESH] += 1
        counters[C_EVENTS] += 1

        since_recompute += 1
        if since_recompute >= RECOMPUTE_EVERY:
            _full_gradient(gram, xty, noise_var, slab_var, x, v_eff, g, b)
            since_recompute = 0

        if record:
            if tau > 0.0 or n_rec == 0:
                if n_rec == rec_t.shape[0]:
                    new_cap = 2 * n_rec
                    rec_t = _grow(rec_t, new_cap)
                    rec_x = _grow_rows(rec_x, new_cap)
                    rec_v = _grow_rows(rec_v, new_cap)
                    rec_in = _grow_rows(rec_in, new_cap)
                    rec_off = _grow_rows(rec_off, new_cap)
                n_rec += 1
            # zero-length segments overwrite the previous snapshot
            j = n_rec - 1
            rec_t[j] = clock
            rec_x[j] = x
            rec_v[j] = v
            rec_in[j] = inside
            if latent:
                _offsets(inside, v, release_at, clock, h, offset)
            rec_off[j] = offset

        if counters[C_EVENTS] >= max_events:
            status = 1
            break

    if latent:
        _offsets(inside, v, release_at, clock, h, offset)
    while k_grid < n_grid and clock0 + k_grid * spacing <= clock + 1e-9 * spacing:
        dt = clock0 + k_grid * spacing - clock
        for i in range(p):
            grid[k_grid, i] = x[i] + v_eff[i] * dt
        k_grid += 1

    return (
        status, clock, counters,
        rec_t[:n_rec], rec_x[:n_rec], rec_v[:n_rec], rec_in[:n_rec], rec_off[:n_rec],
        grid[:k_grid],
    )


def numba_seed(seed) -> int:
    """Map an arbitrary integer seed (or None) to the uint32 range numba accepts."""
    return int(np.random.SeedSequence(seed).generate_state(1)[0])


def counters_dict(counters) -> dict:
    return {name: int(c) for name, c in zip(COUNTER_NAMES, counters)}
