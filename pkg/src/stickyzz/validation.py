"""Acceptance checks shared by the ``validate`` command and the test suite.

Each check returns a :class:`CheckResult`; none of them raise on a failed
comparison, only on genuine errors.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import hamiltonian, latent, sticky
from .diagnostics import batch_means_se, ess, regenerative_variance, time_average
from .experiments import ExperimentConfig, compare, run_experiment
from .model import build_model
from .oracles import (
    dirichlet_mc,
    inclusion_probability_1d,
    ks_distance_exponential,
    ks_exponential,
    refresh_survival_series,
)


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.number:>2}. {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(number, name):
    def wrap(fn):
        def run(*args, **kw):
            t0 = time.perf_counter()
            passed, detail, data = fn(*args, **kw)
            return CheckResult(number, name, bool(passed), detail, time.perf_counter() - t0, data)
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        run.number = number
        return run
    return wrap


# 1-d conjugate settings shared by several checks: (g, y, slab_prob)
CONJUGATE_SETTINGS = (
    (np.array([1.0, 0.5, -0.3]), np.array([0.8, 0.6, 0.1]), 0.3),
    (np.array([1.2, -0.7, 0.4, 0.9]), np.array([1.5, -0.4, 0.9, 1.1]), 0.2),
    (np.array([0.6, 0.8]), np.array([-0.9, -1.3]), 0.5),
)


def one_dim_model(setting=0, noise_var=1.0, scale=1.0):
    g, y, sp = CONJUGATE_SETTINGS[setting]
    return build_model(g[:, None], y, noise_var, sp, scale=scale)


@_timed(1, "refreshment series vs Dirichlet Monte Carlo")
def check_survival_series(n_samples=10**6, seed=1):
    rows = []
    ok = True
    w = 1.0
    for k, ratio in enumerate((0.5, 1.0)):
        for j, m in enumerate((1, 5, 20)):
            series = refresh_survival_series(ratio * w, w, m)
            mc, se = dirichlet_mc(ratio * w, w, m, n_samples, rng_seed=seed + 10 * k + j)
            z = abs(series - mc) / se
            ok &= z <= 3.0
            rows.append((ratio, m, series, mc, se, z))
    limit = refresh_survival_series(w, w, 200)
    ok &= abs(limit - math.exp(-1.0)) <= 0.01
    worst = max(r[-1] for r in rows)
    return ok, f"max |z| = {worst:.2f} (<= 3), m=200 value {limit:.5f} vs e^-1", {"rows": rows, "limit": limit}


@_timed(2, "original sampler sticking times ~ Exp(w)")
def check_exponential_sticking(n_periods=10_000, seed=2):
    model, geo = one_dim_model(0)
    horizon = 1.5 * n_periods * geo.width / 0.74
    traj = sticky.simulate_sticky(model, geo, sticky.initial_state([0.5], seed), horizon, rng_seed=seed)
    d = latent.sticking_time_distribution(traj).durations
    if d.size < n_periods:
        return False, f"only {d.size} sticking periods", {}
    res = ks_exponential(d[:n_periods], geo.width, alpha=0.01)
    return res.passed, f"KS D = {res.statistic:.4f} <= {res.threshold:.4f} (n={res.n})", {"ks": res}


@_timed(3, "latent sampler sticking times equal w")
def check_deterministic_sticking(horizon=50_000.0, seed=3):
    model, geo = one_dim_model(0)
    init = latent.LatentState([0.5 + geo.half_extent], [1.0])
    _, traj = latent.simulate_latent(model, geo, init, horizon, 0.0, rng_seed=seed)
    d = latent.sticking_time_distribution(traj).durations
    err = float(np.max(np.abs(d - geo.width)))
    return err <= 1e-9, f"max |duration - w| = {err:.2e} over {d.size} periods", {"max_err": err}


def _refreshed_ks(geo, model, rate, seed, n_periods):
    horizon = 1.5 * n_periods * geo.width / 0.74
    init = latent.LatentState([0.5 + geo.half_extent], [1.0])
    _, traj = latent.simulate_latent(model, geo, init, horizon, rate, rng_seed=seed)
    d = latent.sticking_time_distribution(traj).durations[:n_periods]
    return ks_distance_exponential(d, geo.width)


@_timed(4, "refreshed sticking times approach Exp(w)")
def check_refresh_limit(n_periods=20_000, seeds=(41, 42, 43, 44, 45)):
    model, geo = one_dim_model(0)
    rates = np.array([1.0, 10.0, 100.0]) / geo.width
    table = []
    for s in seeds:
        table.append([_refreshed_ks(geo, model, r, s, n_periods) for r in rates])
    table = np.array(table)
    monotone = np.all(np.diff(table, axis=1) < 0, axis=1)
    ok = monotone.sum() > len(seeds) / 2
    med = np.median(table, axis=0)
    return ok, (f"monotone in {monotone.sum()}/{len(seeds)} seeds; median KS "
                + ", ".join(f"{v:.4f}" for v in med)), {"ks": table}


@_timed(5, "inclusion probability of all samplers on 1-d conjugate models")
def check_conjugate_posterior(horizon=2e5, n_iterations=100_000, seed=5):
    rows = []
    ok = True
    for k in range(len(CONJUGATE_SETTINGS)):
        g, y, sp = CONJUGATE_SETTINGS[k]
        model, geo = one_dim_model(k)
        truth = inclusion_probability_1d(g, y, 1.0, sp)
        traj = sticky.simulate_sticky(model, geo, sticky.initial_state([0.5], seed + k), horizon, rng_seed=seed + k)
        est = {"original": (1 - time_average(traj, "zero_indicator", 0),
                            batch_means_se(traj, "zero_indicator", 0))}
        init = latent.LatentState([0.5 + geo.half_extent], [1.0])
        _, traj = latent.simulate_latent(model, geo, init, horizon, 0.0, rng_seed=seed + k)
        est["latent"] = (1 - time_average(traj, "zero_indicator", 0), batch_means_se(traj, "zero_indicator", 0))
        s = hamiltonian.run_chain(model, geo, hamiltonian.initial_state(geo, [0.5], rng_seed=seed + k),
                                  n_iterations, rng_seed=seed + k)
        ind = (s[:, 0] != 0).astype(float)
        est["hamiltonian"] = (ind.mean(), ind.std(ddof=1) / math.sqrt(ess(ind)))
        for name, (m, se) in est.items():
            z = abs(m - truth) / se
            ok &= z <= 3.0
            rows.append((k, name, truth, m, se, z))
    worst = max(r[-1] for r in rows)
    return ok, f"max |z| = {worst:.2f} over {len(rows)} estimates", {"rows": rows}


def random_model(dim=10, n_obs=20, seed=6, slab_prob=0.3):
    rng = np.random.default_rng(seed)
    design = rng.standard_normal((n_obs, dim))
    coef = np.where(rng.random(dim) < 0.4, rng.choice([-1.0, 1.0], dim), 0.0)
    response = design @ coef + rng.standard_normal(n_obs)
    return build_model(design, response, 1.0, slab_prob)


@_timed(6, "Hamiltonian flow conserves energy and is reversible")
def check_energy(n_calls=1000, seed=6):
    model, geo = random_model(seed=seed)
    rng = np.random.default_rng(seed)
    worst_h = 0.0
    worst_r = 0.0
    for _ in range(n_calls):
        x = rng.normal(0.0, 1.0, model.dim)
        x = np.where(rng.random(model.dim) < 0.5, rng.uniform(-geo.half_extent, geo.half_extent, model.dim),
                     x + np.sign(x) * geo.half_extent)
        st = hamiltonian.HzzState(x, rng.laplace(0.0, 1.0, model.dim))
        duration = rng.uniform(0.1, 10.0)
        end = hamiltonian.integrate(model, geo, st, duration)
        h0 = hamiltonian.hamiltonian(model, geo, st)
        worst_h = max(worst_h, abs(hamiltonian.hamiltonian(model, geo, end) - h0))
        back = hamiltonian.integrate(model, geo, hamiltonian.HzzState(end.position, -end.momentum), duration)
        worst_r = max(worst_r, float(np.max(np.abs(back.position - st.position))),
                      float(np.max(np.abs(-back.momentum - st.momentum))))
    ok = worst_h <= 1e-8 and worst_r <= 1e-6
    return ok, f"max |dH| = {worst_h:.2e} (<= 1e-8), max reversal error {worst_r:.2e} (<= 1e-6)", \
        {"max_dH": worst_h, "max_reversal": worst_r}


def orthogonal_model():
    """Two independent coordinates with inclusion probability near 1/2."""
    design = np.sqrt(3.0) * np.eye(2)
    design = np.vstack([design, design, design])
    response = np.array([1.6, -1.3, 1.5, -1.2, 1.4, -1.0]) / np.sqrt(3.0)
    return build_model(design, response, 1.0, 0.25)


@_timed(7, "latent sampler has smaller regenerative variance")
def check_variance_ordering(horizon=2e5, n_pairs=20, seed=700):
    model, geo = orthogonal_model()
    mean = model.xty[0] / (model.gram[0, 0] + 1.0)
    point = (round(float(mean), 2), 1.0)
    wins = 0
    ratios = []
    for k in range(n_pairs):
        s = seed + k
        traj = sticky.simulate_sticky(model, geo, sticky.initial_state(np.full(2, point[0]), s), horizon, rng_seed=s)
        v_orig = regenerative_variance(traj, point, "identity", 0)
        init = latent.LatentState(np.full(2, point[0] + geo.half_extent), np.ones(2))
        _, traj = latent.simulate_latent(model, geo, init, horizon, 0.0, rng_seed=s + 10_000)
        v_lat = regenerative_variance(traj, point, "identity", 0)
        wins += v_lat < v_orig
        ratios.append(v_lat / v_orig)
    p_value = stats.binomtest(wins, n_pairs, 0.5, alternative="greater").pvalue
    ok = wins >= 15 and p_value < 0.05
    return ok, f"latent smaller in {wins}/{n_pairs} pairs (sign test p = {p_value:.2g}), median ratio " \
               f"{np.median(ratios):.3f}", {"wins": wins, "ratios": ratios}


DESK_ALPHAS = (0.5, 0.9, 0.99)


def desk_configs(horizon=1e6, n_replicates=5, seed=2024, slab_prob=0.01):
    out = []
    for a in DESK_ALPHAS:
        for s in ("original", "latent", "hamiltonian"):
            out.append(ExperimentConfig(alpha=a, slab_prob=slab_prob, sampler=s, horizon=horizon,
                                        n_iterations=int(horizon / 4), n_replicates=n_replicates, seed=seed))
    return out


@_timed(8, "desk-scale efficiency ordering")
def check_desk_ordering(horizon=1e6, n_replicates=5, seed=2024, out_dir=None):
    reports = []
    for cfg in desk_configs(horizon, n_replicates, seed):
        sub = None if out_dir is None else f"{out_dir}/{cfg.sampler}_a{cfg.alpha}"
        reports.append(run_experiment(cfg, sub))
    rows = compare(reports, "original")
    ok = all(r["latent"] >= 1.0 for r in rows)
    top = next(r for r in rows if r["alpha"] == 0.99)
    ok &= top["hamiltonian"] > top["latent"]
    detail = "; ".join(f"a={r['alpha']}: lat {r['latent']:.2f} ham {r['hamiltonian']:.2f}" for r in rows)
    return ok, detail, {"rows": rows, "reports": reports}


def _scaled_run(scale, horizon, seed):
    model, geo = one_dim_model(0, scale=scale)
    init = latent.LatentState([0.5 + geo.half_extent], [1.0])
    run = latent.run_latent(model, geo, init, horizon, 0.0, rng_seed=seed)
    return geo, run


@_timed(9, "rescaled universe crossings")
def check_scaled_universe(n_attempts=10_000, n_periods=2000, seed=9):
    horizon = 2e4
    # extend the horizon until enough exit attempts were made
    while True:
        geo, run = _scaled_run(0.5, horizon, seed)
        n = run.counts["exit_attempts"]
        if n >= n_attempts:
            break
        horizon *= 1.2 * n_attempts / max(n, 1)
    frac = run.counts["unstick"] / n
    ok_frac = abs(frac - 0.5) <= 3 * math.sqrt(0.25 / n)
    d_half = ks_distance_exponential(latent.sticking_time_distribution(run.trajectory).durations, geo.width)

    _, run_s = _scaled_run(0.05, 2.0 * n_periods * geo.width / 0.74, seed + 1)
    small = latent.sticking_time_distribution(run_s.trajectory)
    m = min(n_periods, small.n)
    other = int((~small.same_side[:m]).sum())
    p_side = stats.binomtest(other, m, 0.5).pvalue
    d_small = ks_distance_exponential(small.durations, geo.width)
    ok = ok_frac and p_side >= 0.01 and d_small < d_half
    return ok, (f"c=0.5 exit fraction {frac:.4f} over {n} attempts; c=0.05 other-side {other}/{m} "
                f"(p = {p_side:.3f}); KS {d_small:.4f} < {d_half:.4f}"), \
        {"fraction": frac, "attempts": n, "p_side": p_side, "ks_small": d_small, "ks_half": d_half}


@_timed(10, "latent and original samplers agree on a 5-d model")
def check_cross_validation(horizon=2e5, seed=10):
    model, geo = random_model(dim=5, n_obs=15, seed=seed, slab_prob=0.4)
    traj = sticky.simulate_sticky(model, geo, sticky.initial_state(np.zeros(5) + 0.1, seed), horizon, rng_seed=seed)
    m_o, se_o = time_average(traj, "identity"), batch_means_se(traj, "identity")
    init = latent.initial_state(geo, np.zeros(5) + 0.1, rng_seed=seed)
    _, traj = latent.simulate_latent(model, geo, init, horizon, 0.0, rng_seed=seed + 1)
    m_l, se_l = time_average(traj, "identity"), batch_means_se(traj, "identity")
    z = np.abs(m_o - m_l) / np.sqrt(se_o**2 + se_l**2)
    return bool(np.all(z <= 3.0)), f"max |z| = {z.max():.2f} over 5 coordinates", {"z": z}


CHECKS = {
    1: check_survival_series,
    2: check_exponential_sticking,
    3: check_deterministic_sticking,
    4: check_refresh_limit,
    5: check_conjugate_posterior,
    6: check_energy,
    7: check_variance_ordering,
    8: check_desk_ordering,
    9: check_scaled_universe,
    10: check_cross_validation,
}


def run_checks(numbers=None, echo=None) -> list:
    out = []
    for k in sorted(CHECKS if numbers is None else numbers):
        if k not in CHECKS:
            raise KeyError(f"no acceptance check numbered {k}")
        res = CHECKS[k]()
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out
