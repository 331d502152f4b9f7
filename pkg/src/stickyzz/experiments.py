"""Synthetic block-correlated regression benchmarks and report assembly."""
from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import hamiltonian, latent, sticky
from .diagnostics import ess, statistic_set
from .model import build_model

log = logging.getLogger(__name__)

SAMPLERS = ("original", "latent", "hamiltonian")
REQUIRED_FIELDS = ("alpha", "slab_prob", "sampler")
TIMING_FIELDS = ("wall_seconds", "ess_per_second", "replicate_wall_seconds", "granular_per_second")


class ConfigError(ValueError):
    """Malformed experiment configuration."""


@dataclass
class ExperimentConfig:
    alpha: float
    slab_prob: float
    sampler: str
    n_blocks: int = 10
    block_size: int = 20
    n_obs: int = 200
    noise_var: float | None = None
    target_snr: float = 0.15
    n_signals: int = 10
    signal_magnitude: float = 1.0
    slab_var: float = 1.0
    horizon: float = 20_000.0
    n_iterations: int = 10_000
    spacing: float = 2.0
    thin: int = 1
    travel_range: tuple = (2.0, 6.0)
    refresh_rate: float = 0.0
    scale_c: float = 1.0
    init_jitter: float = 0.001
    seed: int = 0
    n_replicates: int = 5

    def __post_init__(self):
        self.validate()

    @property
    def dim(self) -> int:
        return self.n_blocks * self.block_size

    def validate(self):
        if self.sampler not in SAMPLERS:
            raise ConfigError(f"sampler: expected one of {SAMPLERS}, got {self.sampler!r}")
        if not (0.0 <= self.alpha < 1.0):
            raise ConfigError(f"alpha: must lie in [0, 1), got {self.alpha}")
        if not (0.0 < self.slab_prob < 1.0):
            raise ConfigError(f"slab_prob: must lie in (0, 1), got {self.slab_prob}")
        for name in ("n_blocks", "block_size", "n_obs", "n_replicates", "thin", "n_iterations"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name}: must be a positive integer")
        if not (0 <= self.n_signals <= self.dim):
            raise ConfigError(f"n_signals: must lie in [0, {self.dim}]")
        if self.noise_var is not None and not self.noise_var > 0:
            raise ConfigError("noise_var: must be positive")
        if not (0.0 < self.target_snr < 1.0):
            raise ConfigError("target_snr: must lie in (0, 1)")
        for name in ("spacing", "horizon", "scale_c", "slab_var"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name}: must be positive")
        if self.refresh_rate < 0:
            raise ConfigError("refresh_rate: must be nonnegative")
        lo, hi = self.travel_range
        if not 0 < lo < hi:
            raise ConfigError("travel_range: must satisfy 0 < lo < hi")
        self.travel_range = (float(lo), float(hi))

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        for name in REQUIRED_FIELDS:
            if name not in data:
                raise ConfigError(f"missing required field '{name}'")
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown field(s): {', '.join(unknown)}")
        kwargs = {}
        for name, value in data.items():
            kwargs[name] = _coerce(name, value, known[name].type)
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: line {err.lineno}, column {err.colno}: {err.msg}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["travel_range"] = list(self.travel_range)
        return d


def _coerce(name, value, annotation):
    ann = str(annotation)
    try:
        if name == "sampler":
            if not isinstance(value, str):
                raise TypeError
            return value
        if name == "travel_range":
            lo, hi = value
            return (float(lo), float(hi))
        if value is None and "None" in ann:
            return None
        if isinstance(value, bool):
            raise TypeError
        if ann.startswith("int"):
            if isinstance(value, float) and not value.is_integer():
                raise TypeError
            return int(value)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: invalid value {value!r}") from None


@dataclass
class Dataset:
    design: np.ndarray
    response: np.ndarray
    true_coefficients: np.ndarray
    block_assignment: np.ndarray
    noise_var: float
    snr: float = field(default=float("nan"))

    @property
    def true_nonzero(self) -> np.ndarray:
        return np.flatnonzero(self.true_coefficients != 0)

    def to_dict(self) -> dict:
        return {
            "design": self.design.tolist(),
            "response": self.response.tolist(),
            "true_coefficients": self.true_coefficients.tolist(),
            "block_assignment": self.block_assignment.tolist(),
            "noise_var": self.noise_var,
            "snr": self.snr,
        }

    @classmethod
    def from_dict(cls, d) -> "Dataset":
        return cls(
            np.asarray(d["design"], float), np.asarray(d["response"], float),
            np.asarray(d["true_coefficients"], float), np.asarray(d["block_assignment"], int),
            float(d["noise_var"]), float(d.get("snr", "nan")),
        )


def block_predictors(n_obs, n_blocks, block_size, alpha, rng) -> np.ndarray:
    """Stationary AR(1) predictors within each block, independent across blocks."""
    if not (0.0 <= alpha < 1.0):
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    g = np.empty((n_obs, n_blocks, block_size))
    xi = rng.standard_normal((n_obs, n_blocks, block_size))
    g[:, :, 0] = xi[:, :, 0]
    innov = np.sqrt(1.0 - alpha**2)
    for k in range(1, block_size):
        g[:, :, k] = alpha * g[:, :, k - 1] + innov * xi[:, :, k]
    return g.reshape(n_obs, n_blocks * block_size)


def generate_data(config: ExperimentConfig, rng_seed=None) -> Dataset:
    """Pure function of ``(config, rng_seed)``; ``rng_seed`` defaults to ``config.seed``."""
    rng = np.random.default_rng(config.seed if rng_seed is None else rng_seed)
    design = block_predictors(config.n_obs, config.n_blocks, config.block_size, config.alpha, rng)
    p = config.dim
    coef = np.zeros(p)
    idx = rng.choice(p, size=config.n_signals, replace=False)
    coef[idx] = config.signal_magnitude * rng.choice([-1.0, 1.0], size=config.n_signals)
    signal = design @ coef
    if config.noise_var is None:
        sv = np.var(signal)
        noise_var = sv * (1.0 / config.target_snr - 1.0) if sv > 0 else 1.0
    else:
        noise_var = float(config.noise_var)
    response = signal + rng.normal(0.0, np.sqrt(noise_var), size=config.n_obs)
    snr = float(np.var(signal) / np.var(response))
    blocks = np.repeat(np.arange(config.n_blocks), config.block_size)
    return Dataset(design, response, coef, blocks, float(noise_var), snr)


def _chain_seed(seed, replicate):
    return int(np.random.SeedSequence([int(seed), int(replicate)]).generate_state(1)[0])


_WARM = set()


def _warm_up(sampler):
    # compile outside the timed region
    if sampler in _WARM:
        return
    model, geo = build_model(np.eye(2), np.ones(2), 1.0, 0.5)
    if sampler == "original":
        sticky.run_sticky(model, geo, sticky.initial_state([1.0, 0.0], 0), 5.0, 0, record=False, spacing=1.0)
    elif sampler == "latent":
        latent.run_latent(model, geo, latent.initial_state(geo, [1.0, 0.0], rng_seed=0), 5.0, 0.0, 0,
                          record=False, spacing=1.0)
    else:
        hamiltonian.run_hzz(model, geo, hamiltonian.initial_state(geo, [1.0, 0.0], rng_seed=0), 2, rng_seed=0)
    _WARM.add(sampler)


def run_chain(config: ExperimentConfig, data: Dataset, replicate: int):
    """One replicate chain; returns ``(samples, sample_times, Run)``."""
    model, geo = build_model(data.design, data.response, data.noise_var, config.slab_prob,
                             config.slab_var, config.scale_c)
    seed = _chain_seed(config.seed, replicate)
    zero = data.true_coefficients == 0
    _warm_up(config.sampler)
    if config.sampler == "original":
        init = sticky.initial_state(data.true_coefficients, seed, stuck=zero, geometry=geo)
        jitter = np.random.default_rng(seed).normal(0.0, config.init_jitter, size=model.dim)
        init.position = np.where(zero, 0.0, init.position + jitter)
        run = sticky.run_sticky(model, geo, init, config.horizon, seed, record=False, spacing=config.spacing)
        times = config.spacing * np.arange(run.samples.shape[0])
    elif config.sampler == "latent":
        init = latent.initial_state(geo, data.true_coefficients, zero, seed, config.init_jitter)
        run = latent.run_latent(model, geo, init, config.horizon, config.refresh_rate, seed,
                                record=False, spacing=config.spacing)
        times = config.spacing * np.arange(run.samples.shape[0])
    else:
        init = hamiltonian.initial_state(geo, data.true_coefficients, zero, seed, config.init_jitter)
        run = hamiltonian.run_hzz(model, geo, init, config.n_iterations, config.travel_range, seed)
        times = np.arange(1, run.samples.shape[0] + 1, dtype=float)
    samples = run.samples[:: config.thin]
    return samples, times[:: config.thin], run


def _granular(names, values):
    names = np.asarray(names)
    values = np.asarray(values)
    out = {}
    for label, prefix in (("nonzero", "coef_"), ("zero", "block_")):
        sel = np.char.startswith(names.astype(str), prefix)
        if sel.any():
            out[label] = {"min_ess": float(values[sel].min()), "median_ess": float(np.median(values[sel]))}
    return out


def assemble_report(config: dict, names, per_replicate_ess, walls, counts, dataset_meta=None) -> dict:
    """Average each statistic's ESS over replicates and normalize by mean wall time."""
    per_rep = np.asarray(per_replicate_ess, dtype=float)
    mean_ess = per_rep.mean(axis=0)
    wall = float(np.mean(walls))
    total_counts = {}
    for c in counts:
        for k, v in c.items():
            total_counts[k] = total_counts.get(k, 0) + int(v)
    min_ess = float(mean_ess.min())
    gran = _granular(names, mean_ess)
    report = {
        "config": config,
        "per_statistic_ess": {n: float(e) for n, e in zip(names, mean_ess)},
        "min_ess": min_ess,
        "median_ess": float(np.median(mean_ess)),
        "wall_seconds": wall,
        "ess_per_second": min_ess / wall if wall > 0 else float("inf"),
        "event_counts": total_counts,
        "replicate_min_ess": [float(r.min()) for r in per_rep],
        "replicate_wall_seconds": [float(w) for w in walls],
        "granular": gran,
        "granular_per_second": {
            k: {m: v / wall for m, v in d.items()} for k, d in gran.items()
        } if wall > 0 else {},
    }
    if dataset_meta is not None:
        report["dataset"] = dataset_meta
    return report


def _write_samples(out: Path, replicate: int, times, stats: dict, meta: dict):
    cols = list(stats)
    header = ",".join(["t"] + [f"stat_{k + 1}" for k in range(len(cols))])
    table = np.column_stack([times] + [stats[c] for c in cols])
    np.savetxt(out / f"samples_rep{replicate}.csv", table, delimiter=",", header=header,
               comments="", fmt="%.17g")
    (out / f"samples_rep{replicate}.json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def run_experiment(config: ExperimentConfig, out_dir=None, data: Dataset | None = None) -> dict:
    """Run ``n_replicates`` chains on one dataset and summarize ESS per second."""
    if data is None:
        data = generate_data(config)
    out = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
    names = None
    per_rep, walls, counts = [], [], []
    for r in range(config.n_replicates):
        try:
            samples, times, run = run_chain(config, data, r)
            stats = statistic_set(samples, data.true_nonzero, data.block_assignment)
            values = [ess(s) for s in stats.values()]
        except Exception as err:
            raise RuntimeError(f"replicate {r} failed: {err}") from err
        names = list(stats)
        per_rep.append(values)
        walls.append(run.wall_seconds)
        counts.append(run.counts)
        log.info("%s replicate %d: min ESS %.1f in %.2fs", config.sampler, r, min(values), run.wall_seconds)
        if out is not None:
            meta = {
                "replicate": r,
                "seed": _chain_seed(config.seed, r),
                "sampler": config.sampler,
                "wall_seconds": run.wall_seconds,
                "event_counts": run.counts,
                "statistics": names,
            }
            _write_samples(out, r, times, stats, meta)
    dataset_meta = {"noise_var": data.noise_var, "snr": data.snr, "dim": int(data.design.shape[1]),
                    "n_obs": int(data.design.shape[0])}
    report = assemble_report(config.to_dict(), names, per_rep, walls, counts, dataset_meta)
    if out is not None:
        (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True))
        write_report(report, out / "report.json")
    return report


def write_report(report: dict, path):
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True))


def report_from_samples(sample_dir) -> dict:
    """Recompute the ESS report from ``samples_rep*.csv`` files and their sidecars."""
    d = Path(sample_dir)
    files = sorted(d.glob("samples_rep*.csv"), key=lambda f: int(f.stem.removeprefix("samples_rep")))
    if not files:
        raise FileNotFoundError(f"no samples_rep*.csv files in {d}")
    names = None
    per_rep, walls, counts = [], [], []
    for f in files:
        meta = json.loads(f.with_suffix(".json").read_text())
        table = np.loadtxt(f, delimiter=",", skiprows=1, ndmin=2)
        names = meta["statistics"]
        per_rep.append([ess(table[:, k + 1]) for k in range(len(names))])
        walls.append(meta["wall_seconds"])
        counts.append(meta["event_counts"])
    cfg_path = d / "config.json"
    config = json.loads(cfg_path.read_text()) if cfg_path.exists() else None
    old = d / "report.json"
    dataset_meta = json.loads(old.read_text()).get("dataset") if old.exists() else None
    return assemble_report(config, names, per_rep, walls, counts, dataset_meta)


def strip_timing(report: dict) -> dict:
    return {k: v for k, v in report.items() if k not in TIMING_FIELDS}


def compare(reports, against: str = "original") -> list:
    """Ratio of ``ess_per_second`` to the ``against`` sampler, per (alpha, slab_prob)."""
    groups = {}
    for rep in reports:
        cfg = rep["config"]
        key = (float(cfg["alpha"]), float(cfg["slab_prob"]))
        groups.setdefault(key, {})[cfg["sampler"]] = rep
    rows = []
    for (alpha, slab_prob), by_sampler in sorted(groups.items()):
        if against not in by_sampler:
            raise KeyError(f"no '{against}' report for alpha={alpha}, slab_prob={slab_prob}")
        base = by_sampler[against]["ess_per_second"]
        row = {"alpha": alpha, "slab_prob": slab_prob}
        for s in SAMPLERS:
            if s in by_sampler:
                row[s] = by_sampler[s]["ess_per_second"] / base
        rows.append(row)
    return rows
