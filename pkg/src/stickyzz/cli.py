"""Command-line entry point: ``stickyzz {generate,run,validate,compare,ess}``.

Exit codes: 0 success, 1 usage error or malformed input, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k, "") for k in columns})
    return buf.getvalue()


def _read_json(path):
    p = Path(path)
    if not p.exists():
        raise UsageError(f"file not found: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as err:
        raise UsageError(f"{p}: line {err.lineno}, column {err.colno}: {err.msg}") from None


def _load_config(path, seed=None) -> ex.ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file not found: {p}")
    cfg = ex.ExperimentConfig.from_json(p)
    if seed is not None:
        cfg.seed = seed
    return cfg


def cmd_generate(args):
    if args.config:
        data = _read_json(args.config)
        if isinstance(data, dict):
            data.setdefault("sampler", "original")
        cfg = ex.ExperimentConfig.from_dict(data)
    else:
        if args.alpha is None:
            raise UsageError("generate needs --config or --alpha")
        cfg = ex.ExperimentConfig(alpha=args.alpha, slab_prob=args.slab_prob, sampler="original")
    seed = cfg.seed if args.seed is None else args.seed
    ds = ex.generate_data(cfg, seed)
    meta = {
        "seed": seed,
        "noise_var": ds.noise_var,
        "snr": ds.snr,
        "true_coefficients": ds.true_coefficients.tolist(),
        "block_assignment": ds.block_assignment.tolist(),
    }
    if args.format == "json":
        _emit(json.dumps(ds.to_dict() | {"seed": seed}), args.out)
    else:
        p = ds.design.shape[1]
        table = np.column_stack([ds.response, ds.design])
        buf = io.StringIO()
        np.savetxt(buf, table, delimiter=",", fmt="%.17g",
                   header=",".join(["y"] + [f"g_{j + 1}" for j in range(p)]), comments="")
        _emit(buf.getvalue(), args.out)
        if args.out is not None:
            Path(args.out).with_suffix(".json").write_text(json.dumps(meta, indent=2))
    logging.info("dataset: n=%d p=%d noise_var=%.4g snr=%.3f", *ds.design.shape, ds.noise_var, ds.snr)
    return EXIT_OK


def _stat_rows(report):
    return [{"statistic": k, "ess": v} for k, v in report["per_statistic_ess"].items()]


def _print_report(report, fmt):
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True)
    head = (f"# min_ess={report['min_ess']:.6g} median_ess={report['median_ess']:.6g} "
            f"wall_seconds={report['wall_seconds']:.6g} ess_per_second={report['ess_per_second']:.6g}\n")
    return head + _rows_to_csv(_stat_rows(report), ["statistic", "ess"])


def cmd_run(args):
    cfg = _load_config(args.config, args.seed)
    out = args.out or "."
    report = ex.run_experiment(cfg, out)
    _emit(_print_report(report, args.format), None)
    return EXIT_OK


def cmd_validate(args):
    from . import validation

    numbers = None
    if args.only:
        try:
            numbers = sorted({int(k) for k in args.only.split(",")})
        except ValueError:
            raise UsageError(f"--only expects comma-separated criterion numbers, got {args.only!r}") from None
        bad = [k for k in numbers if k not in validation.CHECKS]
        if bad:
            raise UsageError(f"unknown criterion number(s): {bad}")
    echo = None if args.format == "json" else (lambda s: print(s, flush=True))
    results = validation.run_checks(numbers, echo)
    rows = [{"criterion": r.number, "name": r.name, "passed": r.passed, "detail": r.detail,
             "seconds": round(r.seconds, 3)} for r in results]
    if args.format == "json":
        _emit(json.dumps(rows, indent=2), args.out)
    elif args.out:
        _emit(_rows_to_csv(rows, ["criterion", "name", "passed", "detail", "seconds"]), args.out)
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} checks passed", file=sys.stderr)
    return EXIT_OK if n_pass == len(results) else EXIT_NUMERIC


def _load_report(path):
    p = Path(path)
    if p.is_dir():
        p = p / "report.json"
    rep = _read_json(p)
    if not isinstance(rep, dict):
        raise UsageError(f"{p}: expected a JSON object")
    for key in ("config", "ess_per_second"):
        if key not in rep:
            raise UsageError(f"{p}: missing field '{key}'")
    return rep


def cmd_compare(args):
    reports = [_load_report(p) for p in args.reports]
    try:
        rows = ex.compare(reports, args.against)
    except KeyError as err:
        raise UsageError(str(err.args[0])) from None
    samplers = [s for s in ex.SAMPLERS if any(s in r for r in rows)]
    if args.format == "json":
        _emit(json.dumps(rows, indent=2), args.out)
    else:
        _emit(_rows_to_csv(rows, ["alpha", "slab_prob"] + samplers), args.out)
    return EXIT_OK


def cmd_ess(args):
    d = Path(args.samples)
    if not d.is_dir():
        raise UsageError(f"not a directory: {d}")
    try:
        report = ex.report_from_samples(d)
    except FileNotFoundError as err:
        raise UsageError(str(err)) from None
    _emit(_print_report(report, args.format), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the random seed")
    common.add_argument("--out", default=None, help="output file (or directory for run)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = _Parser(prog="stickyzz", description="Sticky zig-zag samplers for spike-and-slab regression.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", parents=[common], help="simulate a block-correlated regression dataset")
    p.add_argument("--config", help="experiment config JSON (sampler may be omitted)")
    p.add_argument("--alpha", type=float, help="within-block correlation when no config is given")
    p.add_argument("--slab-prob", type=float, default=0.01)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", parents=[common], help="run an experiment from a config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", parents=[common], help="run the acceptance checks")
    p.add_argument("--only", help="comma-separated criterion numbers, e.g. 1,2,3")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compare", parents=[common], help="ESS-per-second ratio table from reports")
    p.add_argument("reports", nargs="+", help="report.json files or run directories")
    p.add_argument("--against", default="original", choices=ex.SAMPLERS)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ess", parents=[common], help="recompute ESS from written sample files")
    p.add_argument("samples", help="directory holding samples_rep*.csv")
    p.set_defaults(func=cmd_ess)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ex.ConfigError) as err:
        print(f"stickyzz {args.command}: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError, FloatingPointError, ArithmeticError) as err:
        print(f"stickyzz {args.command}: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
