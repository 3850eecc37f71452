"""Batch experiment runner.

Every subcommand maps onto one entry of the experiments registry, runs it
with a mandatory seed, and writes three files into --out: result.csv (rows,
17 significant digits), result.json (config echo, fits, checks, version,
wall clock), summary.txt.  Exit codes: 0 ok, 1 runtime failure, 2 when
--check is set and a threshold check fails.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .experiments import REGISTRY, ExperimentResult, run_experiment

_FLOAT_FMT = "{:.17g}"

# Which registry kwargs each subcommand accepts, in flag order.
_EXTRA_FLAGS = {
    "moments": ("map", "alpha", "gamma", "n_list", "trials", "seed"),
    "iterated-moments": ("map", "alpha", "gamma", "n_list", "trials", "seed"),
    "correlation": ("map", "alpha", "n_list", "trials", "orbit_len", "seed"),
    "tower-psi": ("beta", "theta", "n_list", "trials", "seed"),
    "weakdep": ("map", "alpha", "n_list", "k", "trials", "seed"),
    "fcb": ("map", "alpha", "n_list", "trials", "seed"),
    "fastslow": ("map", "alpha", "n_list", "trials", "seed"),
    "selftest": ("seed",),
}


class ConfigError(ValueError):
    pass


def _parse_n_list(spec_list: str | None, spec_pow: str | None):
    if spec_list and spec_pow:
        raise ConfigError("give either --n-list or --n-pow, not both")
    if spec_list:
        try:
            vals = [int(tok) for tok in spec_list.split(",") if tok]
        except ValueError as exc:
            raise ConfigError(f"bad --n-list entry: {exc}") from None
        if not vals or any(v < 1 for v in vals):
            raise ConfigError("--n-list values must be positive integers")
        return vals
    if spec_pow:
        try:
            lo, hi = (int(tok) for tok in spec_pow.split(":"))
        except ValueError:
            raise ConfigError("--n-pow must look like lo:hi") from None
        if not 0 <= lo <= hi <= 62:
            raise ConfigError("--n-pow exponents must satisfy 0 <= lo <= hi <= 62")
        return [1 << p for p in range(lo, hi + 1)]
    return None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slowmix",
        description="Monte Carlo experiments for slowly mixing maps")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in REGISTRY:
        p = sub.add_parser(name, help=REGISTRY[name].__doc__)
        p.add_argument("--map", choices=("doubling", "lsv", "baker"),
                       default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--theta", type=float, default=None)
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--n-list", default=None,
                       help="comma-separated window/lag sizes")
        p.add_argument("--n-pow", default=None,
                       help="lo:hi meaning 2^lo..2^hi")
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--orbit-len", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1,
                       help="accepted for interface stability; results do "
                            "not depend on it")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--check", action="store_true",
                       help="exit 2 if any threshold check fails")
    return parser


def parse_config(argv) -> tuple[str, dict, dict]:
    """Validate flags into (experiment name, registry kwargs, run options)."""
    args = build_parser().parse_args(argv)
    name = args.experiment
    if args.seed is None:
        raise ConfigError("missing required option: seed")
    if args.alpha is not None and not 0.0 < args.alpha < 1.0:
        raise ConfigError("alpha must be in (0, 1)")
    if args.beta is not None and args.beta <= 1.0:
        raise ConfigError("beta must be > 1")
    if args.theta is not None and not 0.0 < args.theta < 1.0:
        raise ConfigError("theta must be in (0, 1)")
    if args.trials is not None and args.trials < 1:
        raise ConfigError("trials must be >= 1")
    if args.k is not None and args.k < 1:
        raise ConfigError("k must be >= 1")
    n_list = _parse_n_list(args.n_list, args.n_pow)

    allowed = _EXTRA_FLAGS[name]
    supplied = {
        "map": args.map, "alpha": args.alpha, "beta": args.beta,
        "theta": args.theta, "gamma": args.gamma, "n_list": n_list,
        "k": args.k, "trials": args.trials, "orbit_len": args.orbit_len,
        "seed": args.seed,
    }
    for key, val in supplied.items():
        if val is not None and key not in allowed:
            raise ConfigError(f"option {key!r} not valid for {name}")
    kwargs = {k: v for k, v in supplied.items()
              if k in allowed and v is not None}
    return name, kwargs, {"out": Path(args.out), "check": args.check,
                          "threads": args.threads}


def _fmt(value) -> str:
    if isinstance(value, float):
        return _FLOAT_FMT.format(value)
    return str(value)


def write_outputs(result: ExperimentResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [",".join(result.columns)]
    for row in result.rows:
        lines.append(",".join(_fmt(row[c]) for c in result.columns))
    (out_dir / "result.csv").write_text("\n".join(lines) + "\n",
                                        encoding="utf-8")

    payload = {
        "experiment": result.name,
        "version": __version__,
        "config": result.config,
        "columns": result.columns,
        "rows": result.rows,
        "fits": result.fits,
        "checks": result.checks,
        "wall_clock_s": result.wall_clock,
        "passed": result.passed,
    }
    (out_dir / "result.json").write_text(
        json.dumps(payload, indent=2, default=str) + "\n", encoding="utf-8")

    summary = [f"experiment: {result.name}",
               f"version: {__version__}",
               f"rows: {len(result.rows)}",
               f"wall clock: {result.wall_clock:.2f} s"]
    for key, val in result.fits.items():
        summary.append(f"{key}: {_fmt(val)}")
    for c in result.checks:
        summary.append(f"[{'PASS' if c['passed'] else 'FAIL'}] "
                       f"{c['name']}: {c['detail']}")
    (out_dir / "summary.txt").write_text("\n".join(summary) + "\n",
                                         encoding="utf-8")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        name, kwargs, opts = parse_config(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        t0 = time.perf_counter()
        result = run_experiment(name, kwargs)
        result.wall_clock = time.perf_counter() - t0
        write_outputs(result, opts["out"])
    except Exception as exc:  # noqa: BLE001 - single reporting point
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1
    for c in result.checks:
        print(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['name']}: {c['detail']}")
    if opts["check"] and not result.passed:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
