"""Rendering functions: pure file-to-file, no RNG.

Each renderer reads a result.csv produced by the slowmix CLI (or any CSV
matching the documented column contract), writes one image, and returns the
annotated numbers so callers and tests can verify them without parsing
pixels.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["FigureSpec", "render_scaling_plot", "render_distribution_compare",
           "render_correlation_decay"]


@dataclass(frozen=True)
class FigureSpec:
    """One figure: input table(s), kind, output path, and annotations."""

    inputs: tuple[str, ...]
    kind: str  # scaling | distribution-compare | correlation-decay
    output: str
    ref_slope: float | None = None
    result_json: str | None = None  # carries fitted values from the run
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    columns: tuple[str, ...] = ()  # sample columns for distribution-compare

    def __post_init__(self):
        kinds = ("scaling", "distribution-compare", "correlation-decay")
        if self.kind not in kinds:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise ValueError("at least one input file is required")


def _read_csv(path: str) -> dict[str, np.ndarray]:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"input csv not found: {path}")
    with p.open(newline="") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames
        rows = list(reader)
    if not names or not rows:
        raise ValueError(f"empty csv: {path}")
    out = {}
    for name in names:
        col = [r[name] for r in rows]
        try:
            out[name] = np.array([float(x) for x in col])
        except (TypeError, ValueError):
            out[name] = np.array(col)  # non-numeric columns ride along
    return out


def _require(table: dict, path: str, needed: tuple[str, ...]) -> None:
    missing = [c for c in needed if c not in table]
    if missing:
        raise ValueError(f"{path}: missing required columns {missing}; "
                         f"found {sorted(table)}")


def _ols_loglog(n: np.ndarray, value: np.ndarray) -> tuple[float, float]:
    """Slope and intercept of log(value) on log(n); positive points only.

    Same least-squares line the primary run reports, so the annotation
    reproduces result.json rather than inventing a new statistic.
    """
    keep = (n > 0) & (value > 0)
    if keep.sum() < 2:
        raise ValueError("need at least 2 positive (n, value) points to fit")
    slope, intercept = np.polyfit(np.log(n[keep]), np.log(value[keep]), 1)
    return float(slope), float(intercept)


def _finish(fig, ax, spec: FigureSpec, default_title: str) -> None:
    ax.set_title(spec.title or default_title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)


def render_scaling_plot(spec: FigureSpec) -> dict:
    """Log-log error-bar plot with an OLS line and optional reference slope."""
    path = spec.inputs[0]
    table = _read_csv(path)
    _require(table, path, ("n", "value", "ci_low", "ci_high"))
    n, value = table["n"], table["value"]
    yerr = np.vstack([np.maximum(value - table["ci_low"], 0.0),
                      np.maximum(table["ci_high"] - value, 0.0)])

    slope, intercept = _ols_loglog(n, value)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.errorbar(n, value, yerr=yerr, fmt="o", ms=4, capsize=2, lw=1,
                label="measured")
    grid = np.geomspace(n[n > 0].min(), n.max(), 64)
    ax.plot(grid, np.exp(intercept) * grid ** slope, "-", lw=1,
            label=f"fit: slope = {slope:.3f}")
    if spec.ref_slope is not None:
        anchor = np.exp(intercept) * grid[0] ** slope
        ax.plot(grid, anchor * (grid / grid[0]) ** spec.ref_slope, "--", lw=1,
                color="gray", label=f"reference slope {spec.ref_slope:g}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(spec.xlabel or "n")
    ax.set_ylabel(spec.ylabel or "value")
    _finish(fig, ax, spec, "scaling")
    return {"slope": slope, "points": int(len(n))}


def render_correlation_decay(spec: FigureSpec) -> dict:
    """|c(n)| against the lag on log-log axes, same fit/reference styling."""
    path = spec.inputs[0]
    table = _read_csv(path)
    _require(table, path, ("n", "value", "ci_low", "ci_high"))
    inner = FigureSpec(spec.inputs, "scaling", spec.output, spec.ref_slope,
                       spec.result_json, spec.title or "correlation decay",
                       spec.xlabel or "lag n", spec.ylabel or "|c(n)|")
    return render_scaling_plot(inner)


def _ecdf(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.sort(samples)
    return x, np.arange(1, len(x) + 1) / len(x)


def _ks_from_samples(a: np.ndarray, b: np.ndarray) -> float:
    grid = np.concatenate([a, b])
    fa = np.searchsorted(np.sort(a), grid, side="right") / len(a)
    fb = np.searchsorted(np.sort(b), grid, side="right") / len(b)
    return float(np.abs(fa - fb).max())


def _ks_from_json(path: str) -> float:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"result json not found: {path}")
    doc = json.loads(p.read_text())
    rows = [r for r in doc.get("rows", []) if "value" in r and "n" in r]
    if not rows:
        raise ValueError(f"{path}: no rows with (n, value) to take KS from")
    return float(max(rows, key=lambda r: r["n"])["value"])


def render_distribution_compare(spec: FigureSpec) -> dict:
    """Overlaid empirical CDFs of two sample columns with a KS annotation.

    The KS value comes from result.json (the largest-n row of a fastslow
    run) when --json is given; otherwise it is the empirical CDF distance
    between the two plotted columns.
    """
    path = spec.inputs[0]
    table = _read_csv(path)
    numeric = [k for k, v in table.items() if v.dtype.kind == "f"]
    cols = spec.columns or tuple(numeric[:2])
    if len(cols) < 2:
        raise ValueError(f"{path}: need two numeric sample columns, "
                         f"found {numeric}")
    _require(table, path, tuple(cols))
    a, b = table[cols[0]], table[cols[1]]
    ks = (_ks_from_json(spec.result_json) if spec.result_json
          else _ks_from_samples(a, b))

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for name, samples in ((cols[0], a), (cols[1], b)):
        x, y = _ecdf(samples)
        ax.step(x, y, where="post", lw=1, label=name)
    ax.annotate(f"KS = {ks:.4f}", xy=(0.05, 0.92), xycoords="axes fraction")
    ax.set_xlabel(spec.xlabel or "x")
    ax.set_ylabel(spec.ylabel or "empirical CDF")
    ax.set_ylim(0, 1.02)
    _finish(fig, ax, spec, "distribution comparison")
    return {"ks": ks, "columns": list(cols)}


RENDERERS = {
    "scaling": render_scaling_plot,
    "distribution-compare": render_distribution_compare,
    "correlation-decay": render_correlation_decay,
}
