"""Moment estimation, scaling fits, correlation estimates, and sanity checks.

Everything randomized takes an explicit seed.  Estimators reduce with numpy's
pairwise summation, so merged results do not depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .maps import MapSystem
from .observables import HolderObservable

__all__ = [
    "MomentEstimate",
    "ScalingFit",
    "lp_norm_estimate",
    "lp_norm_from_samples",
    "scaling_fit",
    "autocorrelation",
    "ks_distance",
    "independent_sum_moment_check",
    "bootstrap_ci",
]

_BOOTSTRAP_RESAMPLES = 1000


@dataclass(frozen=True)
class MomentEstimate:
    """Monte Carlo estimate of an L^p norm with a bootstrap 95% CI."""

    p: float
    n: int
    value: float
    ci_low: float
    ci_high: float
    trials: int
    seed: int


@dataclass(frozen=True)
class ScalingFit:
    """OLS fit of log(value) against log(n)."""

    exponent: float
    log_prefactor: float
    r_squared: float
    points: tuple = field(default_factory=tuple)

    @property
    def prefactor(self) -> float:
        return float(np.exp(self.log_prefactor))


def bootstrap_ci(samples: np.ndarray, statistic, rng,
                 resamples: int = _BOOTSTRAP_RESAMPLES,
                 level: float = 95.0) -> tuple[float, float]:
    """Percentile bootstrap CI of ``statistic`` over i.i.d. ``samples``."""
    idx = rng.integers(0, len(samples), size=(resamples, len(samples)))
    stats = np.array([statistic(samples[row]) for row in idx])
    lo, hi = np.percentile(stats, [(100 - level) / 2, 100 - (100 - level) / 2])
    return float(lo), float(hi)


def lp_norm_from_samples(samples: np.ndarray, p: float, seed: int = 0,
                         n: int = 0) -> MomentEstimate:
    """((1/N) sum |x_i|^p)^{1/p} with a percentile-bootstrap CI."""
    if p < 1:
        raise ValueError("p must be >= 1")
    samples = np.asarray(samples, dtype=float)
    rng = np.random.default_rng(seed)
    powers = np.abs(samples) ** p

    def stat(pw):
        return float(np.mean(pw)) ** (1.0 / p)

    value = stat(powers)
    if len(samples) > 200_000:
        # Bootstrap over batch means; same CI at a fraction of the cost.
        nb = 1000
        powers_b = powers[: (len(powers) // nb) * nb].reshape(nb, -1).mean(axis=1)
        lo, hi = bootstrap_ci(powers_b, lambda b: float(np.mean(b)) ** (1.0 / p), rng)
    else:
        lo, hi = bootstrap_ci(powers, lambda b: float(np.mean(b)) ** (1.0 / p), rng)
    lo, hi = min(lo, value), max(hi, value)
    return MomentEstimate(p, n, value, lo, hi, len(samples), seed)


def lp_norm_estimate(sampler, p: float, trials: int, seed: int = 0) -> MomentEstimate:
    """L^p norm of a scalar sampler: ``sampler(rng, size)`` -> array."""
    if trials < 100:
        raise ValueError("trials must be >= 100")
    rng = np.random.default_rng(seed)
    samples = np.asarray(sampler(rng, trials), dtype=float)
    return lp_norm_from_samples(samples, p, seed=seed)


def scaling_fit(points) -> ScalingFit:
    """OLS of log(value) on log(n) over (n, value) pairs, all values > 0."""
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    ns = np.array([p[0] for p in pts])
    vs = np.array([p[1] for p in pts])
    if np.any(vs <= 0) or np.any(ns <= 0):
        raise ValueError("scaling_fit needs positive n and values")
    x = np.log(ns)
    y = np.log(vs)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return ScalingFit(float(slope), float(intercept), min(r2, 1.0), tuple(pts))


def ks_distance(sample_a, sample_b) -> float:
    """Sup distance between the empirical CDFs of two samples."""
    a = np.sort(np.asarray(sample_a, dtype=float))
    b = np.sort(np.asarray(sample_b, dtype=float))
    if len(a) == 0 or len(b) == 0:
        raise ValueError("samples must be nonempty")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / len(a)
    cdf_b = np.searchsorted(b, pooled, side="right") / len(b)
    return float(np.max(np.abs(cdf_a - cdf_b)))


def autocorrelation(system: MapSystem, v: HolderObservable, lags,
                    trials: int = 64, orbit_len: int = 1 << 20,
                    burn_in: int | None = None, seed: int = 0):
    """c(lag) = E[v(x) v(T^lag x)] by time-and-ensemble averaging.

    Runs ``trials`` independent stationary orbits of ``orbit_len`` steps and
    averages lag products along each; the CI comes from the spread across
    orbits.  Returns a list of (lag, estimate, (ci_low, ci_high)).
    """
    from ._engine import orbit_lag_sums

    lags = np.asarray(sorted(int(l) for l in lags), dtype=np.int64)
    if burn_in is None:
        burn_in = system.default_burn_in
    per_orbit = orbit_lag_sums(system, v, lags, trials, orbit_len, burn_in, seed)
    est = per_orbit.mean(axis=0)
    se = per_orbit.std(axis=0, ddof=1) / np.sqrt(trials) if trials > 1 else \
        np.zeros(len(lags))
    return [(int(l), float(e), (float(e - 1.96 * s), float(e + 1.96 * s)))
            for l, e, s in zip(lags, est, se)]


def independent_sum_moment_check(sampler, k_list=(2, 4, 8, 16, 32, 64),
                                 p: float = 4.0, trials: int = 20_000,
                                 seed: int = 0) -> dict:
    """Empirical Rosenthal / von Bahr-Esseen check on i.i.d. mean-zero sums.

    For each k, compares E|sum X_i|^p against the independent-sum bound
    (sum E X_i^2)^{p/2} + sum E|X_i|^p and reports the fitted constant
    C = lhs/rhs, which must stay bounded in k.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for k in k_list:
        x = np.asarray(sampler(rng, (trials, k)), dtype=float)
        lhs = float(np.mean(np.abs(x.sum(axis=1)) ** p))
        ex2 = np.mean(x**2, axis=0)
        exp_p = np.mean(np.abs(x) ** p, axis=0)
        if p > 2:
            rhs = float(ex2.sum() ** (p / 2) + exp_p.sum())
        else:
            rhs = float(exp_p.sum())
        rows.append({"k": int(k), "lhs": lhs, "rhs": rhs,
                     "ratio": lhs / rhs if rhs > 0 else 0.0})
    ratios = [r["ratio"] for r in rows]
    return {"p": p, "rows": rows, "max_ratio": max(ratios),
            "bounded": max(ratios) < 16.0}
