"""Observables on the state space, with Monte Carlo centering.

An observable is a bounded real function of a point; centering subtracts a
Monte Carlo estimate of its mean under the invariant measure so that the
scaling experiments see a mean-zero signal.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .maps import MapSystem, sample_invariant, step

__all__ = ["HolderObservable", "coordinate", "cosine", "constant", "center",
           "holder_seminorm_estimate"]

# Observable formula codes shared with the compiled kernels.
COORD = 0
COSINE = 1
AFFINE = 2
TABULATED = 3


@dataclass(frozen=True)
class HolderObservable:
    """v(p) - mean_offset for a closed-form v with Holder exponent eta."""

    formula: int
    param: float = 0.0  # coordinate index / frequency / slope
    eta: float = 1.0
    mean_offset: float = 0.0
    centered: bool = False
    center_se: float = 0.0
    table: tuple | None = None  # (grid, values) for TABULATED

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must be in (0,1]")

    def raw(self, p):
        """v(p) without the centering offset.

        1-d map points are scalars or arrays of scalars; Baker points carry a
        trailing axis of length 2, of which the requested coordinate is used.
        """
        p = np.asarray(p, dtype=float)
        if p.ndim and p.shape[-1] == 2:
            x = p[..., int(self.param)] if self.formula == COORD else p[..., 0]
        else:
            x = p
        if self.formula == COORD:
            return x
        if self.formula == COSINE:
            return np.cos(2.0 * np.pi * self.param * x)
        if self.formula == AFFINE:
            return self.param * x
        grid, vals = self.table
        return np.interp(x, grid, vals)

    def __call__(self, p):
        out = self.raw(p) - self.mean_offset
        return float(out) if np.ndim(out) == 0 else out


def coordinate(i: int = 0, eta: float = 1.0) -> HolderObservable:
    return HolderObservable(COORD, float(i), eta)


def cosine(freq: float = 1.0, eta: float = 1.0) -> HolderObservable:
    return HolderObservable(COSINE, float(freq), eta)


def constant(c: float) -> HolderObservable:
    # Affine with zero slope, offset baked in as -c.
    return HolderObservable(AFFINE, 0.0, 1.0, mean_offset=-c)


def center(obs: HolderObservable, system: MapSystem, samples: int = 100_000,
           burn_in: int | None = None, seed=0) -> HolderObservable:
    """Return a copy of ``obs`` whose offset is the MC estimate of its mean.

    The mean is taken over ``samples`` points of a single post-burn-in orbit
    together with a short ensemble refresh every 4096 steps, which keeps the
    cost linear while decorrelating slowly mixing maps.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    if burn_in is None:
        burn_in = system.default_burn_in
    if system.kind == "doubling":
        # Lebesgue is invariant, and float doubling orbits degenerate (each
        # step drops a mantissa bit), so average over i.i.d. uniforms instead.
        vals = np.asarray(obs.raw(rng.uniform(size=samples)))
        se = float(vals.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
        return replace(obs, mean_offset=obs.mean_offset + float(vals.mean()),
                       centered=True, center_se=se)
    total = 0.0
    totsq = 0.0
    count = 0
    n_chains = max(1, min(32, samples // 4096))
    per_chain = (samples + n_chains - 1) // n_chains
    for _ in range(n_chains):
        x = sample_invariant(system, rng, burn_in)
        for _ in range(min(per_chain, samples - count)):
            val = float(np.asarray(obs.raw(x)))
            total += val
            totsq += val * val
            count += 1
            x = step(system, x)
        if count >= samples:
            break
    mean = total / count
    var = max(totsq / count - mean * mean, 0.0)
    se = np.sqrt(var / count)
    return replace(obs, mean_offset=obs.mean_offset + mean, centered=True,
                   center_se=float(se))


def holder_seminorm_estimate(obs: HolderObservable, pair_samples: int,
                             eta: float, seed=0, dim: int = 1) -> float:
    """Lower bound for the eta-Holder seminorm: max over sampled point pairs
    of |v(x)-v(y)| / d(x,y)^eta."""
    if pair_samples < 1:
        raise ValueError("pair_samples must be >= 1")
    rng = np.random.default_rng(seed)
    best = 0.0
    chunk = min(pair_samples, 1 << 16)
    done = 0
    while done < pair_samples:
        m = min(chunk, pair_samples - done)
        if dim == 1:
            xs = rng.uniform(size=m)
            ys = rng.uniform(size=m)
            d = np.abs(xs - ys)
        else:
            xs = rng.uniform(size=(m, dim))
            ys = rng.uniform(size=(m, dim))
            d = np.sum(np.abs(xs - ys), axis=-1)
        ok = d > 0
        if np.any(ok):
            xs, ys, d = xs[ok], ys[ok], d[ok]
            if dim == 1 and len(xs) == 2:
                # A length-2 batch of scalars would be misread as one Baker
                # point; evaluate elementwise instead.
                diffs = np.array([abs(float(obs.raw(a)) - float(obs.raw(b)))
                                  for a, b in zip(xs, ys)])
            else:
                diffs = np.abs(obs.raw(xs) - obs.raw(ys))
            best = max(best, float(np.max(diffs / d ** eta)))
        done += m
    return best
