"""Weak-dependence and functional-correlation experiments.

Block Birkhoff sums over well-separated windows of one orbit are compared,
through bounded Lipschitz functionals, with independent copies carrying the
same marginal laws.  The information shared across a gap decays at the map's
correlation rate, so the functional difference must die out as gaps widen.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._engine import block_rvs_ensemble, fcb_block_estimates
from .maps import MapSystem
from .observables import HolderObservable
from .sums import BlockScheme, block_partition

__all__ = [
    "Functional",
    "product_tanh",
    "power_of_sum",
    "block_rvs",
    "independent_copies",
    "weakdep_gap_experiment",
    "fcb_functional_experiment",
]


@dataclass(frozen=True)
class Functional:
    """Bounded Lipschitz functional of a block-variable vector.

    ``kind``: "product_tanh" (prod_i tanh(x_i / scale)) or "power_of_sum"
    (|sum x_i|^p clipped to the cube [-R, R]^k).  Known sup / Lipschitz
    bounds ride along for reporting.
    """

    kind: str
    arity: int
    power: float = 1.0
    scale: float = 1.0
    radius: float = 1.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "product_tanh":
            return np.prod(np.tanh(x / self.scale), axis=-1)
        if self.kind == "power_of_sum":
            clipped = np.clip(x, -self.radius, self.radius)
            return np.abs(clipped.sum(axis=-1)) ** self.power
        raise ValueError(f"unknown functional kind {self.kind!r}")

    @property
    def sup_bound(self) -> float:
        if self.kind == "product_tanh":
            return 1.0
        return (self.arity * self.radius) ** self.power

    @property
    def lipschitz_bound(self) -> float:
        if self.kind == "product_tanh":
            return 1.0 / self.scale
        kr = self.arity * self.radius
        return self.power * kr ** (self.power - 1.0)


def product_tanh(arity: int, scale: float = 1.0) -> Functional:
    return Functional("product_tanh", arity, scale=scale)


def power_of_sum(arity: int, power: float, radius: float) -> Functional:
    return Functional("power_of_sum", arity, power=power, radius=radius)


def block_rvs(system: MapSystem, v: HolderObservable, scheme: BlockScheme,
              trials: int, seed: int = 0, burn_in: int | None = None) -> np.ndarray:
    """X_i = S_v(a_{2i}, a_{2i+1}) over the odd blocks, one row per orbit."""
    return block_rvs_ensemble(system, v, scheme, trials, seed, burn_in,
                              with_independent=False)


def independent_copies(system: MapSystem, v: HolderObservable,
                       scheme: BlockScheme, trials: int, seed: int = 0,
                       burn_in: int | None = None) -> np.ndarray:
    """X_hat rows: each coordinate from its own stationary orbit of the
    block's length, so coordinates are independent with the X_i marginals."""
    _, xhat = block_rvs_ensemble(system, v, scheme, trials, seed, burn_in,
                                 with_independent=True)
    return xhat


def weakdep_gap_experiment(system: MapSystem, v: HolderObservable,
                           functional: Functional, n_list, k: int,
                           trials: int, seed: int = 0,
                           burn_in: int | None = None) -> list[dict]:
    """delta(n) = |E F(X) - E F(X_hat)| over growing horizons at fixed k.

    Returns one row per n with the gap size n/(2k), delta, its standard
    error, and a 95% CI.
    """
    rows = []
    for idx, n in enumerate(sorted(int(x) for x in n_list)):
        scheme = block_partition(n, k)
        x, xhat = block_rvs_ensemble(system, v, scheme, trials,
                                     seed + 1017 * idx, burn_in,
                                     with_independent=True)
        fx = functional(x)
        fxh = functional(xhat)
        diff = fx - fxh
        mean = float(diff.mean())
        se = float(diff.std(ddof=1) / np.sqrt(trials))
        rows.append({
            "n": n,
            "gap": n / (2 * k),
            "delta": abs(mean),
            "se": se,
            "ci_low": abs(mean) - 1.96 * se,
            "ci_high": abs(mean) + 1.96 * se,
        })
    return rows


def fcb_functional_experiment(system: MapSystem, factor_obs, times,
                              split: int, trials: int, seed: int = 0,
                              burn_in: int | None = None,
                              n_blocks: int = 32) -> dict:
    """Functional-correlation delta for a product functional.

    ``factor_obs`` are the per-slot observables of
    G(x_0,...,x_{q-1}) = prod_i v_i(x_i), evaluated at orbit times ``times``;
    slots < ``split`` read from an independent second orbit in the
    product-measure term.  ``trials`` counts the stationary window starts
    (consecutive along the orbit); the CI comes from 32 contiguous blocks.
    """
    q = len(factor_obs)
    if q < 2 or not 0 <= split < q:
        raise ValueError("need q >= 2 and 0 <= split < q")
    single, splitv, counts = fcb_block_estimates(
        system, factor_obs, times, split, trials, seed, burn_in, n_blocks)
    per_block = (single - splitv) / np.maximum(counts, 1)
    mean = float((single.sum() - splitv.sum()) / counts.sum())
    se = float(per_block.std(ddof=1) / np.sqrt(n_blocks))
    return {
        "delta": abs(mean),
        "se": se,
        "ci_low": abs(mean) - 1.96 * se,
        "ci_high": abs(mean) + 1.96 * se,
        "trials": int(counts.sum()),
    }
