"""Concrete interval/square maps: doubling, LSV, and the intermittent Baker map.

All step functions accept scalars or numpy arrays and are pure; a
:class:`MapSystem` is an immutable description of which map to iterate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MapSystem",
    "doubling",
    "lsv",
    "baker",
    "lsv_step",
    "g_inverse",
    "baker_step",
    "doubling_step",
    "step",
    "orbit",
    "sample_invariant",
    "DEFAULT_BURN_IN",
]

# Burn-in defaults: the intermittent maps mix polynomially and need a long
# warm-up before a draw counts as stationary.  Lebesgue is already invariant
# for the doubling map, so a uniform draw needs no burn-in at all; worse,
# float iteration of 2x mod 1 drains one mantissa bit per step (every float
# orbit reaches 0 within ~52 steps), so burning in would actively break it.
# Compiled long-orbit experiments use a 64-bit integer fraction with fresh
# random low bits instead.
DEFAULT_BURN_IN = {"doubling": 0, "lsv": 10_000, "baker": 10_000}

_G_INVERSE_MAX_BISECTIONS = 200


class NonConvergenceError(RuntimeError):
    """Root finding failed to reach the requested tolerance."""

    def __init__(self, residual: float):
        super().__init__(f"g_inverse did not converge; residual {residual:.3e}")
        self.residual = residual


@dataclass(frozen=True)
class MapSystem:
    """A map T on [0,1]^d together with its tail-exponent metadata.

    ``beta = 1/alpha`` is the polynomial tail exponent of the induced return
    time; the doubling map mixes exponentially and carries ``beta = inf``.
    """

    kind: str  # "doubling" | "lsv" | "baker"
    alpha: float = 0.0
    beta: float = field(init=False)
    state_dim: int = field(init=False)

    def __post_init__(self):
        if self.kind not in ("doubling", "lsv", "baker"):
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.kind == "doubling":
            object.__setattr__(self, "beta", np.inf)
            object.__setattr__(self, "state_dim", 1)
        else:
            if not 0.0 < self.alpha < 1.0:
                raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
            object.__setattr__(self, "beta", 1.0 / self.alpha)
            object.__setattr__(self, "state_dim", 1 if self.kind == "lsv" else 2)

    @property
    def default_burn_in(self) -> int:
        return DEFAULT_BURN_IN[self.kind]


def doubling() -> MapSystem:
    return MapSystem("doubling")


def lsv(alpha: float) -> MapSystem:
    return MapSystem("lsv", alpha)


def baker(alpha: float) -> MapSystem:
    return MapSystem("baker", alpha)


def _check_unit(x, name="x"):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError(f"{name} must lie in [0,1]")
    return x


def _clamp01(x):
    # Rounding can push results a few ulps outside [0,1]; clamp back.
    return np.clip(x, 0.0, 1.0)


def lsv_step(x, alpha: float):
    """One step of the LSV map: x(1 + 2^a x^a) on [0,1/2], 2x-1 above."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    xa = _check_unit(x)
    lo = xa * (1.0 + (2.0 * xa) ** alpha)
    hi = 2.0 * xa - 1.0
    out = _clamp01(np.where(xa <= 0.5, lo, hi))
    return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out


def doubling_step(x):
    """One step of the doubling map 2x mod 1.

    Exact on floats, but note that each step discards the leading mantissa
    bit: any float orbit lands on 0 within about 52 steps.  Use the compiled
    ensemble kernels (integer-fraction state with random bit refresh) for
    statistics over long doubling orbits.
    """
    xa = _check_unit(x)
    out = np.where(xa == 1.0, 0.0, (2.0 * xa) % 1.0)
    return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out


def _g(y, alpha):
    return y * (1.0 + (2.0 * y) ** alpha)


def g_inverse(u, alpha: float, tol: float = 1e-13):
    """Invert the left LSV branch: the y in [0,1/2] with g(y) = u.

    Bisection (g is strictly increasing on [0,1/2]) followed by two Newton
    polish steps.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    ua = _check_unit(u, "u")
    scalar = np.isscalar(u) or np.ndim(u) == 0
    ua = np.atleast_1d(ua)
    lo = np.zeros_like(ua)
    hi = np.full_like(ua, 0.5)
    for _ in range(_G_INVERSE_MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        too_small = _g(mid, alpha) < ua
        lo = np.where(too_small, mid, lo)
        hi = np.where(too_small, hi, mid)
        if np.max(hi - lo) <= tol:
            break
    y = 0.5 * (lo + hi)
    for _ in range(2):
        with np.errstate(divide="ignore", invalid="ignore"):
            deriv = 1.0 + (1.0 + alpha) * (2.0 * y) ** alpha
            y_new = y - (_g(y, alpha) - ua) / deriv
        y = np.where(np.isfinite(y_new), np.clip(y_new, 0.0, 0.5), y)
    resid = float(np.max(np.abs(_g(y, alpha) - ua)))
    if resid > 10.0 * tol:
        raise NonConvergenceError(resid)
    return float(y[0]) if scalar else y


def baker_step(p, alpha: float, tol: float = 1e-13):
    """One step of the intermittent Baker map on the unit square.

    (x1, x2) -> (Tbar x1, g^{-1}(x2)) on the left half, (Tbar x1, (x2+1)/2)
    on the right half.
    """
    pa = np.asarray(p, dtype=float)
    if pa.shape[-1] != 2:
        raise ValueError("baker_step expects 2-d points")
    x1 = _check_unit(pa[..., 0], "x1")
    x2 = _check_unit(pa[..., 1], "x2")
    left = x1 <= 0.5
    out1 = lsv_step(x1, alpha)
    out2 = np.where(left, g_inverse(x2, alpha, tol), _clamp01((x2 + 1.0) / 2.0))
    return np.stack(np.broadcast_arrays(out1, out2), axis=-1)


def step(system: MapSystem, p):
    """Apply one step of ``system`` to point(s) ``p``."""
    if system.kind == "doubling":
        return doubling_step(p)
    if system.kind == "lsv":
        return lsv_step(p, system.alpha)
    return baker_step(p, system.alpha)


def orbit(system: MapSystem, x0, n: int):
    """The orbit [x0, Tx0, ..., T^n x0] as an array of n+1 points."""
    if n < 0:
        raise ValueError("n must be >= 0")
    x = np.asarray(x0, dtype=float)
    out = np.empty((n + 1,) + x.shape, dtype=float)
    out[0] = x
    for i in range(n):
        x = step(system, x)
        out[i + 1] = x
    return out


def sample_invariant(system: MapSystem, seed, burn_in: int | None = None):
    """An approximately stationary point: uniform draw, then burn-in steps.

    ``seed`` may be an int or a numpy Generator. Distinct seeds give
    independent draws.
    """
    if burn_in is None:
        burn_in = system.default_burn_in
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if system.state_dim == 1:
        x = float(rng.uniform())
    else:
        x = rng.uniform(size=2)
    for _ in range(burn_in):
        x = step(system, x)
    return x
