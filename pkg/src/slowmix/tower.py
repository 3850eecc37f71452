"""Abstract tower simulator over a full-shift base with power-law returns.

Return times follow an exact power tail P(phi >= m) = m^{-beta} (optionally a
user pmf), the base refreshes i.i.d. at every return, and psi_n counts returns
by time n.  Besides the step-by-step simulator there are three estimators for
E[theta^psi_n]: a plain Monte Carlo average, a conditional Monte Carlo /
importance-sampling average (same trial count, drastically lower variance in
the large-n regime where theta^psi_n is a rare-event functional), and an exact
renewal recursion used as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import zeta as hurwitz_zeta

__all__ = [
    "TowerSpec",
    "TowerState",
    "sample_return_time",
    "sample_return_times",
    "tower_step",
    "stationary_start",
    "separation_time",
    "theta_psi_moment",
    "theta_psi_exact",
    "SEP_INF",
]

SEP_INF = -1  # marker: histories agree over the whole recorded window

_ABS_TRUNC = 1e-12  # relative (to the zero-return term) truncation of IS tails


@dataclass(frozen=True)
class TowerSpec:
    """Return-time law and separation metric base for the tower."""

    beta: float
    theta: float = 0.5
    phi_law: str = "pareto"  # or "explicit"
    pmf: tuple | None = None  # explicit pmf over 1..len(pmf), used when phi_law == "explicit"
    max_phi: int = 10**9
    n_symbols: int = 16

    def __post_init__(self):
        if self.phi_law == "pareto":
            if not self.beta > 1.0:
                raise ValueError("beta must exceed 1 for an integrable return time")
        elif self.phi_law == "explicit":
            p = np.asarray(self.pmf, dtype=float)
            if p.ndim != 1 or len(p) == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                raise ValueError("pmf must be a probability vector over 1..len(pmf)")
        else:
            raise ValueError(f"unknown phi_law {self.phi_law!r}")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must be in (0,1)")

    def tail(self, m):
        """P(phi >= m) for integer m >= 1 (array friendly)."""
        m = np.asarray(m, dtype=float)
        if self.phi_law == "explicit":
            p = np.asarray(self.pmf)
            cum = np.concatenate([[0.0], np.cumsum(p)])
            idx = np.clip(m.astype(np.int64) - 1, 0, len(p))
            out = 1.0 - cum[idx]
            return np.where(m <= 1, 1.0, out)
        out = np.where(m <= self.max_phi, m ** (-self.beta), 0.0)
        return np.where(m <= 1, 1.0, out)

    def mean_phi(self) -> float:
        """E[phi] = sum_{m>=1} P(phi >= m)."""
        if self.phi_law == "explicit":
            p = np.asarray(self.pmf)
            return float(np.sum(np.arange(1, len(p) + 1) * p))
        # zeta(beta) minus the capped-away tail
        return float(hurwitz_zeta(self.beta, 1) - hurwitz_zeta(self.beta, self.max_phi + 1))


@dataclass
class TowerState:
    """Point on the tower: height in the current excursion plus counters."""

    height: int
    current_phi: int
    return_count: int = 0
    symbol_history: list | None = None
    history_cap: int = 64

    def __post_init__(self):
        if not 0 <= self.height < self.current_phi:
            raise ValueError("need 0 <= height < current_phi")
        if self.symbol_history is None:
            self.symbol_history = []


def sample_return_time(spec: TowerSpec, rng) -> int:
    return int(sample_return_times(spec, rng, 1)[0])


def sample_return_times(spec: TowerSpec, rng, size: int) -> np.ndarray:
    """Draws of phi with P(phi >= m) = m^{-beta} exactly (integers up to the cap)."""
    if spec.phi_law == "explicit":
        p = np.asarray(spec.pmf)
        return rng.choice(np.arange(1, len(p) + 1), size=size, p=p)
    u = rng.random(size)
    with np.errstate(divide="ignore", over="ignore"):
        raw = np.floor(u ** (-1.0 / spec.beta))
    raw = np.where(np.isfinite(raw), raw, spec.max_phi)
    return np.minimum(raw, spec.max_phi).astype(np.int64)


def _draw_symbol(spec: TowerSpec, rng) -> int:
    return int(rng.integers(spec.n_symbols))


def tower_step(state: TowerState, spec: TowerSpec, rng) -> TowerState:
    """One tower step: climb within the excursion, or return to the base.

    A return refreshes the base symbol and the excursion length i.i.d.
    (Bernoulli full-shift base).
    """
    if state.height < state.current_phi - 1:
        return replace(state, height=state.height + 1,
                       symbol_history=state.symbol_history)
    hist = state.symbol_history
    hist = (hist + [_draw_symbol(spec, rng)])[-state.history_cap:]
    return TowerState(0, sample_return_time(spec, rng),
                      state.return_count + 1, hist, state.history_cap)


def _residual_cdf_weights(spec: TowerSpec):
    """P(phi >= m)/E[phi] summed lazily via the Hurwitz zeta."""
    if spec.phi_law != "pareto":
        raise NotImplementedError
    return spec.mean_phi()


def _sample_height_stationary(spec: TowerSpec, rng, size: int) -> np.ndarray:
    """Heights with P(height = j) = P(phi > j)/E[phi] (pareto law)."""
    beta = spec.beta
    e_phi = spec.mean_phi()
    z1 = hurwitz_zeta(beta, 1)
    u = rng.random(size) * e_phi
    # Find the smallest j >= 0 with sum_{i<=j} (i+1)^{-beta} > u by bisection
    # on the Hurwitz zeta partial sums.
    lo = np.zeros(size, dtype=np.int64)
    hi = np.full(size, int(min(spec.max_phi, 1 << 62)), dtype=np.int64)
    # Shrink hi to a sane bound first: partial_sum(j) = z1 - zeta(beta, j+2)
    bound = 2
    while bound < spec.max_phi and (z1 - hurwitz_zeta(beta, bound + 2)) < e_phi * (1 - 1e-15):
        bound *= 2
        if bound > 1 << 40:
            break
    hi[:] = min(bound, spec.max_phi)
    for _ in range(64):
        mid = (lo + hi) // 2
        ps = z1 - hurwitz_zeta(beta, mid.astype(float) + 2.0)
        too_low = ps <= u
        lo = np.where(too_low, mid + 1, lo)
        hi = np.where(too_low, hi, mid)
        if np.all(lo >= hi):
            break
    return lo


def stationary_start(spec: TowerSpec, rng) -> TowerState:
    """Stationary draw: size-biased excursion, uniform height within it."""
    if spec.phi_law == "explicit":
        p = np.asarray(spec.pmf)
        m = np.arange(1, len(p) + 1)
        biased = m * p / np.sum(m * p)
        phi = int(rng.choice(m, p=biased))
        height = int(rng.integers(phi))
        return TowerState(height, phi,
                          symbol_history=[_draw_symbol(spec, rng)])
    height = int(_sample_height_stationary(spec, rng, 1)[0])
    # Excursion length conditioned on phi > height, by exact tail inversion.
    tail_h = float(spec.tail(np.array(height + 1)))
    u = rng.random() * tail_h
    phi = int(min(np.floor(max(u, 1e-300) ** (-1.0 / spec.beta)), spec.max_phi))
    return TowerState(height, phi, symbol_history=[_draw_symbol(spec, rng)])


def separation_time(history_a, history_b) -> int:
    """Index of first disagreement; SEP_INF if equal over the recorded window."""
    for i, (a, b) in enumerate(zip(history_a, history_b)):
        if a != b:
            return i
    if len(history_a) != len(history_b):
        return min(len(history_a), len(history_b))
    return SEP_INF


# ---------------------------------------------------------------------------
# E[theta^{psi_n}] estimators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThetaPsiEstimate:
    n: int
    theta: float
    value: float
    ci_low: float
    ci_high: float
    trials: int
    seed: int
    method: str


def _bootstrap_ci(values_mean: float, batch_means: np.ndarray, rng,
                  resamples: int = 1000) -> tuple[float, float]:
    """Percentile bootstrap over batch means (cheap stand-in for resampling
    every trial)."""
    b = len(batch_means)
    idx = rng.integers(0, b, size=(resamples, b))
    means = batch_means[idx].mean(axis=1)
    lo, hi = np.percentile(means, [2.5, 97.5])
    shift = values_mean - batch_means.mean()
    return float(lo + shift), float(hi + shift)


def _theta_psi_plain(spec: TowerSpec, theta: float, n: int, trials: int,
                     rng) -> np.ndarray:
    """One theta^{psi_n} sample per trial, simulated as a renewal process.

    Counting stops once theta^psi drops below 1e-18: the remaining
    contribution is below that both per trial and in expectation.
    """
    psi_cap = int(np.ceil(np.log(1e-18) / np.log(theta)))
    t = np.zeros(trials, dtype=np.int64)
    psi = np.zeros(trials, dtype=np.int64)
    # Stationary first passage: residual time to the first return is
    # (phi - height) of the stationary start.
    heights = _sample_height_stationary_generic(spec, rng, trials)
    phis = _conditional_phi_given_gt(spec, heights, rng)
    t = phis - heights
    alive = t <= n
    psi[alive] = 1
    while True:
        active = alive & (psi < psi_cap)
        m = int(active.sum())
        if m == 0:
            break
        jump = sample_return_times(spec, rng, m)
        t_new = t[active] + jump
        t[active] = t_new
        still = t_new <= n
        idx = np.flatnonzero(active)
        psi[idx[still]] += 1
        alive[idx[~still]] = False
    vals = np.where(psi >= psi_cap, 0.0, theta ** psi.astype(float))
    return vals


def _sample_height_stationary_generic(spec, rng, size):
    if spec.phi_law == "explicit":
        p = np.asarray(spec.pmf)
        tail = 1.0 - np.concatenate([[0.0], np.cumsum(p)])[:-1]  # P(phi > j), j=0..
        w = tail / tail.sum()
        return rng.choice(np.arange(len(p)), size=size, p=w)
    return _sample_height_stationary(spec, rng, size)


def _conditional_phi_given_gt(spec, heights, rng):
    """phi | phi > height, exact inverse CDF per trial."""
    if spec.phi_law == "explicit":
        p = np.asarray(spec.pmf)
        out = np.empty(len(heights), dtype=np.int64)
        for h in np.unique(heights):
            sel = heights == h
            cond = p.copy()
            cond[: h] = 0.0
            cond = cond / cond.sum()
            out[sel] = rng.choice(np.arange(1, len(p) + 1), size=int(sel.sum()), p=cond)
        return out
    tail_h = spec.tail(heights.astype(float) + 1.0)
    u = rng.random(len(heights)) * tail_h
    phi = np.floor(np.maximum(u, 1e-300) ** (-1.0 / spec.beta))
    return np.minimum(phi, spec.max_phi).astype(np.int64)


def _residual_tail(spec: TowerSpec, r) -> np.ndarray:
    """P(first return time > r) under the stationary start, vectorized.

    The stationary first-passage time R satisfies P(R = m) = P(phi >= m)/E[phi].
    """
    r = np.asarray(r, dtype=float)
    e_phi = spec.mean_phi()
    if spec.phi_law == "explicit":
        p = np.asarray(spec.pmf)
        tails = np.concatenate([[1.0], 1.0 - np.cumsum(p)])  # P(phi >= m) at m-1... see below
        # P(R > r) = sum_{m > r} P(phi >= m)/E[phi]
        ms = np.arange(1, len(p) + 1)
        t_m = spec.tail(ms)
        out = np.array([t_m[ms > rr].sum() for rr in np.atleast_1d(r)]) / e_phi
        return out if r.ndim else float(out[0])
    lo = np.floor(r).astype(float) + 1.0
    val = (hurwitz_zeta(spec.beta, lo) - hurwitz_zeta(spec.beta, spec.max_phi + 1)) / e_phi
    return np.where(lo > spec.max_phi, 0.0, val)


def _sample_residual_le(spec: TowerSpec, n: int, rng, size: int,
                        u=None) -> np.ndarray:
    """Stationary first-passage time conditioned to be <= n (pareto)."""
    beta = spec.beta
    z_top = hurwitz_zeta(beta, 1.0)
    z_cut = hurwitz_zeta(beta, n + 1.0)
    mass = z_top - z_cut  # sum_{m<=n} m^{-beta}
    if u is None:
        u = rng.random(size)
    target = u * mass
    lo = np.ones(size, dtype=np.int64)
    hi = np.full(size, n, dtype=np.int64)
    for _ in range(2 + int(np.ceil(np.log2(max(n, 2))))):
        mid = (lo + hi) // 2
        ps = z_top - hurwitz_zeta(beta, mid.astype(float) + 1.0)  # sum_{m<=mid}
        too_low = ps <= target
        lo = np.where(too_low, mid + 1, lo)
        hi = np.where(too_low, hi, mid)
    return np.minimum(lo, n)


def _sample_phi_le(spec: TowerSpec, r: np.ndarray, rng) -> np.ndarray:
    """phi | phi <= r by exact inverse CDF (pareto)."""
    # P(phi <= r) = 1 - (floor(r)+1)^{-beta}; draw U above the cut tail.
    cut = (np.floor(r) + 1.0) ** (-spec.beta)
    u = cut + rng.random(len(r)) * (1.0 - cut)
    phi = np.floor(u ** (-1.0 / spec.beta)).astype(np.int64)
    return np.minimum(phi, np.floor(r).astype(np.int64))


def _pmf_pareto(spec: TowerSpec, m: np.ndarray) -> np.ndarray:
    mf = m.astype(float)
    return mf ** (-spec.beta) - (mf + 1.0) ** (-spec.beta)


def _theta_psi_cmc(spec: TowerSpec, theta: float, n: int, trials: int,
                   rng, spread_eps: float = 0.25,
                   spread_exponent: float = 0.5) -> np.ndarray:
    """Conditional-MC / importance-sampling estimator for E[theta^{psi_n}].

    Per trial the overshoot probability at each renewal is added analytically
    (theta^k * P(next excursion outlasts the horizon)), jumps are forced to
    stay inside the horizon, and a heavy-tailed mixture proposal spreads jump
    sizes across scales so that the rare near-horizon leaps that dominate the
    moment are sampled often and reweighted.  Unbiased for the same
    Monte Carlo average as the plain method, with bounded per-step weights.
    """
    if spec.phi_law != "pareto":
        raise NotImplementedError("importance sampling needs the power-law form")
    beta = spec.beta
    term0 = float(_residual_tail(spec, np.array(float(n))))
    z = np.full(trials, term0)
    # --- first jump: stationary residual conditioned <= n, mixed with spread
    mass_le = 1.0 - term0  # P(R <= n)
    if mass_le <= 0.0:
        return z
    e_phi = spec.mean_phi()
    z_top = hurwitz_zeta(beta, 1.0)
    z_cut = hurwitz_zeta(beta, n + 1.0)
    use_spread = rng.random(trials) < spread_eps
    r0 = np.empty(trials, dtype=np.int64)
    n_sp = int(use_spread.sum())
    if n_sp:
        r0[use_spread] = _sample_power_le(spread_exponent, n, rng, n_sp)
    r0[~use_spread] = _sample_residual_le(spec, n, rng, trials - n_sp)
    # weights: p_cond(m) / q(m)
    p_cond = (r0.astype(float) ** (-beta)) / (z_top - z_cut)
    q = (1 - spread_eps) * p_cond + spread_eps * _power_le_pmf(spread_exponent, n, r0)
    w = mass_le * p_cond / q
    t = r0.copy()
    k = 1
    factor = theta * w
    remaining = (n - t).astype(float)
    z += factor * spec.tail(remaining + 1.0)  # P(phi > remaining)
    active = np.flatnonzero((remaining >= 1.0) & (factor * 2.0 > _ABS_TRUNC * term0 + 1e-300))
    while len(active):
        r = remaining[active]
        m_act = len(active)
        use_sp = rng.random(m_act) < spread_eps
        jump = np.empty(m_act, dtype=np.int64)
        nn = int(use_sp.sum())
        if nn:
            jump[use_sp] = _sample_power_le_vec(spread_exponent, r[use_sp], rng)
        jump[~use_sp] = _sample_phi_le(spec, r[~use_sp], rng)
        rfloor = np.floor(r)
        cond_mass = 1.0 - (rfloor + 1.0) ** (-beta)  # P(phi <= r)
        p_cond = _pmf_pareto(spec, jump) / cond_mass
        q = (1 - spread_eps) * p_cond + spread_eps * _power_le_pmf_vec(
            spread_exponent, r, jump)
        w_step = cond_mass * p_cond / q
        factor[active] *= theta * w_step
        t[active] += jump
        remaining[active] = n - t[active]
        z[active] += factor[active] * spec.tail(remaining[active] + 1.0)
        k += 1
        keep = (remaining[active] >= 1.0) & (
            factor[active] * 2.0 > _ABS_TRUNC * term0 + 1e-300)
        active = active[keep]
        if k > 10_000:  # safety; never hit with theta*w_max < 1
            break
    return z


def _sample_power_le(exponent: float, n: int, rng, size: int) -> np.ndarray:
    """Spread proposal: pmf proportional to m^{-exponent}-(m+1)^{-exponent} on 1..n."""
    cut = (float(n) + 1.0) ** (-exponent)
    u = cut + rng.random(size) * (1.0 - cut)
    return np.minimum(np.floor(u ** (-1.0 / exponent)).astype(np.int64), n)


def _sample_power_le_vec(exponent: float, r: np.ndarray, rng) -> np.ndarray:
    cut = (np.floor(r) + 1.0) ** (-exponent)
    u = cut + rng.random(len(r)) * (1.0 - cut)
    return np.minimum(np.floor(u ** (-1.0 / exponent)).astype(np.int64),
                      np.floor(r).astype(np.int64))


def _power_le_pmf(exponent: float, n: int, m: np.ndarray) -> np.ndarray:
    mf = m.astype(float)
    norm = 1.0 - (float(n) + 1.0) ** (-exponent)
    return (mf ** (-exponent) - (mf + 1.0) ** (-exponent)) / norm


def _power_le_pmf_vec(exponent: float, r: np.ndarray, m: np.ndarray) -> np.ndarray:
    mf = m.astype(float)
    norm = 1.0 - (np.floor(r) + 1.0) ** (-exponent)
    return (mf ** (-exponent) - (mf + 1.0) ** (-exponent)) / norm


def theta_psi_moment(spec: TowerSpec, theta: float, n: int, trials: int,
                     seed: int = 0, method: str = "auto",
                     batches: int = 200) -> ThetaPsiEstimate:
    """Monte Carlo estimate of E[theta^{psi_n}] over stationary starts.

    ``method``: "plain" simulates the renewal process directly; "cmc" uses the
    conditional-MC importance sampler (required in practice once
    n^{beta-1} outgrows sqrt(trials)); "auto" picks between them on that
    criterion.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must be in (0,1)")
    if n < 1 or trials < 1:
        raise ValueError("need n >= 1 and trials >= 1")
    rng = np.random.default_rng(seed)
    if method == "auto":
        hard = spec.phi_law == "pareto" and \
            n ** (spec.beta - 1.0) > 0.05 * np.sqrt(trials)
        method = "cmc" if hard else "plain"
    if method == "plain":
        vals = _theta_psi_plain(spec, theta, n, trials, rng)
    elif method == "cmc":
        vals = _theta_psi_cmc(spec, theta, n, trials, rng)
    else:
        raise ValueError(f"unknown method {method!r}")
    mean = float(vals.mean())
    nb = min(batches, trials)
    batch_means = vals[: (trials // nb) * nb].reshape(nb, -1).mean(axis=1)
    lo, hi = _bootstrap_ci(mean, batch_means, rng)
    return ThetaPsiEstimate(n, theta, mean, lo, hi, trials, seed, method)


def theta_psi_exact(spec: TowerSpec, theta: float, n: int) -> float:
    """E[theta^{psi_n}] by the exact renewal recursion (oracle, O(n^2))."""
    m = np.arange(1, n + 1, dtype=float)
    if spec.phi_law == "explicit":
        p_full = np.asarray(spec.pmf, dtype=float)
        pm = np.zeros(n + 1)
        upto = min(n, len(p_full))
        pm[1 : upto + 1] = p_full[:upto]
        tail = np.array([float(spec.tail(np.array(float(j + 1)))) for j in range(n + 1)])
        res_pm = np.array([float(spec.tail(np.array(float(j)))) for j in range(n + 2)])
        e_phi = spec.mean_phi()
    else:
        pm = np.zeros(n + 1)
        pm[1:] = _pmf_pareto(spec, m.astype(np.int64))
        tail = np.concatenate([[1.0], (m + 1.0) ** (-spec.beta)])  # P(phi > j), j=0..n
        res_pm = np.concatenate([[0.0], m ** (-spec.beta), [0.0]])
        e_phi = spec.mean_phi()
    # ordinary renewal: u[j] = P(phi > j) + theta * sum_{m<=j} p(m) u[j-m]
    u = np.empty(n + 1)
    u[0] = 1.0
    for j in range(1, n + 1):
        u[j] = tail[j] + theta * float(np.dot(pm[1 : j + 1], u[j - 1 :: -1]))
    # stationary delay: P(R = m) = P(phi >= m)/E[phi]
    stat_tail = float(_residual_tail(spec, np.array(float(n))))
    conv = float(np.dot(res_pm[1 : n + 1], u[n - 1 :: -1])) / e_phi
    return stat_tail + theta * conv
