"""Compiled Monte Carlo engines for the heavy experiments.

Everything here is deterministic given (seed, trial count): each trial owns a
splitmix64 stream keyed by (seed, trial index), and per-trial outputs land in
per-trial slots before a fixed-order numpy reduction, so results do not depend
on scheduling.

The doubling map is iterated on a 64-bit integer fraction with a fresh random
low bit shifted in at each step.  Plain floating doubling drains one bit of
state per step and every orbit collapses onto 0 within ~52 steps; under
Lebesgue measure the incoming bits of the binary expansion are i.i.d. fair
coin flips, so re-injecting random bits reproduces the stationary orbit law
exactly on the 2^-64 grid.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .maps import MapSystem
from .observables import AFFINE, COORD, COSINE, HolderObservable

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_PHI64 = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_TWO53_INV = 1.0 / 9007199254740992.0
_TWO64_INV = 1.0 / 18446744073709551616.0

KIND_DOUBLING = 0
KIND_LSV = 1
KIND_BAKER = 2

_KINDS = {"doubling": KIND_DOUBLING, "lsv": KIND_LSV, "baker": KIND_BAKER}


def map_params(system: MapSystem) -> tuple[int, float]:
    return _KINDS[system.kind], float(system.alpha)


def obs_params(obs: HolderObservable) -> tuple[int, float, float]:
    if obs.formula not in (COORD, COSINE, AFFINE):
        raise ValueError("compiled experiments support closed-form observables only")
    return int(obs.formula), float(obs.param), float(obs.mean_offset)


@njit(inline="always")
def _sm64(s):
    s = (s + _PHI64) & _MASK
    z = s
    z = ((z ^ (z >> np.uint64(30))) * _MIX1) & _MASK
    z = ((z ^ (z >> np.uint64(27))) * _MIX2) & _MASK
    return s, z ^ (z >> np.uint64(31))


@njit(inline="always")
def _hash64(x):
    x = ((x ^ (x >> np.uint64(30))) * _MIX1) & _MASK
    x = ((x ^ (x >> np.uint64(27))) * _MIX2) & _MASK
    return x ^ (x >> np.uint64(31))


@njit(inline="always")
def _stream_init(seed, trial):
    # Streams share the splitmix64 increment, so consecutive initial states
    # would make trial r+1 a one-step shift of trial r.  Hashing the pair
    # scatters the starting points across the full 2^64 cycle; overlap within
    # any realistic draw budget is then astronomically unlikely.
    a = _hash64((np.uint64(seed) * _PHI64 + np.uint64(0xD1B54A32D192ED03)) & _MASK)
    b = (np.uint64(trial) * _MIX1 + _PHI64) & _MASK
    return _hash64(a ^ b)


@njit(inline="always")
def _uniform(s):
    s, z = _sm64(s)
    return s, (z >> np.uint64(11)) * _TWO53_INV


@njit(inline="always")
def _lsv_step(x, alpha):
    if x <= 0.5:
        x = x * (1.0 + (2.0 * x) ** alpha)
    else:
        x = 2.0 * x - 1.0
    if x < 0.0:
        x = 0.0
    elif x > 1.0:
        x = 1.0
    return x


@njit(inline="always")
def _g_inv(u, alpha):
    lo = 0.0
    hi = 0.5
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        if mid * (1.0 + (2.0 * mid) ** alpha) < u:
            lo = mid
        else:
            hi = mid
    y = 0.5 * (lo + hi)
    for _ in range(2):
        g = y * (1.0 + (2.0 * y) ** alpha)
        dg = 1.0 + (1.0 + alpha) * (2.0 * y) ** alpha
        y2 = y - (g - u) / dg
        if 0.0 <= y2 <= 0.5:
            y = y2
    return y


@njit(inline="always")
def _eval_obs(code, a, off, x):
    if code == 0:  # coordinate
        return x - off
    if code == 1:  # cos(2 pi a x)
        return np.cos(6.283185307179586 * a * x) - off
    return a * x - off  # affine


@njit(inline="always")
def _state_init(kind, alpha, s):
    """Returns (rng state, x1, x2, u) with x1 stationary-to-be after burn-in."""
    s, x1 = _uniform(s)
    s, x2 = _uniform(s)
    s, z = _sm64(s)
    return s, x1, x2, z


@njit(inline="always")
def _state_step(kind, alpha, s, x1, x2, u):
    if kind == 0:
        s, z = _sm64(s)
        u = ((u << np.uint64(1)) | (z & np.uint64(1))) & _MASK
        x1 = u * _TWO64_INV
    elif kind == 1:
        x1 = _lsv_step(x1, alpha)
    else:
        if x1 <= 0.5:
            x2 = _g_inv(x2, alpha)
        else:
            x2 = 0.5 * (x2 + 1.0)
        x1 = _lsv_step(x1, alpha)
    return s, x1, x2, u


@njit(cache=True)
def _moments_kernel(kind, alpha, vcode, va, voff, wcode, wa, woff,
                    checkpoints, burn, trials, seed, out_sv, out_ss):
    ncp = len(checkpoints)
    nmax = checkpoints[ncp - 1]
    for r in range(trials):
        s = _stream_init(seed, r)
        s, x1, x2, u = _state_init(kind, alpha, s)
        if kind == 0:
            x1 = u * _TWO64_INV
        for _ in range(burn):
            s, x1, x2, u = _state_step(kind, alpha, s, x1, x2, u)
        s_v = 0.0
        s_w = 0.0
        ss = 0.0
        ci = 0
        for t in range(nmax):
            vv = _eval_obs(vcode, va, voff, x1)
            ww = _eval_obs(wcode, wa, woff, x1)
            ss += s_v * ww
            s_v += vv
            s_w += ww
            if t + 1 == checkpoints[ci]:
                out_sv[r, ci] = s_v
                out_ss[r, ci] = ss
                ci += 1
                if ci == ncp:
                    break
            s, x1, x2, u = _state_step(kind, alpha, s, x1, x2, u)


def ensemble_block_sums(system: MapSystem, v: HolderObservable,
                        w: HolderObservable, checkpoints, trials: int,
                        seed: int, burn_in: int | None = None):
    """Per-trial (S_v(n), SS_vw(n)) at each checkpoint n, stationary starts.

    Returns arrays of shape (trials, len(checkpoints)).
    """
    kind, alpha = map_params(system)
    vc, va, voff = obs_params(v)
    wc, wa, woff = obs_params(w)
    cps = np.asarray(sorted(int(c) for c in checkpoints), dtype=np.int64)
    if burn_in is None:
        burn_in = system.default_burn_in
    out_sv = np.empty((trials, len(cps)))
    out_ss = np.empty((trials, len(cps)))
    _moments_kernel(kind, alpha, vc, va, voff, wc, wa, woff, cps,
                    burn_in, trials, seed, out_sv, out_ss)
    return cps, out_sv, out_ss


@njit(cache=True)
def _lag_sums_kernel(kind, alpha, vcode, va, voff, lags, trials, orbit_len,
                     burn, seed, out):
    nlags = len(lags)
    lmax = lags[nlags - 1]
    size = lmax + 1
    buf = np.empty(size)
    for r in range(trials):
        s = _stream_init(seed, r)
        s, x1, x2, u = _state_init(kind, alpha, s)
        if kind == 0:
            x1 = u * _TWO64_INV
        for _ in range(burn):
            s, x1, x2, u = _state_step(kind, alpha, s, x1, x2, u)
        # prefill the history window
        for t in range(size):
            buf[t] = _eval_obs(vcode, va, voff, x1)
            s, x1, x2, u = _state_step(kind, alpha, s, x1, x2, u)
        acc = np.zeros(nlags)
        pos = 0  # buf[pos] is the oldest entry, size steps behind vt
        for t in range(orbit_len):
            vt = _eval_obs(vcode, va, voff, x1)
            for j in range(nlags):
                lag = lags[j]
                if lag == 0:
                    acc[j] += vt * vt
                else:
                    idx = pos + (size - lag)
                    if idx >= size:
                        idx -= size
                    acc[j] += buf[idx] * vt
            buf[pos] = vt
            pos += 1
            if pos == size:
                pos = 0
            s, x1, x2, u = _state_step(kind, alpha, s, x1, x2, u)
        for j in range(nlags):
            out[r, j] = acc[j] / orbit_len


def orbit_lag_sums(system: MapSystem, v: HolderObservable, lags,
                   trials: int, orbit_len: int, burn_in: int, seed: int):
    """Per-orbit time averages of v_t * v_{t+lag}; shape (trials, len(lags))."""
    kind, alpha = map_params(system)
    vc, va, voff = obs_params(v)
    lags = np.asarray(lags, dtype=np.int64)
    out = np.empty((trials, len(lags)))
    _lag_sums_kernel(kind, alpha, vc, va, voff, lags, trials, orbit_len,
                     burn_in, seed, out)
    return out


@njit(cache=True)
def _fcb_kernel(kind, alpha, codes, pas, offs, times, split, total_windows,
                burn, seed, n_blocks, out_single, out_split, out_counts):
    q = len(times)
    nmax = times[q - 1]
    size = nmax + 1
    buf_a = np.empty(size)
    buf_b = np.empty(size)
    sa = _stream_init(seed, 0)
    sb = _stream_init(seed, 1)
    sa, a1, a2, ua = _state_init(kind, alpha, sa)
    sb, b1, b2, ub = _state_init(kind, alpha, sb)
    if kind == 0:
        a1 = ua * _TWO64_INV
        b1 = ub * _TWO64_INV
    for _ in range(burn):
        sa, a1, a2, ua = _state_step(kind, alpha, sa, a1, a2, ua)
        sb, b1, b2, ub = _state_step(kind, alpha, sb, b1, b2, ub)
    for t in range(size):
        buf_a[t] = a1
        buf_b[t] = b1
        sa, a1, a2, ua = _state_step(kind, alpha, sa, a1, a2, ua)
        sb, b1, b2, ub = _state_step(kind, alpha, sb, b1, b2, ub)
    pos = 0  # buf[pos] holds time tau = t - nmax of each orbit
    for t in range(total_windows):
        prod_one = 1.0
        prod_two = 1.0
        for i in range(q):
            idx = pos + times[i]
            if idx >= size:
                idx -= size
            fb = _eval_obs(codes[i], pas[i], offs[i], buf_b[idx])
            prod_one *= fb
            if i < split:
                prod_two *= _eval_obs(codes[i], pas[i], offs[i], buf_a[idx])
            else:
                prod_two *= fb
        blk = (t * n_blocks) // total_windows
        out_single[blk] += prod_one
        out_split[blk] += prod_two
        out_counts[blk] += 1
        buf_a[pos] = a1
        buf_b[pos] = b1
        pos += 1
        if pos == size:
            pos = 0
        sa, a1, a2, ua = _state_step(kind, alpha, sa, a1, a2, ua)
        sb, b1, b2, ub = _state_step(kind, alpha, sb, b1, b2, ub)


def fcb_block_estimates(system: MapSystem, factor_obs, times, split: int,
                        total_windows: int, seed: int,
                        burn_in: int | None = None, n_blocks: int = 32):
    """Blocked time averages of the single-orbit and split-measure functionals.

    The functional is a product of per-slot observables evaluated at lagged
    times along a stationary orbit; the split version reads slots < split from
    an independent second orbit.  Returns (single, split, counts) per block.
    """
    kind, alpha = map_params(system)
    codes = np.array([obs_params(o)[0] for o in factor_obs], dtype=np.int64)
    pas = np.array([obs_params(o)[1] for o in factor_obs])
    offs = np.array([obs_params(o)[2] for o in factor_obs])
    times = np.asarray(times, dtype=np.int64)
    times = times - times[0]
    if burn_in is None:
        burn_in = system.default_burn_in
    out_single = np.zeros(n_blocks)
    out_split = np.zeros(n_blocks)
    out_counts = np.zeros(n_blocks, dtype=np.int64)
    _fcb_kernel(kind, alpha, codes, pas, offs, times, split, total_windows,
                burn_in, seed, n_blocks, out_single, out_split, out_counts)
    return out_single, out_split, out_counts


@njit(cache=True)
def _block_rvs_kernel(kind, alpha, vcode, va, voff, lowers, uppers, burn,
                      trials, seed, want_hat, out_x, out_xhat):
    k = len(lowers)
    n = uppers[k - 1] + 1
    for r in range(trials):
        s = _stream_init(seed, r)
        s, x1, x2, u = _state_init(kind, alpha, s)
        if kind == 0:
            x1 = u * _TWO64_INV
        for _ in range(burn):
            s, x1, x2, u = _state_step(kind, alpha, s, x1, x2, u)
        bi = 0
        acc = 0.0
        for t in range(n):
            if bi < k and t == lowers[bi]:
                acc = 0.0
            if bi < k and t >= lowers[bi]:
                acc += _eval_obs(vcode, va, voff, x1)
                if t == uppers[bi]:
                    out_x[r, bi] = acc
                    bi += 1
            s, x1, x2, u = _state_step(kind, alpha, s, x1, x2, u)
        if want_hat:
            for i in range(k):
                s2 = _stream_init(seed ^ np.uint64(0x5DEECE66D), r * k + i + 1)
                s2, y1, y2, w = _state_init(kind, alpha, s2)
                if kind == 0:
                    y1 = w * _TWO64_INV
                for _ in range(burn):
                    s2, y1, y2, w = _state_step(kind, alpha, s2, y1, y2, w)
                acc = 0.0
                for t in range(uppers[i] - lowers[i] + 1):
                    acc += _eval_obs(vcode, va, voff, y1)
                    s2, y1, y2, w = _state_step(kind, alpha, s2, y1, y2, w)
                out_xhat[r, i] = acc


def block_rvs_ensemble(system: MapSystem, v: HolderObservable, scheme,
                       trials: int, seed: int, burn_in: int | None = None,
                       with_independent: bool = True):
    """Block Birkhoff sums X_i over the odd blocks of ``scheme``, per trial,
    plus independent same-law copies X_hat from disjoint orbits."""
    kind, alpha = map_params(system)
    vc, va, voff = obs_params(v)
    lowers = np.asarray(scheme.lowers, dtype=np.int64)
    uppers = np.asarray(scheme.uppers, dtype=np.int64)
    if burn_in is None:
        burn_in = system.default_burn_in
    k = len(lowers)
    out_x = np.empty((trials, k))
    out_xhat = np.empty((trials, k)) if with_independent else np.empty((0, k))
    _block_rvs_kernel(kind, alpha, vc, va, voff, lowers, uppers, burn_in,
                      trials, np.uint64(seed), with_independent, out_x, out_xhat)
    return (out_x, out_xhat) if with_independent else out_x


@njit(cache=True)
def _fastslow_kernel(kind, alpha, vcode, va, voff, a_kind, a_param, xi,
                     n, checkpoints, burn, trials, seed, out):
    ncp = len(checkpoints)
    inv_n = 1.0 / n
    inv_sqrt_n = 1.0 / np.sqrt(n)
    for r in range(trials):
        s = _stream_init(seed, r)
        s, y1, y2, u = _state_init(kind, alpha, s)
        if kind == 0:
            y1 = u * _TWO64_INV
        for _ in range(burn):
            s, y1, y2, u = _state_step(kind, alpha, s, y1, y2, u)
        x = xi
        ci = 0
        nsteps = checkpoints[ncp - 1]
        for t in range(nsteps):
            drift = 0.0
            if a_kind == 1:
                drift = a_param
            elif a_kind == 2:
                drift = a_param * x
            x = x + inv_n * drift + inv_sqrt_n * _eval_obs(vcode, va, voff, y1)
            s, y1, y2, u = _state_step(kind, alpha, s, y1, y2, u)
            if t + 1 == checkpoints[ci]:
                out[r, ci] = x
                ci += 1
                if ci == ncp:
                    break


def fastslow_ensemble(system: MapSystem, v: HolderObservable, a_kind: int,
                      a_param: float, xi: float, n: int, step_checkpoints,
                      trials: int, seed: int, burn_in: int | None = None):
    """Slow-variable samples x^{(n)}_k at the requested step counts.

    Additive noise only: x_{k+1} = x_k + a(x_k)/n + v(y_k)/sqrt(n).
    """
    kind, alpha = map_params(system)
    vc, va, voff = obs_params(v)
    cps = np.asarray(sorted(int(c) for c in step_checkpoints), dtype=np.int64)
    if burn_in is None:
        burn_in = system.default_burn_in
    out = np.empty((trials, len(cps)))
    _fastslow_kernel(kind, alpha, vc, va, voff, a_kind, a_param, xi,
                     n, cps, burn_in, trials, seed, out)
    return cps, out


@njit(cache=True)
def _bruteforce_pairs(vs, ws):
    total = 0.0
    for j in range(1, len(ws)):
        acc = 0.0
        for i in range(j):
            acc += vs[i]
        total += acc * ws[j]
    return total
