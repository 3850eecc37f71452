"""Birkhoff sums, iterated pair sums, block partitions, and Chen recombination.

The streaming accumulator computes S_v, S_w and the iterated sum
SS_vw = sum_{i<j} v_i w_j in one pass.  The update order is load-bearing:
on pushing (v_m, w_m) the iterated sum is bumped by (current S_v) * w_m
*before* S_v absorbs v_m.  Contiguous window results recombine exactly via
the Chen relation, which is what makes windowed/parallel computation safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .maps import MapSystem, step

__all__ = [
    "SumAccumulator",
    "BlockScheme",
    "block_partition",
    "birkhoff_sum",
    "iterated_sum_stream",
    "iterated_sum_bruteforce",
    "chen_recombine",
    "WindowSums",
]

_BRUTEFORCE_GUARD = 100_000
# Kahan compensation kicks in for long windows, where sqrt(n)-scale
# cancellations in centered sums meet n-scale numbers of roundings.
_KAHAN_THRESHOLD = 1_000_000


@dataclass
class WindowSums:
    """Sums over one contiguous window [a, b)."""

    s_v: float
    s_w: float
    ss_vw: float
    count: int


class SumAccumulator:
    """Streaming accumulator for S_v, S_w and SS_vw over one window.

    Single-owner, sequential.  Cross-window aggregation goes through
    :func:`chen_recombine`.
    """

    def __init__(self, compensated: bool = False):
        self.s_v = 0.0
        self.s_w = 0.0
        self.ss_vw = 0.0
        self.count = 0
        self._compensated = compensated
        self._c_v = 0.0
        self._c_w = 0.0
        self._c_ss = 0.0

    def push(self, v: float, w: float | None = None) -> None:
        if w is None:
            w = v
        if self._compensated:
            self._add("ss_vw", "_c_ss", self.s_v * w)
            self._add("s_v", "_c_v", v)
            self._add("s_w", "_c_w", w)
        else:
            self.ss_vw += self.s_v * w
            self.s_v += v
            self.s_w += w
        self.count += 1

    def _add(self, attr: str, comp: str, x: float) -> None:
        s = getattr(self, attr)
        c = getattr(self, comp)
        y = x - c
        t = s + y
        setattr(self, comp, (t - s) - y)
        setattr(self, attr, t)

    def result(self) -> WindowSums:
        return WindowSums(self.s_v, self.s_w, self.ss_vw, self.count)


def _window_values(system: MapSystem, v, w, x0, a: int, b: int):
    """Yield (v(T^i x0), w(T^i x0)) for a <= i < b."""
    if not 0 <= a <= b:
        raise ValueError("need 0 <= a <= b")
    x = np.asarray(x0, dtype=float) if np.ndim(x0) else float(x0)
    for _ in range(a):
        x = step(system, x)
    for _ in range(b - a):
        yield float(np.asarray(v(x))), float(np.asarray(w(x)))
        x = step(system, x)


def birkhoff_sum(system: MapSystem, v, x0, a: int, b: int) -> float:
    """S_v(a,b) = sum_{a<=i<b} v(T^i x0)."""
    acc = SumAccumulator(compensated=(b - a) > _KAHAN_THRESHOLD)
    for vv, _ in _window_values(system, v, v, x0, a, b):
        acc.push(vv, 0.0)
    return acc.s_v


def iterated_sum_stream(system: MapSystem, v, w, x0, a: int, b: int) -> WindowSums:
    """One-pass (S_v, S_w, SS_vw) over the window [a,b).  O(b-a) time, O(1) memory."""
    acc = SumAccumulator(compensated=(b - a) > _KAHAN_THRESHOLD)
    for vv, ww in _window_values(system, v, w, x0, a, b):
        acc.push(vv, ww)
    return acc.result()


def iterated_sum_bruteforce(system: MapSystem, v, w, x0, a: int, b: int) -> float:
    """SS_vw(a,b) by literal enumeration over pairs i < j.  O((b-a)^2) oracle."""
    if b - a > _BRUTEFORCE_GUARD:
        raise ValueError(f"window longer than the {_BRUTEFORCE_GUARD} guard")
    vals = list(_window_values(system, v, w, x0, a, b))
    vs = np.array([p[0] for p in vals])
    ws = np.array([p[1] for p in vals])
    total = 0.0
    if len(vals) <= 512:
        # Literal double loop over pairs.
        for j in range(1, len(vals)):
            for i in range(j):
                total += vs[i] * ws[j]
    else:
        # Still O((b-a)^2): each inner sum is recomputed from scratch rather
        # than carried forward, so the oracle stays independent of the
        # streaming update order.
        for j in range(1, len(vals)):
            total += float(vs[:j].sum()) * ws[j]
    return total


@dataclass(frozen=True)
class BlockScheme:
    """The partition a_i = floor(i*n/(2k)) with odd blocks and gaps.

    Block i covers indices [a_{2i}, a_{2i+1}); the following gap covers
    [a_{2i+1}, a_{2i+2}).
    """

    n: int
    k: int
    a: np.ndarray

    @property
    def block_ranges(self) -> list[tuple[int, int]]:
        return [(int(self.a[2 * i]), int(self.a[2 * i + 1])) for i in range(self.k)]

    @property
    def lowers(self) -> np.ndarray:
        return self.a[0:2 * self.k:2]

    @property
    def uppers(self) -> np.ndarray:
        # u_i = a_{2i+1} - 1, the last index inside block i
        return self.a[1:2 * self.k + 1:2] - 1

    def gaps(self) -> np.ndarray:
        """l_{r+1} - u_r for consecutive blocks."""
        return self.lowers[1:] - self.uppers[:-1]


def block_partition(n: int, k: int) -> BlockScheme:
    """Exact integer block partition; rejects n < 2k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < 2 * k:
        raise ValueError(f"need n >= 2k, got n={n}, k={k}")
    i = np.arange(2 * k + 1, dtype=np.int64)
    a = (i * n) // (2 * k)
    return BlockScheme(n, k, a)


def chen_recombine(segments: list[WindowSums]) -> WindowSums:
    """Recombine contiguous segment sums into whole-window sums.

    S_v(total) is the plain sum of segment S_v; SS_vw(total) adds the
    cross-segment products S_v(seg_i) * S_w(seg_j) for i < j.
    """
    if not segments:
        return WindowSums(0.0, 0.0, 0.0, 0)
    s_v = 0.0
    s_w = 0.0
    ss = 0.0
    count = 0
    for seg in segments:
        ss += seg.ss_vw + s_v * seg.s_w
        s_v += seg.s_v
        s_w += seg.s_w
        count += seg.count
    return WindowSums(s_v, s_w, ss, count)
