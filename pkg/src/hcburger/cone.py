"""Lattice walks of words, pi/2-cone times, and the running-infimum cone detector."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Protocol, TextIO

import numpy as np
from scipy.ndimage import minimum_filter1d

from .errors import FlexiblePresent
from .words import MatchTable, Symbol, Word

# unit steps of (d, d*) for H, C, h, c
_STEPS = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=np.int64)


class SampledPath(Protocol):
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class LatticePath:
    """The walk D(j) = (d(j), d*(j)) at integer times ``start .. start+N``.

    ``values`` and ``times`` give the rescaled path Z^n(t) = n^{-1/2} D(n t)
    at its grid points; in between, both are linear.
    """

    points: np.ndarray
    n_scale: int = 1
    start: int = 0

    @property
    def steps(self) -> np.ndarray:
        return np.arange(self.start, self.start + len(self.points))

    @property
    def times(self) -> np.ndarray:
        return self.steps / self.n_scale

    @property
    def values(self) -> np.ndarray:
        return self.points / math.sqrt(self.n_scale)

    def at(self, t: float) -> np.ndarray:
        """Z^n(t) by linear interpolation."""
        x = t * self.n_scale - self.start
        if not 0 <= x <= len(self.points) - 1:
            raise ValueError(f"time {t} outside the path")
        k = min(int(math.floor(x)), len(self.points) - 2) if len(self.points) > 1 else 0
        frac = x - k
        if len(self.points) == 1:
            return self.values[0].copy()
        return ((1 - frac) * self.points[k] + frac * self.points[k + 1]) / math.sqrt(self.n_scale)

    def write_csv(self, fh: TextIO, scaled: bool = False) -> None:
        out = csv.writer(fh)
        if scaled:
            out.writerow(["t", "u", "v"])
            for t, (u, v) in zip(self.times, self.values):
                out.writerow([repr(float(t)), repr(float(u)), repr(float(v))])
        else:
            out.writerow(["j", "d", "d_star"])
            for j, (d, ds) in zip(self.steps, self.points):
                out.writerow([int(j), int(d), int(ds)])


def lattice_path(y: Word, n_scale: int = 1) -> LatticePath:
    """Walk of a flexible-free word.

    Forward words start at D(origin-1) = 0.  A backward word (one ending at
    index -1) is read with D(0) = 0 and D(-j) = -(sum of the steps at
    -j .. -1).
    """
    arr = y.array
    if (arr == Symbol.FLEXIBLE_ORDER).any():
        raise FlexiblePresent("resolve flexible orders before building the walk")
    inc = _STEPS[arr] if arr.size else np.zeros((0, 2), np.int64)
    if y.origin < 0 and y.end == -1:
        tail = np.cumsum(inc[::-1], axis=0)[::-1] if arr.size else inc
        pts = np.vstack([-tail, np.zeros((1, 2), np.int64)])
        return LatticePath(pts, n_scale, y.origin)
    pts = np.vstack([np.zeros((1, 2), np.int64), np.cumsum(inc, axis=0)])
    return LatticePath(pts, n_scale, y.origin - 1)


def _last_below(x: np.ndarray) -> np.ndarray:
    """For each k, the largest j < k with x[j] < x[k], or -1 (monotone stack)."""
    out = np.full(len(x), -1, np.int64)
    stack: list[int] = []
    for k, val in enumerate(x):
        while stack and x[stack[-1]] >= val:
            stack.pop()
        out[k] = stack[-1] if stack else -1
        stack.append(k)
    return out


@dataclass(frozen=True)
class ConeRecord:
    """A weak pi/2-cone time t with entrance time v and last crossing u.

    ``direction`` is "left" when the second coordinate at t equals its value
    at v, "right" when the first does, and None for ties.  ``degenerate``
    marks zero-length intervals (v == t); ``u_censored`` marks records whose
    u could not be located inside the path (u is then the path start).
    """

    t: float
    v: float
    u: float
    direction: str | None
    degenerate: bool = False
    tie: bool = False
    u_censored: bool = False
    grid: float = 0.0


class ConeIndex:
    """Per-grid-point cone data (entrance time v and last crossing u) of a path."""

    def __init__(self, values: np.ndarray):
        self.values = np.asarray(values)
        below_u = _last_below(self.values[:, 0])
        below_v = _last_below(self.values[:, 1])
        # entrance: one grid step after the last point violating the cone at k
        self.entrance = np.maximum(below_u, below_v) + 1
        # u: sup of t* with both coordinates dipping below in [t*, t]
        both = np.minimum(below_u, below_v)
        self.crossing = np.where(both >= 0, both + 1, 0)
        self.crossing_found = both >= 0

    def record(self, k: int, times: np.ndarray, grid: float) -> ConeRecord:
        v = int(self.entrance[k])
        z_t = self.values[k]
        z_v = self.values[v]
        left = z_t[1] == z_v[1]
        right = z_t[0] == z_v[0]
        tie = bool(left and right)
        direction = None if tie else ("left" if left else "right")
        return ConeRecord(
            t=float(times[k]),
            v=float(times[v]),
            u=float(times[self.crossing[k]]),
            direction=direction,
            degenerate=v == k,
            tie=tie,
            u_censored=not bool(self.crossing_found[k]),
            grid=grid,
        )


def cone_times_from_word(w: Word, m: MatchTable, n_scale: int = 1) -> list[ConeRecord]:
    """One record per flexible order i: t = (i-1)/n, v = phi(i)/n, and u, direction from the walk."""
    from .words import resolve_flex

    flex = [i for i in w.indices() if w[i] == Symbol.FLEXIBLE_ORDER]
    if not flex:
        return []
    path = lattice_path(resolve_flex(w, m), n_scale)
    idx = ConeIndex(path.points)
    times = path.times
    out = []
    for i in flex:
        k = i - 1 - path.start
        out.append(idx.record(k, times, 1.0 / n_scale))
    return out


def _flex_intervals(w: Word, m: MatchTable) -> list[tuple[int, int]]:
    return [(m.phi(i), i) for i in w.indices()
            if w[i] == Symbol.FLEXIBLE_ORDER and m.phi(i) is not None]


@dataclass(frozen=True)
class MaximalSelection:
    index: float
    t: float
    fallback: bool
    record: ConeRecord | None = None


def maximal_flexible_time(w: Word, m: MatchTable, interval: tuple[float, float],
                          a: float, n_scale: int = 1) -> MaximalSelection:
    """Maximal flexible order time i in n*I whose interval [phi(i), i] contains a*n.

    Falls back to floor(a n) when there is none.
    """
    lo, hi = interval[0] * n_scale, interval[1] * n_scale
    an = a * n_scale
    best = None
    for phi, i in _flex_intervals(w, m):
        if lo < phi and i < hi and phi <= an <= i:
            if best is None or (phi < best[0] and i > best[1]):
                best = (phi, i)
    if best is None:
        k = math.floor(an)
        return MaximalSelection(k, k / n_scale, True)
    return MaximalSelection(best[1], best[1] / n_scale, False)


def maximal_cone_interval(path: SampledPath, interval: tuple[float, float],
                          a: float) -> MaximalSelection:
    """Outermost grid cone interval [v(t), t] inside the open interval I containing a."""
    times = np.asarray(path.times)
    idx = ConeIndex(np.asarray(path.values))
    v_times = times[idx.entrance]
    ok = ((v_times > interval[0]) & (times < interval[1]) & (v_times <= a)
          & (a <= times) & (idx.entrance < np.arange(len(times))))
    cand = np.flatnonzero(ok)
    grid = float(times[1] - times[0]) if len(times) > 1 else 0.0
    if cand.size == 0:
        return MaximalSelection(a, a, True)
    k = int(cand[np.argmax(times[cand] - v_times[cand])])
    return MaximalSelection(k, float(times[k]), False, idx.record(k, times, grid))


def maximal_cone_selection(obj, interval, a, match: MatchTable | None = None,
                           n_scale: int = 1) -> MaximalSelection:
    if isinstance(obj, Word):
        if match is None:
            from .words import match_indices
            match = match_indices(obj)
        return maximal_flexible_time(obj, match, interval, a, n_scale)
    return maximal_cone_interval(obj, interval, a)


def iota_ar(w: Word, m: MatchTable, a: float, r: float, n_scale: int = 1) -> int | None:
    """Smallest flexible order i with i >= a n and i - phi(i) >= r n - 1."""
    for phi, i in _flex_intervals(w, m):
        if i >= a * n_scale and i - phi >= r * n_scale - 1:
            return i
    return None


@dataclass(frozen=True, eq=False)
class ConeDetector:
    """Z_r(t) = Z(t) - (running minimum of each coordinate over [t - r, t]).

    Evaluated on the path grid; points closer than r to the path start have
    no full window and carry NaN.
    """

    times: np.ndarray
    values: np.ndarray
    window: int

    def __call__(self, t: float) -> np.ndarray:
        k = int(np.argmin(np.abs(self.times - t)))
        return self.values[k]

    def zero_mask(self) -> np.ndarray:
        return (self.values[:, 0] == 0) & (self.values[:, 1] == 0)

    def zeros(self) -> np.ndarray:
        return self.times[self.zero_mask()]


def trailing_min(x: np.ndarray, window: int) -> np.ndarray:
    """min(x[k-window .. k]) for every k (shorter windows near the start)."""
    size = window + 1
    return minimum_filter1d(x, size=size, origin=(size - 1) // 2, mode="nearest")


def cone_detector(path: SampledPath, r: float) -> ConeDetector:
    if isinstance(path, LatticePath):
        raw = path.points
        window = int(round(r * path.n_scale))
        scale = 1.0 / math.sqrt(path.n_scale)
    else:
        raw = np.asarray(path.values)
        times = np.asarray(path.times)
        window = int(round(r / (times[1] - times[0])))
        scale = 1.0
    times = np.asarray(path.times, dtype=float)
    if window < 0 or window > len(times) - 1:
        raise ValueError("detector window must fit inside the path")
    vals = np.empty((len(times), 2))
    for col in range(2):
        x = raw[:, col]
        vals[:, col] = (x - trailing_min(x, window)) * scale
    vals[:window] = np.nan
    return ConeDetector(times, vals, window)


def tau_ar(path: SampledPath, a: float, r: float) -> float | None:
    """Smallest grid time t >= a that is a cone time with t - v(t) >= r."""
    det = cone_detector(path, r)
    hit = np.flatnonzero(det.zero_mask() & (det.times >= a - 1e-12))
    return float(det.times[hit[0]]) if hit.size else None
