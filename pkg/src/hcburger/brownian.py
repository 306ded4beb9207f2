"""Correlated planar Brownian motion in the quadrant: densities and grid samplers."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincinv

from . import bm_kernels as bk
from .errors import DegenerateSurvival, Exhausted, OutOfCone, OutOfRange
from .parallel import map_chunks, search_chunks
from .sampler import derive_params


def cone_matrix(p: float) -> np.ndarray:
    """Linear map sending the correlated motion to a standard one and the quadrant to a wedge."""
    scale = math.sqrt(2.0 * (1.0 - p) / (1.0 - 2.0 * p))
    return scale * np.array([[1.0, -p / (1.0 - p)], [0.0, math.sqrt(1.0 - 2.0 * p) / (1.0 - p)]])


@dataclass(frozen=True, eq=False)
class BmConfig:
    p: float
    dt: float = 1e-3
    seed: int = 0
    var: float = field(init=False)
    cov: float = field(init=False)
    A: np.ndarray = field(init=False)
    mu: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.p < 0.5:
            raise OutOfRange(f"p must lie in (0, 1/2), got {self.p}")
        if self.dt <= 0:
            raise OutOfRange("dt must be positive")
        object.__setattr__(self, "var", (1.0 - self.p) / 2.0)
        object.__setattr__(self, "cov", self.p / 2.0)
        object.__setattr__(self, "A", cone_matrix(self.p))
        object.__setattr__(self, "mu", derive_params(self.p).mu)

    @property
    def sigma(self) -> np.ndarray:
        return np.array([[self.var, self.cov], [self.cov, self.var]])

    @property
    def chol(self) -> tuple[float, float, float]:
        l11 = math.sqrt(self.var)
        l21 = self.cov / l11
        return l11, l21, math.sqrt(self.var - l21 * l21)

    @property
    def inv_sigma(self) -> tuple[float, float, float]:
        det = self.var**2 - self.cov**2
        return self.var / det, -self.cov / det, self.var / det

    @property
    def wedge_angle(self) -> float:
        """Opening angle pi/(2 mu) of the image of the quadrant under A."""
        return math.pi / (2.0 * self.mu)

    @property
    def start_offset(self) -> float:
        """Corner start (sqrt(dt), sqrt(dt)) used by the conditioned samplers."""
        return math.sqrt(self.dt)

    def steps(self, T: float) -> int:
        n = int(round(T / self.dt))
        if n < 1 or abs(n * self.dt - T) > self.dt / 2 + 1e-12:
            raise OutOfRange(f"horizon {T} is not a grid multiple of dt={self.dt}")
        return n


@dataclass(frozen=True, eq=False)
class GridPath:
    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("times and values must have equal length")

    def write_csv(self, fh: TextIO) -> None:
        out = csv.writer(fh)
        out.writerow(["t", "u", "v"])
        for t, (u, v) in zip(self.times, self.values):
            out.writerow([repr(float(t)), repr(float(u)), repr(float(v))])


@dataclass(frozen=True)
class ExcursionWindow:
    delta: float = 0.02
    C: float = 4.0

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise OutOfRange("delta must lie in (0, 1)")
        if self.C <= 1.0:
            raise OutOfRange("C must exceed 1")

    @property
    def box(self) -> tuple[float, float]:
        r = math.sqrt(self.delta)
        return r / self.C, r * self.C


def _check_cone(z: np.ndarray) -> None:
    if np.any(z < 0):
        raise OutOfCone("point outside the closed first quadrant")


def endpoint_density(cfg: BmConfig, t: float, z) -> np.ndarray | float:
    """Density at z of the time-t value of the quadrant meander started at the corner."""
    z = np.asarray(z, dtype=float)
    _check_cone(z)
    w = z @ cfg.A.T
    r2 = np.sum(w * w, axis=-1)
    angle = np.arctan2(w[..., 1], w[..., 0])
    mu = cfg.mu
    const = np.linalg.det(cfg.A) / (2.0**mu * gamma_fn(mu) * t ** (1.0 + mu))
    val = const * r2**mu * np.exp(-r2 / (2.0 * t)) * np.sin(2.0 * mu * angle)
    val = np.maximum(val, 0.0)
    return float(val) if val.ndim == 0 else val


@dataclass(frozen=True, eq=False)
class ConeBins:
    """Equal-mass partition of the quadrant for the time-t endpoint law.

    Cells are products of radial and angular bands in the straightened
    coordinates A z, where the law factorizes: |Az|^2/(2t) is Gamma(mu+1)
    and the angle has density proportional to sin(2 mu theta).
    """

    radial_edges: np.ndarray
    angular_edges: np.ndarray
    A: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.radial_edges) - 1, len(self.angular_edges) - 1

    @property
    def masses(self) -> np.ndarray:
        k_r, k_a = self.shape
        return np.full(self.shape, 1.0 / (k_r * k_a))

    def assign(self, z) -> np.ndarray:
        """Flat cell index of each point."""
        w = np.asarray(z, dtype=float) @ self.A.T
        r = np.hypot(w[:, 0], w[:, 1])
        ang = np.arctan2(w[:, 1], w[:, 0])
        k_r, k_a = self.shape
        ir = np.clip(np.searchsorted(self.radial_edges, r, side="right") - 1, 0, k_r - 1)
        ia = np.clip(np.searchsorted(self.angular_edges, ang, side="right") - 1, 0, k_a - 1)
        return ir * k_a + ia

    def counts(self, z) -> np.ndarray:
        return np.bincount(self.assign(z), minlength=self.shape[0] * self.shape[1]).reshape(self.shape)

    def cell_corners(self, a: int, b: int) -> tuple[float, float, float, float]:
        """(r_lo, r_hi, angle_lo, angle_hi) of cell (a, b) in straightened polar coordinates."""
        return (self.radial_edges[a], self.radial_edges[a + 1],
                self.angular_edges[b], self.angular_edges[b + 1])


def cone_bins(cfg: BmConfig, t: float = 1.0, k_radial: int = 8, k_angular: int = 8) -> ConeBins:
    q = np.arange(k_radial + 1) / k_radial
    radial = np.sqrt(2.0 * t * gammaincinv(cfg.mu + 1.0, q))
    radial[-1] = np.inf
    qa = np.arange(k_angular + 1) / k_angular
    angular = np.arccos(1.0 - 2.0 * qa) / (2.0 * cfg.mu)
    return ConeBins(radial, angular, cfg.A)


@dataclass(frozen=True, eq=False)
class SurvivalTable:
    """Monte Carlo survival probabilities on a grid, bilinearly interpolated.

    Points beyond the grid are clamped to its edge; axis nodes are zero.
    """

    horizon: float
    nodes: np.ndarray
    probs: np.ndarray
    n_paths: int

    def __post_init__(self):
        interp = RegularGridInterpolator((self.nodes, self.nodes), self.probs)
        object.__setattr__(self, "_interp", interp)

    def __call__(self, z) -> np.ndarray:
        z = np.clip(np.asarray(z, dtype=float), self.nodes[0], self.nodes[-1])
        return self._interp(z)


def survival_table(cfg: BmConfig, horizon: float, z_max: float = 3.5, spacing: float = 0.05,
                   n_paths: int = 4000, seed: int | None = None) -> SurvivalTable:
    nodes = np.linspace(0.0, z_max, int(round(z_max / spacing)) + 1)
    l11, l21, l22 = cfg.chol
    probs = bk.survival_table(np.uint64(cfg.seed if seed is None else seed), nodes, nodes,
                              n_paths, cfg.steps(horizon), cfg.dt, l11, l21, l22, math.sqrt(cfg.var))
    return SurvivalTable(horizon, nodes, probs, n_paths)


def g_density(cfg: BmConfig, t: float, z, survival: SurvivalTable,
              floor: float = 1e-9) -> np.ndarray | float:
    """Unnormalized reweighting density f_{1-t}(z) / P^z(stay in the quadrant for 1-t)."""
    if not 0.0 < t < 1.0:
        raise OutOfRange("t must lie in (0, 1)")
    if abs(survival.horizon - (1.0 - t)) > 1e-9:
        raise ValueError("survival table horizon must equal 1 - t")
    z = np.asarray(z, dtype=float)
    surv = survival(z)
    if np.any(surv < floor):
        raise DegenerateSurvival(f"survival estimate below {floor}")
    out = endpoint_density(cfg, 1.0 - t, z) / surv
    return float(out) if np.ndim(out) == 0 else out


def _grid_times(n: int, dt: float) -> np.ndarray:
    return np.arange(n + 1) * dt


def sample_correlated_bm(cfg: BmConfig, T: float, start=(0.0, 0.0), stream: int = 0) -> GridPath:
    n = cfg.steps(T)
    vals = bk.free_path(np.uint64(cfg.seed), stream, n, cfg.dt, *cfg.chol, float(start[0]), float(start[1]))
    return GridPath(_grid_times(n, cfg.dt), vals, {"dt": cfg.dt, "kind": "free"})


def sample_bridge(cfg: BmConfig, T: float, start, end, stream: int = 0,
                  in_quadrant: bool = False, max_trials: int = 10**6) -> GridPath:
    """Brownian bridge with the model covariance; optionally conditioned to stay in the quadrant."""
    n = cfg.steps(T)
    vals, trials = bk.bridge_path(np.uint64(cfg.seed), stream, n, cfg.dt, *cfg.chol,
                                  float(start[0]), float(start[1]), float(end[0]), float(end[1]),
                                  in_quadrant, max_trials)
    if len(vals) == 0:
        raise Exhausted(max_trials, 0, "quadrant-conditioned bridge")
    return GridPath(_grid_times(n, cfg.dt), vals,
                    {"dt": cfg.dt, "kind": "bridge", "trials": int(trials)})


def sample_meander(cfg: BmConfig, T: float = 1.0, stream: int = 0,
                   max_trials: int = 10**6) -> GridPath:
    """Grid path from the corner offset conditioned (by rejection) to stay in the quadrant."""
    n = cfg.steps(T)
    vals, trials = bk.meander_path(np.uint64(cfg.seed), stream, max_trials, n, cfg.dt,
                                   *cfg.chol, cfg.start_offset)
    if len(vals) == 0:
        raise Exhausted(max_trials, 0, "meander")
    return GridPath(_grid_times(n, cfg.dt), vals,
                    {"dt": cfg.dt, "kind": "meander", "trials": int(trials),
                     "start_offset": cfg.start_offset})


def sample_excursion(cfg: BmConfig, window: ExcursionWindow = ExcursionWindow(),
                     stream: int = 0, max_trials: int = 10**7) -> GridPath:
    """Approximate quadrant excursion of duration 1.

    The path on [0, 1-delta] is a meander conditioned on its value at 1-delta
    lying in the window box (sampled endpoint-first: the box point is drawn
    from the free transition density, then a bridge to it is rejected until
    it stays in the quadrant).  Over [1-delta, 1] it is closed to the origin
    by a straight line.
    """
    n = cfg.steps(1.0)
    n_bridge = int(round((1.0 - window.delta) / cfg.dt))
    if not 0 < n_bridge < n:
        raise OutOfRange("delta must span at least one grid step")
    lo, hi = window.box
    vals, trials = bk.excursion_path(np.uint64(cfg.seed), stream, max_trials, n_bridge, n,
                                     cfg.dt, *cfg.chol, cfg.start_offset, lo, hi, *cfg.inv_sigma)
    if len(vals) == 0:
        raise Exhausted(max_trials, 0, "excursion bridge")
    return GridPath(_grid_times(n, cfg.dt), vals,
                    {"dt": cfg.dt, "kind": "excursion", "delta": window.delta, "C": window.C,
                     "trials": int(trials), "start_offset": cfg.start_offset})


@dataclass(frozen=True, eq=False)
class SnapshotBatch:
    """Accepted snapshot values plus the rejection bookkeeping of the run that produced them.

    ``trials`` and ``accepted`` cover every chunk that was run, so
    ``acceptance`` is unbiased even though only the first ``len(values)``
    acceptances are kept.
    """

    values: np.ndarray
    trials: int
    accepted: int

    @property
    def acceptance(self) -> float:
        return self.accepted / self.trials if self.trials else 0.0


def _collect(run, count, max_trials, threads, chunk, nsnaps, what) -> SnapshotBatch:
    res = search_chunks(run, lambda rs: sum(len(x[0]) for x in rs) >= count,
                        max_trials, threads, chunk)
    got = np.concatenate([r[0] for r in res]) if res else np.empty((0, nsnaps, 2))
    trials = int(sum(r[1] for r in res))
    if len(got) < count:
        raise Exhausted(trials, len(got), what)
    return SnapshotBatch(got[:count], trials, len(got))


def _snap_indices(cfg: BmConfig, times) -> np.ndarray:
    idx = np.array([int(round(t / cfg.dt)) for t in times], dtype=np.int64)
    if np.any(np.diff(idx) <= 0) or idx[0] < 1:
        raise ValueError("snapshot times must be increasing and positive")
    return idx


def meander_snapshots(cfg: BmConfig, times, count: int, T: float = 1.0, threads: int = 1,
                      max_trials: int = 10**10, chunk: int = 1 << 16) -> SnapshotBatch:
    """Values at ``times`` of ``count`` meanders, shape (count, len(times), 2)."""
    n = cfg.steps(T)
    snaps = _snap_indices(cfg, times)
    if snaps[-1] > n:
        raise ValueError("snapshot beyond the horizon")
    l11, l21, l22 = cfg.chol
    sig = math.sqrt(cfg.var)

    def run(start, size):
        return bk.meander_snapshots(np.uint64(cfg.seed), start, size, size, n, cfg.dt,
                                    l11, l21, l22, sig, cfg.start_offset, snaps)

    return _collect(run, count, max_trials, threads, chunk, len(snaps), "meander snapshots")


def excursion_snapshots(cfg: BmConfig, times, count: int,
                        window: ExcursionWindow = ExcursionWindow(), threads: int = 1,
                        max_trials: int = 10**10, chunk: int = 1 << 14) -> SnapshotBatch:
    """Values at ``times`` (all before 1-delta) of ``count`` approximate excursions."""
    n_bridge = int(round((1.0 - window.delta) / cfg.dt))
    snaps = _snap_indices(cfg, times)
    if snaps[-1] >= n_bridge:
        raise ValueError("snapshot times must precede 1 - delta")
    lo, hi = window.box
    l11, l21, l22 = cfg.chol
    ia, ib, ic = cfg.inv_sigma
    sig = math.sqrt(cfg.var)

    def run(start, size):
        return bk.excursion_snapshots(np.uint64(cfg.seed), start, size, size, n_bridge, cfg.dt,
                                      l11, l21, l22, sig, cfg.start_offset, lo, hi,
                                      ia, ib, ic, snaps)

    return _collect(run, count, max_trials, threads, chunk, len(snaps), "excursion snapshots")


@dataclass(frozen=True)
class FirstPassage:
    tau_u: float
    v_at_tau: float
    hit_order: str


def first_passage_pair(cfg: BmConfig, b: float, zeta: float, t_max: float = 1e4,
                       stream: int = 0) -> FirstPassage:
    """Which of U = b and V = zeta is reached first (grid resolution), and V at the U-passage."""
    if b <= 0 or zeta <= 0:
        raise OutOfRange("b and zeta must be positive")
    tau, v_at, code = bk.first_passage(np.uint64(cfg.seed), stream, 1, b, zeta, cfg.dt,
                                       int(round(t_max / cfg.dt)), *cfg.chol, math.sqrt(cfg.var))
    if code[0] == 0:
        raise Exhausted(1, 0, f"no passage before t_max={t_max}")
    return FirstPassage(float(tau[0]), float(v_at[0]), "U" if code[0] == 1 else "V")


def first_passage_batch(cfg: BmConfig, b: float, zeta: float, count: int, t_max: float = 1e4,
                        threads: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    max_steps = int(round(t_max / cfg.dt))
    l11, l21, l22 = cfg.chol
    sig = math.sqrt(cfg.var)

    def run(start, size):
        return bk.first_passage(np.uint64(cfg.seed), start, size, b, zeta, cfg.dt, max_steps,
                                l11, l21, l22, sig)

    parts = map_chunks(run, count, threads, 1 << 14)
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))


def write_density_csv(cfg: BmConfig, t: float, nodes: np.ndarray, fh: TextIO) -> None:
    """Tabulate endpoint_density on nodes x nodes as rows (u, v, f)."""
    out = csv.writer(fh)
    out.writerow(["u", "v", "f"])
    uu, vv = np.meshgrid(nodes, nodes, indexing="ij")
    f = endpoint_density(cfg, t, np.stack([uu.ravel(), vv.ravel()], axis=1))
    for u, v, val in zip(uu.ravel(), vv.ravel(), np.atleast_1d(f)):
        out.writerow([repr(float(u)), repr(float(v)), repr(float(val))])
