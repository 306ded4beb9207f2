"""Compiled samplers for correlated planar Brownian motion on a time grid.

``chol`` is the lower Cholesky factor (l11, l21, l22) of the per-unit-time
covariance.  Kernels whose names end in ``_snapshots`` take several grid
steps at once while the path is far from every barrier (at least six
standard deviations of the combined step, so a skipped grid point would have
crossed with probability below 1e-8); they only report values at requested
grid indices.  Full-path kernels check every grid point.
"""
import math

import numpy as np
from numba import njit

from .rng import next_double, next_normal_pair, stream_state

SKIP_SIGMAS = 6.0


@njit(inline="always", cache=True, nogil=True)
def _step(s, u, v, sd, l11, l21, l22):
    z1, z2 = next_normal_pair(s)
    return u + sd * l11 * z1, v + sd * (l21 * z1 + l22 * z2)


@njit(cache=True, nogil=True)
def free_path(seed, stream, nsteps, dt, l11, l21, l22, u0, v0):
    s = stream_state(seed, stream)
    out = np.empty((nsteps + 1, 2))
    out[0, 0] = u0
    out[0, 1] = v0
    sd = math.sqrt(dt)
    u = u0
    v = v0
    for k in range(nsteps):
        u, v = _step(s, u, v, sd, l11, l21, l22)
        out[k + 1, 0] = u
        out[k + 1, 1] = v
    return out


@njit(cache=True, nogil=True)
def _bridge_fill(s, out, k0, k1, dt, l11, l21, l22, wu, wv, check):
    """Fill out[k0+1 .. k1] with a bridge from out[k0] to (wu, wv); False on quadrant exit."""
    u = out[k0, 0]
    v = out[k0, 1]
    for k in range(k0, k1):
        rem = (k1 - k) * dt
        frac = dt / rem
        sd = math.sqrt(dt * (rem - dt) / rem) if rem > dt else 0.0
        z1, z2 = next_normal_pair(s)
        u = u + (wu - u) * frac + sd * l11 * z1
        v = v + (wv - v) * frac + sd * (l21 * z1 + l22 * z2)
        if k + 1 == k1:
            u = wu
            v = wv
        out[k + 1, 0] = u
        out[k + 1, 1] = v
        if check and (u < 0.0 or v < 0.0):
            return False
    return True


@njit(cache=True, nogil=True)
def bridge_path(seed, stream, nsteps, dt, l11, l21, l22, u0, v0, u1, v1, check, max_trials):
    """Bridge from (u0, v0) to (u1, v1); with ``check`` it is rejected until it stays in the quadrant."""
    out = np.empty((nsteps + 1, 2))
    for r in range(max_trials):
        s = stream_state(seed, stream + r)
        out[0, 0] = u0
        out[0, 1] = v0
        if _bridge_fill(s, out, 0, nsteps, dt, l11, l21, l22, u1, v1, check):
            return out, r + 1
    return out[:0], max_trials


@njit(cache=True, nogil=True)
def meander_path(seed, stream, max_trials, nsteps, dt, l11, l21, l22, start):
    """First stream (from ``stream``) whose full grid path stays in the quadrant."""
    out = np.empty((nsteps + 1, 2))
    sd = math.sqrt(dt)
    for r in range(max_trials):
        s = stream_state(seed, stream + r)
        u = start
        v = start
        out[0, 0] = u
        out[0, 1] = v
        ok = True
        for k in range(nsteps):
            u, v = _step(s, u, v, sd, l11, l21, l22)
            if u < 0.0 or v < 0.0:
                ok = False
                break
            out[k + 1, 0] = u
            out[k + 1, 1] = v
        if ok:
            return out, r + 1
    return out[:0], max_trials


@njit(cache=True, nogil=True)
def _walk_skip(s, u, v, k0, k1, snaps, j, res, dt, l11, l21, l22, sig):
    """Free walk from grid index k0 to k1 killed on leaving the quadrant.

    Values at grid indices listed in ``snaps`` (from position j on) are
    written to ``res``.  Returns (alive, u, v, j).
    """
    k = k0
    while k < k1:
        lim = k1
        if j < snaps.shape[0] and snaps[j] < lim:
            lim = snaps[j]
        g = min(u, v) / (SKIP_SIGMAS * sig)
        m = int(g * g / dt)
        if m < 1:
            m = 1
        if m > lim - k:
            m = lim - k
        u, v = _step(s, u, v, math.sqrt(m * dt), l11, l21, l22)
        k += m
        if u < 0.0 or v < 0.0:
            return False, u, v, j
        if j < snaps.shape[0] and k == snaps[j]:
            res[j, 0] = u
            res[j, 1] = v
            j += 1
    return True, u, v, j


@njit(cache=True, nogil=True)
def meander_snapshots(seed, start, n_accept, max_trials, nsteps, dt, l11, l21, l22, sig, z0, snaps):
    """Values at grid indices ``snaps`` of accepted meanders, and trials used."""
    res = np.empty((n_accept, snaps.shape[0], 2))
    buf = np.empty((snaps.shape[0], 2))
    acc = 0
    r = 0
    while acc < n_accept and r < max_trials:
        s = stream_state(seed, start + r)
        r += 1
        ok, u, v, j = _walk_skip(s, z0, z0, 0, nsteps, snaps, 0, buf, dt, l11, l21, l22, sig)
        if ok:
            res[acc] = buf
            acc += 1
    return res[:acc], r


@njit(cache=True, nogil=True)
def survival_table(seed, us, vs, n_paths, nsteps, dt, l11, l21, l22, sig):
    """Monte Carlo probability of staying in the quadrant for nsteps, per grid node."""
    out = np.zeros((us.shape[0], vs.shape[0]))
    snaps = np.empty(0, np.int64)
    buf = np.empty((0, 2))
    for a in range(us.shape[0]):
        for b in range(vs.shape[0]):
            if us[a] <= 0.0 or vs[b] <= 0.0:
                continue
            alive = 0
            base = (a * vs.shape[0] + b) * n_paths
            for r in range(n_paths):
                s = stream_state(seed, base + r)
                ok, u, v, j = _walk_skip(s, us[a], vs[b], 0, nsteps, snaps, 0, buf,
                                         dt, l11, l21, l22, sig)
                if ok:
                    alive += 1
            out[a, b] = alive / n_paths
    return out


@njit(inline="always", cache=True, nogil=True)
def _propose_endpoint(s, lo, hi, z0, horizon, ia, ib, ic):
    """Point of the box [lo, hi]^2 with density proportional to the free Gaussian transition.

    (ia, ib, ic) are the entries of the inverse covariance [[ia, ib], [ib, ic]].
    """
    while True:
        wu = lo + (hi - lo) * next_double(s)
        wv = lo + (hi - lo) * next_double(s)
        du = wu - z0
        dv = wv - z0
        q = (ia * du * du + 2.0 * ib * du * dv + ic * dv * dv) / (2.0 * horizon)
        if next_double(s) < math.exp(-q):
            return wu, wv


@njit(cache=True, nogil=True)
def excursion_path(seed, stream, max_trials, n_bridge, nsteps, dt, l11, l21, l22,
                   z0, lo, hi, ia, ib, ic):
    """Full-grid excursion approximation: conditioned bridge to a box point, then a ramp to 0."""
    out = np.empty((nsteps + 1, 2))
    horizon = n_bridge * dt
    for r in range(max_trials):
        s = stream_state(seed, stream + r)
        wu, wv = _propose_endpoint(s, lo, hi, z0, horizon, ia, ib, ic)
        out[0, 0] = z0
        out[0, 1] = z0
        if _bridge_fill(s, out, 0, n_bridge, dt, l11, l21, l22, wu, wv, True):
            tail = nsteps - n_bridge
            for k in range(1, tail + 1):
                f = 1.0 - k / tail
                out[n_bridge + k, 0] = wu * f
                out[n_bridge + k, 1] = wv * f
            return out, r + 1
    return out[:0], max_trials


@njit(cache=True, nogil=True)
def excursion_snapshots(seed, start, n_accept, max_trials, n_bridge, dt, l11, l21, l22, sig,
                        z0, lo, hi, ia, ib, ic, snaps):
    """Snapshots (grid indices < n_bridge) of conditioned bridges to box points."""
    res = np.empty((n_accept, snaps.shape[0], 2))
    buf = np.empty((snaps.shape[0], 2))
    horizon = n_bridge * dt
    acc = 0
    r = 0
    while acc < n_accept and r < max_trials:
        s = stream_state(seed, start + r)
        r += 1
        wu, wv = _propose_endpoint(s, lo, hi, z0, horizon, ia, ib, ic)
        u = z0
        v = z0
        k = 0
        j = 0
        ok = True
        while k < n_bridge:
            lim = n_bridge
            if j < snaps.shape[0] and snaps[j] < lim:
                lim = snaps[j]
            rem = (n_bridge - k) * dt
            g = min(u, v) / (SKIP_SIGMAS * sig)
            m = int(g * g / dt)
            if m < 1:
                m = 1
            if m > lim - k:
                m = lim - k
            # the mean drifts toward the endpoint; keep the margin along the whole skip
            while m > 1:
                h = m * dt
                low = min(u + min(0.0, wu - u) * h / rem, v + min(0.0, wv - v) * h / rem)
                if low >= SKIP_SIGMAS * sig * math.sqrt(h):
                    break
                m //= 2
            h = m * dt
            sd = math.sqrt(max(h * (rem - h) / rem, 0.0))
            z1, z2 = next_normal_pair(s)
            u = u + (wu - u) * h / rem + sd * l11 * z1
            v = v + (wv - v) * h / rem + sd * (l21 * z1 + l22 * z2)
            k += m
            if u < 0.0 or v < 0.0:
                ok = False
                break
            if j < snaps.shape[0] and k == snaps[j]:
                buf[j, 0] = u
                buf[j, 1] = v
                j += 1
        if ok:
            res[acc] = buf
            acc += 1
    return res[:acc], r


@njit(cache=True, nogil=True)
def first_passage(seed, start, count, b, zeta, dt, max_steps, l11, l21, l22, sig):
    """Race between U reaching b and V reaching zeta, from the origin.

    Returns per replica: passage time, V at the U-passage (nan otherwise),
    and an outcome code (1 = U first, 2 = V first, 0 = undecided by max_steps).
    """
    tau = np.empty(count)
    v_at = np.empty(count)
    code = np.empty(count, np.int64)
    for r in range(count):
        s = stream_state(seed, start + r)
        u = 0.0
        v = 0.0
        k = 0
        c = 0
        while k < max_steps:
            g = min(b - u, zeta - v) / (SKIP_SIGMAS * sig)
            m = int(g * g / dt)
            if m < 1:
                m = 1
            if m > max_steps - k:
                m = max_steps - k
            u, v = _step(s, u, v, math.sqrt(m * dt), l11, l21, l22)
            k += m
            if u >= b:
                c = 1
                break
            if v >= zeta:
                c = 2
                break
        tau[r] = k * dt
        v_at[r] = v if c == 1 else np.nan
        code[r] = c
    return tau, v_at, code
