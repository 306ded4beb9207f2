"""Compiled inner loops shared by the word and sampling modules.

Symbol codes: 0 hamburger, 1 cheeseburger, 2 hamburger order,
3 cheeseburger order, 4 flexible order.
"""
import numpy as np
from numba import njit

from .rng import next_u64, stream_state

H, C, HO, CO, FO = 0, 1, 2, 3, 4


@njit(cache=True, nogil=True)
def match_codes(codes):
    """Partner position of every symbol (zero-based), -1 when unmatched."""
    n = codes.shape[0]
    partner = np.full(n, -1, np.int64)
    hs = np.empty(n, np.int64)
    cs = np.empty(n, np.int64)
    nh = 0
    nc = 0
    for k in range(n):
        s = codes[k]
        if s == H:
            hs[nh] = k
            nh += 1
        elif s == C:
            cs[nc] = k
            nc += 1
        else:
            j = -1
            if s == HO:
                if nh > 0:
                    nh -= 1
                    j = hs[nh]
            elif s == CO:
                if nc > 0:
                    nc -= 1
                    j = cs[nc]
            else:
                if nh > 0 and (nc == 0 or hs[nh - 1] > cs[nc - 1]):
                    nh -= 1
                    j = hs[nh]
                elif nc > 0:
                    nc -= 1
                    j = cs[nc]
            if j >= 0:
                partner[j] = k
                partner[k] = j
    return partner


@njit(cache=True, nogil=True)
def backward_counts(codes):
    """Symbol counts of the reduction of each backward suffix.

    Row j-1 holds (#H, #C, #h, #c, #F) of the reduced word of the last j
    symbols.  Surviving burgers in a backward reading are never cancelled
    later, so burgers only need counting; orders keep their positions so a
    newly read burger can cancel the leftmost compatible one.
    """
    n = codes.shape[0]
    out = np.zeros((n, 5), np.int64)
    hq = np.empty(n, np.int64)
    cq = np.empty(n, np.int64)
    fq = np.empty(n, np.int64)
    nh = 0
    nc = 0
    nf = 0
    nbh = 0
    nbc = 0
    for j in range(n):
        k = n - 1 - j
        s = codes[k]
        if s == HO:
            hq[nh] = k
            nh += 1
        elif s == CO:
            cq[nc] = k
            nc += 1
        elif s == FO:
            fq[nf] = k
            nf += 1
        elif s == H:
            if nh > 0 and (nf == 0 or hq[nh - 1] < fq[nf - 1]):
                nh -= 1
            elif nf > 0:
                nf -= 1
            else:
                nbh += 1
        else:
            if nc > 0 and (nf == 0 or cq[nc - 1] < fq[nf - 1]):
                nc -= 1
            elif nf > 0:
                nf -= 1
            else:
                nbc += 1
        out[j, 0] = nbh
        out[j, 1] = nbc
        out[j, 2] = nh
        out[j, 3] = nc
        out[j, 4] = nf
    return out


@njit(cache=True, nogil=True)
def draw_symbols(seed, stream, n, thr):
    s = stream_state(seed, stream)
    out = np.empty(n, np.uint8)
    for k in range(n):
        out[k] = _draw(s, thr)
    return out


@njit(inline="always", cache=True, nogil=True)
def _draw(s, thr):
    u = next_u64(s)
    if u < thr[0]:
        return H
    if u < thr[1]:
        return C
    if u < thr[2]:
        return HO
    if u < thr[3]:
        return CO
    return FO


@njit(cache=True, nogil=True)
def first_order_times(seed, start, count, cap, thr):
    """First index at which an order arrives with nothing to consume; -1 if censored."""
    out = np.empty(count, np.int64)
    hp = np.empty(cap + 1, np.int64)
    cp = np.empty(cap + 1, np.int64)
    for r in range(count):
        s = stream_state(seed, start + r)
        nh = 0
        nc = 0
        hit = -1
        for k in range(1, cap + 1):
            x = _draw(s, thr)
            if x == H:
                hp[nh] = k
                nh += 1
            elif x == C:
                cp[nc] = k
                nc += 1
            elif x == HO:
                if nh == 0:
                    hit = k
                    break
                nh -= 1
            elif x == CO:
                if nc == 0:
                    hit = k
                    break
                nc -= 1
            else:
                if nh == 0 and nc == 0:
                    hit = k
                    break
                if nc == 0 or (nh > 0 and hp[nh - 1] > cp[nc - 1]):
                    nh -= 1
                else:
                    nc -= 1
        out[r] = hit
    return out


@njit(cache=True, nogil=True)
def empty_reduction_search(seed, start, trials, length, thr, stop_after):
    """Rejection search for words of the given length with empty reduction.

    Returns (accepted stream indices, trials used).  A word is abandoned as
    soon as an order finds nothing to consume or the open burgers outnumber
    the remaining symbols.
    """
    hp = np.empty(length + 1, np.int64)
    cp = np.empty(length + 1, np.int64)
    hits = np.empty(min(stop_after, trials) if stop_after > 0 else 0, np.int64)
    n_hits = 0
    used = 0
    for r in range(trials):
        used += 1
        s = stream_state(seed, start + r)
        nh = 0
        nc = 0
        ok = True
        for k in range(1, length + 1):
            x = _draw(s, thr)
            if x == H:
                hp[nh] = k
                nh += 1
            elif x == C:
                cp[nc] = k
                nc += 1
            elif x == HO:
                if nh == 0:
                    ok = False
                    break
                nh -= 1
            elif x == CO:
                if nc == 0:
                    ok = False
                    break
                nc -= 1
            else:
                if nh == 0 and nc == 0:
                    ok = False
                    break
                if nc == 0 or (nh > 0 and hp[nh - 1] > cp[nc - 1]):
                    nh -= 1
                else:
                    nc -= 1
            if nh + nc > length - k:
                ok = False
                break
        if ok:
            if n_hits < hits.shape[0]:
                hits[n_hits] = start + r
            n_hits += 1
            if stop_after > 0 and n_hits >= stop_after:
                break
    return hits[: min(n_hits, hits.shape[0])], n_hits, used


@njit(cache=True, nogil=True)
def no_burger_search(seed, start, trials, length, thr):
    """Stream index of the first backward word with no burger in any suffix reduction."""
    hq = np.empty(length, np.int64)
    cq = np.empty(length, np.int64)
    fq = np.empty(length, np.int64)
    for r in range(trials):
        s = stream_state(seed, start + r)
        nh = 0
        nc = 0
        nf = 0
        ok = True
        # symbol j of the stream sits at index -(j+1)
        for j in range(length):
            x = _draw(s, thr)
            if x == HO:
                hq[nh] = j
                nh += 1
            elif x == CO:
                cq[nc] = j
                nc += 1
            elif x == FO:
                fq[nf] = j
                nf += 1
            elif x == H:
                if nh > 0 and (nf == 0 or hq[nh - 1] > fq[nf - 1]):
                    nh -= 1
                elif nf > 0:
                    nf -= 1
                else:
                    ok = False
                    break
            else:
                if nc > 0 and (nf == 0 or cq[nc - 1] > fq[nf - 1]):
                    nc -= 1
                elif nf > 0:
                    nf -= 1
                else:
                    ok = False
                    break
        if ok:
            return start + r, r + 1
    return -1, trials


@njit(cache=True, nogil=True)
def backward_word(seed, stream, length, thr):
    """Backward word drawn from a stream: stream symbol j sits at index -(j+1)."""
    fwd = draw_symbols(seed, stream, length, thr)
    return fwd[::-1].copy()


@njit(cache=True, nogil=True)
def burger_race(seed, start, count, m, k_max, thr, cap):
    """Backward reading race between hamburger and cheeseburger survivors.

    For each replica, reads symbols backward until m hamburgers or k_max
    cheeseburgers have survived (or ``cap`` symbols).  Returns the number of
    surviving cheeseburgers at the time the m-th hamburger survives, -1 when
    the k_max-th cheeseburger survives first, and -2 when neither happens
    within ``cap`` symbols.  For k <= k_max, J_m^H < J_k^C exactly when the
    returned value lies in [0, k).
    """
    out = np.empty(count, np.int64)
    hq = np.empty(cap, np.int64)
    cq = np.empty(cap, np.int64)
    fq = np.empty(cap, np.int64)
    for r in range(count):
        s = stream_state(seed, start + r)
        nh = 0
        nc = 0
        nf = 0
        bh = 0
        bc = 0
        res = -2
        for j in range(cap):
            x = _draw(s, thr)
            if x == HO:
                hq[nh] = j
                nh += 1
            elif x == CO:
                cq[nc] = j
                nc += 1
            elif x == FO:
                fq[nf] = j
                nf += 1
            elif x == H:
                if nh > 0 and (nf == 0 or hq[nh - 1] > fq[nf - 1]):
                    nh -= 1
                elif nf > 0:
                    nf -= 1
                else:
                    bh += 1
                    if bh == m:
                        res = bc
                        break
            else:
                if nc > 0 and (nf == 0 or cq[nc - 1] > fq[nf - 1]):
                    nc -= 1
                elif nf > 0:
                    nf -= 1
                else:
                    bc += 1
                    if bc >= k_max:
                        res = -1
                        break
        out[r] = res
    return out


@njit(cache=True, nogil=True)
def reduced_flex_counts(seed, start, count, lengths, thr):
    """Number of flexible orders in the reduction of iid prefixes.

    ``lengths`` must be increasing; row r holds the counts for replica r at
    each requested prefix length.
    """
    n_max = lengths[-1]
    out = np.zeros((count, lengths.shape[0]), np.int64)
    hp = np.empty(n_max + 1, np.int64)
    cp = np.empty(n_max + 1, np.int64)
    for r in range(count):
        s = stream_state(seed, start + r)
        nh = 0
        nc = 0
        nf = 0
        li = 0
        for k in range(1, n_max + 1):
            x = _draw(s, thr)
            if x == H:
                hp[nh] = k
                nh += 1
            elif x == C:
                cp[nc] = k
                nc += 1
            elif x == HO:
                if nh > 0:
                    nh -= 1
            elif x == CO:
                if nc > 0:
                    nc -= 1
            else:
                if nh == 0 and nc == 0:
                    nf += 1
                elif nc == 0 or (nh > 0 and hp[nh - 1] > cp[nc - 1]):
                    nh -= 1
                else:
                    nc -= 1
            if k == lengths[li]:
                out[r, li] = nf
                li += 1
    return out
