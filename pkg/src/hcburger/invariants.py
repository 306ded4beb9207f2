"""Structural checks on single words; each returns the list of violated properties."""
from __future__ import annotations

import numpy as np

from .cone import ConeIndex, cone_detector, cone_times_from_word, lattice_path
from .loops import loop_forest, next_exit, surrounding_loops
from .words import MatchTable, Symbol, Word, match_indices, reduce, resolve_flex


def _crossing(pairs: np.ndarray) -> bool:
    """True when some two intervals (a, b), (c, d) with a < c < b < d cross."""
    if len(pairs) < 2:
        return False
    order = np.argsort(pairs[:, 0])
    stack: list[int] = []
    for a, b in pairs[order]:
        while stack and stack[-1] < a:
            stack.pop()
        if stack and stack[-1] < b:
            return True
        stack.append(b)
    return False


def match_violations(w: Word, m: MatchTable | None = None) -> list[str]:
    m = match_indices(w) if m is None else m
    arr = w.array
    partner = m.partner
    out = []
    k = np.flatnonzero(partner >= 0)
    j = partner[k]
    if np.any(partner[j] != k) or np.any(j == k):
        out.append("match is not an involution")
    burger_side = np.minimum(k, j)
    order_side = np.maximum(k, j)
    if np.any(arr[burger_side] > 1) or np.any(arr[order_side] < 2):
        out.append("burger does not precede its order")
    ob = arr[order_side]
    bb = arr[burger_side]
    typed = ob < 4
    if np.any(bb[typed] + 2 != ob[typed]):
        out.append("typed order matched to the wrong burger")
    for burger in (Symbol.HAMBURGER, Symbol.CHEESEBURGER):
        sel = (bb == burger) & (k < j)
        if _crossing(np.stack([k[sel], j[sel]], axis=1)):
            out.append(f"{burger.name} pairs cross")
    sel = (ob == Symbol.FLEXIBLE_ORDER) & (k < j)
    if _crossing(np.stack([k[sel], j[sel]], axis=1)):
        out.append("flexible intervals cross")
    red = reduce(w)
    if len(red) != int(np.count_nonzero(partner < 0)):
        out.append("survivors differ from unmatched symbols")
    if len(w) - len(red) != 2 * (len(k) // 2):
        out.append("length bookkeeping")
    if reduce(red.as_word()).text != red.text:
        out.append("reduction is not idempotent")
    return out


def path_criterion(w: Word, m: MatchTable) -> bool:
    """Walk of the Y-word stays in the closed quadrant and ends at the origin."""
    if not m.is_total:
        return False
    pts = lattice_path(resolve_flex(w, m)).points
    return bool((pts >= 0).all() and (pts[-1] == 0).all())


def cone_violations(w: Word, m: MatchTable, windows=(1, 3, 8)) -> list[str]:
    """Cone-record soundness and detector/scan agreement on a fully matched word."""
    out = []
    y = resolve_flex(w, m)
    path = lattice_path(y)
    pts = path.points
    recs = cone_times_from_word(w, m)
    flex = [i for i in w.indices() if w[i] == Symbol.FLEXIBLE_ORDER]
    for i, rec in zip(flex, recs):
        t, v = int(rec.t), int(rec.v)
        if v != m.phi(i) or t != i - 1:
            out.append("cone record times disagree with the match")
            continue
        seg = pts[v - path.start : t - path.start + 1]
        if (seg < pts[t - path.start]).any():
            out.append("cone record violates the cone inequalities")
        if not rec.degenerate and not rec.tie and rec.direction is None:
            out.append("nondegenerate record without direction")
    idx = ConeIndex(pts)
    gap = np.arange(len(pts)) - idx.entrance
    for win in windows:
        if win >= len(pts):
            continue
        det = cone_detector(path, win / path.n_scale)
        zeros = det.zero_mask()[win:]
        if not np.array_equal(zeros, gap[win:] >= win):
            out.append(f"detector zeros differ from cone scan (window {win})")
    return out


def loop_violations(w: Word, m: MatchTable) -> list[str]:
    out = []
    forest = loop_forest(w, m)
    for close, node in forest.nodes.items():
        if node.area != close - node.open_index:
            out.append("area identity")
        if node.boundary_len != len(reduce(w.sub(node.open_index, close))) + 1:
            out.append("boundary length identity")
        if node.parent is not None:
            par = forest.nodes[node.parent]
            if not (par.open_index < node.open_index and close < node.parent):
                out.append("child not strictly inside parent")
        if next_exit(w, m, close) != node.parent:
            out.append("next exit differs from the enclosing interval")
    roots_area = sum(forest.nodes[r].area for r in forest.roots)
    if roots_area > len(w):
        out.append("root areas exceed the word length")
    probe = range(w.origin, w.end + 1, max(1, len(w) // 8))
    for i in probe:
        got = surrounding_loops(w, m, i).thetas
        want = []
        prev = None
        for c in sorted(forest.containing(i)):
            node = forest.nodes[c]
            if node.open_index >= i:
                continue
            if c > i and (prev is None or node.burger_type != prev):
                want.append((node.open_index, c))
            prev = node.burger_type
        if list(got) != want:
            out.append("surrounding loops differ from forest ancestry")
    return out


def word_violations(w: Word, closed: bool) -> list[str]:
    """All checks for one word; ``closed`` words (empty reduction) get the path and loop checks."""
    m = match_indices(w)
    out = match_violations(w, m)
    empty = reduce(w).is_empty
    if len(w) % 2 == 0 and empty != path_criterion(w, m):
        out.append("empty reduction disagrees with the path criterion")
    if closed:
        if not empty:
            out.append("conditioned word does not reduce to the empty word")
            return out
        out += cone_violations(w, m)
        out += loop_violations(w, m)
    return out
