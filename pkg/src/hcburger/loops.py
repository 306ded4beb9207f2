"""Word-level loop structure: the forest of flexible-order intervals and loop-closing times."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import NotClosed, UnmatchedFlexible
from .words import MatchTable, Symbol, Word, reduce


@dataclass
class LoopComponent:
    """Interval [open_index, close_index] of a flexible order and its statistics.

    ``parent`` and ``children`` hold close indices of related components.
    """

    close_index: int
    open_index: int
    area: int
    boundary_len: int
    burger_type: Symbol
    parent: int | None = None
    children: list[int] = field(default_factory=list)

    def as_dict(self, forest: "LoopForest") -> dict:
        return {
            "open": self.open_index,
            "close": self.close_index,
            "area": self.area,
            "boundary_len": self.boundary_len,
            "burger_type": self.burger_type.name,
            "children": [forest.nodes[c].as_dict(forest) for c in self.children],
        }


@dataclass
class LoopForest:
    nodes: dict[int, LoopComponent]
    roots: list[int]

    def __len__(self) -> int:
        return len(self.nodes)

    def ancestors(self, close_index: int) -> list[int]:
        """Close indices of strict ancestors, innermost first."""
        out = []
        node = self.nodes[close_index].parent
        while node is not None:
            out.append(node)
            node = self.nodes[node].parent
        return out

    def containing(self, index: int) -> list[int]:
        """Close indices of all intervals [open, close] containing index, innermost first."""
        hits = [c for c, n in self.nodes.items() if n.open_index <= index <= c]
        return sorted(hits, key=lambda c: self.nodes[c].area)

    def to_json(self, **kwargs) -> str:
        return json.dumps([self.nodes[r].as_dict(self) for r in self.roots], **kwargs)


def _flex_positions(w: Word, m: MatchTable) -> np.ndarray:
    flex = np.flatnonzero(w.array == Symbol.FLEXIBLE_ORDER)
    bad = flex[m.partner[flex] < 0]
    if bad.size:
        raise UnmatchedFlexible(int(bad[0]) + w.origin)
    return flex


def loop_forest(w: Word, m: MatchTable) -> LoopForest:
    """One node per flexible order, nested by interval containment."""
    flex = _flex_positions(w, m)
    partner = m.partner
    arr = w.array
    nodes: dict[int, LoopComponent] = {}
    items = []
    for k in flex:
        j = int(partner[k])
        inner = partner[j : k + 1]
        # symbols of [j, k] whose match lies outside the interval survive the reduction
        survivors = int(np.count_nonzero((inner < j) | (inner > k)))
        close, open_ = int(k) + w.origin, j + w.origin
        nodes[close] = LoopComponent(close, open_, int(k - j), survivors + 1, Symbol(arr[j]))
        items.append((open_, close))
    roots = []
    stack: list[tuple[int, int]] = []
    for open_, close in sorted(items):
        while stack and stack[-1][1] < open_:
            stack.pop()
        if stack:
            parent = stack[-1][1]
            nodes[close].parent = parent
            nodes[parent].children.append(close)
        else:
            roots.append(close)
        stack.append((open_, close))
    return LoopForest(nodes, roots)


def next_exit(w: Word, m: MatchTable, i_star: int) -> int | None:
    """Smallest i > i_star with a flexible order at i and phi(i) < phi(i_star)."""
    if w[i_star] != Symbol.FLEXIBLE_ORDER:
        raise ValueError(f"index {i_star} is not a flexible order")
    phi_star = m.phi(i_star)
    if phi_star is None:
        raise UnmatchedFlexible(i_star)
    arr = w.array
    partner = m.partner
    start = i_star - w.origin + 1
    flex = np.flatnonzero(arr[start:] == Symbol.FLEXIBLE_ORDER) + start
    hit = flex[(partner[flex] >= 0) & (partner[flex] < phi_star - w.origin)]
    return int(hit[0]) + w.origin if hit.size else None


def closes_component(w: Word, m: MatchTable, i_star: int) -> bool | None:
    """Whether the next exit after i_star eats a burger of the other type.

    This is the word-level criterion for [phi(i_star), i_star - 1] to be a
    complementary component of a loop; None when there is no next exit.
    """
    nxt = next_exit(w, m, i_star)
    if nxt is None:
        return None
    return w[m.phi(nxt)] != w[m.phi(i_star)]


@dataclass(frozen=True)
class SurroundingLoops:
    base_index: int
    thetas: tuple[tuple[int, int], ...]


def surrounding_loops(w: Word, m: MatchTable, i: int, j_max: int | None = None) -> SurroundingLoops:
    """Loop-closing times around index i by the type-alternating recursion.

    theta_j is the j-th k > i carrying a flexible order with phi(k) < i whose
    matched burger type differs from that of the latest earlier such order in
    [i, k).  The first qualifying k has no predecessor and is always taken.
    """
    if not w.origin <= i <= w.end:
        raise IndexError(f"index {i} outside the word")
    arr = w.array
    partner = m.partner
    base = i - w.origin
    out = []
    prev_type = None
    for k in range(base, len(arr)):
        if arr[k] != Symbol.FLEXIBLE_ORDER:
            continue
        j = partner[k]
        if j < 0 or j >= base:
            continue
        btype = arr[j]
        if k > base and (prev_type is None or btype != prev_type):
            out.append((int(j) + w.origin, int(k) + w.origin))
            if j_max is not None and len(out) >= j_max:
                break
        prev_type = btype
    return SurroundingLoops(i, tuple(out))


def edge_count_check(w: Word) -> tuple[int, int]:
    """(map edges, quadrangulation edges) = (n, 2n) for a closed word of length 2n."""
    if not reduce(w).is_empty:
        raise NotClosed("the word does not reduce to the empty word")
    return len(w) // 2, len(w)
