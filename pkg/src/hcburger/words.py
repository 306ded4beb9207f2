"""Burger/order alphabet, words, reduction to normal form and matching."""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import CodecError, NotReached, UnmatchedFlexible
from .kernels import backward_counts, match_codes


class Symbol(IntEnum):
    HAMBURGER = 0
    CHEESEBURGER = 1
    HAMBURGER_ORDER = 2
    CHEESEBURGER_ORDER = 3
    FLEXIBLE_ORDER = 4

    @property
    def is_burger(self) -> bool:
        return self <= Symbol.CHEESEBURGER

    @property
    def is_order(self) -> bool:
        return self >= Symbol.HAMBURGER_ORDER

    @property
    def char(self) -> str:
        return SYMBOL_CHARS[self]


SYMBOL_CHARS = "HChcF"
_CHAR_CODE = {ch: i for i, ch in enumerate(SYMBOL_CHARS)}
BURGERS = (Symbol.HAMBURGER, Symbol.CHEESEBURGER)
ORDERS = (Symbol.HAMBURGER_ORDER, Symbol.CHEESEBURGER_ORDER, Symbol.FLEXIBLE_ORDER)


def _encode(text: str) -> bytes:
    try:
        return bytes(_CHAR_CODE[ch] for ch in text)
    except KeyError as exc:
        raise CodecError(f"invalid symbol {exc.args[0]!r} in word text {text!r}") from None


def _decode(codes: bytes) -> str:
    return "".join(SYMBOL_CHARS[b] for b in codes)


@dataclass(frozen=True)
class Word:
    """A finite run of symbols X_origin ... X_{origin+len-1}.

    Symbols are stored as one byte each (the ``Symbol`` value).  Forward words
    use origin 1; backward words ending at -1 use origin ``-len``.
    """

    codes: bytes
    origin: int = 1

    def __post_init__(self):
        if self.codes and max(self.codes) > 4:
            raise CodecError("symbol codes must lie in 0..4")

    @classmethod
    def from_text(cls, text: str, origin: int = 1) -> "Word":
        return cls(_encode(text), origin)

    @classmethod
    def backward_from_text(cls, text: str) -> "Word":
        """Word whose last symbol sits at index -1."""
        return cls(_encode(text), -len(text))

    @classmethod
    def from_symbols(cls, symbols: Iterable[int], origin: int = 1) -> "Word":
        return cls(bytes(int(s) for s in symbols), origin)

    @classmethod
    def from_array(cls, arr: np.ndarray, origin: int = 1) -> "Word":
        return cls(np.asarray(arr, dtype=np.uint8).tobytes(), origin)

    @property
    def text(self) -> str:
        return _decode(self.codes)

    @property
    def array(self) -> np.ndarray:
        """Read-only uint8 view of the codes."""
        return np.frombuffer(self.codes, dtype=np.uint8)

    @property
    def symbols(self) -> tuple[Symbol, ...]:
        return tuple(Symbol(b) for b in self.codes)

    @property
    def end(self) -> int:
        """Index of the last symbol."""
        return self.origin + len(self.codes) - 1

    def __len__(self) -> int:
        return len(self.codes)

    def __getitem__(self, index: int) -> Symbol:
        pos = index - self.origin
        if not 0 <= pos < len(self.codes):
            raise IndexError(f"index {index} outside [{self.origin}, {self.end}]")
        return Symbol(self.codes[pos])

    def indices(self) -> range:
        return range(self.origin, self.origin + len(self.codes))

    def sub(self, a: int, b: int) -> "Word":
        """The sub-word X_a ... X_b (inclusive), keeping the original indices."""
        a = max(a, self.origin)
        b = min(b, self.end)
        if b < a:
            return Word(b"", a)
        return Word(self.codes[a - self.origin : b - self.origin + 1], a)

    def concat(self, other: "Word") -> "Word":
        return Word(self.codes + other.codes, self.origin)

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class ReducedWord:
    """Normal form: an order block followed by a burger block."""

    orders: bytes = b""
    burgers: bytes = b""

    def __post_init__(self):
        if self.orders and (min(self.orders) < 2 or max(self.orders) > 4):
            raise ValueError("order block may only contain order symbols")
        if self.burgers and max(self.burgers) > 1:
            raise ValueError("burger block may only contain burger symbols")

    @classmethod
    def from_text(cls, orders: str = "", burgers: str = "") -> "ReducedWord":
        return cls(_encode(orders), _encode(burgers))

    @property
    def text(self) -> str:
        return _decode(self.orders) + _decode(self.burgers)

    @property
    def orders_text(self) -> str:
        return _decode(self.orders)

    @property
    def burgers_text(self) -> str:
        return _decode(self.burgers)

    def as_word(self, origin: int = 1) -> Word:
        return Word(self.orders + self.burgers, origin)

    def count(self, symbol: Symbol) -> int:
        block = self.burgers if symbol.is_burger else self.orders
        return block.count(int(symbol))

    @property
    def is_empty(self) -> bool:
        return not self.orders and not self.burgers

    def __len__(self) -> int:
        return len(self.orders) + len(self.burgers)


EMPTY = ReducedWord()


@dataclass(frozen=True, eq=False)
class MatchTable:
    """The match involution of a finite word.

    ``partner[k]`` is the zero-based position matched with position k, or -1.
    Public accessors use the word's own indices.
    """

    partner: np.ndarray
    origin: int = 1

    def phi(self, index: int) -> int | None:
        j = self.partner[index - self.origin]
        return None if j < 0 else int(j) + self.origin

    @cached_property
    def pairs(self) -> Mapping[int, int]:
        idx = np.flatnonzero(self.partner >= 0)
        return {int(k) + self.origin: int(self.partner[k]) + self.origin for k in idx}

    @cached_property
    def unmatched(self) -> frozenset[int]:
        return frozenset(int(k) + self.origin for k in np.flatnonzero(self.partner < 0))

    @property
    def is_total(self) -> bool:
        return bool((self.partner >= 0).all())

    def __len__(self) -> int:
        return len(self.partner)


def reduce(w: Word) -> ReducedWord:
    """Normal form of w under burger/order cancellation and commutation."""
    arr = w.array
    if arr.size == 0:
        return EMPTY
    partner = match_codes(arr)
    survivors = arr[partner < 0]
    is_order = survivors >= 2
    return ReducedWord(survivors[is_order].tobytes(), survivors[~is_order].tobytes())


def monoid_concat(a: ReducedWord, b: ReducedWord) -> ReducedWord:
    """reduce(a || b) without re-reading a's order block.

    b's orders eat a's burgers by the same rules as ``reduce``; survivors of
    b's orders join a's order block and b's burgers go on top of what is left.
    """
    stack = list(a.burgers)
    ham = [k for k, s in enumerate(stack) if s == Symbol.HAMBURGER]
    cheese = [k for k, s in enumerate(stack) if s == Symbol.CHEESEBURGER]
    eaten = set()
    extra_orders = bytearray()
    for o in b.orders:
        if o == Symbol.HAMBURGER_ORDER:
            pool = ham
        elif o == Symbol.CHEESEBURGER_ORDER:
            pool = cheese
        elif ham and (not cheese or ham[-1] > cheese[-1]):
            pool = ham
        else:
            pool = cheese
        if pool:
            eaten.add(pool.pop())
        else:
            extra_orders.append(o)
    left = bytes(s for k, s in enumerate(stack) if k not in eaten)
    return ReducedWord(a.orders + bytes(extra_orders), left + b.burgers)


def match_indices(w: Word) -> MatchTable:
    partner = match_codes(w.array) if len(w) else np.empty(0, np.int64)
    partner.flags.writeable = False
    return MatchTable(partner, w.origin)


def resolve_flex(w: Word, m: MatchTable) -> Word:
    """The Y-word: each flexible order takes the type of the burger it eats."""
    arr = w.array.copy()
    flex = np.flatnonzero(arr == Symbol.FLEXIBLE_ORDER)
    if flex.size == 0:
        return w
    partners = m.partner[flex]
    if (partners < 0).any():
        raise UnmatchedFlexible(int(flex[np.argmax(partners < 0)]) + w.origin)
    arr[flex] = arr[partners] + 2
    return Word(arr.tobytes(), w.origin)


@dataclass(frozen=True)
class CountVector:
    n_hamburger: int
    n_cheeseburger: int
    n_hamburger_order: int
    n_cheeseburger_order: int
    n_flexible_order: int
    d: int
    d_star: int
    h: int
    c: int
    o: int
    c_f: int
    r: Fraction


def counts(w: Word) -> CountVector:
    raw = np.bincount(w.array, minlength=5) if len(w) else np.zeros(5, int)
    nH, nC, nh, nc, nF = (int(x) for x in raw)
    red = reduce(w)
    h = red.orders.count(Symbol.HAMBURGER_ORDER)
    c = red.orders.count(Symbol.CHEESEBURGER_ORDER)
    o = h + red.orders.count(Symbol.FLEXIBLE_ORDER) + 1
    first_flex = red.orders.find(bytes([Symbol.FLEXIBLE_ORDER]))
    head = red.orders if first_flex < 0 else red.orders[:first_flex]
    c_f = head.count(Symbol.CHEESEBURGER_ORDER)
    return CountVector(nH, nC, nh, nc, nF, nH - nh, nC - nc, h, c, o, c_f, Fraction(c_f, o))


def _suffix_counts(w: Word) -> np.ndarray:
    return backward_counts(w.array) if len(w) else np.zeros((0, 5), np.int64)


def backward_J(w: Word) -> int | None:
    """Smallest j such that the reduction of X_{-j} ... X_{-1} holds a burger.

    The word is read from its last symbol; j counts symbols read.
    """
    tab = _suffix_counts(w)
    has_burger = np.flatnonzero(tab[:, 0] + tab[:, 1] > 0)
    return int(has_burger[0]) + 1 if has_burger.size else None


def _backward_first(w: Word, m: int, burger_col: int, other_burger: int, other_order: int):
    if m < 1:
        raise ValueError("m must be positive")
    tab = _suffix_counts(w)
    hit = np.flatnonzero(tab[:, burger_col] >= m)
    if hit.size == 0:
        raise NotReached(f"fewer than {m} backward survivors of the requested type")
    j = int(hit[0])
    return j + 1, int(tab[j, other_burger] - tab[j, other_order])


def backward_JH(w: Word, m: int) -> tuple[int, int]:
    """(J, L): first backward length with m surviving hamburgers and d* there."""
    return _backward_first(w, m, 0, 1, 3)


def backward_JC(w: Word, m: int) -> tuple[int, int]:
    """(J, L): first backward length with m surviving cheeseburgers and d there."""
    return _backward_first(w, m, 1, 0, 2)
