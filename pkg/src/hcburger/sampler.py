"""Random words under the iid symbol law and rejection samplers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import Exhausted, OutOfRange
from .parallel import map_chunks, search_chunks
from .rng import uniform_thresholds
from .words import Word


@dataclass(frozen=True)
class ModelParams:
    p: float
    q: float
    kappa: float
    gamma: float
    mu: float

    @property
    def symbol_probs(self) -> np.ndarray:
        """Probabilities of (H, C, h, c, F)."""
        p = self.p
        return np.array([0.25, 0.25, (1 - p) / 4, (1 - p) / 4, p / 2])

    @property
    def thresholds(self) -> np.ndarray:
        return uniform_thresholds(self.symbol_probs)


def derive_params(p: float) -> ModelParams:
    """Cluster weight, SLE/LQG parameters and the cone exponent for intensity p."""
    if not 0.0 < p <= 0.5:
        raise OutOfRange(f"p must lie in (0, 1/2], got {p}")
    mu = math.pi / (2.0 * (math.pi - math.atan(math.sqrt(1.0 - 2.0 * p) / p)))
    kappa = 8.0 * mu
    return ModelParams(
        p=p,
        q=4.0 * p * p / (1.0 - p) ** 2,
        kappa=kappa,
        gamma=4.0 / math.sqrt(kappa),
        mu=mu,
    )


def iid_word(params: ModelParams, n: int, origin: int = 1, seed: int = 0,
             stream: int = 0) -> Word:
    if n < 0:
        raise ValueError("length must be nonnegative")
    codes = kernels.draw_symbols(np.uint64(seed), stream, n, params.thresholds)
    return Word(codes.tobytes(), origin)


@dataclass(frozen=True)
class SamplerReport:
    word: Word
    trials: int
    seed: int
    acceptance_estimate: float


def _first_hit(params, length, seed, max_trials, threads):
    thr = params.thresholds

    def run(start, count):
        hits, n_hits, used = kernels.empty_reduction_search(
            np.uint64(seed), start, count, length, thr, 1)
        return hits, used

    res = search_chunks(run, lambda rs: len(rs[-1][0]) > 0, max_trials, threads)
    used = sum(r[1] for r in res)
    if not res or len(res[-1][0]) == 0:
        raise Exhausted(max_trials, 0, f"word length {length}")
    return int(res[-1][0][0]), used


def sample_empty_reduction(params: ModelParams, n: int, seed: int,
                           max_trials: int = 10**8, threads: int = 1) -> SamplerReport:
    """A word of length 2n with empty reduction, by rejection."""
    if n < 1:
        raise ValueError("n must be at least 1")
    stream, trials = _first_hit(params, 2 * n, seed, max_trials, threads)
    codes = kernels.draw_symbols(np.uint64(seed), stream, 2 * n, params.thresholds)
    return SamplerReport(Word(codes.tobytes(), 1), trials, seed, 1.0 / trials)


def sample_empty_reductions(params: ModelParams, n: int, count: int, seed: int,
                            max_trials: int = 10**10, threads: int = 1,
                            chunk: int = 1 << 18) -> tuple[list[Word], int]:
    """``count`` independent words of length 2n with empty reduction.

    Returns the words and the number of trials consumed up to the last
    acceptance.
    """
    thr = params.thresholds
    length = 2 * n

    def run(start, size):
        hits, n_hits, _ = kernels.empty_reduction_search(
            np.uint64(seed), start, size, length, thr, size)
        return hits

    res = search_chunks(run, lambda rs: sum(len(h) for h in rs) >= count,
                        max_trials, threads, chunk)
    streams = np.concatenate(res)[:count] if res else np.empty(0, np.int64)
    if len(streams) < count:
        raise Exhausted(max_trials, len(streams), f"word length {length}")
    words = [Word(kernels.draw_symbols(np.uint64(seed), int(s), length, thr).tobytes(), 1)
             for s in streams]
    return words, int(streams[-1]) + 1


def empty_reduction_hits(params: ModelParams, n: int, trials: int, seed: int,
                         threads: int = 1, start: int = 0) -> int:
    """Number of length-2n iid words with empty reduction among streams start .. start+trials-1."""
    thr = params.thresholds

    def run(s, size):
        return kernels.empty_reduction_search(np.uint64(seed), start + s, size, 2 * n, thr, 0)[1]

    return int(sum(map_chunks(run, trials, threads, 1 << 20)))


def sample_no_burgers_backward(params: ModelParams, n: int, seed: int,
                               max_trials: int = 10**8) -> SamplerReport:
    """A backward word X_{-n} ... X_{-1} none of whose suffixes reduce to contain a burger."""
    if n < 1:
        raise ValueError("n must be at least 1")
    thr = params.thresholds
    stream, used = kernels.no_burger_search(np.uint64(seed), 0, max_trials, n, thr)
    if stream < 0:
        raise Exhausted(max_trials, 0, f"backward length {n}")
    codes = kernels.backward_word(np.uint64(seed), stream, n, thr)
    return SamplerReport(Word(codes.tobytes(), -n), int(used), seed, 1.0 / used)


def first_order_time(params: ModelParams, seed: int, cap: int, stream: int = 0) -> int | None:
    """Smallest i such that X_1 ... X_i reduces to a word containing an order.

    Returns None if that does not happen within ``cap`` symbols.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    out = kernels.first_order_times(np.uint64(seed), stream, 1, cap, params.thresholds)
    return None if out[0] < 0 else int(out[0])


def first_order_times(params: ModelParams, replicas: int, cap: int, seed: int,
                      threads: int = 1) -> np.ndarray:
    """Vector of first-order times for replicas 0..replicas-1 (-1 = censored)."""
    thr = params.thresholds

    def run(start, count):
        return kernels.first_order_times(np.uint64(seed), start, count, cap, thr)

    return np.concatenate(map_chunks(run, replicas, threads))


def empty_reduction_probability(p: float, length: int) -> float:
    """Exact P(reduce(X_1 ... X_length) is empty) for iid symbols.

    Dynamic programming over burger stacks (tuples of burger codes, bottom
    first); any order that finds nothing to eat kills the path, and stacks
    taller than the remaining length are dropped.
    """
    probs = derive_params(p).symbol_probs
    states: dict[tuple, float] = {(): 1.0}
    for k in range(length):
        left = length - k - 1
        nxt: dict[tuple, float] = {}
        for stack, pr in states.items():
            for code, q in enumerate(probs):
                if code < 2:
                    new = stack + (code,)
                else:
                    want = (code - 2,) if code < 4 else (0, 1)
                    pos = next((j for j in range(len(stack) - 1, -1, -1) if stack[j] in want), -1)
                    if pos < 0:
                        continue
                    new = stack[:pos] + stack[pos + 1 :]
                if len(new) <= left:
                    nxt[new] = nxt.get(new, 0.0) + pr * q
        states = nxt
    return states.get((), 0.0)
