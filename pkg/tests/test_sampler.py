import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from hcburger.errors import Exhausted, OutOfRange
from hcburger.invariants import path_criterion
from hcburger.sampler import (derive_params, empty_reduction_hits, empty_reduction_probability,
                              first_order_time, first_order_times, iid_word,
                              sample_empty_reduction, sample_empty_reductions,
                              sample_no_burgers_backward)
from hcburger.words import Symbol, Word, backward_J, match_indices, reduce

from oracles import all_words, rewrite_normal_forms, word_weight

ORDERS = {Symbol.HAMBURGER_ORDER, Symbol.CHEESEBURGER_ORDER, Symbol.FLEXIBLE_ORDER}


def exact_empty_law(length, p):
    law = {t: word_weight(t, p) for t in all_words(length) if rewrite_normal_forms(t) == {""}}
    return law


class TestParams:
    def test_critical_point(self):
        par = derive_params(1 / 3)
        assert par.mu == pytest.approx(0.75, abs=1e-12)
        assert par.kappa == pytest.approx(6.0, abs=1e-12)
        assert par.q == pytest.approx(1.0, abs=1e-12)

    def test_boundary(self):
        par = derive_params(0.5)
        assert (par.mu, par.kappa) == (pytest.approx(0.5), pytest.approx(4.0))

    def test_quarter(self):
        par = derive_params(0.25)
        assert par.q == pytest.approx(4 / 9)
        assert par.mu == pytest.approx(0.8221, abs=1e-4)
        assert par.kappa == pytest.approx(6.577, abs=1e-3)

    @given(st.floats(1e-3, 0.5))
    def test_dictionary(self, p):
        par = derive_params(p)
        assert abs(par.q - (2 + 2 * math.cos(8 * math.pi / par.kappa))) < 1e-9
        assert par.gamma == pytest.approx(4 / math.sqrt(par.kappa))
        assert 0.5 - 1e-12 <= par.mu < 1
        assert par.symbol_probs.sum() == pytest.approx(1.0)

    @pytest.mark.parametrize("p", [0.0, -0.1, 0.51, 1.0])
    def test_out_of_range(self, p):
        with pytest.raises(OutOfRange):
            derive_params(p)


class TestIidWord:
    def test_empty(self):
        assert len(iid_word(derive_params(1 / 3), 0)) == 0

    def test_frequencies(self):
        par = derive_params(1 / 3)
        w = iid_word(par, 10**6, seed=5)
        freq = np.bincount(w.array, minlength=5) / len(w)
        se = np.sqrt(par.symbol_probs * (1 - par.symbol_probs) / len(w))
        assert np.all(np.abs(freq - par.symbol_probs) < 3 * se)

    def test_deterministic(self):
        par = derive_params(0.2)
        assert iid_word(par, 500, seed=9) == iid_word(par, 500, seed=9)
        assert iid_word(par, 500, seed=9) != iid_word(par, 500, seed=10)

    def test_prefix_stable(self):
        par = derive_params(0.2)
        assert iid_word(par, 1000, seed=3).text.startswith(iid_word(par, 100, seed=3).text)


class TestExactProbability:
    @pytest.mark.parametrize("length", [2, 4, 6, 8])
    def test_dp_matches_enumeration(self, length):
        for p in (1 / 3, 0.1):
            brute = sum(exact_empty_law(length, p).values())
            assert empty_reduction_probability(p, length) == pytest.approx(brute, rel=1e-12)

    def test_odd_length_is_impossible(self):
        assert empty_reduction_probability(1 / 3, 5) == 0.0


class TestEmptyReduction:
    def test_single_pair_support(self):
        par = derive_params(1 / 3)
        seen = {sample_empty_reduction(par, 1, seed=s).word.text for s in range(200)}
        assert seen == {"Hh", "HF", "Cc", "CF"}

    def test_accepted_word_is_empty_and_in_quadrant(self):
        par = derive_params(1 / 3)
        words, _ = sample_empty_reductions(par, 20, 30, seed=4)
        for w in words:
            assert reduce(w).is_empty
            assert path_criterion(w, match_indices(w))

    def test_report_bookkeeping(self):
        rep = sample_empty_reduction(derive_params(1 / 3), 3, seed=1)
        assert rep.acceptance_estimate == pytest.approx(1 / rep.trials)
        assert rep.seed == 1 and len(rep.word) == 6

    def test_exhausted(self):
        with pytest.raises(Exhausted):
            sample_empty_reduction(derive_params(1 / 3), 200, seed=0, max_trials=1000)

    def test_acceptance_rate_at_n5(self):
        exact = empty_reduction_probability(1 / 3, 10)
        hits = empty_reduction_hits(derive_params(1 / 3), 5, 10**6, seed=2)
        assert exact / 3 < hits / 10**6 < 3 * exact
        # much tighter than the factor-3 requirement
        assert abs(hits - 10**6 * exact) < 4 * math.sqrt(10**6 * exact)

    def test_hits_are_additive_over_offsets(self):
        par = derive_params(1 / 3)
        whole = empty_reduction_hits(par, 3, 40000, seed=8)
        parts = (empty_reduction_hits(par, 3, 15000, seed=8)
                 + empty_reduction_hits(par, 3, 25000, seed=8, start=15000))
        assert whole == parts

    def test_thread_count_does_not_change_results(self):
        par = derive_params(1 / 3)
        a, ta = sample_empty_reductions(par, 4, 50, seed=6, threads=1, chunk=4096)
        b, tb = sample_empty_reductions(par, 4, 50, seed=6, threads=3, chunk=4096)
        assert [w.text for w in a] == [w.text for w in b] and ta == tb

    def test_conditional_law_length_four(self):
        p = 1 / 3
        law = exact_empty_law(4, p)
        total = sum(law.values())
        words, _ = sample_empty_reductions(derive_params(p), 2, 20000, seed=12)
        keys = sorted(law)
        idx = {k: j for j, k in enumerate(keys)}
        obs = np.bincount([idx[w.text] for w in words], minlength=len(keys))
        exp = np.array([law[k] / total for k in keys]) * len(words)
        assert sps.chisquare(obs, exp).pvalue > 1e-3

    def test_acceptance_nonincreasing(self):
        par = derive_params(1 / 3)
        rates = [empty_reduction_hits(par, n, 200000, seed=3) for n in (1, 2, 4, 8)]
        assert all(a >= b for a, b in zip(rates, rates[1:]))


class TestBackward:
    def test_single_symbol_acceptance_is_half(self):
        par = derive_params(1 / 3)
        trials = [sample_no_burgers_backward(par, 1, seed=s).trials for s in range(4000)]
        # geometric with success 1/2 has mean 2 and variance 2
        assert abs(np.mean(trials) - 2) < 4 * math.sqrt(2 / 4000)

    def test_accepted_words_hold_orders_only(self):
        par = derive_params(0.25)
        for s in range(20):
            w = sample_no_burgers_backward(par, 30, seed=s).word
            assert w.origin == -30 and w.end == -1
            assert backward_J(w) is None
            red = reduce(w)
            assert not red.burgers and set(red.orders) <= ORDERS

    def test_monotone_in_length(self):
        par = derive_params(1 / 3)
        a10 = np.mean([sample_no_burgers_backward(par, 10, seed=s).trials for s in range(300)])
        a100 = np.mean([sample_no_burgers_backward(par, 100, seed=s).trials for s in range(300)])
        assert a100 > a10


class TestFirstOrderTime:
    def test_leading_order(self):
        par = derive_params(1 / 3)
        for s in range(200):
            w = iid_word(par, 1, seed=s)
            if w[1] in ORDERS:
                assert first_order_time(par, seed=s, cap=50) == 1

    def test_matches_scan_of_same_stream(self):
        par = derive_params(1 / 3)
        for s in range(100):
            i = first_order_time(par, seed=s, cap=400)
            w = iid_word(par, 400, seed=s)
            scan = next((k for k in range(1, 401) if reduce(w.sub(1, k)).orders), None)
            assert i == scan

    def test_example_prefix(self):
        w = Word.from_text("Hhc")
        assert next(k for k in range(1, 4) if reduce(w.sub(1, k)).orders) == 3

    def test_censoring(self):
        out = first_order_times(derive_params(1 / 3), 2000, cap=3, seed=0)
        assert set(np.unique(out)) <= {-1, 1, 2, 3}
        assert (out == -1).any()

    def test_bad_cap(self):
        with pytest.raises(ValueError):
            first_order_time(derive_params(1 / 3), 0, cap=0)
