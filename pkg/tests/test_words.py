from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcburger.errors import CodecError, NotReached, UnmatchedFlexible
from hcburger.invariants import match_violations
from hcburger.words import (EMPTY, ReducedWord, Symbol, Word, backward_J, backward_JC,
                            backward_JH, counts, match_indices, monoid_concat, reduce,
                            resolve_flex)
from hcburger.cone import lattice_path

from oracles import all_words, backward_scan, queue_match, queue_reduce, rewrite_normal_forms

texts = st.text(alphabet="HChcF", max_size=60)
short_texts = st.text(alphabet="HChcF", max_size=12)


def W(text, origin=1):
    return Word.from_text(text, origin)


class TestReduceExamples:
    def test_burger_then_matching_order_cancels(self):
        assert reduce(W("Hh")).is_empty

    def test_order_before_burger_survives(self):
        r = reduce(W("hH"))
        assert (r.orders_text, r.burgers_text) == ("h", "H")

    def test_typed_order_skips_other_burger(self):
        r = reduce(W("HCh"))
        assert (r.orders_text, r.burgers_text) == ("", "C")

    def test_flexible_takes_freshest(self):
        r = reduce(W("CHF"))
        assert (r.orders_text, r.burgers_text) == ("", "C")

    def test_empty_word(self):
        assert reduce(W("")) == EMPTY


class TestRewritingOracle:
    @pytest.mark.parametrize("k", range(0, 6))
    def test_all_words_up_to_length_five(self, k):
        for text in all_words(k):
            forms = rewrite_normal_forms(text)
            assert len(forms) == 1, text
            assert reduce(W(text)).text == next(iter(forms)), text

    @settings(max_examples=300)
    @given(short_texts)
    def test_random_longer_words(self, text):
        (form,) = rewrite_normal_forms(text)
        assert reduce(W(text)).text == form


class TestMonoid:
    def test_identity(self):
        r = ReducedWord.from_text("hc", "CH")
        assert monoid_concat(EMPTY, r) == r
        assert monoid_concat(r, EMPTY) == r

    def test_flexible_cancels_hamburger(self):
        assert monoid_concat(ReducedWord.from_text("", "H"), ReducedWord.from_text("F", "")).is_empty

    def test_typed_order_reaches_past_other_type(self):
        out = monoid_concat(ReducedWord.from_text("", "HC"), ReducedWord.from_text("h", ""))
        assert out == ReducedWord.from_text("", "C")

    def test_morphism_exhaustive_to_total_length_six(self):
        for k in range(7):
            for text in all_words(k):
                for cut in range(k + 1):
                    a, b = W(text[:cut]), W(text[cut:])
                    assert monoid_concat(reduce(a), reduce(b)) == reduce(W(text)), (text, cut)

    @given(texts, texts)
    def test_morphism_random(self, x, y):
        assert monoid_concat(reduce(W(x)), reduce(W(y))) == reduce(W(x + y))

    def test_invalid_blocks_rejected(self):
        with pytest.raises(ValueError):
            ReducedWord(bytes([Symbol.HAMBURGER]), b"")
        with pytest.raises(ValueError):
            ReducedWord(b"", bytes([Symbol.FLEXIBLE_ORDER]))


class TestCodec:
    @given(texts, st.integers(-100, 100))
    def test_round_trip(self, text, origin):
        w = W(text, origin)
        assert w.text == text and W(w.text, origin) == w

    def test_bad_character(self):
        with pytest.raises(CodecError):
            W("HxC")

    def test_backward_indexing(self):
        w = Word.backward_from_text("hHc")
        assert (w.origin, w.end) == (-3, -1)
        assert w[-1] == Symbol.CHEESEBURGER_ORDER and w[-3] == Symbol.HAMBURGER_ORDER
        with pytest.raises(IndexError):
            w[0]


class TestMatch:
    def test_example_with_flexible(self):
        m = match_indices(W("HCFh"))
        assert m.pairs == {3: 2, 2: 3, 4: 1, 1: 4} and not m.unmatched

    def test_single_order(self):
        m = match_indices(W("h", origin=5))
        assert m.pairs == {} and m.unmatched == {5}

    def test_repeated_pairs(self):
        assert match_indices(W("HhHh")).pairs == {1: 2, 2: 1, 3: 4, 4: 3}

    @settings(max_examples=200)
    @given(texts)
    def test_against_fulfilment_oracle(self, text):
        m = match_indices(W(text, 0))
        assert m.pairs == queue_match(text)
        assert reduce(W(text)).text == queue_reduce(text)

    @settings(max_examples=50)
    @given(st.integers(0, 2**32), st.integers(1, 10**4))
    def test_invariants_on_long_random_words(self, seed, length):
        rng = np.random.default_rng(seed)
        w = Word.from_array(rng.integers(0, 5, length).astype(np.uint8))
        assert match_violations(w) == []


class TestResolveFlex:
    def test_example(self):
        w = W("HCFh")
        assert resolve_flex(w, match_indices(w)).text == "HCch"

    def test_no_flexible(self):
        w = W("HCch")
        assert resolve_flex(w, match_indices(w)) is w

    def test_forced_match(self):
        w = W("HF")
        assert resolve_flex(w, match_indices(w)).text == "Hh"

    def test_unmatched_flexible(self):
        w = W("FH")
        with pytest.raises(UnmatchedFlexible) as info:
            resolve_flex(w, match_indices(w))
        assert info.value.index == 1

    @given(texts)
    def test_walk_endpoint_matches_y_counts(self, text):
        w = W(text)
        m = match_indices(w)
        if not all(m.phi(i) is not None for i in w.indices() if w[i] == Symbol.FLEXIBLE_ORDER):
            return
        y = resolve_flex(w, m)
        cv = counts(y)
        assert tuple(lattice_path(y).points[-1]) == (cv.d, cv.d_star)


class TestCounts:
    def test_empty_reduction(self):
        cv = counts(W("Hh"))
        assert (cv.d, cv.d_star, cv.h, cv.c, cv.o) == (0, 0, 0, 0, 1)

    def test_flexible_split(self):
        cv = counts(W("cFc"))
        assert (cv.h, cv.c, cv.o, cv.c_f, cv.r) == (0, 2, 2, 1, Fraction(1, 2))

    def test_discrepancies(self):
        cv = counts(W("HCh"))
        assert (cv.d, cv.d_star) == (0, 1)

    def test_no_flexible_counts_all_cheeseburger_orders(self):
        cv = counts(W("chc"))
        assert cv.c_f == 2 and cv.o == 2

    @given(texts)
    def test_raw_count_identities(self, text):
        cv = counts(W(text))
        assert cv.d == text.count("H") - text.count("h")
        assert cv.d_star == text.count("C") - text.count("c")
        assert cv.r == Fraction(cv.c_f, cv.o) and cv.r >= 0

    def test_ratio_can_exceed_one(self):
        # c_f counts cheeseburger orders, o counts hamburger and flexible ones
        assert counts(W("cc")).r == 2


class TestBackward:
    def test_J_examples(self):
        assert backward_J(Word.backward_from_text("cH")) == 1
        assert backward_J(Word.backward_from_text("Hhc")) is None
        assert backward_J(Word.backward_from_text("H")) == 1

    def test_JH_examples(self):
        assert backward_JH(Word.backward_from_text("HH"), 2) == (2, 0)
        assert backward_JH(Word.backward_from_text("HCc"), 1) == (3, 0)
        with pytest.raises(NotReached):
            backward_JH(Word.backward_from_text("C"), 1)

    @settings(max_examples=200)
    @given(st.text(alphabet="HChcF", min_size=1, max_size=30), st.integers(1, 3))
    def test_against_scan(self, text, m):
        w = Word.backward_from_text(text)
        scans = backward_scan(text)
        j_true = next((j + 1 for j, r in enumerate(scans) if set(r) & set("HC")), None)
        assert backward_J(w) == j_true
        for burger, other_b, other_o, fn in (("H", "C", "c", backward_JH), ("C", "H", "h", backward_JC)):
            hit = next((j for j, r in enumerate(scans) if r.count(burger) >= m), None)
            if hit is None:
                with pytest.raises(NotReached):
                    fn(w, m)
            else:
                r = scans[hit]
                assert fn(w, m) == (hit + 1, r.count(other_b) - r.count(other_o))
