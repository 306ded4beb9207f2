import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from hcburger.errors import InsufficientHits
from hcburger.stats import (binomial_se, chi_square, effective_sample_size, ks_statistic,
                            ks_two_sample, loglog_slope)

samples = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=40)


def brute_ks(x, y, wx=None, wy=None):
    """sup over every pooled point of the difference of weighted ECDFs, by direct sums."""
    wx = [1.0] * len(x) if wx is None else wx
    wy = [1.0] * len(y) if wy is None else wy
    best = 0.0
    for t in list(x) + list(y):
        fx = sum(w for v, w in zip(x, wx) if v <= t) / sum(wx)
        fy = sum(w for v, w in zip(y, wy) if v <= t) / sum(wy)
        best = max(best, abs(fx - fy))
    return best


class TestKs:
    @given(samples, samples)
    def test_matches_scipy(self, x, y):
        assert ks_statistic(x, y) == pytest.approx(sps.ks_2samp(x, y).statistic, abs=1e-12)

    @settings(max_examples=100)
    @given(samples, samples, st.data())
    def test_weighted_matches_brute(self, x, y, data):
        wx = data.draw(st.lists(st.floats(0.01, 10), min_size=len(x), max_size=len(x)))
        wy = data.draw(st.lists(st.floats(0.01, 10), min_size=len(y), max_size=len(y)))
        assert ks_statistic(x, y, wx, wy) == pytest.approx(brute_ks(x, y, wx, wy), abs=1e-9)

    def test_all_orderings_small_samples(self):
        # every interleaving of 4 x-points and 3 y-points
        for pattern in set(itertools.permutations("xxxxyyy")):
            x = [k for k, c in enumerate(pattern) if c == "x"]
            y = [k for k, c in enumerate(pattern) if c == "y"]
            assert ks_statistic(x, y) == pytest.approx(brute_ks(x, y))

    def test_integer_weights_equal_repetition(self):
        x, y = [0.1, 0.5, 0.9], [0.2, 0.3]
        rep = [0.1, 0.1, 0.5, 0.9, 0.9, 0.9]
        assert ks_statistic(x, y, [2, 1, 3]) == pytest.approx(ks_statistic(rep, y))

    def test_result_object(self):
        res = ks_two_sample([1, 2, 3], [1.5, 2.5])
        assert res.pvalue == pytest.approx(sps.ks_2samp([1, 2, 3], [1.5, 2.5]).pvalue)
        weighted = ks_two_sample([1, 2, 3], [1.5, 2.5], x_weights=[1, 1, 2])
        assert weighted.pvalue is None and weighted.n_x == pytest.approx(16 / 6)

    def test_empty(self):
        with pytest.raises(InsufficientHits):
            ks_statistic([], [1.0])

    def test_ess(self):
        assert effective_sample_size(np.ones(10)) == pytest.approx(10)
        assert effective_sample_size([1, 0, 0, 0]) == pytest.approx(1)


class TestChiSquare:
    @given(st.lists(st.integers(1, 200), min_size=2, max_size=30))
    def test_matches_scipy(self, obs):
        obs = np.array(obs, float)
        exp = np.full_like(obs, obs.mean())
        res = chi_square(obs, exp)
        ref = sps.chisquare(obs, exp)
        assert res.statistic == pytest.approx(ref.statistic)
        assert res.pvalue == pytest.approx(ref.pvalue)
        assert res.df == len(obs) - 1

    def test_inflation_scales(self):
        res = chi_square([10, 20, 30], [20, 20, 20], inflation=1.0)
        assert res.statistic == pytest.approx(10.0 / 2)

    def test_multinomial_mean_is_df(self):
        # E[X^2] = K - 1 exactly under the multinomial null; check by simulation
        rng = np.random.default_rng(1)
        probs = np.array([0.1, 0.2, 0.3, 0.4])
        stats = [chi_square(rng.multinomial(200, probs), 200 * probs).statistic
                 for _ in range(20000)]
        assert np.mean(stats) == pytest.approx(3.0, abs=4 * math.sqrt(6 / 20000))

    def test_quantile(self):
        res = chi_square([5, 5], [5, 5])
        assert res.quantile(0.999) == pytest.approx(sps.chi2.ppf(0.999, 1))

    def test_bad_input(self):
        with pytest.raises(ValueError):
            chi_square([1, 2], [0, 3])
        with pytest.raises(InsufficientHits):
            chi_square([1], [1])


class TestSlope:
    @given(st.floats(-3, 3), st.floats(0.1, 10))
    def test_exact_power_law(self, slope, scale):
        x = np.array([1, 2, 4, 8, 16.0])
        fit = loglog_slope(x, scale * x**slope)
        assert fit.slope == pytest.approx(slope, abs=1e-9) and fit.n_points == 5

    def test_needs_three_points(self):
        with pytest.raises(InsufficientHits):
            loglog_slope([1, 2], [1, 2])

    def test_positive_values(self):
        with pytest.raises(InsufficientHits):
            loglog_slope([1, 2, 3], [1, 0, 2])

    def test_binomial_se(self):
        assert binomial_se(0.5, 100) == pytest.approx(0.05)
        assert math.isnan(binomial_se(0.5, 0))
