"""Chance-distribution module: exact oracles and invariants.

Expected values tagged "frozen" were computed with the big-integer /
Fraction oracles defined at the top of this file; the oracles never touch
the log-space implementation they check.
"""

from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hapkit.rad import (
    DEFAULT_P_REF,
    binom_tail,
    empirical_threshold,
    max_pmf,
    monte_carlo_max,
    rad_zscore,
)

# ---------------------------------------------------------------------------
# independent oracles (exact rational arithmetic)


def tail_exact(n: int, m: int) -> Fraction:
    if m <= 0:
        return Fraction(1)
    if m > n:
        return Fraction(0)
    return Fraction(sum(comb(n, j) for j in range(m, n + 1)), 2**n)


def pmf_max_exact(n: int, k: int, m: int) -> Fraction:
    below_next = (1 - tail_exact(n, m + 1)) ** k
    below = (1 - tail_exact(n, m)) ** k
    return below_next - below


# ---------------------------------------------------------------------------
# binom_tail


def test_tail_two_flips():
    assert binom_tail(2, 1) == pytest.approx(0.75, abs=1e-12)


def test_tail_four_flips():
    assert binom_tail(4, 2) == pytest.approx(11 / 16, abs=1e-12)


def test_tail_bounds_are_exact():
    assert binom_tail(30, 0) == 1.0
    assert binom_tail(30, 31) == 0.0


def test_tail_matches_bigint_oracle_deep():
    # frozen: tail_exact(108, 80) = 2.8243471116563556e-07
    expect = float(tail_exact(108, 80))
    assert expect == pytest.approx(2.8243471116563556e-07, rel=1e-12)
    assert binom_tail(108, 80) == pytest.approx(expect, rel=1e-10)


@pytest.mark.parametrize("n,m", [(10, 3), (51, 40), (200, 130), (999, 600)])
def test_tail_matches_bigint_oracle(n, m):
    assert binom_tail(n, m) == pytest.approx(float(tail_exact(n, m)), rel=1e-10)


def test_tail_rejects_out_of_range():
    with pytest.raises(ValueError):
        binom_tail(10, -1)
    with pytest.raises(ValueError):
        binom_tail(10, 12)


@given(n=st.integers(1, 400))
@settings(max_examples=30, deadline=None)
def test_tail_nonincreasing_in_m(n):
    vals = [binom_tail(n, m) for m in range(0, n + 2)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------------------
# max_pmf


def test_max_pmf_k1_is_plain_binomial():
    model = max_pmf(2, 1)
    assert np.allclose(model.pmf_max, [0.25, 0.5, 0.25], atol=1e-15)


def test_max_pmf_two_single_flips():
    model = max_pmf(1, 2)
    assert model.pmf_max[0] == pytest.approx(0.25, abs=1e-15)
    assert model.pmf_max[1] == pytest.approx(0.75, abs=1e-15)


def test_max_pmf_reproduces_reference_constant():
    # frozen: pmf_max_exact(108, 25, 80) = 4.676580613465715e-06,
    # within 9e-8 relative of the published 4.676581e-6
    model = max_pmf(108, 25)
    assert model.pmf_max[80] == pytest.approx(4.676580613465715e-06, rel=1e-9)
    assert model.pmf_max[80] == pytest.approx(DEFAULT_P_REF, rel=0.02)


def test_max_pmf_matches_fraction_oracle_pointwise():
    for n, k, m in [(20, 5, 14), (54, 25, 45), (108, 25, 79), (108, 25, 81)]:
        assert max_pmf(n, k).pmf_max[m] == pytest.approx(
            float(pmf_max_exact(n, k, m)), rel=1e-9
        )


def test_max_pmf_moments_against_oracle():
    # frozen from the Fraction oracle: mean 64.18298756265058, std 2.63089817471321
    model = max_pmf(108, 25)
    assert model.mean_max == pytest.approx(64.18298756265058, rel=1e-10)
    assert model.std_max == pytest.approx(2.63089817471321, rel=1e-8)


@given(
    n=st.integers(1, 2000),
    k=st.sampled_from([1, 2, 5, 25, 100]),
)
@settings(max_examples=40, deadline=None)
def test_max_pmf_normalized_and_nonnegative(n, k):
    model = max_pmf(n, k)
    assert np.all(model.pmf_max >= 0.0)
    assert abs(float(np.sum(model.pmf_max)) - 1.0) < 1e-12
    assert n / 2 - 1e-9 * n <= model.mean_max <= n * (1 + 1e-12)


@given(n=st.integers(1, 300), k=st.integers(1, 60))
@settings(max_examples=30, deadline=None)
def test_max_stochastically_dominates_in_k(n, k):
    low = max_pmf(n, k)
    high = max_pmf(n, k + 1)
    # P(max >= m) = 1 - cumsum(pmf)[m-1] must not decrease with k
    surv_low = 1.0 - np.cumsum(low.pmf_max)
    surv_high = 1.0 - np.cumsum(high.pmf_max)
    assert np.all(surv_high >= surv_low - 1e-12)
    assert high.mean_max >= low.mean_max - 1e-12


def test_max_pmf_rejects_bad_args():
    with pytest.raises(ValueError):
        max_pmf(0, 5)
    with pytest.raises(ValueError):
        max_pmf(5, 0)


# ---------------------------------------------------------------------------
# empirical_threshold


def test_threshold_at_calibration_size():
    spec = empirical_threshold(108, 25)
    assert spec.m_star == 80
    assert spec.accuracy_star == pytest.approx(80 / 108, abs=1e-12)  # 74.074%
    assert spec.threshold_accuracy == pytest.approx(80 / 108 + 0.10, abs=1e-12)


def test_threshold_zero_offset():
    spec = empirical_threshold(108, 25, offset=0.0)
    assert spec.threshold_accuracy == pytest.approx(80 / 108, abs=1e-12)


def test_threshold_probability_match_smaller_n():
    # frozen: Fraction oracle gives argmin |pmf_max(54,25)(m) - p_ref| at m=45
    spec = empirical_threshold(54, 25)
    assert spec.m_star == 45
    assert spec.accuracy_star == pytest.approx(45 / 54, abs=1e-12)


def test_threshold_caps_at_one():
    spec = empirical_threshold(4, 25, offset=0.5)
    assert spec.threshold_accuracy <= 1.0


def test_threshold_tie_prefers_larger_m():
    # pmf_max(2, 1) = (0.25, 0.5, 0.25) exactly in binary floats; the
    # upper-tail candidates are m=1 and m=2, and p_ref = 0.375 sits exactly
    # midway (distances 0.125 both): the less probable m must win
    spec = empirical_threshold(2, 1, p_ref=0.375)
    assert spec.m_star == 2


def test_threshold_small_n_stays_in_upper_tail():
    # for small n the closest pmf value overall sits in the lower tail;
    # the threshold must never drop below the distribution mode
    spec = empirical_threshold(16, 15)
    model = max_pmf(16, 15)
    assert spec.m_star >= int(np.argmax(model.pmf_max))
    assert spec.accuracy_star * 16 >= model.mean_max - model.std_max


# ---------------------------------------------------------------------------
# monte_carlo_max


def test_monte_carlo_single_flip_support():
    maxima, overall = monte_carlo_max(1, 1, 1000, seed=7)
    assert set(np.unique(maxima)) <= {0, 1}
    assert overall in (0, 1)


def test_monte_carlo_matches_analytic_tv():
    maxima, _ = monte_carlo_max(20, 5, 1_000_000, seed=1234)
    counts = np.bincount(maxima, minlength=21)
    empirical = counts / counts.sum()
    tv = 0.5 * np.abs(empirical - max_pmf(20, 5).pmf_max).sum()
    assert tv < 0.005


def test_monte_carlo_calibration_run_overall_max():
    _, overall = monte_carlo_max(108, 25, 250_000, seed=99)
    assert overall in (79, 80, 81)


def test_monte_carlo_deterministic():
    a, _ = monte_carlo_max(20, 5, 5000, seed=42)
    b, _ = monte_carlo_max(20, 5, 5000, seed=42)
    assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# rad_zscore


def test_zscore_zero_at_mean():
    model = max_pmf(108, 25)
    assert rad_zscore(model.mean_max / 108, model) == pytest.approx(0.0, abs=1e-9)


def test_zscore_two_at_two_sigma():
    model = max_pmf(108, 25)
    acc = (model.mean_max + 2 * model.std_max) / 108
    assert rad_zscore(acc, model) == pytest.approx(2.0, abs=1e-9)


def test_zscore_direct_evaluation():
    model = max_pmf(108, 25)
    expect = (0.52 * 108 - model.mean_max) / model.std_max
    assert rad_zscore(0.52, model) == pytest.approx(expect, rel=1e-12)


def test_zscore_range_check():
    model = max_pmf(10, 2)
    with pytest.raises(ValueError):
        rad_zscore(1.2, model)
