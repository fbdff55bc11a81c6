import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fisherseg.exact_test import (
    CapacityError,
    ContingencyTable as T,
    PValueVariant,
    brute_force_p,
    build_log_factorials,
    fisher_p,
    literal_p_unclamped,
    point_probability,
)

STD = PValueVariant.STANDARD
LIT = PValueVariant.LITERAL


@pytest.fixture(scope="module")
def lf():
    return build_log_factorials(2500)


tables = st.tuples(*[st.integers(0, 25)] * 4).filter(lambda t: sum(t) >= 1).map(lambda t: T(*t))


def test_log_factorials_small():
    assert build_log_factorials(0).values.tolist() == [0.0]
    v = build_log_factorials(4).values
    np.testing.assert_allclose(v, [0, 0, math.log(2), math.log(6), math.log(24)], rtol=1e-15, atol=0)


def test_log_factorials_against_high_precision():
    # ln(170!) and ln(1000!) from mpmath at 40 digits
    v = build_log_factorials(1000).values
    assert v[170] == pytest.approx(706.5730622457873471, rel=1e-14)
    assert v[1000] == pytest.approx(5912.128178488163349, rel=1e-14)


def test_log_factorials_increments():
    v = build_log_factorials(4000).values
    k = np.arange(1, 4001)
    np.testing.assert_allclose(np.diff(v), np.log(k), rtol=1e-12)


def test_log_factorials_reject_bad_sizes():
    with pytest.raises(ValueError):
        build_log_factorials(-1)
    with pytest.raises(CapacityError):
        build_log_factorials(10**9 + 1)


def test_log_factorial_table_is_read_only():
    lf = build_log_factorials(5)
    with pytest.raises(ValueError):
        lf.values[1] = 3.0
    with pytest.raises(AttributeError):
        lf.values = None


@pytest.mark.parametrize("cells", [(-1, 0, 0, 1), (0, 0, 0, 0), (1.5, 0, 0, 1)])
def test_invalid_tables(cells):
    with pytest.raises(ValueError):
        T(*cells)


def test_point_probability_examples(lf):
    assert point_probability(T(1, 0, 0, 1), lf) == pytest.approx(0.5, rel=1e-14)
    assert point_probability(T(2, 2, 2, 2), lf) == pytest.approx(36 / 70, rel=1e-14)
    for k in (1, 7, 300):
        assert point_probability(T(k, 0, 0, 0), lf) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("cells, expected", [
    ((4, 0, 0, 4), 2 / 70),
    ((3, 1, 1, 3), 34 / 70),
    ((2, 2, 2, 2), 1.0),
    ((1, 0, 0, 1), 1.0),
    ((0, 0, 0, 1), 1.0),
    ((3, 0, 0, 3), 2 / 20),
])
def test_fisher_p_examples(lf, cells, expected):
    assert fisher_p(T(*cells), lf, STD) == pytest.approx(expected, rel=1e-12)
    assert brute_force_p(T(*cells), STD) == pytest.approx(expected, rel=1e-15)


def test_literal_example(lf):
    # (2,0,0,2): each printed sum is 1 + 1 over C(4, 2) -> (6 + 1) / 6
    assert literal_p_unclamped(T(2, 0, 0, 2), lf) == pytest.approx(7 / 6, rel=1e-12)
    assert brute_force_p(T(2, 0, 0, 2), LIT, clamp=False) == pytest.approx(7 / 6, rel=1e-15)
    assert fisher_p(T(2, 0, 0, 2), lf, LIT) == 1.0


def test_brute_force_capacity():
    with pytest.raises(CapacityError):
        brute_force_p(T(1000, 1000, 1, 0))


def test_degenerate_margins_give_one(lf):
    for cells in [(3, 0, 5, 0), (0, 4, 0, 2), (5, 5, 0, 0), (0, 0, 3, 3)]:
        assert fisher_p(T(*cells), lf) == 1.0


def test_exhaustive_small_tables_match_oracle(lf):
    for cells in product(range(5), repeat=4):
        if sum(cells) == 0:
            continue
        t = T(*cells)
        for variant in (STD, LIT):
            ref = brute_force_p(t, variant)
            assert fisher_p(t, lf, variant) == pytest.approx(ref, rel=1e-10)


def test_tiny_p_values_survive(lf):
    # perfect separation at n = 2000: p = 2 / C(2000, 1000), far below 1e-30
    t = T(1000, 0, 0, 1000)
    expected = float(Fraction(2, math.comb(2000, 1000)))
    assert fisher_p(t, lf) == pytest.approx(expected, rel=1e-9)
    assert brute_force_p(t) == pytest.approx(expected, rel=1e-15)


def test_sum_to_one(lf):
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(1, 61))
        r1 = int(rng.integers(0, n + 1))
        c1 = int(rng.integers(0, n + 1))
        lo, hi = max(0, r1 + c1 - n), min(r1, c1)
        total = sum(point_probability(T(a, r1 - a, c1 - a, n - r1 - c1 + a), lf)
                    for a in range(lo, hi + 1))
        assert total == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=300, deadline=None)
@given(tables)
def test_standard_in_unit_interval(t):
    p = fisher_p(t, build_log_factorials(100))
    assert 0.0 < p <= 1.0


@settings(max_examples=300, deadline=None)
@given(tables)
def test_symmetries(t):
    lf = build_log_factorials(100)
    p = fisher_p(t, lf)
    for other in (t.row_swap(), t.col_swap(), t.transpose()):
        assert fisher_p(other, lf) == p


@settings(max_examples=300, deadline=None)
@given(tables)
def test_literal_is_one_plus_point_probability(t):
    lf = build_log_factorials(100)
    assert literal_p_unclamped(t, lf) == pytest.approx(1 + point_probability(t, lf), rel=1e-10)


def test_large_table_against_oracle(lf):
    rng = np.random.default_rng(3)
    for _ in range(20):
        cells = rng.integers(0, 500, size=4)
        t = T(*map(int, cells))
        assert fisher_p(t, lf) == pytest.approx(brute_force_p(t), rel=1e-9)
