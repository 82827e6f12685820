from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from subdiffrange.splitting import (
    INSIDE,
    OUTSIDE,
    UNDECIDED,
    BudgetError,
    FatCantorSet,
    build_splitting_set,
    hosts_disjoint,
    splitting_partition,
    svc_measure_in,
    svc_membership,
)


def test_full_host_measure_half():
    S = FatCantorSet(Fraction(1, 4), Fraction(3, 4))
    assert svc_measure_in(S, 0.25, 0.75) == pytest.approx(0.25, abs=1e-12)


def test_disjoint_interval_zero():
    S = FatCantorSet(Fraction(0), Fraction(1, 2))
    assert svc_measure_in(S, 0.6, 0.9) == 0.0


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_measure_additivity(a, m, b):
    a, m, b = sorted((a, m, b))
    S = FatCantorSet(Fraction(0), Fraction(1))
    tol = 1e-10
    total = svc_measure_in(S, a, b, tol)
    assert abs(svc_measure_in(S, a, m, tol) + svc_measure_in(S, m, b, tol) - total) <= 2 * tol


def test_measure_random_hosts_closed_form():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        u, v = sorted(rng.integers(0, 2**20, 2))
        if u == v:
            continue
        S = FatCantorSet(Fraction(int(u), 2**20), Fraction(int(v), 2**20))
        assert abs(svc_measure_in(S, float(S.u), float(S.v)) - float(S.length) / 2) <= 1e-12


def test_membership_examples():
    S = FatCantorSet(Fraction(0), Fraction(1))
    assert svc_membership(S, 0.5, 5) == OUTSIDE
    for depth in (1, 4, 20):
        assert svc_membership(S, 0.0, depth) == INSIDE


@given(st.floats(0, 1))
def test_membership_stable_once_decided(x):
    S = FatCantorSet(Fraction(0), Fraction(1))
    seen = None
    for depth in range(1, 25):
        ans = svc_membership(S, x, depth)
        if seen is not None:
            assert ans == seen
        elif ans != UNDECIDED:
            seen = ans


def test_splitting_level_zero_and_five():
    A = build_splitting_set(10)
    m = A.measure_in(0, 1)
    assert 0 < m < 1
    I = (Fraction(7, 32), Fraction(8, 32))
    mi = A.measure_in(float(I[0]), float(I[1]))
    assert A.beta[5] > 0
    assert A.beta[5] <= mi <= 1 / 32 - A.beta[5]


def test_splitting_depth_one():
    A = build_splitting_set(1)
    assert 0 < A.total() < 1


def test_splitting_margins_positive():
    A = build_splitting_set(10)
    assert len(A.beta) == 11 and min(A.beta) > 0


def test_random_intervals_split():
    A = build_splitting_set(10)
    rng = np.random.default_rng(11)
    for _ in range(1000):
        w = rng.uniform(2.0**-9, 0.5)
        a = rng.uniform(0, 1 - w)
        m = A.measure_in(a, a + w)
        assert 0 < m < w


def test_hosts_disjoint_exact():
    assert hosts_disjoint(build_splitting_set(6))


def test_partition_two_parts():
    P = splitting_partition(2, 5)
    assert hosts_disjoint(P)
    for S in P.parts:
        assert min(S.beta) > 0
    assert 0 <= P.remainder_measure() < 1
    assert sum(S.total() for S in P.parts) + P.remainder_measure() == pytest.approx(1.0)


def test_partition_budget():
    with pytest.raises(BudgetError):
        splitting_partition(50, 12)
