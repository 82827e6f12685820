import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from subdiffrange.coding import build_cantor_in, dyadic_enumeration, spike_gaps
from subdiffrange.onedim import (
    NonsmoothExhaustive,
    PrecisionError,
    build_nonsmooth,
    eval_nonsmooth,
    f_eval,
    g_eval,
    predict_subdiff_1d,
    root_average,
    sigma,
    sigma_array,
    spike_eps,
    spike_index_of,
    spike_nu,
    tilde,
    truncated_root,
    truncated_root_average,
)
from subdiffrange.splitting import build_splitting_set


@pytest.fixture(scope="module")
def smooth():
    from subdiffrange.acceptance import smooth_instance

    return smooth_instance()


# sigma -------------------------------------------------------------------------

def test_sigma_one_closed_form():
    assert abs(sigma(1.0) - (2 - math.sqrt(2))) <= 1e-9


def test_sigma_small():
    assert sigma(0.01) <= 0.02
    grid = np.linspace(0, 1, 200001)
    oracle = 1 - np.min((1 + grid**1.01) / (1.01 * (1 + grid)))
    assert sigma(0.01) == pytest.approx(oracle, abs=1e-9)


def test_sigma_monotone_vanishing():
    seq = [sigma(2.0**-n) for n in range(1, 21)]
    assert all(b < a for a, b in zip(seq[:-1], seq[1:]))
    assert seq[-1] <= 1e-5


def test_sigma_range():
    with pytest.raises(ValueError):
        sigma(0.0)
    with pytest.raises(ValueError):
        sigma_array([1.5])


@given(st.floats(1e-3, 1.0))
def test_sigma_array_agrees(nu):
    assert sigma_array(np.array([nu]))[0] == pytest.approx(sigma(nu), abs=1e-12)


def test_sigma_stationarity_audit():
    # the objective decreases then increases on [0, 1]: one sign change of the derivative
    for nu in (0.05, 0.3, 1.0):
        y = np.linspace(1e-6, 1, 10001)
        psi = (1 + y ** (1 + nu)) / ((1 + nu) * (1 + y))
        s = np.sign(np.diff(psi))
        assert np.count_nonzero(np.diff(s[s != 0])) == 1


# integral bounds -------------------------------------------------------------------

def test_root_average_examples():
    assert root_average(-1, 1, 1) == pytest.approx(0.5)
    assert 0.5 >= 1 * (1 - sigma(1.0))
    assert root_average(1, 1, 0.5) == pytest.approx((2 * math.sqrt(2) - 1) / 1.5, rel=1e-12)
    with pytest.raises(ValueError):
        root_average(0.3, 0.0, 0.5)


@given(st.floats(-3, 3), st.floats(-3, 3).filter(lambda h: abs(h) > 1e-9), st.floats(0.05, 1.0))
def test_root_average_lower_bound(x, h, nu):
    assert root_average(x, h, nu) >= abs(x) ** nu * (1 - sigma(nu)) - 1e-9


def test_truncated_examples():
    assert truncated_root_average(2, 1, 0, 1, 1, 0.5) == pytest.approx(1.0)
    assert 1 >= truncated_root(2, 0, 1, 1, 0.5) * (1 - sigma(0.5))
    v = truncated_root_average(-2, 4, 0, 1, 1, 0.5)
    assert v >= 1 - sigma(0.5)
    # piecewise oracle: constant 1 on [-2,-1] and [1,2], |t|^0.5 on [-1,1]
    assert v == pytest.approx((2 + 2 * (2 / 3)) / 4, rel=1e-12)


@given(st.floats(-2, 2), st.floats(-2, 2).filter(lambda h: abs(h) > 1e-9), st.floats(0.05, 1.0))
def test_truncated_reduces_to_root(x, h, nu):
    assert truncated_root_average(x, h, 0.0, 1.0, 1e6, nu) == pytest.approx(root_average(x, h, nu), rel=1e-9)


@given(st.floats(-2, 2), st.floats(-2, 2).filter(lambda h: abs(h) > 1e-6), st.floats(-1, 1),
       st.floats(1e-3, 1), st.floats(0.1, 2), st.floats(0.05, 1.0))
def test_truncated_lower_bound(x, h, d, eps, m, nu):
    lhs = truncated_root_average(x, h, d, eps, m, nu)
    assert lhs >= truncated_root(x, d, eps, m, nu) * (1 - sigma(nu)) - 1e-9


@given(st.floats(-2, 2), st.floats(0.1, 2), st.floats(0.05, 1.0), st.floats(0.2, 5))
def test_truncated_scale_invariance(s, h, nu, scale):
    # the average depends on (x - d)/eps and h/eps only
    a = truncated_root_average(s, h, 0.0, 1.0, 1.0, nu)
    b = truncated_root_average(0.3 + scale * s, scale * h, 0.3, scale, 1.0, nu)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-12)


# nonsmooth construction --------------------------------------------------------------

def _const_curve(a, b):
    return lambda x: np.column_stack([np.full(np.size(x), a), np.full(np.size(x), b)])


def test_nonsmooth_degenerate_curve_ignores_A():
    F = NonsmoothExhaustive(build_splitting_set(6), curve=_const_curve(0.3, 0.3))
    x = np.array([0.0, 0.2, 0.77, 1.0])
    assert np.allclose(F.f(x), 0.3 * x, atol=1e-12)


def test_nonsmooth_zero_one_measure():
    A = build_splitting_set(6)
    F = NonsmoothExhaustive(A, curve=_const_curve(0.0, 1.0))
    for x in (0.1, 0.5, 0.9, 1.0):
        assert F.f(np.array([x]))[0] == pytest.approx(x - A.measure_in(0, x), abs=1e-10)
    assert eval_nonsmooth(F, 1.0, 1e-4)[0] == pytest.approx(1 - A.measure_in(0, 1), abs=1e-4)


def test_nonsmooth_basic():
    F = build_nonsmooth(build_splitting_set(6), 5)
    assert eval_nonsmooth(F, 0.0)[0] == 0
    assert eval_nonsmooth(F, 0.8)[0] >= eval_nonsmooth(F, 0.3)[0]
    with pytest.raises(PrecisionError):
        eval_nonsmooth(F, 0.5, 1e-20)


def test_nonsmooth_lipschitz():
    F = build_nonsmooth(build_splitting_set(6), 5)
    rng = np.random.default_rng(2)
    x, y = rng.uniform(0, 1, (2, 300))
    assert np.all(np.abs(F.f(x) - F.f(y)) <= np.abs(x - y) + 1e-9)


# differentiable construction ------------------------------------------------------------

def test_g_at_spike_centres(smooth):
    for n in (1, 2, 3, 10, 100, 1000):
        d = float(dyadic_enumeration(n))
        assert g_eval(smooth, np.array([d]))[0] == smooth.alpha_beta(np.array([d]))[0, 0]


def test_g_on_cantor_leaves_is_beta(smooth):
    for a, b in smooth.curve.cantor.leaves[::37]:
        x = float(a + (b - a) / 3)
        if spike_index_of(x) is None:
            assert g_eval(smooth, np.array([x]))[0] == smooth.alpha_beta(np.array([x]))[0, 1]


def test_g_sandwich(smooth):
    x = np.random.default_rng(0).uniform(0, 1, 10_000)
    ab = smooth.alpha_beta(x)
    g = smooth.g(x)
    assert np.all(ab[:, 0] <= g) and np.all(g <= ab[:, 1])


def test_g_recursion_monotone(smooth):
    # g_n = min(g_{n-1}, alpha + r_n) never increases with n
    x = np.random.default_rng(5).uniform(0, 1, 500)
    ab = smooth.alpha_beta(x)
    g = ab[:, 1].copy()
    for n in range(1, 40):
        d, e, nu = float(dyadic_enumeration(n)), spike_eps(n), spike_nu(n)
        nxt = np.minimum(g, ab[:, 0] + (np.abs(x - d) / e) ** nu)
        assert np.all(nxt <= g)
        g = nxt
    assert np.allclose(g, smooth.g(x), atol=1e-12)


def test_f_zero_and_lipschitz(smooth):
    assert f_eval(smooth, np.array([0.0]))[0] == 0.0
    rng = np.random.default_rng(4)
    x, y = rng.uniform(0, 1, (2, 2000))
    fx, fy = smooth.f(x), smooth.f(y)
    assert np.all(np.abs(fx - fy) <= np.abs(x - y) + 2e-10)
    s = np.sort(rng.uniform(0, 1, 500))
    assert np.all(np.diff(smooth.f(s)) >= -1e-12)


def test_central_differences_converge(smooth):
    x = np.random.default_rng(8).uniform(0.01, 0.99, 200)
    errs = []
    for h in (1e-3, 1e-4, 1e-5, 1e-6):
        errs.append(np.median(np.abs((smooth.f(x + h) - smooth.f(x - h)) / (2 * h) - smooth.g(x))))
    # the median point sees a locally linear primitive, so only rounding remains
    assert max(errs) <= 1e-8


def test_tol_validation(smooth):
    with pytest.raises(ValueError):
        g_eval(smooth, 0.3, tol=0)
    with pytest.raises(ValueError):
        f_eval(smooth, 0.3, tol=-1)


# tilde and predictions ----------------------------------------------------------------

def test_tilde(smooth):
    T = tilde(smooth)
    x = np.linspace(0.05, 0.95, 50)
    assert np.allclose(T.g(x), 2 * smooth.g(x) - 1)
    rng = np.random.default_rng(9)
    a, b = rng.uniform(0, 1, (2, 1000))
    assert np.all(np.abs(T.f(a) - T.f(b)) <= np.abs(a - b) + 1e-9)
    with pytest.raises(ValueError):
        tilde(T)


def test_tilde_full_interval(smooth):
    T = tilde(smooth)
    _, x = smooth.curve.code_target(0.0, 1.0)
    a, b = T.predict(x)
    assert a == pytest.approx(-1, abs=0.1) and b == pytest.approx(1, abs=0.1)


def test_predict_examples(smooth):
    d = float(dyadic_enumeration(3))
    assert predict_subdiff_1d(smooth, d) == tuple(map(float, smooth.alpha_beta(np.array([d]))[0]))
    _, x = smooth.curve.code_target(0.25, 0.75)
    a, b = predict_subdiff_1d(smooth, x)
    assert abs(a - 0.25) <= 2**-4 and abs(b - 0.75) <= 2**-4


def test_singleton_prediction(smooth):
    # where the coding curve sits on the diagonal, alpha = beta
    _, x = smooth.curve.code_target(0.5, 0.5)
    a, b = smooth.predict(x)
    assert abs(b - a) <= 2**-4


def test_spike_index_of():
    assert spike_index_of(0.5) == 1
    assert spike_index_of(0.75) == 3
    assert spike_index_of(Fraction(1, 3)) is None
    assert spike_index_of(1.0) is None and spike_index_of(0.0) is None
