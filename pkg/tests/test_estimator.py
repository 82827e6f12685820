import numpy as np
import pytest

from subdiffrange.acceptance import smooth_instance
from subdiffrange.estimator import (
    ScheduleError,
    cloud_connected,
    compare_to_target,
    differentiability_probe,
    estimate_clarke,
    estimate_limiting,
    lipschitz_estimate,
)
from subdiffrange.geometry import ConvexBody, interval, point_distance
from subdiffrange.handles import AbsFirstCoordinate, LinearHandle, QuadraticHandle


@pytest.fixture(scope="module")
def smooth():
    return smooth_instance()


def _single(q):
    return ConvexBody.from_points([list(q)])


def test_linear_singleton():
    f = LinearHandle([0.3, -0.4])
    est = estimate_clarke(f, [0.1, 0.2])
    assert len(est.cloud.points) == 1
    assert compare_to_target(est, _single([0.3, -0.4])) <= 1e-12
    assert est.connected


def test_abs_segment():
    f = AbsFirstCoordinate(2)
    est = estimate_clarke(f, [0.0, 0.0])
    seg = ConvexBody.from_points([[-1.0, 0.0], [1.0, 0.0]])
    assert compare_to_target(est, seg) <= 0.01
    # limiting subdifferential of |x_1| is two points, and they are far apart
    assert not est.connected
    pts = np.unique(np.round(est.cloud.points, 9), axis=0)
    assert pts.tolist() == [[-1.0, 0.0], [1.0, 0.0]]


def test_abs_away_from_kink():
    est = estimate_clarke(AbsFirstCoordinate(2), [0.5, 0.0])
    assert compare_to_target(est, _single([1.0, 0.0])) <= 1e-12


def test_one_dimensional_coded_target(smooth):
    _, x = smooth.curve.code_target(0.25, 0.75)
    est = estimate_clarke(smooth, [x])
    assert compare_to_target(est, (0.25, 0.75)) <= 0.05
    assert compare_to_target(est, interval(0.25, 0.75)) <= 0.05


def test_gradient_at_base_point_in_hull(smooth):
    for f, x in ((AbsFirstCoordinate(2), [0.0, 0.0]), (QuadraticHandle(np.eye(2)), [0.2, -0.1])):
        est = estimate_clarke(f, x)
        assert point_distance(est.hull, est.grad_at_xbar[None, :])[0] <= 1e-6
    _, x = smooth.curve.code_target(0.0, 0.5)
    est = estimate_clarke(smooth, [x])
    assert point_distance(est.hull, est.grad_at_xbar[None, :])[0] <= 1e-6


def test_determinism():
    f = AbsFirstCoordinate(2)
    a = estimate_clarke(f, [0.0, 0.1], seed=3).to_dict()
    b = estimate_clarke(f, [0.0, 0.1], seed=3).to_dict()
    assert a == b


def test_quadratic_shrinks_to_gradient():
    f = QuadraticHandle(np.diag([1.0, 2.0]), [0.1, 0.0])
    est = estimate_clarke(f, [0.3, 0.2])
    assert compare_to_target(est, _single([0.4, 0.4])) <= 1e-4


def test_schedule_errors():
    f = LinearHandle([1.0])
    for bad in ([0.1], [0.1, 0.2, 1e-6], [0.1, 1e-3], [0.1, -1e-6]):
        with pytest.raises(ScheduleError):
            estimate_clarke(f, [0.0], schedule=bad)
    with pytest.raises(ValueError):
        estimate_clarke(f, [0.0], samples=10)
    with pytest.raises(ValueError):
        estimate_clarke(f, [0.0, 0.0])


def test_compare_singleton_vs_segment():
    est = estimate_clarke(LinearHandle([0.0, 0.0]), [0.0, 0.0])
    seg = ConvexBody.from_points([[-0.5, 0.0], [0.5, 0.0]])
    assert compare_to_target(est, seg) == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(ValueError):
        compare_to_target(est, (0.0, 1.0))


def test_budget_monotone(smooth):
    _, x = smooth.curve.code_target(0.25, 0.75)
    errs = [compare_to_target(estimate_clarke(smooth, [x], samples=n), (0.25, 0.75))
            for n in (256, 512, 1024, 2048, 4096)]
    assert all(b <= a + 1e-3 for a, b in zip(errs[:-1], errs[1:]))


def test_lipschitz_estimate():
    f = LinearHandle([0.6, 0.8])
    assert lipschitz_estimate(f, ((-1, -1), (1, 1))) == pytest.approx(1.0, abs=1e-9)
    assert lipschitz_estimate(f, ((-1, -1), (1, 1)), seed=1) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        lipschitz_estimate(f, ((-1, -1), (1, 1)), pairs=999)
    with pytest.raises(ValueError):
        lipschitz_estimate(f, ((0, 0), (0, 1)))


def test_lipschitz_tilde(smooth):
    from subdiffrange.onedim import tilde

    L = lipschitz_estimate(tilde(smooth), ((0.0,), (1.0,)))
    assert 0.9 <= L <= 1 + 1e-9


def test_probe_quadratic():
    f = QuadraticHandle(np.eye(2))
    U = np.array([[1.0, 0.0], [0.0, 1.0], [np.sqrt(0.5), np.sqrt(0.5)]])
    R = 10.0 ** -np.arange(1, 7)
    rep = differentiability_probe(f, [0.0, 0.0], U, R)
    assert np.allclose(rep.deviations, 0.5 * R[None, :], rtol=1e-6)
    assert not rep.non_cauchy.any()
    rep = differentiability_probe(AbsFirstCoordinate(2), [0.0, 0.0], U, R)
    assert rep.non_cauchy[0] is np.True_ or rep.deviations[1, -1] == 0
    with pytest.raises(ValueError):
        differentiability_probe(f, [0.0, 0.0], [[2.0, 0.0]], R)


def test_cloud_connected():
    assert cloud_connected(np.array([[0.0, 0.0], [0.01, 0.0], [0.02, 0.0]]), 0.015)
    assert not cloud_connected(np.array([[0.0, 0.0], [1.0, 0.0]]), 0.1)
    assert cloud_connected(np.zeros((1, 2)), 0.1)
