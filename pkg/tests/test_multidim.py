import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from subdiffrange.acceptance import (
    accumulation_points,
    fd_points,
    lemma_instance,
    sweep_accumulation,
    sweep_gradient_check,
    theorem_instance,
)
from subdiffrange.coding import default_eps
from subdiffrange.estimator import lipschitz_estimate
from subdiffrange.geometry import BallUnion, ConvexBody, hausdorff_distance, regular_polygon
from subdiffrange.handles import LinearHandle
from subdiffrange.multidim import (
    AssemblyError,
    Ball,
    BumpSpec,
    assemble_global,
    atom_alpha,
    atoms_disjoint_exact,
    build_convex_bump,
    chained_union_bump,
    dyadic_enumeration,
    flat_spot_bump,
    mollified_bump,
    qstar_sequence,
    spaceability_blocks,
    spaceable_sum,
    support_bump_hat,
)


@pytest.fixture(scope="module")
def lemma():
    return lemma_instance()


@pytest.fixture(scope="module")
def theorem():
    return theorem_instance()


@pytest.fixture(scope="module")
def blocks():
    return spaceability_blocks(3)


# enumeration and atoms ----------------------------------------------------------

def test_dyadic_examples():
    assert [dyadic_enumeration(n) for n in (1, 2, 3, 4, 7)] == [
        Fraction(1, 2), Fraction(1, 4), Fraction(3, 4), Fraction(1, 8), Fraction(7, 8)]


def test_atoms_disjoint_exact():
    assert atoms_disjoint_exact(4096)
    with pytest.raises(AssemblyError):
        atoms_disjoint_exact(0)


@given(st.integers(1, 400), st.integers(1, 400))
def test_atom_pairs_disjoint(n, m):
    if n == m:
        return
    dn, dm = dyadic_enumeration(n), dyadic_enumeration(m)
    dist2 = (dn - dm) ** 2 + (atom_alpha(n) - atom_alpha(m)) ** 2
    assert dist2 > (default_eps(n) + default_eps(m)) ** 2


# support bumps ---------------------------------------------------------------------

SQUARE = ConvexBody.from_points([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])


def test_support_bump_hat_examples():
    x = np.array([[0.0, 0.0], [0.1, 0.0], [0.4, 0.4], [2.0, 0.0]])
    v = support_bump_hat(SQUARE, 0.5, x)
    assert np.allclose(v, [-0.5, -0.45, -0.1, 0.0])
    with pytest.raises(AssemblyError):
        support_bump_hat(SQUARE, 0.0, x)


def test_mollified_gradient_deep_in_cone():
    spec = BumpSpec(SQUARE)
    B = build_convex_bump(SQUARE)
    for i, V in enumerate(B.cells):
        # the incenter lies farther than the mollifier radius from every edge
        side = np.linalg.norm(np.roll(V, -1, axis=0) - np.roll(V, 1, axis=0), axis=1)
        z = side @ V / side.sum()
        _, g = mollified_bump(spec, z[None, :])
        assert np.allclose(g[0], B.slopes[i], atol=1e-12)


def test_mollified_gradient_in_hull():
    B = build_convex_bump(SQUARE)
    Z = np.random.default_rng(0).uniform(-1, 1, (5000, 2))
    v, g = B.value_grad(Z)
    assert np.all(np.abs(g) <= 0.5 + 1e-12)
    assert np.all(v <= 1e-15)
    out = np.linalg.norm(Z, axis=1) >= B.radius
    assert np.all(v[out] == 0) and np.all(g[out] == 0)


@given(st.integers(3, 9), st.floats(0.2, 0.9), st.floats(0, 6.28))
def test_convex_bump_range_hausdorff(m, r, phase):
    H = regular_polygon((0.05, -0.02), r, m, phase)
    B = build_convex_bump(H)
    Z = np.random.default_rng(m).uniform(-1, 1, (4000, 2))
    _, g = B.value_grad(Z)
    lip = np.max(np.linalg.norm(H.to_float().array, axis=1))
    assert np.all(np.linalg.norm(g, axis=1) <= lip + 1e-9)
    assert hausdorff_distance(ConvexBody.from_points(g.tolist()), H, 1e-3) <= 0.05


def test_bump_spec_validation():
    with pytest.raises(AssemblyError):
        BumpSpec(SQUARE, c=-1.0)
    with pytest.raises(AssemblyError):
        BumpSpec(SQUARE, nu=0.0)


def test_flat_spot_bump():
    xs, delta = np.array([0.3, -0.2]), 0.1
    rng = np.random.default_rng(1)
    Z = rng.uniform(-1, 1, (4000, 2)) * delta
    Z = Z[np.linalg.norm(Z, axis=1) < delta]
    _, g = flat_spot_bump(xs, delta, Z)
    assert np.allclose(g, xs, atol=1e-12)
    far = rng.normal(size=(200, 2))
    far = 1.01 * far / np.linalg.norm(far, axis=1)[:, None]
    v, g = flat_spot_bump(xs, delta, far)
    assert np.all(v == 0) and np.all(g == 0)

    class H(LinearHandle):
        dim = 2

        def value(self, X):
            return flat_spot_bump(xs, delta, self._pts(X))[0]

    h = H([0.0, 0.0])
    assert lipschitz_estimate(h, ((-1, -1), (1, 1)), pairs=4000) <= 1 + 1e-9
    with pytest.raises(AssemblyError):
        flat_spot_bump([1.0, 0.0], delta, Z)


def test_chained_union_bump_range():
    U = BallUnion(2, ((0.2, 0.1), (-0.2, 0.1)), (0.3, 0.3))
    Z = np.random.default_rng(3).uniform(-1, 1, (20000, 2))
    _, g = chained_union_bump(U, Z)
    d = np.linalg.norm(g[:, None, :] - np.asarray(U.centers)[None], axis=2) - np.asarray(U.radii)
    assert np.all(np.min(d, axis=1) <= 0.02)


# lemma function ----------------------------------------------------------------------

def test_lemma_value_at_atom_centre(lemma):
    for n in (1, 2, 5):
        a = lemma.atom(n)
        v = lemma.value(a.center[None, :])[0]
        assert v == pytest.approx(a.eps * a.bump.value_grad(np.zeros(2))[0][0], rel=1e-12)
        # mollification moves the clipped value by at most nu times the slope bound
        assert abs(v / a.eps + a.bump.c) <= a.bump.nu


def test_lemma_zero_outside_square(lemma):
    X = np.array([[-0.1, 0.5], [1.2, 0.3], [0.5, -1e-3], [0.5, 1.5], [0.3, 0.0]])
    assert np.all(lemma.value(X) == 0) and np.all(lemma.grad(X) == 0)


def test_lemma_gradients_in_C(lemma):
    X = np.random.default_rng(4).uniform(0, 1, (20000, 2)) * [1, 0.6]
    g = lemma.grad(X)
    assert np.all(np.linalg.norm(g, axis=1) <= 1 + 1e-12)


def test_lemma_config_rejects(lemma):
    with pytest.raises(AssemblyError):
        type(lemma)(Ball((0.0, 0.0), 1.0), lemma.tour, cutoff=0)
    with pytest.raises(AssemblyError):
        type(lemma)(Ball((0.0, 0.0), 1.0), lemma.tour, kind="other")


def test_lemma_fd_gradient():
    r = sweep_gradient_check(seed=7, count=300)
    assert r.passed, r.metrics


def test_fd_points_region():
    X = fd_points(3, 200)
    assert np.all(X[:, 1] >= 0.3) and np.all((0 <= X) & (X <= 1))


# theorem function ---------------------------------------------------------------------

def test_theorem_flats(theorem):
    rng = np.random.default_rng(5)
    for m in range(8):
        c, e = theorem.centers[m], theorem.carrier_eps[m]
        ring = rng.normal(size=(50, 2))
        ring /= np.linalg.norm(ring, axis=1)[:, None]
        # inside the flat ball but outside the block square
        P = c + ring * e * theorem.flat_delta * 0.99
        P = P[np.max(np.abs(P - c), axis=1) > theorem.lam[m] / 2]
        assert np.allclose(theorem.grad(P), theorem.qstar[m], atol=1e-12)


def test_theorem_gradient_at_ell(theorem):
    assert np.all(theorem.grad(theorem.ell[None, :]) == 0)
    assert theorem.value(theorem.ell[None, :])[0] == 0


def test_theorem_carrier_ratio(theorem):
    ratio = theorem.carrier_eps / np.linalg.norm(theorem.centers - theorem.ell, axis=1)
    assert np.all(np.diff(ratio) < 0)


def test_qstar_in_ball():
    Q = qstar_sequence(200)
    assert np.all(np.linalg.norm(Q, axis=1) < 0.95)
    assert np.array_equal(Q, qstar_sequence(200))


def test_accumulation_probe():
    pts = accumulation_points(count=4)
    assert len(pts) == 4
    r = sweep_accumulation(count=4, directions=16)
    assert r.passed, r.metrics


# global sum ----------------------------------------------------------------------------

def test_global_lipschitz_and_support(lemma):
    G = assemble_global([lemma, lemma, lemma], sup_bound=0.01)
    assert G.lipschitz == 3
    gmax = 0.0
    for n in (1, 2, 3):
        X = np.array([G.block_point(n, y) for y in np.random.default_rng(n).uniform(0, 1, (3000, 2))])
        gmax = max(gmax, float(np.max(np.linalg.norm(G.grad(X), axis=1))))
        assert np.max(np.abs(G.value(X))) < 0.01
    assert gmax <= 3 + 1e-9 and gmax > 2
    far = np.array([[1.5, 0.0], [4.5, 0.0], [0.0, 2.0]])
    assert np.all(G.value(far) == 0)
    with pytest.raises(AssemblyError):
        assemble_global([])
    with pytest.raises(AssemblyError):
        assemble_global([lemma], sup_bound=-1)


# spaceability ----------------------------------------------------------------------------

def test_spaceable_zero(blocks):
    T = spaceable_sum([0.0, 0.0], blocks)
    x = np.linspace(-1, 30, 500)
    assert np.all(T.value(x) == 0) and np.all(T.grad(x) == 0)


def test_spaceable_unit_norm(blocks):
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1.0
        T = spaceable_sum(e, blocks)
        lo, hi = blocks[i].support
        x = np.linspace(lo - 1, hi + 1, 20001)
        g = np.abs(T.grad(x))
        assert g.max() <= 1 + 1e-12 and g.max() >= 0.99
        assert T.value(np.array([lo - 0.5, hi + 0.5])).tolist() == [0.0, 0.0]


def test_spaceable_linearity(blocks):
    x = np.linspace(-1, 24, 3001)
    a = spaceable_sum([0.5, -0.25, 2.0], blocks)
    parts = [spaceable_sum(np.eye(3)[i], blocks) for i in range(3)]
    assert np.allclose(a.value(x), 0.5 * parts[0].value(x) - 0.25 * parts[1].value(x) + 2 * parts[2].value(x))


def test_spaceable_block_continuity(blocks):
    B = blocks[0]
    lo, hi = B.support
    x = np.linspace(lo, hi, 200001)
    v = B.value(x)
    assert np.max(np.abs(np.diff(v))) <= np.max(np.diff(x)) * (1 + 1e-9)


def test_spaceable_errors(blocks):
    with pytest.raises(AssemblyError):
        spaceable_sum([1, 1, 1, 1], blocks)
    with pytest.raises(AssemblyError):
        spaceable_sum([1, 1], [blocks[0], blocks[0]])
