"""Gradient-sampling estimates of limiting and Clarke subdifferentials.

For a differentiable ``f`` the limiting subdifferential at ``x̄`` is the set of
limits of ``∇f(x_k)`` with ``x_k -> x̄``.  The estimator samples gradients at
scrambled Halton points in shrinking annuli around ``x̄`` and, in addition,
inside the thin regions the handle reports through ``features`` (atom
supports, spike centres), which uniform samples would practically never hit.

Choice of the working radius: the smallest radius of the schedule whose ball
still contains a whole reported feature (or the last radius when the handle
reports none).  The cloud is the set of gradients in that ball, plus those of
the next larger annulus that lie within the clustering tolerance of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.stats import qmc

from .geometry import (
    BallUnion,
    ConvexBody,
    PointCloud,
    convex_hull,
    hausdorff_distance,
)
from .handles import FunctionHandle

RESOLVABLE = 1e-9  # smallest feature radius relative to its position
DEFAULT_SCHEDULE = tuple(float(r) for r in 10.0 ** np.linspace(-1.0, -6.0, 11))


class ScheduleError(ValueError):
    pass


@dataclass(eq=False)
class SubdiffEstimate:
    xbar: np.ndarray
    schedule: tuple
    samples: int
    seed: int
    cloud: PointCloud
    hull: ConvexBody
    connected: bool
    cluster_tol: float
    working_radius: float
    grad_at_xbar: np.ndarray = field(default=None)
    max_sample_norm: float = 0.0  # over every sampled gradient, not just the cloud

    def to_dict(self) -> dict:
        return {
            "xbar": [float(v) for v in self.xbar],
            "schedule": list(self.schedule),
            "samples": self.samples,
            "seed": self.seed,
            "working_radius": self.working_radius,
            "cluster_tol": self.cluster_tol,
            "connected": self.connected,
            "max_sample_norm": self.max_sample_norm,
            "hull": [[float(c) for c in v] for v in self.hull.vertices],
            "cloud": np.round(self.cloud.points, 12).tolist(),
        }


def _ball_points(sampler: qmc.Halton, n: int, dim: int, r_in: float, r_out: float) -> np.ndarray:
    """``n`` low-discrepancy points in the annulus ``r_in <= |z| <= r_out`` (area-uniform)."""
    U = sampler.random(n)
    if dim == 1:
        rad = r_in + U[:, 0] * (r_out - r_in)
        sign = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        return (rad * sign)[:, None]
    if dim == 2:
        rad = np.sqrt(r_in**2 + U[:, 0] * (r_out**2 - r_in**2))
        th = 2 * math.pi * U[:, 1]
        return np.stack([rad * np.cos(th), rad * np.sin(th)], axis=1)
    # general dimension: radial law r^dim, direction from Gaussian transform of the QMC point
    from scipy.special import ndtri

    rad = (r_in**dim + U[:, 0] * (r_out**dim - r_in**dim)) ** (1.0 / dim)
    Z = ndtri(np.clip(sampler.random(n), 1e-12, 1 - 1e-12))
    Z /= np.linalg.norm(Z, axis=1)[:, None]
    return rad[:, None] * Z


def _check_schedule(schedule) -> tuple:
    s = tuple(float(r) for r in schedule)
    if len(s) < 2:
        raise ScheduleError("schedule needs at least two radii")
    if any(r <= 0 for r in s) or any(b >= a for a, b in zip(s[:-1], s[1:])):
        raise ScheduleError("schedule must be strictly decreasing and positive")
    if s[-1] >= 1e-5:
        raise ScheduleError("schedule must reach below 1e-5")
    return s


def cloud_connected(points: np.ndarray, tol: float) -> bool:
    if len(points) <= 1:
        return True
    P = np.unique(np.round(points, 12), axis=0)
    if len(P) == 1:
        return True
    pairs = cKDTree(P).query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return False
    A = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(P), len(P)))
    ncomp, _ = connected_components(A, directed=False)
    return ncomp == 1


def estimate_limiting(f: FunctionHandle, xbar, schedule=DEFAULT_SCHEDULE, samples: int = 512,
                      seed: int = 42, cluster_tol: float = 0.02,
                      feature_samples: int = 256) -> SubdiffEstimate:
    """Sampled approximation of ``∂_L f(xbar)``; deterministic given ``seed``."""
    sched = _check_schedule(schedule)
    if samples < 256:
        raise ValueError("need at least 256 samples per radius")
    xbar = np.asarray(xbar, dtype=float).ravel()
    dim = f.dim
    if len(xbar) != dim:
        raise ValueError("base point dimension mismatch")
    rng = np.random.default_rng(seed)
    sampler = qmc.Halton(d=max(dim, 2), scramble=True, seed=rng)

    ring_pts, ring_idx = [], []
    K = len(sched)
    for k in range(K):
        r_in = sched[k + 1] if k + 1 < K else 0.0
        Z = _ball_points(sampler, samples, dim, r_in, sched[k])
        ring_pts.append(xbar + Z)
        ring_idx.append(np.full(samples, k))

    # query each radius so that handles which cap their feature lists still
    # report the finest features near x̄
    seen, feats = set(), []
    for r in sched:
        for ft in f.features(xbar, r):
            c = np.asarray(ft.center, dtype=float)
            if 0 < ft.radius < RESOLVABLE * max(1.0, float(np.max(np.abs(c)))):
                continue  # cannot be sampled in double precision
            key = (tuple(c.tolist()), ft.radius)
            if key not in seen:
                seen.add(key)
                feats.append(ft)
    kstar = K - 1
    if feats:
        kstar = -1
        for ft in feats:
            c = np.asarray(ft.center, dtype=float)
            reach = float(np.linalg.norm(c - xbar)) + ft.radius
            inside = [k for k in range(K) if reach <= sched[k]]
            if inside:
                kstar = max(kstar, inside[-1])
        if kstar < 0:
            kstar = 0
        fsampler = qmc.Halton(d=max(dim, 2), scramble=True, seed=rng)
        for ft in feats:
            c = np.asarray(ft.center, dtype=float)
            if ft.radius == 0:
                P = c[None, :]
            else:
                P = np.concatenate([c[None, :], c + _ball_points(fsampler, feature_samples, dim, 0.0, ft.radius)])
            dist = np.linalg.norm(P - xbar, axis=1)
            keep = dist <= sched[0]
            P, dist = P[keep], dist[keep]
            if len(P) == 0:
                continue
            # ring index of each point: largest k with dist <= r_k
            idx = np.searchsorted(-np.array(sched), -dist, side="right") - 1
            ring_pts.append(P)
            ring_idx.append(idx)

    H = np.asarray(f.hints(xbar, sched[max(kstar - 1, 0)]), dtype=float).reshape(-1, dim)
    if len(H):
        dist = np.linalg.norm(H - xbar, axis=1)
        keep = dist <= sched[0]
        ring_pts.append(H[keep])
        ring_idx.append(np.searchsorted(-np.array(sched), -dist[keep], side="right") - 1)

    P = np.concatenate(ring_pts)
    idx = np.concatenate(ring_idx)
    G = np.asarray(f.grad(P), dtype=float).reshape(len(P), dim)
    base = G[idx >= kstar]
    cloud = base
    if kstar > 0:
        prev = G[idx == kstar - 1]
        if len(prev):
            d, _ = cKDTree(base).query(prev)
            cloud = np.concatenate([base, prev[d <= cluster_tol]])
    cloud = np.unique(np.round(cloud, 13), axis=0)
    hull = convex_hull(PointCloud(dim, cloud))
    grad0 = np.asarray(f.grad(xbar[None, :]), dtype=float).ravel()
    return SubdiffEstimate(xbar, sched, samples, seed, PointCloud(dim, cloud), hull,
                           cloud_connected(cloud, cluster_tol), cluster_tol, sched[kstar], grad0,
                           float(np.linalg.norm(G, axis=1).max()))


def estimate_clarke(f: FunctionHandle, xbar, schedule=DEFAULT_SCHEDULE, samples: int = 512,
                    seed: int = 42, **kw) -> SubdiffEstimate:
    """Convex hull of the limiting estimate (the hull is already attached)."""
    return estimate_limiting(f, xbar, schedule, samples, seed, **kw)


def compare_to_target(est: SubdiffEstimate, target, use: str | None = None, tol: float = 1e-3) -> float:
    """Hausdorff distance from the estimate to ``target``.

    ``use`` selects ``"hull"`` or ``"cloud"``; by default the hull is compared
    with convex targets and the cloud with ball unions.
    """
    if isinstance(target, tuple) and len(target) == 2 and np.isscalar(target[0]):
        target = ConvexBody.from_points([[target[0]], [target[1]]], dim=1)
    if target.dim != est.cloud.dim:
        raise ValueError("dimension mismatch")
    if use is None:
        use = "cloud" if isinstance(target, BallUnion) else "hull"
    S = est.hull if use == "hull" else est.cloud
    return hausdorff_distance(S, target, tol)


def lipschitz_estimate(f: FunctionHandle, region, pairs: int = 4096, seed: int = 42,
                       min_sep: float = 1e-7) -> float:
    """Largest sampled ``|f(x) - f(y)| / |x - y|`` over pairs in a box.

    ``region`` is ``(lo, hi)`` with arrays of length ``dim``.  Separations are
    log-uniform between ``min_sep`` and the box diameter.  Half of the
    steps follow the gradient at the first point, the rest are isotropic.
    """
    if pairs < 1000:
        raise ValueError("need at least 1000 pairs")
    lo, hi = (np.asarray(v, dtype=float).reshape(f.dim) for v in region)
    if np.any(hi <= lo):
        raise ValueError("degenerate region")
    rng = np.random.default_rng(seed)
    diam = float(np.linalg.norm(hi - lo))
    X = lo + rng.random((pairs, f.dim)) * (hi - lo)
    sep = np.exp(rng.uniform(math.log(min_sep), math.log(diam), pairs))
    U = rng.standard_normal((pairs, f.dim))
    # half of the pairs step along the gradient, where the quotient is largest for smooth f
    half = pairs // 2
    G = np.asarray(f.grad(X[:half]), dtype=float).reshape(half, f.dim)
    moving = np.linalg.norm(G, axis=1) > 0
    U[:half][moving] = G[moving]
    U /= np.linalg.norm(U, axis=1)[:, None]
    Y = np.clip(X + sep[:, None] * U, lo, hi)
    dist = np.linalg.norm(Y - X, axis=1)
    ok = dist > 0
    fx, fy = f.value(X[ok]), f.value(Y[ok])
    # remove the rounding error of the difference so each quotient stays a lower bound
    slack = 2 * np.finfo(float).eps * (np.abs(fx) + np.abs(fy))
    q = np.maximum(np.abs(fx - fy) - slack, 0.0) / dist[ok]
    return float(q.max())


@dataclass
class ProbeReport:
    xbar: np.ndarray
    gradient: np.ndarray
    radii: np.ndarray
    quotients: np.ndarray  # (directions, radii)
    deviations: np.ndarray
    non_cauchy: np.ndarray

    @property
    def sup_quotient(self) -> np.ndarray:
        return np.max(np.abs(self.quotients), axis=0)

    def to_dict(self) -> dict:
        return {
            "xbar": self.xbar.tolist(),
            "gradient": self.gradient.tolist(),
            "radii": self.radii.tolist(),
            "quotients": self.quotients.tolist(),
            "deviations": self.deviations.tolist(),
            "non_cauchy": self.non_cauchy.tolist(),
        }


def differentiability_probe(f: FunctionHandle, xbar, directions, radii, flag_tol: float = 0.05) -> ProbeReport:
    """One-sided difference quotients ``(f(x̄ + r u) - f(x̄)) / r`` per direction."""
    xbar = np.asarray(xbar, dtype=float).ravel()
    U = np.atleast_2d(np.asarray(directions, dtype=float))
    if not np.allclose(np.linalg.norm(U, axis=1), 1.0, atol=1e-12):
        raise ValueError("directions must be unit vectors")
    R = np.asarray(radii, dtype=float)
    f0 = float(f.value(xbar[None, :])[0])
    grad = np.asarray(f.grad(xbar[None, :]), dtype=float).ravel()
    P = xbar[None, None, :] + R[None, :, None] * U[:, None, :]
    vals = f.value(P.reshape(-1, f.dim)).reshape(len(U), len(R))
    Q = (vals - f0) / R[None, :]
    dev = np.abs(Q - (U @ grad)[:, None])
    half = max(1, len(R) // 2)
    noncauchy = (dev[:, -1] > flag_tol) | (dev[:, -1] > dev[:, -half] + 1e-12)
    return ProbeReport(xbar, grad, R, Q, dev, noncauchy)
