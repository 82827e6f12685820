"""Compact sets in R^N: polytopes, ball unions, point clouds.

Convex bodies are stored as V-polytopes in canonical form, so two bodies are
equal exactly when their vertex tuples are equal.  Coordinates are either
floats or :class:`fractions.Fraction` (exact mode).  Planar work is the
primary use; polytope distance and clipping are implemented for dim <= 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

Number = Union[float, Fraction]


class GeometryError(ValueError):
    """Invalid body, dimension mismatch or bad tolerance."""


def _coerce(x, exact: bool) -> Number:
    if exact:
        return x if isinstance(x, Fraction) else Fraction(x)
    return float(x)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull_2d(pts: list[tuple]) -> list[tuple]:
    """Andrew's monotone chain; collinear points dropped, CCW order."""
    pts = sorted(set(pts))
    if len(pts) <= 2:
        return pts
    lower: list[tuple] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) == 2 and hull[0] == hull[1]:
        hull = hull[:1]
    return hull


def _canonical(points: Sequence[Sequence], dim: int, exact: bool) -> tuple:
    pts = [tuple(_coerce(c, exact) for c in p) for p in points]
    if not pts:
        raise GeometryError("empty vertex list")
    if any(len(p) != dim for p in pts):
        raise GeometryError("vertex dimension mismatch")
    if dim == 1:
        lo, hi = min(pts), max(pts)
        return (lo,) if lo == hi else (lo, hi)
    if dim == 2:
        hull = _hull_2d(pts)
        # monotone chain already starts at the lexicographic minimum
        return tuple(hull)
    uniq = sorted(set(pts))
    if len(uniq) <= dim:
        return tuple(uniq)
    from scipy.spatial import ConvexHull

    arr = np.array(uniq, dtype=float)
    try:
        idx = ConvexHull(arr).vertices
    except Exception:  # degenerate (flat) point sets keep every point
        return tuple(uniq)
    return tuple(sorted(uniq[i] for i in idx))


@dataclass(frozen=True)
class ConvexBody:
    """Convex polytope ``conv(vertices)`` in canonical form.

    Build through :meth:`from_points`; the constructor assumes the vertex
    tuple is already canonical.
    """

    dim: int
    vertices: tuple
    exact: bool = False

    @classmethod
    def from_points(cls, points, exact: bool = False, dim: int | None = None) -> "ConvexBody":
        points = [tuple(p) for p in points]
        if not points:
            raise GeometryError("empty vertex list")
        d = dim if dim is not None else len(points[0])
        return cls(d, _canonical(points, d, exact), exact)

    @cached_property
    def array(self) -> np.ndarray:
        return np.array([[float(c) for c in v] for v in self.vertices], dtype=float)

    def to_float(self) -> "ConvexBody":
        if not self.exact:
            return self
        return ConvexBody.from_points(self.array.tolist())

    @cached_property
    def edge_normals(self) -> np.ndarray:
        """Outward unit normals of the edges (2D, CCW order)."""
        if self.dim != 2 or len(self.vertices) < 3:
            raise GeometryError("edge normals need a 2D polygon with interior")
        v = self.array
        e = np.roll(v, -1, axis=0) - v
        n = np.stack([e[:, 1], -e[:, 0]], axis=1)
        return n / np.linalg.norm(n, axis=1)[:, None]

    def contains(self, x, tol: float = 1e-12) -> bool:
        return bool(point_distance(self, np.asarray(x, dtype=float)[None, :])[0] <= tol)

    @property
    def diameter(self) -> float:
        v = self.array
        if len(v) == 1:
            return 0.0
        return float(np.max(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=2)))

    @property
    def max_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.array, axis=1)))


@dataclass(frozen=True, eq=False)
class BallUnion:
    """Finite union of closed balls with its overlap graph."""

    dim: int
    centers: np.ndarray
    radii: np.ndarray
    adjacency: tuple = field(init=False)
    connected: bool = field(init=False)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        r = np.asarray(self.radii, dtype=float).ravel()
        if len(c) == 0 or len(c) != len(r):
            raise GeometryError("centers and radii must be nonempty and of equal length")
        if np.any(r <= 0):
            raise GeometryError("radii must be positive")
        if c.shape[1] != self.dim:
            raise GeometryError("center dimension mismatch")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", r)
        k = len(r)
        adj = []
        for i in range(k):
            row = []
            for j in range(k):
                if i != j and np.linalg.norm(c[i] - c[j]) < r[i] + r[j]:
                    row.append(j)
            adj.append(tuple(row))
        object.__setattr__(self, "adjacency", tuple(adj))
        seen, stack = {0}, [0]
        while stack:
            for j in adj[stack.pop()]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        object.__setattr__(self, "connected", len(seen) == k)

    def __eq__(self, other):
        return (
            isinstance(other, BallUnion)
            and np.array_equal(self.centers, other.centers)
            and np.array_equal(self.radii, other.radii)
        )

    def __hash__(self):
        return hash((self.centers.tobytes(), self.radii.tobytes()))

    def distance(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        d = np.linalg.norm(x[:, None, :] - self.centers[None, :, :], axis=2) - self.radii
        return np.maximum(d.min(axis=1), 0.0)

    def inflate(self, delta: float) -> "BallUnion":
        return BallUnion(self.dim, self.centers.copy(), self.radii + delta)

    def translate(self, shift) -> "BallUnion":
        return BallUnion(self.dim, self.centers + np.asarray(shift, dtype=float), self.radii.copy())

    def contains(self, x, tol: float = 1e-12) -> bool:
        return bool(self.distance(np.asarray(x, dtype=float))[0] <= tol)


@dataclass(frozen=True, eq=False)
class PointCloud:
    dim: int
    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).reshape(-1, self.dim)
        object.__setattr__(self, "points", p)

    def __len__(self):
        return len(self.points)

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.points)

    def distance(self, x: np.ndarray) -> np.ndarray:
        d, _ = self.tree.query(np.atleast_2d(x))
        return np.asarray(d, dtype=float)


CompactSet = Union[ConvexBody, BallUnion, PointCloud]


# ---------------------------------------------------------------------------
# support function, hull, distances


def support_value(K: ConvexBody, u) -> Number:
    """``max_{p in K} <p, u>``; exact when ``K`` is exact and ``u`` rational."""
    if not K.vertices:
        raise GeometryError("invalid body: no vertices")
    u = tuple(u)
    if len(u) != K.dim:
        raise GeometryError("direction dimension mismatch")
    if K.exact and all(isinstance(c, (int, Fraction)) for c in u):
        return max(sum(Fraction(pi) * Fraction(ui) for pi, ui in zip(p, u)) for p in K.vertices)
    return float(np.max(K.array @ np.asarray(u, dtype=float)))


def support_values(K: ConvexBody, U: np.ndarray) -> np.ndarray:
    """Vectorised support function for rows of ``U``."""
    return np.max(np.atleast_2d(U) @ K.array.T, axis=1)


def convex_hull(points, exact: bool = False) -> ConvexBody:
    if isinstance(points, PointCloud):
        pts = points.points
        dim = points.dim
    else:
        pts = list(points)
        if len(pts) == 0:
            raise GeometryError("empty input")
        dim = len(pts[0])
    if len(pts) == 0:
        raise GeometryError("empty input")
    if exact:
        return ConvexBody.from_points(pts, exact=True, dim=dim)
    return ConvexBody.from_points(np.asarray(pts, dtype=float).tolist(), dim=dim)


def _segment_distance(x: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    L2 = float(ab @ ab)
    if L2 == 0.0:
        return np.linalg.norm(x - a, axis=1)
    t = np.clip(((x - a) @ ab) / L2, 0.0, 1.0)
    return np.linalg.norm(x - (a + t[:, None] * ab), axis=1)


def point_distance(K: ConvexBody, x: np.ndarray) -> np.ndarray:
    """Euclidean distance from each row of ``x`` to ``K`` (dim <= 2)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = K.array
    if K.dim == 1:
        lo, hi = v[:, 0].min(), v[:, 0].max()
        return np.maximum(np.maximum(lo - x[:, 0], x[:, 0] - hi), 0.0)
    if K.dim != 2:
        raise GeometryError("polytope distance implemented for dim <= 2")
    if len(v) == 1:
        return np.linalg.norm(x - v[0], axis=1)
    if len(v) == 2:
        return _segment_distance(x, v[0], v[1])
    nxt = np.roll(v, -1, axis=0)
    inside = np.ones(len(x), dtype=bool)
    dist = np.full(len(x), np.inf)
    for a, b in zip(v, nxt):
        inside &= ((b[0] - a[0]) * (x[:, 1] - a[1]) - (b[1] - a[1]) * (x[:, 0] - a[0])) >= 0
        dist = np.minimum(dist, _segment_distance(x, a, b))
    dist[inside] = 0.0
    return dist


def _dist_sq_exact(p: tuple, K: ConvexBody) -> Fraction:
    verts = K.vertices
    if K.dim == 1:
        lo, hi = verts[0][0], verts[-1][0]
        d = max(lo - p[0], p[0] - hi, Fraction(0))
        return d * d

    def seg(a, b):
        ab = (b[0] - a[0], b[1] - a[1])
        ap = (p[0] - a[0], p[1] - a[1])
        L2 = ab[0] ** 2 + ab[1] ** 2
        t = Fraction(0) if L2 == 0 else min(max((ap[0] * ab[0] + ap[1] * ab[1]) / L2, Fraction(0)), Fraction(1))
        q = (a[0] + t * ab[0] - p[0], a[1] + t * ab[1] - p[1])
        return q[0] ** 2 + q[1] ** 2

    if len(verts) == 1:
        return (p[0] - verts[0][0]) ** 2 + (p[1] - verts[0][1]) ** 2
    if len(verts) == 2:
        return seg(verts[0], verts[1])
    n = len(verts)
    if all(_cross(verts[i], verts[(i + 1) % n], p) >= 0 for i in range(n)):
        return Fraction(0)
    return min(seg(verts[i], verts[(i + 1) % n]) for i in range(n))


def hausdorff_sq_exact(A: ConvexBody, B: ConvexBody) -> Fraction:
    """Squared Hausdorff distance of two exact polytopes, in rationals."""
    if not (A.exact and B.exact):
        raise GeometryError("exact Hausdorff distance needs exact bodies")
    if A.dim != B.dim:
        raise GeometryError("dimension mismatch")
    a = max(_dist_sq_exact(p, B) for p in A.vertices)
    b = max(_dist_sq_exact(p, A) for p in B.vertices)
    return max(a, b)


def _cover_samples(S: CompactSet, tol: float, boundary_only: bool) -> np.ndarray:
    """Finite subset of ``S`` whose covering radius of the relevant part is <= tol.

    ``boundary_only`` is allowed when the sup of the distance to the other set
    is attained on the boundary (the other set is convex).
    """
    if isinstance(S, PointCloud):
        return S.points
    if isinstance(S, ConvexBody):
        if boundary_only:
            return S.array
        return _polygon_grid(S, tol)
    pts = []
    for c, r in zip(S.centers, S.radii):
        m = max(8, int(math.ceil(2 * math.pi * r / tol)))
        th = np.linspace(0.0, 2 * math.pi, m, endpoint=False)
        pts.append(c + r * np.stack([np.cos(th), np.sin(th)], axis=1))
        if not boundary_only:
            h = tol
            g = np.arange(-r, r + h, h)
            X, Y = np.meshgrid(g, g)
            P = np.stack([X.ravel(), Y.ravel()], axis=1)
            pts.append(c + P[np.einsum("ij,ij->i", P, P) <= r * r])
    return np.concatenate(pts)


def _polygon_grid(K: ConvexBody, tol: float) -> np.ndarray:
    v = K.array
    if K.dim == 1:
        lo, hi = v[:, 0].min(), v[:, 0].max()
        return np.linspace(lo, hi, max(2, int(math.ceil((hi - lo) / tol)) + 1))[:, None]
    lo, hi = v.min(axis=0), v.max(axis=0)
    gx = np.arange(lo[0], hi[0] + tol, tol)
    gy = np.arange(lo[1], hi[1] + tol, tol)
    X, Y = np.meshgrid(gx, gy)
    P = np.stack([X.ravel(), Y.ravel()], axis=1)
    P = P[point_distance(K, P) == 0.0]
    # boundary samples keep the covering radius valid for thin bodies
    nxt = np.roll(v, -1, axis=0)
    bd = [v]
    for a, b in zip(v, nxt):
        m = int(math.ceil(np.linalg.norm(b - a) / tol))
        if m > 1:
            t = np.linspace(0, 1, m, endpoint=False)[1:]
            bd.append(a + t[:, None] * (b - a))
    return np.concatenate([P] + bd)


def _distance_to(S: CompactSet, x: np.ndarray) -> np.ndarray:
    if isinstance(S, ConvexBody):
        return point_distance(S, x)
    return S.distance(x)


def hausdorff_distance(A: CompactSet, B: CompactSet, tol: float = 1e-3) -> float:
    """Hausdorff distance ``max(sup_A d(., B), sup_B d(., A))``.

    Exact (up to float rounding) for two polytopes: the distance to a convex
    set is a convex function, so each one-sided sup sits at a vertex.  Other
    combinations use a covering sample with radius ``tol``; the result is then
    within ``tol`` of the true value.
    """
    if tol <= 0:
        raise GeometryError("tol must be positive")
    if A.dim != B.dim:
        raise GeometryError("dimension mismatch")
    if isinstance(A, ConvexBody) and isinstance(B, ConvexBody) and A.exact and B.exact:
        return math.sqrt(hausdorff_sq_exact(A, B))
    sa = _cover_samples(A, tol, boundary_only=isinstance(B, ConvexBody))
    sb = _cover_samples(B, tol, boundary_only=isinstance(A, ConvexBody))
    if len(sa) == 0 or len(sb) == 0:
        raise GeometryError("empty set")
    return float(max(_distance_to(B, sa).max(), _distance_to(A, sb).max()))


# ---------------------------------------------------------------------------
# constructions


def minkowski_interpolate(K0: ConvexBody, K1: ConvexBody, lam: Number) -> ConvexBody:
    """``(1 - lam) K0 + lam K1`` as the hull of pairwise vertex combinations."""
    if K0.dim != K1.dim:
        raise GeometryError("dimension mismatch")
    if not (0 <= lam <= 1):
        raise GeometryError("lambda must lie in [0, 1]")
    if lam == 0:
        return K0
    if lam == 1:
        return K1
    exact = K0.exact and K1.exact and isinstance(lam, (int, Fraction))
    if exact:
        lam = Fraction(lam)
        pts = [tuple((1 - lam) * a + lam * b for a, b in zip(p, q)) for p in K0.vertices for q in K1.vertices]
        return ConvexBody.from_points(pts, exact=True, dim=K0.dim)
    lam = float(lam)
    P = ((1 - lam) * K0.array[:, None, :] + lam * K1.array[None, :, :]).reshape(-1, K0.dim)
    return ConvexBody.from_points(P.tolist(), dim=K0.dim)


def minkowski_sum(K0: ConvexBody, K1: ConvexBody) -> ConvexBody:
    P = (K0.array[:, None, :] + K1.array[None, :, :]).reshape(-1, K0.dim)
    return ConvexBody.from_points(P.tolist(), dim=K0.dim)


def ball_resolution(r: float, tol: float) -> int:
    """Vertex count of an inscribed regular polygon with sagitta <= tol."""
    if tol <= 0:
        raise GeometryError("tol must be positive")
    if tol >= r:
        return 8
    return max(8, int(math.ceil(math.pi / math.sqrt(2.0 * tol / r))))


def regular_polygon(center, r: float, m: int, phase: float = 0.0) -> ConvexBody:
    th = phase + 2 * math.pi * np.arange(m) / m
    c = np.asarray(center, dtype=float)
    return ConvexBody.from_points((c + r * np.stack([np.cos(th), np.sin(th)], axis=1)).tolist())


def disk(center, r: float, tol: float = 1e-3) -> ConvexBody:
    """Inscribed polygon of the closed disk with Hausdorff slack <= tol."""
    return regular_polygon(center, r, ball_resolution(r, tol))


def _clip(subject: list, clipper: list) -> list:
    """Sutherland-Hodgman clipping of a convex polygon by a convex CCW polygon."""
    out = subject
    n = len(clipper)
    for i in range(n):
        a, b = clipper[i], clipper[(i + 1) % n]
        inp, out = out, []
        if not inp:
            break
        for j in range(len(inp)):
            p, q = inp[j], inp[(j + 1) % len(inp)]
            sp, sq = _cross(a, b, p), _cross(a, b, q)
            if sp >= 0:
                out.append(p)
            if (sp >= 0) != (sq >= 0):
                t = sp / (sp - sq)
                out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def clip_halfplane(K: ConvexBody, u, c: float) -> ConvexBody | None:
    """``K ∩ {x : <x, u> <= c}`` for a 2D polygon; ``None`` when empty."""
    u = np.asarray(u, dtype=float)
    P = K.array
    s = P @ u - c
    # points within rounding of the line count as on it; otherwise a body that
    # has degenerated to a segment can lose its endpoint on the line
    s[np.abs(s) <= 1e-12 * max(1.0, float(np.abs(P).max()) * float(np.abs(u).max()))] = 0.0
    out = []
    n = len(P)
    for i in range(n):
        j = (i + 1) % n
        if s[i] <= 0:
            out.append(P[i])
        if n > 1 and (s[i] < 0 < s[j] or s[j] < 0 < s[i]):
            t = s[i] / (s[i] - s[j])
            out.append(P[i] + t * (P[j] - P[i]))
    if not out:
        return None
    return ConvexBody.from_points(np.array(out).tolist())


def clip_polygons(K: ConvexBody, W: ConvexBody) -> ConvexBody | None:
    """``K ∩ W`` for 2D convex polygons; ``None`` when empty."""
    if K.dim != 2 or W.dim != 2:
        raise GeometryError("clipping implemented for 2D")
    subj = [tuple(map(float, v)) for v in K.vertices]
    clip = [tuple(map(float, v)) for v in W.vertices]
    if len(clip) < 3:
        raise GeometryError("clip window needs interior")
    if len(subj) < 3:
        # segment or point: keep the parts inside W
        pts = K.array
        if len(pts) == 1:
            return K if W.contains(pts[0]) else None
        t = np.linspace(0, 1, 2049)
        seg = pts[0] + t[:, None] * (pts[1] - pts[0])
        keep = seg[point_distance(W, seg) == 0.0]
        return ConvexBody.from_points(keep.tolist()) if len(keep) else None
    res = _clip(subj, clip)
    if not res:
        return None
    return ConvexBody.from_points(res)


def intersect_body_ball(K: ConvexBody, center, r: float, tol: float = 1e-3) -> ConvexBody | None:
    """Polygonal ``K ∩ B̄(center, r)`` with Hausdorff error <= tol.

    The ball is replaced by its inscribed polygon from :func:`ball_resolution`,
    so the result never leaves the true ball.  Returns ``K`` itself when it
    already lies in the ball and ``None`` when the intersection is empty.
    """
    if tol <= 0:
        raise GeometryError("tol must be positive")
    if r <= 0:
        raise GeometryError("radius must be positive")
    c = np.asarray(center, dtype=float)
    if np.all(np.linalg.norm(K.array - c, axis=1) <= r):
        return K
    if K.dim != 2:
        raise GeometryError("ball clipping implemented for 2D")
    return clip_polygons(K.to_float(), disk(c, r, tol))


# ---------------------------------------------------------------------------
# serialisation


def _num_out(x):
    if isinstance(x, Fraction):
        return str(x)
    return float(x)


def _num_in(x, exact: bool):
    if exact:
        return Fraction(x)
    return float(x)


def body_to_dict(K: ConvexBody) -> dict:
    d = {"dim": K.dim, "vertices": [[_num_out(c) for c in v] for v in K.vertices]}
    if K.exact:
        d["exact"] = True
    return d


def body_from_dict(d: dict) -> ConvexBody:
    exact = bool(d.get("exact", False))
    pts = [[_num_in(c, exact) for c in v] for v in d["vertices"]]
    return ConvexBody.from_points(pts, exact=exact, dim=int(d["dim"]))


def balls_to_dict(U: BallUnion) -> dict:
    return {
        "dim": U.dim,
        "balls": [{"c": [float(x) for x in c], "r": float(r)} for c, r in zip(U.centers, U.radii)],
    }


def balls_from_dict(d: dict) -> BallUnion:
    return BallUnion(
        int(d["dim"]),
        np.array([b["c"] for b in d["balls"]], dtype=float),
        np.array([b["r"] for b in d["balls"]], dtype=float),
    )


def set_to_dict(S) -> dict:
    if isinstance(S, ConvexBody):
        return body_to_dict(S)
    if isinstance(S, BallUnion):
        return balls_to_dict(S)
    return {"dim": S.dim, "points": S.points.tolist()}


def set_from_dict(d: dict):
    if "vertices" in d:
        return body_from_dict(d)
    if "balls" in d:
        return balls_from_dict(d)
    return PointCloud(int(d["dim"]), np.array(d["points"], dtype=float))


def interval(a: float, b: float) -> ConvexBody:
    return ConvexBody.from_points([[a], [b]], dim=1)


def square(lo: float, hi: float, exact: bool = False) -> ConvexBody:
    return ConvexBody.from_points([[lo, lo], [hi, lo], [hi, hi], [lo, hi]], exact=exact)


def as_points(S: Iterable) -> np.ndarray:
    return np.asarray(list(S), dtype=float)
