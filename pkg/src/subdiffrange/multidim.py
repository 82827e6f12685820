"""Constructions in dimension N = 2: bumps with prescribed gradient range,
atom assemblies, the theorem-level function and the global sum.

Bumps
-----
Every bump is the mollification ``b = b̂ * ρ_ν`` of a clipped convex
piecewise-linear function

    b̂(x) = min{0, max_i(<w_i, x> + β_i) - c}.

The pieces with ``β_i = 0`` are the vertices of a polygon ``H`` (so that
``max_i <w_i, x> = s_H(x)``); pieces with ``β_i > 0`` create flat cells on
which ``∇b̂`` is a prescribed slope inside ``H``.  ``∇b̂`` is constant on each
polygonal cell, so ``∇b(x) = Σ_i w_i ρ_ν(cell_i - x)`` and the value needs the
first moments too.  For the biweight kernel ``ρ(r) ∝ (1 - r²/ν²)²`` both are
obtained in closed form from a signed fan of triangles with apex ``x``; along
an edge, substituting ``t = tan φ`` makes every integrand polynomial.

Gradients of ``b`` are convex combinations of the slopes and of 0, hence lie
in ``H`` (which contains 0).  Nested bumps placed inside flat cells implement
the chained construction for unions of balls.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog

from .coding import BodyTour, body_tour, default_eps, dyadic_enumeration, dyadic_index
from .geometry import (
    BallUnion,
    ConvexBody,
    GeometryError,
    clip_halfplane,
    clip_polygons,
    disk,
    intersect_body_ball,
    minkowski_sum,
    regular_polygon,
    set_to_dict,
)
from .handles import Feature, FunctionHandle

__all__ = [
    "AssemblyError",
    "Ball",
    "BumpSpec",
    "PLBump",
    "LemmaFunction",
    "TheoremFunction",
    "GlobalFunction",
    "SpaceabilityBlock",
    "SpaceableSum",
    "support_bump_hat",
    "mollified_bump",
    "flat_spot_bump",
    "chained_union_bump",
    "build_convex_bump",
    "build_flat_spot_bump",
    "build_chain_bump",
    "dyadic_enumeration",
    "assemble_lemma",
    "assemble_theorem",
    "assemble_global",
    "spaceable_sum",
    "spaceability_blocks",
    "qstar_sequence",
    "atom_alpha",
    "Atom",
    "atoms_disjoint_exact",
]

VISIBLE_ATOMS = 39  # eps_39 ~ 1.1e-14: deeper atoms are below double resolution
SIMPLIFY_TOL = 1e-4


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class Ball:
    """Closed Euclidean ball used as a clipping set ``C``."""

    center: tuple
    radius: float

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains(self, x, tol: float = 1e-12) -> bool:
        return float(np.linalg.norm(np.asarray(x, dtype=float) - self.center)) <= self.radius + tol

    @property
    def max_norm(self) -> float:
        return float(np.linalg.norm(self.center)) + self.radius

    def to_dict(self) -> dict:
        return {"type": "ball", "center": list(self.center), "radius": self.radius}


# ---------------------------------------------------------------------------
# closed-form kernel integrals


def _kernel_edges(X: np.ndarray, P: np.ndarray, Q: np.ndarray, nu: float):
    """Mass and first moment of ``ρ_ν(· - x)`` over signed triangles ``(x, P_e, Q_e)``.

    Returns arrays of shape ``(n, E)`` and ``(n, E, 2)``; moments are taken
    about ``x``.
    """
    D = Q - P
    Ln = np.linalg.norm(D, axis=1)
    tau = D / Ln[:, None]
    nr = np.stack([tau[:, 1], -tau[:, 0]], axis=1)
    R = P[None, :, :] - X[:, None, :]
    h = np.einsum("nek,ek->ne", R, nr)
    a = np.abs(h)
    live = a > 1e-12 * nu
    a_s = np.where(live, a, 1.0)
    sgn = np.where(live, np.sign(h), 0.0)
    tP = np.einsum("nek,ek->ne", R, tau) / a_s
    tQ = tP + Ln[None, :] / a_s
    k = (a_s / nu) ** 2
    tnu = np.sqrt(np.maximum(1.0 / k - 1.0, 0.0))
    tnu = np.where(a_s < nu, tnu, 0.0)
    lo = np.maximum(tP, -tnu)
    hi = np.minimum(tQ, tnu)
    inner = (hi > lo) & (a_s < nu)
    lo = np.where(inner, lo, 0.0)
    hi = np.where(inner, hi, 0.0)

    def phi(t):
        t3, t5 = t**3, t**5
        return 3 * k * t - 3 * k**2 * (t + t3 / 3) + k**3 * (t + 2 * t3 / 3 + t5 / 5)

    mass = (phi(hi) - phi(lo)) / (2 * math.pi)
    # outer pieces where the ray leaves the kernel support
    o1a, o1b = tP, np.minimum(tQ, np.where(a_s < nu, -tnu, tQ))
    o2a, o2b = np.maximum(tP, np.where(a_s < nu, tnu, tP)), tQ
    both = a_s >= nu
    o1 = (o1b > o1a) & ~both
    o2 = (o2b > o2a) & ~both
    atan = np.arctan
    outer = np.where(both, atan(tQ) - atan(tP), 0.0)
    outer += np.where(o1, atan(np.where(o1, o1b, 0)) - atan(np.where(o1, o1a, 0)), 0.0)
    outer += np.where(o2, atan(np.where(o2, o2b, 0)) - atan(np.where(o2, o2a, 0)), 0.0)
    mass = mass + outer / (2 * math.pi)

    C = 3.0 / (math.pi * nu**2)
    a3, a5, a7 = a_s**3, a_s**5, a_s**7
    k5 = 2 * a5 / (5 * nu**2)
    k7 = a7 / (7 * nu**4)

    def psi_n(t):
        t3, t5 = t**3, t**5
        return C * (a3 * t / 3 - k5 * (t + t3 / 3) + k7 * (t + 2 * t3 / 3 + t5 / 5))

    def psi_t(t):
        s = 1 + t * t
        return C * (a3 * s / 6 - k5 * s * s / 4 + k7 * s**3 / 6)

    mn = psi_n(hi) - psi_n(lo)
    mt = np.where(inner, psi_t(hi) - psi_t(lo), 0.0)
    G = 8 * nu / (35 * math.pi)

    def on(t):
        return t / np.sqrt(1 + t * t)

    def ot(t):
        return -1 / np.sqrt(1 + t * t)

    segs = [(both, tP, tQ), (o1, o1a, o1b), (o2, o2a, o2b)]
    for m, s0, s1 in segs:
        s0 = np.where(m, s0, 0.0)
        s1 = np.where(m, s1, 0.0)
        mn = mn + np.where(m, G * (on(s1) - on(s0)), 0.0)
        mt = mt + np.where(m, G * (ot(s1) - ot(s0)), 0.0)
    nhat = sgn[:, :, None] * nr[None, :, :]
    mom = sgn[:, :, None] * (mn[:, :, None] * nhat + mt[:, :, None] * tau[None, :, :])
    return sgn * mass, mom


# ---------------------------------------------------------------------------
# polygons


def _ccw(V: np.ndarray) -> np.ndarray:
    area = 0.5 * np.sum(V[:, 0] * np.roll(V[:, 1], -1) - np.roll(V[:, 0], -1) * V[:, 1])
    return V if area > 0 else V[::-1]


def _area_perimeter(V: np.ndarray) -> tuple[float, float]:
    area = 0.5 * abs(np.sum(V[:, 0] * np.roll(V[:, 1], -1) - np.roll(V[:, 0], -1) * V[:, 1]))
    per = float(np.sum(np.linalg.norm(np.roll(V, -1, axis=0) - V, axis=1)))
    return float(area), per


def _simplify(V: np.ndarray, tol: float = SIMPLIFY_TOL) -> np.ndarray:
    """Drop vertices closer than ``tol`` to the chord of their neighbours."""
    V = np.asarray(V, dtype=float)
    while len(V) > 3:
        A, B = np.roll(V, 1, axis=0), np.roll(V, -1, axis=0)
        D = B - A
        L2 = np.maximum(np.sum(D * D, axis=1), 1e-300)
        t = np.clip(np.sum((V - A) * D, axis=1) / L2, 0, 1)
        dist = np.linalg.norm(A + t[:, None] * D - V, axis=1)
        j = int(np.argmin(dist))
        if dist[j] >= tol:
            break
        V = np.delete(V, j, axis=0)
    return V


def _halfplanes(V: np.ndarray):
    """Rows ``(n, b)`` with ``n·x <= b`` for a CCW polygon."""
    D = np.roll(V, -1, axis=0) - V
    N = np.stack([D[:, 1], -D[:, 0]], axis=1)
    N /= np.linalg.norm(N, axis=1)[:, None]
    return N, np.sum(N * V, axis=1)


def _chebyshev(V: np.ndarray) -> tuple[np.ndarray, float]:
    N, b = _halfplanes(V)
    res = linprog([0, 0, -1], A_ub=np.hstack([N, np.ones((len(N), 1))]), b_ub=b,
                  bounds=[(None, None), (None, None), (0, None)], method="highs")
    if not res.success:
        raise AssemblyError("inscribed disk computation failed")
    return res.x[:2], float(res.x[2])


def _fan(V: np.ndarray) -> np.ndarray:
    return np.stack([np.repeat(V[:1], len(V) - 2, axis=0), V[1:-1], V[2:]], axis=1)


# ---------------------------------------------------------------------------
# bumps


@dataclass(eq=False)
class PLBump:
    """Mollified ``min{0, max_i(<w_i,x> + β_i) - c}`` with nested child bumps.

    ``cells[i]`` is the CCW polygon on which piece ``i`` is active and below
    the clip level.  ``children`` holds ``(center, radius, bump)`` triples
    placed inside flat cells; a child contributes ``radius * bump((x-center)/radius)``.
    """

    slopes: np.ndarray
    offsets: np.ndarray
    c: float
    nu: float
    cells: list
    children: list = field(default_factory=list)
    tau: float = 0.0

    def __post_init__(self):
        # cores: points at distance >= nu inside a cell see a single affine piece
        self._cores = []
        for i, V in enumerate(self.cells):
            if V is not None and len(V) >= 3:
                N, b = _halfplanes(V)
                self._cores.append((i, N, b - self.nu))
        tris, own = [], []
        for i, V in enumerate(self.cells):
            if V is not None and len(V) >= 3:
                T = _fan(V)
                tris.append(T)
                own.extend([i] * len(T))
        self._tris = np.concatenate(tris) if tris else np.zeros((0, 3, 2))
        self._own = np.array(own, dtype=int)
        allv = np.concatenate([V for V in self.cells if V is not None]) if self.cells else np.zeros((1, 2))
        self.radius = float(np.max(np.linalg.norm(allv, axis=1))) + self.nu
        if self.radius > 1.0 + 1e-12:
            raise AssemblyError("bump support leaves the unit ball")

    @property
    def range_vertices(self) -> np.ndarray:
        return self.slopes[self.offsets == 0]

    def value_grad(self, Z) -> tuple[np.ndarray, np.ndarray]:
        Z = np.asarray(Z, dtype=float).reshape(-1, 2)
        val = np.zeros(len(Z))
        grad = np.zeros((len(Z), 2))
        near = np.linalg.norm(Z, axis=1) < self.radius
        for i, N, b in self._cores:
            if not np.any(near):
                break
            core = near & np.all(Z @ N.T <= b[None, :], axis=1)
            if np.any(core):
                w = self.slopes[i]
                val[core] = Z[core] @ w + self.offsets[i] - self.c
                grad[core] = w
                near &= ~core
        if np.any(near) and len(self._tris):
            X = Z[near]
            T = self._tris
            E = len(T)
            P = np.concatenate([T[:, 0], T[:, 1], T[:, 2]])
            Q = np.concatenate([T[:, 1], T[:, 2], T[:, 0]])
            chunk = max(1, 400000 // (3 * E))
            for s in range(0, len(X), chunk):
                Xs = X[s:s + chunk]
                m, mo = _kernel_edges(Xs, P, Q, self.nu)
                M = m[:, :E] + m[:, E:2 * E] + m[:, 2 * E:]
                Mo = mo[:, :E] + mo[:, E:2 * E] + mo[:, 2 * E:]
                W = self.slopes[self._own]
                B = self.offsets[self._own]
                g = M @ W
                v = np.sum(M * ((Xs @ W.T) + B[None, :] - self.c), axis=1) + np.einsum("nek,ek->n", Mo, W)
                idx = np.flatnonzero(near)[s:s + chunk]
                val[idx] = v
                grad[idx] = g
        for ctr, rad, child in self.children:
            loc = (Z - ctr) / rad
            inside = np.linalg.norm(loc, axis=1) < child.radius
            if np.any(inside):
                cv, cg = child.value_grad(loc[inside])
                val[inside] += rad * cv
                grad[inside] += cg
        return val, grad

    @property
    def hint_points(self) -> np.ndarray:
        """Cell cores, cell corners and short segments across every cell edge.

        The cores give the slopes exactly; the segments cross the mollifier
        band and trace the segments between neighbouring slopes (and 0).
        """
        hp = getattr(self, "_hint_cache", None)
        if hp is not None:
            return hp
        pts = [np.zeros((1, 2))]
        s = self.nu * np.linspace(-1.0, 1.0, 11)
        for V in self.cells:
            if V is None or len(V) < 3:
                continue
            try:
                p, r = _chebyshev(V)
                pts.append(p[None])
            except AssemblyError:
                pts.append(V.mean(axis=0)[None])
            pts.append(V)
            N, _ = _halfplanes(V)
            M = 0.5 * (V + np.roll(V, -1, axis=0))
            pts.append((M[:, None, :] + s[None, :, None] * N[:, None, :]).reshape(-1, 2))
        for ctr, rad, child in self.children:
            pts.append(ctr + rad * child.hint_points)
        hp = np.unique(np.round(np.concatenate(pts), 15), axis=0)
        hp = hp[np.linalg.norm(hp, axis=1) < self.radius]
        self._hint_cache = hp
        return hp

    def features(self) -> list[tuple[np.ndarray, float]]:
        out = []
        for ctr, rad, child in self.children:
            out.append((np.asarray(ctr, dtype=float), rad))
            for c2, r2 in child.features():
                out.append((ctr + rad * c2, rad * r2))
        return out

    @property
    def depth(self) -> int:
        return 1 + max((ch.depth for _, _, ch in self.children), default=0)

    def to_dict(self) -> dict:
        return {
            "slopes": self.slopes.tolist(),
            "offsets": self.offsets.tolist(),
            "c": self.c,
            "nu": self.nu,
            "tau": self.tau,
            "children": [{"center": list(map(float, ctr)), "radius": rad, "bump": ch.to_dict()}
                         for ctr, rad, ch in self.children],
        }


def _polygon_of(H) -> np.ndarray:
    V = np.asarray(H.array if isinstance(H, ConvexBody) else H, dtype=float)
    if V.ndim != 2 or V.shape[1] != 2 or len(V) < 3:
        raise AssemblyError("bump range must be a 2D polygon with interior")
    return _ccw(V)


def _check_origin(V: np.ndarray) -> float:
    N, b = _halfplanes(V)
    hmin = float(np.min(b))
    if hmin <= 0:
        raise AssemblyError("0 must lie in the interior of the range")
    return hmin


def build_convex_bump(H, c: float | None = None, nu: float | None = None, tau: float = 0.0) -> PLBump:
    """Support-function bump with gradient range ``H`` (0 interior to ``H``)."""
    V = _simplify(_polygon_of(H))
    hmin = _check_origin(V)
    if c is None:
        c = 0.5 * hmin
    if c <= 0:
        raise AssemblyError("clip level must be positive")
    N, b = _halfplanes(V)
    Pv = c * N / b[:, None]  # polar vertex of edge j
    cells = []
    for j in range(len(V)):
        cells.append(np.array([[0.0, 0.0], Pv[j - 1], Pv[j]]))
    if nu is None:
        nu = 0.45 * min(2 * a / p for a, p in map(_area_perimeter, cells))
    if nu <= 0:
        raise AssemblyError("mollification radius must be positive")
    return PLBump(V, np.zeros(len(V)), float(c), float(nu), cells, [], tau)


def _clip_raw(V: np.ndarray, u: np.ndarray, b: float) -> np.ndarray:
    """``V ∩ {x : <u, x> <= b}`` for a convex polygon given as a vertex array."""
    if len(V) == 0:
        return V
    s = V @ u - b
    if np.all(s <= 0):
        return V
    if np.all(s > 0):
        return V[:0]
    out = []
    n = len(V)
    for i in range(n):
        j = (i + 1) % n
        if s[i] <= 0:
            out.append(V[i])
        if (s[i] < 0 < s[j]) or (s[j] < 0 < s[i]):
            t = s[i] / (s[i] - s[j])
            out.append(V[i] + t * (V[j] - V[i]))
    return np.array(out).reshape(-1, 2)


def _pl_cells(W: np.ndarray, B: np.ndarray, c: float, box: float = 2.0) -> list:
    sq = np.array([[-box, -box], [box, -box], [box, box], [-box, box]])
    cells = []
    for i in range(len(W)):
        V = _clip_raw(sq, W[i], c - B[i])
        # nearest competitors first: they cut the cell down fastest
        order = np.argsort(np.linalg.norm(W - W[i], axis=1))
        for j in order:
            if len(V) < 3:
                break
            if j != i:
                V = _clip_raw(V, W[j] - W[i], B[i] - B[j])
        if len(V) < 3:
            cells.append(None)
            continue
        V = _ccw(V)
        a, _ = _area_perimeter(V)
        cells.append(V if a > 1e-18 else None)
    return cells


def _build_flat_bump(V: np.ndarray, flats: list, c: float, eta: float, nu: float | None,
                     nu_cap: float | None = None) -> tuple[PLBump, list]:
    W = np.concatenate([V, np.asarray(flats, dtype=float).reshape(-1, 2)])
    B = np.concatenate([np.zeros(len(V)), np.full(len(flats), eta)])
    cells = _pl_cells(W, B, c)
    if nu is None:
        nu = 0.25 * min(2 * a / p for a, p in (_area_perimeter(C) for C in cells if C is not None))
        if nu_cap is not None:
            nu = min(nu, nu_cap)
    return PLBump(W, B, float(c), float(nu), cells), cells


def build_flat_spot_bump(xstar, delta: float, polygon_vertices: int = 64) -> PLBump:
    """1-Lipschitz C¹ bump supported in B(0,1) with ``∇ = x*`` on ``B(0, δ)``."""
    xs = np.asarray(xstar, dtype=float).reshape(2)
    if not np.linalg.norm(xs) < 1:
        raise AssemblyError("flat slope must lie in the open unit ball")
    if not 0 < delta < 0.25:
        raise AssemblyError("flat radius must lie in (0, 1/4)")
    V = _ccw(regular_polygon((0.0, 0.0), 1.0, polygon_vertices).array)
    hmin = _check_origin(V)
    nu = delta / 8
    reach = delta + nu
    eta = 1.1 * reach * float(np.max(np.linalg.norm(V - xs, axis=1)))
    lo = eta + float(np.linalg.norm(xs)) * reach
    hi = hmin * (1 - nu)
    if not lo < hi:
        raise AssemblyError("flat spot does not fit inside the unit ball")
    c = 0.5 * (lo + hi)
    bump, _ = _build_flat_bump(V, [xs], c, eta, nu)
    return bump


def build_chain_bump(union: BallUnion, clip=None, tol: float = 1e-3) -> PLBump:
    """Nested bump whose gradient range approximates a connected union of disks.

    The root disk contains 0; every child disk of the breadth-first tree is
    realised by a bump placed in a flat cell of its parent, whose slope lies in
    the interior of the overlap of the two disks.
    """
    if union.dim != 2:
        raise AssemblyError("chained bumps are implemented for N = 2")
    if not union.connected:
        raise AssemblyError("ball union is not connected")
    ctrs = np.asarray(union.centers, dtype=float)
    rads = np.asarray(union.radii, dtype=float)
    k = len(rads)
    dist0 = np.linalg.norm(ctrs, axis=1)
    roots = np.flatnonzero(dist0 < rads - 1e-9)
    if len(roots) == 0:
        raise AssemblyError("0 must lie in the interior of some disk")
    root = int(roots[0])
    D = np.linalg.norm(ctrs[:, None] - ctrs[None], axis=2)
    adj = (D < rads[:, None] + rads[None, :] - 1e-9) & ~np.eye(k, dtype=bool)
    children = {i: [] for i in range(k)}
    seen = {root}
    dq = deque([root])
    while dq:
        i = dq.popleft()
        for j in np.flatnonzero(adj[i]):
            if j not in seen:
                seen.add(int(j))
                children[i].append(int(j))
                dq.append(int(j))
    if len(seen) != k:
        raise AssemblyError("chain is not connected through overlapping interiors")

    def overlap_point(i, j):
        u = ctrs[j] - ctrs[i]
        d = float(np.linalg.norm(u))
        if d == 0:
            return ctrs[i].copy()
        u /= d
        lo = max(-rads[i], d - rads[j])
        hi = min(rads[i], d + rads[j])
        return ctrs[i] + 0.5 * (lo + hi) * u

    def region(i, offset):
        P = disk(ctrs[i] - offset, rads[i], tol)
        if clip is not None:
            P = _clip_to(P, clip, offset, tol)
            if P is None:
                raise AssemblyError("disk misses the clipping set")
        return _simplify(_ccw(P.array))

    def build(i, offset, depth):
        if depth > 12:
            raise AssemblyError("flat-spot budget exhausted")
        V = region(i, offset)
        hmin = _check_origin(V)
        kids = children[i]
        if not kids:
            return build_convex_bump(V, tau=tol + SIMPLIFY_TOL)
        slopes = [overlap_point(i, j) for j in kids]
        rel = [s - offset for s in slopes]
        for s in rel:
            N, b = _halfplanes(V)
            if np.any(N @ s >= b - 1e-9):
                raise AssemblyError("overlap slope falls outside the inscribed range")
        c = 0.5 * hmin
        eta = c / 3
        bump, cells = _build_flat_bump(V, rel, c, eta, None)
        nested = []
        for a, j in enumerate(kids):
            cell = cells[len(V) + a]
            if cell is None:
                raise AssemblyError("flat cell vanished")
            p, r = _chebyshev(cell)
            rho = 0.8 * (r - bump.nu)
            if rho <= 0:
                raise AssemblyError("flat cell thinner than the mollifier")
            nested.append((p, rho, build(j, slopes[a], depth + 1)))
        bump.children = nested
        bump.tau = tol + SIMPLIFY_TOL
        return bump

    return build(root, np.zeros(2), 0)


def _clip_to(P: ConvexBody, C, offset, tol: float):
    if isinstance(C, Ball):
        return intersect_body_ball(P, np.asarray(C.center) - offset, C.radius, tol)
    Cs = ConvexBody.from_points((C.array - offset).tolist())
    return clip_polygons(P, Cs)


@dataclass(frozen=True)
class BumpSpec:
    """Parameters of a bump: target range, clip level, mollifier, flat spot."""

    target: object
    c: float | None = None
    nu: float | None = None
    flat: tuple | None = None  # (x*, δ)

    def __post_init__(self):
        if self.c is not None and self.c <= 0:
            raise AssemblyError("clip level must be positive")
        if self.nu is not None and self.nu <= 0:
            raise AssemblyError("mollification radius must be positive")

    def build(self) -> PLBump:
        if self.flat is not None:
            return build_flat_spot_bump(self.flat[0], self.flat[1])
        if isinstance(self.target, BallUnion):
            return build_chain_bump(self.target)
        return build_convex_bump(self.target, self.c, self.nu)


def support_bump_hat(H: ConvexBody, c: float, x) -> np.ndarray:
    """``min{0, s_H(x) - c}`` evaluated row-wise."""
    if c <= 0:
        raise AssemblyError("clip level must be positive")
    X = np.asarray(x, dtype=float).reshape(-1, H.dim)
    return np.minimum(0.0, np.max(X @ H.array.T, axis=1) - c)


_SPEC_CACHE: dict = {}


def _cached(spec: BumpSpec) -> PLBump:
    key = id(spec)
    hit = _SPEC_CACHE.get(key)
    if hit is None or hit[0] is not spec:
        hit = (spec, spec.build())
        _SPEC_CACHE[key] = hit
    return hit[1]


def mollified_bump(spec: BumpSpec, x):
    return _cached(spec).value_grad(x)


@lru_cache(maxsize=256)
def _flat_cached(xs: tuple, delta: float) -> PLBump:
    return build_flat_spot_bump(xs, delta)


def flat_spot_bump(xstar, delta: float, x):
    return _flat_cached(tuple(float(v) for v in np.ravel(xstar)), float(delta)).value_grad(x)


def chained_union_bump(chain: BallUnion, x):
    return _chain_cached(chain).value_grad(x)


@lru_cache(maxsize=64)
def _chain_cached(chain: BallUnion) -> PLBump:
    return build_chain_bump(chain)


# ---------------------------------------------------------------------------
# atoms and the lemma-level assembly


def atom_alpha(n: int) -> Fraction:
    return Fraction(1, 1 << n)


def atoms_disjoint_exact(cutoff: int) -> bool:
    """Exact check that the closed atom balls are disjoint and inside (0,1)².

    Consecutive heights satisfy ``α_{n+1} + ε_{n+1} < α_n - ε_n``; as both
    sequences decrease this separates every pair of balls vertically.
    """
    if not 1 <= cutoff <= 1 << 12:
        raise AssemblyError("cutoff must lie in [1, 4096]")
    prev_low = None
    for n in range(1, cutoff + 1):
        a, e, d = atom_alpha(n), default_eps(n), dyadic_enumeration(n)
        if not (0 < d - e and d + e < 1 and 0 < a - e and a + e < 1):
            return False
        if prev_low is not None and not a + e < prev_low:
            return False
        prev_low = a - e
    return True


@dataclass(eq=False)
class Atom:
    n: int
    center: np.ndarray
    eps: float
    gamma: float
    target: object
    bump: PLBump

    def row(self) -> dict:
        return {
            "n": self.n,
            "d_n": float(self.center[0]),
            "alpha_n": float(self.center[1]),
            "eps_n": self.eps,
            "gamma_n": self.gamma,
            "range": _describe(self.target),
            "tau": self.bump.tau,
        }


def _describe(S) -> str:
    if isinstance(S, BallUnion):
        return f"union of {len(S.radii)} disks"
    return f"polygon with {len(S.vertices)} vertices"


class LemmaFunction(FunctionHandle):
    """``f = Σ_n ε_n b_n((x - Q_n)/ε_n)`` with ``Q_n = (d_n, 2^-n)``.

    ``kind`` selects the atom range: ``convex`` uses
    ``(h(d_n) ⊕ B̄(0,γ_n)) ∩ B̄(0,L)``, ``convex-interior`` intersects with
    ``C`` instead, and ``connected`` inflates a ball-union knot by ``2γ_n`` and
    clips each disk with ``C``.  Atoms beyond :data:`VISIBLE_ATOMS` have
    supports below double resolution and are not evaluated.
    """

    dim = 2

    def __init__(self, C, tour: BodyTour, cutoff: int = 64, gamma=None, kind: str = "convex",
                 tol: float = 1e-3):
        if kind not in ("convex", "convex-interior", "connected"):
            raise AssemblyError(f"unknown kind {kind!r}")
        if not 1 <= cutoff <= 1 << 12:
            raise AssemblyError("cutoff must lie in [1, 4096]")
        if not C.contains(np.zeros(2)):
            raise AssemblyError("C must contain 0")
        if kind == "connected" and not isinstance(C, Ball):
            raise AssemblyError("connected kind clips with a ball")
        for K in tour.knots:
            if not _inside(K, C):
                raise AssemblyError("tour knot outside C")
        self.C = C
        self.tour = tour
        self.cutoff = cutoff
        self.kind = kind
        self.tol = tol
        self.gamma = gamma if gamma is not None else (lambda n: 2.0 ** -n)
        self.L = C.max_norm if isinstance(C, Ball) else float(C.max_norm)
        self.lipschitz = self.L
        self.visible = min(cutoff, VISIBLE_ATOMS)
        ns = np.arange(1, self.visible + 1)
        self._Q = np.array([[float(dyadic_enumeration(n)), 2.0 ** -int(n)] for n in ns])
        self._eps = np.array([float(default_eps(int(n))) for n in ns])
        self._atoms: dict[int, Atom] = {}
        self.support_center = np.array([0.5, 0.5])
        self.support_radius = math.sqrt(0.5)

    # -- atoms ------------------------------------------------------------
    def target(self, n: int):
        t = float(dyadic_enumeration(n))
        K = self.tour(t)
        g = float(self.gamma(n))
        if self.kind == "connected":
            return K.inflate(2 * g)
        H = minkowski_sum(K.to_float(), disk((0.0, 0.0), g, min(self.tol, g / 4)))
        if self.kind == "convex":
            H = intersect_body_ball(H, (0.0, 0.0), self.L, self.tol)
        else:
            H = _clip_to(H, self.C, np.zeros(2), self.tol)
        if H is None:
            raise AssemblyError(f"empty atom range at n={n}")
        return H

    def atom(self, n: int) -> Atom:
        a = self._atoms.get(n)
        if a is None:
            T = self.target(n)
            if self.kind == "connected":
                bump = build_chain_bump(T, self.C, self.tol)
            else:
                bump = build_convex_bump(T, tau=self.tol + SIMPLIFY_TOL)
            a = Atom(n, self._Q[n - 1].copy(), float(self._eps[n - 1]), float(self.gamma(n)), T, bump)
            self._atoms[n] = a
        return a

    def realized_range(self, n: int):
        return self.atom(n).target

    def coded_point(self, knot: int) -> np.ndarray:
        """``x̂ = (t̂, 0)`` for the parameter of tour knot ``knot``."""
        t = self.knot_param(knot)
        return np.array([t, 0.0])

    def knot_param(self, knot: int) -> float:
        if self.tour.mode == "geodesic":
            return float(self.tour.params[knot])
        k = len(self.tour.knots)
        depth = k.bit_length() - 1
        lo, hi = self.tour.cantor.tree[(depth, knot)]
        return float(dyadic_mid(Fraction(lo), Fraction(hi)))

    def knot_atom(self, knot: int) -> int:
        return dyadic_index(Fraction(self.knot_param(knot)).limit_denominator(1 << 60))

    # -- evaluation -------------------------------------------------------
    def _eval(self, X):
        X = self._pts(X)
        val = np.zeros(len(X))
        grad = np.zeros((len(X), 2))
        inside = (X[:, 0] > 0) & (X[:, 0] < 1) & (X[:, 1] > 0) & (X[:, 1] < 1)
        if not np.any(inside):
            return val, grad
        idx = np.flatnonzero(inside)
        Y = X[idx]
        for n in range(1, self.visible + 1):
            e = self._eps[n - 1]
            Z = (Y - self._Q[n - 1]) / e
            hit = np.sum(Z * Z, axis=1) < 1.0
            if np.any(hit):
                v, g = self.atom(n).bump.value_grad(Z[hit])
                val[idx[hit]] += e * v
                grad[idx[hit]] += g
        return val, grad

    def value(self, X):
        return self._eval(X)[0]

    def grad(self, X):
        return self._eval(X)[1]

    def features(self, center, radius: float) -> list[Feature]:
        c = np.asarray(center, dtype=float).ravel()
        out = []
        dist = np.linalg.norm(self._Q - c, axis=1)
        for n in np.flatnonzero(dist <= radius + self._eps):
            n = int(n) + 1
            e = self._eps[n - 1]
            Q = self._Q[n - 1]
            out.append(Feature(tuple(Q), e))
            if self.kind == "connected":
                for p, r in self.atom(n).bump.features():
                    out.append(Feature(tuple(Q + e * p), e * r))
        return out

    def hints(self, center, radius: float) -> np.ndarray:
        c = np.asarray(center, dtype=float).ravel()
        out = [np.zeros((0, 2))]
        dist = np.linalg.norm(self._Q - c, axis=1)
        scale = max(1.0, float(np.max(np.abs(c))))
        for n in np.flatnonzero(dist <= radius + self._eps):
            n = int(n) + 1
            e = self._eps[n - 1]
            if e < 1e-9 * scale:
                continue
            P = self._Q[n - 1] + e * self.atom(n).bump.hint_points
            out.append(P[np.linalg.norm(P - c, axis=1) <= radius])
        return np.concatenate(out)

    @property
    def sup_norm_bound(self) -> float:
        return float(max(self._eps[n - 1] * self.atom(n).bump.c for n in range(1, min(self.visible, 4) + 1)))

    def atom_table(self, upto: int | None = None) -> list[dict]:
        upto = min(upto or self.visible, self.visible)
        return [self.atom(n).row() for n in range(1, upto + 1)]

    def config(self) -> dict:
        return {
            "level": "lemma",
            "kind": self.kind,
            "cutoff": self.cutoff,
            "visible_atoms": self.visible,
            "C": self.C.to_dict() if isinstance(self.C, Ball) else set_to_dict(self.C),
            "tour": self.tour.to_dict(),
            "tol": self.tol,
        }


def dyadic_mid(lo: Fraction, hi: Fraction) -> Fraction:
    """Lowest-level dyadic rational strictly inside ``(lo, hi)``."""
    L = 1
    while True:
        s = 1 << L
        p = math.floor(lo * s) + 1
        if p % 2 == 0:
            p += 1 if Fraction(p + 1, s) < hi else 0
        if Fraction(p, s) < hi and Fraction(p, s) > lo and p % 2 == 1:
            return Fraction(p, s)
        L += 1


def _inside(K, C) -> bool:
    if isinstance(K, BallUnion):
        ctr = np.asarray(K.centers, dtype=float)
        rad = np.asarray(K.radii, dtype=float)
        if isinstance(C, Ball):
            return bool(np.all(np.linalg.norm(ctr - C.center, axis=1) + rad <= C.radius + 1e-9))
        return all(C.contains(c) for c in ctr)
    if isinstance(C, Ball):
        return bool(np.all(np.linalg.norm(K.to_float().array - C.center, axis=1) <= C.radius + 1e-9))
    return all(C.contains(v, tol=1e-9) for v in K.to_float().array)


def assemble_lemma(C, tour: BodyTour, cutoff: int = 64, gamma=None, kind: str = "convex",
                   tol: float = 1e-3) -> LemmaFunction:
    return LemmaFunction(C, tour, cutoff, gamma, kind, tol)


def dyadic_params(k: int) -> list[float]:
    """``k`` increasing dyadic parameters ``(2i-1)/2^(L+1)`` of a common level."""
    L = max(0, (k - 1).bit_length())
    return [(2 * i - 1) / 2 ** (L + 1) for i in range(1, k + 1)]


# ---------------------------------------------------------------------------
# theorem level


def qstar_sequence(count: int, radius: float = 0.95) -> np.ndarray:
    """Deterministic low-discrepancy points in the open ball ``B(0, radius)``."""
    from scipy.stats import qmc

    U = qmc.Halton(d=2, scramble=False).random(count + 1)[1:]
    r = radius * np.sqrt(U[:, 0])
    th = 2 * math.pi * U[:, 1]
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)


class TheoremFunction(FunctionHandle):
    """``f = g + Σ_n λ_n F_n((x - x_n)/λ_n + (1/2, 1/2))``.

    ``g`` is the carrier: flat-spot bumps of slope ``q*_n`` centred at
    ``x_n = ℓ + ρ_n e_1``.  Each lemma block ``F_n`` (part (ii) kind with
    ``C_n = B̄(-q*_n, 1)``) sits inside the flat region of bump ``n``.
    """

    dim = 2

    def __init__(self, qstar: np.ndarray, targets: list, ell=(-0.4, 0.0), flat_delta: float = 0.2,
                 cutoff: int = 64, tol: float = 1e-3, gamma_shift: int = 4):
        self.qstar = np.asarray(qstar, dtype=float)
        if np.any(np.linalg.norm(self.qstar, axis=1) >= 1):
            raise AssemblyError("q* must lie in the open unit ball")
        self.ell = np.asarray(ell, dtype=float)
        nq = len(self.qstar)
        n = np.arange(1, nq + 1)
        rho = 0.5 / (n + 1)
        self.centers = self.ell + rho[:, None] * np.array([1.0, 0.0])
        gaps = rho - 0.5 / (n + 2)
        self.carrier_eps = 0.4 * gaps  # eps_n / |x_n - ell| = 0.4/(n+2) -> 0
        if np.any(np.linalg.norm(self.centers, axis=1) + self.carrier_eps >= 1):
            raise AssemblyError("carrier balls leave the unit ball")
        self.flat_delta = flat_delta
        self.lam = 0.9 * self.carrier_eps * flat_delta
        self.lipschitz = 1.0
        self.tol = tol
        self.cutoff = cutoff
        self.targets = list(targets)
        self.assignment = []
        groups: dict[int, list] = {}
        for K in self.targets:
            m = _first_interior(self.qstar, K)
            if m is None:
                raise AssemblyError(f"no q* in the interior of target {_describe(K)}")
            groups.setdefault(m, []).append(K)
        self.blocks: dict[int, LemmaFunction] = {}
        self._slot = {}
        for m, Ks in sorted(groups.items()):
            q = self.qstar[m]
            C = Ball(tuple(-q), 1.0)
            if all(isinstance(K, BallUnion) for K in Ks):
                k = 1 << max(0, (len(Ks) - 1).bit_length())
                knots = [K.translate(-q) for K in Ks] + [Ks[-1].translate(-q)] * (k - len(Ks))
                tour = body_tour(knots, "cantor")
                kind = "connected"
            elif all(isinstance(K, ConvexBody) for K in Ks):
                knots = [ConvexBody.from_points((K.to_float().array - q).tolist()) for K in Ks]
                tour = body_tour(knots, "geodesic", params=dyadic_params(len(Ks)))
                kind = "convex-interior"
            else:
                raise AssemblyError("targets sharing a slope must be of one kind")
            self.blocks[m] = LemmaFunction(C, tour, cutoff, gamma=_shifted_gamma(gamma_shift),
                                           kind=kind, tol=tol)
            for j, K in enumerate(Ks):
                self._slot[id(K)] = (m, j)
        for K in self.targets:
            self.assignment.append(self._slot[id(K)])
        self.support_center = np.zeros(2)
        self.support_radius = 1.0

    # points ----------------------------------------------------------------
    def block_map(self, m: int, Y: np.ndarray) -> np.ndarray:
        return (Y - self.centers[m]) / self.lam[m] + 0.5

    def x_target(self, i: int) -> np.ndarray:
        m, j = self.assignment[i]
        xh = self.blocks[m].coded_point(j)
        return self.centers[m] + self.lam[m] * (xh - 0.5)

    def target_slope(self, i: int) -> np.ndarray:
        return self.qstar[self.assignment[i][0]]

    def _eval(self, X):
        X = self._pts(X)
        val = np.zeros(len(X))
        grad = np.zeros((len(X), 2))
        for m in range(len(self.qstar)):
            e = self.carrier_eps[m]
            Z = (X - self.centers[m]) / e
            hit = np.sum(Z * Z, axis=1) < 1.0
            if not np.any(hit):
                continue
            v, g = _flat_cached(tuple(self.qstar[m]), self.flat_delta).value_grad(Z[hit])
            val[hit] += e * v
            grad[hit] += g
            if m in self.blocks:
                Y = self.block_map(m, X[hit])
                inb = np.all((Y > 0) & (Y < 1), axis=1)
                if np.any(inb):
                    B = self.blocks[m]
                    sub = np.flatnonzero(hit)[inb]
                    bv, bg = B._eval(Y[inb])
                    val[sub] += self.lam[m] * bv
                    grad[sub] += bg
        return val, grad

    def value(self, X):
        return self._eval(X)[0]

    def grad(self, X):
        return self._eval(X)[1]

    def features(self, center, radius: float) -> list[Feature]:
        c = np.asarray(center, dtype=float).ravel()
        out = []
        for m, B in self.blocks.items():
            if np.linalg.norm(self.centers[m] - c) > radius + self.lam[m]:
                continue
            lc = self.block_map(m, c[None])[0]
            for ft in B.features(lc, radius / self.lam[m]):
                p = self.centers[m] + self.lam[m] * (np.asarray(ft.center) - 0.5)
                out.append(Feature(tuple(p), self.lam[m] * ft.radius))
        return out

    def hints(self, center, radius: float) -> np.ndarray:
        c = np.asarray(center, dtype=float).ravel()
        out = [np.zeros((0, 2))]
        for m, B in self.blocks.items():
            if np.linalg.norm(self.centers[m] - c) > radius + self.lam[m]:
                continue
            lc = self.block_map(m, c[None])[0]
            H = B.hints(lc, radius / self.lam[m])
            out.append(self.centers[m] + self.lam[m] * (H - 0.5))
        return np.concatenate(out)

    @property
    def sup_norm_bound(self) -> float:
        return float(np.max(self.carrier_eps))

    def config(self) -> dict:
        return {
            "level": "theorem",
            "qstar": self.qstar.tolist(),
            "ell": self.ell.tolist(),
            "flat_delta": self.flat_delta,
            "targets": [set_to_dict(K) for K in self.targets],
            "assignment": [list(a) for a in self.assignment],
            "blocks": {str(m): B.config() for m, B in self.blocks.items()},
        }


def _shifted_gamma(shift: int):
    # blocks are only resolved down to atoms of moderate index, so the
    # inflation γ_n = 2^-(n+shift) is taken smaller than in the bare lemma
    def gamma(n: int) -> float:
        return 2.0 ** -(n + shift)

    return gamma


def _first_interior(Q: np.ndarray, K, margin: float = 1e-3):
    for m, q in enumerate(Q):
        if isinstance(K, BallUnion):
            d = np.linalg.norm(np.asarray(K.centers) - q, axis=1) - np.asarray(K.radii)
            if np.min(d) < -margin:
                return m
        else:
            Kf = K.to_float()
            if len(Kf.vertices) < 3:
                continue
            N, b = _halfplanes(_ccw(Kf.array))
            if np.all(N @ q < b - margin):
                return m
    return None


def assemble_theorem(targets: list, qstar=None, count: int = 64, **kw) -> TheoremFunction:
    if qstar is None:
        qstar = qstar_sequence(count)
    return TheoremFunction(np.asarray(qstar, dtype=float), targets, **kw)


# ---------------------------------------------------------------------------
# global sum


class GlobalFunction(FunctionHandle):
    """``f = Σ_n n δ_n F̂_n((x - 3n e_1)/δ_n)`` with ``F̂_n`` the block rescaled into B(0,1)."""

    dim = 2

    def __init__(self, blocks: list, deltas=None):
        if not blocks:
            raise AssemblyError("no blocks")
        self.blocks = list(blocks)
        self.deltas = np.ones(len(blocks)) if deltas is None else np.asarray(deltas, dtype=float)
        if np.any(self.deltas <= 0) or np.any(self.deltas > 1):
            raise AssemblyError("block scales must lie in (0, 1]")
        for B in self.blocks:
            if B.support_radius <= 0:
                raise AssemblyError("block support violation")
        self.lipschitz = float(len(blocks))

    def _eval(self, X):
        X = self._pts(X)
        val = np.zeros(len(X))
        grad = np.zeros((len(X), 2))
        for i, B in enumerate(self.blocks):
            n = i + 1
            d = self.deltas[i]
            Z = (X - np.array([3.0 * n, 0.0])) / d
            hit = np.sum(Z * Z, axis=1) < 1.0
            if not np.any(hit):
                continue
            R = B.support_radius
            Y = B.support_center + R * Z[hit]
            bv, bg = B._eval(Y)
            val[hit] += n * d * bv / R
            grad[hit] += n * bg
        return val, grad

    def value(self, X):
        return self._eval(X)[0]

    def grad(self, X):
        return self._eval(X)[1]

    def block_point(self, n: int, y) -> np.ndarray:
        """Global coordinates of the point ``y`` of block ``n`` (1-based)."""
        B = self.blocks[n - 1]
        z = (np.asarray(y, dtype=float) - B.support_center) / B.support_radius
        return np.array([3.0 * n, 0.0]) + self.deltas[n - 1] * z

    def features(self, center, radius: float) -> list[Feature]:
        c = np.asarray(center, dtype=float).ravel()
        out = []
        for i, B in enumerate(self.blocks):
            n = i + 1
            d = self.deltas[i]
            if np.linalg.norm(c - [3.0 * n, 0.0]) > radius + d:
                continue
            R = B.support_radius
            s = d / R
            lc = B.support_center + (c - [3.0 * n, 0.0]) / s
            for ft in B.features(lc, radius / s):
                p = np.array([3.0 * n, 0.0]) + s * (np.asarray(ft.center) - B.support_center)
                out.append(Feature(tuple(p), s * ft.radius))
        return out

    def hints(self, center, radius: float) -> np.ndarray:
        c = np.asarray(center, dtype=float).ravel()
        out = [np.zeros((0, 2))]
        for i, B in enumerate(self.blocks):
            n = i + 1
            d = self.deltas[i]
            o = np.array([3.0 * n, 0.0])
            if np.linalg.norm(c - o) > radius + d:
                continue
            s = d / B.support_radius
            H = B.hints(B.support_center + (c - o) / s, radius / s)
            out.append(o + s * (H - B.support_center))
        return np.concatenate(out)

    @property
    def sup_norm_bound(self) -> float:
        return float(max((i + 1) * d * B.sup_norm_bound / B.support_radius
                         for i, (B, d) in enumerate(zip(self.blocks, self.deltas))))

    def config(self) -> dict:
        return {"level": "global", "deltas": self.deltas.tolist(),
                "blocks": [B.config() for B in self.blocks]}


def assemble_global(blocks: list, sup_bound: float | None = None) -> GlobalFunction:
    """Disjointly supported sum with block ``n`` scaled to Lipschitz constant ``n``.

    With ``sup_bound`` the blocks are shrunk so that ``‖f‖_∞ < sup_bound``.
    """
    deltas = np.ones(len(blocks))
    if sup_bound is not None:
        if sup_bound <= 0:
            raise AssemblyError("sup bound must be positive")
        for i, B in enumerate(blocks):
            n = i + 1
            s = n * B.sup_norm_bound / B.support_radius
            deltas[i] = min(1.0, 0.5 * sup_bound / s) if s > 0 else 1.0
    return GlobalFunction(blocks, deltas)


# ---------------------------------------------------------------------------
# spaceability operator (dimension one)


class SpaceabilityBlock(FunctionHandle):
    """Compactly supported Clarke exhaustive block of Lipschitz norm 1.

    On ``[0, 1]`` the derivative is ``2g - 1`` of the base construction; it is
    continued by a linear ramp on ``[-1, 0]`` and a tent on ``[1, 1 + ℓ]`` so
    that both the derivative and the function vanish outside the block.
    The block is then placed at ``a`` with scale ``s``.
    """

    dim = 1

    def __init__(self, base, a: float = 0.0, scale: float = 1.0):
        self.base = base
        self.a = float(a)
        self.scale = float(scale)
        g0 = 2 * float(base.g(np.array([0.0]))[0]) - 1
        g1 = 2 * float(base.g(np.array([1.0]))[0]) - 1
        F1 = 0.5 * g0 + (2 * float(base.f(np.array([1.0]))[0]) - 1.0)
        self.g0, self.g1, self.F0, self.F1 = g0, g1, 0.5 * g0, F1
        # tent of length ℓ from g1 to peak p and back to 0 integrates to ℓ(g1 + 2p)/4
        ell = 1.0
        while True:
            p = (-4 * F1 / ell - g1) / 2
            if abs(p) <= 0.9:
                break
            ell *= 2
        self.tail, self.peak = ell, p
        self.lipschitz = 1.0
        self.support = (self.a, self.a + self.scale * (2 + ell))

    def _local(self, X):
        return (self._pts(X)[:, 0] - self.a) / self.scale - 1.0

    def _deriv(self, t):
        out = np.zeros_like(t)
        m = (t > -1) & (t < 0)
        out[m] = self.g0 * (t[m] + 1)
        m = (t >= 0) & (t <= 1)
        if np.any(m):
            out[m] = 2 * self.base.g(t[m]) - 1
        half = self.tail / 2
        m = (t > 1) & (t <= 1 + half)
        out[m] = self.g1 + (self.peak - self.g1) * (t[m] - 1) / half
        m = (t > 1 + half) & (t < 1 + self.tail)
        out[m] = self.peak * (1 + self.tail - t[m]) / half
        return out

    def _prim(self, t):
        out = np.zeros_like(t)
        m = (t > -1) & (t < 0)
        out[m] = 0.5 * self.g0 * (t[m] + 1) ** 2
        m = (t >= 0) & (t <= 1)
        if np.any(m):
            out[m] = self.F0 + 2 * self.base.f(t[m]) - t[m]
        half = self.tail / 2
        m = (t > 1) & (t <= 1 + half)
        s = t[m] - 1
        out[m] = self.F1 + self.g1 * s + (self.peak - self.g1) * s * s / (2 * half)
        m = (t > 1 + half) & (t < 1 + self.tail)
        s = 1 + self.tail - t[m]
        out[m] = -self.peak * s * s / (2 * half)
        return out

    def value(self, X):
        return self.scale * self._prim(self._local(X))

    def grad(self, X):
        return self._deriv(self._local(X))[:, None]

    def features(self, center, radius: float) -> list[Feature]:
        c = (float(np.ravel(center)[0]) - self.a) / self.scale - 1.0
        out = []
        for ft in self.base.features((c,), radius / self.scale):
            t = ft.center[0]
            out.append(Feature((self.a + self.scale * (t + 1.0),), 0.0))
        return out


class SpaceableSum(FunctionHandle):
    """``T(x) = Σ_n x_n f_n`` for disjointly supported blocks."""

    dim = 1

    def __init__(self, coeffs, blocks):
        coeffs = np.asarray(coeffs, dtype=float)
        if len(coeffs) > len(blocks):
            raise AssemblyError("more coefficients than blocks")
        sup = sorted(b.support for b in blocks)
        if any(s1[0] < s0[1] for s0, s1 in zip(sup[:-1], sup[1:])):
            raise AssemblyError("block supports overlap")
        self.coeffs = coeffs
        self.blocks = list(blocks[: len(coeffs)])
        self.lipschitz = float(np.max(np.abs(coeffs))) if len(coeffs) else 0.0

    def _each(self, X, attr):
        X = self._pts(X)
        out = np.zeros(len(X))
        for a, B in zip(self.coeffs, self.blocks):
            if a == 0:
                continue
            lo, hi = B.support
            m = (X[:, 0] > lo) & (X[:, 0] < hi)
            if np.any(m):
                out[m] += a * np.ravel(getattr(B, attr)(X[m]))
        return out

    def value(self, X):
        return self._each(X, "value")

    def grad(self, X):
        return self._each(X, "grad")[:, None]


def spaceability_blocks(count: int, base=None, spacing: float = 8.0) -> list[SpaceabilityBlock]:
    if base is None:
        from .onedim import build_smooth

        base = build_smooth()
    blocks = [SpaceabilityBlock(base, a=spacing * i) for i in range(count)]
    if blocks[0].support[1] - blocks[0].support[0] >= spacing:
        raise AssemblyError("block tails exceed the spacing")
    return blocks


def spaceable_sum(coeffs, blocks=None) -> SpaceableSum:
    coeffs = np.asarray(coeffs, dtype=float)
    if blocks is None:
        blocks = spaceability_blocks(max(1, len(coeffs)))
    return SpaceableSum(coeffs, blocks)
