"""Continuous codings: Hilbert curve, triangle fold, Cantor intervals, body tours.

The Hilbert curve runs from (0,0) to (1,0).  It is generated by four
similarities of ratio 1/2 applied to the base-4 digits of ``t``; the
remaining fraction of ``t`` is placed on the level-0 segment
``[(0,0), (1,0)]``.  This makes every finite-depth approximation a
continuous polygonal path through the centres of the dyadic grid edges, and
each depth refines the previous one by at most ``sqrt(2) * 2**-depth``.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from fractions import Fraction
from typing import Sequence

import numpy as np

from .geometry import (
    BallUnion,
    ConvexBody,
    GeometryError,
    clip_halfplane,
    hausdorff_distance,
    minkowski_interpolate,
    set_from_dict,
    set_to_dict,
    support_values,
)


class CodingError(ValueError):
    pass


class RefineError(CodingError):
    """A Cantor node ran out of measure before the requested depth."""


class BudgetError(CodingError):
    pass


# ---------------------------------------------------------------------------
# dyadics


def dyadic_enumeration(n: int) -> Fraction:
    """``d_1 = 1/2, d_2 = 1/4, d_3 = 3/4, d_4 = 1/8, ...`` level by level.

    With ``2**m <= n < 2**(m+1)`` and ``i = n - 2**m + 1`` this is
    ``(2i - 1) / 2**(m+1)``.
    """
    n = int(n)
    if n < 1:
        raise CodingError("dyadic index must be >= 1")
    m = n.bit_length() - 1
    i = n - (1 << m) + 1
    return Fraction(2 * i - 1, 1 << (m + 1))


def dyadic_index(d: Fraction) -> int:
    """Inverse of :func:`dyadic_enumeration` for ``d = p / 2**L`` in (0,1)."""
    d = Fraction(d)
    if not (0 < d < 1):
        raise CodingError("dyadic must lie in (0,1)")
    q = d.denominator
    if q & (q - 1):
        raise CodingError("not a dyadic rational")
    L = q.bit_length() - 1
    i = (d.numerator + 1) // 2
    return (1 << (L - 1)) + i - 1


def default_eps(n: int) -> Fraction:
    return Fraction(1, n * (1 << (n + 2)))


def spike_gaps(nmax: int = 4096) -> list[tuple[Fraction, Fraction]]:
    """Open intervals ``(d_n - eps_n, d_n + eps_n)`` for ``n <= nmax``."""
    out = []
    for n in range(1, nmax + 1):
        d, e = dyadic_enumeration(n), default_eps(n)
        out.append((d - e, d + e))
    return out


# ---------------------------------------------------------------------------
# Hilbert curve and fold


def _digits_apply(t: np.ndarray, depth: int) -> np.ndarray:
    x = np.array(t, dtype=float)
    digits = np.empty((depth,) + x.shape, dtype=np.int8)
    for k in range(depth):
        x = x * 4.0
        d = np.minimum(np.floor(x), 3.0)
        digits[k] = d.astype(np.int8)
        x = x - d
    px, py = x, np.zeros_like(x)
    for k in range(depth - 1, -1, -1):
        d = digits[k]
        nx = np.select([d == 0, d == 1, d == 2], [py / 2, px / 2, px / 2 + 0.5], 1.0 - py / 2)
        ny = np.select([d == 0, d == 1, d == 2], [px / 2, py / 2 + 0.5, py / 2 + 0.5], 0.5 - px / 2)
        px, py = nx, ny
    return np.stack([px, py], axis=-1)


def hilbert_point(t, depth: int) -> np.ndarray:
    """Depth-``depth`` Hilbert approximation; scalar or array ``t`` in [0,1]."""
    if depth < 1:
        raise CodingError("depth must be >= 1")
    arr = np.asarray(t, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise CodingError("t must lie in [0,1]")
    return _digits_apply(arr, depth)


def fold(p: np.ndarray) -> np.ndarray:
    """``(a, b) -> (min(a,b), max(a,b))``, onto the upper triangle."""
    p = np.asarray(p, dtype=float)
    return np.stack([np.minimum(p[..., 0], p[..., 1]), np.maximum(p[..., 0], p[..., 1])], axis=-1)


def triangle_curve(t, depth: int) -> np.ndarray:
    return fold(hilbert_point(t, depth))


def hilbert_vertices(depth: int) -> np.ndarray:
    """Polygon vertices of the depth approximation, at ``t = k / 4**depth``."""
    k = np.arange(4**depth + 1, dtype=float)
    return hilbert_point(k / 4**depth, depth)


# ---------------------------------------------------------------------------
# Cantor intervals inside F = [0,1] minus gaps


def merge_gaps(gaps) -> list[tuple[Fraction, Fraction]]:
    """Union of open intervals, clipped to (0,1), sorted."""
    iv = sorted((max(Fraction(a), Fraction(0)), min(Fraction(b), Fraction(1))) for a, b in gaps)
    out: list[list[Fraction]] = []
    for a, b in iv:
        if b <= a:
            continue
        if out and a < out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


class _Host:
    """Measure bookkeeping for F = [0,1] minus a finite union of open gaps."""

    def __init__(self, gaps):
        self.gaps = merge_gaps(gaps)
        self.lo = [a for a, _ in self.gaps]
        self.hi = [b for _, b in self.gaps]
        # cum[k] = total gap length of the first k gaps
        self.cum = [Fraction(0)]
        for a, b in self.gaps:
            self.cum.append(self.cum[-1] + (b - a))
        # Phi(lo_k) = lo_k - cum[k]
        self.phi_lo = [a - c for a, c in zip(self.lo, self.cum)]

    def phi(self, x: Fraction) -> Fraction:
        """F-measure of [0, x]."""
        k = bisect.bisect_left(self.lo, x)  # gaps fully or partially left of x start before x
        val = x - self.cum[k]
        if k > 0 and x < self.hi[k - 1]:
            # x inside gap k-1
            val = self.lo[k - 1] - self.cum[k - 1]
        return val

    def inv_low(self, T: Fraction) -> Fraction:
        """Smallest x with phi(x) = T."""
        k = bisect.bisect_left(self.phi_lo, T)
        return T + self.cum[k]

    def inv_high(self, T: Fraction) -> Fraction:
        """Largest x with phi(x) = T."""
        k = bisect.bisect_right(self.phi_lo, T)
        return T + self.cum[k]

    def components(self, u: Fraction, v: Fraction) -> list[tuple[Fraction, Fraction]]:
        i = bisect.bisect_right(self.hi, u)
        j = bisect.bisect_left(self.lo, v)
        out, start = [], u
        for k in range(i, j):
            if self.lo[k] > start:
                out.append((start, self.lo[k]))
            start = max(start, self.hi[k])
        if v > start:
            out.append((start, v))
        return out

    def meets_gap(self, u: Fraction, v: Fraction) -> bool:
        i = bisect.bisect_right(self.hi, u)
        return i < len(self.gaps) and self.lo[i] < v


@dataclass(frozen=True, eq=False)
class CantorApprox:
    """Depth-``D`` approximation of a Cantor set C inside F.

    ``nodes[k]`` is the closed interval of binary word ``k`` (most significant
    bit first) at depth ``D``; ``leaves[k]`` is the largest gap-free piece of
    that node.  Endpoints are exact rationals.
    """

    depth: int
    nodes: tuple
    leaves: tuple
    gaps: tuple
    split_fraction: Fraction
    host_measure: Fraction
    tree: dict = field(repr=False)

    @cached_property
    def leaf_array(self) -> np.ndarray:
        return np.array([[float(a), float(b)] for a, b in self.leaves])

    def word_of(self, x: float) -> int | None:
        """Index of the leaf containing ``x`` (float), else ``None``."""
        L = self.leaf_array
        k = int(np.searchsorted(L[:, 0], x, side="right")) - 1
        if 0 <= k < len(L) and x <= L[k, 1]:
            return k
        return None

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "split_fraction": str(self.split_fraction),
            "leaves": [[str(a), str(b)] for a, b in self.leaves],
        }


def build_cantor_in(gaps, depth: int, split_fraction: Fraction = Fraction(1, 3),
                    resolution: Fraction = Fraction(1, 2**40)) -> CantorApprox:
    """Recursive median splitting of ``F = [0,1]`` minus ``gaps``.

    A node ``[u, v]`` with F-measure ``mu`` keeps the parts of F-measure
    ``(1 - s) mu / 2`` at each end and drops the middle ``s mu`` (default
    ``s = 1/3``, the middle-thirds rule when there are no gaps).  Child
    endpoints are pushed out of gaps so every node boundary lies in F.
    """
    if depth < 1:
        raise CodingError("depth must be >= 1")
    gaps = [(Fraction(a), Fraction(b)) for a, b in gaps]
    if sum(b - a for a, b in gaps) / 2 >= Fraction(1, 2):
        raise CodingError("gap half-widths must sum to less than 1/2")
    s = Fraction(split_fraction)
    if not (0 < s < 1):
        raise CodingError("split fraction must lie in (0,1)")
    host = _Host(gaps)
    u0 = host.inv_high(Fraction(0))
    v0 = host.inv_low(host.phi(Fraction(1)))
    total = host.phi(Fraction(1))
    level = [(u0, v0)]
    tree = {(0, 0): (u0, v0)}
    keep = (1 - s) / 2
    for lev in range(depth):
        nxt = []
        for k, (u, v) in enumerate(level):
            pu = host.phi(u)
            mu = host.phi(v) - pu
            if mu <= resolution:
                word = format(k, f"0{lev}b") if lev else "(root)"
                raise RefineError(f"node {word} has F-measure below resolution")
            left_end = host.inv_low(pu + keep * mu)
            right_start = host.inv_high(pu + (1 - keep) * mu)
            nxt.append((u, left_end))
            nxt.append((right_start, v))
            tree[(lev + 1, 2 * k)] = nxt[-2]
            tree[(lev + 1, 2 * k + 1)] = nxt[-1]
        level = nxt
    leaves = []
    for u, v in level:
        comps = host.components(u, v)
        best = max(comps, key=lambda c: c[1] - c[0])
        leaves.append(best)
    return CantorApprox(depth, tuple(level), tuple(leaves), tuple(host.gaps), s, total, tree)


def cantor_code(word) -> Fraction:
    """``psi(w) = sum 2**-n w_n`` for a finite 0/1 word (string or sequence)."""
    bits = [int(c) for c in word]
    if any(b not in (0, 1) for b in bits):
        raise CodingError("word must be binary")
    return sum((Fraction(b, 2 ** (i + 1)) for i, b in enumerate(bits)), Fraction(0))


def word_bits(k: int, depth: int) -> str:
    return format(k, f"0{depth}b")


@dataclass(frozen=True, eq=False)
class CantorCurve:
    """Piecewise-linear extension of ``psi`` from the leaves to [0,1]."""

    cantor: CantorApprox
    knots_x: np.ndarray
    knots_y: np.ndarray

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.knots_x, self.knots_y)


def extend_onto(cantor: CantorApprox) -> CantorCurve:
    """Constant ``k / 2**D`` on leaf ``k``, linear across the gaps, 1 at x=1."""
    D = cantor.depth
    xs, ys = [], []
    L = cantor.leaf_array
    if L[0, 0] > 0:
        xs.append(0.0)
        ys.append(0.0)
    for k, (a, b) in enumerate(L):
        val = k / 2**D
        xs.extend([a, b])
        ys.extend([val, val])
    if L[-1, 1] < 1:
        xs.append(1.0)
        ys.append(1.0)
    return CantorCurve(cantor, np.array(xs), np.array(ys))


@dataclass(frozen=True, eq=False)
class CodingCurve:
    """``gamma = fold o hilbert o extend_onto(cantor)``: [0,1] -> upper triangle."""

    cantor: CantorApprox
    extension: CantorCurve
    hilbert_depth: int

    def __call__(self, x) -> np.ndarray:
        return triangle_curve(np.clip(self.extension(x), 0.0, 1.0), self.hilbert_depth)

    def leaf_value(self, k: int) -> np.ndarray:
        return triangle_curve(k / 2**self.cantor.depth, self.hilbert_depth)

    def code_target(self, a: float, b: float) -> tuple[int, float]:
        """Word whose leaf value is closest to ``(a, b)``, and a coded point in it."""
        vals = self.leaf_value(np.arange(2**self.cantor.depth))
        k = int(np.argmin(np.linalg.norm(vals - np.array([a, b]), axis=1)))
        return k, leaf_point(self.cantor.leaves[k])

    def breakpoints(self) -> np.ndarray:
        """x-values where alpha or beta may fail to be affine."""
        xs = [0.0, 1.0]
        ext = self.extension
        kx, ky = ext.knots_x, ext.knots_y
        step = 4.0 ** (-self.hilbert_depth)
        for i in range(len(kx) - 1):
            x0, x1, y0, y1 = kx[i], kx[i + 1], ky[i], ky[i + 1]
            xs.append(x0)
            if y1 == y0 or x1 == x0:
                continue
            # Hilbert vertex parameters strictly inside (y0, y1)
            j0, j1 = math.floor(y0 / step) + 1, math.ceil(y1 / step) - 1
            ts = [y0] + [j * step for j in range(j0, j1 + 1)] + [y1]
            for ta, tb in zip(ts[:-1], ts[1:]):
                xa = x0 + (ta - y0) / (y1 - y0) * (x1 - x0)
                xb = x0 + (tb - y0) / (y1 - y0) * (x1 - x0)
                xs.append(xa)
                pa, pb = hilbert_point(np.array([ta, tb]), self.hilbert_depth)
                da, db = pa[0] - pa[1], pb[0] - pb[1]
                if da * db < 0:
                    xs.append(xa + da / (da - db) * (xb - xa))
        return np.unique(np.array(xs))


def leaf_point(leaf: tuple[Fraction, Fraction], max_level: int = 60) -> float:
    """A float inside the leaf, away from its ends and not a low-level dyadic."""
    a, b = leaf
    w = b - a
    for num, den in ((1, 2), (3, 7), (4, 7), (2, 5), (3, 5)):
        x = float(a + w * Fraction(num, den))
        if float(a) < x < float(b) and dyadic_level(x) > max_level // 2:
            return x
    return float(a + w / 2)


def dyadic_level(x: float) -> int:
    """Level L with ``x = p / 2**L``, p odd (0 for integers)."""
    q = Fraction(x).denominator
    return q.bit_length() - 1


@lru_cache(maxsize=8)
def build_coding_curve(cantor_depth: int = 10, hilbert_depth: int = 5, gap_cutoff: int = 4096) -> CodingCurve:
    cantor = build_cantor_in(spike_gaps(gap_cutoff), cantor_depth)
    return CodingCurve(cantor, extend_onto(cantor), hilbert_depth)


# ---------------------------------------------------------------------------
# nets of convex bodies and tours


NET_CONSTANT = 5.0  # pi**2 / 2 rounded up: polygon-vs-body slack per diam / m**2


def body_net(C: ConvexBody, m: int, delta: float, cap: int = 20000) -> list[ConvexBody]:
    """Finite ``eps``-net of the convex bodies ``K`` with ``0 in K ⊆ C``.

    Support values on ``m`` equally spaced directions are quantised to the
    grid ``{0, delta, 2 delta, ...}`` capped by the support value of ``C``;
    each choice yields ``C ∩ {x: <x, u_j> <= q_j}``.  Covering radius is at
    most ``delta / cos(pi/m) + NET_CONSTANT * diam(C) / m**2``.
    """
    if C.dim != 2:
        raise GeometryError("body nets implemented for 2D")
    if m < 8:
        raise CodingError("need m >= 8 directions")
    if delta <= 0:
        raise CodingError("delta must be positive")
    if not C.contains([0.0, 0.0]):
        raise CodingError("C must contain 0")
    th = 2 * math.pi * np.arange(m) / m
    U = np.stack([np.cos(th), np.sin(th)], axis=1)
    hC = support_values(C, U)
    grids = []
    for h in hC:
        g = list(np.arange(0.0, h, delta))
        if not g or h - g[-1] > 1e-12:
            g.append(float(h))
        grids.append(g)
    count = math.prod(len(g) for g in grids)
    if count > cap:
        raise BudgetError(f"net would contain {count} bodies (cap {cap})")
    base = C.to_float()
    seen, family = set(), []
    for q in itertools.product(*grids):
        K = base
        for u, c in zip(U, q):
            K = clip_halfplane(K, u, c) if K is not None else None
        if K is None:
            K = ConvexBody.from_points([[0.0, 0.0]])
        K = ConvexBody.from_points(np.round(K.array, 12).tolist())
        if K.vertices not in seen:
            seen.add(K.vertices)
            family.append(K)
    return family


def net_radius(C: ConvexBody, m: int, delta: float) -> float:
    return delta / math.cos(math.pi / m) + NET_CONSTANT * C.diameter / m**2


@dataclass(frozen=True, eq=False)
class BodyTour:
    """A curve ``t -> h(t)`` through a finite family of target sets.

    ``geodesic`` mode interpolates consecutive convex knots by Minkowski
    geodesics and is constant before the first and after the last knot.
    ``cantor`` mode assigns knot ``k`` to the ``k``-th depth-``log2(#knots)``
    Cantor interval and is piecewise constant.
    """

    knots: tuple
    params: tuple
    mode: str
    cantor: CantorApprox | None = None

    def __call__(self, t):
        t = float(t)
        if self.mode == "cantor":
            return self.knots[self._cantor_index(t)]
        ps = self.params
        if t <= ps[0]:
            return self.knots[0]
        if t >= ps[-1]:
            return self.knots[-1]
        i = bisect.bisect_right(ps, t) - 1
        if t == ps[i]:
            return self.knots[i]
        lam = (t - ps[i]) / (ps[i + 1] - ps[i])
        return minkowski_interpolate(self.knots[i], self.knots[i + 1], lam)

    def _cantor_index(self, t: float) -> int:
        k = len(self.knots)
        depth = k.bit_length() - 1
        starts = [float(self.cantor.tree[(depth, j)][0]) for j in range(k)]
        return max(0, bisect.bisect_right(starts, t) - 1)

    @property
    def lipschitz(self) -> float:
        if self.mode != "geodesic" or len(self.knots) < 2:
            return 0.0
        legs = [hausdorff_distance(a, b) for a, b in zip(self.knots[:-1], self.knots[1:])]
        gaps = [b - a for a, b in zip(self.params[:-1], self.params[1:])]
        return sum(legs) / min(gaps)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "params": list(self.params),
            "knots": [set_to_dict(K) for K in self.knots],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BodyTour":
        knots = [set_from_dict(k) for k in d["knots"]]
        return body_tour(knots, d["mode"], params=d.get("params"))


def body_tour(family: Sequence, mode: str = "geodesic", params=None,
              cantor: CantorApprox | None = None) -> BodyTour:
    family = list(family)
    if not family:
        raise CodingError("empty family")
    if mode == "geodesic":
        for K in family:
            if not isinstance(K, ConvexBody):
                raise CodingError("geodesic mode needs convex knots")
            if not K.contains(np.zeros(K.dim), tol=1e-12):
                raise CodingError("every knot must contain 0")
        if params is None:
            n = len(family)
            params = [i / (n - 1) for i in range(n)] if n > 1 else [0.0]
        params = [float(p) for p in params]
        if len(params) != len(family) or any(b <= a for a, b in zip(params[:-1], params[1:])):
            raise CodingError("knot parameters must be strictly increasing")
        return BodyTour(tuple(family), tuple(params), mode)
    if mode == "cantor":
        k = len(family)
        if k & (k - 1):
            raise CodingError("cantor mode needs a power-of-two number of knots")
        for K in family:
            if isinstance(K, BallUnion):
                if not K.connected:
                    raise CodingError("connected mode needs connected ball unions")
                if not K.contains(np.zeros(K.dim)):
                    raise CodingError("every knot must contain 0")
        depth = max(1, k.bit_length() - 1)
        if cantor is None or cantor.depth < depth:
            cantor = build_cantor_in([], depth)
        return BodyTour(tuple(family), tuple(range(k)), mode, cantor)
    raise CodingError(f"unknown tour mode {mode!r}")
