"""Sets that split every interval, built from Smith-Volterra-Cantor sets.

A :class:`FatCantorSet` on ``[u, v]`` removes, at step ``j``, an open middle
interval of length ``rho_j (v - u)`` from each of the ``2**(j-1)`` remaining
intervals.  With ``rho_j = scale * 4**-j`` the removed fraction is
``scale / 2``.  Every node of the construction is symmetric, so the measure
and first moment of a full node are known in closed form and partial
intersections only require walking down the two boundary paths.

A :class:`SplittingSet` places one fat Cantor set in every dyadic interval of
level ``<= depth``, each inside a part of the interval not yet touched by the
previously placed sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterator

import numpy as np


class ConstructionError(ValueError):
    pass


class BudgetError(ValueError):
    pass


INSIDE, OUTSIDE, UNDECIDED = "inside", "outside", "undecided"


@dataclass(frozen=True)
class FatCantorSet:
    u: Fraction
    v: Fraction
    scale: Fraction = Fraction(1)
    max_depth: int = 60

    def __post_init__(self):
        if not (self.v > self.u):
            raise ConstructionError("host interval must have positive length")
        if not (0 < self.scale < 2):
            raise ConstructionError("scale must lie in (0, 2)")

    @property
    def length(self) -> Fraction:
        return self.v - self.u

    def rho(self, j: int) -> Fraction:
        return self.scale / Fraction(4) ** j

    @cached_property
    def node_lengths(self) -> list[float]:
        """``ell_j``: length of each of the ``2**j`` level-``j`` intervals."""
        L = float(self.length)
        out, removed = [L], 0.0
        for j in range(1, self.max_depth + 1):
            removed += 2 ** (j - 1) * float(self.rho(j))
            out.append(L * (1.0 - removed) / 2**j)
        return out

    @property
    def total_measure(self) -> float:
        return float(self.length) * (1.0 - float(self.scale) / 2.0)

    def node_measure(self, j: int) -> float:
        return self.total_measure / 2**j

    @cached_property
    def _exact_lengths(self) -> list[Fraction]:
        out, removed = [self.length], Fraction(0)
        for j in range(1, self.max_depth + 1):
            removed += 2 ** (j - 1) * self.rho(j)
            out.append(self.length * (1 - removed) / 2**j)
        return out

    def node_length_exact(self, j: int) -> Fraction:
        return self._exact_lengths[j]

    def _descend(self, x: float, tol: float, weight_moment: bool) -> float:
        """Measure (or first moment) of ``S ∩ [u, x]``."""
        u, v = float(self.u), float(self.v)
        if x <= u:
            return 0.0
        if x >= v:
            return self.total_measure * ((u + v) / 2 if weight_moment else 1.0)
        ell = self.node_lengths
        acc, p = 0.0, u
        for j in range(0, self.max_depth):
            lj = ell[j]
            if lj < tol / 2:
                break
            child = ell[j + 1]
            mu = self.node_measure(j + 1)
            if x <= p + child:
                continue
            right = p + lj - child
            acc += mu * ((p + child / 2) if weight_moment else 1.0)
            if x < right:
                return acc
            p = right
        else:
            j = self.max_depth
        lj = ell[j]
        mu = self.node_measure(j)
        frac = min(max((x - p) / lj, 0.0), 1.0)
        if weight_moment:
            return acc + mu * frac * (p + (x - p) / 2)
        return acc + mu * frac

    def cumulative(self, x: float, tol: float = 1e-13) -> float:
        return self._descend(float(x), tol, False)

    def moment(self, x: float, tol: float = 1e-13) -> float:
        return self._descend(float(x), tol, True)

    def gaps(self, lo: Fraction, hi: Fraction, better_than: Fraction = Fraction(0)) -> Iterator[tuple[Fraction, Fraction]]:
        """Removed open intervals meeting ``(lo, hi)``, longest-first pruning."""
        stack = [(self.u, 0)]
        while stack:
            p, j = stack.pop()
            lj = self.node_length_exact(j)
            if j >= self.max_depth or lj <= better_than or p >= hi or p + lj <= lo:
                continue
            g = self.rho(j + 1) * self.length
            child = (lj - g) / 2
            a, b = p + child, p + child + g
            if a < hi and b > lo:
                yield a, b
            stack.append((p, j + 1))
            stack.append((b, j + 1))

    def largest_gap(self, lo: Fraction, hi: Fraction, at_least: Fraction = Fraction(0)):
        """Longest removed interval clipped to ``(lo, hi)``, if longer than ``at_least``."""
        best, best_len = None, at_least
        stack = [(self.u, 0)]
        while stack:
            p, j = stack.pop()
            lj = self.node_length_exact(j)
            if j >= self.max_depth or lj <= best_len or p >= hi or p + lj <= lo:
                continue
            g = self.rho(j + 1) * self.length
            child = (lj - g) / 2
            a, b = max(p + child, lo), min(p + child + g, hi)
            if b - a > best_len:
                best, best_len = (a, b), b - a
            stack.append((p, j + 1))
            stack.append((p + child + g, j + 1))
        return best

    def to_dict(self) -> dict:
        return {"u": str(self.u), "v": str(self.v), "rho": f"{self.scale}*4^-j"}


def svc_measure_in(S: FatCantorSet, a: float, b: float, tol: float = 1e-12) -> float:
    """``L1(S ∩ [a, b])`` to within ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if b <= a:
        return 0.0
    return max(0.0, S.cumulative(b, tol) - S.cumulative(a, tol))


def svc_membership(S: FatCantorSet, x: float, depth: int) -> str:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    x = Fraction(x)
    if x < S.u or x > S.v:
        return OUTSIDE
    p = S.u
    for j in range(depth):
        lj = S.node_length_exact(j)
        if x == p or x == p + lj:
            return INSIDE
        g = S.rho(j + 1) * S.length
        child = (lj - g) / 2
        if x < p + child:
            continue
        if x <= p + child + g:
            if x == p + child or x == p + child + g:
                return INSIDE
            return OUTSIDE
        p = p + child + g
    lj = S.node_length_exact(depth)
    if x == p or x == p + lj:
        return INSIDE
    return UNDECIDED


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SplittingSet:
    """Union of disjoint fat Cantor sets, one per dyadic interval.

    ``schedule[(level, k)]`` is the set placed in ``[k 2**-level, (k+1) 2**-level]``.
    """

    depth: int
    schedule: dict
    beta: tuple = field(default=())

    @cached_property
    def sets(self) -> list[FatCantorSet]:
        return sorted(self.schedule.values(), key=lambda S: S.u)

    @cached_property
    def _arrays(self):
        lo = np.array([float(S.u) for S in self.sets])
        hi = np.array([float(S.v) for S in self.sets])
        tot = np.array([S.total_measure for S in self.sets])
        mom = np.array([S.total_measure * (float(S.u) + float(S.v)) / 2 for S in self.sets])
        order = np.argsort(hi, kind="stable")
        return lo, hi, tot, mom, order, hi[order], np.concatenate([[0.0], np.cumsum(tot[order])]), np.concatenate([[0.0], np.cumsum(mom[order])])

    def cumulative(self, x: float, tol: float = 1e-13, moment: bool = False) -> float:
        """Measure (or first moment) of ``A ∩ [0, x]``."""
        lo, hi, tot, mom, order, hi_sorted, ctot, cmom = self._arrays
        k = int(np.searchsorted(hi_sorted, x, side="right"))
        acc = float((cmom if moment else ctot)[k])
        for i in np.nonzero((lo < x) & (hi > x))[0]:
            S = self.sets[i]
            acc += S.moment(x, tol) if moment else S.cumulative(x, tol)
        return acc

    def measure_in(self, a: float, b: float, tol: float = 1e-12) -> float:
        if b <= a:
            return 0.0
        return max(0.0, self.cumulative(b, tol / 4) - self.cumulative(a, tol / 4))

    def moment_in(self, a: float, b: float, tol: float = 1e-12) -> float:
        if b <= a:
            return 0.0
        return self.cumulative(b, tol / 4, True) - self.cumulative(a, tol / 4, True)

    def total(self) -> float:
        return float(sum(S.total_measure for S in self.sets))

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "beta": list(self.beta),
            "schedule": [
                {"level": lv, "k": k, **S.to_dict()} for (lv, k), S in sorted(self.schedule.items())
            ],
        }


class _Placer:
    """Places hosts in free space; hosts form a tree (a child sits in a removed gap
    of its parent), so free space is searched level by level down that tree."""

    def __init__(self):
        self.roots: list[FatCantorSet] = []
        self.children: dict[int, list[FatCantorSet]] = {}

    def _search(self, lo, hi, hosts, parent, best):
        over = [H for H in hosts if H.u < hi and H.v > lo]
        for c, d in _complement(lo, hi, [(H.u, H.v) for H in over]):
            if d - c > best[1]:
                best = ((c, d), d - c, parent)
        for H in over:
            stack = [(H.u, 0)]
            while stack:
                p, j = stack.pop()
                lj = H.node_length_exact(j)
                if j >= H.max_depth or lj <= best[1] or p >= hi or p + lj <= lo:
                    continue
                g = H.rho(j + 1) * H.length
                child = (lj - g) / 2
                a, b = max(p + child, lo), min(p + child + g, hi)
                if b - a > best[1]:
                    best = self._search(a, b, self.children.get(id(H), []), H, best)
                stack.append((p, j + 1))
                stack.append((p + child + g, j + 1))
        return best

    def free_interval(self, lo: Fraction, hi: Fraction):
        iv, _, parent = self._search(lo, hi, self.roots, None, (None, Fraction(0), None))
        return iv, parent

    def place(self, lo: Fraction, hi: Fraction, name: str) -> FatCantorSet:
        iv, parent = self.free_interval(lo, hi)
        if iv is None:
            raise ConstructionError(f"no free space in dyadic interval {name}")
        a, b = iv
        w = (b - a) / 3
        S = FatCantorSet(a + w, a + 2 * w)
        if parent is None:
            self.roots.append(S)
        else:
            self.children.setdefault(id(parent), []).append(S)
        return S


def _complement(lo, hi, blocks):
    out, start = [], lo
    for a, b in sorted(blocks):
        if a > start:
            out.append((start, min(a, hi)))
        start = max(start, b)
        if start >= hi:
            break
    if start < hi:
        out.append((start, hi))
    return [(a, b) for a, b in out if b > a]


@dataclass(frozen=True, eq=False)
class SplittingPartition:
    parts: tuple
    depth: int

    def remainder_measure(self) -> float:
        return 1.0 - sum(p.total() for p in self.parts)


def splitting_partition(k: int, depth: int, max_sets: int = 200_000) -> SplittingPartition:
    """``k`` disjoint splitting sets for dyadic intervals of level ``<= depth``.

    The remainder ``[0,1]`` minus the parts completes the partition.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if k * (2 ** (depth + 1) - 1) > max_sets:
        raise BudgetError(f"{k} parts at depth {depth} exceed the placement budget")
    placer = _Placer()
    schedules = [dict() for _ in range(k)]
    for level in range(depth + 1):
        for j in range(2**level):
            lo, hi = Fraction(j, 2**level), Fraction(j + 1, 2**level)
            for p in range(k):
                schedules[p][(level, j)] = placer.place(lo, hi, f"[{lo}, {hi}]")
    parts = []
    for sch in schedules:
        S = SplittingSet(depth, sch)
        object.__setattr__(S, "beta", tuple(splitting_margins(S)))
        parts.append(S)
    return SplittingPartition(tuple(parts), depth)


@lru_cache(maxsize=8)
def build_splitting_set(depth: int) -> SplittingSet:
    """Single splitting set; ``beta[level]`` is its certified margin."""
    return splitting_partition(1, depth).parts[0]


def splitting_margins(A: SplittingSet) -> list[float]:
    """``min_I min(|A ∩ I|, |I \\ A|)`` over dyadic intervals I of each level."""
    out = []
    for level in range(A.depth + 1):
        n = 2**level
        xs = np.arange(n + 1) / n
        cum = np.array([A.cumulative(x) for x in xs])
        inside = np.diff(cum)
        outside = 1.0 / n - inside
        out.append(float(min(inside.min(), outside.min())))
    return out


def hosts_disjoint(A) -> bool:
    """Exact check that the host intervals of all placed sets are pairwise disjoint
    or nested inside a removed gap of the enclosing set."""
    sets = A.sets if isinstance(A, SplittingSet) else sorted(
        (S for p in A.parts for S in p.sets), key=lambda S: S.u)
    for i, S in enumerate(sets):
        for T in sets[i + 1:]:
            if T.u >= S.v:
                break
            # T starts inside S: it must sit in a removed gap of S
            if not any(a <= T.u and T.v <= b for a, b in S.gaps(T.u, T.v)):
                return False
    return True
