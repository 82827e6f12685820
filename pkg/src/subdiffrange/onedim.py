"""One-dimensional exhaustive functions and the root-type integral bounds.

Two constructions live here.

* :class:`NonsmoothExhaustive`: ``f(x) = ∫_0^x a 1_A + b 1_{A^c}`` where
  ``(a, b)`` follows the folded Hilbert curve and ``A`` splits every
  interval.  The integral is exact up to the measure oracle: on every piece
  where ``a`` and ``b`` are affine it only needs ``|A ∩ I|`` and
  ``∫_{A ∩ I} t dt``.

* :class:`SmoothExhaustive`: ``g = min(beta, alpha + inf_n r_n)`` with root
  spikes ``r_n(x) = (|x - d_n| / eps_n) ** nu_n`` at the dyadics, and
  ``f = ∫ g``.  Off the spike regions ``g = beta`` is piecewise affine and is
  integrated exactly; the few spikes wide enough to matter in double
  precision are integrated with adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy import optimize
from scipy.optimize import elementwise

from .coding import (
    CodingCurve,
    build_coding_curve,
    dyadic_enumeration,
    dyadic_index,
    triangle_curve,
)
from .handles import Feature, FunctionHandle
from .splitting import SplittingSet, build_splitting_set


class PrecisionError(ValueError):
    pass


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


# ---------------------------------------------------------------------------
# sigma and the two lower integral bounds


def _psi(y: float, nu: float) -> float:
    return (1.0 + y ** (1.0 + nu)) / ((1.0 + nu) * (1.0 + y))


def sigma(nu: float) -> float:
    """``1 - min_{y in [0,1]} (1 + y**(1+nu)) / ((1+nu)(1+y))``."""
    if not (0 < nu <= 1):
        raise ValueError("nu must lie in (0, 1]")
    res = optimize.minimize_scalar(_psi, bounds=(0.0, 1.0), args=(nu,), method="bounded",
                                   options={"xatol": 1e-12})
    return 1.0 - min(res.fun, _psi(0.0, nu), _psi(1.0, nu))


def _psi_stationary(y, nu):
    return nu * y ** (1.0 + nu) + (1.0 + nu) * y**nu - 1.0


def sigma_array(nu) -> np.ndarray:
    """Vectorised :func:`sigma` via the stationarity condition of the objective.

    ``nu y**(1+nu) + (1+nu) y**nu = 1`` has exactly one root in (0, 1) since
    the left side increases from 0 to ``1 + 2 nu``.
    """
    nu = np.asarray(nu, dtype=float)
    if np.any((nu <= 0) | (nu > 1)):
        raise ValueError("nu must lie in (0, 1]")
    res = elementwise.find_root(_psi_stationary, (np.zeros_like(nu), np.ones_like(nu)), args=(nu,),
                                tolerances={"xatol": 1e-15, "xrtol": 1e-15})
    y = res.x
    psi = (1.0 + y ** (1.0 + nu)) / ((1.0 + nu) * (1.0 + y))
    return 1.0 - psi


def _root_mean(a: float, b: float, nu: float) -> float:
    """Mean of ``t**nu`` over ``[a, b]`` with ``0 <= a < b``, cancellation-free."""
    if a == 0.0:
        return b**nu / (1.0 + nu)
    w = b - a
    if w > a:
        # no cancellation to guard against, and w / a may overflow
        return (b ** (1.0 + nu) - a ** (1.0 + nu)) / ((1.0 + nu) * w)
    return a ** (1.0 + nu) * math.expm1((1.0 + nu) * math.log1p(w / a)) / ((1.0 + nu) * w)


def _abs_root_integral(a: float, b: float, nu: float) -> float:
    """``∫_a^b |t|**nu dt`` for ``a < b``."""
    if a >= 0:
        return (b - a) * _root_mean(a, b, nu)
    if b <= 0:
        return (b - a) * _root_mean(-b, -a, nu)
    return -a * _root_mean(0.0, -a, nu) + b * _root_mean(0.0, b, nu)


def root_average(x: float, h: float, nu: float) -> float:
    """``(1/h) ∫_x^{x+h} |t|**nu dt``."""
    if h == 0:
        raise ValueError("h must be nonzero")
    a, b = (x, x + h) if h > 0 else (x + h, x)
    if b == a:
        return abs(x) ** nu
    return _abs_root_integral(a, b, nu) / (b - a)


def truncated_root_average(x: float, h: float, d: float, eps: float, m: float, nu: float) -> float:
    """``(1/h) ∫_x^{x+h} min(m**nu, (|t - d| / eps)**nu) dt``."""
    if h == 0:
        raise ValueError("h must be nonzero")
    if eps <= 0 or m <= 0:
        raise ValueError("eps and m must be positive")
    a, b = (x, x + h) if h > 0 else (x + h, x)
    s0, s1 = (a - d) / eps, (b - d) / eps
    if s1 == s0:
        return min(m, abs(s0)) ** nu
    cuts = [s0] + [c for c in (-m, m) if s0 < c < s1] + [s1]
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (lo + hi)
        if abs(mid) >= m:
            total += (hi - lo) * m**nu
        else:
            total += _abs_root_integral(lo, hi, nu)
    return total / (s1 - s0)


def truncated_root(t: float, d: float, eps: float, m: float, nu: float) -> float:
    return min(m**nu, (abs(t - d) / eps) ** nu)


# ---------------------------------------------------------------------------
# spikes


@dataclass(frozen=True)
class RootSpikeParams:
    n: int
    d: Fraction
    eps: float
    nu: float

    @classmethod
    def default(cls, n: int) -> "RootSpikeParams":
        return cls(n, dyadic_enumeration(n), spike_eps(n), spike_nu(n))

    def r(self, x):
        return (np.abs(np.asarray(x, dtype=float) - float(self.d)) / self.eps) ** self.nu


def spike_eps(n: int) -> float:
    return math.ldexp(1.0 / n, -(n + 2))


def spike_nu(n: int) -> float:
    return math.ldexp(1.0, -n)


def dyadic_levels(x: np.ndarray) -> np.ndarray:
    """Level ``L`` with ``x = p / 2**L``, p odd; 0 for x = 0 and integers."""
    x = np.asarray(x, dtype=float)
    m, e = np.frexp(np.abs(x))
    M = (m * 2.0**53).astype(np.int64)
    safe = np.where(M == 0, 1, M)
    low = safe & (-safe)
    tz = np.log2(low.astype(float)).astype(np.int64)
    lev = 53 - e - tz
    return np.where((M == 0) | (lev < 0), 0, lev)


# ---------------------------------------------------------------------------
# common 1D handle plumbing


class OneDimFunction(FunctionHandle):
    dim = 1
    lipschitz = 1.0
    kind = ""
    tilde = False

    def alpha_beta(self, x) -> np.ndarray:
        raise NotImplementedError

    def g(self, x) -> np.ndarray:
        raise NotImplementedError

    def f(self, x) -> np.ndarray:
        raise NotImplementedError

    def value(self, X):
        return self.f(self._pts(X)[:, 0])

    def grad(self, X):
        return self.g(self._pts(X)[:, 0])[:, None]

    def predict(self, x: float) -> tuple[float, float]:
        a, b = self.alpha_beta(np.array([x]))[0]
        return float(a), float(b)

    def config(self) -> dict:
        return {"kind": self.kind, "tilde": self.tilde}


# ---------------------------------------------------------------------------
# the differentiable construction


class SmoothExhaustive(OneDimFunction):
    """``g = min(beta, alpha + inf_n r_n)`` and ``f = ∫_0^x g`` on [0,1].

    Outside [0,1] the function is continued affinely with slopes ``g(0)`` and
    ``g(1)``.  ``spike_levels`` bounds the dyadic levels whose centres are
    recognised exactly (``n < 2**spike_levels``); spikes whose width
    ``eps_n`` falls below ``visible_eps`` are treated as invisible to the
    integral, each contributing at most ``2 eps_n``.
    """

    kind = "differentiable"

    def __init__(self, curve: CodingCurve | None = None, spike_levels: int = 30,
                 visible_eps: float = 1e-18):
        self.curve = curve if curve is not None else build_coding_curve()
        self.spike_levels = int(spike_levels)
        self.visible_eps = visible_eps
        n_vis = 1
        while spike_eps(n_vis + 1) >= visible_eps:
            n_vis += 1
        self.n_visible = n_vis
        # levels where a float x can sit inside a spike without being its centre
        self.resolved_levels = 1
        while self.resolved_levels < self.spike_levels and spike_eps(2 ** self.resolved_levels) > 0:
            self.resolved_levels += 1

    # -- alpha, beta, g

    def alpha_beta(self, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return self.curve(x)

    def inf_r(self, x) -> np.ndarray:
        """``min_n r_n(x)`` over the recognised spikes, capped at 1."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.ones_like(x)
        inside = (x > 0) & (x < 1)
        lev = dyadic_levels(x)
        out[inside & (lev >= 1) & (lev <= self.spike_levels)] = 0.0
        for L in range(1, self.resolved_levels + 1):
            scale = 2.0**L
            p = 2.0 * np.floor(x * scale / 2.0) + 1.0
            d = p / scale
            ok = inside & (p >= 1) & (p <= scale - 1)
            if not ok.any():
                continue
            n = (2 ** (L - 1) + (p + 1) / 2 - 1).astype(np.int64)
            for nn in np.unique(n[ok]):
                eps = spike_eps(int(nn))
                if eps == 0.0:
                    continue
                sel = ok & (n == nn)
                dist = np.abs(x[sel] - d[sel])
                hit = dist < eps
                if hit.any():
                    r = (dist[hit] / eps) ** spike_nu(int(nn))
                    idx = np.nonzero(sel)[0][hit]
                    out[idx] = np.minimum(out[idx], r)
        return out

    def g_inner(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        ab = self.alpha_beta(x)
        return np.minimum(ab[:, 1], ab[:, 0] + self.inf_r(x))

    def g(self, x) -> np.ndarray:
        return self.g_inner(x)

    # -- integral

    @cached_property
    def _beta_table(self):
        xs = self.curve.breakpoints()
        b = self.alpha_beta(xs)[:, 1]
        cum = np.concatenate([[0.0], np.cumsum(np.diff(xs) * (b[1:] + b[:-1]) / 2)])
        return xs, b, cum

    def _beta_integral(self, x: np.ndarray) -> np.ndarray:
        xs, b, cum = self._beta_table
        xc = np.clip(x, 0.0, 1.0)
        k = np.clip(np.searchsorted(xs, xc, side="right") - 1, 0, len(xs) - 2)
        bx = self.alpha_beta(xc)[:, 1]
        return cum[k] + (xc - xs[k]) * (b[k] + bx) / 2

    def _dip(self, t) -> np.ndarray:
        """``beta - g >= 0``, vectorised."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        ab = self.alpha_beta(t)
        return np.maximum(0.0, ab[:, 1] - ab[:, 0] - self.inf_r(t))

    def _gauss(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        half = (hi - lo) / 2
        X = (lo + hi)[:, None] / 2 + half[:, None] * _GL_NODES[None, :]
        vals = self._dip(X.ravel()).reshape(X.shape)
        return half * (vals @ _GL_WEIGHTS)

    @cached_property
    def _dip_table(self):
        """Panels covering every visible dip, with cumulative integrals.

        Spike ``n`` can only lower ``g`` where ``r_n < beta - alpha``, i.e.
        within ``eps_n (max(beta - alpha)) ** (1/nu_n)`` of ``d_n``.  Panels are
        cut at the breakpoints of alpha and beta, at the points where the
        root meets ``beta - alpha``, and graded geometrically towards ``d_n``
        to resolve the ``|t - d| ** nu`` cusp.
        """
        bps = self.curve.breakpoints()
        supports, nodes = [], []
        for n in range(1, self.n_visible + 1):
            d, eps, nu = float(dyadic_enumeration(n)), spike_eps(n), spike_nu(n)
            lo, hi = max(d - eps, 0.0), min(d + eps, 1.0)
            pts = np.concatenate([[lo, hi, d], bps[(bps > lo) & (bps < hi)]])
            ab = self.alpha_beta(pts)
            dmax = float(np.max(ab[:, 1] - ab[:, 0]))
            if dmax <= 0:
                continue
            w = eps * math.exp(math.log(dmax) / nu) if dmax < 1 else eps
            if w < 1e-22:
                continue
            supports.append((max(d - w, 0.0), min(d + w, 1.0)))
            nodes.extend([d, max(d - w, 0.0), min(d + w, 1.0)])
            for k in range(1, 70):
                off = w * 2.0**-k
                if off < 1e-300:
                    break
                nodes.extend([d - off, d + off])
            for side in (-1.0, 1.0):
                fn = lambda s: float(self._dip_single(d + side * s, d, eps, nu))
                edge = min(w, (1.0 - d) if side > 0 else d)
                if edge > 0 and fn(edge * 1e-300 if edge > 1e-10 else 0.0) > 0 and fn(edge) <= 0:
                    try:
                        nodes.append(d + side * optimize.brentq(fn, 0.0, edge, xtol=1e-300, rtol=4e-16))
                    except ValueError:
                        pass
        supports.sort()
        merged = []
        for a_, b_ in supports:
            if merged and a_ <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b_)
            else:
                merged.append([a_, b_])
        nodes = np.array(nodes + list(bps))
        tables = []
        for a_, b_ in merged:
            pts = np.unique(np.clip(nodes[(nodes >= a_) & (nodes <= b_)], a_, b_))
            pts = np.unique(np.concatenate([[a_, b_], pts]))
            vals = self._gauss(pts[:-1], pts[1:])
            tables.append((pts, np.concatenate([[0.0], np.cumsum(vals)])))
        starts = np.array([m[0] for m in merged])
        ends = np.array([m[1] for m in merged])
        before = np.concatenate([[0.0], np.cumsum([t[1][-1] for t in tables])])
        return starts, ends, tables, before

    def _dip_single(self, t, d, eps, nu):
        ab = self.alpha_beta(np.array([t]))[0]
        return ab[1] - ab[0] - (abs(t - d) / eps) ** nu

    def _dip_integral(self, x: float) -> float:
        starts, ends, tables, before = self._dip_table
        k = int(np.searchsorted(starts, x, side="right")) - 1
        if k < 0:
            return 0.0
        if x >= ends[k]:
            return float(before[k + 1])
        pts, vals = tables[k]
        j = int(np.searchsorted(pts, x, side="right")) - 1
        part = 0.0
        if x > pts[j]:
            part = float(self._gauss(np.array([pts[j]]), np.array([x]))[0])
        return float(before[k] + vals[j] + part)

    def f_inner(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xc = np.clip(x, 0.0, 1.0)
        out = self._beta_integral(xc) - np.array([self._dip_integral(float(t)) for t in xc])
        lo, hi = x < 0, x > 1
        if lo.any():
            out[lo] += x[lo] * self.g_inner(np.array([0.0]))[0]
        if hi.any():
            out[hi] += (x[hi] - 1.0) * self.g_inner(np.array([1.0]))[0]
        return out

    def f(self, x) -> np.ndarray:
        return self.f_inner(x)

    # -- estimator support

    def features(self, center, radius: float, limit: int = 64) -> list[Feature]:
        """Recognised spike centres in the ball, lowest levels first."""
        x = float(np.ravel(center)[0])
        out = []
        for L in range(1, self.spike_levels + 1):
            s = 2**L
            lo = math.ceil(max(x - radius, 0.0) * s)
            hi = math.floor(min(x + radius, 1.0) * s)
            p = lo if lo % 2 else lo + 1
            while p <= hi and len(out) < limit:
                if 0 < p < s:
                    out.append(Feature((p / s,), 0.0))
                p += 2
            if len(out) >= limit:
                break
        return out

    def config(self) -> dict:
        return {
            "kind": self.kind,
            "tilde": self.tilde,
            "cantor_depth": self.curve.cantor.depth,
            "hilbert_depth": self.curve.hilbert_depth,
            "spike_levels": self.spike_levels,
            "visible_spikes": self.n_visible,
        }


# ---------------------------------------------------------------------------
# the Lipschitz construction with a splitting set


class NonsmoothExhaustive(OneDimFunction):
    """``f(x) = ∫_0^x a(t) 1_A(t) + b(t) 1_{A^c}(t) dt`` with ``(a, b)`` the folded
    Hilbert curve of depth ``curve_depth``."""

    kind = "nonsmooth"

    def __init__(self, A: SplittingSet | None = None, curve_depth: int = 6, curve=None):
        self.A = A if A is not None else build_splitting_set(10)
        self.curve_depth = curve_depth
        self._curve = curve

    def alpha_beta(self, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        if self._curve is not None:
            return self._curve(x)
        return triangle_curve(x, self.curve_depth)

    @cached_property
    def _pieces(self):
        n = 4**self.curve_depth
        ts = np.arange(n + 1) / n
        if self._curve is None:
            extra = []
            P = self.alpha_beta(ts)
            H = _raw_hilbert(ts, self.curve_depth)
            dd = H[:, 0] - H[:, 1]
            for i in range(n):
                if dd[i] * dd[i + 1] < 0:
                    extra.append(ts[i] + dd[i] / (dd[i] - dd[i + 1]) * (ts[i + 1] - ts[i]))
            ts = np.unique(np.concatenate([ts, extra]))
        P = self.alpha_beta(ts)
        mA = np.array([self.A.cumulative(t) for t in ts])
        mom = np.array([self.A.cumulative(t, moment=True) for t in ts])
        cum = [0.0]
        for i in range(len(ts) - 1):
            cum.append(cum[-1] + self._piece_integral(ts[i], ts[i + 1], P[i], P[i + 1],
                                                      mA[i + 1] - mA[i], mom[i + 1] - mom[i]))
        return ts, P, mA, mom, np.array(cum)

    @staticmethod
    def _piece_integral(t0, t1, p0, p1, mass, moment):
        w = t1 - t0
        if w <= 0:
            return 0.0
        sa, sb = (p1[0] - p0[0]) / w, (p1[1] - p0[1]) / w
        # ∫_A a = a0 |A| + sa (∫_A t - t0 |A|)
        int_a_A = p0[0] * mass + sa * (moment - t0 * mass)
        int_b_A = p0[1] * mass + sb * (moment - t0 * mass)
        int_b = w * (p0[1] + p1[1]) / 2
        return int_a_A + int_b - int_b_A

    def f(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        ts, P, mA, mom, cum = self._pieces
        out = np.empty_like(x)
        for i, t in enumerate(np.clip(x, 0.0, 1.0)):
            k = min(int(np.searchsorted(ts, t, side="right")) - 1, len(ts) - 2)
            pt = self.alpha_beta(np.array([t]))[0]
            m1, mo1 = self.A.cumulative(t), self.A.cumulative(t, moment=True)
            out[i] = cum[k] + self._piece_integral(ts[k], t, P[k], pt, m1 - mA[k], mo1 - mom[k])
        return out

    def g(self, x) -> np.ndarray:
        """a.e. derivative: ``a`` on the fat Cantor hosts (up to removed gaps), else ``b``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        ab = self.alpha_beta(x)
        inA = np.array([self._in_A(t) for t in x])
        return np.where(inA, ab[:, 0], ab[:, 1])

    def _in_A(self, t: float) -> bool:
        lo, hi = self.A._arrays[0], self.A._arrays[1]
        from .splitting import OUTSIDE, svc_membership

        for i in np.nonzero((lo <= t) & (hi >= t))[0]:
            if svc_membership(self.A.sets[i], t, 60) != OUTSIDE:
                return True
        return False

    def config(self) -> dict:
        return {"kind": self.kind, "tilde": self.tilde, "curve_depth": self.curve_depth,
                "splitting_depth": self.A.depth}


def _raw_hilbert(t, depth):
    from .coding import hilbert_point

    return hilbert_point(t, depth)


# ---------------------------------------------------------------------------


class Tilde(OneDimFunction):
    """``2 f - x``: derivative range [0,1] becomes [-1,1]."""

    tilde = True

    def __init__(self, base: OneDimFunction):
        if base.tilde:
            raise ValueError("tilde transform already applied")
        self.base = base
        self.kind = base.kind

    def alpha_beta(self, x):
        return 2.0 * self.base.alpha_beta(x) - 1.0

    def g(self, x):
        return 2.0 * self.base.g(x) - 1.0

    def f(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return 2.0 * self.base.f(x) - x

    def features(self, center, radius, **kw):
        return self.base.features(center, radius, **kw)

    def config(self) -> dict:
        c = dict(self.base.config())
        c["tilde"] = True
        return c


def tilde(F: OneDimFunction) -> Tilde:
    return Tilde(F)


def build_smooth(cantor_depth: int = 10, hilbert_depth: int = 5, spike_levels: int = 30,
                 gap_cutoff: int = 4096) -> SmoothExhaustive:
    return SmoothExhaustive(build_coding_curve(cantor_depth, hilbert_depth, gap_cutoff), spike_levels)


def build_nonsmooth(A: SplittingSet | None = None, curve_depth: int = 6) -> NonsmoothExhaustive:
    return NonsmoothExhaustive(A, curve_depth)


def g_eval(F: OneDimFunction, x, tol: float = 1e-12):
    if tol <= 0:
        raise ValueError("tol must be positive")
    return F.g(x)


def f_eval(F: OneDimFunction, x, tol: float = 1e-10):
    if tol <= 0:
        raise ValueError("tol must be positive")
    return F.f(x)


def eval_nonsmooth(F: NonsmoothExhaustive, x, tol: float = 1e-10):
    if tol <= 0:
        raise ValueError("tol must be positive")
    if tol < 1e-13:
        raise PrecisionError("tolerance below the measure-oracle resolution")
    return F.f(x)


def predict_subdiff_1d(F: OneDimFunction, x: float) -> tuple[float, float]:
    return F.predict(x)


def spike_index_of(x: float) -> int | None:
    """Index ``n`` with ``d_n == x`` for a dyadic float in (0,1), else None."""
    fx = Fraction(x)
    if not (0 < fx < 1) or fx.denominator & (fx.denominator - 1):
        return None
    return dyadic_index(fx)
