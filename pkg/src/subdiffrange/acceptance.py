"""Property sweeps and the numbered acceptance checks.

Every sweep returns a :class:`SweepResult` whose ``metrics`` are plain JSON
values; :func:`run_criterion` wraps the sweeps into the eleven numbered
checks.  All randomness comes from ``numpy.random.default_rng(seed)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .coding import body_tour, dyadic_enumeration
from .estimator import (
    compare_to_target,
    differentiability_probe,
    estimate_clarke,
    estimate_limiting,
    lipschitz_estimate,
)
from .geometry import (
    BallUnion,
    ConvexBody,
    hausdorff_distance,
    hausdorff_sq_exact,
    interval,
    minkowski_interpolate,
    regular_polygon,
)
from .multidim import (
    Ball,
    assemble_lemma,
    assemble_theorem,
    atom_alpha,
    atoms_disjoint_exact,
    spaceability_blocks,
    spaceable_sum,
)
from .onedim import (
    build_smooth,
    root_average,
    sigma,
    sigma_array,
    truncated_root,
    truncated_root_average,
)
from .splitting import build_splitting_set

LEMMA_SLACK = 1e-9
GRADIENT_SLACK = 1e-9


@dataclass
class SweepResult:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        # wall-clock times stay out of artifacts so that reruns are byte-identical
        return {"name": self.name, "passed": bool(self.passed), "metrics": self.metrics}


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    metrics: dict
    seconds: float
    budget: float | None = None

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"[{tag}] criterion {self.number:2d} {self.title}: {shown} ({self.seconds:.1f}s)"

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": bool(self.passed),
                "metrics": self.metrics, "budget_seconds": self.budget}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, list) and v and isinstance(v[0], float):
        return "[" + ", ".join(f"{x:.3g}" for x in v) + "]"
    return str(v)


def _timed(fn):
    def wrapper(*args, **kw):
        t = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ---------------------------------------------------------------------------
# shared instances


def lemma_knots() -> list[ConvexBody]:
    """Eight polygons inside the unit disk, each containing the origin."""
    out = []
    for i in range(8):
        th = 0.7 * i
        ctr = 0.12 * np.array([math.cos(th), math.sin(th)])
        out.append(regular_polygon(ctr, 0.35 + 0.05 * (i % 3), 3 + i % 4, phase=float(i)))
    return out


@lru_cache(maxsize=2)
def lemma_instance(cutoff: int = 4096):
    knots = lemma_knots()
    params = [Fraction(2 * i - 1, 2 * len(knots)) for i in range(1, len(knots) + 1)]
    tour = body_tour(knots, "geodesic", params=params)
    return assemble_lemma(Ball((0.0, 0.0), 1.0), tour, cutoff=cutoff)


def theorem_bodies() -> list[ConvexBody]:
    """Four convex bodies in the open unit disk avoiding the origin."""
    return [
        regular_polygon((0.5, 0.2), 0.2, 5),
        ConvexBody.from_points([[-0.7, -0.5], [-0.2, -0.6], [-0.4, -0.2]]),
        regular_polygon((-0.3, 0.5), 0.25, 4, phase=0.3),
        regular_polygon((0.25, -0.55), 0.2, 6, phase=0.1),
    ]


def two_disks() -> BallUnion:
    return BallUnion(2, ((0.2, 0.1), (-0.2, 0.1)), (0.3, 0.3))


def lens_gap(U: BallUnion) -> float:
    """Hausdorff distance between two equal overlapping disks and their hull."""
    (c0, c1), (r, r1) = U.centers, U.radii
    if len(U.radii) != 2 or r != r1:
        raise ValueError("lens gap needs two equal disks")
    half = 0.5 * float(np.linalg.norm(np.asarray(c1) - np.asarray(c0)))
    return math.hypot(half, r) - r


@lru_cache(maxsize=1)
def theorem_instance():
    return assemble_theorem(theorem_bodies() + [two_disks()])


@lru_cache(maxsize=1)
def smooth_instance():
    return build_smooth()


# ---------------------------------------------------------------------------
# sweeps


@_timed
def sweep_sigma() -> SweepResult:
    s1 = sigma(1.0)
    seq = [sigma(2.0**-n) for n in range(1, 21)]
    dec = all(b < a for a, b in zip(seq[:-1], seq[1:]))
    err = abs(s1 - (2 - math.sqrt(2)))
    ok = err <= 1e-9 and dec and seq[-1] <= 1e-5
    return SweepResult("sigma", ok, {"sigma1_error": err, "decreasing": dec, "sigma_2^-20": seq[-1]})


def _lemma_instances(rng, samples: int):
    x = rng.uniform(-2.0, 2.0, samples)
    h = rng.uniform(-2.0, 2.0, samples)
    h = np.where(h == 0.0, 1.0, h)
    nu = rng.uniform(0.05, 1.0, samples)
    return x, h, nu


@_timed
def sweep_integral_lemmas(samples: int = 100_000, seed: int = 42) -> SweepResult:
    """Lower bounds for ``|t|**nu`` averages, plain and truncated."""
    rng = np.random.default_rng(seed)
    x, h, nu = _lemma_instances(rng, samples)
    low = 1.0 - sigma_array(nu)
    worst1, bad1 = np.inf, 0
    for xi, hi, ni, li in zip(x.tolist(), h.tolist(), nu.tolist(), low.tolist()):
        gap = root_average(xi, hi, ni) - abs(xi) ** ni * li
        worst1 = min(worst1, gap)
        bad1 += gap < -LEMMA_SLACK

    x, h, nu = _lemma_instances(rng, samples)
    d = rng.uniform(-1.0, 1.0, samples)
    eps = 10.0 ** rng.uniform(-3.0, 0.0, samples)
    m = rng.uniform(0.1, 2.0, samples)
    low = 1.0 - sigma_array(nu)
    worst2, bad2 = np.inf, 0
    for args in zip(x.tolist(), h.tolist(), d.tolist(), eps.tolist(), m.tolist(), nu.tolist(), low.tolist()):
        xi, hi, di, ei, mi, ni, li = args
        gap = truncated_root_average(xi, hi, di, ei, mi, ni) - truncated_root(xi, di, ei, mi, ni) * li
        worst2 = min(worst2, gap)
        bad2 += gap < -LEMMA_SLACK
    return SweepResult("integral-lemmas", bad1 == 0 and bad2 == 0,
                       {"samples": samples, "violations_plain": int(bad1), "violations_truncated": int(bad2),
                        "min_gap_plain": float(worst1), "min_gap_truncated": float(worst2)})


def random_polygon(rng, exact: bool = False) -> ConvexBody:
    k = int(rng.integers(3, 9))
    if exact:
        pts = [(Fraction(int(a), 64), Fraction(int(b), 64)) for a, b in rng.integers(-64, 65, (k, 2))]
        try:
            return ConvexBody.from_points(pts, exact=True)
        except ValueError:
            return random_polygon(rng, exact)
    return ConvexBody.from_points(rng.uniform(-1.0, 1.0, (k, 2)).tolist())


@_timed
def sweep_geodesic(count: int = 1000, seed: int = 42, exact: bool = False) -> SweepResult:
    """``D_H(K0, K_lam) = lam D_H(K0, K1)`` along Minkowski interpolation."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        K0, K1 = random_polygon(rng, exact), random_polygon(rng, exact)
        if exact:
            lam = Fraction(int(rng.integers(0, 33)), 32)
            lhs = hausdorff_sq_exact(K0, minkowski_interpolate(K0, K1, lam))
            err = abs(float(lhs - lam * lam * hausdorff_sq_exact(K0, K1)))
        else:
            lam = float(rng.uniform())
            err = abs(hausdorff_distance(K0, minkowski_interpolate(K0, K1, lam))
                      - lam * hausdorff_distance(K0, K1))
        worst = max(worst, err)
    tol = 0.0 if exact else 1e-9
    return SweepResult("geodesic-identity", worst <= tol, {"count": count, "exact": exact, "max_error": worst})


@_timed
def sweep_support_disjointness(cutoff: int = 1 << 12) -> SweepResult:
    ok = atoms_disjoint_exact(cutoff)
    return SweepResult("support-disjointness", ok, {"cutoff": cutoff, "exact_arithmetic": True})


@_timed
def sweep_splitting(depth: int = 10) -> SweepResult:
    beta = list(build_splitting_set(depth).beta)
    return SweepResult("splitting-margins", min(beta) > 0, {"depth": depth, "min_beta": min(beta)})


@_timed
def sweep_hausdorff_axioms(count: int = 1000, seed: int = 42) -> SweepResult:
    """Identity, symmetry and triangle inequality of ``D_H`` on random polygons."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        A, B, C = (random_polygon(rng) for _ in range(3))
        ab, ba = hausdorff_distance(A, B), hausdorff_distance(B, A)
        bc, ac = hausdorff_distance(B, C), hausdorff_distance(A, C)
        worst = max(worst, hausdorff_distance(A, A), abs(ab - ba), ac - ab - bc)
        if ab <= 0:
            worst = max(worst, 1.0)
    return SweepResult("hausdorff-axioms", worst <= 1e-12, {"count": count, "max_violation": worst})


def fd_points(seed: int, count: int = 1000, ymin: float = 0.3) -> np.ndarray:
    """Points of ``[0,1] x [ymin, 1]``: away from the accumulation line, half in atom 1."""
    rng = np.random.default_rng(seed)
    X = np.column_stack([rng.uniform(0, 1, count), rng.uniform(ymin, 1, count)])
    f = lemma_instance()
    a = f.atom(1)
    half = count // 2
    X[:half] = a.center + a.eps * rng.uniform(-0.7, 0.7, (half, 2))
    return X


@_timed
def sweep_gradient_check(seed: int = 42, count: int = 1000, h: float = 1e-6, rtol: float = 1e-5) -> SweepResult:
    """Analytic gradient against central differences on the lemma instance."""
    f = lemma_instance()
    X = fd_points(seed, count)
    g = f.grad(X)
    fd = np.column_stack([(f.value(X + e * h) - f.value(X - e * h)) / (2 * h) for e in np.eye(2)])
    err = np.linalg.norm(fd - g, axis=1) / np.maximum(1.0, np.linalg.norm(g, axis=1))
    return SweepResult("gradient-check", float(err.max()) <= rtol,
                       {"count": count, "h": h, "max_rel_error": float(err.max()),
                        "median_rel_error": float(np.median(err))})


def accumulation_points(count: int = 20, r: float = 1e-5) -> list[tuple[np.ndarray, np.ndarray]]:
    """Points ``(t, 0)`` at distance exactly ``r`` from an atom centre, with that direction.

    Atoms ``n >= 17`` sit below height ``r``; shifting ``d_n`` sideways by
    ``sqrt(r**2 - alpha_n**2)`` puts the atom on the probe sphere, which is
    the worst case for the quotient.
    """
    out = []
    n = 17
    while len(out) < count:
        a = float(atom_alpha(n))
        d = float(dyadic_enumeration(n))
        if a < r:
            x = np.array([d + math.sqrt(r * r - a * a), 0.0])
            u = np.array([d, a]) - x
            out.append((x, u / np.linalg.norm(u)))
        n += 1
    return out


@_timed
def sweep_accumulation(r: float = 1e-5, count: int = 20, directions: int = 64) -> SweepResult:
    f = lemma_instance()
    th = np.linspace(0.0, 2 * math.pi, directions, endpoint=False)
    U = np.column_stack([np.cos(th), np.sin(th)])
    worst, gmax = 0.0, 0.0
    for x, u in accumulation_points(count, r):
        rep = differentiability_probe(f, x, np.vstack([U, u]), [r])
        worst = max(worst, float(rep.sup_quotient[0]))
        gmax = max(gmax, float(np.abs(rep.gradient).max()))
    return SweepResult("differentiability-probes", worst <= 0.05 and gmax == 0.0,
                       {"points": count, "r": r, "max_quotient": worst, "max_abs_grad": gmax})


SWEEPS = {
    "sigma": lambda seed: sweep_sigma(),
    "integral-lemmas": lambda seed: sweep_integral_lemmas(seed=seed),
    "geodesic-identity": lambda seed: sweep_geodesic(seed=seed),
    "geodesic-identity-exact": lambda seed: sweep_geodesic(count=200, seed=seed, exact=True),
    "support-disjointness": lambda seed: sweep_support_disjointness(),
    "splitting-margins": lambda seed: sweep_splitting(),
    "hausdorff-axioms": lambda seed: sweep_hausdorff_axioms(seed=seed),
    "gradient-check": lambda seed: sweep_gradient_check(seed=seed),
    "differentiability-probes": lambda seed: sweep_accumulation(),
}


# ---------------------------------------------------------------------------
# numbered criteria


def criterion_1(seed: int = 42) -> CriterionResult:
    s = sweep_sigma()
    return CriterionResult(1, "sigma closed form", s.passed and s.seconds < 1.0, s.metrics, s.seconds, 1.0)


def criterion_2(seed: int = 42) -> CriterionResult:
    s = sweep_integral_lemmas(seed=seed)
    return CriterionResult(2, "integral lemmas", s.passed and s.seconds < 30.0, s.metrics, s.seconds, 30.0)


def criterion_3(seed: int = 42) -> CriterionResult:
    s = sweep_geodesic(seed=seed)
    e = sweep_geodesic(count=200, seed=seed, exact=True)
    m = {"max_error": s.metrics["max_error"], "exact_max_error": e.metrics["max_error"]}
    t = s.seconds + e.seconds
    return CriterionResult(3, "geodesic identity", s.passed and e.passed and t < 30.0, m, t, 30.0)


INTERVAL_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


def criterion_4(seed: int = 42) -> CriterionResult:
    t = time.perf_counter()
    F = smooth_instance()
    worst, rows = 0.0, 0
    for i, a in enumerate(INTERVAL_GRID):
        for b in INTERVAL_GRID[i:]:
            _, x = F.curve.code_target(a, b)
            est = estimate_clarke(F, [x], seed=seed)
            worst = max(worst, compare_to_target(est, interval(a, b)))
            rows += 1
    dt = time.perf_counter() - t
    return CriterionResult(4, "1D exhaustiveness", worst <= 0.05 and dt <= 60.0,
                           {"targets": rows, "max_DH": worst}, dt, 60.0)


def criterion_5(seed: int = 42) -> CriterionResult:
    t = time.perf_counter()
    F = smooth_instance()
    X = np.random.default_rng(seed).uniform(0.0, 1.0, 1000)
    h = 1e-6
    cd = (F.f(X + h) - F.f(X - h)) / (2 * h)
    med = float(np.median(np.abs(cd - F.g(X))))
    r = 1e-5
    dev = []
    for n in range(1, 21):
        d = float(dyadic_enumeration(n))
        q = float((F.f(np.array([d + r]))[0] - F.f(np.array([d]))[0]) / r)
        dev.append(abs(q - F.predict(d)[0]))
    dt = time.perf_counter() - t
    return CriterionResult(5, "1D differentiability", med <= 1e-4 and max(dev) <= 0.02,
                           {"median_cd_error": med, "max_spike_deviation": max(dev),
                            "spikes_within_0.02": sum(v <= 0.02 for v in dev)}, dt)


def criterion_6(seed: int = 42) -> CriterionResult:
    t = time.perf_counter()
    f = lemma_instance()
    worst, norm = 0.0, 0.0
    for k in range(len(f.tour.knots)):
        est = estimate_clarke(f, f.coded_point(k), seed=seed)
        worst = max(worst, compare_to_target(est, f.realized_range(f.knot_atom(k))))
        norm = max(norm, est.max_sample_norm)
    dt = time.perf_counter() - t
    ok = worst <= 0.1 and norm <= 1.0 + GRADIENT_SLACK and dt <= 300.0
    return CriterionResult(6, "2D lemma tour", ok, {"knots": len(f.tour.knots), "max_DH": worst,
                                                    "max_gradient_norm": norm}, dt, 300.0)


def criterion_7(seed: int = 42) -> CriterionResult:
    t = time.perf_counter()
    f = theorem_instance()
    ds = []
    for i, K in enumerate(theorem_bodies()):
        est = estimate_limiting(f, f.x_target(i), seed=seed)
        ds.append(compare_to_target(est, K))
    dt = time.perf_counter() - t
    return CriterionResult(7, "theorem instance", max(ds) <= 0.1, {"DH": ds}, dt)


def criterion_8(seed: int = 42) -> CriterionResult:
    t = time.perf_counter()
    f = theorem_instance()
    U = two_disks()
    est = estimate_limiting(f, f.x_target(len(theorem_bodies())), seed=seed)
    dc = compare_to_target(est, U, use="cloud")
    gap = hausdorff_distance(est.cloud, est.hull)
    lg = lens_gap(U)
    dt = time.perf_counter() - t
    return CriterionResult(8, "connected target", dc <= 0.1 and gap >= 0.25 * lg,
                           {"cloud_DH": dc, "nonconvexity": gap, "lens_gap": lg}, dt)


def criterion_9(seed: int = 42) -> CriterionResult:
    s = sweep_accumulation()
    return CriterionResult(9, "accumulation line", s.passed, s.metrics, s.seconds)


def criterion_10(seed: int = 42) -> CriterionResult:
    t = time.perf_counter()
    parts = [sweep_support_disjointness(), sweep_splitting(), sweep_hausdorff_axioms(seed=seed)]
    det = determinism_check(seed)
    m = {p.name: p.passed for p in parts}
    m["min_beta"] = parts[1].metrics["min_beta"]
    m["determinism"] = det
    dt = time.perf_counter() - t
    return CriterionResult(10, "exact invariants", all(p.passed for p in parts) and det, m, dt)


def determinism_check(seed: int = 42) -> bool:
    """Two seeded runs of each artifact-writing command produce identical bytes."""
    import contextlib
    import io
    import tempfile
    from pathlib import Path

    from .cli import main

    runs = [
        ["build", "--config", "{dir}/c1.json"],
        ["build", "--config", "{dir}/c2.json"],
        ["plot", "--config", "{dir}/c1.json", "--no-timestamp"],
    ]
    configs = {
        "c1.json": '{"kind": "onedim", "depth": 8, "cutoff": 64}',
        "c2.json": '{"kind": "lemma", "knots": "default", "cutoff": 64}',
    }
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for name, text in configs.items():
            Path(tmp, name).write_text(text)
        for rep in range(2):
            out = Path(tmp, f"out{rep}")
            for argv in runs:
                with contextlib.redirect_stdout(io.StringIO()):
                    code = main([a.format(dir=tmp) for a in argv] + ["--seed", str(seed), "--out", str(out)])
                if code != 0:
                    return False
            blobs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    return blobs[0] == blobs[1] and len(blobs[0]) > 0


def criterion_11(seed: int = 42) -> CriterionResult:
    t = time.perf_counter()
    blocks = spaceability_blocks(5)
    norms = []
    for k in range(5):
        e = np.zeros(5)
        e[k] = 1.0
        lo, hi = blocks[k].support
        norms.append(lipschitz_estimate(spaceable_sum(e, blocks), ([lo - 1.0], [hi + 1.0]),
                                        pairs=20000, seed=seed))
    x = np.array([0.5, 0.25])
    two = lipschitz_estimate(spaceable_sum(x, blocks), ([-1.0], [blocks[1].support[1] + 1.0]),
                             pairs=20000, seed=seed)
    ok = all(0.99 <= v <= 1.0 for v in norms) and abs(two - np.abs(x).max()) <= 1e-2
    dt = time.perf_counter() - t
    return CriterionResult(11, "spaceability", ok, {"unit_norms": norms, "two_term_norm": two}, dt)


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 12)}


def run_criterion(n: int, seed: int = 42) -> CriterionResult:
    return CRITERIA[n](seed)


def run_all(seed: int = 42) -> list[CriterionResult]:
    return [run_criterion(n, seed) for n in sorted(CRITERIA)]
