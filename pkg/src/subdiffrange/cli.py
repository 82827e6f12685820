"""Command-line front end: ``build``, ``estimate``, ``verify``, ``plot``, ``accept``.

Exit codes: 0 success, 1 a sweep or criterion failed, 2 usage or
configuration error, 3 budget error.  Artifacts are JSON, CSV and SVG and
are byte-identical across runs with the same config and seed (SVG up to the
timestamp comment, which ``--no-timestamp`` removes).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import coding, splitting
from .estimator import ScheduleError, compare_to_target, estimate_limiting, DEFAULT_SCHEDULE
from .geometry import BallUnion, ConvexBody, interval, set_to_dict

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3

MAX_CUTOFF = 1 << 12
MAX_DEPTH_1D = 14
MAX_SAMPLES = 1 << 16
MAX_KNOTS = 64


class ConfigError(ValueError):
    pass


class BudgetError(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: int = 42
    out: Path = Path("out")
    sweeps: list | None = None
    timestamp: bool = True

    @property
    def kind(self) -> str | None:
        return self.params.get("kind")


# ---------------------------------------------------------------------------
# io helpers


def _jsonable(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (set, tuple)):
        return list(v)
    raise TypeError(f"not serialisable: {type(v).__name__}")


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True, default=_jsonable) + "\n")


def write_csv(path: Path, rows: list[dict]) -> None:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    path.write_text(buf.getvalue())


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"missing file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc


def _int_param(p: dict, key: str, default: int, lo: int, cap: int) -> int:
    v = p.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(f"{key} must be an integer")
    if v < lo:
        raise ConfigError(f"{key} must be at least {lo}")
    if v > cap:
        raise BudgetError(f"{key}={v} exceeds the cap {cap}")
    return v


# ---------------------------------------------------------------------------
# constructions


def _parse_set(d):
    if isinstance(d, dict) and "polygon" in d:
        return ConvexBody.from_points(d["polygon"])
    if isinstance(d, dict) and "centers" in d:
        return BallUnion(2, tuple(map(tuple, d["centers"])), tuple(d["radii"]))
    raise ConfigError(f"cannot read target set {d!r}")


def build_construction(p: dict):
    """Build the handle described by a build config; returns ``(handle, tables)``."""
    kind = p.get("kind")
    if kind == "onedim":
        from .onedim import build_smooth, spike_eps, spike_nu, tilde

        depth = _int_param(p, "depth", 10, 1, MAX_DEPTH_1D)
        cutoff = _int_param(p, "cutoff", 64, 1, MAX_CUTOFF)
        F = build_smooth(cantor_depth=depth, hilbert_depth=_int_param(p, "hilbert_depth", 5, 1, 12))
        if p.get("tilde", False):
            F = tilde(F)
        rows = []
        for n in range(1, cutoff + 1):
            d = coding.dyadic_enumeration(n)
            a, b = F.predict(float(d))
            rows.append({"n": n, "d_n": str(d), "alpha_n": a, "beta_n": b,
                         "eps_n": spike_eps(n), "nu_n": spike_nu(n)})
        return F, {"atoms": rows}
    if kind == "nonsmooth":
        from .onedim import build_nonsmooth

        depth = _int_param(p, "depth", 8, 1, 12)
        F = build_nonsmooth(splitting.build_splitting_set(depth), _int_param(p, "curve_depth", 6, 1, 10))
        rows = [{"level": L, "beta": b} for L, b in enumerate(F.A.beta)] if hasattr(F, "A") else []
        return F, {"splitting": rows}
    if kind == "lemma":
        from .acceptance import lemma_knots
        from .multidim import Ball, assemble_lemma

        cutoff = _int_param(p, "cutoff", 64, 1, MAX_CUTOFF)
        knots = p.get("knots", "default")
        if knots == "default":
            knots = lemma_knots()
        else:
            if not isinstance(knots, list) or not knots:
                raise ConfigError("knots must be a non-empty list of vertex lists")
            if len(knots) > MAX_KNOTS:
                raise BudgetError(f"at most {MAX_KNOTS} knots")
            knots = [ConvexBody.from_points(v) for v in knots]
        params = p.get("params")
        if params is None:
            params = [Fraction(2 * i - 1, 2 * len(knots)) for i in range(1, len(knots) + 1)]
        else:
            params = [Fraction(str(t)) for t in params]
        tour = coding.body_tour(knots, "geodesic", params=params)
        f = assemble_lemma(Ball((0.0, 0.0), float(p.get("radius", 1.0))), tour, cutoff=cutoff)
        code = []
        for k in range(len(knots)):
            x = f.coded_point(k)
            code.append({"knot": k, "t": str(params[k]), "atom": f.knot_atom(k), "x": x[0], "y": x[1]})
        return f, {"atoms": f.atom_table(), "coding": code}
    if kind == "theorem":
        from .acceptance import theorem_bodies, two_disks
        from .multidim import assemble_theorem

        targets = p.get("targets", "default")
        if targets == "default":
            targets = theorem_bodies() + [two_disks()]
        else:
            if not isinstance(targets, list) or not targets:
                raise ConfigError("targets must be a non-empty list")
            targets = [_parse_set(t) for t in targets]
        f = assemble_theorem(targets, count=_int_param(p, "qstar", 64, 1, MAX_CUTOFF))
        code = []
        for i, K in enumerate(targets):
            x = f.x_target(i)
            code.append({"target": i, "qstar_index": f.assignment[i][0], "x": x[0], "y": x[1],
                         "set": "disks" if isinstance(K, BallUnion) else "polygon"})
        return f, {"coding": code}
    raise ConfigError(f"unknown construction kind {kind!r}")


def _target_of(f, p: dict, meta: dict):
    """Base point and predicted set for an estimate config."""
    kind = meta.get("kind")
    if "point" in p:
        x = np.asarray(p["point"], dtype=float).ravel()
        if len(x) != f.dim:
            raise ConfigError("point dimension does not match the construction")
        if f.dim == 1:
            a, b = f.predict(float(x[0]))
            return x, interval(a, b)
        return x, None
    if kind == "onedim" and "target" in p:
        a, b = map(float, p["target"])
        if not 0 <= a <= b <= 1:
            raise ConfigError("target must satisfy 0 <= a <= b <= 1")
        base = getattr(f, "base", f)
        _, x = base.curve.code_target(a, b)
        if f.tilde:
            a, b = 2 * a - 1, 2 * b - 1
        return np.array([x]), interval(a, b)
    if kind == "lemma" and "knot" in p:
        k = int(p["knot"])
        if not 0 <= k < len(f.tour.knots):
            raise ConfigError("knot index out of range")
        return f.coded_point(k), f.realized_range(f.knot_atom(k))
    if kind == "theorem" and "target_index" in p:
        i = int(p["target_index"])
        if not 0 <= i < len(f.targets):
            raise ConfigError("target index out of range")
        return f.x_target(i), f.targets[i]
    raise ConfigError("estimate needs 'point' or a coded target for the construction kind")


def _svg_target(T):
    if T is None:
        return []
    if isinstance(T, BallUnion):
        return [("disk", (np.asarray(c, dtype=float), float(r))) for c, r in zip(T.centers, T.radii)]
    return [("polygon", T.to_float().array)]


# ---------------------------------------------------------------------------
# commands


def cmd_build(cfg: RunConfig) -> int:
    f, tables = build_construction(cfg.params)
    cfg.out.mkdir(parents=True, exist_ok=True)
    doc = {"command": "build", "seed": cfg.seed, "config": cfg.params, "construction": f.config(), **tables}
    write_json(cfg.out / "construction.json", doc)
    for name, rows in tables.items():
        write_csv(cfg.out / f"{name}.csv", rows)
    for name, rows in tables.items():
        print(f"{name}: {len(rows)} rows")
    return EXIT_OK


def _load_construction(p: dict):
    if "construction" in p:
        doc = _read_json(p["construction"])
        if "config" not in doc:
            raise ConfigError("construction file lacks its build config")
        return build_construction(doc["config"])[0], doc["config"]
    if "kind" in p:
        return build_construction(p)[0], p
    raise ConfigError("config names neither a construction file nor a construction kind")


def cmd_estimate(cfg: RunConfig) -> int:
    p = cfg.params
    f, meta = _load_construction(p)
    x, T = _target_of(f, p, meta)
    samples = p.get("samples", 512)
    if not isinstance(samples, int) or samples < 256:
        raise ConfigError("samples must be an integer >= 256")
    if samples > MAX_SAMPLES:
        raise BudgetError(f"samples exceeds the cap {MAX_SAMPLES}")
    schedule = p.get("schedule", list(DEFAULT_SCHEDULE))
    try:
        est = estimate_limiting(f, x, schedule=schedule, samples=samples, seed=cfg.seed)
    except ScheduleError as exc:
        raise ConfigError(str(exc)) from exc
    report = {"command": "estimate", "seed": cfg.seed, "config": p, "estimate": est.to_dict()}
    if T is not None:
        use = "cloud" if isinstance(T, BallUnion) else "hull"
        report["target"] = set_to_dict(T)
        report["D_H"] = compare_to_target(est, T, use=use)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_json(cfg.out / "estimate.json", report)
    cols = [f"g{i}" for i in range(f.dim)]
    write_csv(cfg.out / "estimate.csv", [dict(zip(cols, map(float, g))) for g in est.cloud.points])
    from .svg import plot_overlay

    (cfg.out / "estimate.svg").write_text(
        plot_overlay(est.cloud.points, est.hull.array, _svg_target(T), cfg.timestamp))
    shown = f", D_H {report['D_H']:.4g}" if "D_H" in report else ""
    print(f"estimate: {len(est.cloud.points)} cloud points, hull {len(est.hull.vertices)} vertices{shown}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    from .acceptance import SWEEPS

    names = cfg.sweeps if cfg.sweeps is not None else cfg.params.get("sweeps", sorted(SWEEPS))
    if not names:
        raise ConfigError("empty sweep list")
    unknown = [n for n in names if n not in SWEEPS]
    if unknown:
        raise ConfigError(f"unknown sweep(s): {', '.join(unknown)}; known: {', '.join(sorted(SWEEPS))}")
    results = [SWEEPS[n](cfg.seed) for n in names]
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_json(cfg.out / "verify.json", {"command": "verify", "seed": cfg.seed,
                                         "sweeps": [r.to_dict() for r in results]})
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_plot(cfg: RunConfig) -> int:
    from .svg import plot_atoms, plot_onedim

    p = cfg.params
    f, meta = _load_construction(p)
    cfg.out.mkdir(parents=True, exist_ok=True)
    if f.dim == 1:
        x = np.linspace(0.0, 1.0, 2001)
        ab = f.alpha_beta(x)
        svg = plot_onedim(x, {"f": f.f(x), "g": f.g(x), "alpha": ab[:, 0], "beta": ab[:, 1]}, cfg.timestamp)
    else:
        clouds = [_read_json(e)["estimate"]["cloud"] for e in p.get("estimates", [])]
        if meta.get("kind") == "lemma":
            rows = f.atom_table()
        else:
            rows = [r for B in f.blocks.values() for r in B.atom_table()]
        svg = plot_atoms(rows, clouds, cfg.timestamp)
    (cfg.out / "plot.svg").write_text(svg)
    print(f"plot: {cfg.out / 'plot.svg'}")
    return EXIT_OK


def cmd_accept(cfg: RunConfig) -> int:
    from .acceptance import CRITERIA, run_criterion

    nums = sorted(CRITERIA)
    if cfg.sweeps is not None:
        try:
            nums = [int(s) for s in cfg.sweeps]
        except ValueError as exc:
            raise ConfigError("accept --sweep takes criterion numbers") from exc
        if not nums or any(n not in CRITERIA for n in nums):
            raise ConfigError("criterion numbers must lie in 1..11")
    results = []
    for n in nums:
        r = run_criterion(n, cfg.seed)
        print(r.line(), flush=True)
        results.append(r)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_json(cfg.out / "accept.json", {"command": "accept", "seed": cfg.seed,
                                         "criteria": [r.to_dict() for r in results]})
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


COMMANDS = {"build": cmd_build, "estimate": cmd_estimate, "verify": cmd_verify,
            "plot": cmd_plot, "accept": cmd_accept}


# ---------------------------------------------------------------------------
# entry point


def _seed(s: str) -> int:
    v = int(s)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="subdiffrange", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--seed", type=_seed, default=42)
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--sweep", help="comma-separated sweep names (verify) or criterion numbers (accept)")
    ap.add_argument("--no-timestamp", action="store_true", help="omit the SVG timestamp comment")
    return ap


def parse_config(argv) -> RunConfig:
    try:
        ns = make_parser().parse_args(argv)
    except SystemExit as exc:
        raise ConfigError("invalid command line") from exc
    params = _read_json(ns.config) if ns.config else {}
    if not isinstance(params, dict):
        raise ConfigError("config must be a JSON object")
    sweeps = None
    if ns.sweep is not None:
        sweeps = [s.strip() for s in ns.sweep.split(",") if s.strip()]
    if ns.command in ("build",) and not params:
        raise ConfigError("build needs --config")
    return RunConfig(ns.command, params, ns.seed, Path(ns.out), sweeps, not ns.no_timestamp)


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetError, coding.BudgetError, splitting.BudgetError) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
