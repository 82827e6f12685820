"""Minimal deterministic SVG writer.

Canvas is fixed at 800 x 800.  Layers are ``<g>`` groups with stable ids so
that diffs of two plots are readable.  Colour scheme:

* 1D graphs: f black, g blue, alpha green, beta red.
* 2D atom layout: atom discs grey with a dark outline.
* Estimate overlays: target set orange, hull blue outline, cloud black dots.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

SIZE = 800
MARGIN = 40

COLORS = {
    "f": "#000000",
    "g": "#1f5fbf",
    "alpha": "#2a9d3a",
    "beta": "#c0392b",
    "atom": "#9a9a9a",
    "target": "#e67e22",
    "hull": "#1f5fbf",
    "cloud": "#000000",
}


def _num(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


@dataclass
class Canvas:
    """World box ``[x0, x1] x [y0, y1]`` mapped onto the square canvas."""

    x0: float
    x1: float
    y0: float
    y1: float
    layers: list = field(default_factory=list)

    def __post_init__(self):
        span = max(self.x1 - self.x0, self.y1 - self.y0)
        if span <= 0:
            raise ValueError("empty world box")
        self.scale = (SIZE - 2 * MARGIN) / span

    def map(self, P) -> np.ndarray:
        P = np.atleast_2d(np.asarray(P, dtype=float))
        u = MARGIN + (P[:, 0] - self.x0) * self.scale
        v = SIZE - MARGIN - (P[:, 1] - self.y0) * self.scale
        return np.column_stack([u, v])

    def layer(self, name: str, items: list[str]) -> None:
        self.layers.append(f'<g id="{name}">\n' + "\n".join(items) + "\n</g>")

    def polyline(self, P, color: str, width: float = 1.5, closed: bool = False, fill: str = "none") -> str:
        pts = " ".join(f"{_num(u)},{_num(v)}" for u, v in self.map(P))
        tag = "polygon" if closed else "polyline"
        return f'<{tag} points="{pts}" fill="{fill}" stroke="{color}" stroke-width="{width}"/>'

    def circle(self, c, r: float, color: str, fill: str = "none", min_px: float = 0.0) -> str:
        u, v = self.map(c)[0]
        rr = max(r * self.scale, min_px)
        return f'<circle cx="{_num(u)}" cy="{_num(v)}" r="{_num(rr)}" fill="{fill}" stroke="{color}" stroke-width="1"/>'

    def dots(self, P, color: str, r_px: float = 1.5) -> list[str]:
        return [f'<circle cx="{_num(u)}" cy="{_num(v)}" r="{r_px}" fill="{color}"/>' for u, v in self.map(P)]

    def render(self, title: str, timestamp: bool = True) -> str:
        head = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
                f'viewBox="0 0 {SIZE} {SIZE}">']
        if timestamp:
            head.append(f"<!-- generated {datetime.now(timezone.utc).isoformat(timespec='seconds')} -->")
        head.append(f"<title>{title}</title>")
        head.append(f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff"/>')
        return "\n".join(head + self.layers + ["</svg>"]) + "\n"


def plot_onedim(x, curves: dict, timestamp: bool = True) -> str:
    """Graphs of the named curves over ``x``; ``curves`` maps name to values."""
    cv = Canvas(0.0, 1.0, 0.0, 1.0)
    for name, y in curves.items():
        cv.layer(name, [cv.polyline(np.column_stack([x, y]), COLORS.get(name, "#000000"))])
    return cv.render("f, g, alpha, beta", timestamp)


def plot_atoms(rows: list[dict], clouds: list | None = None, timestamp: bool = True) -> str:
    """Atom discs at ``(d_n, alpha_n)`` with radius ``eps_n``, plus optional gradient clouds."""
    cv = Canvas(0.0, 1.0, 0.0, 1.0)
    cv.layer("atoms", [cv.circle((r["d_n"], r["alpha_n"]), r["eps_n"], "#333333", COLORS["atom"], 0.5)
                       for r in rows])
    for i, P in enumerate(clouds or []):
        P = np.asarray(P, dtype=float)
        # clouds live in the gradient ball; draw them rescaled into the unit square
        cv.layer(f"cloud-{i}", cv.dots(0.5 + 0.5 * P, COLORS["cloud"], 1.0))
    return cv.render("atom layout", timestamp)


def plot_overlay(cloud, hull, target, timestamp: bool = True) -> str:
    """Estimate overlay: target set, convex hull of the cloud and the cloud."""
    cloud = np.asarray(cloud, dtype=float)
    dim = cloud.shape[1]
    if dim == 1:
        cloud = np.column_stack([cloud[:, 0], np.zeros(len(cloud))])
    lo, hi = -1.1, 1.1
    cv = Canvas(lo, hi, lo, hi)
    items = []
    for kind, data in target:
        if kind == "polygon":
            V = np.asarray(data, dtype=float)
            if V.shape[1] == 1:
                items.append(cv.polyline(np.column_stack([V[:, 0], np.zeros(len(V))]), COLORS["target"], 6))
            else:
                items.append(cv.polyline(V, COLORS["target"], 2, closed=True, fill="#fbe3cc"))
        elif kind == "disk":
            c, r = data
            items.append(cv.circle(c, r, COLORS["target"], "#fbe3cc"))
    cv.layer("target", items)
    H = np.asarray(hull, dtype=float)
    if H.shape[1] == 1:
        H = np.column_stack([H[:, 0], np.zeros(len(H))])
    cv.layer("hull", [cv.polyline(H, COLORS["hull"], 2, closed=len(H) > 2)])
    cv.layer("cloud", cv.dots(cloud, COLORS["cloud"]))
    return cv.render("subdifferential estimate", timestamp)
