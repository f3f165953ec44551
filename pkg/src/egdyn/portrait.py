"""Deterministic SVG phase portraits on the barycentric triangle.

All coordinates are emitted with four decimals and no timestamps, so a
given game, seed, and flag set always produces byte-identical output.
Line styling follows the figure convention: full stroke for the (1,2)
indifference line, dashed for (1,3), dotted for (2,3). A line (or part
of one) is drawn gray when it is inert for the dynamic shown: for the
smooth flow, when the line is not invariant; for the piecewise flow,
when the tied pair is not among the best replies there, so crossing it
changes nothing.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .best_response import best_response_set, integrate_brd, sliding_velocity
from .equilibria import Equilibrium, enumerate_nash
from .errors import DegenerateGameError, SimplexError
from .game import (GameMatrix, all_indifference_forms, form_simplex_cut,
                   sample_simplex_array)
from .replicator import check_rd_invariance, integrate_rd, rd_field

_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])
_DASH = {(0, 1): None, (0, 2): "7,5", (1, 2): "2,4"}
_SIZE = 420.0
_MARGIN = 34.0
_TRAJ_COLOR = {"rd": "#1f3f77", "brd": "#8c2d1f"}


def to_plane(x) -> np.ndarray:
    """Barycentric projection: e1 -> (0,0), e2 -> (1,0), e3 -> (1/2, v3/2)."""
    arr = np.asarray(x, float)
    return arr @ _CORNERS


def _fmt(v: float) -> str:
    s = f"{v:.4f}"
    return "0.0000" if s == "-0.0000" else s


class _Panel:
    """Collects SVG elements for one dynamic, in panel-local coordinates."""

    def __init__(self, x_off: float):
        self.x_off = x_off
        self.parts: list[str] = []

    def pt(self, plane_xy) -> tuple[float, float]:
        u, v = float(plane_xy[0]), float(plane_xy[1])
        px = self.x_off + _MARGIN + u * _SIZE
        py = _MARGIN + (math.sqrt(3.0) / 2.0 - v) * _SIZE
        return px, py

    def line(self, a, b, stroke, width, dash=None, opacity=None):
        x1, y1 = self.pt(a)
        x2, y2 = self.pt(b)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        if opacity is not None:
            extra += f' stroke-opacity="{_fmt(opacity)}"'
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" '
            f'y2="{_fmt(y2)}" stroke="{stroke}" stroke-width="{_fmt(width)}"'
            f'{extra} />')

    def polyline(self, plane_pts, stroke, width):
        coords = " ".join(f"{_fmt(px)},{_fmt(py)}"
                          for px, py in (self.pt(p) for p in plane_pts))
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{stroke}" '
            f'stroke-width="{_fmt(width)}" />')

    def circle(self, center, r, fill, stroke="black"):
        cx, cy = self.pt(center)
        self.parts.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" '
            f'fill="{fill}" stroke="{stroke}" stroke-width="1.2" />')

    def arrow(self, at, direction, color):
        """Small arrowhead at a plane point, oriented along direction."""
        d = np.asarray(direction, float)
        norm = float(np.hypot(d[0], d[1]))
        if norm < 1e-12:
            return
        d = d / norm
        left = np.array([-d[0] * 0.6 + d[1] * 0.45, -d[1] * 0.6 - d[0] * 0.45])
        right = np.array([-d[0] * 0.6 - d[1] * 0.45, -d[1] * 0.6 + d[0] * 0.45])
        size = 11.0 / _SIZE
        tip = np.asarray(at, float) + d * size * 0.5
        a = tip + left * size
        b = tip + right * size
        pts = " ".join(f"{_fmt(px)},{_fmt(py)}"
                       for px, py in (self.pt(p) for p in (a, tip, b)))
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.6" />')

    def label(self, plane_xy, text, dx=0.0, dy=0.0):
        px, py = self.pt(plane_xy)
        self.parts.append(
            f'<text x="{_fmt(px + dx)}" y="{_fmt(py + dy)}" '
            f'font-family="Helvetica" font-size="13" '
            f'text-anchor="middle">{text}</text>')


def _line_subsegments(form, others, tol=1e-9):
    """Split the simplex cut of a form at its crossings with other forms.

    Returns a list of (p0, p1) sub-segments; on each one the best-reply
    pattern and drift sign are constant.
    """
    cut = form_simplex_cut(form)
    if cut is None:
        return []
    q0, q1 = cut
    ts = [0.0, 1.0]
    for g in others:
        v0, v1 = g(q0), g(q1)
        if abs(v1 - v0) < tol:
            continue
        u = -v0 / (v1 - v0)
        if tol < u < 1.0 - tol:
            ts.append(u)
    ts.sort()
    segs = []
    for a, b in zip(ts[:-1], ts[1:]):
        if b - a > tol:
            segs.append(((1 - a) * q0 + a * q1, (1 - b) * q0 + b * q1))
    return segs


def _draw_indifference_rd(panel, game, forms):
    for f in forms:
        inv = check_rd_invariance(game, f)
        active = inv["analytic"]
        color = "black" if active else "#9a9a9a"
        dash = _DASH[f.pair]
        cut = form_simplex_cut(f)
        if cut is None:
            continue
        panel.line(to_plane(cut[0]), to_plane(cut[1]), color, 1.6, dash)
        if active:
            for w in (0.3, 0.7):
                m = (1 - w) * cut[0] + w * cut[1]
                v = rd_field(game, m)
                panel.arrow(to_plane(m), to_plane(m + v) - to_plane(m), color)


def _draw_indifference_brd(panel, game, forms):
    for f in forms:
        i, j = f.pair
        dash = _DASH[f.pair]
        others = [g for g in forms if g.pair != f.pair]
        for p0, p1 in _line_subsegments(f, others):
            mid = 0.5 * (p0 + p1)
            br = best_response_set(game, mid)
            relevant = i in br and j in br
            color = "black" if relevant else "#9a9a9a"
            panel.line(to_plane(p0), to_plane(p1), color, 1.6, dash)
            if relevant:
                try:
                    sv = sliding_velocity(game, i, j, mid)
                except DegenerateGameError:
                    continue
                if sv.mode == "sliding":
                    d = to_plane(sv.target) - to_plane(mid)
                    panel.arrow(to_plane(mid), d, color)


def _draw_equilibria(panel, equilibria):
    for eq in equilibria:
        fill = {"stable": "black", "unstable": "white"}.get(eq.stability,
                                                            "#9a9a9a")
        panel.circle(to_plane(eq.point.x), 4.4, fill)


def _draw_trajectories(panel, game, dynamic, starts, horizon, equilibria):
    color = _TRAJ_COLOR[dynamic]
    for x0 in starts:
        if dynamic == "rd":
            traj = integrate_rd(game, x0, horizon, equilibria=equilibria)
            pts = traj.states
            if len(pts) > 400:
                idx = np.linspace(0, len(pts) - 1, 400).astype(int)
                pts = pts[idx]
        else:
            traj = integrate_brd(game, x0, horizon, equilibria=equilibria)
            pts = traj.states
        panel.polyline([to_plane(p) for p in pts], color, 1.1)
        panel.circle(to_plane(x0), 1.8, color, stroke=color)


def render_portrait(game: GameMatrix, path: str | Path, *,
                    dynamic: str = "both", samples: int = 6,
                    seed: int = 2024, horizon: float = 60.0,
                    equilibria: list[Equilibrium] | None = None) -> Path:
    """Write an SVG phase portrait; one panel per requested dynamic."""
    if game.n != 3:
        raise SimplexError(
            f"portraits are drawn on the triangle; game has {game.n} "
            f"strategies")
    if dynamic not in ("rd", "brd", "both"):
        raise SimplexError(f"unknown dynamic {dynamic!r}")
    dynamics = ("rd", "brd") if dynamic == "both" else (dynamic,)
    if equilibria is None:
        equilibria = enumerate_nash(game)
    forms = all_indifference_forms(game)
    starts = sample_simplex_array(3, samples, seed) if samples else []

    panel_w = _SIZE + 2 * _MARGIN
    height = _SIZE * math.sqrt(3.0) / 2.0 + 2 * _MARGIN + 18.0
    width = panel_w * len(dynamics)
    chunks = [f'<svg xmlns="http://www.w3.org/2000/svg" '
              f'width="{_fmt(width)}" height="{_fmt(height)}" '
              f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
              '<rect width="100%" height="100%" fill="white" />']
    for k, dyn in enumerate(dynamics):
        panel = _Panel(k * panel_w)
        tri = [to_plane(np.eye(3)[v]) for v in (0, 1, 2)]
        for a, b in ((0, 1), (1, 2), (2, 0)):
            panel.line(tri[a], tri[b], "black", 2.0)
        if dyn == "rd":
            _draw_indifference_rd(panel, game, forms)
        else:
            _draw_indifference_brd(panel, game, forms)
        _draw_trajectories(panel, game, dyn, starts, horizon, equilibria)
        _draw_equilibria(panel, equilibria)
        panel.label(tri[0], "e1", dx=-12.0, dy=14.0)
        panel.label(tri[1], "e2", dx=12.0, dy=14.0)
        panel.label(tri[2], "e3", dy=-10.0)
        name = game.name or ""
        panel.label(np.array([0.5, -0.06 * math.sqrt(3.0)]),
                    f"{name} {dyn}".strip(), dy=8.0)
        chunks.extend(panel.parts)
    chunks.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(chunks) + "\n")
    return path
