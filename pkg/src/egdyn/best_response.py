"""Best-response dynamic: dx/dt in BR(x) - x, solved exactly.

Between regime changes the motion is x(t) = target + exp(-t)(x0 - target)
with the target either the current best-reply vertex or, on an
indifference line that neither side's flow leaves, the stationary mixture
q of the two tied vertices. Payoff gaps along such an arc have the form
c + d exp(-t), so every regime change is a logarithm root and the orbit
is a finite chain of exact arcs; there is no step-size error anywhere.
"""

from __future__ import annotations

import numpy as np

from ._kernels import _brd_run
from .equilibria import Equilibrium, enumerate_nash, equilibrium_array
from .errors import DegenerateGameError, SimplexError
from .game import GameMatrix, SimplexPoint, payoff_vector
from .trajectory import (STATUS_NAMES, Trajectory, events_from_segments,
                         segments_from_arrays)

_TIE_TOL = 1e-10
_CTOL = 1e-14
_MAX_EVENTS = 100_000
_MAX_SEGMENTS = 50_000


def best_response_set(game: GameMatrix, x, tol: float = _TIE_TOL) -> tuple[int, ...]:
    """Indices of maximal payoff against ``x``, ties within tol * scale."""
    p = payoff_vector(game, x)
    cut = float(np.max(p)) - tol * game.scale
    return tuple(int(i) for i in np.flatnonzero(p >= cut))


def brd_segment(game: GameMatrix, x0, b: int, t: float) -> SimplexPoint:
    """State after time ``t`` of pure motion toward vertex ``b``."""
    if not 0 <= b < game.n:
        raise SimplexError(f"strategy index {b} out of range for n={game.n}")
    v = np.asarray(x0.x if isinstance(x0, SimplexPoint) else x0, float)
    e = np.zeros(game.n)
    e[b] = 1.0
    return SimplexPoint(e + np.exp(-float(t)) * (v - e))


def next_event(game: GameMatrix, x, b: int,
               ctol: float = _CTOL) -> tuple[float | None, list[tuple[int, int]]]:
    """First future payoff tie while moving toward vertex ``b``.

    Along the arc the gap to strategy j is -a_jb + d_j exp(-t); a root
    needs the limit value negative and the start value positive. Returns
    (None, []) when b stays strictly best forever, otherwise the earliest
    root time and every pair tying there (several in degenerate games).
    """
    v = np.asarray(x.x if isinstance(x, SimplexPoint) else x, float)
    p = payoff_vector(game, v)
    A = game.payoffs
    guard = ctol * game.scale
    best_t: float | None = None
    hits: list[tuple[int, int]] = []
    for j in range(game.n):
        if j == b:
            continue
        c = -A[j, b]
        d = (p[b] - p[j]) - c
        if c >= -guard or d <= -c:
            continue
        tau = float(np.log(d / -c))
        if best_t is None or tau < best_t - 1e-12 * (1.0 + tau):
            best_t = tau
            hits = [tuple(sorted((b, j)))]
        elif abs(tau - best_t) <= 1e-12 * (1.0 + best_t):
            hits.append(tuple(sorted((b, j))))
    return best_t, hits


class SlidingResult:
    """Outcome of the two-sided test on an indifference line.

    mode is "regime-i", "regime-j" or "sliding"; for sliding, ``weight``
    is the share of e_i in the stationary target q, ``velocity`` the
    inclusion velocity q - x, and ``attracting`` says whether both
    neighbouring regimes push onto the line (a tangent or repelling line
    still carries the unique sliding solution, it just is not a limit of
    nearby orbits).
    """

    __slots__ = ("mode", "pair", "weight", "target", "velocity", "attracting")

    def __init__(self, mode, pair, weight, target, velocity, attracting):
        self.mode = mode
        self.pair = pair
        self.weight = weight
        self.target = target
        self.velocity = velocity
        self.attracting = attracting

    def __repr__(self):
        return (f"SlidingResult(mode={self.mode!r}, pair={self.pair}, "
                f"weight={self.weight}, attracting={self.attracting})")


def sliding_velocity(game: GameMatrix, i: int, j: int, x,
                     ztol: float = _TIE_TOL) -> SlidingResult:
    """Resolve the flow on the indifference line of strategies i and j.

    With a zero diagonal the payoff gap (Ax)_i - (Ax)_j moves at the
    constant rate -a_ji under regime i and a_ij under regime j anywhere
    on the line. Both rates positive hands the state to regime i, both
    negative to regime j; otherwise the line carries the flow and the
    state decays toward q = (a_ij e_i + a_ji e_j) / (a_ij + a_ji), the
    mixture at which the third strategies' growth is what ends the slide.
    """
    if not game.is_normalized:
        raise SimplexError("sliding analysis requires a zero diagonal")
    if i == j:
        raise SimplexError("sliding needs two distinct strategies")
    i, j = (i, j) if i < j else (j, i)
    v = np.asarray(x.x if isinstance(x, SimplexPoint) else x, float)
    A = game.payoffs
    aij, aji = A[i, j], A[j, i]
    guard = ztol * game.scale
    rate_i = -aji
    rate_j = aij
    if rate_i > guard and rate_j > guard:
        e = np.zeros(game.n)
        e[i] = 1.0
        return SlidingResult("regime-i", (i, j), None, e, e - v, False)
    if rate_i < -guard and rate_j < -guard:
        e = np.zeros(game.n)
        e[j] = 1.0
        return SlidingResult("regime-j", (i, j), None, e, e - v, False)
    den = aij + aji
    if den == 0.0:
        raise DegenerateGameError(
            f"strategies {i} and {j} are mutually neutral; the sliding "
            "mixture is undefined")
    lam = aij / den
    if not -1e-12 <= lam <= 1.0 + 1e-12:
        raise DegenerateGameError(
            f"sliding weight {lam:.6g} for pair ({i}, {j}) leaves [0, 1]")
    lam = min(max(lam, 0.0), 1.0)
    q = np.zeros(game.n)
    q[i] = lam
    q[j] = 1.0 - lam
    attracting = aij > guard and aji > guard
    return SlidingResult("sliding", (i, j), float(lam), q, q - v, attracting)


def integrate_brd(game: GameMatrix, x0, horizon: float = 500.0, *,
                  equilibria: list[Equilibrium] | None = None,
                  conv_radius: float = 1e-6, tie_tol: float = _TIE_TOL,
                  max_events: int = _MAX_EVENTS,
                  record: bool = True) -> Trajectory:
    """Follow the best-response flow from ``x0`` as a chain of exact arcs.

    Terminates on entering ``conv_radius`` of a known equilibrium, at the
    horizon, or with status "degenerate" when a tie cannot be resolved
    (three-way ties away from every equilibrium, neutral pairs). The
    returned trajectory carries the exact segment chain and the derived
    event list; ``times``/``states`` hold the segment breakpoints.
    """
    x0 = SimplexPoint(x0.x if isinstance(x0, SimplexPoint) else x0)
    if equilibria is None:
        equilibria = enumerate_nash(game)
    eq_arr = equilibrium_array(equilibria)
    cap = min(max_events + 2, _MAX_SEGMENTS) if record else 0
    n = game.n
    seg_t = np.empty(max(cap, 1))
    seg_x = np.empty((max(cap, 1), n))
    seg_tgt = np.empty((max(cap, 1), n))
    seg_pair = np.empty((max(cap, 1), 2), dtype=np.int32)
    seg_kind = np.empty(max(cap, 1), dtype=np.int32)
    x = x0.x.copy()
    scale = game.scale
    nseg, status, label, t_end = _brd_run(
        game.payoffs, x, float(horizon), conv_radius, eq_arr,
        tie_tol * scale, tie_tol * scale, _CTOL * scale, max_events,
        seg_t, seg_x, seg_tgt, seg_pair, seg_kind, cap, record)
    status_name = STATUS_NAMES[status]
    if record:
        segments = segments_from_arrays(seg_t, seg_x, seg_tgt, seg_pair,
                                        seg_kind, nseg, t_end)
        if segments:
            times = np.array([s.t0 for s in segments] + [t_end])
            states = np.vstack([s.x0 for s in segments] + [x[None, :]])
        elif t_end == 0.0:
            # start already at rest: one row, nothing was traversed
            times = np.zeros(1)
            states = x0.x[None, :].copy()
        else:
            times = np.array([0.0, t_end])
            states = np.vstack([x0.x, x])
        events = events_from_segments(segments, status_name, x, t_end)
    else:
        segments = []
        events = []
        times = np.array([0.0, t_end])
        states = np.vstack([x0.x, x])
    label_str = equilibria[label].label if label >= 0 else ""
    return Trajectory(dynamic="brd", times=times, states=states,
                      status=status_name, terminal_index=int(label),
                      terminal_label=label_str, events=events,
                      segments=segments)