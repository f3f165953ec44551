"""Replicator dynamic: vector field, adaptive integration, invariance checks.

The flow is dx_i/dt = x_i * ((Ax)_i - x.Ax). Faces of the simplex are
exactly invariant: every Runge-Kutta stage of a coordinate carries the
factor x_i, so a zero frequency stays zero to the last bit.
"""

from __future__ import annotations

import logging

import numpy as np

from ._kernels import STATUS_UNDERFLOW, _rd_run
from .equilibria import Equilibrium, enumerate_nash, equilibrium_array
from .errors import NumericalError
from .game import (GameMatrix, LinearForm, SimplexPoint, form_simplex_cut,
                   payoff_vector)
from .trajectory import STATUS_NAMES, Trajectory

log = logging.getLogger(__name__)

_MAX_RECORD = 20_000


def rd_field(game: GameMatrix, x) -> np.ndarray:
    """Replicator velocity at ``x``."""
    x = np.asarray(x.x if isinstance(x, SimplexPoint) else x, dtype=float)
    p = game.payoffs @ x
    return x * (p - x @ p)


def integrate_rd(game: GameMatrix, x0, horizon: float = 500.0, *,
                 rtol: float = 1e-9, atol: float = 1e-12,
                 equilibria: list[Equilibrium] | None = None,
                 conv_radius: float = 1e-6, dwell: int = 50,
                 max_steps: int = 2_000_000,
                 record: bool = True) -> Trajectory:
    """Integrate the replicator flow from ``x0``.

    Embedded 5(4) pair with per-step renormalization. Stops early once
    ``dwell`` consecutive accepted steps stay within ``conv_radius`` of
    one known equilibrium; otherwise runs to ``horizon`` and labels the
    endpoint by proximity. Raises NumericalError on step-size underflow.
    """
    x0 = SimplexPoint(x0.x if isinstance(x0, SimplexPoint) else x0)
    if equilibria is None:
        equilibria = enumerate_nash(game)
    eq_arr = equilibrium_array(equilibria)
    # A start that is exactly stationary (any vertex, thanks to the zero
    # diagonal) or already inside the convergence ball never moves; skip
    # the integrator so callers get a single-row orbit.
    dists = (np.max(np.abs(eq_arr - x0.x), axis=1) if eq_arr.size
             else np.array([np.inf]))
    k = int(np.argmin(dists))
    if dists[k] <= conv_radius or not np.any(rd_field(game, x0)):
        near = dists[k] <= conv_radius
        return Trajectory(dynamic="rd", times=np.zeros(1),
                          states=x0.x[None, :].copy(), status="converged",
                          terminal_index=k if near else -1,
                          terminal_label=equilibria[k].label if near else "")
    cap = _MAX_RECORD if record else 0
    ts = np.empty(max(cap, 1))
    xs = np.empty((max(cap, 1), game.n))
    x = x0.x.copy()
    nrec, status, label, t_end = _rd_run(
        game.payoffs, x, float(horizon), rtol, atol, eq_arr, conv_radius,
        dwell, max_steps, ts, xs, cap, record)
    if status == STATUS_UNDERFLOW:
        raise NumericalError(
            f"step size underflow at t={t_end:.6g} integrating {game.name}")
    if record and nrec == cap:
        log.warning("trajectory recording buffer full (%d rows); tail "
                    "samples are dropped but the endpoint is exact", cap)
    if record:
        times = ts[:nrec].copy()
        states = xs[:nrec].copy()
        if nrec == 0 or times[-1] < t_end:
            times = np.append(times, t_end)
            states = np.vstack([states, x[None, :]])
    else:
        times = np.array([0.0, t_end])
        states = np.vstack([x0.x, x])
    label_str = equilibria[label].label if label >= 0 else ""
    return Trajectory(dynamic="rd", times=times, states=states,
                      status=STATUS_NAMES[status], terminal_index=int(label),
                      terminal_label=label_str)


def check_rd_invariance(game: GameMatrix, form: LinearForm, *,
                        samples: int = 7, horizon: float = 20.0,
                        drift_tol: float = 1e-6,
                        equilibria: list[Equilibrium] | None = None) -> dict:
    """Test whether the indifference line of ``form`` is flow-invariant.

    Analytic criterion: with a zero diagonal, the drift of c.x on the
    line collects only off-pair terms c_k x_k ((Ax)_k - p), so the line
    is invariant exactly when every off-pair coefficient vanishes, i.e.
    every vertex off the pair lies on the line. Empirically, orbits are
    started at interior points of the cut segment and the maximum
    in-plane departure |c.x(t)| / |c - mean(c)| is recorded.

    Returns {"analytic", "max_drift", "field_residual", "consistent"}
    and raises NumericalError when the two verdicts disagree.
    """
    c = form.coeffs
    i, j = form.pair
    off = [k for k in range(game.n) if k not in (i, j)]
    analytic = all(abs(c[k]) <= 1e-12 * game.scale for k in off)

    cut = form_simplex_cut(form)
    if cut is None:
        return {"analytic": analytic, "max_drift": 0.0,
                "field_residual": 0.0, "consistent": True}
    p0, p1 = cut
    pts = [(1.0 - w) * p0 + w * p1 for w in np.linspace(0.12, 0.88, samples)]
    field_resid = max(abs(float(c @ rd_field(game, p))) for p in pts)

    if equilibria is None:
        equilibria = enumerate_nash(game)
    tnorm = form.tangent_norm()
    max_drift = 0.0
    for p in pts:
        traj = integrate_rd(game, p, horizon, equilibria=equilibria,
                            record=True)
        drift = np.max(np.abs(traj.states @ c)) / tnorm
        max_drift = max(max_drift, float(drift))
    consistent = (max_drift < drift_tol) == analytic
    if not consistent:
        raise NumericalError(
            f"invariance disagreement for pair {form.pair} of {game.name}: "
            f"analytic={analytic} but measured drift {max_drift:.3e}")
    return {"analytic": analytic, "max_drift": max_drift,
            "field_residual": field_resid, "consistent": consistent}


def check_ratio_monotonicity(game: GameMatrix, i: int, j: int,
                             traj: Trajectory) -> dict:
    """Verify d/dt log(x_i/x_j) = (Ax)_i - (Ax)_j along a recorded orbit.

    Compares the finite-difference slope of log(x_i/x_j) between recorded
    samples against the payoff difference at midpoints. Returns the
    maximum relative mismatch and whether the sign of the ratio trend
    matches the payoff gap sign at every comparison.
    """
    ts, xs = traj.times, traj.states
    keep = (xs[:, i] > 1e-12) & (xs[:, j] > 1e-12)
    ts, xs = ts[keep], xs[keep]
    if len(ts) < 3:
        raise NumericalError("too few interior samples for ratio check")
    logr = np.log(xs[:, i] / xs[:, j])
    dt = np.diff(ts)
    ok = dt > 1e-12
    slopes = np.diff(logr)[ok] / dt[ok]
    mids = 0.5 * (xs[:-1][ok] + xs[1:][ok])
    gaps = mids @ (game.payoffs[i] - game.payoffs[j])
    scale = np.maximum(np.abs(gaps), 1e-3 * game.scale)
    mismatch = float(np.max(np.abs(slopes - gaps) / scale))
    sign_ok = bool(np.all((slopes * gaps > 0) | (np.abs(gaps) < 1e-8)
                          | (np.abs(slopes - gaps) < 0.1 * scale)))
    return {"max_mismatch": mismatch, "signs_consistent": sign_ok,
            "count": int(len(slopes))}
