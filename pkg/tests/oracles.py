"""Independent reference integrators used only by the test suite.

These deliberately avoid the package's closed-form event solver: motion
toward a fixed target is advanced by the one-step RK4 map, regime
changes are localized by bisection on payoff gaps, and sliding weights
come from a fresh linear solve. Agreement between this machinery and
the package is evidence, not tautology.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

_BR_TOL = 1e-11


def rk4_decay(tau: float) -> float:
    """One RK4 step of y' = -y over tau, as a multiplier on y(0)."""
    return 1.0 - tau + tau**2 / 2.0 - tau**3 / 6.0 + tau**4 / 24.0


def _payoffs(A, x):
    return A @ x


def _leaders(A, x, tol):
    p = _payoffs(A, x)
    return tuple(int(i) for i in np.flatnonzero(p >= p.max() - tol)), p


def _sliding_target(A, i, j):
    """Convex combination of e_i, e_j that keeps p_i - p_j frozen.

    Solves c . (mu e_i + (1-mu) e_j) = 0 for the row-difference c; the
    motion target is then constant along the sliding arc.
    """
    c = A[i] - A[j]
    den = c[i] - c[j]
    if den == 0.0:
        raise ZeroDivisionError("sliding weight undefined")
    mu = -c[j] / den
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"sliding weight {mu} outside [0, 1]")
    q = np.zeros(A.shape[0])
    q[i] = mu
    q[j] = 1.0 - mu
    return q


def _regime_after_tie(A, x, i, j):
    """Resolve a two-way payoff tie: pure regime index, or None = slide."""
    ci = A[i] - A[j]
    e_i = np.zeros(len(x)); e_i[i] = 1.0
    e_j = np.zeros(len(x)); e_j[j] = 1.0
    d_i = float(ci @ (e_i - x))    # gap velocity if we head to e_i
    d_j = float(-ci @ (e_j - x))   # gap velocity (j's view) heading to e_j
    if d_i > 0.0:
        return i
    if d_j > 0.0:
        return j
    return None


def brd_fixed_step(A: np.ndarray, x0: np.ndarray, horizon: float,
                   h: float = 5e-3, br_tol: float = _BR_TOL):
    """Fixed-step reference trajectory of the piecewise-linear dynamic.

    Returns (times, states) on the uniform grid k*h covering [0, horizon].
    Each grid step advances x -> target + (x - target) * rk4_decay(step);
    a leadership change inside a step is located by ~60 bisections of the
    within-step map before the regime is re-resolved.
    """
    A = np.asarray(A, float)
    n = len(x0)
    scale = max(1.0, np.abs(A).max())
    tol = br_tol * scale
    grid = np.arange(0.0, horizon + 0.5 * h, h)
    out = np.empty((len(grid), n))
    x = np.asarray(x0, float).copy()
    out[0] = x

    leaders, p = _leaders(A, x, tol)
    sliding = None
    if len(leaders) == 1:
        target = np.zeros(n); target[leaders[0]] = 1.0
    elif len(leaders) == 2:
        i, j = leaders
        r = _regime_after_tie(A, x, i, j)
        if r is None:
            sliding = (i, j)
            target = _sliding_target(A, i, j)
        else:
            target = np.zeros(n); target[r] = 1.0
    else:
        raise RuntimeError("ambiguous start (three-way tie)")

    def step_from(xs, tau):
        return target + (xs - target) * rk4_decay(tau)

    def gap_ok(xs):
        """Current regime still legitimate at state xs?"""
        p = _payoffs(A, xs)
        if sliding is None:
            b = int(np.argmax(target))
            rivals = [k for k in range(n) if k != b]
            return p[b] >= max(p[k] for k in rivals) - 1e-15 * scale
        i, j = sliding
        rivals = [k for k in range(n) if k not in (i, j)]
        tied = max(p[i], p[j])
        return all(p[k] <= tied + 1e-15 * scale for k in rivals)

    for gi in range(1, len(grid)):
        remaining = h
        while remaining > 1e-16:
            xn = step_from(x, remaining)
            if gap_ok(xn):
                x = xn
                break
            # bisect the first regime violation inside this substep
            lo, hi = 0.0, remaining
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if gap_ok(step_from(x, mid)):
                    lo = mid
                else:
                    hi = mid
            x = step_from(x, lo)
            remaining -= lo
            # identify the tie and re-resolve the regime
            p = _payoffs(A, x)
            order = np.argsort(p)[::-1]
            i, j = int(order[0]), int(order[1])
            r = _regime_after_tie(A, x, i, j)
            if r is None:
                sliding = (i, j)
                target = _sliding_target(A, i, j)
            else:
                sliding = None
                target = np.zeros(n); target[r] = 1.0
        out[gi] = x
    return grid, out


def rd_reference(A: np.ndarray, x0: np.ndarray, t_eval,
                 rtol: float = 1e-12, atol: float = 1e-14) -> np.ndarray:
    """High-accuracy smooth-dynamic states at the requested times."""
    A = np.asarray(A, float)

    def rhs(t, x):
        p = A @ x
        return x * (p - x @ p)

    t_eval = np.asarray(t_eval, float)
    sol = solve_ivp(rhs, (0.0, float(t_eval[-1])), np.asarray(x0, float),
                    t_eval=t_eval, rtol=rtol, atol=atol, method="DOP853")
    if not sol.success:
        raise RuntimeError(f"reference integration failed: {sol.message}")
    return sol.y.T


def numeric_tangent_jacobian(A: np.ndarray, x: np.ndarray,
                             eps: float = 1e-7) -> np.ndarray:
    """Central-difference Jacobian of the smooth field at x, full space."""
    A = np.asarray(A, float)
    n = len(x)

    def f(v):
        p = A @ v
        return v * (p - v @ p)

    J = np.zeros((n, n))
    for k in range(n):
        d = np.zeros(n); d[k] = eps
        J[:, k] = (f(x + d) - f(x - d)) / (2 * eps)
    return J
