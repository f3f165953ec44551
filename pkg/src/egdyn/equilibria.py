"""Nash equilibria and their local behavior under the replicator field.

Equilibria are found by support enumeration and classified through the
Jacobian of the replicator field restricted to the simplex tangent space,
so the spurious eigenvalue transverse to the simplex never appears.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .game import (GameMatrix, SimplexPoint, payoff_vector,
                   indifference_form, vertex_on_indifference)

log = logging.getLogger(__name__)

# Width of the band around zero, relative to matrix scale, inside which a
# discriminant is treated as exactly zero (a real double eigenvalue).
# Defective interior equilibria otherwise pick up spurious imaginary parts
# of order sqrt(round-off).
_DISC_CLAMP = 1e-9


@dataclass
class Equilibrium:
    """A rest point common to the replicator and best-response dynamics."""

    point: SimplexPoint
    support: tuple[int, ...]
    eigenvalues: np.ndarray
    stability: str          # stable | unstable | nonhyperbolic
    kind: str               # pure | edge | interior
    payoff: float           # common payoff on the support

    @property
    def label(self) -> str:
        if self.kind == "interior":
            return "interior"
        return "e" + "".join(str(i + 1) for i in self.support)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "point": [float(v) for v in self.point.x],
            "support": [int(i) for i in self.support],
            "eigenvalues": [[float(ev.real), float(ev.imag)] for ev in self.eigenvalues],
            "stability": self.stability,
            "kind": self.kind,
        }


def rd_jacobian(game: GameMatrix, x) -> np.ndarray:
    """Jacobian of the replicator field in tangent coordinates.

    The field v_i = x_i((Ax)_i - x.Ax) is differentiated in full, then
    expressed in the basis {e_i - e_n} of the tangent space, i.e. the last
    coordinate is eliminated via x_n = 1 - sum of the others. Returns an
    (n-1) x (n-1) matrix.
    """
    A = game.payoffs
    v = x.x if isinstance(x, SimplexPoint) else np.asarray(x, float)
    n = v.size
    p = A @ v
    phi = float(v @ p)
    pt = A.T @ v
    full = v[:, None] * (A - p[None, :] - pt[None, :])
    full[np.diag_indices(n)] += p - phi
    return full[: n - 1, : n - 1] - full[: n - 1, n - 1][:, None]


def tangent_eigenvalues(game: GameMatrix, x) -> np.ndarray:
    """Eigenvalues of the tangent-space Jacobian at x.

    For three strategies the 2x2 case is solved by the quadratic formula
    with the discriminant clamped to zero when it is negligible relative
    to the squared matrix scale; numpy's general solver turns exact double
    roots into conjugate pairs with stray imaginary parts around 1e-8,
    which would read as false rotation.
    """
    J = rd_jacobian(game, x)
    m = J.shape[0]
    if m == 1:
        return np.array([complex(J[0, 0])])
    if m == 2:
        tr = J[0, 0] + J[1, 1]
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        disc = tr * tr - 4.0 * det
        s2 = game.scale ** 2
        if abs(disc) <= _DISC_CLAMP * s2:
            disc = 0.0
        if disc >= 0.0:
            r = np.sqrt(disc)
            return np.array([complex((tr + r) / 2.0), complex((tr - r) / 2.0)])
        r = np.sqrt(-disc)
        return np.array([complex(tr / 2.0, r / 2.0), complex(tr / 2.0, -r / 2.0)])
    return np.linalg.eigvals(J)


def classify_stability(eigenvalues, scale: float = 1.0, tol: float = 1e-7) -> str:
    """Hyperbolic classification of a rest point from its eigenvalues.

    ``tol`` applies to real parts after dividing by ``scale`` (the matrix
    max-norm), so the verdict does not change under payoff rescaling.
    Accepts an :class:`Equilibrium` or a sequence of complex numbers.
    """
    if isinstance(eigenvalues, Equilibrium):
        eigenvalues = eigenvalues.eigenvalues
    re = np.asarray([complex(ev).real for ev in eigenvalues]) / max(scale, 1e-300)
    if np.all(re < -tol):
        return "stable"
    if np.any(re > tol):
        return "unstable"
    return "nonhyperbolic"


def _solve_support(A: np.ndarray, support: tuple[int, ...]):
    """Solve for equal payoffs on a support; returns (x, payoff) or None."""
    k = len(support)
    n = A.shape[0]
    M = np.zeros((k + 1, k + 1))
    rhs = np.zeros(k + 1)
    for r, i in enumerate(support):
        M[r, :k] = A[i, support]
        M[r, k] = -1.0
    M[k, :k] = 1.0
    rhs[k] = 1.0
    try:
        sol = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(sol)):
        return None
    x = np.zeros(n)
    x[list(support)] = sol[:k]
    return x, float(sol[k])


def enumerate_nash(game: GameMatrix, tol: float = 1e-9) -> list[Equilibrium]:
    """All Nash equilibria, by exhaustive support enumeration.

    For each nonempty support the linear system "payoffs equal on the
    support, frequencies sum to one" is solved; candidates survive if they
    are nonnegative on the support (within ``tol``) and no outside strategy
    earns more than the common payoff (within ``tol``). Singular supports
    are skipped with a log message. Duplicates within 1e-8 collapse to the
    first hit.
    """
    A = game.payoffs
    n = game.n
    scale = game.scale
    found: list[Equilibrium] = []
    points: list[np.ndarray] = []
    for k in range(1, n + 1):
        for support in itertools.combinations(range(n), k):
            res = _solve_support(A, support)
            if res is None:
                log.info("singular support system %s; skipped (degenerate game?)", support)
                continue
            x, pay = res
            if x[list(support)].min() < -tol:
                continue
            off = [j for j in range(n) if j not in support]
            p = A @ np.clip(x, 0.0, None)
            if off and np.max(p[off]) > pay + tol * scale:
                continue
            x = np.clip(x, 0.0, None)
            x /= x.sum()
            if any(np.max(np.abs(x - q)) < 1e-8 for q in points):
                continue
            points.append(x)
            eigs = tangent_eigenvalues(game, x)
            kind = "pure" if k == 1 else ("interior" if k == n else "edge")
            found.append(Equilibrium(
                point=SimplexPoint(x),
                support=support,
                eigenvalues=eigs,
                stability=classify_stability(eigs, scale=scale),
                kind=kind,
                payoff=pay,
            ))
    return found


def equilibrium_array(equilibria: list[Equilibrium]) -> np.ndarray:
    """Stack equilibrium points into an (m, n) array for the kernels."""
    if not equilibria:
        return np.zeros((0, 0))
    return np.array([eq.point.x for eq in equilibria], dtype=float)


@dataclass
class CyclicReport:
    cyclic: bool
    interior_eigenvalues: np.ndarray | None
    sufficient_condition_met: bool
    interior: Equilibrium | None
    scaled_max_imag: float


def detect_cyclic(game: GameMatrix, tol: float = 1e-6,
                  equilibria: list[Equilibrium] | None = None) -> CyclicReport:
    """Rotation test at the interior equilibrium.

    ``cyclic`` means the interior Jacobian carries a conjugate eigenvalue
    pair with |Im| above ``tol`` after dividing by the matrix max-norm.
    ``sufficient_condition_met`` is the vertex condition that forces all
    eigenvalues real: n - 2 indifference sets each containing every vertex
    off their own pair. The two flags can never both be true; that
    combination raises, since it would contradict the invariance argument
    it is built on.
    """
    eqs = equilibria if equilibria is not None else enumerate_nash(game)
    interior = next((e for e in eqs if e.kind == "interior"), None)
    n = game.n
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            if all(vertex_on_indifference(game, i, j, k)
                   for k in range(n) if k not in (i, j)):
                count += 1
    sufficient = count >= n - 2
    if interior is None:
        return CyclicReport(False, None, sufficient, None, 0.0)
    scaled = float(np.max(np.abs(interior.eigenvalues.imag))) / game.scale
    cyclic = scaled > tol
    if cyclic and sufficient:
        raise NumericalError(
            "complex interior eigenvalues despite the all-vertices invariance "
            "condition; eigenvalue computation is inconsistent")
    return CyclicReport(cyclic, interior.eigenvalues, sufficient, interior, scaled)


def brd_boundary_singularities(game: GameMatrix) -> list[SimplexPoint]:
    """Points where an indifference set meets its own two-strategy edge.

    On the edge {x_k = 0 for k outside (i, j)} the form reduces to
    -a_ji x_i + a_ij x_j, so an interior-edge zero exists exactly when
    a_ij and a_ji share a sign; the point is then a rest state of the
    best-response flow whether or not it is Nash.
    """
    A = game.payoffs
    n = game.n
    out: list[SimplexPoint] = []
    for i in range(n):
        for j in range(i + 1, n):
            aij, aji = A[i, j], A[j, i]
            den = aij + aji
            if aij == 0.0 and aji == 0.0:
                log.info("pair (%d,%d) indifferent along its whole edge; skipped", i, j)
                continue
            if aij * aji <= 0.0 or den == 0.0:
                continue
            x = np.zeros(n)
            x[i] = aij / den
            x[j] = aji / den
            out.append(SimplexPoint(x))
    return out


def nearest_equilibrium(equilibria: list[Equilibrium], x,
                        radius: float) -> Equilibrium | None:
    v = x.x if isinstance(x, SimplexPoint) else np.asarray(x, float)
    best, bestd = None, radius
    for eq in equilibria:
        d = float(np.linalg.norm(eq.point.x - v))
        if d <= bestd:
            best, bestd = eq, d
    return best
