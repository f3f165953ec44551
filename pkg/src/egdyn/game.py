"""Payoff algebra and simplex geometry for symmetric population games.

A game is an n x n payoff matrix A; the state is a frequency vector on the
probability simplex. Strategies i and j are indifferent on the set where
(Ax)_i = (Ax)_j, a hyperplane section of the simplex described here by a
:class:`LinearForm`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGameError, SimplexError

# Negative components larger than this are genuine constraint violations,
# anything smaller is integrator round-off and gets clamped to zero.
_NEG_CLAMP = 1e-12
_SUM_TOL = 1e-12


class GameMatrix:
    """Immutable square payoff matrix.

    The matrix is stored as given. Most analysis routines expect a zero
    diagonal; use :func:`normalize_diagonal` to get an equivalent game in
    that form.
    """

    __slots__ = ("payoffs", "name", "diagonal_shift")

    def __init__(self, payoffs, name: str | None = None,
                 diagonal_shift=None):
        arr = np.array(payoffs, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidGameError(f"payoff matrix must be square, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise InvalidGameError("need at least two strategies")
        if not np.all(np.isfinite(arr)):
            raise InvalidGameError("payoff matrix has non-finite entries")
        arr.setflags(write=False)
        self.payoffs = arr
        self.name = name
        self.diagonal_shift = None if diagonal_shift is None else np.asarray(diagonal_shift, float)

    @property
    def n(self) -> int:
        return self.payoffs.shape[0]

    @property
    def is_normalized(self) -> bool:
        return bool(np.all(self.payoffs.diagonal() == 0.0))

    @property
    def scale(self) -> float:
        """Max-norm of the entries, floored at 1 so tolerances stay sane."""
        return max(1.0, float(np.max(np.abs(self.payoffs))))

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"GameMatrix(n={self.n}{tag})"

    def __eq__(self, other):
        if not isinstance(other, GameMatrix):
            return NotImplemented
        return self.payoffs.shape == other.payoffs.shape and np.array_equal(
            self.payoffs, other.payoffs)

    def __hash__(self):
        return hash(self.payoffs.tobytes())


class SimplexPoint:
    """Nonnegative vector summing to one.

    Components in [-1e-12, 0) are treated as round-off and clamped to zero;
    anything more negative, or a sum off by more than 1e-12, is an error.
    """

    __slots__ = ("x",)

    def __init__(self, values):
        v = np.array(values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise SimplexError(f"expected a flat vector of length >= 2, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise SimplexError("non-finite component")
        low = v.min()
        if low < -_NEG_CLAMP:
            raise SimplexError(f"negative component {low:.3e} exceeds the clamp window")
        if low < 0.0:
            v[v < 0.0] = 0.0
        s = v.sum()
        if abs(s - 1.0) > _SUM_TOL:
            raise SimplexError(f"components sum to {s!r}, not 1")
        v /= s
        v.setflags(write=False)
        self.x = v

    @property
    def n(self) -> int:
        return self.x.size

    def __getitem__(self, i):
        return self.x[i]

    def __iter__(self):
        return iter(self.x)

    def __len__(self):
        return self.x.size

    def __repr__(self):
        inner = ", ".join(f"{c:.6g}" for c in self.x)
        return f"SimplexPoint([{inner}])"

    def __eq__(self, other):
        if isinstance(other, SimplexPoint):
            return np.array_equal(self.x, other.x)
        return NotImplemented

    def __hash__(self):
        return hash(self.x.tobytes())


def _as_vector(x) -> np.ndarray:
    return x.x if isinstance(x, SimplexPoint) else np.asarray(x, float)


@dataclass(frozen=True, eq=False)
class LinearForm:
    """Coefficient vector a of the indifference set {x : a . x = 0} for a
    strategy pair (i, j), with a . x = (Ax)_i - (Ax)_j."""

    pair: tuple[int, int]
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, float).copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        i, j = self.pair
        if i >= j:
            raise InvalidGameError(f"pair must be ordered, got {self.pair}")

    def __call__(self, x) -> float:
        return float(np.dot(self.coeffs, _as_vector(x)))

    def canonical(self) -> "LinearForm":
        """Same line with the first nonzero coefficient made positive."""
        c = self.coeffs
        nz = np.nonzero(c)[0]
        if nz.size and c[nz[0]] < 0:
            return LinearForm(self.pair, -c)
        return LinearForm(self.pair, c.copy())

    def tangent_norm(self) -> float:
        """Norm of the coefficient gradient within the simplex plane."""
        c = self.coeffs
        return float(np.linalg.norm(c - c.mean()))

    def __repr__(self):
        i, j = self.pair
        terms = " ".join(f"{c:+g}*x{k + 1}" for k, c in enumerate(self.coeffs))
        return f"LinearForm(Z_{i + 1},{j + 1}: {terms} = 0)"


def normalize_diagonal(game: GameMatrix) -> GameMatrix:
    """Subtract each column's diagonal entry from the column.

    Column shifts cancel in every payoff difference, so the returned game
    induces the same replicator and best-response dynamics while having a
    zero diagonal. Idempotent. The applied shift is recorded on the result.
    """
    A = game.payoffs
    shift = A.diagonal().copy()
    out = A - shift[None, :]
    prior = game.diagonal_shift if game.diagonal_shift is not None else 0.0
    return GameMatrix(out, name=game.name, diagonal_shift=shift + prior)


def payoff_vector(game: GameMatrix, x) -> np.ndarray:
    """Ax, the payoff to each strategy against population state x."""
    v = _as_vector(x)
    if v.size != game.n:
        raise InvalidGameError(f"state has {v.size} components, game has {game.n} strategies")
    return game.payoffs @ v


def average_payoff(game: GameMatrix, x) -> float:
    """x . Ax, the population mean payoff."""
    v = _as_vector(x)
    return float(v @ payoff_vector(game, v))


def indifference_form(game: GameMatrix, i: int, j: int) -> LinearForm:
    """Form whose zero set is the indifference line of strategies i and j.

    Requires a zero diagonal; then the form's i-th and j-th coefficients
    are themselves payoff entries (-a_ji and a_ij), which is what makes
    vertex membership readable off the matrix.
    """
    if i == j:
        raise InvalidGameError("indifference form needs two distinct strategies")
    if not game.is_normalized:
        raise InvalidGameError("normalize the diagonal before building indifference forms")
    lo, hi = (i, j) if i < j else (j, i)
    coeffs = game.payoffs[lo] - game.payoffs[hi]
    return LinearForm((lo, hi), coeffs)


def all_indifference_forms(game: GameMatrix) -> list[LinearForm]:
    n = game.n
    return [indifference_form(game, i, j) for i in range(n) for j in range(i + 1, n)]


def form_simplex_cut(form: LinearForm, tol: float = 1e-12):
    """Endpoints of {c . x = 0} cut with the 3-simplex, or None.

    Intersects the line with each edge of the triangle; a vertex the line
    passes through appears once after deduplication. Returns an (x0, x1)
    pair of arrays when the cut is a proper segment, None when the line
    misses the simplex or only grazes a single point.
    """
    c = np.asarray(form.coeffs, float)
    if c.size != 3:
        raise SimplexError("cut geometry is only defined for three strategies")
    hits: list[np.ndarray] = []
    for a in range(3):
        for b in range(a + 1, 3):
            ca, cb = c[a], c[b]
            den = ca - cb
            if abs(den) <= tol * max(1.0, abs(ca), abs(cb)):
                if abs(ca) <= tol and abs(cb) <= tol:
                    for v in (a, b):
                        e = np.zeros(3)
                        e[v] = 1.0
                        hits.append(e)
                continue
            lam = ca / den
            if -tol <= lam <= 1.0 + tol:
                x = np.zeros(3)
                x[a] = min(max(1.0 - lam, 0.0), 1.0)
                x[b] = 1.0 - x[a]
                hits.append(x)
    unique: list[np.ndarray] = []
    for h in hits:
        if not any(np.linalg.norm(h - u) < 1e-9 for u in unique):
            unique.append(h)
    if len(unique) < 2:
        return None
    best = (0, 1)
    if len(unique) > 2:
        dmax = -1.0
        for a in range(len(unique)):
            for b in range(a + 1, len(unique)):
                d = float(np.linalg.norm(unique[a] - unique[b]))
                if d > dmax:
                    dmax, best = d, (a, b)
    return unique[best[0]], unique[best[1]]


@dataclass(frozen=True)
class AssumptionReport:
    holds: bool
    violating_pairs: tuple
    detail: str = ""


def check_assumption_A(game: GameMatrix, tol: float = 1e-9) -> AssumptionReport:
    """Check that no two distinct indifference sets coincide.

    Each coefficient vector is normalized to unit length; two forms are
    proportional when the residual of projecting one onto the other falls
    below ``tol``. An identically zero form (total indifference between a
    pair) counts as a violation on its own.
    """
    forms = all_indifference_forms(game)
    scale = game.scale
    bad = []
    units = {}
    for f in forms:
        norm = float(np.linalg.norm(f.coeffs))
        if norm <= 1e-14 * scale:
            bad.append((f.pair, f.pair))
        else:
            units[f.pair] = f.coeffs / norm
    pairs = sorted(units)
    for a in range(len(pairs)):
        for b in range(a + 1, len(pairs)):
            u, w = units[pairs[a]], units[pairs[b]]
            resid = float(np.linalg.norm(u - np.dot(u, w) * w))
            if resid < tol:
                bad.append((pairs[a], pairs[b]))
    if bad:
        return AssumptionReport(False, tuple(bad), "coincident or empty indifference sets")
    return AssumptionReport(True, ())


def vertex_on_indifference(game: GameMatrix, i: int, j: int, k: int,
                           tol: float = 1e-12) -> bool:
    """Whether vertex e_k lies on the indifference set of (i, j).

    Computed two ways, by evaluating the form at e_k and by reading its
    k-th coefficient, which must agree; a mismatch means the form was
    built from a non-normalized matrix.
    """
    form = indifference_form(game, i, j)
    t = tol * game.scale
    by_eval = abs(form.coeffs @ np.eye(game.n)[k]) <= t
    by_coeff = abs(form.coeffs[k]) <= t
    if by_eval != by_coeff:
        raise InvalidGameError("vertex evaluation disagrees with the coefficient test")
    return by_coeff


def sample_simplex_array(n: int, count: int, seed: int) -> np.ndarray:
    """(count, n) array of i.i.d. uniform simplex points.

    Uses normalized exponential spacings, which are exactly uniform in any
    dimension, and a fresh generator per call so the result depends only
    on the seed.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    e = rng.standard_exponential((count, n))
    return e / e.sum(axis=1)[:, None]


def sample_simplex(n: int, count: int, seed: int) -> list[SimplexPoint]:
    return [SimplexPoint(row) for row in sample_simplex_array(n, count, seed)]


def simplex_distance_to_form(form: LinearForm, pts: np.ndarray) -> np.ndarray:
    """Euclidean distance, within the simplex plane, from points to a line."""
    g = form.tangent_norm()
    if g <= 0.0:
        return np.full(pts.shape[0] if pts.ndim == 2 else 1, np.inf)
    vals = pts @ form.coeffs
    return np.abs(vals) / g


def load_game(source) -> GameMatrix:
    """Build a diagonal-normalized game from JSON.

    ``source`` may be a path, a JSON string, or an already parsed dict with
    keys name, n and payoffs. The diagonal shift applied during
    normalization is recorded on the returned matrix.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = None
        try:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        except (OSError, TypeError):
            text = source
        try:
            doc = json.loads(text)
        except (json.JSONDecodeError, TypeError) as exc:
            raise InvalidGameError(f"unreadable game description: {exc}") from exc
    if not isinstance(doc, dict) or "payoffs" not in doc:
        raise InvalidGameError("game JSON needs a 'payoffs' field")
    game = GameMatrix(doc["payoffs"], name=doc.get("name"))
    if "n" in doc and int(doc["n"]) != game.n:
        raise InvalidGameError(f"declared n={doc['n']} but payoffs are {game.n}x{game.n}")
    return normalize_diagonal(game)


def game_to_json(game: GameMatrix) -> dict:
    return {
        "name": game.name or "unnamed",
        "n": game.n,
        "payoffs": [[float(v) for v in row] for row in game.payoffs],
    }
