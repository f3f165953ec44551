"""Canonical three-strategy fixtures and the two parametric game families.

Eight qualitative classes, each carried by one integer matrix with zero
diagonal, together with the expected analysis signature: the indifference
forms as integer coefficient vectors, equilibrium counts, stable sets,
invariant pairs, the rotation flag, and the expected outcomes of the two
basin-equivalence harnesses at each stable vertex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import InvalidGameError
from .game import GameMatrix, LinearForm, game_to_json

__all__ = [
    "ClassFixture", "CORPUS_LABELS", "zeeman_fixture", "all_fixtures",
    "golman_page", "a_n_family", "a_n_edge_point",
]


@dataclass(frozen=True)
class ClassFixture:
    """One catalog entry with its expected qualitative signature.

    ``printed_forms`` are the reference indifference forms as integer
    coefficient vectors in pair order (1,2), (1,3), (2,3); computed forms
    must be positive multiples after sign canonicalization. ``t1_expected``
    maps a stable vertex to whether the sector-invariance hypotheses all
    hold there; ``t2_expected`` maps (vertex, partner) to the expected
    (hypotheses, conclusion) pair of the line-splitting harness. The one
    entry with hypotheses True and conclusion False is deliberate: a
    stable equilibrium sitting on the splitting line breaks basin
    equality without violating any of the listed hypotheses.
    """

    label: str
    payoffs: tuple[tuple[int, ...], ...]
    sign_reversal: bool
    printed_forms: tuple[tuple[int, int, int], ...]
    num_equilibria: int
    stable_labels: frozenset[str]
    invariant_pairs: tuple[tuple[int, int], ...]
    cyclic: bool
    t1_expected: Mapping[int, bool] = field(default_factory=dict)
    t2_expected: Mapping[tuple[int, int], tuple[bool, bool]] = field(
        default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "t1_expected",
                           MappingProxyType(dict(self.t1_expected)))
        object.__setattr__(self, "t2_expected",
                           MappingProxyType(dict(self.t2_expected)))

    @property
    def game(self) -> GameMatrix:
        return GameMatrix(np.array(self.payoffs, dtype=float),
                          name=self.label)

    @property
    def expected_forms(self) -> list[LinearForm]:
        pairs = [(0, 1), (0, 2), (1, 2)]
        return [LinearForm(p, np.array(c, dtype=float))
                for p, c in zip(pairs, self.printed_forms)]

    def to_json(self) -> dict:
        return game_to_json(self.game)


_FIXTURES = {
    "5_1": ClassFixture(
        label="5_1",
        payoffs=((0, -3, 1), (-1, 0, -1), (-3, 1, 0)),
        sign_reversal=True,
        printed_forms=((1, -3, 2), (3, -4, 1), (2, -1, -1)),
        num_equilibria=3,
        stable_labels=frozenset({"e1"}),
        invariant_pairs=(),
        cyclic=True,
        t1_expected={0: False},   # sector at e1 leaks across the (1,2) line
    ),
    "6_1": ClassFixture(
        label="6_1",
        payoffs=((0, -1, -1), (1, 0, -3), (-1, -1, 0)),
        sign_reversal=True,
        printed_forms=((1, 1, -2), (1, 0, -1), (2, 1, -3)),
        num_equilibria=5,
        stable_labels=frozenset({"e2", "e3"}),
        invariant_pairs=((0, 2),),
        cyclic=False,
        t1_expected={1: False, 2: True},
        # Splitting along the invariant (1,3) line: every hypothesis holds
        # at e3, yet the basins differ because the other stable vertex e2
        # lies on the line itself.
        t2_expected={(2, 0): (True, False)},
    ),
    "7_1": ClassFixture(
        label="7_1",
        payoffs=((0, 6, -4), (-3, 0, 5), (-1, 3, 0)),
        sign_reversal=False,
        printed_forms=((3, 6, -9), (1, 3, -4), (2, 3, -5)),
        num_equilibria=3,
        stable_labels=frozenset({"e1", "interior"}),
        invariant_pairs=(),
        cyclic=True,
        t1_expected={0: False},   # interior equilibrium is stable
    ),
    "10_1": ClassFixture(
        label="10_1",
        payoffs=((0, -1, -1), (-1, 0, -1), (-1, -1, 0)),
        sign_reversal=True,
        printed_forms=((1, -1, 0), (1, 0, -1), (0, 1, -1)),
        num_equilibria=7,
        stable_labels=frozenset({"e1", "e2", "e3"}),
        invariant_pairs=((0, 1), (0, 2), (1, 2)),
        cyclic=False,
        t1_expected={0: True, 1: True, 2: True},
        t2_expected={(0, 1): (True, True), (0, 2): (True, True),
                     (1, 0): (True, True), (1, 2): (True, True),
                     (2, 0): (True, True), (2, 1): (True, True)},
    ),
    "4_1": ClassFixture(
        label="4_1",
        payoffs=((0, -3, 1), (-3, 0, 1), (-1, -1, 0)),
        sign_reversal=True,
        printed_forms=((1, -1, 0), (1, -2, 1), (2, -1, -1)),
        num_equilibria=3,
        stable_labels=frozenset({"e1", "e2"}),
        invariant_pairs=((0, 1),),
        cyclic=False,
        t1_expected={0: True, 1: True},
        t2_expected={(0, 1): (True, True), (1, 0): (True, True)},
    ),
    "6_2": ClassFixture(
        label="6_2",
        payoffs=((0, -1, -3), (1, 0, -5), (-1, -3, 0)),
        sign_reversal=True,
        printed_forms=((1, 1, -2), (1, 2, -3), (2, 3, -5)),
        num_equilibria=3,
        stable_labels=frozenset({"e2", "e3"}),
        invariant_pairs=(),
        cyclic=False,
        t1_expected={1: True, 2: True},
    ),
    "7_2": ClassFixture(
        label="7_2",
        payoffs=((0, 1, -1), (-1, 0, 1), (-1, 1, 0)),
        sign_reversal=False,
        # The (1,2) reference form follows from the matrix rows; see the
        # fixture self-test, which cross-checks every form against its
        # matrix rather than trusting these constants.
        printed_forms=((1, 1, -2), (1, 0, -1), (0, 1, -1)),
        num_equilibria=3,
        stable_labels=frozenset({"e1", "e23"}),
        invariant_pairs=((0, 2), (1, 2)),
        cyclic=False,
        t1_expected={0: True},
        t2_expected={(0, 2): (True, True)},
    ),
    "9_1": ClassFixture(
        label="9_1",
        payoffs=((0, -1, 3), (-1, 0, 3), (1, 1, 0)),
        sign_reversal=False,
        printed_forms=((1, -1, 0), (1, 2, -3), (2, 1, -3)),
        num_equilibria=3,
        stable_labels=frozenset({"e13", "e23"}),
        invariant_pairs=((0, 1),),
        cyclic=False,
        # No stable pure vertex, so neither harness applies anywhere;
        # basin agreement is still checked at the stable edge equilibria.
    ),
}

CORPUS_LABELS = tuple(_FIXTURES)


def zeeman_fixture(label: str) -> ClassFixture:
    """Catalog entry for one class label such as "6_2"."""
    try:
        return _FIXTURES[label]
    except KeyError:
        raise InvalidGameError(
            f"unknown class label {label!r}; available: "
            + ", ".join(CORPUS_LABELS)) from None


def all_fixtures() -> list[ClassFixture]:
    return list(_FIXTURES.values())


def golman_page(N: float) -> GameMatrix:
    """Three-strategy family with basins that share almost no ground.

    Already in zero-diagonal form. As N grows the first vertex keeps a
    large replicator basin while its best-response basin shrinks toward
    a sliver near e1, so the intersection of the two basins vanishes.
    """
    N = float(N)
    if not N > 1.0:
        raise InvalidGameError(f"family parameter must exceed 1, got {N}")
    A = np.array([
        [0.0, -N - 2.0, -1.0 / N],
        [1.0 - N ** 3, 0.0, 2.0],
        [-1.0, -2.0, 0.0],
    ])
    return GameMatrix(A, name=f"golman-page(N={N:g})")


def a_n_family(n: int) -> GameMatrix:
    """One-parameter deformation of the 7_1 matrix (n = 1 recovers it).

    As n grows the edge equilibrium e_{1,3}(n) collides with e1 and the
    replicator basin of e1 shrinks to measure zero while its
    best-response basin stays bounded away from zero.
    """
    if int(n) != n or n < 1:
        raise InvalidGameError(f"family index must be an integer >= 1, got {n}")
    n = int(n)
    A = np.array([
        [0.0, 6.0, -(3.0 * n + 1.0) / n],
        [-(2.0 * n + 1.0) / n, 0.0, 5.0],
        [-1.0 / n, 3.0, 0.0],
    ])
    return GameMatrix(A, name=f"a-n(n={n})")


def a_n_edge_point(n: int) -> np.ndarray:
    """Closed-form coordinates of the (1,3)-edge equilibrium of a_n_family."""
    if int(n) != n or n < 1:
        raise InvalidGameError(f"family index must be an integer >= 1, got {n}")
    n = int(n)
    return np.array([(3.0 * n + 1.0) / (3.0 * n + 2.0), 0.0,
                     1.0 / (3.0 * n + 2.0)])


def _canonical_ints(coeffs) -> tuple[int, ...]:
    """Integer coefficient vector with the first nonzero entry positive.

    The catalog matrices are integer, so computed row differences are
    exact; a non-integer coefficient here means the caller fed the wrong
    game and is reported as such.
    """
    arr = np.asarray(coeffs, float)
    ints = np.rint(arr).astype(int)
    if np.max(np.abs(arr - ints)) > 0.0:
        raise InvalidGameError(f"form coefficients {arr} are not integers")
    nz = np.nonzero(ints)[0]
    if nz.size and ints[nz[0]] < 0:
        ints = -ints
    return tuple(int(v) for v in ints)


def _proportional_ints(a: tuple[int, ...], b: tuple[int, ...]) -> bool:
    """Exact positive-ratio test via integer cross-multiplication."""
    if len(a) != len(b):
        return False
    if all(v == 0 for v in a) or all(v == 0 for v in b):
        return a == b
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            if a[i] * b[j] != a[j] * b[i]:
                return False
    # same side: first nonzero entries must share a sign
    ia = next(i for i, v in enumerate(a) if v != 0)
    ib = next(i for i, v in enumerate(b) if v != 0)
    return ia == ib and (a[ia] > 0) == (b[ib] > 0)


def run_fixture_checks(fixture: ClassFixture, *, thorough: bool = True) -> list[dict]:
    """Verify one catalog entry against a fresh analysis of its matrix.

    Returns one record per check: name, ok flag, and a short detail
    string for failures. ``thorough`` additionally runs the two
    basin-equivalence harnesses recorded for the class; these sample
    orbits and take a few seconds per fixture.
    """
    from .basins import theorem1_harness, theorem2_harness
    from .equilibria import detect_cyclic, enumerate_nash
    from .game import all_indifference_forms, check_assumption_A
    from .replicator import check_rd_invariance

    game = fixture.game
    checks: list[dict] = []

    def record(name: str, ok: bool, detail: str = ""):
        checks.append({"name": name, "ok": bool(ok), "detail": detail})

    forms = all_indifference_forms(game)
    for form, expected in zip(forms, fixture.expected_forms):
        got = _canonical_ints(form.coeffs)
        want = _canonical_ints(expected.coeffs)
        record(f"form-Z{form.pair[0] + 1}{form.pair[1] + 1}",
               _proportional_ints(got, want),
               f"computed {got}, catalog {want}")

    aa = check_assumption_A(game)
    record("assumption-A", aa.holds, aa.detail)

    eqs = enumerate_nash(game)
    record("equilibrium-count", len(eqs) == fixture.num_equilibria,
           f"found {len(eqs)}, catalog {fixture.num_equilibria}")
    stable = frozenset(eq.label for eq in eqs if eq.stability == "stable")
    record("stable-set", stable == fixture.stable_labels,
           f"found {sorted(stable)}, catalog {sorted(fixture.stable_labels)}")

    invariant = tuple(f.pair for f in forms
                      if check_rd_invariance(game, f, equilibria=eqs)["analytic"])
    record("invariant-pairs", invariant == fixture.invariant_pairs,
           f"found {invariant}, catalog {fixture.invariant_pairs}")

    cyc = detect_cyclic(game, equilibria=eqs)
    record("cyclic-flag", cyc.cyclic == fixture.cyclic,
           f"found {cyc.cyclic} (scaled imag {cyc.scaled_max_imag:.2e}), "
           f"catalog {fixture.cyclic}")

    if thorough:
        for i, want in sorted(fixture.t1_expected.items()):
            rep = theorem1_harness(game, i, samples=200,
                                   invariance_samples=60, equilibria=eqs)
            record(f"sector-route-e{i + 1}", rep["hypotheses"] == want,
                   f"hypotheses {rep['hypotheses']}, catalog {want}")
        for (i, j), (want_h, want_c) in sorted(fixture.t2_expected.items()):
            rep = theorem2_harness(game, i, j, samples=2000,
                                   crossing_checks=100, equilibria=eqs)
            ok = (rep["hypotheses"] == want_h
                  and rep["conclusion_verified"] == want_c)
            record(f"split-route-e{i + 1}-Z{min(i, j) + 1}{max(i, j) + 1}",
                   ok,
                   f"hypotheses {rep['hypotheses']}/{want_h}, agreement "
                   f"{rep['agreement']:.4f}, conclusion "
                   f"{rep['conclusion_verified']}/{want_c}")
    return checks
