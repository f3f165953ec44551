"""Basin estimation, sector regions, and the two basin-equivalence harnesses.

Labels are integer indices into the equilibrium list used for the run;
-1 marks a sample that converged to no known rest point within the
horizon and -2 a nonconvergent sample whose orbit revisits its own tail
(suspected cycling). Fractions count all samples; agreement statistics
skip samples within an exclusion band around any indifference line,
since those sets have measure zero but finite-precision labels near
them are arbitrary.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._kernels import _brd_batch, _rd_batch
from .best_response import best_response_set, integrate_brd
from .equilibria import Equilibrium, enumerate_nash, equilibrium_array
from .errors import DegenerateGameError, NumericalError, SimplexError
from .game import (GameMatrix, LinearForm, all_indifference_forms,
                   check_assumption_A, form_simplex_cut, indifference_form,
                   sample_simplex_array)
from .replicator import check_rd_invariance, integrate_rd, rd_field
from .trajectory import Trajectory

log = logging.getLogger(__name__)

_CHUNK = 512
LABEL_NONCONV = -1
LABEL_CYCLE = -2

_Z95 = 1.959963984540054  # two-sided 95% normal quantile


def _thread_count() -> int:
    env = os.environ.get("EGD_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _gamename(game: GameMatrix) -> str:
    return game.name or f"game-{game.n}x{game.n}"


def _confidence(p: float, m: int) -> float:
    return _Z95 * float(np.sqrt(p * (1.0 - p) / m)) if m else 0.0


@dataclass
class BasinMap:
    """Sampled basin labels for one game under both dynamics."""

    game: str
    points: np.ndarray
    labels_rd: np.ndarray
    labels_brd: np.ndarray
    equilibria: list[Equilibrium]
    excluded: np.ndarray
    seed: int
    horizon: float
    warnings: list[str] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.points)

    def _fraction_table(self, labels: np.ndarray) -> dict[str, tuple[float, float]]:
        m = self.count
        out = {}
        for k, eq in enumerate(self.equilibria):
            p = float(np.count_nonzero(labels == k)) / m
            out[eq.label] = (p, _confidence(p, m))
        p = float(np.count_nonzero(labels < 0)) / m
        out["nonconvergent"] = (p, _confidence(p, m))
        return out

    def fractions(self, dynamic: str) -> dict[str, tuple[float, float]]:
        """Per-equilibrium basin fractions with 95% confidence radii."""
        if dynamic == "rd":
            return self._fraction_table(self.labels_rd)
        if dynamic == "brd":
            return self._fraction_table(self.labels_brd)
        raise SimplexError(f"unknown dynamic {dynamic!r}")

    def fraction(self, dynamic: str, eq_label: str) -> float:
        return self.fractions(dynamic)[eq_label][0]

    def intersection(self, eq_label: str) -> tuple[float, float]:
        """Fraction of samples converging to ``eq_label`` under both."""
        k = self._index_of(eq_label)
        both = (self.labels_rd == k) & (self.labels_brd == k)
        p = float(np.count_nonzero(both)) / self.count
        return p, _confidence(p, self.count)

    def agreement(self, eq_label: str) -> float:
        """Share of non-excluded samples whose membership in the basin of
        ``eq_label`` is the same under both dynamics."""
        k = self._index_of(eq_label)
        keep = ~self.excluded
        if not np.any(keep):
            return 1.0
        same = (self.labels_rd[keep] == k) == (self.labels_brd[keep] == k)
        return float(np.mean(same))

    def _index_of(self, eq_label: str) -> int:
        for k, eq in enumerate(self.equilibria):
            if eq.label == eq_label:
                return k
        raise SimplexError(f"no equilibrium labelled {eq_label!r}")

    def label_name(self, code: int) -> str:
        if code >= 0:
            return self.equilibria[code].label
        return "cycle" if code == LABEL_CYCLE else "none"

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        n = self.points.shape[1]
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{i + 1}" for i in range(n)]
                            + ["label_rd", "label_brd"])
            for row, lr, lb in zip(self.points, self.labels_rd, self.labels_brd):
                writer.writerow([repr(float(v)) for v in row]
                                + [self.label_name(int(lr)), self.label_name(int(lb))])
        return path

    def summary(self) -> dict:
        frac_rd = self.fractions("rd")
        frac_brd = self.fractions("brd")
        stable = [eq.label for eq in self.equilibria if eq.stability == "stable"]
        return {
            "game": self.game,
            "samples": self.count,
            "seed": self.seed,
            "horizon": self.horizon,
            "excluded": int(np.count_nonzero(self.excluded)),
            "fractions_rd": {k: {"value": v, "ci95": c} for k, (v, c) in frac_rd.items()},
            "fractions_brd": {k: {"value": v, "ci95": c} for k, (v, c) in frac_brd.items()},
            "intersection": {eq.label: {"value": self.intersection(eq.label)[0],
                                        "ci95": self.intersection(eq.label)[1]}
                             for eq in self.equilibria},
            "agreement": {lbl: self.agreement(lbl) for lbl in stable},
            "warnings": list(self.warnings),
        }

    def to_json(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        return path


def _revisits_tail(states: np.ndarray, ball: float = 5e-3) -> bool:
    """True when the orbit tail leaves and re-enters a ball around its
    endpoint at least twice — the cheap signature of cycling."""
    if len(states) < 8:
        return False
    tail = states[int(len(states) * 0.5):]
    d = np.linalg.norm(tail - tail[-1], axis=1)
    inside = d < ball
    flips = int(np.count_nonzero(inside[1:] != inside[:-1]))
    return flips >= 3


def estimate_basins(game: GameMatrix, samples: int, seed: int, *,
                    horizon: float = 500.0, exclusion: float = 1e-4,
                    max_nonconv: float = 0.05,
                    equilibria: list[Equilibrium] | None = None,
                    conv_radius: float = 1e-6,
                    threads: int | None = None,
                    cycle_checks: int = 32) -> BasinMap:
    """Label a uniform sample of the simplex under both dynamics.

    Deterministic for a given seed regardless of thread count: all points
    are drawn up front from one generator and the work is split into
    fixed-size chunks whose results land in disjoint slices.
    """
    if samples < 1:
        raise SimplexError("need at least one sample")
    if equilibria is None:
        equilibria = enumerate_nash(game)
    eq_arr = equilibrium_array(equilibria)
    n = game.n
    pts = sample_simplex_array(n, samples, seed)
    labels_rd = np.full(samples, LABEL_NONCONV, dtype=np.int64)
    labels_brd = np.full(samples, LABEL_NONCONV, dtype=np.int64)
    status_rd = np.zeros(samples, dtype=np.int64)
    status_brd = np.zeros(samples, dtype=np.int64)

    A = game.payoffs
    scale = game.scale
    tie = 1e-10 * scale
    ctol = 1e-14 * scale

    def work(a: int, b: int) -> None:
        _rd_batch(A, pts[a:b], float(horizon), 1e-9, 1e-12, eq_arr,
                  conv_radius, 50, 2_000_000, labels_rd[a:b], status_rd[a:b])
        _brd_batch(A, pts[a:b], float(horizon), conv_radius, eq_arr,
                   tie, tie, ctol, 100_000, labels_brd[a:b], status_brd[a:b])

    bounds = [(a, min(a + _CHUNK, samples)) for a in range(0, samples, _CHUNK)]
    nthreads = threads if threads is not None else _thread_count()
    if nthreads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            list(pool.map(lambda ab: work(*ab), bounds))
    else:
        for a, b in bounds:
            work(a, b)

    # Distinguish cycling from mere slowness for a bounded number of the
    # nonconvergent samples; informational only, fractions are unchanged.
    for labels, integrate in ((labels_rd, integrate_rd),
                              (labels_brd, integrate_brd)):
        nonconv = np.flatnonzero(labels == LABEL_NONCONV)[:cycle_checks]
        for idx in nonconv:
            try:
                traj = integrate(game, pts[idx], horizon,
                                 equilibria=equilibria, record=True)
            except NumericalError:
                continue
            if traj.status != "converged" and _revisits_tail(traj.states):
                labels[idx] = LABEL_CYCLE

    forms = all_indifference_forms(game)
    excluded = np.zeros(samples, dtype=bool)
    for f in forms:
        tn = f.tangent_norm()
        if tn == 0.0:
            continue
        excluded |= np.abs(pts @ f.coeffs) / tn < exclusion

    bmap = BasinMap(game=_gamename(game), points=pts, labels_rd=labels_rd,
                    labels_brd=labels_brd, equilibria=equilibria,
                    excluded=excluded, seed=seed, horizon=float(horizon))
    for labels, name in ((labels_rd, "RD"), (labels_brd, "BRD")):
        frac = float(np.count_nonzero(labels < 0)) / samples
        if frac > max_nonconv:
            msg = (f"{name}: {frac:.1%} of samples did not converge within "
                   f"horizon {horizon:g}")
            bmap.warnings.append(msg)
            log.warning("%s (%s)", msg, _gamename(game))
    return bmap


def intersection_measure(bmap: BasinMap, eq_label: str) -> tuple[float, float]:
    """Fraction of samples attracted to ``eq_label`` under both dynamics,
    with 95% confidence radius."""
    return bmap.intersection(eq_label)


class SectorRegion:
    """Open cell of the indifference-line arrangement anchored at a vertex.

    Encoded as one sign per form: +1/-1 constrain the side, 0 leaves the
    form free (its line passes through both the vertex and the interior
    equilibrium, so it cannot separate a neighbourhood of the vertex).
    """

    __slots__ = ("vertex", "forms", "signs", "ref_point")

    def __init__(self, vertex: int, forms: list[LinearForm],
                 signs: np.ndarray, ref_point: np.ndarray):
        self.vertex = vertex
        self.forms = list(forms)
        self.signs = np.asarray(signs, dtype=int)
        self.ref_point = np.asarray(ref_point, dtype=float)

    def membership(self, pts, slack: float = 0.0) -> np.ndarray:
        """Boolean mask of points strictly inside (sign-matching) the cell.

        ``slack`` > 0 admits points up to that far on the wrong side of a
        boundary, measured in form value; used to tolerate integrator
        round-off when tracking orbits that hug a boundary.
        """
        x = np.atleast_2d(np.asarray(pts, dtype=float))
        ok = np.ones(len(x), dtype=bool)
        for f, s in zip(self.forms, self.signs):
            if s == 0:
                continue
            ok &= s * (x @ f.coeffs) > -slack
        return ok if np.asarray(pts).ndim > 1 else ok[0]

    def __repr__(self):
        sig = ", ".join(f"Z{f.pair[0] + 1}{f.pair[1] + 1}:"
                        + {1: "+", -1: "-", 0: "free"}[int(s)]
                        for f, s in zip(self.forms, self.signs))
        return f"SectorRegion(e{self.vertex + 1}; {sig})"


def construct_sector(game: GameMatrix, i: int) -> SectorRegion:
    """Arrangement cell whose closure contains the vertex ``e_i``.

    The cell is identified by the signs all forms take at the probe
    point (1-eps) e_i + eps barycenter. A form vanishing on the whole
    probe segment (it passes through both the vertex and the barycenter)
    can never separate points near e_i and is recorded as free. A probe
    landing on any other form triggers halving of eps; persistent hits
    mean the arrangement is degenerate at the vertex.
    """
    n = game.n
    if not 0 <= i < n:
        raise SimplexError(f"vertex index {i} out of range for n={n}")
    if n != 3:
        log.warning("sector construction beyond three strategies is "
                    "untested against the geometric definition")
    report = check_assumption_A(game)
    if not report.holds:
        raise DegenerateGameError(
            f"indifference structure of {_gamename(game)} is degenerate: "
            f"{report.detail}")
    forms = all_indifference_forms(game)
    e = np.zeros(n)
    e[i] = 1.0
    bary = np.full(n, 1.0 / n)
    tol = 1e-12 * game.scale

    signs = np.zeros(len(forms), dtype=int)
    free = [abs(f(e)) <= tol and abs(f(bary)) <= tol for f in forms]
    eps = 1e-3
    for _ in range(11):
        ref = (1.0 - eps) * e + eps * bary
        vals = np.array([f(ref) for f in forms])
        if all(free[k] or abs(vals[k]) >= 1e-12 for k in range(len(forms))):
            for k in range(len(forms)):
                signs[k] = 0 if free[k] else (1 if vals[k] > 0 else -1)
            return SectorRegion(i, forms, signs, ref)
        eps *= 0.5
    raise DegenerateGameError(
        f"cannot place a probe near e{i + 1} off the indifference lines "
        f"of {_gamename(game)}")


def _boundary_pieces(region: SectorRegion,
                     tol: float = 1e-9) -> list[tuple[int, np.ndarray]]:
    """Midpoints of the sub-segments where each constraining form
    actually bounds the region; (form index, midpoint) pairs."""
    pieces = []
    for k, (f, s) in enumerate(zip(region.forms, region.signs)):
        if s == 0:
            continue
        cut = form_simplex_cut(f)
        if cut is None:
            continue
        p0, p1 = cut
        lo, hi = 0.0, 1.0
        for g, sg in zip(region.forms, region.signs):
            if sg == 0 or g is f:
                continue
            v0, v1 = sg * g(p0), sg * g(p1)
            # Need sg * g >= -tol on the piece; g is linear along the cut.
            if v0 < -tol and v1 < -tol:
                lo, hi = 1.0, 0.0
                break
            if abs(v1 - v0) > tol:
                root = (0.0 - v0) / (v1 - v0)
                if v0 < v1:
                    lo = max(lo, root)
                else:
                    hi = min(hi, root)
        if hi - lo < 1e-6:
            continue
        mid = 0.5 * (lo + hi)
        pieces.append((k, (1.0 - mid) * p0 + mid * p1))
    return pieces


def check_sector_invariance(game: GameMatrix, region: SectorRegion,
                            samples: int = 100, *, seed: int = 20117,
                            horizon: float = 200.0,
                            equilibria: list[Equilibrium] | None = None) -> dict:
    """Two independent invariance tests for a sector under the smooth flow.

    ``invariant_rd``: none of ``samples`` orbits started inside the
    region leaves it (up to round-off slack) before its run ends.
    ``boundary_br_check``: on each actual boundary piece, the best reply
    just inside is the anchor vertex and the best reply just outside is a
    vertex that does not pull across the boundary — the side-by-side
    test for flow entering the region.
    """
    if equilibria is None:
        equilibria = enumerate_nash(game)
    n = game.n
    rng = np.random.default_rng(seed)
    pts = []
    attempts = 0
    while len(pts) < samples and attempts < 1000 * samples:
        cand = rng.standard_exponential(n)
        cand /= cand.sum()
        attempts += 1
        if region.membership(cand):
            pts.append(cand)
    if len(pts) < samples:
        raise NumericalError(
            f"sector at e{region.vertex + 1} of {_gamename(game)} is too thin to "
            f"sample ({len(pts)}/{samples} hits)")

    slack = 1e-9 * game.scale
    invariant = True
    escape = None
    for p in pts:
        traj = integrate_rd(game, p, horizon, equilibria=equilibria,
                            record=True)
        inside = region.membership(traj.states, slack=slack)
        if not bool(np.all(inside)):
            invariant = False
            escape = traj.states[int(np.argmin(inside))]
            break

    # Flux test on each actual boundary piece. On the piece the pair
    # ties, so the form's drift along the smooth field reduces to
    # c_r x_r (p_r - p_tied) with r the off-pair strategy; its sign is
    # constant on the piece because pieces end where another form
    # vanishes. Which side r's payoff falls on is read off the best
    # replies at the midpoint; drift toward the region (or an invariant
    # line, drift 0) means the piece cannot be crossed outward.
    br_ok = True
    br_detail = []
    delta = 1e-6
    drift_tol = 1e-12 * game.scale
    for k, mid in _boundary_pieces(region):
        f = region.forms[k]
        s = int(region.signs[k])
        drift = f(rd_field(game, mid))
        normal = f.coeffs - f.coeffs.mean()
        normal = normal / np.linalg.norm(normal)
        m_in = np.clip(mid + delta * s * normal, 0.0, 1.0)
        m_out = np.clip(mid - delta * s * normal, 0.0, 1.0)
        br_in = best_response_set(game, m_in / m_in.sum())
        br_out = best_response_set(game, m_out / m_out.sum())
        ok = s * drift >= -drift_tol
        br_ok &= ok
        br_detail.append({"pair": f.pair, "midpoint": mid.copy(),
                          "drift": s * drift, "br_inside": br_in,
                          "br_outside": br_out, "ok": ok})

    return {"invariant_rd": invariant, "boundary_br_check": br_ok,
            "escape_point": escape, "boundaries": br_detail,
            "samples": len(pts)}


def _count_line_crossings(traj: Trajectory, form: LinearForm,
                          tol: float) -> int:
    """Exact sign changes of ``form`` along a piecewise-exact orbit.

    Within one arc the form value is target-value + decaying exponential,
    hence monotone; a crossing is a strict sign change between an arc's
    endpoints with both values clear of the sliding band.
    """
    crossings = 0
    vals = traj.states @ form.coeffs
    for a, b in zip(vals[:-1], vals[1:]):
        if a > tol and b < -tol:
            crossings += 1
        elif a < -tol and b > tol:
            crossings += 1
    return crossings


def theorem1_harness(game: GameMatrix, i: int, samples: int = 1000, *,
                     seed: int = 90217, horizon: float = 500.0,
                     invariance_samples: int = 100,
                     equilibria: list[Equilibrium] | None = None) -> dict:
    """Check the sector-invariance route to overlapping basins at ``e_i``.

    Hypotheses: the vertex is a locally stable pure equilibrium, no two
    indifference lines coincide, an interior equilibrium exists and is
    unstable (H1), and the sector at the vertex is invariant under the
    smooth flow (H2). Conclusion check: every sampled sector point
    converges to the vertex under both dynamics.
    """
    if equilibria is None:
        equilibria = enumerate_nash(game)
    n = game.n
    vertex_eq = next((eq for eq in equilibria
                      if eq.kind == "pure" and eq.support == (i,)), None)
    report: dict = {
        "game": _gamename(game), "vertex": i,
        "applicable": vertex_eq is not None and vertex_eq.stability == "stable",
    }
    if not report["applicable"]:
        report.update(assumption_A=None, H1=None, H2=None,
                      hypotheses=False, conclusion_verified=None)
        return report

    report["assumption_A"] = check_assumption_A(game).holds
    interior = next((eq for eq in equilibria if eq.kind == "interior"), None)
    report["H1"] = interior is not None and interior.stability == "unstable"

    sector = construct_sector(game, i)
    inv = check_sector_invariance(game, sector, invariance_samples,
                                  seed=seed + 1, horizon=horizon,
                                  equilibria=equilibria)
    # A weak leak is easy for a finite orbit sample to miss (the flow
    # may exit only through a thin neighbourhood of one piece), so the
    # invariance hypothesis also requires the per-piece flux signs.
    report["H2"] = bool(inv["invariant_rd"] and inv["boundary_br_check"])
    report["invariant_rd_sampled"] = bool(inv["invariant_rd"])
    report["boundary_br_check"] = bool(inv["boundary_br_check"])
    report["sector"] = sector
    report["hypotheses"] = bool(report["assumption_A"] and report["H1"]
                                and report["H2"])

    rng = np.random.default_rng(seed)
    pts = []
    attempts = 0
    while len(pts) < samples and attempts < 1000 * samples:
        cand = rng.standard_exponential(n)
        cand /= cand.sum()
        attempts += 1
        if sector.membership(cand):
            pts.append(cand)
    if len(pts) < samples:
        raise NumericalError(
            f"sector at e{i + 1} of {_gamename(game)} is too thin to sample")
    k_self = equilibria.index(vertex_eq)
    ok_rd = ok_brd = 0
    for p in pts:
        t_rd = integrate_rd(game, p, horizon, equilibria=equilibria,
                            record=False)
        t_brd = integrate_brd(game, p, horizon, equilibria=equilibria,
                              record=False)
        ok_rd += int(t_rd.terminal_index == k_self)
        ok_brd += int(t_brd.terminal_index == k_self)
    report["sector_samples"] = len(pts)
    report["converged_rd"] = ok_rd
    report["converged_brd"] = ok_brd
    report["conclusion_verified"] = (ok_rd == len(pts) == ok_brd)
    return report


def theorem2_harness(game: GameMatrix, i: int, j: int,
                     samples: int = 2000, *, seed: int = 41813,
                     horizon: float = 500.0, agreement_tol: float = 5e-3,
                     crossing_checks: int = 200,
                     basin_map: BasinMap | None = None,
                     equilibria: list[Equilibrium] | None = None) -> dict:
    """Check the line-splitting route to equal basins at ``e_i``.

    Hypotheses: the vertex is a locally stable pure equilibrium off the
    (i, j) indifference line, no two lines coincide, and both halves of
    the simplex cut by the line are invariant — for the smooth flow by
    the vertex condition plus measured drift, for the piecewise flow by
    counting exact line crossings over sampled orbits. Conclusion check:
    basin-membership agreement for the vertex over non-excluded samples.

    ``other_stable_on_line`` flags a stable equilibrium lying on the
    splitting line. The hypotheses say nothing about it, but such a
    point attracts from both sides and breaks basin equality, so the
    flag is reported alongside the checks.
    """
    if equilibria is None:
        equilibria = enumerate_nash(game)
    vertex_eq = next((eq for eq in equilibria
                      if eq.kind == "pure" and eq.support == (i,)), None)
    report: dict = {
        "game": _gamename(game), "vertex": i, "pair": tuple(sorted((i, j))),
        "applicable": vertex_eq is not None and vertex_eq.stability == "stable",
    }
    if not report["applicable"]:
        report.update(hypotheses=False, conclusion_verified=None,
                      agreement=None)
        return report

    report["assumption_A"] = check_assumption_A(game).holds
    form = indifference_form(game, i, j)
    tn = form.tangent_norm()
    e_i = np.zeros(game.n)
    e_i[i] = 1.0
    report["vertex_off_line"] = abs(form(e_i)) / tn > 1e-9

    inv = check_rd_invariance(game, form, equilibria=equilibria)
    report["components_rd_invariant"] = bool(inv["analytic"]
                                             and inv["max_drift"] < 1e-6)

    rng = np.random.default_rng(seed)
    starts = rng.standard_exponential((crossing_checks, game.n))
    starts /= starts.sum(axis=1, keepdims=True)
    band = 1e-12 * game.scale
    crossings = 0
    for x0 in starts:
        traj = integrate_brd(game, x0, horizon, equilibria=equilibria)
        crossings += _count_line_crossings(traj, form, band)
    report["brd_crossings"] = crossings
    report["components_brd_invariant"] = crossings == 0

    report["hypotheses"] = bool(report["assumption_A"]
                                and report["vertex_off_line"]
                                and report["components_rd_invariant"]
                                and report["components_brd_invariant"])

    others = [eq for eq in equilibria
              if eq.stability == "stable" and eq is not vertex_eq]
    report["other_stable_on_line"] = any(
        abs(form(eq.point)) / tn < 1e-9 for eq in others)

    if basin_map is None:
        basin_map = estimate_basins(game, samples, seed + 1, horizon=horizon,
                                    equilibria=equilibria)
    agreement = basin_map.agreement(vertex_eq.label)
    report["agreement"] = agreement
    report["conclusion_verified"] = agreement >= 1.0 - agreement_tol
    return report
