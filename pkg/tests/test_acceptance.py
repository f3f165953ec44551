"""Release gate: one test per shipping criterion, one printed verdict each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict
lines; the test outcomes carry the same pass/fail information. Expected
values are frozen here rather than read from the library's own catalog so
a regression in the catalog cannot hide itself.
"""

import numpy as np
import pytest

from egdyn import (a_n_edge_point, a_n_family, all_indifference_forms,
                   check_rd_invariance, detect_cyclic, enumerate_nash,
                   estimate_basins, golman_page, indifference_form,
                   integrate_brd, integrate_rd, render_portrait,
                   sample_simplex_array, theorem1_harness, zeeman_fixture)
from oracles import brd_fixed_step

LABELS = ("5_1", "6_1", "7_1", "10_1", "4_1", "6_2", "7_2", "9_1")

# reference indifference forms, pair order (1,2), (1,3), (2,3)
FORMS = {
    "5_1": ((1, -3, 2), (3, -4, 1), (2, -1, -1)),
    "6_1": ((1, 1, -2), (1, 0, -1), (2, 1, -3)),
    "7_1": ((3, 6, -9), (1, 3, -4), (2, 3, -5)),
    "10_1": ((1, -1, 0), (1, 0, -1), (0, 1, -1)),
    "4_1": ((1, -1, 0), (1, -2, 1), (2, -1, -1)),
    "6_2": ((1, 1, -2), (1, 2, -3), (2, 3, -5)),
    "7_2": ((1, 1, -2), (1, 0, -1), (0, 1, -1)),
    "9_1": ((1, -1, 0), (1, 2, -3), (2, 1, -3)),
}

STABLE = {
    "5_1": {"e1"},
    "6_1": {"e2", "e3"},
    "7_1": {"e1", "interior"},
    "10_1": {"e1", "e2", "e3"},
    "4_1": {"e1", "e2"},
    "6_2": {"e2", "e3"},
    "7_2": {"e1", "e23"},
    "9_1": {"e13", "e23"},
}

# pairs whose indifference line the smooth flow leaves invariant
INVARIANT = {
    "5_1": set(),
    "6_1": {(0, 2)},
    "7_1": set(),
    "10_1": {(0, 1), (0, 2), (1, 2)},
    "4_1": {(0, 1)},
    "6_2": set(),
    "7_2": {(0, 2), (1, 2)},
    "9_1": {(0, 1)},
}

PAIRS = ((0, 1), (0, 2), (1, 2))


def verdict(num: int, name: str, ok: bool, detail: str = "") -> None:
    tail = f"  ({detail})" if detail else ""
    print(f"criterion {num:02d} {name}: {'PASS' if ok else 'FAIL'}{tail}")
    assert ok, f"criterion {num:02d} {name} failed{tail}"


def test_criterion_01_reference_forms_exact():
    checked = 0
    for label in LABELS:
        game = zeeman_fixture(label).game
        for pair, printed in zip(PAIRS, FORMS[label]):
            c = indifference_form(game, *pair).canonical().coeffs
            assert np.array_equal(c, np.rint(c)), (label, pair)
            comp = [int(v) for v in c]
            # exact positive proportionality, integer cross products
            assert all(comp[a] * printed[b] == comp[b] * printed[a]
                       for a in range(3) for b in range(3)), (label, pair)
            lead = next(v for v in comp if v)
            assert lead > 0, (label, pair)
            checked += 1
    verdict(1, "reference-forms-exact", checked == 24, f"{checked}/24 pairs")


def test_criterion_02_stable_sets_exact():
    mismatches = []
    for label in LABELS:
        found = {eq.label for eq in enumerate_nash(zeeman_fixture(label).game)
                 if eq.stability == "stable"}
        if found != STABLE[label]:
            mismatches.append(f"{label}: {sorted(found)}")
    verdict(2, "stable-sets-exact", not mismatches, "; ".join(mismatches))


def test_criterion_03_rotation_flags():
    quiet = detect_cyclic(zeeman_fixture("6_1").game).scaled_max_imag
    loud = [detect_cyclic(zeeman_fixture(lbl).game).scaled_max_imag
            for lbl in ("5_1", "7_1")]
    ok = quiet < 1e-9 and all(v > 1e-3 for v in loud)
    verdict(3, "rotation-flags", ok,
            f"6_1 |Im|={quiet:.2e}, 5_1 |Im|={loud[0]:.3f}, "
            f"7_1 |Im|={loud[1]:.3f}")


@pytest.mark.slow
def test_criterion_04_basin_agreement_where_basins_coincide():
    worst = ("", 1.0)
    for label in ("10_1", "4_1", "7_2", "9_1"):
        bmap = estimate_basins(zeeman_fixture(label).game, 10_000, 41,
                               exclusion=1e-4)
        for eq_label in sorted(STABLE[label]):
            a = bmap.agreement(eq_label)
            if a < worst[1]:
                worst = (f"{label}/{eq_label}", a)
    verdict(4, "basin-agreement", worst[1] >= 0.995,
            f"worst {worst[0] or 'none'} = {worst[1]:.4f}")


def test_criterion_05_sector_route_to_shared_vertex():
    rep = theorem1_harness(zeeman_fixture("6_2").game, 1, samples=1000)
    ok = (rep["assumption_A"] and rep["H1"] and rep["H2"]
          and rep["sector_samples"] == 1000
          and rep["converged_rd"] == 1000
          and rep["converged_brd"] == 1000
          and rep["conclusion_verified"])
    verdict(5, "sector-route-6_2-e2", ok,
            f"AA={rep['assumption_A']} H1={rep['H1']} H2={rep['H2']}, "
            f"rd {rep['converged_rd']}/1000, brd {rep['converged_brd']}/1000")


@pytest.mark.slow
def test_criterion_06_basin_gap_6_1():
    bmap = estimate_basins(zeeman_fixture("6_1").game, 10_000, 61)
    gap = bmap.fraction("brd", "e2") - bmap.fraction("rd", "e2")
    verdict(6, "basin-gap-6_1-e2", gap > 0.02, f"gap = {gap:.4f}")


@pytest.mark.slow
def test_criterion_07_golman_page_intersection_vanishes():
    inter = []
    fr_rd_last = 0.0
    for N in (2, 5, 10, 20):
        bmap = estimate_basins(golman_page(N), 10_000, 71)
        inter.append(bmap.intersection("e1")[0])
        fr_rd_last = bmap.fraction("rd", "e1")
    decreasing = all(a > b for a, b in zip(inter, inter[1:]))
    ok = decreasing and inter[-1] < 0.05 and fr_rd_last > 0.9
    verdict(7, "golman-page-intersection", ok,
            "intersection(e1) = " + ", ".join(f"{v:.4f}" for v in inter)
            + f"; fr_rd(e1)@N=20 = {fr_rd_last:.4f}")


@pytest.mark.slow
def test_criterion_08_a_n_replicator_basin_vanishes():
    horizons = {1: 500.0, 5: 500.0, 20: 1000.0, 100: 3000.0}
    fr_rd = []
    fr_brd_last = 0.0
    for n in (1, 5, 20, 100):
        game = a_n_family(n)
        bmap = estimate_basins(game, 10_000, 81, horizon=horizons[n])
        fr_rd.append(bmap.fraction("rd", "e1"))
        fr_brd_last = bmap.fraction("brd", "e1")

        closed = np.array([(3.0 * n + 1.0) / (3.0 * n + 2.0), 0.0,
                           1.0 / (3.0 * n + 2.0)])
        assert np.array_equal(a_n_edge_point(n), closed), n
        e13 = next(eq for eq in enumerate_nash(game) if eq.label == "e13")
        assert np.all(np.abs(e13.point.x - closed) <= 4 * np.spacing(closed)), n

    decreasing = all(a > b for a, b in zip(fr_rd, fr_rd[1:]))
    ok = decreasing and fr_rd[-1] < 0.05 and fr_brd_last > 0.15
    verdict(8, "a-n-basin-shrinks", ok,
            "fr_rd(e1) = " + ", ".join(f"{v:.4f}" for v in fr_rd)
            + f"; fr_brd(e1)@n=100 = {fr_brd_last:.4f}")


@pytest.mark.slow
def test_criterion_09_brd_against_fixed_step_reference():
    sup = 0.0
    for k, label in enumerate(LABELS):
        game = zeeman_fixture(label).game
        eqs = enumerate_nash(game)
        starts = sample_simplex_array(3, 100, seed=91 + k)
        for x0 in starts:
            traj = integrate_brd(game, x0, horizon=20.0, equilibria=eqs,
                                 conv_radius=1e-12)
            times, states = brd_fixed_step(game.payoffs, x0, 20.0, h=5e-3)
            keep = times <= min(traj.t_end, 20.0)
            err = max(float(np.max(np.abs(traj.at(t) - s)))
                      for t, s in zip(times[keep], states[keep]))
            sup = max(sup, err)
    verdict(9, "brd-reference-accuracy", sup < 1e-6,
            f"sup-norm over 800 orbits = {sup:.3e}")


def test_criterion_10_invariance_detector_is_exact():
    drift_inv, drift_non = 0.0, np.inf
    for label in LABELS:
        game = zeeman_fixture(label).game
        eqs = enumerate_nash(game)
        for form in all_indifference_forms(game):
            res = check_rd_invariance(game, form, horizon=50.0,
                                      equilibria=eqs)
            expected = form.pair in INVARIANT[label]
            assert res["analytic"] == expected, (label, form.pair)
            assert res["consistent"], (label, form.pair)
            if expected:
                drift_inv = max(drift_inv, res["max_drift"])
            else:
                drift_non = min(drift_non, res["max_drift"])
    ok = drift_inv < 1e-6 and drift_non >= 1e-6
    verdict(10, "invariant-line-detector", ok,
            f"invariant drift <= {drift_inv:.2e}, "
            f"others >= {drift_non:.2e}")


def test_criterion_11_conservation_and_determinism(tmp_path):
    worst = 0.0
    for k, label in enumerate(LABELS):
        game = zeeman_fixture(label).game
        eqs = enumerate_nash(game)
        for x0 in sample_simplex_array(3, 6, seed=111 + k):
            traj = integrate_rd(game, x0, 50.0, equilibria=eqs, record=True)
            worst = max(worst, float(np.max(np.abs(traj.states.sum(axis=1)
                                                   - 1.0))))
    conserved = worst <= 1e-9

    game = zeeman_fixture("6_2").game
    a = estimate_basins(game, 500, 99).to_csv(tmp_path / "a.csv")
    b = estimate_basins(game, 500, 99).to_csv(tmp_path / "b.csv")
    maps_equal = a.read_bytes() == b.read_bytes()

    p = render_portrait(game, tmp_path / "a.svg", dynamic="both", seed=5)
    q = render_portrait(game, tmp_path / "b.svg", dynamic="both", seed=5)
    svg_equal = p.read_bytes() == q.read_bytes()

    verdict(11, "conservation-and-determinism",
            conserved and maps_equal and svg_equal,
            f"max |sum(x)-1| = {worst:.2e}, maps identical = {maps_equal}, "
            f"portraits identical = {svg_equal}")
