"""Catalog integrity and the per-class signature checker."""

import dataclasses

import numpy as np
import pytest

from egdyn import (CORPUS_LABELS, InvalidGameError, a_n_edge_point,
                   a_n_family, all_fixtures, check_assumption_A,
                   enumerate_nash, golman_page, run_fixture_checks,
                   zeeman_fixture)


def test_labels_are_stable_and_lookups_strict():
    assert CORPUS_LABELS == ("5_1", "6_1", "7_1", "10_1",
                            "4_1", "6_2", "7_2", "9_1")
    assert zeeman_fixture("6_2").label == "6_2"
    with pytest.raises(InvalidGameError):
        zeeman_fixture("8_1")


def test_fixture_matrices_are_integer_with_zero_diagonal():
    for fixture in all_fixtures():
        A = fixture.game.payoffs
        assert A.shape == (3, 3)
        assert np.array_equal(A, np.rint(A))
        assert np.all(A.diagonal() == 0.0)
        assert len(fixture.printed_forms) == 3
        assert all(any(c != 0 for c in row) for row in fixture.printed_forms)


@pytest.mark.parametrize("fixture", all_fixtures(), ids=lambda f: f.label)
def test_signature_checks_pass_quickly(fixture):
    checks = run_fixture_checks(fixture, thorough=False)
    assert checks and all(c["ok"] for c in checks), \
        [c for c in checks if not c["ok"]]


def test_signature_checks_pass_with_harnesses():
    checks = run_fixture_checks(zeeman_fixture("6_1"))
    names = {c["name"] for c in checks}
    assert "sector-route-e3" in names and "split-route-e3-Z13" in names
    assert all(c["ok"] for c in checks), [c for c in checks if not c["ok"]]


def test_single_entry_corruption_is_caught():
    fixture = zeeman_fixture("9_1")
    rows = [list(r) for r in fixture.payoffs]
    rows[0][1] += 3
    mutated = dataclasses.replace(fixture,
                                  payoffs=tuple(tuple(r) for r in rows))
    failing = [c["name"] for c in run_fixture_checks(mutated, thorough=False)
               if not c["ok"]]
    assert any(name.startswith("form-") for name in failing)


def test_family_construction_and_guards():
    gp = golman_page(5)
    assert gp.name == "golman-page(N=5)" and gp.is_normalized
    assert check_assumption_A(gp).holds
    stable = {eq.label for eq in enumerate_nash(gp)
              if eq.stability == "stable"}
    assert {"e1", "e2"} <= stable
    with pytest.raises(InvalidGameError):
        golman_page(1)

    an = a_n_family(1)
    assert an == zeeman_fixture("7_1").game
    with pytest.raises(InvalidGameError):
        a_n_family(0)


def test_edge_point_closed_form_matches_enumeration():
    for n in (1, 5, 20):
        closed = a_n_edge_point(n)
        eqs = enumerate_nash(a_n_family(n))
        e13 = next(eq for eq in eqs if eq.label == "e13")
        assert np.array_equal(e13.point.x, closed)
        assert closed.sum() == 1.0 and closed[1] == 0.0
