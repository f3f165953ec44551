"""Payoff algebra, simplex containers, and indifference-line geometry."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from egdyn import (GameMatrix, InvalidGameError, LinearForm, SimplexError,
                   SimplexPoint, all_indifference_forms, average_payoff,
                   check_assumption_A, form_simplex_cut, game_to_json,
                   indifference_form, load_game, normalize_diagonal,
                   payoff_vector, sample_simplex_array,
                   simplex_distance_to_form, vertex_on_indifference,
                   zeeman_fixture)

# random zero-diagonal 3x3 integer games for the property tests
_entries = st.integers(min_value=-9, max_value=9)


@st.composite
def zero_diag_games(draw):
    A = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            if i != j:
                A[i, j] = draw(_entries)
    return GameMatrix(A)


@st.composite
def simplex_points(draw):
    raw = np.array([draw(st.integers(1, 1000)) for _ in range(3)], float)
    return raw / raw.sum()


def test_game_matrix_rejects_bad_shapes():
    with pytest.raises(InvalidGameError):
        GameMatrix([[0, 1, 2], [3, 0, 4]])
    with pytest.raises(InvalidGameError):
        GameMatrix([[0]])
    with pytest.raises(InvalidGameError):
        GameMatrix([[0, np.inf], [1, 0]])


def test_game_matrix_equality_and_hash():
    a = GameMatrix([[0, 1], [2, 0]], name="a")
    b = GameMatrix([[0, 1], [2, 0]], name="b")
    assert a == b and hash(a) == hash(b)
    assert a != GameMatrix([[0, 1], [3, 0]])


def test_game_matrix_is_immutable():
    g = GameMatrix([[0, 1], [2, 0]])
    with pytest.raises(ValueError):
        g.payoffs[0, 1] = 5.0


def test_simplex_point_clamps_roundoff_but_rejects_violations():
    p = SimplexPoint([1.0 + 5e-13, -5e-13, 0.0])
    assert p.x[1] == 0.0 and p.x.sum() == 1.0
    with pytest.raises(SimplexError):
        SimplexPoint([1.1, -0.1, 0.0])
    with pytest.raises(SimplexError):
        SimplexPoint([0.5, 0.4, 0.0])


def test_normalize_diagonal_is_idempotent_and_payoff_preserving():
    g = GameMatrix([[2.0, 1.0, -1.0], [0.0, -1.0, 3.0], [4.0, 2.0, 1.0]])
    norm = normalize_diagonal(g)
    assert norm.is_normalized
    assert np.array_equal(normalize_diagonal(norm).payoffs, norm.payoffs)
    # column shifts cancel in payoff differences at any state
    x = np.array([0.3, 0.45, 0.25])
    before = payoff_vector(g, x)
    after = payoff_vector(norm, x)
    assert np.allclose(before - before[0], after - after[0], atol=1e-12)


def test_indifference_form_needs_zero_diagonal():
    with pytest.raises(InvalidGameError):
        indifference_form(GameMatrix([[1, 0], [0, 1]]), 0, 1)


@given(zero_diag_games(), simplex_points())
@settings(max_examples=60, deadline=None)
def test_form_value_is_payoff_gap(game, x):
    p = payoff_vector(game, x)
    for form in all_indifference_forms(game):
        i, j = form.pair
        assert form(x) == pytest.approx(p[i] - p[j], abs=1e-12)


@given(zero_diag_games())
@settings(max_examples=60, deadline=None)
def test_canonical_form_is_idempotent(game):
    for form in all_indifference_forms(game):
        canon = form.canonical()
        nz = np.nonzero(canon.coeffs)[0]
        if nz.size:
            assert canon.coeffs[nz[0]] > 0
        assert np.array_equal(canon.canonical().coeffs, canon.coeffs)


def test_form_simplex_cut_endpoints_lie_on_the_line():
    game = zeeman_fixture("6_1").game
    for form in all_indifference_forms(game):
        cut = form_simplex_cut(form)
        assert cut is not None
        for end in cut:
            assert end.min() >= 0 and end.sum() == pytest.approx(1.0)
            assert abs(form(end)) <= 1e-12


def test_form_simplex_cut_misses_simplex():
    # strictly positive coefficients: c.x > 0 everywhere on the simplex
    assert form_simplex_cut(LinearForm((0, 1), np.array([1.0, 2.0, 3.0]))) is None


def test_vertex_membership_reads_off_the_matrix():
    game = zeeman_fixture("10_1").game
    # rows differ only in the paired coordinates, so the third vertex
    # always sits on the line for this fully symmetric matrix
    assert vertex_on_indifference(game, 0, 1, 2)
    assert vertex_on_indifference(game, 0, 2, 1)
    assert vertex_on_indifference(game, 1, 2, 0)
    skewed = zeeman_fixture("5_1").game
    assert not vertex_on_indifference(skewed, 0, 1, 2)


def test_assumption_a_on_catalog_and_degenerate_games():
    for label in ("5_1", "6_1", "7_1", "10_1", "4_1", "6_2", "7_2", "9_1"):
        assert check_assumption_A(zeeman_fixture(label).game).holds
    zero = GameMatrix(np.zeros((3, 3)))
    report = check_assumption_A(zero)
    assert not report.holds and report.violating_pairs
    # equal rows 2 and 3 make Z_23 the whole simplex
    collapsed = GameMatrix([[0, 1, 1], [1, 0, 0], [1, 0, 0]])
    assert not check_assumption_A(collapsed).holds


def test_distance_normalizes_by_tangent_gradient():
    form = indifference_form(zeeman_fixture("10_1").game, 0, 1)  # (1, -1, 0)
    pts = np.array([[1.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.25, 0.25, 0.5]])
    d = simplex_distance_to_form(form, pts)
    assert d == pytest.approx([1 / np.sqrt(2), 0.0, 0.0], abs=1e-15)


def test_sample_simplex_array_is_deterministic_and_feasible():
    a = sample_simplex_array(3, 500, seed=11)
    b = sample_simplex_array(3, 500, seed=11)
    c = sample_simplex_array(3, 500, seed=12)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.min() >= 0.0
    assert np.allclose(a.sum(axis=1), 1.0, atol=1e-12)


def test_load_game_roundtrip_and_errors(tmp_path):
    game = zeeman_fixture("7_2").game
    path = tmp_path / "g.json"
    path.write_text(json.dumps(game_to_json(game)))
    again = load_game(path)
    assert again == game and again.name == "7_2"
    # constants added per column cancel in every payoff difference and
    # are removed again by the diagonal normalization on load
    shifted = dict(game_to_json(game))
    shifted["payoffs"] = (np.array(shifted["payoffs"])
                          + np.array([1.0, 2.0, 3.0])[None, :]).tolist()
    reloaded = load_game(shifted)
    assert reloaded.is_normalized and reloaded == game
    with pytest.raises(InvalidGameError):
        load_game('{"n": 2}')
    with pytest.raises(InvalidGameError):
        load_game('{"n": 4, "payoffs": [[0, 1], [1, 0]]}')
    with pytest.raises(InvalidGameError):
        load_game("not json")
