"""Piecewise dynamic: exact arcs, tie events, sliding resolution."""

import numpy as np
import pytest

from egdyn import (DegenerateGameError, GameMatrix, SimplexError,
                   best_response_set, brd_segment, enumerate_nash,
                   integrate_brd, next_event, sliding_velocity,
                   zeeman_fixture)


def test_best_response_set_and_ties():
    game = zeeman_fixture("10_1").game
    assert best_response_set(game, [0.5, 0.3, 0.2]) == (0,)
    # on the x1 = x2 line the two leaders tie exactly
    assert best_response_set(game, [0.4, 0.4, 0.2]) == (0, 1)
    assert best_response_set(game, [1 / 3, 1 / 3, 1 / 3]) == (0, 1, 2)


def test_arc_formula_at_log_two():
    # half the distance to the target vertex is covered at t = ln 2
    game = zeeman_fixture("6_1").game
    mid = brd_segment(game, [1 / 3, 1 / 3, 1 / 3], 0, np.log(2.0))
    assert np.allclose(mid.x, [2 / 3, 1 / 6, 1 / 6], atol=1e-15)
    with pytest.raises(SimplexError):
        brd_segment(game, [1 / 3, 1 / 3, 1 / 3], 5, 1.0)


def test_first_tie_along_an_arc():
    # moving toward e1, x3 shrinks as 0.34 e^{-t} and strategies 1, 2
    # tie where x3 = 1/3, i.e. after ln(1.02)
    game = zeeman_fixture("6_2").game
    x0 = [0.02, 0.64, 0.34]
    assert best_response_set(game, x0) == (0,)
    tau, pairs = next_event(game, x0, 0)
    assert tau == pytest.approx(np.log(1.02), abs=1e-14)
    assert pairs == [(0, 1)]
    hit = brd_segment(game, x0, 0, tau)
    assert np.allclose(hit.x, [0.04 / 1.02, 0.64 / 1.02, 1 / 3], atol=1e-12)


def test_no_event_when_the_target_stays_best():
    game = zeeman_fixture("6_2").game
    tau, pairs = next_event(game, [0.05, 0.9, 0.05], 1)
    assert tau is None and pairs == []


def test_sliding_modes_on_a_symmetric_line():
    game = zeeman_fixture("10_1").game
    res = sliding_velocity(game, 0, 1, [0.4, 0.4, 0.2])
    assert res.mode == "sliding"
    assert res.weight == pytest.approx(0.5)
    assert np.allclose(res.target, [0.5, 0.5, 0.0])
    assert not res.attracting  # both off-line regimes point away
    with pytest.raises(DegenerateGameError):
        sliding_velocity(GameMatrix([[0, 0, 1], [0, 0, 1], [-1, -1, 0]]),
                         0, 1, [0.5, 0.5, 0.0])


def test_exact_tie_start_slides_to_the_edge_point():
    game = zeeman_fixture("10_1").game
    traj = integrate_brd(game, [0.4, 0.4, 0.2],
                         equilibria=enumerate_nash(game))
    assert traj.segments[0].kind == "sliding"
    assert traj.segments[0].pair == (0, 1)
    assert traj.converged and traj.terminal_label == "e12"
    assert np.allclose(traj.terminal, [0.5, 0.5, 0.0], atol=2e-6)


def test_regime_change_then_convergence():
    game = zeeman_fixture("6_2").game
    traj = integrate_brd(game, [0.02, 0.64, 0.34],
                         equilibria=enumerate_nash(game))
    assert traj.converged and traj.terminal_label == "e2"
    crossings = [ev for ev in traj.events if ev.kind == "crossing"]
    assert crossings and crossings[0].t == pytest.approx(np.log(1.02),
                                                         abs=1e-12)
    assert crossings[0].pair == (0, 1)


def test_segments_join_continuously():
    game = zeeman_fixture("5_1").game
    traj = integrate_brd(game, [0.2, 0.3, 0.5], horizon=40.0,
                         equilibria=enumerate_nash(game))
    for prev, cur in zip(traj.segments, traj.segments[1:]):
        assert prev.t1 == pytest.approx(cur.t0, abs=1e-12)
        assert np.allclose(prev.at(prev.t1), cur.x0, atol=1e-9)
    # breakpoints all stay on the simplex
    assert np.allclose(traj.states.sum(axis=1), 1.0, atol=1e-9)
    assert traj.states.min() >= -1e-12


def test_start_at_equilibrium_is_a_single_segmentless_row():
    game = zeeman_fixture("7_2").game
    eqs = enumerate_nash(game)
    traj = integrate_brd(game, [0.0, 0.5, 0.5], equilibria=eqs)
    assert traj.converged and traj.terminal_label == "e23"
    assert len(traj.times) == 1
