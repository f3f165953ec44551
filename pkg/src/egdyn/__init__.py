"""Evolutionary game dynamics on the simplex: replicator and best-response
flows, equilibrium catalogs, basin estimation, and phase portraits."""

from ._kernels import BACKEND
from .game import (AssumptionReport, GameMatrix, LinearForm, SimplexPoint,
                   all_indifference_forms, average_payoff, check_assumption_A,
                   form_simplex_cut, game_to_json, indifference_form,
                   load_game, normalize_diagonal, payoff_vector,
                   sample_simplex, sample_simplex_array,
                   simplex_distance_to_form, vertex_on_indifference)
from .equilibria import (CyclicReport, Equilibrium, brd_boundary_singularities,
                         classify_stability, detect_cyclic, enumerate_nash,
                         nearest_equilibrium, rd_jacobian, tangent_eigenvalues)
from .errors import (DegenerateGameError, EgdynError, InvalidGameError,
                     NumericalError, SimplexError)
from .replicator import (check_ratio_monotonicity, check_rd_invariance,
                         integrate_rd, rd_field)
from .best_response import (SlidingResult, best_response_set, brd_segment,
                            integrate_brd, next_event, sliding_velocity)
from .trajectory import BrdEvent, BrdSegment, Trajectory
from .basins import (BasinMap, SectorRegion, check_sector_invariance,
                     construct_sector, estimate_basins, intersection_measure,
                     theorem1_harness, theorem2_harness)
from .corpus import (CORPUS_LABELS, ClassFixture, a_n_edge_point, a_n_family,
                     all_fixtures, golman_page, run_fixture_checks,
                     zeeman_fixture)
from .portrait import render_portrait, to_plane

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport", "BACKEND", "BasinMap", "BrdEvent", "BrdSegment",
    "CORPUS_LABELS", "ClassFixture", "CyclicReport", "DegenerateGameError",
    "EgdynError", "Equilibrium", "GameMatrix", "InvalidGameError",
    "LinearForm", "NumericalError", "SectorRegion", "SimplexError",
    "SimplexPoint", "SlidingResult", "Trajectory", "a_n_edge_point",
    "a_n_family", "all_fixtures", "all_indifference_forms", "average_payoff",
    "best_response_set", "brd_boundary_singularities", "brd_segment",
    "check_assumption_A", "check_ratio_monotonicity", "check_rd_invariance",
    "check_sector_invariance", "classify_stability", "construct_sector",
    "detect_cyclic", "enumerate_nash", "estimate_basins", "form_simplex_cut",
    "game_to_json", "golman_page", "indifference_form", "integrate_brd",
    "integrate_rd", "intersection_measure", "load_game",
    "nearest_equilibrium", "normalize_diagonal", "payoff_vector", "rd_field",
    "rd_jacobian", "render_portrait", "run_fixture_checks", "sample_simplex",
    "sample_simplex_array", "simplex_distance_to_form",
    "tangent_eigenvalues", "theorem1_harness", "theorem2_harness",
    "to_plane", "vertex_on_indifference", "zeeman_fixture",
]
