"""Tests for the LP, hull-membership, polytope and SDP kernels."""

from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from src.config_loader import EnumerationConfig, SdpConfig
from src.exceptions import Infeasible, NotConverged, TooLarge, Unbounded
from src.optimization import (
    LinearProgram,
    SemidefiniteProgram,
    enumerate_model_vertices,
    hull_membership,
    mix_models,
    sdp_maximize,
    simplex_maximize,
    validate_model,
)
from src.scenarios import brute_force_ks_colorings
from src.validators import DimensionMismatch, OutOfRange, SchemaViolation


class TestSimplex:
    """Test the two-phase simplex method."""

    def test_single_variable(self):
        assert simplex_maximize(LinearProgram([1], [([1], "<=", 1)])).value == pytest.approx(1.0)

    def test_exact_optimum(self):
        lp = LinearProgram([1, 1], [([1, 2], "<=", 4), ([3, 1], "<=", 6)], exact=True)
        solution = simplex_maximize(lp)
        assert solution.value == Fraction(14, 5)
        assert solution.x == [Fraction(8, 5), Fraction(6, 5)]

    def test_float_matches_exact(self):
        constraints = [([1, 2], "<=", 4), ([3, 1], "<=", 6)]
        approx = simplex_maximize(LinearProgram([1, 1], constraints)).value
        assert approx == pytest.approx(2.8)

    def test_equality_and_ge(self):
        lp = LinearProgram([-1, -1], [([1, 1], "=", 3), ([1, 0], ">=", 2)], exact=True)
        assert simplex_maximize(lp).value == -3

    def test_lower_bounds(self):
        lp = LinearProgram([-1], [], bounds=[(-3, None)], exact=True)
        solution = simplex_maximize(lp)
        assert solution.value == 3
        assert solution.x == [-3]

    def test_from_matrices(self):
        lp = LinearProgram.from_matrices([1, 0], A_ub=[[1, 1]], b_ub=[2], A_eq=[[0, 1]], b_eq=[1], exact=True)
        assert simplex_maximize(lp).value == 1

    def test_infeasible_has_farkas(self):
        lp = LinearProgram([1], [([1], "<=", 1), ([1], ">=", 2)])
        with pytest.raises(Infeasible) as excinfo:
            simplex_maximize(lp)
        assert "farkas" in excinfo.value.details

    def test_unbounded(self):
        lp = LinearProgram([1, 0], [([1, -1], "<=", 1)])
        with pytest.raises(Unbounded):
            simplex_maximize(lp)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            LinearProgram([1, 1], [([1], "<=", 1)])

    def test_unknown_relation(self):
        with pytest.raises(SchemaViolation):
            LinearProgram([1], [([1], "<", 1)])

    def test_empty_bound_interval(self):
        with pytest.raises(OutOfRange):
            LinearProgram([1], bounds=[(2, 1)])

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_linprog(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.integers(0, 5, size=(3, 4)).tolist() + [[1, 1, 1, 1]]
        b = rng.integers(5, 20, size=3).tolist() + [10]
        c = rng.integers(-3, 6, size=4).tolist()
        ours = simplex_maximize(LinearProgram.from_matrices(c, A_ub=A, b_ub=b, exact=True)).value
        oracle = linprog([-v for v in c], A_ub=A, b_ub=b, bounds=[(0, None)] * 4, method="highs")
        assert float(ours) == pytest.approx(-oracle.fun, abs=1e-7)


class TestHullMembership:
    """Test convex-hull membership with certificates."""

    def test_member_exact_weights(self):
        result = hull_membership([1, 1], [[0, 0], [2, 2]])
        assert result.member
        assert result.weights == [Fraction(1, 2), Fraction(1, 2)]
        assert result.support() == [0, 1]

    def test_non_member_separated(self):
        generators = [[0, 0], [1, 0], [0, 1]]
        result = hull_membership([1, 1], generators)
        assert not result.member
        assert result.margin > 0
        for g in generators:
            assert np.dot(result.normal, g) <= result.bound + 1e-12

    def test_float_inputs(self):
        result = hull_membership([0.25, 0.75], [[0.0, 1.0], [1.0, 0.0]])
        assert result.member
        assert sum(result.weights) == pytest.approx(1.0)
        assert result.weights[1] == pytest.approx(0.25)

    def test_no_generators(self):
        with pytest.raises(DimensionMismatch):
            hull_membership([1], [])

    def test_generator_dimension(self):
        with pytest.raises(DimensionMismatch):
            hull_membership([1, 2], [[1]])


class TestModels:
    """Test probabilistic models and the model polytope."""

    def test_validate_model_from_dict(self, square_scenario):
        model = validate_model(square_scenario, {"a": "1/3", "b": "2/3", "c": 1, "d": 0})
        assert model.value("a") == Fraction(1, 3)
        assert not model.deterministic
        assert model.edge_sums() == [1, 1]

    def test_validate_model_out_of_range(self, square_scenario):
        with pytest.raises(OutOfRange):
            validate_model(square_scenario, [2, -1, 1, 0])

    def test_validate_model_bad_sum(self, square_scenario):
        with pytest.raises(SchemaViolation, match="hyperedge 1"):
            validate_model(square_scenario, [1, 0, 0.5, 0.4])

    def test_validate_model_missing_vertex(self, square_scenario):
        with pytest.raises(SchemaViolation):
            validate_model(square_scenario, {"a": 1, "b": 0})

    def test_mix_models(self, square_scenario):
        a = validate_model(square_scenario, [1, 0, 1, 0])
        b = validate_model(square_scenario, [0, 1, 0, 1])
        mixed = mix_models([a, b], [Fraction(1, 4), Fraction(3, 4)])
        assert mixed.values == (Fraction(1, 4), Fraction(3, 4), Fraction(1, 4), Fraction(3, 4))

    def test_classical_membership(self, square_scenario):
        colorings = brute_force_ks_colorings(square_scenario)
        model = validate_model(square_scenario, [Fraction(1, 2)] * 4)
        assert model.is_classical(colorings).member

    def test_triangle_polytope_single_vertex(self, triangle):
        vertices = enumerate_model_vertices(triangle)
        assert len(vertices) == 1
        assert vertices[0].values == (Fraction(1, 2),) * 3
        assert not vertices[0].deterministic

    def test_square_polytope_is_classical(self, square_scenario):
        vertices = enumerate_model_vertices(square_scenario)
        assert len(vertices) == 4
        assert all(v.deterministic for v in vertices)

    def test_gamma5_half_vertex(self, gamma5_scenario):
        vertices = enumerate_model_vertices(gamma5_scenario)
        half = {v: (Fraction(1, 2) if v.startswith("v") else 0) for v in gamma5_scenario.vertices}
        assert any(m.as_dict() == half for m in vertices)
        deterministic = [m for m in vertices if m.deterministic]
        assert len(deterministic) == len(brute_force_ks_colorings(gamma5_scenario))

    def test_polytope_too_large(self, gamma5_scenario):
        with pytest.raises(TooLarge):
            enumerate_model_vertices(gamma5_scenario, EnumerationConfig(max_polytope_vertices=4))

    def test_chunk_size_does_not_matter(self, gamma5_scenario):
        small = enumerate_model_vertices(gamma5_scenario, EnumerationConfig(chunk_size=7))
        large = enumerate_model_vertices(gamma5_scenario)
        assert [m.values for m in small] == [m.values for m in large]


class TestSdp:
    """Test the augmented-Lagrangian SDP solver."""

    def test_all_ones_objective(self):
        n = 4
        sdp = SemidefiniteProgram(n, np.ones((n, n)), [(np.eye(n), 1.0)])
        result = sdp_maximize(sdp)
        assert result.value == pytest.approx(4.0, abs=1e-4)
        assert result.dual_value == pytest.approx(4.0, abs=1e-3)

    def test_zero_pattern(self):
        # maximal value with X_01 = 0 is attained on the diagonal block {1, 2}
        C = np.ones((3, 3))
        sdp = SemidefiniteProgram(3, C, [(np.eye(3), 1.0)], {(0, 1)})
        result = sdp_maximize(sdp)
        assert result.value == pytest.approx(2.0, abs=1e-4)
        assert abs(result.X[0, 1]) < 1e-5

    def test_inconsistent_constraints(self):
        sdp = SemidefiniteProgram(2, np.eye(2), [(np.eye(2), 1.0), (np.eye(2), 2.0)])
        with pytest.raises(Infeasible):
            sdp_maximize(sdp)

    def test_iteration_budget(self):
        sdp = SemidefiniteProgram(4, np.ones((4, 4)), [(np.eye(4), 1.0)])
        with pytest.raises(NotConverged) as excinfo:
            sdp_maximize(sdp, SdpConfig(max_iterations=1))
        assert "gap" in excinfo.value.details

    def test_asymmetric_objective(self):
        with pytest.raises(SchemaViolation):
            SemidefiniteProgram(2, np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_dimension_range(self):
        with pytest.raises(OutOfRange):
            SemidefiniteProgram(0, np.zeros((0, 0)))
