"""Tests for joint measurability, marginal surgery and the pentagonal expression."""

import json
from fractions import Fraction
from functools import partial

import numpy as np
import pytest

from src.exceptions import NoTransition, TooLarge
from src.joint_measurability import (
    BinaryQubitPovm,
    classical_pentagonal_max,
    cycle_window,
    deterministic_tables,
    from_bloch,
    jm_feasible,
    jm_threshold,
    marginal_surgery_cycle,
    marginal_surgery_specker,
    mix_tables,
    noisy_pauli,
    outcome_bits,
    parse_povms,
    pauli_family,
    pauli_surgery_example,
    pentagonal_lp_max,
    pentagonal_value,
    planar_povms,
    to_bloch,
    uniform_tables,
    verify_pattern,
)
from src.scenarios import n_specker_jms
from src.validators import InconsistentMarginals, InvalidMeasurement, OutOfRange, SchemaViolation


class TestPovms:
    """Test binary qubit POVMs and their parsing."""

    def test_bloch_coordinates(self):
        povm = noisy_pauli(3, 0.5)
        assert np.allclose(povm.bloch, [0.5, 0, 0, 0.25])
        assert np.allclose(from_bloch(to_bloch(povm.effect)), povm.effect)

    def test_effect_outside_unit_interval(self):
        with pytest.raises(InvalidMeasurement):
            BinaryQubitPovm(2 * np.eye(2))

    def test_non_hermitian_effect(self):
        with pytest.raises(InvalidMeasurement, match="Hermitian"):
            BinaryQubitPovm(np.array([[0.5, 0.1], [0.0, 0.5]]))

    @pytest.mark.parametrize("axis, eta", [(0, 0.5), (4, 0.5), (1, 1.2)])
    def test_noisy_pauli_range(self, axis, eta):
        with pytest.raises(OutOfRange):
            noisy_pauli(axis, eta)

    def test_planar_povms_are_unbiased(self):
        for povm in planar_povms(5, 0.8):
            assert povm.bloch[0] == pytest.approx(0.5)
            assert np.linalg.norm(povm.bloch[1:]) == pytest.approx(0.4)

    def test_parse_noisy_pauli_file(self, data_dir):
        with open(data_dir / "povms" / "pauli_pair_070.json") as f:
            povms = parse_povms(json.load(f))
        assert [p.label for p in povms] == ["M1", "M3"]

    def test_parse_effect_file(self, data_dir):
        with open(data_dir / "povms" / "sharp_xz.json") as f:
            povms = parse_povms(json.load(f))
        assert povms[0].label == "X"
        assert not povms[0].commutes_with(povms[1])

    def test_parse_bad_effect_path(self):
        raw = {"povms": [{"effect": [[[2, 0], [0, 0]], [[0, 0], [0, 0]]]}]}
        with pytest.raises(InvalidMeasurement) as excinfo:
            parse_povms(raw)
        assert excinfo.value.path == "/povms/0/effect"

    def test_parse_missing_key(self):
        with pytest.raises(SchemaViolation):
            parse_povms({"effects": []})

    def test_outcome_bits_big_endian(self):
        assert outcome_bits(5, 3) == (1, 0, 1)
        assert outcome_bits(0, 2) == (0, 0)


class TestJmFeasible:
    """Test the alternating-projection feasibility test."""

    def test_commuting_povms(self):
        result = jm_feasible([noisy_pauli(3, 1.0), noisy_pauli(3, 0.5)])
        assert result.feasible
        assert result.method == "commuting_product"
        assert result.joint.marginal_residual([noisy_pauli(3, 1.0), noisy_pauli(3, 0.5)]) < 1e-12

    def test_pauli_pair_below_threshold(self, fast_jm_config):
        povms = pauli_family((1, 3), 0.65)
        result = jm_feasible(povms, fast_jm_config)
        assert result.feasible
        assert result.joint.marginal_residual(povms) < 1e-6
        assert result.joint.min_eigenvalue() > -1e-6
        assert result.joint.completeness_residual() < 1e-6

    def test_pauli_pair_above_threshold(self, fast_jm_config):
        assert not jm_feasible(pauli_family((1, 3), 0.8), fast_jm_config).feasible

    def test_pauli_triple_below_threshold(self, fast_jm_config):
        assert jm_feasible(pauli_family((1, 2, 3), 0.5), fast_jm_config).feasible

    def test_sharp_pair_has_certificate(self, fast_jm_config):
        result = jm_feasible(pauli_family((1, 3), 1.0), fast_jm_config)
        assert not result.feasible
        assert result.certificate is not None
        assert result.to_dict()["feasible"] is False

    def test_too_many(self):
        with pytest.raises(TooLarge):
            jm_feasible([noisy_pauli(3, 0.5)] * 7)

    def test_empty(self):
        with pytest.raises(SchemaViolation):
            jm_feasible([])


class TestThreshold:
    """Test bisection for the sharpness threshold."""

    @pytest.mark.slow
    def test_pauli_pair(self, fast_jm_config):
        result = jm_threshold(partial(pauli_family, (1, 3)), config=fast_jm_config)
        assert result.eta == pytest.approx(1 / np.sqrt(2), abs=2e-3)
        assert result.interval[0] <= result.eta <= result.interval[1]

    def test_no_transition(self, fast_jm_config):
        with pytest.raises(NoTransition):
            jm_threshold(partial(pauli_family, (3,)), config=fast_jm_config)

    def test_cycle_window_ordered(self):
        for n in (4, 5, 6):
            lower, upper = cycle_window(n)
            assert 0.5 < lower < upper < 1


class TestSurgery:
    """Test POVM constructions for Specker and cycle structures."""

    def test_specker_two(self, fast_jm_config):
        result = marginal_surgery_specker(2, config=fast_jm_config)
        assert result.verified
        assert result.eta == 1.0

    @pytest.mark.slow
    def test_specker_three(self, fast_jm_config):
        result = marginal_surgery_specker(3, config=fast_jm_config)
        assert result.verified
        assert 1 / np.sqrt(3) < result.eta < 1 / np.sqrt(2)
        assert [p.label for p in result.povms] == ["M1", "M2", "M3"]

    @pytest.mark.slow
    def test_cycle_four(self, fast_jm_config):
        result = marginal_surgery_cycle(4, config=fast_jm_config)
        assert result.verified
        assert len(result.checks) == 11

    def test_small_n_rejected(self):
        with pytest.raises(OutOfRange):
            marginal_surgery_specker(1)
        with pytest.raises(OutOfRange):
            marginal_surgery_cycle(2)

    def test_verify_pattern_flags_mismatch(self, fast_jm_config):
        # sharp orthogonal axes are pairwise incompatible, which a Specker structure forbids
        checks = verify_pattern(pauli_family((1, 2, 3), 1.0), n_specker_jms(3), config=fast_jm_config)
        pairs = [c for c in checks if len(c["subset"]) == 2]
        assert all(not c["ok"] for c in pairs)

    @pytest.mark.slow
    def test_pauli_surgery_stages(self, fast_jm_config):
        stages = pauli_surgery_example(config=fast_jm_config)["stages"]
        assert stages[0]["compatible"]["M1M2M3"]
        assert not stages[1]["compatible"]["M1M2M3"]
        assert not stages[2]["compatible"]["M1M3"]


class TestPentagonal:
    """Test the pentagonal expression and its bounds."""

    def test_classical_max(self):
        best, attaining = classical_pentagonal_max()
        assert best == 2
        assert attaining

    def test_lp_max(self):
        value, tables = pentagonal_lp_max()
        assert value == 6
        assert pentagonal_value(tables) == 6

    def test_uniform_tables(self):
        assert pentagonal_value(uniform_tables()) == 0

    def test_string_keys(self):
        tables = {f"{i}{j}": t for (i, j), t in deterministic_tables((0, 0, 0, 0)).items()}
        assert pentagonal_value(tables) == pentagonal_value(deterministic_tables((0, 0, 0, 0)))

    def test_missing_pair(self):
        tables = uniform_tables()
        del tables[(2, 4)]
        with pytest.raises(SchemaViolation, match="missing"):
            pentagonal_value(tables)

    def test_inconsistent_marginals(self):
        tables = uniform_tables()
        tables[(1, 2)] = [[Fraction(1, 2), Fraction(1, 2)], [0, 0]]
        with pytest.raises(InconsistentMarginals) as excinfo:
            pentagonal_value(tables)
        assert excinfo.value.details["measurement"] == 1

    def test_mixture_is_bounded(self):
        mixed = mix_tables([(0, 0, 0, 0), (1, 1, 1, 1)], [Fraction(1, 2), Fraction(1, 2)])
        assert mixed[(1, 2)] == [[Fraction(1, 2), 0], [0, Fraction(1, 2)]]
        assert pentagonal_value(mixed) <= 2

    def test_mix_tables_length(self):
        with pytest.raises(SchemaViolation):
            mix_tables([(0, 0, 0, 0)], [Fraction(1, 2), Fraction(1, 2)])
