"""Tests for rays, realizations, Born models and the named constructions."""

import json
import math

import numpy as np
import pytest

from src.exceptions import NoTransition, NotComplete, NotOrthogonal
from src.graph_invariants import EdgeDistribution, csw_value
from src.quantum_models import (
    Ray,
    ValuationProblem,
    born_model,
    builtin_constructions,
    complete_hyperedge,
    entanglement_flags,
    find_noise_crossing,
    label_state,
    maximally_mixed,
    parse_rays,
    pauli_matrix,
    peres_mermin_audit,
    random_local_unitary,
    simulate_noisy_corr,
    simulate_special_source,
    validate_realization,
)
from src.scenarios import parse_vertex_weights, validate_scenario
from src.validators import (
    DimensionMismatch,
    IncompleteRealization,
    InvalidNoise,
    InvalidState,
    SchemaViolation,
    UnknownName,
)
from src.witnesses import corr_value


@pytest.fixture(scope="module")
def cega18():
    return builtin_constructions("cega18")


@pytest.fixture
def three_rays():
    return validate_scenario({"vertices": ["a", "b", "c"], "hyperedges": [["a", "b", "c"]]})


class TestRay:
    """Test ray normalization and overlaps."""

    def test_canonical_phase(self):
        ray = Ray(np.array([0, -2j]))
        assert np.allclose(ray.amplitudes, [0, 1])

    def test_same_ray_up_to_phase(self):
        assert Ray(np.array([1, 1j])).same_ray(Ray(np.array([-1j, 1])))
        assert not Ray(np.array([1, 0])).same_ray(Ray(np.array([0, 1])))

    def test_zero_ray(self):
        with pytest.raises(SchemaViolation):
            Ray(np.zeros(3))

    def test_complete_hyperedge(self):
        rays = complete_hyperedge([Ray(np.array([1, 0, 0]))], 3)
        assert len(rays) == 2
        assert all(r.overlap(Ray(np.array([1, 0, 0]))) < 1e-12 for r in rays)

    def test_parse_rays(self, data_dir):
        with open(data_dir / "rays" / "cega18.json") as f:
            dimension, rays = parse_rays(json.load(f))
        assert dimension == 4
        assert len(rays) == 18
        assert np.allclose(rays["v13"].amplitudes, 0.5)

    def test_parse_rays_wrong_length(self):
        with pytest.raises(DimensionMismatch) as excinfo:
            parse_rays({"dimension": 3, "rays": {"a": [1, 0]}})
        assert excinfo.value.path == "/rays/a"


class TestRealization:
    """Test orthonormal-basis checks on every hyperedge."""

    def test_cega18_valid(self, cega18):
        assert cega18.realization.dimension == 4
        assert cega18.factors == [2, 2]

    def test_perturbed_rays_rejected(self, gamma18_scenario, data_dir):
        with open(data_dir / "rays" / "cega18_perturbed.json") as f:
            _, rays = parse_rays(json.load(f))
        with pytest.raises(NotComplete) as excinfo:
            validate_realization(gamma18_scenario, rays)
        assert "residual" in excinfo.value.details

    def test_overlapping_rays(self, three_rays):
        rays = {"a": [1, 0, 0, 0], "b": [1, 1, 0, 0], "c": [0, 0, 1, 0]}
        with pytest.raises(NotOrthogonal) as excinfo:
            validate_realization(three_rays, rays)
        assert excinfo.value.details["pair"] == ["a", "b"]

    def test_too_few_rays(self, three_rays):
        rays = {"a": [1, 0, 0, 0], "b": [0, 1, 0, 0], "c": [0, 0, 1, 0]}
        with pytest.raises(NotComplete):
            validate_realization(three_rays, rays)

    def test_missing_vertex(self, three_rays):
        with pytest.raises(IncompleteRealization) as excinfo:
            validate_realization(three_rays, {"a": [1, 0, 0], "b": [0, 1, 0]})
        assert excinfo.value.details["missing"] == ["c"]

    def test_mixed_dimensions(self, three_rays):
        with pytest.raises(DimensionMismatch):
            validate_realization(three_rays, {"a": [1, 0, 0], "b": [0, 1, 0], "c": [0, 0, 1, 0]})


class TestBornModel:
    """Test p(v) = Tr(Pi_v rho)."""

    def test_maximally_mixed(self, cega18):
        model = born_model(cega18.realization)
        assert all(v == pytest.approx(0.25) for v in model.values)

    def test_kcbs_csw_value(self, gamma5_scenario):
        construction = builtin_constructions("kcbs")
        model = born_model(construction.realization)
        weights = parse_vertex_weights({f"u{i}": 0 for i in range(1, 6)}, gamma5_scenario)
        assert float(csw_value(model, weights)) == pytest.approx(math.sqrt(5), abs=1e-9)

    def test_missing_state(self, three_rays):
        R = validate_realization(three_rays, {"a": [1, 0, 0], "b": [0, 1, 0], "c": [0, 0, 1]})
        with pytest.raises(InvalidState, match="no state"):
            born_model(R)

    def test_invalid_state(self, cega18):
        with pytest.raises(InvalidState):
            born_model(cega18.realization, np.eye(4))


class TestEntanglement:
    """Test product/entangled classification of multiqubit rays."""

    def test_cega18_rays(self, cega18):
        rays = cega18.realization.rays
        flags = entanglement_flags([rays["v1"], rays["v3"], rays["v6"]], [2, 2])
        assert [f["product"] for f in flags] == [True, True, False]
        assert flags[2]["purities"][0] == pytest.approx(0.5)

    def test_bell_state(self):
        flags = entanglement_flags([Ray(np.array([1, 0, 0, 1]))], [2, 2])
        assert not flags[0]["product"]

    def test_factor_mismatch(self):
        with pytest.raises(DimensionMismatch):
            entanglement_flags([Ray(np.array([1, 0, 0, 0]))], [2, 3])

    def test_local_unitary_keeps_product(self):
        rng = np.random.default_rng(3)
        U = random_local_unitary([2, 2], rng)
        assert np.allclose(U @ U.conj().T, np.eye(4))
        rotated = Ray(U @ label_state("0+"))
        assert entanglement_flags([rotated], [2, 2])[0]["product"]


class TestPeresMermin:
    """Test the exact operator audit and the derived rays."""

    def test_audit(self):
        audit = peres_mermin_audit()
        assert audit.identities_hold
        assert len(audit.identities) == 6
        assert audit.valuations_checked == 512
        assert audit.satisfying_valuations == 0
        assert audit.identities[-1]["sign"] == -1

    def test_satisfiable_problem(self):
        problem = ValuationProblem(["A", "B"], [(["A", "B"], 1)])
        assert len(problem.satisfying_valuations()) == 2

    def test_unused_word(self):
        with pytest.raises(SchemaViolation):
            ValuationProblem(["A", "B", "C"], [(["A", "B"], 1)])

    def test_pauli_matrix(self):
        Y = pauli_matrix("Y")
        assert np.allclose(Y, [[0, -1j], [1j, 0]])
        assert pauli_matrix("XY").shape == (4, 4)
        with pytest.raises(UnknownName):
            pauli_matrix("XQ")

    def test_peres24_construction(self):
        construction = builtin_constructions("peres24")
        assert construction.derived
        assert construction.scenario.n_vertices == 24
        assert construction.notes["row_column_bases"] == 6
        assert all(len(e) == 4 for e in construction.scenario.hyperedges)


class TestNoisyData:
    """Test simulated prepare-measure data."""

    def test_ideal_data_is_perfectly_correlated(self, cega18):
        q = EdgeDistribution.uniform(cega18.scenario)
        data = simulate_noisy_corr(cega18.scenario, cega18.realization, 0.0)
        assert float(corr_value(cega18.scenario, q, data)) == pytest.approx(1.0)

    @pytest.mark.parametrize("nu", [0.1, 0.5, 1.0])
    def test_corr_decreases_linearly(self, cega18, nu):
        q = EdgeDistribution.uniform(cega18.scenario)
        data = simulate_noisy_corr(cega18.scenario, cega18.realization, nu)
        assert float(corr_value(cega18.scenario, q, data)) == pytest.approx(1 - 3 * nu / 4)

    def test_invalid_noise(self, cega18):
        with pytest.raises(InvalidNoise):
            simulate_noisy_corr(cega18.scenario, cega18.realization, 1.5)

    def test_noise_crossing(self, cega18):
        q = EdgeDistribution.uniform(cega18.scenario)
        crossing = find_noise_crossing(cega18.scenario, q, cega18.realization, 5 / 6)
        assert crossing == pytest.approx(2 / 9, abs=1e-5)

    def test_crossing_not_bracketed(self, cega18):
        q = EdgeDistribution.uniform(cega18.scenario)
        with pytest.raises(NoTransition):
            find_noise_crossing(cega18.scenario, q, cega18.realization, 0.1)

    def test_special_source(self, cega18):
        state = cega18.realization.projector("v1")
        data = simulate_special_source(cega18.scenario, cega18.realization, state, 0.5)
        assert float(data.p0()) == pytest.approx(0.5)
        assert len(data.special_tables) == cega18.scenario.n_hyperedges

    def test_special_source_zero_p0(self, cega18):
        with pytest.raises(InvalidNoise):
            simulate_special_source(cega18.scenario, cega18.realization, maximally_mixed(4), 0.0)


class TestConstructions:
    """Test the named constructions."""

    def test_label_state(self):
        assert np.allclose(label_state("1"), [0, 1])
        assert np.linalg.norm(label_state("+-0")) == pytest.approx(1.0)
        with pytest.raises(UnknownName):
            label_state("2")

    def test_shift(self):
        construction = builtin_constructions("shift")
        assert construction.realization.dimension == 8
        assert construction.scenario.n_hyperedges == 1
        assert construction.notes["labels"][2] == "+01"

    def test_kcbs_to_dict(self):
        document = builtin_constructions("kcbs").to_dict()
        assert document["cos_theta"] == pytest.approx(5 ** -0.25)
        assert document["realization"]["dimension"] == 3
        assert "factors" not in document

    def test_unknown(self):
        with pytest.raises(UnknownName):
            builtin_constructions("cega19")
