"""Tests for the noncontextuality witnesses and the one-shot communication task."""

import json
from fractions import Fraction

import numpy as np
import pytest

from src.exceptions import BetaNotBelowOne
from src.graph_invariants import EdgeDistribution
from src.scenarios import parse_vertex_weights
from src.validators import (
    MissingEdgeData,
    MissingSpecialSource,
    NonProjectiveEncoding,
    SchemaViolation,
    ShapeMismatch,
    ZeroP0,
)
from src.witnesses import (
    OneShotTask,
    PrepareMeasureData,
    classical_one_shot_value,
    classical_strategy_value,
    corr_value,
    diagonal_data,
    logical_witness,
    mix_data,
    one_shot_success,
    parse_one_shot_task,
    pentagon_channel,
    statistical_bound,
    statistical_witness,
    uniform_data,
)


def load(data_dir, *parts):
    with open(data_dir.joinpath(*parts)) as f:
        return json.load(f)


@pytest.fixture
def kcbs_weights(gamma5_scenario):
    return parse_vertex_weights({f"u{i}": 0 for i in range(1, 6)}, gamma5_scenario)


@pytest.fixture
def statistical_data(gamma5_scenario, data_dir):
    return PrepareMeasureData.from_raw(gamma5_scenario, load(data_dir, "witness", "gamma5_statistical.json"))


class TestPrepareMeasureData:
    """Test parsing of per-hyperedge tables."""

    def test_from_raw(self, statistical_data):
        assert len(statistical_data.edge_tables) == 5
        assert statistical_data.edge_tables[0][0][0] == Fraction(3, 10)
        assert statistical_data.p0() == Fraction(1, 2)

    def test_missing_edge(self, gamma5_scenario, data_dir):
        raw = load(data_dir, "witness", "gamma5_uniform.json")
        raw["edges"] = raw["edges"][:4]
        with pytest.raises(MissingEdgeData) as excinfo:
            PrepareMeasureData.from_raw(gamma5_scenario, raw)
        assert excinfo.value.path == "/edges/4"

    def test_wrong_table_shape(self, gamma5_scenario, data_dir):
        raw = load(data_dir, "witness", "gamma5_uniform.json")
        raw["edges"][2]["table"] = raw["edges"][2]["table"][:2]
        with pytest.raises(ShapeMismatch):
            PrepareMeasureData.from_raw(gamma5_scenario, raw)

    def test_table_not_normalized(self, gamma5_scenario, data_dir):
        raw = load(data_dir, "witness", "gamma5_uniform.json")
        raw["edges"][0]["table"][0][0] = "2/9"
        with pytest.raises(SchemaViolation, match="sum to"):
            PrepareMeasureData.from_raw(gamma5_scenario, raw)

    def test_p0_without_special(self, gamma5_scenario):
        with pytest.raises(MissingSpecialSource):
            uniform_data(gamma5_scenario).p0()

    def test_to_dict_renders_fractions(self, gamma5_scenario):
        document = uniform_data(gamma5_scenario).to_dict()
        assert document["edges"][0]["table"][0][0] == {"exact": "1/9", "value": 1 / 9}
        assert "special" not in document

    def test_mix_data(self, gamma5_scenario):
        mixed = mix_data(diagonal_data(gamma5_scenario), uniform_data(gamma5_scenario), Fraction(1, 2))
        assert mixed.edge_tables[0][0][0] == Fraction(1, 2) * Fraction(1, 3) + Fraction(1, 2) * Fraction(1, 9)


class TestCorr:
    """Test the correlation functional."""

    def test_uniform_data(self, gamma5_scenario):
        q = EdgeDistribution.uniform(gamma5_scenario)
        assert corr_value(gamma5_scenario, q, uniform_data(gamma5_scenario)) == Fraction(1, 3)

    def test_diagonal_data(self, gamma18_scenario):
        q = EdgeDistribution.uniform(gamma18_scenario)
        assert corr_value(gamma18_scenario, q, diagonal_data(gamma18_scenario)) == 1

    def test_statistical_data(self, gamma5_scenario, statistical_data):
        q = EdgeDistribution.uniform(gamma5_scenario)
        assert corr_value(gamma5_scenario, q, statistical_data) == Fraction(9, 10)

    def test_fewer_tables(self, gamma5_scenario):
        data = PrepareMeasureData(uniform_data(gamma5_scenario).edge_tables[:3])
        with pytest.raises(MissingEdgeData):
            corr_value(gamma5_scenario, EdgeDistribution.uniform(gamma5_scenario), data)


class TestLogicalWitness:
    """Test Corr <= beta."""

    def test_uniform_not_violated(self, gamma5_scenario):
        q = EdgeDistribution.uniform(gamma5_scenario)
        report = logical_witness(gamma5_scenario, q, uniform_data(gamma5_scenario))
        assert report.beta == Fraction(1, 2)
        assert not report.violated
        assert report.margin == pytest.approx(-1 / 6)

    def test_diagonal_violated(self, gamma5_scenario):
        q = EdgeDistribution.uniform(gamma5_scenario)
        report = logical_witness(gamma5_scenario, q, diagonal_data(gamma5_scenario), beta=Fraction(1, 2))
        assert report.violated
        assert report.to_dict()["corr"] == 1

    def test_beta_at_one_rejected(self, gamma5_scenario):
        q = EdgeDistribution.uniform(gamma5_scenario)
        with pytest.raises(BetaNotBelowOne):
            logical_witness(gamma5_scenario, q, uniform_data(gamma5_scenario), beta=1)

    def test_report_keys(self, gamma5_scenario):
        q = EdgeDistribution.uniform(gamma5_scenario)
        report = logical_witness(gamma5_scenario, q, uniform_data(gamma5_scenario), beta=Fraction(1, 2))
        assert set(report.to_dict()) == {"kind", "corr", "beta", "bound", "lhs", "violated", "margin"}


class TestStatisticalWitness:
    """Test the special-source witness."""

    def test_bound_formula(self):
        bound = statistical_bound(2, Fraction(5, 2), Fraction(1, 2), Fraction(1, 2), Fraction(9, 10))
        assert bound == Fraction(11, 5)

    def test_bound_zero_p0(self):
        with pytest.raises(ZeroP0):
            statistical_bound(2, 3, Fraction(1, 2), 0, 1)

    def test_bound_beta_one(self):
        with pytest.raises(BetaNotBelowOne):
            statistical_bound(2, 3, 1, Fraction(1, 2), 1)

    def test_gamma5_violation(self, gamma5_scenario, kcbs_weights, statistical_data):
        q = EdgeDistribution.uniform(gamma5_scenario)
        report = statistical_witness(gamma5_scenario, q, kcbs_weights, statistical_data)
        data = report.to_dict()
        assert data["alpha"] == 2
        assert data["alpha_star"] == {"exact": "5/2", "value": 2.5}
        assert data["p0"] == {"exact": "1/2", "value": 0.5}
        assert report.bound == Fraction(11, 5)
        assert report.lhs == Fraction(5, 2)
        assert report.violated

    def test_supplied_invariants_are_used(self, gamma5_scenario, kcbs_weights, statistical_data):
        q = EdgeDistribution.uniform(gamma5_scenario)
        report = statistical_witness(
            gamma5_scenario, q, kcbs_weights, statistical_data,
            alpha=2, alpha_star=Fraction(5, 2), beta=Fraction(1, 2),
        )
        assert report.bound == Fraction(11, 5)

    def test_missing_special_source(self, gamma5_scenario, kcbs_weights):
        q = EdgeDistribution.uniform(gamma5_scenario)
        with pytest.raises(MissingSpecialSource):
            statistical_witness(gamma5_scenario, q, kcbs_weights, uniform_data(gamma5_scenario))

    def test_zero_p0(self, gamma5_scenario, kcbs_weights, data_dir):
        raw = load(data_dir, "witness", "gamma5_uniform.json")
        raw["special"] = [[[0, "1/3"], [0, "1/3"], [0, "1/3"]] for _ in range(5)]
        data = PrepareMeasureData.from_raw(gamma5_scenario, raw)
        with pytest.raises(ZeroP0):
            statistical_witness(gamma5_scenario, EdgeDistribution.uniform(gamma5_scenario), kcbs_weights, data)


@pytest.fixture
def binary_identity(data_dir):
    return parse_one_shot_task(load(data_dir, "tasks", "binary_identity.json"))


class TestOneShot:
    """Test the entanglement-assisted one-shot task."""

    def test_parse(self, binary_identity):
        assert binary_identity.dim_a == 1
        assert binary_identity.dim_b == 1
        assert binary_identity.channel.shape == (2, 2)

    def test_quantum_success(self, binary_identity):
        assert one_shot_success(binary_identity) == pytest.approx(1.0)

    def test_classical_value(self, binary_identity):
        value, encoding = classical_one_shot_value(binary_identity.channel, binary_identity.prior)
        assert value == pytest.approx(1.0)
        assert encoding == [0, 1]

    def test_classical_strategy_value(self):
        channel = np.eye(2)
        assert classical_strategy_value(channel, [0.5, 0.5], [0, 1], [0, 1]) == pytest.approx(1.0)
        assert classical_strategy_value(channel, [0.5, 0.5], [0, 0], [0, 1]) == pytest.approx(0.5)

    def test_pentagon_channel_classical(self):
        channel = pentagon_channel()
        assert np.allclose(channel.sum(axis=1), 1.0)
        value, _ = classical_one_shot_value(channel, [0.2] * 5)
        assert value == pytest.approx(0.5)

    def test_entangled_task(self, data_dir):
        # Z then X measurement on half of |Phi+>; Bob reads Z, so the X message is a coin flip
        task = parse_one_shot_task(load(data_dir, "tasks", "entangled_bases.json"))
        assert (task.dim_a, task.dim_b) == (2, 2)
        assert one_shot_success(task) == pytest.approx(0.75)

    def test_product_state_is_classical(self):
        channel = pentagon_channel()
        prior = [0.2] * 5
        e0, e1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
        zero = np.zeros((2, 2))
        # Alice holds |0>, so message m deterministically becomes input m
        encodings = [[e0 if x == m else e1 if x == (m + 1) % 5 else zero for x in range(5)] for m in range(5)]
        # Bob guesses y with weight 0.7 and y + 2 with weight 0.3
        decodings = [[e0 if k == y else e1 if k == (y + 2) % 5 else zero for k in range(5)] for y in range(5)]
        task = OneShotTask(
            channel=channel,
            prior=prior,
            state=np.kron(e0, np.diag([0.7, 0.3])),
            dim_a=2,
            encodings=encodings,
            decodings=decodings,
        )

        value = one_shot_success(task)
        classical, _ = classical_one_shot_value(channel, prior)

        assert value == pytest.approx(0.7 * classical_strategy_value(channel, prior, range(5), range(5)))
        assert value == pytest.approx(0.35)
        assert value <= classical + 1e-12

    def test_non_projective_encoding(self):
        with pytest.raises(NonProjectiveEncoding) as excinfo:
            OneShotTask(
                channel=np.eye(2),
                prior=[0.5, 0.5],
                state=[[1]],
                dim_a=1,
                encodings=[[[[0.5]], [[0.5]]], [[[0]], [[1]]]],
                decodings=[[[[1]], [[0]]], [[[0]], [[1]]]],
            )
        assert excinfo.value.path == "/encodings/0/0"

    def test_decoding_count(self):
        with pytest.raises(SchemaViolation, match="one decoding per channel output"):
            OneShotTask(
                channel=np.eye(2),
                prior=[0.5, 0.5],
                state=[[1]],
                dim_a=1,
                encodings=[[[[1]], [[0]]], [[[0]], [[1]]]],
                decodings=[[[[1]], [[0]]]],
            )
