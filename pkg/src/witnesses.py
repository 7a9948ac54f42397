"""Noise-robust noncontextuality witnesses and the one-shot communication task.

Prepare-measure data are keyed to a contextuality scenario: for every
hyperedge e there is a joint table p(m_e, s_e | M_e, S_e) over the outcomes of
the measurement M_e and the source S_e, rows and columns indexed by the
hyperedge's vertices in canonical order. An optional special source S_*
with two outcomes adds a |e| x 2 table per hyperedge.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np

from src.config_loader import ToleranceConfig
from src.exceptions import BetaNotBelowOne
from src.graph_invariants import (
    EdgeDistribution,
    fractional_packing,
    independence_number,
    weighted_max_predictability,
)
from src.scenarios import ContextualityScenario, orthogonality_graph
from src.utils import number_to_json
from src.validators import (
    InvalidMeasurement,
    InvalidState,
    MissingEdgeData,
    MissingSpecialSource,
    NonProjectiveEncoding,
    SchemaViolation,
    ShapeMismatch,
    ZeroP0,
    check_distribution,
    pointer,
    require_complex,
    require_int,
    require_key,
    require_list,
    require_number,
    require_object,
)

logger = logging.getLogger(__name__)

Table = Tuple[Tuple[Any, ...], ...]


def _parse_number(raw: Any, path: str) -> Any:
    """JSON floats stay floats; ints and "p/q" strings become Fractions."""
    if isinstance(raw, float):
        return raw
    return require_number(raw, path)


def _parse_table(raw: Any, rows: int, cols: int, path: str) -> Table:
    matrix = require_list(raw, path)
    if len(matrix) != rows:
        raise ShapeMismatch(f"expected {rows} rows, got {len(matrix)}", path)
    parsed = []
    for r, row in enumerate(matrix):
        row = require_list(row, f"{path}/{r}")
        if len(row) != cols:
            raise ShapeMismatch(f"expected {cols} columns, got {len(row)}", f"{path}/{r}")
        parsed.append(tuple(_parse_number(v, f"{path}/{r}/{c}") for c, v in enumerate(row)))
    return tuple(parsed)


# ============================================================================
# DOMAIN TYPES
# ============================================================================


@dataclass(frozen=True)
class PrepareMeasureData:
    """Per-hyperedge source-measurement tables.

    Attributes:
        edge_tables: One |e| x |e| table p(m_e, s_e | M_e, S_e) per hyperedge.
        special_tables: Optional |e| x 2 tables p(m_e, s_* | M_e, S_*).
    """

    edge_tables: Tuple[Table, ...]
    special_tables: Optional[Tuple[Table, ...]] = None

    @classmethod
    def from_raw(cls, H: ContextualityScenario, raw: Any, tolerance: float = 1e-9) -> "PrepareMeasureData":
        """Parse ``{"edges": [{"table": ...}], "special": [...]}`` against H.

        Raises:
            MissingEdgeData: If some hyperedge has no table.
            ShapeMismatch: If a table does not match its hyperedge size.
            SchemaViolation: If a table is not a probability distribution.
        """
        raw = require_object(raw)
        edges = require_list(require_key(raw, "edges"), "/edges")
        if len(edges) < H.n_hyperedges:
            raise MissingEdgeData(
                f"data covers {len(edges)} of {H.n_hyperedges} hyperedges",
                pointer("edges", len(edges)),
            )
        if len(edges) > H.n_hyperedges:
            raise ShapeMismatch(f"data has {len(edges)} tables for {H.n_hyperedges} hyperedges", "/edges")
        tables = []
        for e, (entry, edge) in enumerate(zip(edges, H.hyperedges)):
            path = pointer("edges", e, "table")
            table = _parse_table(require_key(require_object(entry, pointer("edges", e)), "table", pointer("edges", e)), len(edge), len(edge), path)
            check_distribution([v for row in table for v in row], path, tolerance)
            tables.append(table)

        special = None
        if raw.get("special") is not None:
            entries = require_list(raw["special"], "/special")
            if len(entries) != H.n_hyperedges:
                raise MissingEdgeData(f"special-source data covers {len(entries)} of {H.n_hyperedges} hyperedges", "/special")
            special = []
            for e, (entry, edge) in enumerate(zip(entries, H.hyperedges)):
                path = pointer("special", e)
                table = _parse_table(entry, len(edge), 2, path)
                check_distribution([v for row in table for v in row], path, tolerance)
                special.append(table)
            special = tuple(special)
        return cls(tuple(tables), special)

    def to_dict(self) -> Dict[str, Any]:
        def render(table: Table) -> List[List[Any]]:
            return [[number_to_json(v) if isinstance(v, Fraction) else float(v) for v in row] for row in table]

        document: Dict[str, Any] = {"edges": [{"table": render(t)} for t in self.edge_tables]}
        if self.special_tables is not None:
            document["special"] = [render(t) for t in self.special_tables]
        return document

    def p0(self) -> Any:
        """p(s_* = 0 | S_*) read from the first hyperedge's special table."""
        if self.special_tables is None:
            raise MissingSpecialSource("data has no special-source tables", "/special")
        return sum(row[0] for row in self.special_tables[0])


def mix_data(a: PrepareMeasureData, b: PrepareMeasureData, t: Any) -> PrepareMeasureData:
    """(1 - t) a + t b, table by table."""

    def blend(x: Table, y: Table) -> Table:
        return tuple(tuple((1 - t) * u + t * v for u, v in zip(rx, ry)) for rx, ry in zip(x, y))

    tables = tuple(blend(x, y) for x, y in zip(a.edge_tables, b.edge_tables))
    special = None
    if a.special_tables is not None and b.special_tables is not None:
        special = tuple(blend(x, y) for x, y in zip(a.special_tables, b.special_tables))
    return PrepareMeasureData(tables, special)


def diagonal_data(H: ContextualityScenario) -> PrepareMeasureData:
    """Perfectly correlated data: p(m, s) = delta_{m,s} / |e|."""
    return PrepareMeasureData(
        tuple(
            tuple(tuple(Fraction(int(m == s), len(e)) for s in range(len(e))) for m in range(len(e)))
            for e in H.hyperedges
        )
    )


def uniform_data(H: ContextualityScenario) -> PrepareMeasureData:
    """Uncorrelated data: p(m, s) = 1 / |e|^2."""
    return PrepareMeasureData(
        tuple(tuple(tuple(Fraction(1, len(e) ** 2) for _ in e) for _ in e) for e in H.hyperedges)
    )


@dataclass
class WitnessReport:
    """Witness evaluation: ``lhs`` against ``bound``, violated when margin > 1e-12."""

    kind: str
    corr: Any
    beta: Any
    bound: Any
    lhs: Any
    violated: bool
    margin: float
    extras: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        document = {
            "kind": self.kind,
            "corr": number_to_json(self.corr),
            "beta": number_to_json(self.beta),
            "bound": number_to_json(self.bound),
            "lhs": number_to_json(self.lhs),
            "violated": self.violated,
            "margin": self.margin,
        }
        document.update({k: number_to_json(v) for k, v in self.extras.items()})
        return document


# ============================================================================
# WITNESSES
# ============================================================================


def corr_value(H: ContextualityScenario, q: EdgeDistribution, data: PrepareMeasureData) -> Any:
    """Corr = sum_e q_e sum_m p(m_e = m, s_e = m | M_e, S_e).

    Raises:
        MissingEdgeData: If data has fewer tables than H has hyperedges.
    """
    if len(data.edge_tables) < H.n_hyperedges:
        raise MissingEdgeData(f"data covers {len(data.edge_tables)} of {H.n_hyperedges} hyperedges")
    return sum(
        q_e * sum(table[m][m] for m in range(len(table)))
        for q_e, table in zip(q.weights, data.edge_tables)
    )


def _report(kind: str, corr: Any, beta: Any, bound: Any, lhs: Any, tolerance: float, **extras) -> WitnessReport:
    margin = float(lhs - bound)
    return WitnessReport(kind, corr, beta, bound, lhs, margin > tolerance, margin, extras)


def logical_witness(
    H: ContextualityScenario,
    q: EdgeDistribution,
    data: PrepareMeasureData,
    beta: Optional[Any] = None,
    tolerances: Optional[ToleranceConfig] = None,
) -> WitnessReport:
    """Evaluate Corr <= beta(H,q).

    Args:
        beta: Precomputed beta(H,q); computed from the model polytope if None.

    Raises:
        BetaNotBelowOne: If beta(H,q) >= 1 (the inequality is trivial).
    """
    tolerances = tolerances or ToleranceConfig()
    if beta is None:
        beta = weighted_max_predictability(H, q).value
    if beta >= 1:
        raise BetaNotBelowOne(f"beta(H,q) = {beta} is not below 1", {"beta": number_to_json(beta)})
    corr = corr_value(H, q, data)
    report = _report("logical", corr, beta, beta, corr, tolerances.witness)
    logger.info(f"Logical witness: Corr = {float(corr):.6f} vs beta = {beta} (violated={report.violated})")
    return report


def statistical_bound(alpha: Any, alpha_star: Any, beta: Any, p0: Any, corr: Any) -> Any:
    """alpha + (alpha* - alpha) / p0 * (1 - Corr) / (1 - beta).

    Example:
        >>> statistical_bound(2, Fraction(5, 2), Fraction(1, 2), Fraction(1, 2), Fraction(9, 10))
        Fraction(11, 5)
    """
    if p0 == 0:
        raise ZeroP0("special-source marginal p_0 is zero")
    if beta >= 1:
        raise BetaNotBelowOne(f"beta(H,q) = {beta} is not below 1")
    return alpha + (alpha_star - alpha) / p0 * (1 - corr) / (1 - beta)


def statistical_witness(
    H: ContextualityScenario,
    q: EdgeDistribution,
    weights: Optional[Sequence[Any]],
    data: PrepareMeasureData,
    alpha: Optional[Any] = None,
    alpha_star: Optional[Any] = None,
    beta: Optional[Any] = None,
    tolerances: Optional[ToleranceConfig] = None,
) -> WitnessReport:
    """Evaluate R <= alpha + (alpha* - alpha)/p0 * (1 - Corr)/(1 - beta).

    R = sum_v w_v p(m_e = v, s_* = 0 | M_e, S_*) / p0, read from the first
    hyperedge containing v. Invariants not supplied are computed on O(H).

    Raises:
        MissingSpecialSource: If data carries no special-source tables.
        ZeroP0: If p(s_* = 0 | S_*) is zero.
        BetaNotBelowOne: If beta(H,q) >= 1.
    """
    tolerances = tolerances or ToleranceConfig()
    if data.special_tables is None:
        raise MissingSpecialSource("statistical witness needs special-source data", "/special")
    if weights is None:
        weights = [1] * H.n_vertices
    p0 = data.p0()
    if p0 == 0:
        raise ZeroP0("special-source marginal p_0 is zero", "/special/0")
    for e, table in enumerate(data.special_tables[1:], start=1):
        if abs(float(sum(row[0] for row in table) - p0)) > 1e-9:
            logger.warning(f"Special-source marginal on hyperedge {e} differs from p_0 = {float(p0)}")

    G = orthogonality_graph(H, weights)
    if alpha is None:
        alpha = independence_number(G).value
    if alpha_star is None:
        alpha_star = fractional_packing(G).value
    if beta is None:
        beta = weighted_max_predictability(H, q).value

    lhs = 0
    for v, w in zip(H.vertices, weights):
        e = H.edges_containing(v)[0]
        m = H.hyperedges[e].index(v)
        lhs += w * data.special_tables[e][m][0]
    lhs = lhs / p0

    corr = corr_value(H, q, data)
    bound = statistical_bound(alpha, alpha_star, beta, p0, corr)
    report = _report(
        "statistical", corr, beta, bound, lhs, tolerances.witness,
        alpha=alpha, alpha_star=alpha_star, p0=p0,
    )
    logger.info(f"Statistical witness: R = {float(lhs):.6f} vs bound {float(bound):.6f} (violated={report.violated})")
    return report


# ============================================================================
# ONE-SHOT COMMUNICATION
# ============================================================================


def _check_state(rho: np.ndarray, tolerance: float = 1e-10) -> None:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidState(f"state must be a square matrix, got shape {rho.shape}", "/state")
    if not np.allclose(rho, rho.conj().T, atol=tolerance):
        raise InvalidState("state is not Hermitian", "/state")
    if abs(np.trace(rho).real - 1.0) > tolerance:
        raise InvalidState(f"state has trace {np.trace(rho).real}, expected 1", "/state")
    if np.linalg.eigvalsh(rho).min() < -tolerance:
        raise InvalidState("state is not positive semidefinite", "/state")


def _check_povm(effects: Sequence[np.ndarray], dimension: int, path: str, tolerance: float = 1e-10) -> None:
    total = np.zeros((dimension, dimension), dtype=complex)
    for k, E in enumerate(effects):
        if E.shape != (dimension, dimension):
            raise InvalidMeasurement(f"effect has shape {E.shape}, expected ({dimension}, {dimension})", f"{path}/{k}")
        if not np.allclose(E, E.conj().T, atol=tolerance) or np.linalg.eigvalsh(E).min() < -tolerance:
            raise InvalidMeasurement("effect is not positive semidefinite", f"{path}/{k}")
        total = total + E
    if not np.allclose(total, np.eye(dimension), atol=tolerance):
        raise InvalidMeasurement("effects do not sum to the identity", path)


@dataclass
class OneShotTask:
    """Entanglement-assisted one-shot transmission over a classical channel.

    Attributes:
        channel: |X| x |Y| array with rows N(. | x).
        prior: Message distribution p(m).
        state: Shared state on A (dimension dim_a) tensor B.
        dim_a: Dimension of Alice's system.
        encodings: For each message m, |X| projectors P^m_x on A.
        decodings: For each channel output y, |M| effects D^y_m' on B.
    """

    channel: np.ndarray
    prior: np.ndarray
    state: np.ndarray
    dim_a: int
    encodings: List[List[np.ndarray]]
    decodings: List[List[np.ndarray]]

    def __post_init__(self):
        self.channel = np.asarray(self.channel, dtype=float)
        self.prior = np.asarray(self.prior, dtype=float)
        self.state = np.asarray(self.state, dtype=complex)
        self.encodings = [[np.asarray(P, dtype=complex) for P in enc] for enc in self.encodings]
        self.decodings = [[np.asarray(D, dtype=complex) for D in dec] for dec in self.decodings]
        n_x, n_y = self.channel.shape
        for x in range(n_x):
            check_distribution(list(self.channel[x]), pointer("channel", x), 1e-12)
        check_distribution(list(self.prior), "/prior", 1e-12)
        _check_state(self.state)
        dim_b = self.state.shape[0] // self.dim_a
        if self.dim_a * dim_b != self.state.shape[0]:
            raise InvalidState(f"state dimension {self.state.shape[0]} is not a multiple of {self.dim_a}", "/state")
        if len(self.encodings) != len(self.prior):
            raise SchemaViolation("one encoding per message is required", "/encodings")
        if len(self.decodings) != n_y:
            raise SchemaViolation("one decoding per channel output is required", "/decodings")
        for m, enc in enumerate(self.encodings):
            if len(enc) != n_x:
                raise SchemaViolation(f"encoding needs {n_x} outcomes", pointer("encodings", m))
            _check_povm(enc, self.dim_a, pointer("encodings", m))
            for x, P in enumerate(enc):
                if not np.allclose(P @ P, P, atol=1e-10):
                    raise NonProjectiveEncoding("encoding element is not a projector", pointer("encodings", m, x))
        for y, dec in enumerate(self.decodings):
            if len(dec) != len(self.prior):
                raise SchemaViolation("decoding needs one effect per message", pointer("decodings", y))
            _check_povm(dec, dim_b, pointer("decodings", y))

    @property
    def dim_b(self) -> int:
        return self.state.shape[0] // self.dim_a


def _conditional_state_b(state: np.ndarray, projector: np.ndarray, dim_a: int, dim_b: int) -> Tuple[float, np.ndarray]:
    """Probability of Alice's projector and Bob's normalized conditional state."""
    P = np.kron(projector, np.eye(dim_b))
    post = P @ state @ P
    probability = float(np.trace(post).real)
    if probability <= 1e-15:
        return 0.0, np.zeros((dim_b, dim_b), dtype=complex)
    reduced = np.trace(post.reshape(dim_a, dim_b, dim_a, dim_b), axis1=0, axis2=2)
    return probability, reduced / probability


def _parse_matrix(raw: Any, path: str) -> np.ndarray:
    rows = require_list(raw, path, min_length=1)
    return np.array(
        [
            [require_complex(v, f"{path}/{r}/{c}") for c, v in enumerate(require_list(row, f"{path}/{r}"))]
            for r, row in enumerate(rows)
        ]
    )


def parse_one_shot_task(raw: Any) -> OneShotTask:
    """Parse ``{"channel", "prior", "dim_a", "state", "encodings", "decodings"}``.

    Matrices are lists of rows; complex entries are [re, im] pairs.
    """
    raw = require_object(raw)
    channel = [
        [float(_parse_number(v, f"/channel/{x}/{y}")) for y, v in enumerate(require_list(row, f"/channel/{x}"))]
        for x, row in enumerate(require_list(require_key(raw, "channel"), "/channel"))
    ]
    prior = [float(_parse_number(v, f"/prior/{m}")) for m, v in enumerate(require_list(require_key(raw, "prior"), "/prior"))]
    encodings = [
        [_parse_matrix(P, pointer("encodings", m, x)) for x, P in enumerate(require_list(enc, pointer("encodings", m)))]
        for m, enc in enumerate(require_list(require_key(raw, "encodings"), "/encodings"))
    ]
    decodings = [
        [_parse_matrix(D, pointer("decodings", y, k)) for k, D in enumerate(require_list(dec, pointer("decodings", y)))]
        for y, dec in enumerate(require_list(require_key(raw, "decodings"), "/decodings"))
    ]
    return OneShotTask(
        channel=np.array(channel),
        prior=np.array(prior),
        state=_parse_matrix(require_key(raw, "state"), "/state"),
        dim_a=require_int(require_key(raw, "dim_a"), "/dim_a", minimum=1),
        encodings=encodings,
        decodings=decodings,
    )


def one_shot_success(task: OneShotTask) -> float:
    """Success probability of the one-shot task.

    S = sum_m p(m) sum_x p(x|m) sum_y N(y|x) p(m' = m | y, conditional state),
    with p(x|m) from Alice's projective measurement and Bob's state
    conditioned on her outcome.
    """
    total = 0.0
    n_x, n_y = task.channel.shape
    for m, p_m in enumerate(task.prior):
        if p_m == 0:
            continue
        for x in range(n_x):
            p_x, rho_b = _conditional_state_b(task.state, task.encodings[m][x], task.dim_a, task.dim_b)
            if p_x == 0.0:
                continue
            for y in range(n_y):
                if task.channel[x, y] == 0:
                    continue
                guess = float(np.trace(task.decodings[y][m] @ rho_b).real)
                total += p_m * p_x * task.channel[x, y] * guess
    return float(total)


def classical_one_shot_value(channel: np.ndarray, prior: Sequence[float]) -> Tuple[float, List[int]]:
    """Best deterministic classical strategy by exhaustive search over encodings.

    For a fixed encoding f the best decoder guesses, for each output y, the
    message maximizing p(m) N(y | f(m)).

    Returns:
        (success probability, optimal encoding as a list f[m] = x).
    """
    channel = np.asarray(channel, dtype=float)
    prior = np.asarray(prior, dtype=float)
    n_x, _ = channel.shape
    best_value, best_encoding = -1.0, None
    for encoding in product(range(n_x), repeat=len(prior)):
        scores = prior[:, None] * channel[list(encoding), :]
        value = float(scores.max(axis=0).sum())
        if value > best_value + 1e-15:
            best_value, best_encoding = value, list(encoding)
    return best_value, best_encoding


def classical_strategy_value(channel: np.ndarray, prior: Sequence[float], encoding: Sequence[int], decoding: Sequence[int]) -> float:
    """Success probability of one deterministic encoding/decoding pair."""
    channel = np.asarray(channel, dtype=float)
    return float(sum(p * channel[encoding[m], y] for m, p in enumerate(prior) for y in range(channel.shape[1]) if decoding[y] == m))


def pentagon_channel() -> np.ndarray:
    """Five inputs, each spread over two outputs so that x and x+1 are confusable."""
    channel = np.zeros((5, 5))
    for x in range(5):
        channel[x, x] = 0.5
        channel[x, (x + 1) % 5] = 0.5
    return channel
