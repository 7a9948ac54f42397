"""Graph and hypergraph invariants bounding contextuality witnesses.

Computes the independence number alpha(G,w) (exact branch and bound),
the Lovasz theta number theta(G,w) (SDP), the fractional packing number
alpha*(G,w) (LP over maximal cliques), the weighted max-predictability
beta(H,q) (maximum over the indeterministic vertices of the model
polytope) and the consistent-exclusivity check on probabilistic models.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging

import networkx as nx
import numpy as np

from src.config_loader import EnumerationConfig, SdpConfig, ToleranceConfig
from src.exceptions import NoIndeterministicVertices, TooLarge
from src.optimization import (
    LinearProgram,
    ProbabilisticModel,
    SemidefiniteProgram,
    enumerate_model_vertices,
    sdp_maximize,
    simplex_maximize,
)
from src.scenarios import ContextualityScenario, WeightedGraph, orthogonality_graph
from src.utils import is_exact, number_to_json
from src.validators import SchemaViolation, pointer, require_list, require_number

logger = logging.getLogger(__name__)


# ============================================================================
# DOMAIN TYPES
# ============================================================================


@dataclass(frozen=True)
class EdgeDistribution:
    """Probability weights q_e keyed to a scenario's hyperedge list."""

    weights: Tuple[Any, ...]

    @classmethod
    def uniform(cls, H: ContextualityScenario) -> "EdgeDistribution":
        return cls(tuple(Fraction(1, H.n_hyperedges) for _ in H.hyperedges))

    @classmethod
    def concentrated(cls, H: ContextualityScenario, edge_index: int) -> "EdgeDistribution":
        """All weight on one hyperedge."""
        return cls(tuple(Fraction(int(e == edge_index)) for e in range(H.n_hyperedges)))

    @classmethod
    def from_raw(cls, H: ContextualityScenario, raw: Any, tolerance: float = 1e-12) -> "EdgeDistribution":
        """Parse a list of per-hyperedge weights.

        Raises:
            SchemaViolation: If the length, signs or total are wrong.
        """
        values = require_list(raw, "/q")
        if len(values) != H.n_hyperedges:
            raise SchemaViolation(f"{len(values)} weights for {H.n_hyperedges} hyperedges", "/q")
        parsed = tuple(require_number(v, pointer("q", i)) for i, v in enumerate(values))
        if any(q < 0 for q in parsed):
            raise SchemaViolation("hyperedge weights must be nonnegative", "/q")
        if abs(float(sum(parsed)) - 1.0) > tolerance:
            raise SchemaViolation(f"hyperedge weights sum to {float(sum(parsed))}, expected 1", "/q")
        return cls(parsed)

    def mix(self, other: "EdgeDistribution", t: Any = Fraction(1, 2)) -> "EdgeDistribution":
        return EdgeDistribution(tuple((1 - t) * a + t * b for a, b in zip(self.weights, other.weights)))


@dataclass
class IndependenceResult:
    value: Any
    independent_set: List[str]


@dataclass
class ThetaResult:
    value: float
    residuals: Dict[str, float]


@dataclass
class PackingResult:
    value: Any
    model: List[Any]
    cliques: List[List[str]]


@dataclass
class BetaResult:
    """beta(H,q) together with an indeterministic vertex attaining it."""

    value: Any
    vertex: ProbabilisticModel
    n_indeterministic: int


@dataclass
class ExclusivityResult:
    """Consistent-exclusivity verdict with the worst clique found."""

    passes: bool
    clique: List[str]
    total: Any


@dataclass
class InvariantReport:
    """alpha, theta, alpha* on O(H) and beta(H,q) with solver residuals."""

    alpha: Any
    theta: float
    alpha_star: Any
    beta: Optional[Any]
    independent_set: List[str]
    residuals: Dict[str, float] = field(default_factory=dict)
    sandwich_holds: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": number_to_json(self.alpha),
            "theta": self.theta,
            "alpha_star": number_to_json(self.alpha_star),
            "beta": None if self.beta is None else number_to_json(self.beta),
            "exact": {
                "alpha": is_exact(self.alpha),
                "alpha_star": is_exact(self.alpha_star),
                "beta": self.beta is not None and is_exact(self.beta),
            },
            "independent_set": self.independent_set,
            "sdp": self.residuals,
            "sandwich_holds": self.sandwich_holds,
        }


# ============================================================================
# INDEPENDENCE NUMBER
# ============================================================================


def _clique_cover_bound(candidates: int, order: List[int], adjacency: List[int], weights: List[Any]) -> Any:
    """Greedy partition of the candidates into cliques; sum of clique maxima."""
    bound = 0
    remaining = candidates
    for v in order:
        if not remaining >> v & 1:
            continue
        # v has the largest weight among the remaining vertices
        clique = 1 << v
        common = adjacency[v] & remaining
        for u in order:
            if common >> u & 1:
                clique |= 1 << u
                common &= adjacency[u]
        remaining &= ~clique
        bound += weights[v]
    return bound


def independence_number(G: WeightedGraph, config: Optional[EnumerationConfig] = None) -> IndependenceResult:
    """Exact weighted independence number by branch and bound.

    Args:
        G: Weighted graph with at most ``max_alpha_vertices`` vertices.
        config: Size bounds.

    Returns:
        IndependenceResult with alpha(G,w) and a maximizing independent set.

    Raises:
        TooLarge: If G has too many vertices.

    Example:
        >>> pentagon = WeightedGraph.from_edges("abcde", [("a","b"),("b","c"),("c","d"),("d","e"),("e","a")])
        >>> independence_number(pentagon).value
        2
    """
    config = config or EnumerationConfig()
    n = G.n_vertices
    if n > config.max_alpha_vertices:
        raise TooLarge(f"independence number limited to {config.max_alpha_vertices} vertices", {"vertices": n})
    adjacency = G.adjacency_masks()
    weights = list(G.weights)
    order = sorted(range(n), key=lambda v: (-weights[v], v))
    best = {"value": 0, "set": 0}

    def search(candidates: int, chosen: int, current: Any) -> None:
        if current > best["value"]:
            best["value"], best["set"] = current, chosen
        if not candidates:
            return
        if current + _clique_cover_bound(candidates, order, adjacency, weights) <= best["value"]:
            return
        v = next(u for u in order if candidates >> u & 1)
        search(candidates & ~adjacency[v] & ~(1 << v), chosen | 1 << v, current + weights[v])
        search(candidates & ~(1 << v), chosen, current)

    search((1 << n) - 1, 0, 0)
    members = [G.vertices[v] for v in range(n) if best["set"] >> v & 1]
    logger.debug(f"alpha = {best['value']} attained by {members}")
    return IndependenceResult(best["value"], members)


def independence_number_bruteforce(G: WeightedGraph, max_vertices: int = 25) -> Any:
    """Enumerate every independent set; reference oracle for small graphs."""
    if G.n_vertices > max_vertices:
        raise TooLarge(f"exhaustive independence scan limited to {max_vertices} vertices")
    adjacency = G.adjacency_masks()
    weights = list(G.weights)
    best = 0

    def extend(start: int, forbidden: int, current: Any) -> None:
        nonlocal best
        best = max(best, current)
        for v in range(start, G.n_vertices):
            if not forbidden >> v & 1:
                extend(v + 1, forbidden | adjacency[v] | 1 << v, current + weights[v])

    extend(0, 0, 0)
    return best


# ============================================================================
# LOVASZ THETA
# ============================================================================


def lovasz_theta(
    G: WeightedGraph,
    sdp_config: Optional[SdpConfig] = None,
    tolerances: Optional[ToleranceConfig] = None,
    config: Optional[EnumerationConfig] = None,
) -> ThetaResult:
    """Weighted Lovasz theta number.

    Solves ``max sum_ij sqrt(w_i w_j) B_ij`` over PSD B with ``Tr B = 1`` and
    ``B_ij = 0`` for every edge {i, j}.

    Raises:
        TooLarge: If G has more than ``max_theta_vertices`` vertices.
        NotConverged: If the SDP solver does not converge.
    """
    config = config or EnumerationConfig()
    n = G.n_vertices
    if n > config.max_theta_vertices:
        raise TooLarge(f"theta limited to {config.max_theta_vertices} vertices", {"vertices": n})
    root = np.sqrt(np.array([float(w) for w in G.weights]))
    C = np.outer(root, root)
    index = {v: i for i, v in enumerate(G.vertices)}
    zeros = {tuple(sorted(index[v] for v in edge)) for edge in G.edges}
    sdp = SemidefiniteProgram(n, C, [(np.eye(n), 1.0)], zeros)
    result = sdp_maximize(sdp, sdp_config, tolerances)
    logger.debug(f"theta = {result.value:.8f} ({result.iterations} iterations)")
    return ThetaResult(result.value, result.residuals())


# ============================================================================
# FRACTIONAL PACKING
# ============================================================================


def maximal_cliques(G: WeightedGraph) -> List[List[str]]:
    """Maximal cliques of G in canonical order."""
    cliques = [sorted(c) for c in nx.find_cliques(G.to_networkx())]
    return sorted(cliques, key=lambda c: (len(c), c))


def fractional_packing(G: WeightedGraph, config: Optional[EnumerationConfig] = None) -> PackingResult:
    """alpha*(G,w): max sum w_v p(v) s.t. p >= 0 and every maximal clique sums to <= 1.

    Solved exactly when the weights are rational.

    Raises:
        TooLarge: If G has more than ``max_clique_vertices`` vertices.
    """
    config = config or EnumerationConfig()
    n = G.n_vertices
    if n > config.max_clique_vertices:
        raise TooLarge(f"clique enumeration limited to {config.max_clique_vertices} vertices", {"vertices": n})
    cliques = maximal_cliques(G)
    index = {v: i for i, v in enumerate(G.vertices)}
    exact = all(is_exact(w) for w in G.weights)
    constraints = []
    for clique in cliques:
        row = [0] * n
        for v in clique:
            row[index[v]] = 1
        constraints.append((row, "<=", 1))
    solution = simplex_maximize(LinearProgram(list(G.weights), constraints, exact=exact))
    logger.debug(f"alpha* = {solution.value} over {len(cliques)} maximal cliques")
    return PackingResult(solution.value, solution.x, cliques)


# ============================================================================
# WEIGHTED MAX-PREDICTABILITY
# ============================================================================


def predictability(model: ProbabilisticModel, q: EdgeDistribution) -> Any:
    """sum_e q_e max_{v in e} p(v) for one model."""
    index = model.scenario.vertex_index()
    return sum(
        q_e * max(model.values[index[v]] for v in edge)
        for q_e, edge in zip(q.weights, model.scenario.hyperedges)
    )


def weighted_max_predictability(
    H: ContextualityScenario,
    q: EdgeDistribution,
    vertices: Optional[List[ProbabilisticModel]] = None,
    config: Optional[EnumerationConfig] = None,
) -> BetaResult:
    """beta(H,q): maximum of sum_e q_e max_{v in e} p(v) over indeterministic models.

    The objective is a maximum of linear functionals, hence convex, so its
    maximum over the convex hull of the indeterministic vertices is attained
    at one of those vertices.

    Args:
        H: Valid scenario.
        q: Hyperedge weights.
        vertices: Precomputed polytope vertices (enumerated when None).
        config: Size bounds of the vertex enumeration.

    Raises:
        NoIndeterministicVertices: If every polytope vertex is deterministic.
        TooLarge: If the polytope cannot be enumerated.
    """
    if len(q.weights) != H.n_hyperedges:
        raise SchemaViolation(f"{len(q.weights)} weights for {H.n_hyperedges} hyperedges", "/q")
    if vertices is None:
        vertices = enumerate_model_vertices(H, config)
    indeterministic = [m for m in vertices if not m.deterministic]
    if not indeterministic:
        raise NoIndeterministicVertices(f"'{H.name or 'scenario'}' has only deterministic vertices")
    best_value, best_vertex = None, None
    for model in indeterministic:
        value = predictability(model, q)
        if best_value is None or value > best_value:
            best_value, best_vertex = value, model
    logger.info(f"beta = {best_value} over {len(indeterministic)} indeterministic vertices")
    return BetaResult(best_value, best_vertex, len(indeterministic))


def minimize_beta(
    H: ContextualityScenario,
    candidates: Sequence[EdgeDistribution],
    config: Optional[EnumerationConfig] = None,
) -> Tuple[EdgeDistribution, Any]:
    """Pick the candidate q with the smallest beta(H,q) (first one on ties)."""
    vertices = enumerate_model_vertices(H, config)
    scored = [(weighted_max_predictability(H, q, vertices).value, i) for i, q in enumerate(candidates)]
    value, index = min(scored)
    return candidates[index], value


# ============================================================================
# CONSISTENT EXCLUSIVITY
# ============================================================================


def consistent_exclusivity_check(
    H: ContextualityScenario, p: ProbabilisticModel, tolerance: Optional[float] = None
) -> ExclusivityResult:
    """Check that every clique of O(H) carries total probability at most 1.

    Only maximal cliques are scanned (p >= 0, so they dominate). The
    reported clique is the one with the largest sum, smallest in canonical
    order on ties.
    """
    tol = ToleranceConfig().model if tolerance is None else tolerance
    G = orthogonality_graph(H)
    index = H.vertex_index()
    worst_clique, worst_total = None, None
    for clique in maximal_cliques(G):
        total = sum(p.values[index[v]] for v in clique)
        if worst_total is None or total > worst_total:
            worst_clique, worst_total = clique, total
    passes = float(worst_total) <= 1 + tol
    if not passes:
        logger.info(f"Consistent exclusivity fails on clique {worst_clique} (sum {worst_total})")
    return ExclusivityResult(passes, worst_clique, worst_total)


def csw_value(model: ProbabilisticModel, weights: Optional[Sequence[Any]] = None) -> Any:
    """sum_v w_v p(v) of a model (weights default to 1)."""
    if weights is None:
        weights = [1] * len(model.values)
    return sum(w * p for w, p in zip(weights, model.values))


def invariant_report(
    H: ContextualityScenario,
    weights: Optional[Sequence[Any]] = None,
    q: Optional[EdgeDistribution] = None,
    sdp_config: Optional[SdpConfig] = None,
    tolerances: Optional[ToleranceConfig] = None,
    config: Optional[EnumerationConfig] = None,
) -> InvariantReport:
    """Compute alpha, theta and alpha* on O(H), plus beta(H,q) when q is given.

    A beta request on a scenario whose polytope has only deterministic
    vertices leaves ``beta`` unset and logs a warning.
    """
    G = orthogonality_graph(H, weights)
    alpha = independence_number(G, config)
    theta = lovasz_theta(G, sdp_config, tolerances, config)
    alpha_star = fractional_packing(G, config)
    beta = None
    if q is not None:
        try:
            beta = weighted_max_predictability(H, q, config=config).value
        except NoIndeterministicVertices as e:
            logger.warning(f"beta undefined: {e}")

    slack = 1e-4
    sandwich = float(alpha.value) <= theta.value + slack and theta.value <= float(alpha_star.value) + slack
    if not sandwich:
        logger.warning(
            f"alpha <= theta <= alpha* violated: {float(alpha.value)}, {theta.value}, {float(alpha_star.value)}"
        )
    return InvariantReport(
        alpha=alpha.value,
        theta=theta.value,
        alpha_star=alpha_star.value,
        beta=beta,
        independent_set=alpha.independent_set,
        residuals=theta.residuals,
        sandwich_holds=sandwich,
    )
