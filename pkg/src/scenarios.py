"""Contextuality scenarios, joint measurability structures and KS colourings.

A contextuality scenario is a hypergraph whose vertices are measurement
outcomes and whose hyperedges are measurements (complete sets of mutually
exclusive outcomes). A joint measurability structure is a downward-closed
hypergraph whose hyperedges are the compatible subsets of a set of
measurements. This module validates both from their JSON documents, builds
orthogonality graphs, searches for KS colourings and finds the minimal
incompatible subsets of a structure.
"""

from dataclasses import dataclass
from itertools import combinations
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple
import logging
import random

import networkx as nx
import numpy as np

from src.config_loader import EnumerationConfig
from src.exceptions import TooLarge, TrivialStructure
from src.parallel_runner import ParallelRunner
from src.validators import (
    EmptyHyperedge,
    OrphanVertex,
    SchemaViolation,
    UnknownName,
    UnknownVertex,
    pointer,
    require_key,
    require_list,
    require_number,
    require_object,
    require_vertex_ids,
)

logger = logging.getLogger(__name__)


# ============================================================================
# DOMAIN TYPES
# ============================================================================


@dataclass(frozen=True)
class ContextualityScenario:
    """Hypergraph H with vertices V(H) (outcomes) and hyperedges E(H) (measurements).

    Vertices are stored in canonical (lexicographic) order; the vertices of
    each hyperedge are sorted as well, while the order of the hyperedges is
    the order of the source document so that data tables can be keyed by
    hyperedge index.
    """

    vertices: Tuple[str, ...]
    hyperedges: Tuple[Tuple[str, ...], ...]
    name: str = ""

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_hyperedges(self) -> int:
        return len(self.hyperedges)

    def vertex_index(self) -> Dict[str, int]:
        """Map vertex id to its position in the canonical order."""
        return {v: i for i, v in enumerate(self.vertices)}

    def edge_indices(self) -> List[List[int]]:
        """Hyperedges as lists of canonical vertex positions."""
        index = self.vertex_index()
        return [[index[v] for v in edge] for edge in self.hyperedges]

    def edges_containing(self, vertex: str) -> List[int]:
        """Indices of the hyperedges that contain a vertex."""
        return [i for i, edge in enumerate(self.hyperedges) if vertex in edge]

    def with_hyperedge(self, edge: Iterable[str]) -> "ContextualityScenario":
        """Return a copy with one more hyperedge (vertices must already exist)."""
        return validate_scenario(
            {
                "name": self.name,
                "vertices": list(self.vertices),
                "hyperedges": [list(e) for e in self.hyperedges] + [list(edge)],
            }
        )

    def to_dict(self) -> Dict[str, Any]:
        """Return the scenario as a JSON document."""
        document: Dict[str, Any] = {
            "vertices": list(self.vertices),
            "hyperedges": [list(e) for e in self.hyperedges],
        }
        if self.name:
            document["name"] = self.name
        return document


@dataclass(frozen=True)
class WeightedGraph:
    """Graph G with nonnegative vertex weights w_v."""

    vertices: Tuple[str, ...]
    edges: FrozenSet[FrozenSet[str]]
    weights: Tuple[Any, ...]

    def __post_init__(self):
        known = set(self.vertices)
        for edge in self.edges:
            if not edge <= known or len(edge) != 2:
                raise UnknownVertex(f"edge {sorted(edge)} references unknown vertices")
        if len(self.weights) != len(self.vertices):
            raise SchemaViolation("one weight per vertex is required", "/weights")
        for v, w in zip(self.vertices, self.weights):
            if w < 0:
                raise SchemaViolation(f"weight of '{v}' is negative", pointer("weights", v))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def weight_of(self, vertex: str) -> Any:
        return self.weights[self.vertices.index(vertex)]

    def adjacency_masks(self) -> List[int]:
        """Neighbourhood bitmask per vertex position."""
        index = {v: i for i, v in enumerate(self.vertices)}
        masks = [0] * len(self.vertices)
        for edge in self.edges:
            a, b = sorted(index[v] for v in edge)
            masks[a] |= 1 << b
            masks[b] |= 1 << a
        return masks

    def to_networkx(self) -> nx.Graph:
        """Return a networkx graph with a ``weight`` node attribute."""
        graph = nx.Graph()
        for v, w in zip(self.vertices, self.weights):
            graph.add_node(v, weight=w)
        graph.add_edges_from(tuple(sorted(edge)) for edge in self.edges)
        return graph

    @classmethod
    def from_edges(
        cls,
        vertices: Sequence[str],
        edges: Iterable[Tuple[str, str]],
        weights: Optional[Sequence[Any]] = None,
    ) -> "WeightedGraph":
        """Build a graph from an edge list (weights default to 1)."""
        vertices = tuple(vertices)
        if weights is None:
            weights = (1,) * len(vertices)
        return cls(vertices, frozenset(frozenset(e) for e in edges), tuple(weights))


@dataclass(frozen=True)
class JointMeasurabilityStructure:
    """Downward-closed family of compatible measurement subsets.

    Attributes:
        vertices: Measurement ids in canonical order.
        compatible_sets: Every compatible subset (including singletons and the
            empty set is omitted), sorted by size then lexicographically.
        closure_added: Sets that downward closure added to the input.
    """

    vertices: Tuple[str, ...]
    compatible_sets: Tuple[FrozenSet[str], ...]
    closure_added: Tuple[FrozenSet[str], ...] = ()

    def is_compatible(self, subset: Iterable[str]) -> bool:
        subset = frozenset(subset)
        return len(subset) <= 1 or subset in set(self.compatible_sets)

    @property
    def is_trivial(self) -> bool:
        """True when the full vertex set is compatible."""
        return self.is_compatible(self.vertices)

    def maximal_compatible_sets(self) -> List[FrozenSet[str]]:
        family = list(self.compatible_sets)
        return [s for s in family if not any(s < t for t in family)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "vertices": list(self.vertices),
            "compatible": [sorted(s) for s in self.compatible_sets],
        }


@dataclass(frozen=True)
class KsColoring:
    """{0,1} assignment with exactly one 1 in every hyperedge."""

    vertices: Tuple[str, ...]
    values: Tuple[int, ...]

    def as_dict(self) -> Dict[str, int]:
        return dict(zip(self.vertices, self.values))

    def ones(self) -> List[str]:
        return [v for v, value in zip(self.vertices, self.values) if value == 1]


# ============================================================================
# SCENARIO VALIDATION
# ============================================================================


def validate_scenario(raw: Any) -> ContextualityScenario:
    """Validate a scenario document and return the canonical scenario.

    Args:
        raw: Mapping with ``vertices`` and ``hyperedges`` (optional ``name``),
            or an existing ContextualityScenario (returned re-validated).

    Returns:
        Canonicalized ContextualityScenario.

    Raises:
        SchemaViolation: If the document shape is wrong.
        EmptyHyperedge: If a hyperedge lists no vertex.
        UnknownVertex: If a hyperedge names an undeclared vertex.
        OrphanVertex: If a vertex lies in no hyperedge.

    Example:
        >>> H = validate_scenario({"vertices": ["a", "b"], "hyperedges": [["a", "b"]]})
        >>> H.n_hyperedges
        1
    """
    if isinstance(raw, ContextualityScenario):
        raw = raw.to_dict()
    raw = require_object(raw)
    vertices = require_vertex_ids(require_key(raw, "vertices"), "/vertices")
    edges_raw = require_list(require_key(raw, "hyperedges"), "/hyperedges")
    declared = set(vertices)

    hyperedges: List[Tuple[str, ...]] = []
    covered = set()
    for e_index, edge in enumerate(edges_raw):
        path = pointer("hyperedges", e_index)
        members = require_list(edge, path)
        if not members:
            raise EmptyHyperedge(f"hyperedge {e_index} is empty", path)
        if len(set(members)) != len(members):
            raise SchemaViolation(f"hyperedge {e_index} repeats a vertex", path)
        for v_index, v in enumerate(members):
            if v not in declared:
                raise UnknownVertex(f"hyperedge {e_index} names unknown vertex '{v}'", f"{path}/{v_index}")
        covered.update(members)
        hyperedges.append(tuple(sorted(members)))

    orphans = sorted(declared - covered)
    if orphans:
        raise OrphanVertex(
            f"vertices in no hyperedge: {orphans}",
            pointer("vertices", vertices.index(orphans[0])),
            {"orphans": orphans},
        )

    scenario = ContextualityScenario(
        vertices=tuple(sorted(vertices)),
        hyperedges=tuple(hyperedges),
        name=str(raw.get("name", "")),
    )
    logger.debug(
        f"Validated scenario '{scenario.name}': {scenario.n_vertices} vertices, "
        f"{scenario.n_hyperedges} hyperedges"
    )
    return scenario


def parse_vertex_weights(raw: Optional[Mapping[str, Any]], H: ContextualityScenario) -> Tuple[Any, ...]:
    """Parse a ``{vertex: weight}`` mapping; absent vertices get weight 1."""
    if raw is None:
        return (1,) * H.n_vertices
    raw = require_object(raw, "/weights")
    for v in raw:
        if v not in H.vertices:
            raise UnknownVertex(f"weight given for unknown vertex '{v}'", pointer("weights", v))
    weights = []
    for v in H.vertices:
        w = require_number(raw.get(v, 1), pointer("weights", v))
        if w < 0:
            raise SchemaViolation(f"weight of '{v}' is negative", pointer("weights", v))
        weights.append(w)
    return tuple(weights)


def orthogonality_graph(
    H: ContextualityScenario, weights: Optional[Sequence[Any]] = None
) -> WeightedGraph:
    """Build the orthogonality graph O(H).

    Two vertices are adjacent iff some hyperedge contains both.

    Args:
        H: Valid scenario.
        weights: Per-vertex weights in canonical vertex order (default all 1).

    Returns:
        WeightedGraph on V(H).
    """
    edges = set()
    for edge in H.hyperedges:
        for a, b in combinations(edge, 2):
            edges.add(frozenset((a, b)))
    if weights is None:
        weights = (1,) * H.n_vertices
    if len(weights) != H.n_vertices:
        raise SchemaViolation("one weight per vertex is required", "/weights")
    return WeightedGraph(H.vertices, frozenset(edges), tuple(weights))


# ============================================================================
# KS COLOURINGS
# ============================================================================


def _propagate(values: List[int], vertex: int, vertex_edges, edges) -> bool:
    """Set vertex to 1, zero its edge-mates and apply unit propagation.

    Returns False on a conflict (a hyperedge with two 1s or only 0s).
    """
    stack = [vertex]
    while stack:
        v = stack.pop()
        if values[v] == 1:
            continue
        if values[v] == 0:
            return False
        values[v] = 1
        touched = set()
        for e in vertex_edges[v]:
            for u in edges[e]:
                if u == v:
                    continue
                if values[u] == 1:
                    return False
                if values[u] == -1:
                    values[u] = 0
                    touched.update(vertex_edges[u])
        for e in touched:
            unknown = [u for u in edges[e] if values[u] == -1]
            if any(values[u] == 1 for u in edges[e]):
                continue
            if not unknown:
                return False
            if len(unknown) == 1:
                stack.append(unknown[0])
    return True


def _pick_edge(values: List[int], edges) -> Optional[int]:
    """Unsatisfied hyperedge with the fewest unknown vertices (lowest index on ties)."""
    best, best_count = None, None
    for e, edge in enumerate(edges):
        if any(values[u] == 1 for u in edge):
            continue
        count = sum(1 for u in edge if values[u] == -1)
        if best_count is None or count < best_count:
            best, best_count = e, count
    return best


def _dfs_colorings(task: Tuple[int, Tuple[Tuple[int, ...], ...], int, int, Optional[int]]) -> List[Tuple[int, ...]]:
    """Enumerate the colourings in one top-level branch (picklable worker)."""
    n, edges, first_edge, first_vertex, limit = task
    vertex_edges: List[List[int]] = [[] for _ in range(n)]
    for e, edge in enumerate(edges):
        for v in edge:
            vertex_edges[v].append(e)

    values = [-1] * n
    # Earlier candidates of the first hyperedge are excluded in this branch
    for v in edges[first_edge]:
        if v == first_vertex:
            break
        values[v] = 0
    found: List[Tuple[int, ...]] = []
    if not _propagate(values, first_vertex, vertex_edges, edges):
        return found

    def recurse(state: List[int]) -> bool:
        e = _pick_edge(state, edges)
        if e is None:
            found.append(tuple(0 if x == -1 else x for x in state))
            return limit is not None and len(found) >= limit
        for v in edges[e]:
            if state[v] != -1:
                continue
            child = list(state)
            if _propagate(child, v, vertex_edges, edges):
                if recurse(child):
                    return True
            # Branches are disjoint: v is 0 in the remaining siblings
            state = list(state)
            state[v] = 0
        return False

    recurse(values)
    return found


def enumerate_ks_colorings(
    H: ContextualityScenario,
    limit: Optional[int] = None,
    threads: int = 1,
    config: Optional[EnumerationConfig] = None,
) -> List[KsColoring]:
    """Enumerate KS colourings of H by depth-first search with propagation.

    Each top-level branch fixes which vertex of the first hyperedge carries
    the 1; branches are searched independently (in parallel when
    ``threads > 1``) and merged in canonical order, so the result does not
    depend on the worker count.

    Args:
        H: Valid scenario.
        limit: Maximum number of colourings per top-level branch and in total.
        threads: Worker processes.
        config: Size bounds.

    Returns:
        Colourings sorted by their value tuples; empty list certifies KS(H) = {}.

    Raises:
        TooLarge: If |V(H)| exceeds the configured bound.
    """
    config = config or EnumerationConfig()
    if H.n_vertices > config.max_ks_vertices:
        raise TooLarge(
            f"KS search limited to {config.max_ks_vertices} vertices, scenario has {H.n_vertices}",
            {"vertices": H.n_vertices, "bound": config.max_ks_vertices},
        )
    edges = tuple(tuple(e) for e in H.edge_indices())
    first_edge = 0
    tasks = [(H.n_vertices, edges, first_edge, v, limit) for v in edges[first_edge]]
    runner = ParallelRunner(threads=threads)
    branches = runner.map(_dfs_colorings, tasks)

    merged = sorted(set(c for branch in branches for c in branch), reverse=True)
    if limit is not None:
        merged = merged[:limit]
    logger.info(f"Found {len(merged)} KS colourings of '{H.name or 'scenario'}'")
    return [KsColoring(H.vertices, values) for values in merged]


def brute_force_ks_colorings(H: ContextualityScenario, max_vertices: int = 24) -> List[KsColoring]:
    """Plain 2^|V| scan used as the correctness oracle of the DFS search.

    Raises:
        TooLarge: If |V(H)| exceeds max_vertices.
    """
    n = H.n_vertices
    if n > max_vertices:
        raise TooLarge(f"brute-force scan limited to {max_vertices} vertices", {"vertices": n})
    masks = [sum(1 << v for v in edge) for edge in H.edge_indices()]
    shifts = np.arange(n, dtype=np.int64)
    found: List[Tuple[int, ...]] = []
    chunk = 1 << 16
    for start in range(0, 1 << n, chunk):
        codes = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
        ok = np.ones(codes.shape, dtype=bool)
        for mask in masks:
            hits = codes & mask
            # popcount of the masked bits equals 1 iff hits is a power of two
            ok &= (hits != 0) & ((hits & (hits - 1)) == 0)
        for code in codes[ok]:
            found.append(tuple(int(b) for b in ((int(code) >> shifts) & 1)))
    found.sort(reverse=True)
    return [KsColoring(H.vertices, values) for values in found]


def is_ks_coloring(H: ContextualityScenario, assignment: Mapping[str, int]) -> bool:
    """True iff assignment puts exactly one 1 (and otherwise 0s) on every hyperedge."""
    if any(assignment.get(v) not in (0, 1) for v in H.vertices):
        return False
    return all(sum(assignment[v] for v in edge) == 1 for edge in H.hyperedges)


# ============================================================================
# JOINT MEASURABILITY STRUCTURES
# ============================================================================


def _downward_closure(sets: Iterable[FrozenSet[str]]) -> set:
    closed = set()
    for s in sets:
        members = sorted(s)
        for size in range(1, len(members) + 1):
            for subset in combinations(members, size):
                closed.add(frozenset(subset))
    return closed


def _canonical_family(family: Iterable[FrozenSet[str]]) -> Tuple[FrozenSet[str], ...]:
    return tuple(sorted(family, key=lambda s: (len(s), sorted(s))))


def validate_jms(raw: Any) -> JointMeasurabilityStructure:
    """Validate a joint measurability document and apply downward closure.

    Closure is applied, not rejected; the sets it adds are reported in
    ``closure_added`` and logged as a warning.

    Args:
        raw: Mapping with ``vertices`` and ``compatible``.

    Returns:
        JointMeasurabilityStructure that is a fixed point of downward closure.

    Raises:
        UnknownVertex: If a compatible set names an undeclared measurement.
    """
    if isinstance(raw, JointMeasurabilityStructure):
        raw = raw.to_dict()
    raw = require_object(raw)
    vertices = require_vertex_ids(require_key(raw, "vertices"), "/vertices")
    declared = set(vertices)
    given = set()
    for s_index, entry in enumerate(require_list(require_key(raw, "compatible"), "/compatible")):
        path = pointer("compatible", s_index)
        members = require_list(entry, path)
        for m_index, v in enumerate(members):
            if v not in declared:
                raise UnknownVertex(f"compatible set {s_index} names unknown measurement '{v}'", f"{path}/{m_index}")
        if members:
            given.add(frozenset(members))
    given.update(frozenset([v]) for v in vertices)

    closed = _downward_closure(given)
    added = _canonical_family(closed - given)
    if added:
        logger.warning(f"Downward closure added {len(added)} compatible sets")
    return JointMeasurabilityStructure(
        vertices=tuple(sorted(vertices)),
        compatible_sets=_canonical_family(closed),
        closure_added=added,
    )


def specker_decomposition(
    J: JointMeasurabilityStructure, max_vertices: int = 20
) -> List[FrozenSet[str]]:
    """Return the inclusion-minimal incompatible subsets of J.

    Each returned set is an N-Specker scenario on its own vertices: it is
    incompatible while each of its proper subsets is compatible. Candidates
    of size k are grown from compatible sets of size k-1, so the scan never
    visits supersets of an incompatible set.

    Raises:
        TrivialStructure: If every subset is compatible.
        TooLarge: If |V| exceeds max_vertices.
    """
    if len(J.vertices) > max_vertices:
        raise TooLarge(f"decomposition limited to {max_vertices} measurements", {"vertices": len(J.vertices)})
    compatible = set(J.compatible_sets)
    order = {v: i for i, v in enumerate(J.vertices)}
    minimal: List[FrozenSet[str]] = []
    layer = [frozenset([v]) for v in J.vertices]
    while layer:
        next_layer = []
        for base in layer:
            top = max(order[v] for v in base)
            for v in J.vertices[top + 1:]:
                candidate = base | {v}
                if not all((candidate - {u}) in compatible for u in candidate):
                    continue
                if candidate in compatible:
                    next_layer.append(candidate)
                else:
                    minimal.append(candidate)
        layer = next_layer
    if not minimal:
        raise TrivialStructure("every subset of measurements is compatible")
    return list(_canonical_family(minimal))


# ============================================================================
# BUILT-IN SCENARIOS
# ============================================================================

GAMMA18_HYPEREDGES = [
    ["v1", "v2", "v3", "v4"],
    ["v4", "v5", "v6", "v7"],
    ["v7", "v8", "v9", "v10"],
    ["v10", "v11", "v12", "v13"],
    ["v13", "v14", "v15", "v16"],
    ["v16", "v17", "v18", "v1"],
    ["v18", "v2", "v9", "v11"],
    ["v3", "v5", "v12", "v14"],
    ["v6", "v8", "v15", "v17"],
]


def gamma18() -> ContextualityScenario:
    """The 18-vertex, 9-hyperedge KS-uncolourable scenario."""
    return validate_scenario(
        {"name": "gamma18", "vertices": [f"v{i}" for i in range(1, 19)], "hyperedges": GAMMA18_HYPEREDGES}
    )


def gamma5() -> ContextualityScenario:
    """The KCBS scenario: e_i = {v_i, u_i, v_(i+1)} for i = 1..5."""
    edges = [[f"v{i}", f"u{i}", f"v{i % 5 + 1}"] for i in range(1, 6)]
    vertices = [f"v{i}" for i in range(1, 6)] + [f"u{i}" for i in range(1, 6)]
    return validate_scenario({"name": "gamma5", "vertices": vertices, "hyperedges": edges})


def triangle_scenario() -> ContextualityScenario:
    """Three 2-outcome measurements covering a triangle (no CE model exists)."""
    return validate_scenario(
        {
            "name": "triangle",
            "vertices": ["v1", "v2", "v3"],
            "hyperedges": [["v1", "v2"], ["v2", "v3"], ["v3", "v1"]],
        }
    )


def n_specker_jms(n: int) -> JointMeasurabilityStructure:
    """N-Specker structure: every (N-1)-subset compatible, the full set not."""
    if n < 2:
        raise SchemaViolation("N-Specker scenarios need N >= 2", "/n")
    names = [f"M{i}" for i in range(1, n + 1)]
    compatible = [list(c) for c in combinations(names, n - 1)]
    return validate_jms({"vertices": names, "compatible": compatible})


def n_cycle_jms(n: int) -> JointMeasurabilityStructure:
    """N-cycle structure: adjacent pairs compatible, every other subset not."""
    if n < 3:
        raise SchemaViolation("N-cycle scenarios need N >= 3", "/n")
    names = [f"M{i}" for i in range(1, n + 1)]
    compatible = [[names[i], names[(i + 1) % n]] for i in range(n)]
    return validate_jms({"vertices": names, "compatible": compatible})


def builtin_scenario(name: str) -> ContextualityScenario:
    """Look up a built-in scenario by name (gamma18, gamma5, triangle)."""
    table = {"gamma18": gamma18, "gamma5": gamma5, "kcbs": gamma5, "triangle": triangle_scenario}
    if name not in table:
        raise UnknownName(f"unknown scenario '{name}'", details={"known": sorted(table)})
    return table[name]()


def random_scenario(
    n_vertices: int, n_edges: int, seed: int, max_edge_size: int = 4
) -> ContextualityScenario:
    """Random scenario for property tests; every vertex lies in some hyperedge.

    Args:
        n_vertices: Number of vertices (>= 2).
        n_edges: Number of random hyperedges before orphans are covered.
        seed: Seed of the private random generator.
        max_edge_size: Largest hyperedge size.
    """
    rng = random.Random(seed)
    names = [f"x{i:02d}" for i in range(n_vertices)]
    edges: List[List[str]] = []
    for _ in range(n_edges):
        size = rng.randint(2, min(max_edge_size, n_vertices))
        edges.append(rng.sample(names, size))
    covered = {v for e in edges for v in e}
    for v in names:
        if v not in covered:
            partner = rng.choice([u for u in names if u != v])
            edges.append([v, partner])
            covered.update((v, partner))
    return validate_scenario({"name": f"random-{seed}", "vertices": names, "hyperedges": edges})
