"""Dense quantum-mechanical models of contextuality scenarios.

Rays, projectors and density matrices are small dense complex numpy
arrays. This module validates realizations of scenarios by rays, generates
Born-rule models, classifies multiqubit rays as product or entangled, audits
the Peres-Mermin square in exact Gaussian-integer arithmetic, simulates
noisy prepare-measure data and ships the named constructions (the 18-ray
set, KCBS, a derived Peres 24-ray set and the SHIFT basis).
"""

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy import linalg

from src.config_loader import ToleranceConfig
from src.exceptions import NoTransition, NotComplete, NotOrthogonal
from src.graph_invariants import EdgeDistribution
from src.optimization import ProbabilisticModel, validate_model
from src.scenarios import ContextualityScenario, gamma18, gamma5, validate_scenario
from src.validators import (
    DimensionMismatch,
    IncompleteRealization,
    InvalidNoise,
    InvalidState,
    SchemaViolation,
    UnknownName,
    pointer,
    require_complex,
    require_int,
    require_key,
    require_list,
    require_object,
)
from src.witnesses import PrepareMeasureData, corr_value

logger = logging.getLogger(__name__)


# ============================================================================
# RAYS AND OPERATORS
# ============================================================================


@dataclass(frozen=True, eq=False)
class Ray:
    """Unit vector with canonical global phase (first nonzero amplitude real positive)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        vector = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vector)
        if norm == 0:
            raise SchemaViolation("ray must be nonzero")
        vector = vector / norm
        lead = next(a for a in vector if abs(a) > 1e-12)
        vector = vector * (abs(lead) / lead)
        object.__setattr__(self, "amplitudes", vector)

    @property
    def dimension(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def overlap(self, other: "Ray") -> float:
        """|<self|other>|."""
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)))

    def same_ray(self, other: "Ray", tolerance: float = 1e-9) -> bool:
        return self.dimension == other.dimension and self.overlap(other) > 1 - tolerance

    def to_json(self) -> List[List[float]]:
        return [[float(a.real), float(a.imag)] for a in self.amplitudes]


@dataclass
class Operator:
    """Dense d x d complex matrix."""

    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise DimensionMismatch(f"operator must be square, got shape {self.entries.shape}")

    @property
    def hermitian(self) -> bool:
        return bool(np.allclose(self.entries, self.entries.conj().T, atol=1e-12))

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]


def validate_state(rho: Any, dimension: int, tolerance: float = 1e-10) -> np.ndarray:
    """Return rho as a complex array after checking it is a density operator.

    Raises:
        InvalidState: If rho is not Hermitian, PSD, unit-trace and d x d.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dimension, dimension):
        raise InvalidState(f"state has shape {rho.shape}, expected ({dimension}, {dimension})", "/state")
    if not np.allclose(rho, rho.conj().T, atol=tolerance):
        raise InvalidState("state is not Hermitian", "/state")
    if abs(np.trace(rho).real - 1.0) > tolerance:
        raise InvalidState(f"state has trace {np.trace(rho).real:.12f}", "/state")
    if np.linalg.eigvalsh(rho).min() < -tolerance:
        raise InvalidState("state has a negative eigenvalue", "/state")
    return rho


def pure_state(ray: Ray) -> np.ndarray:
    return ray.projector()


def maximally_mixed(dimension: int) -> np.ndarray:
    return np.eye(dimension, dtype=complex) / dimension


# ============================================================================
# REALIZATIONS
# ============================================================================


@dataclass
class QuantumRealization:
    """Rank-one projectors for every vertex of a scenario, plus an optional state."""

    scenario: ContextualityScenario
    rays: Dict[str, Ray]
    state: Optional[np.ndarray] = None

    @property
    def dimension(self) -> int:
        return next(iter(self.rays.values())).dimension

    def projector(self, vertex: str) -> np.ndarray:
        return self.rays[vertex].projector()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dimension": self.dimension,
            "rays": {v: self.rays[v].to_json() for v in self.scenario.vertices},
        }


def parse_rays(raw: Any) -> Tuple[int, Dict[str, Ray]]:
    """Parse ``{"dimension": d, "rays": {vertex: [[re, im], ...]}}``."""
    raw = require_object(raw)
    dimension = require_int(require_key(raw, "dimension"), "/dimension", minimum=1)
    rays_raw = require_object(require_key(raw, "rays"), "/rays")
    rays = {}
    for v, amplitudes in rays_raw.items():
        path = pointer("rays", v)
        values = require_list(amplitudes, path)
        if len(values) != dimension:
            raise DimensionMismatch(f"ray '{v}' has {len(values)} amplitudes, expected {dimension}", path)
        rays[v] = Ray(np.array([require_complex(a, f"{path}/{i}") for i, a in enumerate(values)]))
    return dimension, rays


def complete_hyperedge(rays: Sequence[Ray], dimension: int) -> List[Ray]:
    """Rays spanning the orthogonal complement of the given rays."""
    if not rays:
        return [Ray(np.eye(dimension)[k]) for k in range(dimension)]
    stacked = np.array([r.amplitudes.conj() for r in rays])
    complement = linalg.null_space(stacked)
    return [Ray(complement[:, k]) for k in range(complement.shape[1])]


def validate_realization(
    H: ContextualityScenario,
    rays: Dict[str, Any],
    state: Optional[Any] = None,
    tolerances: Optional[ToleranceConfig] = None,
) -> QuantumRealization:
    """Check that the rays of every hyperedge form an orthonormal basis.

    For a hyperedge with exactly d rays the completeness residual
    ||sum_v Pi_v - I|| is checked; with fewer rays, pairwise orthogonality
    is checked first (the rays cannot then be complete); with more than d
    rays some pair must overlap.

    Raises:
        IncompleteRealization: If a vertex has no ray.
        DimensionMismatch: If rays have different dimensions.
        NotOrthogonal: With the hyperedge and worst pair in ``details``.
        NotComplete: With the hyperedge and residual norm in ``details``.
    """
    tolerances = tolerances or ToleranceConfig()
    tol = tolerances.orthogonality
    missing = [v for v in H.vertices if v not in rays]
    if missing:
        raise IncompleteRealization(f"no ray for vertices {missing}", pointer("rays", missing[0]), {"missing": missing})
    parsed = {v: r if isinstance(r, Ray) else Ray(np.asarray(r)) for v, r in rays.items() if v in H.vertices}
    dimensions = {r.dimension for r in parsed.values()}
    if len(dimensions) != 1:
        raise DimensionMismatch(f"rays have mixed dimensions {sorted(dimensions)}", "/rays")
    d = dimensions.pop()

    for e, edge in enumerate(H.hyperedges):
        worst_pair, worst_overlap = None, 0.0
        for a, b in combinations(edge, 2):
            overlap = parsed[a].overlap(parsed[b])
            if overlap > worst_overlap:
                worst_pair, worst_overlap = [a, b], overlap
        total = sum(parsed[v].projector() for v in edge)
        residual = float(np.linalg.norm(total - np.eye(d), ord=2))
        details = {"hyperedge": e, "vertices": list(edge), "pair": worst_pair, "overlap": worst_overlap, "residual": residual}
        if len(edge) == d:
            if residual > tol:
                raise NotComplete(f"hyperedge {e} projectors miss the identity by {residual:.3e}", details)
        else:
            if worst_overlap > tol:
                raise NotOrthogonal(f"rays {worst_pair} of hyperedge {e} overlap by {worst_overlap:.3e}", details)
            raise NotComplete(f"hyperedge {e} has {len(edge)} rays in dimension {d}", details)

    rho = None if state is None else validate_state(state, d, tolerances.orthogonality)
    logger.debug(f"Realization of '{H.name or 'scenario'}' in dimension {d} validated")
    return QuantumRealization(H, parsed, rho)


def born_model(R: QuantumRealization, rho: Optional[Any] = None) -> ProbabilisticModel:
    """p(v) = Tr(Pi_v rho) for every vertex.

    Raises:
        InvalidState: If rho is not a density operator of the right dimension.
        IncompleteRealization: If the realization misses a vertex.
    """
    if rho is None:
        rho = R.state
    if rho is None:
        raise InvalidState("no state given", "/state")
    rho = validate_state(rho, R.dimension)
    missing = [v for v in R.scenario.vertices if v not in R.rays]
    if missing:
        raise IncompleteRealization(f"no ray for vertices {missing}", pointer("rays", missing[0]))
    values = []
    for v in R.scenario.vertices:
        amplitudes = R.rays[v].amplitudes
        values.append(float(np.vdot(amplitudes, rho @ amplitudes).real))
    return validate_model(R.scenario, values, tolerance=1e-10)


# ============================================================================
# ENTANGLEMENT
# ============================================================================


def reduced_purities(ray: Ray, factors: Sequence[int]) -> List[float]:
    """Purity Tr(rho_k^2) of every single-factor reduced state of a ray."""
    tensor = ray.amplitudes.reshape(tuple(factors))
    purities = []
    for k, d_k in enumerate(factors):
        matrix = np.moveaxis(tensor, k, 0).reshape(d_k, -1)
        rho_k = matrix @ matrix.conj().T
        purities.append(float(np.real(np.trace(rho_k @ rho_k))))
    return purities


def entanglement_flags(rays: Sequence[Ray], factors: Sequence[int], tolerance: float = 1e-10) -> List[Dict[str, Any]]:
    """Classify each ray as product (all reduced purities 1) or entangled.

    Raises:
        DimensionMismatch: If the factor dimensions do not multiply to d.
    """
    total = int(np.prod(factors))
    flags = []
    for index, ray in enumerate(rays):
        if ray.dimension != total:
            raise DimensionMismatch(
                f"ray {index} has dimension {ray.dimension}, factors multiply to {total}", pointer("rays", index)
            )
        purities = reduced_purities(ray, factors)
        flags.append({"product": all(p >= 1 - tolerance for p in purities), "purities": purities})
    return flags


def random_local_unitary(factors: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    """Tensor product of Haar-ish random unitaries (QR of Gaussian matrices)."""
    unitary = np.eye(1, dtype=complex)
    for d in factors:
        Z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        Q, R_ = np.linalg.qr(Z)
        Q = Q * (np.diag(R_) / np.abs(np.diag(R_)))
        unitary = np.kron(unitary, Q)
    return unitary


# ============================================================================
# PERES-MERMIN AUDIT
# ============================================================================

# Gaussian-integer Pauli matrices as (real, imaginary) integer pairs
_PAULI = {
    "I": (np.array([[1, 0], [0, 1]]), np.zeros((2, 2), dtype=np.int64)),
    "X": (np.array([[0, 1], [1, 0]]), np.zeros((2, 2), dtype=np.int64)),
    "Y": (np.zeros((2, 2), dtype=np.int64), np.array([[0, -1], [1, 0]])),
    "Z": (np.array([[1, 0], [0, -1]]), np.zeros((2, 2), dtype=np.int64)),
}

PERES_MERMIN_SQUARE = [
    ["XI", "IX", "XX"],
    ["IY", "YI", "YY"],
    ["XY", "YX", "ZZ"],
]


def _gaussian_kron(a, b):
    return (np.kron(a[0], b[0]) - np.kron(a[1], b[1]), np.kron(a[0], b[1]) + np.kron(a[1], b[0]))


def _gaussian_matmul(a, b):
    return (a[0] @ b[0] - a[1] @ b[1], a[0] @ b[1] + a[1] @ b[0])


def pauli_word(word: str) -> Tuple[np.ndarray, np.ndarray]:
    """Exact Gaussian-integer matrix of a Pauli word such as "XY"."""
    matrix = (np.array([[1]], dtype=np.int64), np.array([[0]], dtype=np.int64))
    for letter in word:
        if letter not in _PAULI:
            raise UnknownName(f"unknown Pauli letter '{letter}'")
        matrix = _gaussian_kron(matrix, _PAULI[letter])
    return matrix


def pauli_matrix(word: str) -> np.ndarray:
    real, imag = pauli_word(word)
    return real + 1j * imag


@dataclass
class ValuationProblem:
    """+/-1 valuations of operator words under product constraints."""

    words: List[str]
    constraints: List[Tuple[List[str], int]]

    def __post_init__(self):
        used = {w for subset, _ in self.constraints for w in subset}
        unused = [w for w in self.words if w not in used]
        if unused:
            raise SchemaViolation(f"words in no constraint: {unused}")

    def satisfying_valuations(self) -> List[Dict[str, int]]:
        """Exhaustive scan of {+1,-1}^words."""
        found = []
        for values in product((1, -1), repeat=len(self.words)):
            valuation = dict(zip(self.words, values))
            if all(math.prod(valuation[w] for w in subset) == sign for subset, sign in self.constraints):
                found.append(valuation)
        return found


def peres_mermin_problem() -> ValuationProblem:
    """Rows multiply to +I, columns to +I except the last, which gives -I."""
    words = [w for row in PERES_MERMIN_SQUARE for w in row]
    rows = [(list(row), 1) for row in PERES_MERMIN_SQUARE]
    columns = [([row[c] for row in PERES_MERMIN_SQUARE], 1) for c in range(3)]
    columns[-1] = (columns[-1][0], -1)
    return ValuationProblem(words, rows + columns)


@dataclass
class PeresMerminAudit:
    identities: List[Dict[str, Any]]
    identities_hold: bool
    valuations_checked: int
    satisfying_valuations: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "identities": self.identities,
            "identities_hold": self.identities_hold,
            "valuations_checked": self.valuations_checked,
            "satisfying_valuations": self.satisfying_valuations,
        }


def peres_mermin_audit(problem: Optional[ValuationProblem] = None) -> PeresMerminAudit:
    """Verify the six operator identities exactly and scan all valuations.

    Each identity is checked in Gaussian-integer arithmetic, so the residual
    (largest entry of product minus sign times identity) is an exact integer;
    the three operators of every row and column must also commute.
    """
    problem = problem or peres_mermin_problem()
    identity = pauli_word("II")
    identities = []
    for subset, sign in problem.constraints:
        matrices = [pauli_word(w) for w in subset]
        result = matrices[0]
        for m in matrices[1:]:
            result = _gaussian_matmul(result, m)
        residual = int(max(np.abs(result[0] - sign * identity[0]).max(), np.abs(result[1] - sign * identity[1]).max()))
        commuting = all(
            all(np.array_equal(x, y) for x, y in zip(_gaussian_matmul(a, b), _gaussian_matmul(b, a)))
            for a, b in combinations(matrices, 2)
        )
        identities.append({"words": subset, "sign": sign, "residual": residual, "commuting": commuting})
    satisfying = problem.satisfying_valuations()
    audit = PeresMerminAudit(
        identities=identities,
        identities_hold=all(i["residual"] == 0 and i["commuting"] for i in identities),
        valuations_checked=2 ** len(problem.words),
        satisfying_valuations=len(satisfying),
    )
    logger.info(
        f"Peres-Mermin audit: identities hold={audit.identities_hold}, "
        f"{audit.satisfying_valuations}/{audit.valuations_checked} valuations satisfy all constraints"
    )
    return audit


def common_eigenbasis(words: Sequence[str]) -> List[Ray]:
    """Joint eigenbasis of commuting two-outcome Pauli words.

    The first two words have four distinct joint eigenvalue pairs, so
    ``A + sqrt(2) B`` has a nondegenerate spectrum.
    """
    combined = pauli_matrix(words[0]) + math.sqrt(2) * pauli_matrix(words[1])
    _, vectors = np.linalg.eigh(combined)
    return [Ray(vectors[:, k]) for k in range(vectors.shape[1])]


def peres_mermin_rays() -> Tuple[ContextualityScenario, Dict[str, Ray], int]:
    """Derive the 24 rays from the six row/column eigenbases.

    Hyperedges are all orthonormal 4-subsets of the rays (4-cliques of the
    orthogonality graph); the row/column bases come first.

    Returns:
        (scenario, rays by vertex id, number of row/column bases).
    """
    triples = [row for row in PERES_MERMIN_SQUARE] + [[row[c] for row in PERES_MERMIN_SQUARE] for c in range(3)]
    rays: List[Ray] = []
    bases: List[List[int]] = []
    for triple in triples:
        basis = []
        for ray in common_eigenbasis(triple):
            index = next((i for i, r in enumerate(rays) if r.same_ray(ray)), None)
            if index is None:
                rays.append(ray)
                index = len(rays) - 1
            basis.append(index)
        bases.append(sorted(basis))

    n = len(rays)
    orthogonal = [[i != j and rays[i].overlap(rays[j]) < 1e-9 for j in range(n)] for i in range(n)]
    cliques = []
    for quad in combinations(range(n), 4):
        if all(orthogonal[a][b] for a, b in combinations(quad, 2)):
            cliques.append(list(quad))
    extra = [c for c in cliques if c not in bases]
    names = [f"p{i + 1:02d}" for i in range(n)]
    edges = [[names[i] for i in e] for e in bases + extra]
    H = validate_scenario({"name": "peres24", "vertices": names, "hyperedges": edges})
    logger.debug(f"Derived {n} rays, {len(bases)} row/column bases and {len(extra)} further bases")
    return H, dict(zip(names, rays)), len(bases)


# ============================================================================
# NOISY DATA
# ============================================================================


def noisy_effects(R: QuantumRealization, edge: Sequence[str], nu: float) -> List[np.ndarray]:
    """(1 - nu) Pi_v + nu I / |e| for the outcomes of one hyperedge."""
    d = R.dimension
    return [(1 - nu) * R.projector(v) + nu * np.eye(d) / len(edge) for v in edge]


def _check_noise(nu: float) -> float:
    nu = float(nu)
    if not 0.0 <= nu <= 1.0:
        raise InvalidNoise(f"noise parameter {nu} outside [0, 1]", "/noise")
    return nu


def simulate_noisy_corr(
    H: ContextualityScenario,
    R: QuantumRealization,
    nu: float,
    q: Optional[EdgeDistribution] = None,
) -> PrepareMeasureData:
    """Prepare-measure data for ideal eigenstate sources and depolarized effects.

    Source S_e prepares the eigenstate of outcome s with probability 1/|e|;
    the measurement effects are ``(1 - nu) Pi_m + nu I/|e|``, so
    p(m, s) = Tr(E_m Pi_s) / |e|.

    Raises:
        InvalidNoise: If nu lies outside [0, 1].
    """
    nu = _check_noise(nu)
    tables = []
    for edge in H.hyperedges:
        effects = noisy_effects(R, edge, nu)
        size = len(edge)
        table = tuple(
            tuple(float(np.trace(E @ R.projector(s)).real) / size for s in edge)
            for E in effects
        )
        tables.append(table)
    data = PrepareMeasureData(tuple(tables))
    if q is not None:
        logger.debug(f"nu = {nu:.6f}: Corr = {float(corr_value(H, q, data)):.9f}")
    return data


def simulate_special_source(
    H: ContextualityScenario,
    R: QuantumRealization,
    state: np.ndarray,
    p0: float,
    nu: float = 0.0,
) -> PrepareMeasureData:
    """Data with ideal per-edge sources plus a two-outcome special source.

    S_* prepares ``state`` for s_* = 0 (probability p0) and the normalized
    complement ``(I - state) / (d - 1)`` for s_* = 1.
    """
    nu = _check_noise(nu)
    if not 0.0 < p0 <= 1.0:
        raise InvalidNoise(f"p0 = {p0} outside (0, 1]", "/p0")
    d = R.dimension
    state = validate_state(state, d)
    complement = (np.eye(d) - state) / (d - 1)
    base = simulate_noisy_corr(H, R, nu)
    special = []
    for edge in H.hyperedges:
        effects = noisy_effects(R, edge, nu)
        special.append(
            tuple(
                (p0 * float(np.trace(E @ state).real), (1 - p0) * float(np.trace(E @ complement).real))
                for E in effects
            )
        )
    return PrepareMeasureData(base.edge_tables, tuple(special))


def noise_sweep(
    H: ContextualityScenario, q: EdgeDistribution, R: QuantumRealization, grid: Sequence[float]
) -> List[Tuple[float, float]]:
    """(nu, Corr(nu)) for every grid point."""
    return [(float(nu), float(corr_value(H, q, simulate_noisy_corr(H, R, nu)))) for nu in grid]


def find_noise_crossing(
    H: ContextualityScenario,
    q: EdgeDistribution,
    R: QuantumRealization,
    target: float,
    precision: float = 1e-6,
) -> float:
    """Bisection for the noise level where Corr(nu) equals target.

    Corr is nonincreasing in nu; the sweep endpoints must bracket the target.

    Raises:
        NoTransition: If target lies outside [Corr(1), Corr(0)].
    """
    target = float(target)
    corr = lambda nu: float(corr_value(H, q, simulate_noisy_corr(H, R, nu)))  # noqa: E731
    high, low = corr(0.0), corr(1.0)
    if not low <= target <= high:
        raise NoTransition(f"Corr ranges over [{low}, {high}], target {target} not bracketed")
    a, b = 0.0, 1.0
    while b - a > precision:
        mid = (a + b) / 2
        if corr(mid) >= target:
            a = mid
        else:
            b = mid
    crossing = (a + b) / 2
    logger.info(f"Corr(nu) = {target} at nu = {crossing:.7f}")
    return crossing


# ============================================================================
# BUILT-IN CONSTRUCTIONS
# ============================================================================

CEGA_RAYS = {
    "v1": (0, 0, 0, 1), "v2": (0, 0, 1, 0), "v3": (1, 1, 0, 0), "v4": (1, -1, 0, 0),
    "v5": (0, 0, 1, 1), "v6": (1, 1, -1, 1), "v7": (1, 1, 1, -1), "v8": (-1, 1, 1, 1),
    "v9": (1, 0, 0, 1), "v10": (0, 1, -1, 0), "v11": (1, 0, 0, -1), "v12": (1, -1, -1, 1),
    "v13": (1, 1, 1, 1), "v14": (1, -1, 1, -1), "v15": (0, 1, 0, -1), "v16": (1, 0, -1, 0),
    "v17": (1, 0, 1, 0), "v18": (0, 1, 0, 0),
}

SHIFT_LABELS = ["000", "111", "+01", "-01", "1+0", "1-0", "01+", "01-"]


def label_state(label: str) -> np.ndarray:
    """Product state of a ket label over 0, 1, + and -."""
    kets = {
        "0": np.array([1, 0], dtype=complex),
        "1": np.array([0, 1], dtype=complex),
        "+": np.array([1, 1], dtype=complex) / math.sqrt(2),
        "-": np.array([1, -1], dtype=complex) / math.sqrt(2),
    }
    state = np.array([1], dtype=complex)
    for symbol in label:
        if symbol not in kets:
            raise UnknownName(f"unknown ket symbol '{symbol}'")
        state = np.kron(state, kets[symbol])
    return state


def kcbs_rays() -> Dict[str, Ray]:
    """l_i = (sin t cos phi_i, sin t sin phi_i, cos t), phi_i = 4 pi i / 5, cos t = 5^(-1/4).

    The u_i complete each hyperedge {v_i, u_i, v_(i+1)}.
    """
    cos_t = 5 ** -0.25
    sin_t = math.sqrt(1 - cos_t ** 2)
    rays = {}
    for i in range(1, 6):
        phi = 4 * math.pi * i / 5
        rays[f"v{i}"] = Ray(np.array([sin_t * math.cos(phi), sin_t * math.sin(phi), cos_t]))
    for i in range(1, 6):
        rays[f"u{i}"] = complete_hyperedge([rays[f"v{i}"], rays[f"v{i % 5 + 1}"]], 3)[0]
    return rays


@dataclass
class Construction:
    """Named scenario with its realization and reference state."""

    name: str
    scenario: ContextualityScenario
    realization: QuantumRealization
    factors: Optional[List[int]] = None
    derived: bool = False
    notes: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        document = {
            "name": self.name,
            "scenario": self.scenario.to_dict(),
            "realization": self.realization.to_dict(),
            "derived": self.derived,
        }
        if self.factors:
            document["factors"] = self.factors
        document.update(self.notes)
        return document


def builtin_constructions(name: str) -> Construction:
    """Return a named construction (cega18, kcbs, peres24, shift).

    Raises:
        UnknownName: For any other name.
    """
    if name == "cega18":
        H = gamma18()
        R = validate_realization(H, {v: Ray(np.array(a, dtype=float)) for v, a in CEGA_RAYS.items()}, maximally_mixed(4))
        return Construction(name, H, R, factors=[2, 2])
    if name == "kcbs":
        H = gamma5()
        rays = kcbs_rays()
        R = validate_realization(H, rays, pure_state(Ray(np.array([0, 0, 1]))))
        return Construction(name, H, R, notes={"cos_theta": 5 ** -0.25})
    if name == "peres24":
        H, rays, n_bases = peres_mermin_rays()
        R = validate_realization(H, rays, maximally_mixed(4))
        return Construction(name, H, R, factors=[2, 2], derived=True, notes={"row_column_bases": n_bases})
    if name == "shift":
        names = [f"s{label}" for label in SHIFT_LABELS]
        H = validate_scenario({"name": "shift", "vertices": names, "hyperedges": [names]})
        rays = {n: Ray(label_state(label)) for n, label in zip(names, SHIFT_LABELS)}
        R = validate_realization(H, rays, maximally_mixed(8))
        return Construction(name, H, R, factors=[2, 2, 2], notes={"labels": SHIFT_LABELS})
    raise UnknownName(f"unknown construction '{name}'", details={"known": ["cega18", "kcbs", "peres24", "shift"]})
