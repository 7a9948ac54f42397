"""Optimization kernels: simplex LP, hull membership, model-polytope vertices, SDP.

The simplex implementation works on a dense numpy tableau of either
float64 or Python ``Fraction`` objects, so exact rational optima (5/2, 5/6,
1/2) come out as rationals when the inputs are rational. Model-polytope
vertices are enumerated as basic feasible solutions and then re-solved
exactly on their support. The SDP solver is an alternating-direction
augmented Lagrangian method on the dual problem with a PSD-cone projection
by eigendecomposition per iteration.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple
import logging

import numpy as np
from scipy import linalg

from src.config_loader import EnumerationConfig, SdpConfig, ToleranceConfig
from src.exceptions import Infeasible, NotConverged, TooLarge, Unbounded
from src.scenarios import ContextualityScenario
from src.utils import is_exact, to_fraction
from src.validators import DimensionMismatch, OutOfRange, SchemaViolation, pointer

logger = logging.getLogger(__name__)

RELATIONS = ("<=", "=", ">=")
DEGENERATE_PIVOTS_BEFORE_BLAND = 50


# ============================================================================
# LINEAR PROGRAMMING
# ============================================================================


@dataclass
class LinearProgram:
    """Maximize ``objective . x`` subject to linear constraints and bounds.

    Attributes:
        objective: Coefficient vector c.
        constraints: List of (coefficients, relation, bound) with relation in
            ``"<="``, ``"="``, ``">="``.
        bounds: Per-variable (lo, hi); None means unbounded on that side.
            Defaults to (0, None) for every variable.
        exact: Solve in rational arithmetic.
    """

    objective: Sequence[Any]
    constraints: List[Tuple[Sequence[Any], str, Any]] = field(default_factory=list)
    bounds: Optional[List[Tuple[Optional[Any], Optional[Any]]]] = None
    exact: bool = False

    def __post_init__(self):
        n = len(self.objective)
        for index, (coefficients, relation, _) in enumerate(self.constraints):
            if len(coefficients) != n:
                raise DimensionMismatch(
                    f"constraint {index} has {len(coefficients)} coefficients, objective has {n}",
                    pointer("constraints", index),
                )
            if relation not in RELATIONS:
                raise SchemaViolation(f"unknown relation '{relation}'", pointer("constraints", index, 1))
        if self.bounds is None:
            self.bounds = [(0, None)] * n
        elif len(self.bounds) != n:
            raise DimensionMismatch(f"{len(self.bounds)} bounds for {n} variables", "/bounds")
        for index, (lo, hi) in enumerate(self.bounds):
            if lo is not None and hi is not None and lo > hi:
                raise OutOfRange(f"empty bound interval [{lo}, {hi}]", pointer("bounds", index))

    @property
    def n_variables(self) -> int:
        return len(self.objective)

    @classmethod
    def from_matrices(
        cls,
        c: Sequence[Any],
        A_ub: Optional[Sequence[Sequence[Any]]] = None,
        b_ub: Optional[Sequence[Any]] = None,
        A_eq: Optional[Sequence[Sequence[Any]]] = None,
        b_eq: Optional[Sequence[Any]] = None,
        bounds: Optional[List[Tuple[Optional[Any], Optional[Any]]]] = None,
        exact: bool = False,
    ) -> "LinearProgram":
        """Build a program from ``A_ub x <= b_ub`` and ``A_eq x = b_eq`` blocks."""
        constraints: List[Tuple[Sequence[Any], str, Any]] = []
        for row, rhs in zip(A_ub if A_ub is not None else [], b_ub if b_ub is not None else []):
            constraints.append((list(row), "<=", rhs))
        for row, rhs in zip(A_eq if A_eq is not None else [], b_eq if b_eq is not None else []):
            constraints.append((list(row), "=", rhs))
        return cls(list(c), constraints, bounds, exact)


class LpSolution(NamedTuple):
    """Optimal value and optimizer of a linear program."""

    value: Any
    x: List[Any]


def _convert(values: Iterable[Any], exact: bool) -> List[Any]:
    return [to_fraction(v) for v in values] if exact else [float(v) for v in values]


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    """Gauss-Jordan pivot of the tableau on (row, col), in place."""
    T[row] = T[row] / T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0
    nonzero = np.flatnonzero(factors != 0)
    if nonzero.size:
        T[nonzero] -= np.outer(factors[nonzero], T[row])


def _entering_column(reduced: np.ndarray, allowed: np.ndarray, tol: float, bland: bool) -> Optional[int]:
    """Most negative reduced cost (Dantzig), or lowest index (Bland)."""
    mask = np.array(reduced < -tol, dtype=bool) & allowed
    candidates = np.flatnonzero(mask)
    if candidates.size == 0:
        return None
    if bland:
        return int(candidates[0])
    values = reduced[candidates]
    if values.dtype == object:
        best = min(range(len(candidates)), key=lambda k: (values[k], candidates[k]))
        return int(candidates[best])
    return int(candidates[int(np.argmin(values))])


def _leaving_row(T: np.ndarray, col: int, basis: List[int], tol: float) -> Optional[int]:
    """Minimum-ratio row; ties go to the smallest basic variable index."""
    column = T[:-1, col]
    rows = np.flatnonzero(np.array(column > tol, dtype=bool))
    if rows.size == 0:
        return None
    ratios = [T[r, -1] / column[r] for r in rows]
    best = min(ratios)
    tied = [r for r, ratio in zip(rows, ratios) if ratio <= best + tol]
    return int(min(tied, key=lambda r: basis[r]))


def _run_simplex(
    T: np.ndarray,
    basis: List[int],
    allowed: np.ndarray,
    tol: float,
    max_iterations: int = 100000,
) -> Tuple[str, int, Optional[int]]:
    """Pivot until optimal or unbounded.

    The bottom row holds ``c_B B^-1 A - c`` with the objective value in the
    last column; optimality means every allowed reduced cost is >= -tol.

    Returns:
        (status, iterations, unbounded column) with status "optimal" or
        "unbounded".
    """
    degenerate_run = 0
    for iteration in range(max_iterations):
        bland = degenerate_run >= DEGENERATE_PIVOTS_BEFORE_BLAND
        col = _entering_column(T[-1, :-1], allowed, tol, bland)
        if col is None:
            return "optimal", iteration, None
        row = _leaving_row(T, col, basis, tol)
        if row is None:
            return "unbounded", iteration, col
        step = T[row, -1] / T[row, col]
        degenerate_run = degenerate_run + 1 if abs(step) <= tol else 0
        _pivot(T, row, col)
        basis[row] = col
    raise NotConverged(f"simplex did not terminate in {max_iterations} pivots", {"iterations": max_iterations})


@dataclass
class _StandardForm:
    """``A x = b, x >= 0`` with b >= 0 plus the maps back to the input program."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    offset_value: Any
    variable_map: List[Tuple[Any, List[Tuple[int, int]]]]
    row_sign: List[int]
    row_origin: List[int]
    initial_columns: List[Optional[int]]


def _standard_form(lp: LinearProgram) -> _StandardForm:
    """Shift, split and slack the program into standard equality form."""
    exact = lp.exact
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    c_in = _convert(lp.objective, exact)
    columns = 0
    variable_map: List[Tuple[Any, List[Tuple[int, int]]]] = []
    extra_rows: List[Tuple[Dict[int, Any], str, Any]] = []

    for lo, hi in lp.bounds:
        lo_v = None if lo is None else (to_fraction(lo) if exact else float(lo))
        hi_v = None if hi is None else (to_fraction(hi) if exact else float(hi))
        if lo_v is not None:
            variable_map.append((lo_v, [(columns, 1)]))
            if hi_v is not None:
                extra_rows.append(({columns: one}, "<=", hi_v - lo_v))
            columns += 1
        elif hi_v is not None:
            variable_map.append((hi_v, [(columns, -1)]))
            columns += 1
        else:
            variable_map.append((zero, [(columns, 1), (columns + 1, -1)]))
            columns += 2

    rows: List[Tuple[Dict[int, Any], str, Any]] = []
    for coefficients, relation, bound in lp.constraints:
        coefficients = _convert(coefficients, exact)
        rhs = to_fraction(bound) if exact else float(bound)
        row: Dict[int, Any] = {}
        for j, a in enumerate(coefficients):
            if a == 0:
                continue
            offset, parts = variable_map[j]
            rhs -= a * offset
            for col, sign in parts:
                row[col] = row.get(col, zero) + sign * a
        rows.append((row, relation, rhs))
    rows.extend(extra_rows)

    n_slack = sum(1 for _, relation, _ in rows if relation != "=")
    n_cols = columns + n_slack
    dtype = object if exact else float
    A = np.full((len(rows), n_cols), zero, dtype=dtype)
    b = np.full(len(rows), zero, dtype=dtype)
    row_sign: List[int] = []
    initial: List[Optional[int]] = []
    slack = columns
    for i, (row, relation, rhs) in enumerate(rows):
        for col, a in row.items():
            A[i, col] = a
        b[i] = rhs
        slack_col = None
        if relation != "=":
            A[i, slack] = one if relation == "<=" else -one
            slack_col = slack
            slack += 1
        sign = 1
        if b[i] < 0:
            A[i] = -A[i]
            b[i] = -b[i]
            sign = -1
        row_sign.append(sign)
        initial.append(slack_col if slack_col is not None and A[i, slack_col] == one else None)

    c = np.full(n_cols, zero, dtype=dtype)
    offset_value = zero
    for j, (offset, parts) in enumerate(variable_map):
        offset_value += c_in[j] * offset
        for col, sign in parts:
            c[col] += sign * c_in[j]

    origin = list(range(len(lp.constraints))) + [-1] * len(extra_rows)
    return _StandardForm(A, b, c, offset_value, variable_map, row_sign, origin, initial)


def _phase_one(sf: _StandardForm, exact: bool, tol: float) -> Tuple[np.ndarray, List[int], int]:
    """Find a feasible basis or raise Infeasible with a Farkas certificate.

    Returns:
        (tableau without artificial columns, basis, pivot count).
    """
    m, n = sf.A.shape
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    dtype = object if exact else float
    artificial_rows = [i for i in range(m) if sf.initial_columns[i] is None]
    k = len(artificial_rows)

    T = np.full((m + 1, n + k + 1), zero, dtype=dtype)
    T[:m, :n] = sf.A
    T[:m, -1] = sf.b
    basis: List[int] = []
    art_of_row: Dict[int, int] = {}
    for a_index, i in enumerate(artificial_rows):
        T[i, n + a_index] = one
        art_of_row[i] = n + a_index
    for i in range(m):
        basis.append(art_of_row.get(i, sf.initial_columns[i]))
    # Phase-one objective: maximize minus the sum of artificials
    for i in artificial_rows:
        T[-1, :n] -= T[i, :n]
        T[-1, -1] -= T[i, -1]

    allowed = np.ones(n + k, dtype=bool)
    status, iterations, _ = _run_simplex(T, basis, allowed, tol)
    infeasibility = -T[-1, -1]
    if infeasibility > tol:
        farkas_std = []
        for i in range(m):
            col = art_of_row.get(i, sf.initial_columns[i])
            cost = -one if i in art_of_row else zero
            farkas_std.append(-(T[-1, col] + cost))
        farkas = [0] * (max(sf.row_origin) + 1 if sf.row_origin else 0)
        for i in range(m):
            if sf.row_origin[i] >= 0:
                farkas[sf.row_origin[i]] = farkas_std[i] * sf.row_sign[i]
        raise Infeasible(
            "linear program is infeasible",
            {"infeasibility": float(infeasibility), "farkas": farkas},
        )

    # Drive remaining artificials out of the basis; drop redundant rows
    keep_rows = []
    for i in range(m):
        if basis[i] < n:
            keep_rows.append(i)
            continue
        candidates = np.flatnonzero(np.array(abs(T[i, :n]) > tol, dtype=bool))
        if candidates.size:
            col = int(candidates[0])
            _pivot(T, i, col)
            basis[i] = col
            keep_rows.append(i)
        else:
            logger.debug(f"Dropping redundant constraint row {i}")
    T = np.vstack([T[keep_rows][:, list(range(n)) + [n + k]], T[-1:, list(range(n)) + [n + k]]])
    basis = [basis[i] for i in keep_rows]
    return T, basis, iterations


def simplex_maximize(lp: LinearProgram, tolerance: Optional[float] = None) -> LpSolution:
    """Solve a linear program with the two-phase simplex method.

    Dantzig's rule picks the entering column, switching to Bland's rule after
    a run of degenerate pivots; leaving ties go to the smallest basic index.

    Args:
        lp: Program to maximize.
        tolerance: Pivot tolerance (default 1e-9; 0 in exact mode).

    Returns:
        LpSolution with the optimal value and an optimizer.

    Raises:
        Infeasible: No point satisfies the constraints; ``details["farkas"]``
            holds multipliers y with y.A <= 0 (sign-adjusted per relation)
            and y.b > 0 certifying it.
        Unbounded: The objective is unbounded above.

    Example:
        >>> simplex_maximize(LinearProgram([1], [([1], "<=", 1)])).value
        1.0
    """
    exact = lp.exact
    tol = 0 if exact else (ToleranceConfig().lp if tolerance is None else tolerance)
    sf = _standard_form(lp)
    T, basis, phase_one_pivots = _phase_one(sf, exact, tol)

    m = len(basis)
    n = sf.A.shape[1]
    zero = Fraction(0) if exact else 0.0
    T[-1] = zero
    T[-1, :n] = -sf.c
    for i in range(m):
        cost = sf.c[basis[i]]
        if cost != 0:
            T[-1] += cost * T[i]

    status, phase_two_pivots, column = _run_simplex(T, basis, np.ones(n, dtype=bool), tol)
    if status == "unbounded":
        raise Unbounded("linear program is unbounded", {"column": column})

    x_std = [zero] * n
    for i, col in enumerate(basis):
        x_std[col] = T[i, -1]
    x = []
    for offset, parts in sf.variable_map:
        value = offset
        for col, sign in parts:
            value += sign * x_std[col]
        x.append(value)
    value = T[-1, -1] + sf.offset_value
    logger.debug(f"Simplex optimum {value} after {phase_one_pivots}+{phase_two_pivots} pivots")
    return LpSolution(value, x)


def find_feasible_point(
    A_eq: Sequence[Sequence[Any]], b_eq: Sequence[Any], exact: bool, tolerance: Optional[float] = None
) -> List[Any]:
    """Return some x >= 0 with ``A_eq x = b_eq`` (phase one only).

    Raises:
        Infeasible: With the Farkas multipliers in ``details["farkas"]``.
    """
    n = len(A_eq[0]) if len(A_eq) else 0
    lp = LinearProgram.from_matrices([0] * n, A_eq=A_eq, b_eq=b_eq, exact=exact)
    tol = 0 if exact else (ToleranceConfig().lp if tolerance is None else tolerance)
    sf = _standard_form(lp)
    T, basis, _ = _phase_one(sf, exact, tol)
    x = [Fraction(0) if exact else 0.0] * n
    for i, col in enumerate(basis):
        x[col] = T[i, -1]
    return x


# ============================================================================
# CONVEX HULL MEMBERSHIP
# ============================================================================


@dataclass
class HullMembership:
    """Outcome of a convex-hull membership test.

    When ``member`` is True, ``weights`` are convex weights reproducing the
    point. Otherwise ``normal`` (max-abs 1) and ``bound`` describe the
    inequality ``normal . x <= bound`` satisfied by every generator and
    violated by the point by ``margin``.
    """

    member: bool
    weights: Optional[List[Any]] = None
    normal: Optional[List[float]] = None
    bound: Optional[float] = None
    margin: Optional[float] = None

    def support(self, tolerance: float = 1e-12) -> List[int]:
        """Indices of generators carrying nonzero weight."""
        if not self.weights:
            return []
        return [i for i, w in enumerate(self.weights) if w > tolerance]


def hull_membership(
    point: Sequence[Any],
    generators: Sequence[Sequence[Any]],
    exact: Optional[bool] = None,
    tolerance: Optional[float] = None,
) -> HullMembership:
    """Decide whether a point lies in the convex hull of generators.

    Args:
        point: Query vector.
        generators: Nonempty list of vectors of the same dimension.
        exact: Rational arithmetic; default is exact when every entry is an
            int or Fraction and the problem is small.
        tolerance: Separation margin threshold (default 1e-8).

    Returns:
        HullMembership with convex weights or a separating inequality.

    Raises:
        DimensionMismatch: If dimensions differ or no generator is given.

    Example:
        >>> hull_membership([1, 1], [[0, 0], [2, 2]]).weights
        [Fraction(1, 2), Fraction(1, 2)]
    """
    if not generators:
        raise DimensionMismatch("at least one generator is required", "/generators")
    d = len(point)
    for index, g in enumerate(generators):
        if len(g) != d:
            raise DimensionMismatch(f"generator {index} has dimension {len(g)}, point has {d}", pointer("generators", index))
    tol = ToleranceConfig().hull if tolerance is None else tolerance
    if exact is None:
        exact = (
            all(is_exact(v) for v in point)
            and all(is_exact(v) for g in generators for v in g)
            and len(generators) * (d + 1) <= 20000
        )

    k = len(generators)
    A_eq = [[g[j] for g in generators] for j in range(d)] + [[1] * k]
    b_eq = list(point) + [1]
    try:
        weights = find_feasible_point(A_eq, b_eq, exact, tolerance=min(tol, ToleranceConfig().lp))
    except Infeasible as e:
        farkas = e.details["farkas"]
        normal = np.array([float(v) for v in farkas[:d]])
        scale = float(np.max(np.abs(normal))) if normal.size else 0.0
        if scale == 0.0:
            normal = np.zeros(d)
            scale = 1.0
        normal = normal / scale
        G = np.array([[float(v) for v in g] for g in generators])
        p = np.array([float(v) for v in point])
        bound = float(np.max(G @ normal))
        margin = float(p @ normal - bound)
        if margin <= tol:
            logger.warning(f"Hull separation margin {margin:.3e} is below tolerance {tol:.1e}")
        return HullMembership(False, normal=normal.tolist(), bound=bound, margin=margin)

    if not exact:
        weights = [max(0.0, float(w)) for w in weights]
        total = sum(weights)
        weights = [w / total for w in weights]
    return HullMembership(True, weights=list(weights))


# ============================================================================
# PROBABILISTIC MODELS AND THEIR POLYTOPE
# ============================================================================


@dataclass(frozen=True)
class ProbabilisticModel:
    """Map p: V(H) -> [0,1] normalized on every hyperedge.

    ``values`` are aligned with the scenario's canonical vertex order.
    """

    scenario: ContextualityScenario
    values: Tuple[Any, ...]
    deterministic: bool = False

    def value(self, vertex: str) -> Any:
        return self.values[self.scenario.vertices.index(vertex)]

    def as_dict(self) -> Dict[str, Any]:
        return dict(zip(self.scenario.vertices, self.values))

    def edge_sums(self) -> List[Any]:
        index = self.scenario.vertex_index()
        return [sum(self.values[index[v]] for v in edge) for edge in self.scenario.hyperedges]

    def is_classical(self, colorings: Sequence[Any]) -> HullMembership:
        """Membership of p in the convex hull of KS colourings."""
        if not colorings:
            return HullMembership(False)
        return hull_membership(list(self.values), [list(c.values) for c in colorings])


def validate_model(
    H: ContextualityScenario, values: Any, tolerance: Optional[float] = None
) -> ProbabilisticModel:
    """Build a ProbabilisticModel from a ``{vertex: p}`` mapping or aligned list.

    Raises:
        SchemaViolation: If a vertex is missing or a hyperedge sum is not 1.
        OutOfRange: If some p(v) lies outside [0, 1].
    """
    tol = ToleranceConfig().model if tolerance is None else tolerance
    if isinstance(values, dict):
        missing = [v for v in H.vertices if v not in values]
        if missing:
            raise SchemaViolation(f"model has no value for vertices {missing}", pointer(missing[0]))
        raw = [values[v] for v in H.vertices]
    else:
        raw = list(values)
        if len(raw) != H.n_vertices:
            raise SchemaViolation(f"model has {len(raw)} values for {H.n_vertices} vertices")
    parsed = [to_fraction(v) if is_exact(v) or isinstance(v, str) else float(v) for v in raw]
    for v, p in zip(H.vertices, parsed):
        if p < -tol or p > 1 + tol:
            raise OutOfRange(f"p({v}) = {float(p)} outside [0, 1]", pointer(v))
    model = ProbabilisticModel(H, tuple(parsed), all(p == 0 or p == 1 for p in parsed))
    for e_index, total in enumerate(model.edge_sums()):
        if abs(float(total) - 1.0) > tol:
            raise SchemaViolation(
                f"model sums to {float(total)} on hyperedge {e_index}, expected 1",
                pointer("hyperedges", e_index),
            )
    return model


def mix_models(models: Sequence[ProbabilisticModel], weights: Sequence[Any]) -> ProbabilisticModel:
    """Convex mixture of models on the same scenario."""
    if not models or len(models) != len(weights):
        raise DimensionMismatch("one weight per model is required")
    H = models[0].scenario
    values = [sum(w * m.values[i] for m, w in zip(models, weights)) for i in range(H.n_vertices)]
    return validate_model(H, values)


def _rref(rows: List[List[Fraction]]) -> Tuple[List[List[Fraction]], List[int]]:
    """Reduced row echelon form over the rationals, with pivot columns."""
    M = [list(r) for r in rows]
    pivots: List[int] = []
    r = 0
    n_cols = len(M[0]) if M else 0
    for c in range(n_cols):
        pivot = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if pivot is None:
            continue
        M[r], M[pivot] = M[pivot], M[r]
        lead = M[r][c]
        M[r] = [x / lead for x in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                factor = M[i][c]
                M[i] = [a - factor * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return M, pivots


def _solve_on_support(A: List[List[Fraction]], support: Tuple[int, ...]) -> Optional[List[Fraction]]:
    """Exact solution of ``A[:, support] y = 1`` (None if inconsistent)."""
    augmented = [[row[j] for j in support] + [Fraction(1)] for row in A]
    reduced, pivots = _rref(augmented)
    if len(support) in pivots:
        return None
    y = [Fraction(0)] * len(support)
    for row, col in zip(reduced, pivots):
        y[col] = row[-1]
    return y


def enumerate_model_vertices(
    H: ContextualityScenario, config: Optional[EnumerationConfig] = None
) -> List[ProbabilisticModel]:
    """Enumerate the vertices of the model polytope of H.

    The polytope is ``{p >= 0 : sum_{v in e} p(v) = 1 for all e}``. Every
    basis of the row-reduced incidence system is tried in batches with
    floating-point solves; feasible basic solutions are then re-solved
    exactly on their support and deduplicated by their rational coordinates.

    Args:
        H: Valid scenario with at most ``max_polytope_vertices`` vertices.
        config: Size bounds and batch size.

    Returns:
        Vertices sorted by coordinates (descending), each flagged
        deterministic iff all coordinates are 0 or 1.

    Raises:
        TooLarge: If H has too many vertices.
    """
    config = config or EnumerationConfig()
    n = H.n_vertices
    if n > config.max_polytope_vertices:
        raise TooLarge(
            f"vertex enumeration limited to {config.max_polytope_vertices} scenario vertices, got {n}",
            {"vertices": n, "bound": config.max_polytope_vertices},
        )
    incidence = [[Fraction(0)] * n for _ in H.hyperedges]
    for e, edge in enumerate(H.edge_indices()):
        for v in edge:
            incidence[e][v] = Fraction(1)

    # Independent rows of the incidence matrix are the pivot columns of its transpose
    _, independent = _rref([list(col) for col in zip(*incidence)])
    A_exact = [incidence[i] for i in independent]
    rank = len(A_exact)
    A = np.array([[float(x) for x in row] for row in A_exact])
    ones = np.ones(rank)

    supports: Set[Tuple[int, ...]] = set()
    batch: List[Tuple[int, ...]] = []

    def flush(batch: List[Tuple[int, ...]]) -> None:
        cols = np.array(batch, dtype=np.int64)
        B = np.transpose(A[:, cols], (1, 0, 2))
        invertible = np.abs(np.linalg.det(B)) > 0.5
        if not invertible.any():
            return
        solutions = np.linalg.solve(B[invertible], np.broadcast_to(ones, (int(invertible.sum()), rank))[..., None])[..., 0]
        feasible = np.all(solutions >= -1e-9, axis=1)
        for basis_cols, x in zip(cols[invertible][feasible], solutions[feasible]):
            supports.add(tuple(int(c) for c, value in zip(basis_cols, x) if value > 1e-9))

    for subset in combinations(range(n), rank):
        batch.append(subset)
        if len(batch) >= config.chunk_size:
            flush(batch)
            batch = []
    if batch:
        flush(batch)

    vertices = set()
    for support in supports:
        y = _solve_on_support(A_exact, support)
        if y is None or any(v < 0 for v in y):
            continue
        values = [Fraction(0)] * n
        for col, v in zip(support, y):
            values[col] = v
        vertices.add(tuple(values))

    models = [
        ProbabilisticModel(H, values, all(v == 0 or v == 1 for v in values))
        for values in sorted(vertices, reverse=True)
    ]
    n_det = sum(1 for m in models if m.deterministic)
    logger.info(
        f"Model polytope of '{H.name or 'scenario'}': {len(models)} vertices "
        f"({n_det} deterministic, {len(models) - n_det} indeterministic)"
    )
    return models


# ============================================================================
# SEMIDEFINITE PROGRAMMING
# ============================================================================


@dataclass
class SemidefiniteProgram:
    """Maximize <C, X> subject to <A_k, X> = b_k, X_ij = 0 on a zero pattern, X PSD.

    Attributes:
        dimension: Matrix size n (at most 64).
        objective: Symmetric n x n matrix C.
        constraints: List of (symmetric matrix A_k, scalar b_k).
        zero_pattern: Index pairs (i, j) with X_ij forced to zero.
    """

    dimension: int
    objective: np.ndarray
    constraints: List[Tuple[np.ndarray, float]] = field(default_factory=list)
    zero_pattern: Set[Tuple[int, int]] = field(default_factory=set)

    def __post_init__(self):
        n = self.dimension
        if not 1 <= n <= 64:
            raise OutOfRange(f"SDP dimension {n} outside [1, 64]", "/dimension")
        self.objective = np.asarray(self.objective, dtype=float)
        matrices = [self.objective] + [np.asarray(a, dtype=float) for a, _ in self.constraints]
        for index, matrix in enumerate(matrices):
            if matrix.shape != (n, n):
                raise DimensionMismatch(f"matrix {index} has shape {matrix.shape}, expected ({n}, {n})")
            if not np.allclose(matrix, matrix.T, atol=1e-12):
                raise SchemaViolation(f"matrix {index} is not symmetric")
        for i, j in self.zero_pattern:
            if not (0 <= i < n and 0 <= j < n):
                raise OutOfRange(f"zero-pattern entry ({i}, {j}) outside the matrix")

    def constraint_matrix(self) -> Tuple[np.ndarray, np.ndarray]:
        """Stack every equality (zero pattern included) as rows acting on vec(X)."""
        n = self.dimension
        rows, rhs = [], []
        for a, b in self.constraints:
            rows.append(np.asarray(a, dtype=float).reshape(-1))
            rhs.append(float(b))
        for i, j in sorted({(min(i, j), max(i, j)) for i, j in self.zero_pattern}):
            E = np.zeros((n, n))
            if i == j:
                E[i, i] = 1.0
            else:
                E[i, j] = E[j, i] = 0.5
            rows.append(E.reshape(-1))
            rhs.append(0.0)
        if not rows:
            return np.zeros((0, n * n)), np.zeros(0)
        return np.array(rows), np.array(rhs)


@dataclass
class SdpResult:
    """Solution report of :func:`sdp_maximize`."""

    value: float
    dual_value: float
    X: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    gap: float

    def residuals(self) -> Dict[str, float]:
        return {
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "gap": self.gap,
            "iterations": self.iterations,
        }


def _psd_split(V: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Return (positive part, negative part) of a symmetric matrix."""
    eigenvalues, eigenvectors = np.linalg.eigh((V + V.T) / 2.0)
    positive = np.clip(eigenvalues, 0.0, None)
    negative = np.clip(eigenvalues, None, 0.0)
    return (eigenvectors * positive) @ eigenvectors.T, (eigenvectors * negative) @ eigenvectors.T


def sdp_maximize(
    sdp: SemidefiniteProgram,
    config: Optional[SdpConfig] = None,
    tolerances: Optional[ToleranceConfig] = None,
) -> SdpResult:
    """Solve an SDP by an alternating-direction augmented Lagrangian method.

    The minimization of <-C, X> is attacked through its dual
    ``max b.y : A*(y) + S = -C, S PSD``. Each iteration solves for y with a
    cached Cholesky factor of A A*, projects onto the PSD cone by
    eigendecomposition to get S, and updates X with over-relaxation.

    Args:
        sdp: Program to maximize.
        config: Iteration budget, penalty and relaxation.
        tolerances: ``sdp`` (relative gap) and ``sdp_residual`` thresholds.

    Returns:
        SdpResult with primal and dual values and final residuals.

    Raises:
        Infeasible: If the affine constraints are inconsistent.
        NotConverged: If the budget runs out; residuals are in ``details``.
    """
    config = config or SdpConfig()
    tolerances = tolerances or ToleranceConfig()
    n = sdp.dimension
    C = -sdp.objective
    A, b = sdp.constraint_matrix()
    m = A.shape[0]

    if m:
        AAt = A @ A.T
        try:
            factor = linalg.cho_factor(AAt)
            solve = lambda rhs: linalg.cho_solve(factor, rhs)  # noqa: E731
        except linalg.LinAlgError:
            logger.debug("A A* is singular; falling back to the pseudo-inverse")
            pinv = np.linalg.pinv(AAt)
            solve = lambda rhs: pinv @ rhs  # noqa: E731
        x_ls, *_ = np.linalg.lstsq(A, b, rcond=None)
        if np.linalg.norm(A @ x_ls - b) > 1e-8 * (1.0 + np.linalg.norm(b)):
            raise Infeasible("SDP equality constraints are inconsistent")
    else:
        solve = lambda rhs: rhs  # noqa: E731

    def op(X: np.ndarray) -> np.ndarray:
        return A @ X.reshape(-1) if m else np.zeros(0)

    def adj(y: np.ndarray) -> np.ndarray:
        return (A.T @ y).reshape(n, n) if m else np.zeros((n, n))

    X = np.eye(n) / n
    S = np.zeros((n, n))
    y = np.zeros(m)
    mu = config.penalty
    rho = config.relaxation
    norm_b = 1.0 + np.linalg.norm(b)
    norm_C = 1.0 + np.linalg.norm(C)
    pinf = dinf = gap = float("inf")

    for iteration in range(1, config.max_iterations + 1):
        if m:
            y = -solve(mu * (op(X) - b) + op(S - C))
        V = C - adj(y) - mu * X
        positive, negative = _psd_split(V)
        S = positive
        X = (1.0 - rho) * X + rho * (-negative / mu)

        if iteration % config.check_every == 0 or iteration == config.max_iterations:
            pinf = float(np.linalg.norm(op(X) - b) / norm_b) if m else 0.0
            dinf = float(np.linalg.norm(C - adj(y) - S) / norm_C)
            primal_obj = float(np.sum(C * X))
            dual_obj = float(b @ y) if m else 0.0
            gap = abs(primal_obj - dual_obj) / (1.0 + abs(primal_obj) + abs(dual_obj))
            logger.debug(f"SDP iter {iteration}: pinf={pinf:.2e} dinf={dinf:.2e} gap={gap:.2e} mu={mu:.2e}")
            if pinf < tolerances.sdp_residual and dinf < tolerances.sdp_residual and gap < tolerances.sdp * 1e-2:
                break
            if pinf < 0.1 * dinf:
                mu = max(mu * 0.5, 1e-6)
            elif pinf > 10.0 * dinf:
                mu = min(mu * 2.0, 1e6)
    else:
        raise NotConverged(
            f"SDP solver stopped after {config.max_iterations} iterations",
            {"primal_residual": pinf, "dual_residual": dinf, "gap": gap},
        )

    value = -float(np.sum(C * X))
    dual_value = -float(b @ y) if m else 0.0
    logger.debug(f"SDP converged in {iteration} iterations: value={value:.10f}")
    return SdpResult(value, dual_value, X, iteration, pinf, dinf, gap)
