"""Causal correlations, causal-inequality games and classical processes.

Index conventions are fixed big-endian in party order throughout: for a
scenario (N, M, D) the outcome string x = (x_1..x_N) has row index
sum_k x_k D^(N-k) and the setting string a has column index
sum_k a_k M^(N-k). Process tables p(i|o) use the same order for the input
and output strings, and interventions are 4-index arrays p(x, o | a, i).
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging
import string
import time

import numpy as np

from src.config_loader import AuditConfig, EnumerationConfig, ToleranceConfig
from src.data_handler import load_checkpoint, save_checkpoint, sha256_digest
from src.exceptions import InconsistentEnvironment, TooLarge
from src.optimization import hull_membership
from src.parallel_runner import ParallelRunner, chunk_ranges, flatten
from src.utils import format_duration, number_to_json
from src.validators import (
    OutOfRange,
    SchemaViolation,
    ShapeMismatch,
    UnknownName,
    check_distribution,
    pointer,
    require_int,
    require_key,
    require_list,
    require_number,
    require_object,
)

logger = logging.getLogger(__name__)

MAX_REPLY_WORK = 10 ** 9
MAX_PROCESS_CANDIDATES = 2 ** 24
MAX_INTERVENTION_WORK = 2 ** 26
SEARCH_CHUNK_ELEMENTS = 2 ** 22
GAME_NAMES = ("gyni", "afbw", "gynin")
PROCESS_NAMES = ("afbw", "bfw", "identity-loop")
CORRELATION_NAMES = ("perfect-gyni", "afbw-perfect", "gynin-perfect")


def _strings(base: int, length: int) -> np.ndarray:
    """All strings over range(base) of the given length, big-endian order."""
    return np.array(list(product(range(base), repeat=length)), dtype=np.int64).reshape(base ** length, length)


def _mixed_strings(sizes: Sequence[int]) -> np.ndarray:
    return np.array(list(product(*[range(s) for s in sizes])), dtype=np.int64).reshape(-1, len(sizes))


def _strides(sizes: Sequence[int]) -> np.ndarray:
    strides = np.ones(len(sizes), dtype=np.int64)
    for k in range(len(sizes) - 2, -1, -1):
        strides[k] = strides[k + 1] * sizes[k + 1]
    return strides


# ============================================================================
# SCENARIOS AND CORRELATIONS
# ============================================================================


@dataclass(frozen=True)
class CorrelationalScenario:
    """N parties, each with M settings and D outcomes per setting."""

    n: int
    m: int
    d: int

    def __post_init__(self):
        if self.n < 1:
            raise OutOfRange(f"party count must be at least 1, got {self.n}", "/n")
        if self.m < 1:
            raise OutOfRange(f"settings per party must be at least 1, got {self.m}", "/m")
        if self.d < 2:
            raise OutOfRange(f"outcomes per setting must be at least 2, got {self.d}", "/d")

    @property
    def n_outcome_strings(self) -> int:
        return self.d ** self.n

    @property
    def n_setting_strings(self) -> int:
        return self.m ** self.n

    @property
    def n_cells(self) -> int:
        return self.n_outcome_strings * self.n_setting_strings

    def outcome_strings(self) -> np.ndarray:
        return _strings(self.d, self.n)

    def setting_strings(self) -> np.ndarray:
        return _strings(self.m, self.n)

    def to_dict(self) -> Dict[str, int]:
        return {"n": self.n, "m": self.m, "d": self.d}


@dataclass(frozen=True, eq=False)
class Correlation:
    """Column-stochastic table p(x|a) of shape D^N x M^N."""

    scenario: CorrelationalScenario
    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table)
        expected = (self.scenario.n_outcome_strings, self.scenario.n_setting_strings)
        if table.shape != expected:
            raise ShapeMismatch(f"correlation table has shape {table.shape}, expected {expected}", "/table")
        tol = ToleranceConfig().normalization
        for column in range(table.shape[1]):
            check_distribution(table[:, column], pointer("table", "column", column), tolerance=tol)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_codes(cls, scenario: CorrelationalScenario, codes: Sequence[int]) -> "Correlation":
        """Deterministic correlation: setting index a -> outcome index codes[a]."""
        table = np.zeros((scenario.n_outcome_strings, scenario.n_setting_strings), dtype=np.int64)
        table[np.asarray(codes, dtype=np.int64), np.arange(scenario.n_setting_strings)] = 1
        return cls(scenario, table)

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all((self.table == 0) | (self.table == 1)))

    def codes(self) -> np.ndarray:
        """Outcome index per setting index of a deterministic correlation."""
        if not self.is_deterministic:
            raise SchemaViolation("correlation is not deterministic", "/table")
        return np.argmax(self.table, axis=0)

    def party_marginal(self, k: int) -> np.ndarray:
        """p(x_k | a) as a D x M^N table."""
        digits = self.scenario.outcome_strings()[:, k]
        out = np.zeros((self.scenario.d, self.scenario.n_setting_strings), dtype=self.table.dtype)
        for x in range(self.scenario.d):
            out[x] = self.table[digits == x].sum(axis=0)
        return out

    def to_dict(self) -> Dict[str, Any]:
        data = self.scenario.to_dict()
        data["table"] = [[number_to_json(v) for v in row] for row in self.table.tolist()]
        return data


def product_correlation(locals_: Sequence[np.ndarray]) -> Correlation:
    """Correlation p(x|a) = prod_k p_k(x_k|a_k) from per-party D x M tables."""
    tables = [np.asarray(t) for t in locals_]
    d, m = tables[0].shape
    scenario = CorrelationalScenario(len(tables), m, d)
    xs = scenario.outcome_strings()
    as_ = scenario.setting_strings()
    table = np.ones((scenario.n_outcome_strings, scenario.n_setting_strings), dtype=np.result_type(*tables))
    for k, t in enumerate(tables):
        if t.shape != (d, m):
            raise ShapeMismatch(f"party {k} table has shape {t.shape}, expected {(d, m)}", pointer("locals", k))
        table = table * t[xs[:, k][:, None], as_[:, k][None, :]]
    return Correlation(scenario, table)


def uniform_correlation(scenario: CorrelationalScenario) -> Correlation:
    table = np.full((scenario.n_outcome_strings, scenario.n_setting_strings), 1.0 / scenario.n_outcome_strings)
    return Correlation(scenario, table)


def parse_correlation(raw: Any) -> Correlation:
    """Parse correlation JSON {n, m, d, table}; rows are outcome strings."""
    obj = require_object(raw)
    scenario = CorrelationalScenario(
        require_int(require_key(obj, "n"), "/n", minimum=1),
        require_int(require_key(obj, "m"), "/m", minimum=1),
        require_int(require_key(obj, "d"), "/d", minimum=2),
    )
    rows = require_list(require_key(obj, "table"), "/table")
    values = [
        [require_number(v, pointer("table", r, c)) for c, v in enumerate(require_list(row, pointer("table", r)))]
        for r, row in enumerate(rows)
    ]
    if all(v.denominator == 1 for row in values for v in row):
        table = np.array([[int(v) for v in row] for row in values], dtype=np.int64)
    else:
        table = np.array([[float(v) for v in row] for row in values], dtype=float)
    return Correlation(scenario, table)


# ============================================================================
# DETERMINISTIC CAUSAL VERTICES
# ============================================================================


def recursion_estimate(scenario: CorrelationalScenario) -> int:
    """Number of compositions the vertex recursion generates before deduplication."""
    count = scenario.d ** scenario.m
    for k in range(2, scenario.n + 1):
        count = k * scenario.d ** scenario.m * count ** scenario.m
    return count


def _check_vertex_bounds(scenario: CorrelationalScenario, config: EnumerationConfig) -> None:
    if scenario.n_cells > config.max_causal_cells:
        raise TooLarge(
            f"scenario {scenario.to_dict()} has {scenario.n_cells} cells, limit {config.max_causal_cells}",
            details={"cells": scenario.n_cells, "limit": config.max_causal_cells},
        )
    estimate = recursion_estimate(scenario)
    if estimate > config.max_causal_recursion:
        raise TooLarge(
            f"vertex recursion would generate {estimate} candidates, limit {config.max_causal_recursion}",
            details={"recursion": estimate, "limit": config.max_causal_recursion},
        )


def _compose(sub_codes: np.ndarray, n: int, m: int, d: int, k: int, f: Sequence[int]) -> np.ndarray:
    """Vertices where party k acts first with x_k = f(a_k)."""
    settings = _strings(m, n)
    a_k = settings[:, k]
    rest = np.delete(settings, k, axis=1)
    rest_index = rest @ (m ** np.arange(n - 2, -1, -1))

    rest_digits = _strings(d, n - 1)
    insert = np.zeros((d, d ** (n - 1)), dtype=np.int64)
    weights = d ** np.arange(n - 1, -1, -1)
    for x in range(d):
        insert[x] = np.insert(rest_digits, k, x, axis=1) @ weights

    choices = _strings(sub_codes.shape[0], m)
    rest_outcome = sub_codes[choices[:, a_k], rest_index[None, :]]
    x_k = np.asarray(f, dtype=np.int64)[a_k]
    return insert[x_k[None, :], rest_outcome]


@lru_cache(maxsize=16)
def _vertex_codes(n: int, m: int, d: int) -> np.ndarray:
    if n == 1:
        codes = _strings(d, m)
    else:
        sub = _vertex_codes(n - 1, m, d)
        parts = [_compose(sub, n, m, d, k, f) for k in range(n) for f in _strings(d, m)]
        codes = np.unique(np.concatenate(parts), axis=0)
    codes.setflags(write=False)
    return codes


def _composition_task(n: int, m: int, d: int, k: int, f_index: int) -> np.ndarray:
    sub = _vertex_codes(n - 1, m, d)
    return _compose(sub, n, m, d, k, _strings(d, m)[f_index])


def causal_vertex_codes(
    scenario: CorrelationalScenario,
    config: Optional[EnumerationConfig] = None,
    threads: int = 1,
) -> np.ndarray:
    """Deterministic causal correlations as an array (vertices, M^N) of outcome indices.

    Rows are sorted lexicographically, which is the canonical vertex order.

    Raises:
        TooLarge: If the scenario exceeds the cell or recursion bound.
    """
    config = config or EnumerationConfig()
    _check_vertex_bounds(scenario, config)
    n, m, d = scenario.n, scenario.m, scenario.d
    start = time.time()
    if threads > 1 and n >= 3:
        tasks = [(n, m, d, k, f) for k in range(n) for f in range(d ** m)]
        parts = ParallelRunner(threads, label="vertex compositions").map(_composition_task, tasks, star=True)
        codes = np.unique(np.concatenate(parts), axis=0)
    else:
        codes = _vertex_codes(n, m, d)
    logger.info(
        f"Enumerated {codes.shape[0]} deterministic causal vertices for (N,M,D)=({n},{m},{d}) "
        f"in {format_duration(time.time() - start)}"
    )
    return codes


def deterministic_causal_vertices(
    scenario: CorrelationalScenario,
    config: Optional[EnumerationConfig] = None,
    threads: int = 1,
) -> List[Correlation]:
    """All deterministic causal correlations of the scenario, deduplicated."""
    codes = causal_vertex_codes(scenario, config, threads)
    return [Correlation.from_codes(scenario, row) for row in codes]


def _causal_on(parties: frozenset, fixed: Dict[int, int], outcomes: np.ndarray, settings: np.ndarray, m: int) -> bool:
    if len(parties) <= 1:
        return True
    rows = np.ones(settings.shape[0], dtype=bool)
    for party, value in fixed.items():
        rows &= settings[:, party] == value
    for k in sorted(parties):
        local = True
        for a in range(m):
            selected = outcomes[rows & (settings[:, k] == a), k]
            if selected.size and np.unique(selected).size > 1:
                local = False
                break
        if not local:
            continue
        if all(_causal_on(parties - {k}, {**fixed, k: a}, outcomes, settings, m) for a in range(m)):
            return True
    return False


def is_deterministic_causal(correlation: Correlation) -> bool:
    """Recursive causality test for a deterministic correlation.

    Some party's outcome must depend on its own setting only, and for each
    of its settings the remaining parties must again pass the test.
    """
    s = correlation.scenario
    outcomes = s.outcome_strings()[correlation.codes()]
    return _causal_on(frozenset(range(s.n)), {}, outcomes, s.setting_strings(), s.m)


def brute_force_causal_codes(scenario: CorrelationalScenario, limit: int = 2 ** 20) -> np.ndarray:
    """Filter every deterministic correlation through is_deterministic_causal."""
    total = scenario.n_outcome_strings ** scenario.n_setting_strings
    if total > limit:
        raise TooLarge(f"{total} deterministic correlations exceed the brute-force limit {limit}")
    keep = [
        codes
        for codes in product(range(scenario.n_outcome_strings), repeat=scenario.n_setting_strings)
        if is_deterministic_causal(Correlation.from_codes(scenario, codes))
    ]
    return np.array(keep, dtype=np.int64).reshape(len(keep), scenario.n_setting_strings)


def _vertex_matrix(scenario: CorrelationalScenario, codes: np.ndarray) -> np.ndarray:
    cols = scenario.n_setting_strings
    G = np.zeros((codes.shape[0], scenario.n_cells), dtype=np.int64)
    G[np.arange(codes.shape[0])[:, None], codes * cols + np.arange(cols)[None, :]] = 1
    return G


@dataclass
class CausalityVerdict:
    """Result of a causal-polytope membership test.

    A noncausal verdict carries a causal inequality sum W(x,a) p(x|a) <= bound,
    normalized so that the bound is attained by a causal vertex.
    """

    causal: bool
    n_vertices: int
    weights: List[Tuple[int, Any]] = field(default_factory=list)
    coefficients: Optional[np.ndarray] = None
    bound: Optional[float] = None
    value: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"causal": self.causal, "n_vertices": self.n_vertices}
        if self.causal:
            data["weights"] = [{"vertex": i, "weight": number_to_json(w)} for i, w in self.weights]
        else:
            data["inequality"] = {
                "coefficients": self.coefficients.tolist(),
                "bound": self.bound,
                "value": self.value,
            }
        return data


def is_causal(
    correlation: Correlation,
    config: Optional[EnumerationConfig] = None,
    tolerances: Optional[ToleranceConfig] = None,
    threads: int = 1,
) -> CausalityVerdict:
    """Decide membership of a correlation in the causal polytope.

    Membership is decided by column generation. A restricted hull test runs
    on the vertices that agree with the correlation on the most cells; when
    it fails, its separating direction is scored against every vertex in one
    matrix product and the best-scoring vertices above the restricted bound
    join the restricted set. The loop stops when the restricted test
    succeeds or when no vertex beats the separating inequality, which is
    then a causal inequality for the whole polytope.

    Args:
        correlation: Query correlation.
        config: Enumeration bounds and the per-round column batch.
        tolerances: Hull separation tolerance.
        threads: Workers for the vertex enumeration.

    Returns:
        CausalityVerdict with convex weights on vertices or a causal inequality.

    Raises:
        TooLarge: If the vertices cannot be enumerated.
    """
    config = config or EnumerationConfig()
    tolerances = tolerances or ToleranceConfig()
    s = correlation.scenario
    codes = causal_vertex_codes(s, config, threads)
    n_vertices = codes.shape[0]
    G = _vertex_matrix(s, codes)
    point = correlation.table.ravel().tolist()
    p = np.asarray(correlation.table, dtype=float).ravel()
    batch = max(1, config.column_batch)

    overlap = G @ p
    active = np.sort(np.argsort(-overlap, kind="stable")[: min(n_vertices, 2 * batch)])
    rounds = 0
    while True:
        rounds += 1
        membership = hull_membership(point, G[active].tolist(), exact=False, tolerance=tolerances.hull)
        if membership.member:
            support = active[membership.support()]
            weights = list(zip(support.tolist(), [membership.weights[i] for i in membership.support()]))
            exact = hull_membership(point, G[support].tolist(), tolerance=tolerances.hull)
            if exact.member:
                weights = [(int(support[i]), exact.weights[i]) for i in exact.support()]
            logger.info(
                f"Correlation is causal; {len(weights)} vertices in the decomposition "
                f"({rounds} rounds, {active.size} of {n_vertices} vertices priced in)"
            )
            return CausalityVerdict(True, n_vertices, weights=weights)

        normal = np.array(membership.normal)
        scores = G @ normal
        bound = float(scores.max())
        value = float(p @ normal)
        if value - bound > tolerances.hull or active.size == n_vertices:
            coefficients = normal.reshape(s.n_outcome_strings, s.n_setting_strings)
            logger.info(
                f"Correlation is noncausal: inequality value {value:.6f} exceeds causal bound {bound:.6f} "
                f"({rounds} rounds, {active.size} of {n_vertices} vertices priced in)"
            )
            return CausalityVerdict(False, n_vertices, coefficients=coefficients, bound=bound, value=value)

        entering = np.setdiff1d(np.flatnonzero(scores > membership.bound), active)
        if entering.size == 0:
            # Restricted separation below tolerance: settle on the full vertex set
            logger.warning(f"Column generation stalled after {rounds} rounds; testing all {n_vertices} vertices")
            active = np.arange(n_vertices)
            continue
        entering = entering[np.argsort(-scores[entering], kind="stable")][:batch]
        logger.debug(f"Round {rounds}: {entering.size} vertices enter, best score {scores[entering[0]]:.6f}")
        active = np.union1d(active, entering)


# ============================================================================
# GAMES
# ============================================================================


@dataclass(frozen=True, eq=False)
class GameSpec:
    """Causal game: success is sum_a prior(a) sum_x W(x,a) p(x|a)."""

    name: str
    scenario: CorrelationalScenario
    weights: np.ndarray
    prior: Tuple[Fraction, ...]

    def __post_init__(self):
        weights = np.asarray(self.weights)
        expected = (self.scenario.n_outcome_strings, self.scenario.n_setting_strings)
        if weights.shape != expected:
            raise ShapeMismatch(f"weight table has shape {weights.shape}, expected {expected}", "/weights")
        if np.any(weights < 0):
            raise OutOfRange("game weights must be nonnegative", "/weights")
        if len(self.prior) != self.scenario.n_setting_strings:
            raise ShapeMismatch(
                f"prior has {len(self.prior)} entries, expected {self.scenario.n_setting_strings}", "/prior"
            )
        if any(p < 0 for p in self.prior) or sum(self.prior) != 1:
            raise SchemaViolation("setting prior must be a probability distribution", "/prior")
        object.__setattr__(self, "weights", weights)

    @property
    def exact(self) -> bool:
        return np.issubdtype(self.weights.dtype, np.integer)

    def score_table(self) -> np.ndarray:
        """prior(a) W(x,a) as floats."""
        return self.weights * np.array([float(p) for p in self.prior])[None, :]

    def to_dict(self) -> Dict[str, Any]:
        data = {"name": self.name, **self.scenario.to_dict()}
        data["weights"] = self.weights.tolist()
        data["prior"] = [number_to_json(p) for p in self.prior]
        return data


def _uniform_prior(count: int) -> Tuple[Fraction, ...]:
    return tuple(Fraction(1, count) for _ in range(count))


def _game_from_rule(name: str, scenario: CorrelationalScenario, wins) -> GameSpec:
    xs = scenario.outcome_strings()
    as_ = scenario.setting_strings()
    weights = np.zeros((scenario.n_outcome_strings, scenario.n_setting_strings), dtype=np.int64)
    for xi, x in enumerate(xs):
        for ai, a in enumerate(as_):
            weights[xi, ai] = 1 if wins(tuple(int(v) for v in x), tuple(int(v) for v in a)) else 0
    return GameSpec(name, scenario, weights, _uniform_prior(scenario.n_setting_strings))


def _gyni_wins(x: Tuple[int, ...], a: Tuple[int, ...]) -> bool:
    return x[0] == a[1] and x[1] == a[0]


def _afbw_wins(x: Tuple[int, ...], a: Tuple[int, ...]) -> bool:
    if sum(a) <= 1:
        return x == (a[2], a[0], a[1])
    return x == (1 - a[1], 1 - a[2], 1 - a[0])


def _gynin_wins(x: Tuple[int, ...], a: Tuple[int, ...]) -> bool:
    shifted = (a[2], a[0], a[1])
    return x == shifted or x == tuple(1 - v for v in shifted)


def builtin_game(name: str) -> GameSpec:
    """Guess-your-neighbour's-input games.

    ``gyni`` is bipartite (x1 = a2 and x2 = a1). ``afbw`` is tripartite:
    with majority setting 0 each party guesses its left neighbour's
    setting, otherwise it guesses the negation of its right neighbour's.
    ``gynin`` wins when everybody guesses the left neighbour or everybody
    guesses its negation. All priors are uniform.

    Raises:
        UnknownName: For any other name.
    """
    key = name.lower()
    if key == "gyni":
        return _game_from_rule("gyni", CorrelationalScenario(2, 2, 2), _gyni_wins)
    if key == "afbw":
        return _game_from_rule("afbw", CorrelationalScenario(3, 2, 2), _afbw_wins)
    if key == "gynin":
        return _game_from_rule("gynin", CorrelationalScenario(3, 2, 2), _gynin_wins)
    raise UnknownName(f"unknown game {name!r}; expected one of {', '.join(GAME_NAMES)}", "/game")


def parse_game(raw: Any) -> GameSpec:
    """Parse a custom game {name?, n, m, d, weights, prior?}."""
    obj = require_object(raw)
    scenario = CorrelationalScenario(
        require_int(require_key(obj, "n"), "/n", minimum=1),
        require_int(require_key(obj, "m"), "/m", minimum=1),
        require_int(require_key(obj, "d"), "/d", minimum=2),
    )
    rows = require_list(require_key(obj, "weights"), "/weights")
    values = [
        [require_number(v, pointer("weights", r, c)) for c, v in enumerate(require_list(row, pointer("weights", r)))]
        for r, row in enumerate(rows)
    ]
    if all(v.denominator == 1 for row in values for v in row):
        weights = np.array([[int(v) for v in row] for row in values], dtype=np.int64)
    else:
        weights = np.array([[float(v) for v in row] for row in values], dtype=float)
    if "prior" in obj:
        prior = tuple(
            require_number(v, pointer("prior", i)) for i, v in enumerate(require_list(obj["prior"], "/prior"))
        )
    else:
        prior = _uniform_prior(scenario.n_setting_strings)
    return GameSpec(str(obj.get("name", "custom")), scenario, weights, prior)


def game_value(game: GameSpec, correlation: Correlation) -> Any:
    """Success probability of a correlation; exact when the tables are integral or rational.

    Raises:
        ShapeMismatch: If the game and correlation scenarios differ.
    """
    if game.scenario != correlation.scenario:
        raise ShapeMismatch(
            f"game scenario {game.scenario.to_dict()} does not match correlation scenario "
            f"{correlation.scenario.to_dict()}",
            "/correlation",
        )
    table = correlation.table
    if game.exact and np.issubdtype(table.dtype, np.integer):
        column_scores = (game.weights * table).sum(axis=0)
        return sum((p * int(s) for p, s in zip(game.prior, column_scores)), Fraction(0))
    if game.exact and _common_denominator(table) is not None:
        column_scores = (game.weights.astype(object) * table).sum(axis=0)
        return sum((p * Fraction(s) for p, s in zip(game.prior, column_scores)), Fraction(0))
    return float(np.sum(game.score_table() * table))


@dataclass
class CausalBound:
    """Maximum of a game over the deterministic causal vertices."""

    game: str
    value: Any
    vertex_index: int
    vertex: Correlation
    n_vertices: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "game": self.game,
            "value": number_to_json(self.value),
            "vertex_index": self.vertex_index,
            "vertex_codes": [int(c) for c in self.vertex.codes()],
            "n_vertices": self.n_vertices,
        }


def causal_bound(
    game: GameSpec,
    config: Optional[EnumerationConfig] = None,
    threads: int = 1,
) -> CausalBound:
    """Maximize a game over causal correlations via their deterministic vertices.

    Ties are broken towards the first vertex in canonical order.
    """
    s = game.scenario
    codes = causal_vertex_codes(s, config, threads)
    scores = game.score_table()[codes, np.arange(s.n_setting_strings)[None, :]].sum(axis=1)
    best = int(np.argmax(scores))
    vertex = Correlation.from_codes(s, codes[best])
    value = game_value(game, vertex)
    logger.info(f"Causal bound of {game.name}: {value} over {codes.shape[0]} vertices")
    return CausalBound(game.name, value, best, vertex, codes.shape[0])


# ============================================================================
# PROCESS ENVIRONMENTS AND INTERVENTIONS
# ============================================================================


@dataclass(frozen=True, eq=False)
class ProcessEnvironment:
    """Environment p(i|o) with per-party input sizes |I_k| and output sizes |O_k|.

    ``table`` has shape (prod |I_k|, prod |O_k|) and is column-stochastic.
    """

    inputs: Tuple[int, ...]
    outputs: Tuple[int, ...]
    table: np.ndarray
    name: str = ""

    def __post_init__(self):
        if len(self.inputs) != len(self.outputs) or not self.inputs:
            raise ShapeMismatch("inputs and outputs must list one size per party", "/inputs")
        if any(v < 1 for v in self.inputs) or any(v < 1 for v in self.outputs):
            raise OutOfRange("alphabet sizes must be positive", "/inputs")
        table = np.asarray(self.table)
        expected = (int(np.prod(self.inputs)), int(np.prod(self.outputs)))
        if table.shape != expected:
            raise ShapeMismatch(f"process table has shape {table.shape}, expected {expected}", "/table")
        tol = ToleranceConfig().normalization
        for column in range(table.shape[1]):
            check_distribution(table[:, column], pointer("table", "column", column), tolerance=tol)
        object.__setattr__(self, "inputs", tuple(int(v) for v in self.inputs))
        object.__setattr__(self, "outputs", tuple(int(v) for v in self.outputs))
        object.__setattr__(self, "table", table)

    @property
    def n(self) -> int:
        return len(self.inputs)

    @property
    def deterministic(self) -> bool:
        return bool(np.all((self.table == 0) | (self.table == 1)))

    @classmethod
    def from_functions(
        cls,
        functions: Sequence[Sequence[int]],
        inputs: Sequence[int],
        outputs: Sequence[int],
        name: str = "",
    ) -> "ProcessEnvironment":
        """Deterministic environment i_k = omega_k(o) from truth tables over output strings."""
        n_out = int(np.prod(outputs))
        if len(functions) != len(inputs):
            raise ShapeMismatch(f"expected {len(inputs)} functions, got {len(functions)}", "/functions")
        i_index = np.zeros(n_out, dtype=np.int64)
        strides = _strides(inputs)
        for k, fn in enumerate(functions):
            values = np.asarray(fn, dtype=np.int64)
            if values.shape != (n_out,):
                raise ShapeMismatch(
                    f"function {k} has {values.size} entries, expected {n_out}", pointer("functions", k)
                )
            if np.any(values < 0) or np.any(values >= inputs[k]):
                raise OutOfRange(
                    f"function {k} leaves the input alphabet of size {inputs[k]}", pointer("functions", k)
                )
            i_index += values * strides[k]
        table = np.zeros((int(np.prod(inputs)), n_out), dtype=np.int64)
        table[i_index, np.arange(n_out)] = 1
        return cls(tuple(inputs), tuple(outputs), table, name)

    def omega_table(self) -> np.ndarray:
        """Input-string index per output string of a deterministic environment."""
        if not self.deterministic:
            raise SchemaViolation("process environment is not deterministic", "/table")
        return np.argmax(self.table, axis=0)

    def party_functions(self) -> List[List[int]]:
        """Per-party truth tables omega_k over output strings."""
        digits = _mixed_strings(self.inputs)[self.omega_table()]
        return [digits[:, k].tolist() for k in range(self.n)]

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"name": self.name, "inputs": list(self.inputs), "outputs": list(self.outputs)}
        if self.deterministic:
            data["kind"] = "deterministic"
            data["functions"] = self.party_functions()
        else:
            data["kind"] = "table"
            data["table"] = [[number_to_json(v) for v in row] for row in self.table.tolist()]
        return data


def _int_list(raw: Any, path: str, minimum: int) -> List[int]:
    return [require_int(v, f"{path}/{i}", minimum=minimum) for i, v in enumerate(require_list(raw, path))]


def parse_process(raw: Any) -> ProcessEnvironment:
    """Parse process JSON.

    Deterministic: {"kind": "deterministic", "inputs", "outputs", "functions"}
    with one truth table per party over output strings. Otherwise
    {"inputs", "outputs", "table"} with rows indexed by input strings.
    """
    obj = require_object(raw)
    inputs = _int_list(require_key(obj, "inputs"), "/inputs", minimum=1)
    outputs = _int_list(require_key(obj, "outputs"), "/outputs", minimum=1)
    name = str(obj.get("name", ""))
    if obj.get("kind", "table") == "deterministic" or "functions" in obj:
        functions = [
            _int_list(fn, pointer("functions", k), minimum=0)
            for k, fn in enumerate(require_list(require_key(obj, "functions"), "/functions"))
        ]
        return ProcessEnvironment.from_functions(functions, inputs, outputs, name)
    rows = require_list(require_key(obj, "table"), "/table")
    table = np.array(
        [
            [float(require_number(v, pointer("table", r, c))) for c, v in enumerate(require_list(row, pointer("table", r)))]
            for r, row in enumerate(rows)
        ]
    )
    return ProcessEnvironment(tuple(inputs), tuple(outputs), table, name)


def afbw_process() -> ProcessEnvironment:
    """i1 = not(o2) o3, i2 = not(o3) o1, i3 = not(o1) o2."""
    outs = _strings(2, 3)
    o1, o2, o3 = outs[:, 0], outs[:, 1], outs[:, 2]
    functions = [(1 - o2) * o3, (1 - o3) * o1, (1 - o1) * o2]
    return ProcessEnvironment.from_functions(functions, (2, 2, 2), (2, 2, 2), name="afbw")


def bfw_process() -> ProcessEnvironment:
    """Equal mixture of the cyclic copy i = (o3, o1, o2) and its negation, in exact arithmetic."""
    outs = _strings(2, 3)
    strides = _strides((2, 2, 2))
    copy = outs[:, [2, 0, 1]] @ strides
    anti = (1 - outs[:, [2, 0, 1]]) @ strides
    table = np.full((8, 8), Fraction(0), dtype=object)
    table[copy, np.arange(8)] += Fraction(1, 2)
    table[anti, np.arange(8)] += Fraction(1, 2)
    return ProcessEnvironment((2, 2, 2), (2, 2, 2), table, name="bfw")


def identity_loop_process() -> ProcessEnvironment:
    """Single party whose input is its own output."""
    return ProcessEnvironment.from_functions([[0, 1]], (2,), (2,), name="identity-loop")


def independent_process(
    distribution: Sequence[float], inputs: Sequence[int], outputs: Sequence[int]
) -> ProcessEnvironment:
    """Environment ignoring the outputs: p(i|o) = p(i)."""
    column = np.asarray(distribution, dtype=float)
    table = np.tile(column[:, None], (1, int(np.prod(outputs))))
    return ProcessEnvironment(tuple(inputs), tuple(outputs), table, name="independent")


def builtin_process(name: str) -> ProcessEnvironment:
    key = name.lower()
    if key == "afbw":
        return afbw_process()
    if key == "bfw":
        return bfw_process()
    if key == "identity-loop":
        return identity_loop_process()
    raise UnknownName(f"unknown process {name!r}; expected one of {', '.join(PROCESS_NAMES)}", "/process")


@dataclass(frozen=True, eq=False)
class Intervention:
    """Local operation p(x, o | a, i) stored with axes (x, o, a, i)."""

    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table)
        if table.ndim != 4:
            raise ShapeMismatch(f"intervention table must have 4 axes, got {table.ndim}", "/table")
        if np.any(table < 0):
            raise OutOfRange("intervention probabilities must be nonnegative", "/table")
        sums = table.sum(axis=(0, 1))
        worst = float(np.max(np.abs(sums - 1)))
        if worst > ToleranceConfig().normalization:
            raise SchemaViolation(
                f"intervention is not normalized over (x, o); worst deviation {worst:.3e}", "/table"
            )
        object.__setattr__(self, "table", table)

    @property
    def outcomes(self) -> int:
        return self.table.shape[0]

    @property
    def outputs(self) -> int:
        return self.table.shape[1]

    @property
    def settings(self) -> int:
        return self.table.shape[2]

    @property
    def inputs(self) -> int:
        return self.table.shape[3]

    @property
    def deterministic(self) -> bool:
        return bool(np.all((self.table == 0) | (self.table == 1)))

    @classmethod
    def from_functions(cls, g: Any, h: Any, outcomes: int, outputs: int) -> "Intervention":
        """Deterministic intervention x = g[a][i], o = h[a][i]."""
        g = np.asarray(g, dtype=np.int64)
        h = np.asarray(h, dtype=np.int64)
        if g.shape != h.shape or g.ndim != 2:
            raise ShapeMismatch("g and h must be settings x inputs arrays of equal shape", "/g")
        table = np.zeros((outcomes, outputs) + g.shape, dtype=np.int64)
        a, i = np.indices(g.shape)
        table[g, h, a, i] = 1
        return cls(table)


def copy_intervention(settings: int = 2, inputs: int = 2) -> Intervention:
    """x = i and o = a."""
    table = np.zeros((inputs, settings, settings, inputs), dtype=np.int64)
    for a in range(settings):
        for i in range(inputs):
            table[i, a, a, i] = 1
    return Intervention(table)


def copy_interventions(n: int, settings: int = 2, inputs: int = 2) -> List[Intervention]:
    return [copy_intervention(settings, inputs) for _ in range(n)]


def parse_interventions(raw: Any) -> List[Intervention]:
    """Parse ``{"interventions": [...]}``; each entry is {"table"} or {"g", "h", "outcomes", "outputs"}."""
    entries = require_list(require_key(require_object(raw), "interventions"), "/interventions", min_length=1)
    result = []
    for k, entry in enumerate(entries):
        path = pointer("interventions", k)
        entry = require_object(entry, path)
        if "table" in entry:
            result.append(Intervention(np.asarray(entry["table"], dtype=float)))
            continue
        result.append(
            Intervention.from_functions(
                require_key(entry, "g", path),
                require_key(entry, "h", path),
                outcomes=require_int(require_key(entry, "outcomes", path), f"{path}/outcomes", minimum=1),
                outputs=require_int(require_key(entry, "outputs", path), f"{path}/outputs", minimum=1),
            )
        )
    return result


@dataclass
class ConsistencyReport:
    """Logical-consistency scan over deterministic reply tuples."""

    consistent: bool
    checked: int
    min_mass: float
    max_mass: float
    violation: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "consistent": self.consistent,
            "checked": self.checked,
            "min_mass": self.min_mass,
            "max_mass": self.max_mass,
            "violation": self.violation,
        }


def process_consistency(
    env: ProcessEnvironment,
    tolerances: Optional[ToleranceConfig] = None,
    config: Optional[EnumerationConfig] = None,
) -> ConsistencyReport:
    """Check sum_i p(i | f(i)) = 1 for every deterministic reply tuple f.

    Reply tuples are enumerated big-endian over parties, each party's reply
    listed as (f_k(0), f_k(1), ...). The reported violation is the tuple of
    smallest total mass, earliest on ties.

    Raises:
        TooLarge: If the input space or the scan exceeds its bounds.
    """
    tol = (tolerances or ToleranceConfig()).normalization
    config = config or EnumerationConfig()
    n_in = int(np.prod(env.inputs))
    reply_counts = [o ** i for i, o in zip(env.inputs, env.outputs)]
    total = int(np.prod([int(c) for c in reply_counts], dtype=object))
    if n_in > config.max_reply_inputs or total * n_in > MAX_REPLY_WORK:
        raise TooLarge(
            f"consistency scan over {total} reply tuples and {n_in} input strings is too large",
            details={"reply_tuples": total, "input_strings": n_in},
        )

    input_strings = _mixed_strings(env.inputs)
    replies = [_strings(o, i) for i, o in zip(env.inputs, env.outputs)]
    out_strides = _strides(env.outputs)
    chunk = max(1, (2 ** 20) // n_in)
    masses = np.empty(total)
    for start, stop in chunk_ranges(total, chunk):
        digits = np.stack(np.unravel_index(np.arange(start, stop), reply_counts), axis=1)
        o_index = np.zeros((stop - start, n_in), dtype=np.int64)
        for k in range(env.n):
            o_index += replies[k][digits[:, k][:, None], input_strings[None, :, k]] * out_strides[k]
        masses[start:stop] = env.table[np.arange(n_in)[None, :], o_index].sum(axis=1)

    bad = np.abs(masses - 1.0) > tol
    report = ConsistencyReport(not bad.any(), total, float(masses.min()), float(masses.max()))
    if bad.any():
        candidates = np.flatnonzero(bad)
        worst = int(candidates[np.argmin(masses[candidates])])
        digits = np.unravel_index(worst, reply_counts)
        report.violation = {
            "reply": [replies[k][int(digits[k])].tolist() for k in range(env.n)],
            "mass": float(masses[worst]),
        }
        logger.info(
            f"Process {env.name or '<unnamed>'} is inconsistent; "
            f"reply {report.violation['reply']} has mass {masses[worst]}"
        )
    else:
        logger.info(f"Process {env.name or '<unnamed>'} is consistent over {total} reply tuples")
    return report


def correlation_from_process(
    env: ProcessEnvironment,
    interventions: Sequence[Intervention],
    scenario: CorrelationalScenario,
    check: bool = True,
) -> Correlation:
    """p(x|a) = sum_{i,o} prod_k p(x_k, o_k | a_k, i_k) p(i|o).

    Args:
        env: Process environment.
        interventions: One intervention per party.
        scenario: Target correlational scenario.
        check: Run the consistency scan first; when False an unnormalized
            result is still rejected.

    Raises:
        ShapeMismatch: If alphabets do not line up.
        InconsistentEnvironment: If the environment is inconsistent.
    """
    if len(interventions) != env.n or scenario.n != env.n:
        raise ShapeMismatch(
            f"{env.n}-party environment with {len(interventions)} interventions and {scenario.n}-party scenario",
            "/interventions",
        )
    for k, iv in enumerate(interventions):
        expected = (scenario.d, env.outputs[k], scenario.m, env.inputs[k])
        if iv.table.shape != expected:
            raise ShapeMismatch(
                f"intervention {k} has shape {iv.table.shape}, expected {expected}", pointer("interventions", k)
            )
    if check:
        report = process_consistency(env)
        if not report.consistent:
            raise InconsistentEnvironment(
                f"process {env.name or '<unnamed>'} is not logically consistent", details=report.to_dict()
            )

    # Rational environments with integral interventions are contracted over a common denominator
    denominator = _common_denominator(env.table)
    exact = denominator is not None and all(np.issubdtype(iv.table.dtype, np.integer) for iv in interventions)
    env_table = (env.table * denominator).astype(np.int64) if exact else env.table
    if env_table.dtype == object:
        env_table = env_table.astype(float)

    letters = iter(string.ascii_letters)
    xs = [next(letters) for _ in range(env.n)]
    os_ = [next(letters) for _ in range(env.n)]
    as_ = [next(letters) for _ in range(env.n)]
    is_ = [next(letters) for _ in range(env.n)]
    operands = [env_table.reshape(env.inputs + env.outputs)]
    subscripts = ["".join(is_) + "".join(os_)]
    for k, iv in enumerate(interventions):
        operands.append(iv.table)
        subscripts.append(xs[k] + os_[k] + as_[k] + is_[k])
    spec = ",".join(subscripts) + "->" + "".join(xs) + "".join(as_)
    table = np.einsum(spec, *operands).reshape(scenario.n_outcome_strings, scenario.n_setting_strings)
    if exact and denominator != 1:
        table = np.array([[Fraction(int(v), denominator) for v in row] for row in table], dtype=object)

    sums = table.sum(axis=0)
    if np.max(np.abs(sums - 1)) > ToleranceConfig().normalization:
        raise InconsistentEnvironment(
            "process and interventions do not produce a normalized correlation",
            details={"column_sums": [float(v) for v in sums]},
        )
    return Correlation(scenario, table)


def _common_denominator(table: np.ndarray) -> Optional[int]:
    """LCM of the denominators of an integral or rational table; None for float tables."""
    if np.issubdtype(table.dtype, np.integer):
        return 1
    if table.dtype != object or not all(isinstance(v, (int, np.integer, Fraction)) for v in table.flat):
        return None
    return int(np.lcm.reduce(np.array([Fraction(v).denominator for v in table.flat], dtype=np.int64)))


def quasi_embed(correlation: Correlation) -> Tuple[ProcessEnvironment, List[Intervention]]:
    """Environment p(i|o) = p(x=i | a=o) with copy interventions reproducing the correlation."""
    s = correlation.scenario
    env = ProcessEnvironment((s.d,) * s.n, (s.m,) * s.n, correlation.table.copy(), name="quasi-embedding")
    return env, copy_interventions(s.n, settings=s.m, inputs=s.d)


def perfect_gyni_correlation() -> Correlation:
    s = CorrelationalScenario(2, 2, 2)
    codes = [int(a[1]) * 2 + int(a[0]) for a in s.setting_strings()]
    return Correlation.from_codes(s, codes)


def builtin_correlation(name: str) -> Correlation:
    """Named correlations: perfect GYNI and the game-winning AF/BW and BFW correlations."""
    key = name.lower()
    if key == "perfect-gyni":
        return perfect_gyni_correlation()
    tripartite = CorrelationalScenario(3, 2, 2)
    if key == "afbw-perfect":
        return correlation_from_process(afbw_process(), copy_interventions(3), tripartite)
    if key == "gynin-perfect":
        return correlation_from_process(bfw_process(), copy_interventions(3), tripartite)
    raise UnknownName(f"unknown correlation {name!r}; expected one of {', '.join(CORRELATION_NAMES)}", "/correlation")


@dataclass(frozen=True, eq=False)
class MixtureOfProcessFunctions:
    """Convex mixture of consistent deterministic environments."""

    members: Tuple[Tuple[Any, ProcessEnvironment], ...]

    def __post_init__(self):
        if not self.members:
            raise SchemaViolation("a mixture needs at least one member", "/members")
        check_distribution([w for w, _ in self.members], "/weights")
        shape = (self.members[0][1].inputs, self.members[0][1].outputs)
        for index, (_, env) in enumerate(self.members):
            if (env.inputs, env.outputs) != shape:
                raise ShapeMismatch("mixture members have different alphabets", pointer("members", index))
            if not env.deterministic:
                raise SchemaViolation("mixture members must be process functions", pointer("members", index))
            report = process_consistency(env)
            if not report.consistent:
                raise InconsistentEnvironment(f"mixture member {index} is inconsistent", details=report.to_dict())

    def environment(self) -> ProcessEnvironment:
        """Mixed environment; rational weights give a rational table."""
        first = self.members[0][1]
        if all(isinstance(w, (int, Fraction)) for w, _ in self.members):
            table = sum(Fraction(w) * env.table.astype(object) for w, env in self.members)
        else:
            table = sum(float(w) * env.table for w, env in self.members)
        return ProcessEnvironment(first.inputs, first.outputs, table, name="mixture")


# ============================================================================
# PROCESS-FUNCTION ENUMERATION
# ============================================================================


def _candidate_layout(n: int, candidate_space: str) -> Tuple[int, np.ndarray]:
    """Truth-table length per party and, per party, the table position of each output string."""
    outs = _strings(2, n)
    if candidate_space == "full":
        positions = np.tile(np.arange(2 ** n), (n, 1))
        return 2 ** n, positions
    if candidate_space == "self_independent":
        if n == 1:
            return 1, np.zeros((1, 2), dtype=np.int64)
        positions = np.stack(
            [np.delete(outs, k, axis=1) @ (2 ** np.arange(n - 2, -1, -1)) for k in range(n)]
        )
        return 2 ** (n - 1), positions
    raise SchemaViolation(
        f"unknown candidate space {candidate_space!r}; expected 'self_independent' or 'full'", "/candidate_space"
    )


def _omega_tables(n: int, candidate_space: str, indices: np.ndarray) -> np.ndarray:
    """Input-string index per output string for candidate indices."""
    length, positions = _candidate_layout(n, candidate_space)
    per_party = np.stack(np.unravel_index(indices, (2 ** length,) * n), axis=1)
    omega = np.zeros((indices.size, 2 ** n), dtype=np.int64)
    for k in range(n):
        bits = (per_party[:, k][:, None] >> (length - 1 - positions[k][None, :])) & 1
        omega += bits << (n - 1 - k)
    return omega


def _reply_maps(n: int) -> np.ndarray:
    """Output-string index per input string for every binary reply tuple."""
    inputs = _strings(2, n)
    replies = _strings(2, 2)
    digits = _strings(4, n)
    o_index = np.zeros((digits.shape[0], 2 ** n), dtype=np.int64)
    for k in range(n):
        o_index += replies[digits[:, k][:, None], inputs[None, :, k]] << (n - 1 - k)
    return o_index


def _consistent_candidates(n: int, candidate_space: str, start: int, stop: int) -> List[int]:
    indices = np.arange(start, stop, dtype=np.int64)
    omega = _omega_tables(n, candidate_space, indices)
    fixed = omega[:, _reply_maps(n)] == np.arange(2 ** n)[None, None, :]
    unique = np.all(fixed.sum(axis=2) == 1, axis=1)
    return indices[unique].tolist()


def enumerate_process_functions(
    n: int,
    candidate_space: str = "self_independent",
    config: Optional[EnumerationConfig] = None,
    threads: int = 1,
) -> List[ProcessEnvironment]:
    """Logically consistent binary process functions for n parties.

    ``self_independent`` restricts omega_k to functions not reading o_k,
    which every consistent process function satisfies; ``full`` scans all
    candidate functions. A candidate is kept iff every reply tuple has a
    unique fixed point i = omega(f(i)).

    Raises:
        TooLarge: If the candidate space exceeds 2^24.
    """
    config = config or EnumerationConfig()
    if n < 1:
        raise OutOfRange(f"party count must be at least 1, got {n}", "/n")
    length, _ = _candidate_layout(n, candidate_space)
    total = (2 ** length) ** n
    if total > MAX_PROCESS_CANDIDATES:
        raise TooLarge(
            f"{total} candidate process functions exceed the limit {MAX_PROCESS_CANDIDATES}",
            details={"candidates": total, "limit": MAX_PROCESS_CANDIDATES},
        )
    start = time.time()
    tasks = [(n, candidate_space, a, b) for a, b in chunk_ranges(total, config.chunk_size)]
    runner = ParallelRunner(threads, label="process-function chunks")
    kept = flatten(runner.map(_consistent_candidates, tasks, star=True))
    omegas = _omega_tables(n, candidate_space, np.array(kept, dtype=np.int64))
    inputs = _strings(2, n)
    envs = [
        ProcessEnvironment.from_functions(
            [inputs[row, k] for k in range(n)], (2,) * n, (2,) * n, name=f"pf-{candidate_space}-{index}"
        )
        for row, index in zip(omegas, kept)
    ]
    logger.info(
        f"Found {len(envs)} consistent {n}-party process functions among {total} {candidate_space} candidates "
        f"in {format_duration(time.time() - start)}"
    )
    return envs


# ============================================================================
# NOMIC BOUNDS
# ============================================================================


def canonical_omega(omega: Sequence[int], n: int) -> Tuple[int, ...]:
    """Smallest relabelling omega'(o) = omega(o xor s) xor t over all flips s, t.

    Flipping inputs and outputs is absorbed by the interventions, so every
    process in a class reaches the same game value.
    """
    table = np.asarray(omega, dtype=np.int64)
    idx = np.arange(2 ** n)
    best: Optional[Tuple[int, ...]] = None
    for s in range(2 ** n):
        shifted = table[idx ^ s]
        for t in range(2 ** n):
            candidate = tuple(int(v) for v in shifted ^ t)
            if best is None or candidate < best:
                best = candidate
    return best


def _intervention_search(
    omega: Tuple[int, ...], n: int, m: int, d: int, scores: np.ndarray
) -> Tuple[float, int, int, List[int]]:
    """Best deterministic interventions for one binary process function.

    The last party's outcome function is optimized key by key for every
    choice of all output functions and the other outcome functions.

    Returns:
        (value, output-function combo index, outcome-function combo index,
        last party's outcome per key a*2+i).
    """
    table = np.asarray(omega, dtype=np.int64)
    n_keys = 2 * m
    out_funcs = _strings(2, n_keys)
    outcome_funcs = _strings(d, n_keys)
    settings = _strings(m, n)
    inputs = _strings(2, n)
    h_combos = _strings(out_funcs.shape[0], n)
    g_combos = _strings(outcome_funcs.shape[0], n - 1)
    powers_d = d ** np.arange(n - 1, -1, -1)

    keys_ai = settings[:, None, :] * 2 + inputs[None, :, :]
    o_index = np.zeros((h_combos.shape[0], settings.shape[0], inputs.shape[0]), dtype=np.int64)
    for k in range(n):
        o_index += out_funcs[h_combos[:, k][:, None, None], keys_ai[None, :, :, k]] << (n - 1 - k)
    fixed = table[o_index] == np.arange(inputs.shape[0])
    if not np.all(fixed.sum(axis=-1) == 1):
        raise InconsistentEnvironment("process function has no unique fixed point", details={"omega": list(omega)})
    i_star = inputs[fixed.argmax(axis=-1)]
    keys = settings[None, :, :] * 2 + i_star

    n_g = g_combos.shape[0]
    n_s = settings.shape[0]
    cols = np.arange(n_s)
    h_chunk = max(1, SEARCH_CHUNK_ELEMENTS // (n_g * n_s * d))
    best = (-1.0, 0, 0, [0] * n_keys)
    for start, stop in chunk_ranges(h_combos.shape[0], h_chunk):
        k_chunk = keys[start:stop]
        base = np.zeros((n_g, stop - start, n_s), dtype=np.int64)
        for k in range(n - 1):
            base += outcome_funcs[g_combos[:, k][:, None, None], k_chunk[None, :, :, k]] * powers_d[k]
        s_tab = scores[base[..., None] + np.arange(d), cols[None, None, :, None]]
        onehot = (k_chunk[:, :, n - 1][..., None] == np.arange(n_keys)).astype(float)
        T = np.einsum("ghaz,hak->ghkz", s_tab, onehot)
        values = T.max(axis=-1).sum(axis=-1).T
        flat = int(np.argmax(values))
        h_local, g_index = divmod(flat, n_g)
        if values[h_local, g_index] > best[0] + 1e-12:
            last = T[g_index, h_local].argmax(axis=-1).tolist()
            best = (float(values[h_local, g_index]), start + h_local, g_index, last)
    return best


def _search_batch(
    omegas: List[Tuple[int, ...]], n: int, m: int, d: int, scores: np.ndarray
) -> List[Tuple[float, int, int, List[int]]]:
    return [_intervention_search(omega, n, m, d, scores) for omega in omegas]


def _interventions_from_search(
    n: int, m: int, d: int, h_index: int, g_index: int, last: Sequence[int]
) -> List[Intervention]:
    n_keys = 2 * m
    out_funcs = _strings(2, n_keys)
    outcome_funcs = _strings(d, n_keys)
    h_parts = np.unravel_index(h_index, (out_funcs.shape[0],) * n)
    g_parts = np.unravel_index(g_index, (outcome_funcs.shape[0],) * (n - 1)) if n > 1 else ()
    result = []
    for k in range(n):
        h = out_funcs[int(h_parts[k])].reshape(m, 2)
        g = outcome_funcs[int(g_parts[k])] if k < n - 1 else np.asarray(last, dtype=np.int64)
        result.append(Intervention.from_functions(g.reshape(m, 2), h, outcomes=d, outputs=2))
    return result


@dataclass
class NomicBound:
    """Best game value over process functions with deterministic interventions."""

    game: str
    mode: str
    value: Any
    process: ProcessEnvironment
    interventions: List[Intervention]
    evaluated: int
    considered: int
    sampled: int = 0
    reference: Optional[Any] = None
    counterexamples: int = 0

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "game": self.game,
            "mode": self.mode,
            "value": number_to_json(self.value),
            "process": self.process.to_dict(),
            "interventions": [iv.table.tolist() for iv in self.interventions],
            "evaluated_classes": self.evaluated,
            "processes": self.considered,
        }
        if self.mode == "audit":
            data["sampled"] = self.sampled
            data["reference"] = number_to_json(self.reference) if self.reference is not None else None
            data["counterexamples"] = self.counterexamples
        return data


def _evaluate_classes(
    omegas: List[Tuple[int, ...]], game: GameSpec, threads: int, chunk: int = 8
) -> List[Tuple[float, int, int, List[int]]]:
    s = game.scenario
    scores = game.score_table()
    tasks = [(omegas[a:b], s.n, s.m, s.d, scores) for a, b in chunk_ranges(len(omegas), chunk)]
    return flatten(ParallelRunner(threads, label="intervention searches").map(_search_batch, tasks, star=True))


def nomic_game_bound(
    game: GameSpec,
    mode: str = "exhaustive",
    processes: Optional[Sequence[ProcessEnvironment]] = None,
    candidate_space: str = "self_independent",
    audit: Optional[AuditConfig] = None,
    reference: Optional[Any] = None,
    config: Optional[EnumerationConfig] = None,
    threads: int = 1,
) -> NomicBound:
    """Maximize a game over binary process functions and deterministic interventions.

    Processes are grouped into relabelling classes and each class is
    searched once through its first member in enumeration order. Exhaustive
    mode covers every consistent process; audit mode draws a seeded sample
    and counts samples whose value exceeds ``reference``. Both modes work
    in chunks of ``audit.checkpoint_every`` (classes or draws) and, when
    ``audit.checkpoint_file`` is set, save the per-class values after each
    chunk and resume from a checkpoint written by the same run.

    Args:
        game: Game with a binary-outcome scenario.
        mode: "exhaustive" or "audit".
        processes: Restrict the search to these process functions.
        candidate_space: Enumeration space when processes is None.
        audit: Sample count, seed and checkpoint settings.
        reference: Claimed bound checked in audit mode.
        config: Enumeration bounds.
        threads: Worker processes.

    Raises:
        TooLarge: If the per-process intervention search is too large.
        InconsistentEnvironment: If a supplied process is not a consistent process function.
    """
    s = game.scenario
    if mode not in ("exhaustive", "audit"):
        raise SchemaViolation(f"unknown mode {mode!r}; expected 'exhaustive' or 'audit'", "/mode")
    work = (2 ** (2 * s.m)) ** s.n * (s.d ** (2 * s.m)) ** (s.n - 1) * s.n_setting_strings * s.d
    if work > MAX_INTERVENTION_WORK:
        raise TooLarge(
            f"intervention search of size {work} exceeds {MAX_INTERVENTION_WORK}",
            details={"work": work, "limit": MAX_INTERVENTION_WORK},
        )
    if processes is None:
        processes = enumerate_process_functions(s.n, candidate_space, config, threads)
    else:
        for index, env in enumerate(processes):
            if env.inputs != (2,) * s.n or env.outputs != (2,) * s.n or not env.deterministic:
                raise ShapeMismatch(
                    "processes must be binary process functions of the game's size", pointer("processes", index)
                )
            report = process_consistency(env)
            if not report.consistent:
                raise InconsistentEnvironment(f"process {index} is inconsistent", details=report.to_dict())

    start = time.time()
    class_of: List[Tuple[int, ...]] = []
    first_member: Dict[Tuple[int, ...], int] = {}
    for index, env in enumerate(processes):
        key = canonical_omega(env.omega_table(), s.n)
        class_of.append(key)
        first_member.setdefault(key, index)
    keys = sorted(first_member, key=first_member.get)
    logger.info(f"{len(processes)} process functions fall into {len(keys)} relabelling classes")

    audit = audit or AuditConfig()
    identity = _run_identity(mode, audit, game, keys)
    values, next_chunk = _resume_progress(audit.checkpoint_file, identity, first_member)
    sampled = 0
    counterexamples = 0
    if mode == "exhaustive":
        # Chunks are slices of the class list
        batches = [keys[a:b] for a, b in chunk_ranges(len(keys), audit.checkpoint_every)]
        evaluated_keys = keys
    else:
        rng = np.random.default_rng(audit.seed)
        draws = rng.integers(0, len(processes), size=audit.samples)
        sampled = int(draws.size)
        # Chunks are slices of the draw sequence
        batches = [[class_of[int(d)] for d in draws[a:b]] for a, b in chunk_ranges(sampled, audit.checkpoint_every)]
        evaluated_keys = sorted({class_of[int(d)] for d in draws}, key=first_member.get)

    for chunk_index in range(next_chunk, len(batches)):
        needed = []
        for key in batches[chunk_index]:
            if key not in values and key not in needed:
                needed.append(key)
        needed.sort(key=first_member.get)
        representatives = [tuple(int(v) for v in processes[first_member[k]].omega_table()) for k in needed]
        for key, result in zip(needed, _evaluate_classes(representatives, game, threads)):
            values[key] = result
        if audit.checkpoint_file:
            _save_progress(audit.checkpoint_file, identity, values, chunk_index + 1)

    if mode == "audit" and reference is not None:
        limit = float(reference) + 1e-9
        counterexamples = int(sum(1 for d in draws if values[class_of[int(d)]][0] > limit))

    best_key = None
    for key in evaluated_keys:
        if best_key is None or values[key][0] > values[best_key][0] + 1e-12:
            best_key = key
    _, h_index, g_index, last = values[best_key]
    env = processes[first_member[best_key]]
    interventions = _interventions_from_search(s.n, s.m, s.d, h_index, g_index, last)
    value = game_value(game, correlation_from_process(env, interventions, s))
    logger.info(
        f"Nomic {mode} bound of {game.name}: {value} from {len(evaluated_keys)} classes "
        f"in {format_duration(time.time() - start)}"
    )
    if counterexamples:
        logger.warning(f"{counterexamples} sampled processes exceed the reference value {reference}")
    return NomicBound(
        game.name,
        mode,
        value,
        env,
        interventions,
        evaluated=len(evaluated_keys),
        considered=len(processes),
        sampled=sampled,
        reference=reference,
        counterexamples=counterexamples,
    )


def _key_string(key: Tuple[int, ...]) -> str:
    return ",".join(str(v) for v in key)


def _run_identity(mode: str, audit: AuditConfig, game: GameSpec, keys: Sequence[Tuple[int, ...]]) -> Dict[str, Any]:
    """Fields a checkpoint must match to be resumed by this run."""
    identity: Dict[str, Any] = {
        "kind": f"nomic-{mode}",
        "game": game.name,
        "classes": sha256_digest([_key_string(k) for k in keys]),
        "checkpoint_every": audit.checkpoint_every,
    }
    if mode == "audit":
        identity.update(seed=audit.seed, samples=audit.samples)
    return identity


def _save_progress(
    path: str, identity: Dict[str, Any], values: Dict[Tuple[int, ...], Any], next_chunk: int
) -> None:
    state = dict(identity)
    state["next_chunk"] = next_chunk
    state["values"] = {_key_string(k): [v[0], v[1], v[2], list(v[3])] for k, v in values.items()}
    save_checkpoint(path, state)


def _resume_progress(
    path: Optional[str],
    identity: Dict[str, Any],
    first_member: Dict[Tuple[int, ...], int],
) -> Tuple[Dict[Tuple[int, ...], Any], int]:
    """Per-class values and the next chunk index from a matching checkpoint."""
    if not path or not Path(path).exists():
        return {}, 0
    state = load_checkpoint(path)
    if any(state.get(k) != v for k, v in identity.items()):
        logger.warning(f"Ignoring checkpoint {path}: it belongs to a different {identity['kind']} run")
        return {}, 0
    values = {}
    for text, (value, h_index, g_index, last) in state["values"].items():
        key = tuple(int(v) for v in text.split(","))
        if key in first_member:
            values[key] = (float(value), int(h_index), int(g_index), [int(v) for v in last])
    logger.info(f"Resuming {identity['kind']} at chunk {state['next_chunk']} with {len(values)} evaluated classes")
    return values, int(state["next_chunk"])


# ============================================================================
# HIERARCHY DEMONSTRATION
# ============================================================================


def hierarchy_report(config: Optional[EnumerationConfig] = None, threads: int = 1) -> Dict[str, Any]:
    """Place three correlations in the causal / nomic / consistent hierarchy.

    Perfect GYNI only embeds into an inconsistent environment. AF/BW is a
    process function that wins AFBW perfectly, above the causal bound.
    BFW is consistent but not deterministic and wins GYNIN perfectly, above
    the nomic bound obtained by exhaustive search.
    """
    gyni = builtin_game("gyni")
    afbw = builtin_game("afbw")
    gynin = builtin_game("gynin")
    tripartite = CorrelationalScenario(3, 2, 2)

    perfect = perfect_gyni_correlation()
    env, _ = quasi_embed(perfect)
    embedding = process_consistency(env)
    gyni_verdict = is_causal(perfect, config)

    afbw_env = afbw_process()
    afbw_corr = correlation_from_process(afbw_env, copy_interventions(3), tripartite)
    afbw_causal = causal_bound(afbw, config, threads)

    bfw_env = bfw_process()
    bfw_corr = correlation_from_process(bfw_env, copy_interventions(3), tripartite)
    nomic = nomic_game_bound(gynin, "exhaustive", config=config, threads=threads)
    gynin_causal = causal_bound(gynin, config, threads)

    bfw_value = game_value(gynin, bfw_corr)
    return {
        "perfect_gyni": {
            "gyni_value": number_to_json(game_value(gyni, perfect)),
            "causal": gyni_verdict.causal,
            "embedding_consistent": embedding.consistent,
            "violation": embedding.violation,
        },
        "afbw": {
            "consistent": process_consistency(afbw_env).consistent,
            "deterministic": afbw_env.deterministic,
            "afbw_value": number_to_json(game_value(afbw, afbw_corr)),
            "afbw_causal_bound": number_to_json(afbw_causal.value),
            "gynin_value": number_to_json(game_value(gynin, afbw_corr)),
        },
        "bfw": {
            "consistent": process_consistency(bfw_env).consistent,
            "deterministic": bfw_env.deterministic,
            "gynin_value": number_to_json(bfw_value),
            "gynin_causal_bound": number_to_json(gynin_causal.value),
            "gynin_nomic_bound": number_to_json(nomic.value),
            "exceeds_nomic_bound": float(bfw_value) > float(nomic.value) + 1e-9,
        },
    }
