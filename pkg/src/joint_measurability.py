"""Joint measurability of binary qubit POVMs.

A binary qubit POVM is fixed by its "+" effect ``E = e0 I + e . sigma``; it
is PSD and below the identity iff ``|e| <= e0 <= 1 - |e|``. A joint POVM
for N of them has 2^N effects ``G(a) = g0(a) I + g(a) . sigma`` indexed
big-endian by outcome strings a (bit 0 means "+"), and PSD blocks are
exactly the Lorentz cones ``g0 >= |g|``. Feasibility is decided by
alternating projections between the affine set fixed by the marginals and
the product of those cones; infeasibility comes with a dual certificate
that is checked independently.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from itertools import combinations, product
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from src.config_loader import JointMeasurabilityConfig, ToleranceConfig
from src.exceptions import NoTransition, NotConverged, TooLarge, VerificationFailed
from src.optimization import LinearProgram, simplex_maximize
from src.parallel_runner import ParallelRunner
from src.scenarios import JointMeasurabilityStructure, n_cycle_jms, n_specker_jms, specker_decomposition
from src.utils import is_exact, to_fraction
from src.validators import InconsistentMarginals, InvalidMeasurement, OutOfRange, SchemaViolation, pointer

logger = logging.getLogger(__name__)

IDENTITY = np.eye(2, dtype=complex)
PAULIS = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
MAX_POVMS = 6


# ============================================================================
# POVMS
# ============================================================================


def to_bloch(matrix: np.ndarray) -> np.ndarray:
    """(m0, mx, my, mz) with ``matrix = m0 I + m . sigma`` (Hermitian 2 x 2)."""
    matrix = np.asarray(matrix, dtype=complex)
    return np.array([np.trace(matrix).real / 2] + [np.trace(matrix @ s).real / 2 for s in PAULIS])


def from_bloch(coordinates: Sequence[float]) -> np.ndarray:
    c = np.asarray(coordinates, dtype=float)
    return c[0] * IDENTITY + sum(c[k + 1] * PAULIS[k] for k in range(3))


@dataclass
class BinaryQubitPovm:
    """Two-outcome qubit POVM {E, I - E}."""

    effect: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.effect = np.asarray(self.effect, dtype=complex)
        if self.effect.shape != (2, 2):
            raise InvalidMeasurement(f"effect has shape {self.effect.shape}, expected (2, 2)", "/effect")
        if not np.allclose(self.effect, self.effect.conj().T, atol=1e-12):
            raise InvalidMeasurement("effect is not Hermitian", "/effect")
        eigenvalues = np.linalg.eigvalsh(self.effect)
        if eigenvalues.min() < -1e-10 or eigenvalues.max() > 1 + 1e-10:
            raise InvalidMeasurement(f"effect eigenvalues {eigenvalues.tolist()} outside [0, 1]", "/effect")

    @property
    def bloch(self) -> np.ndarray:
        return to_bloch(self.effect)

    def effects(self) -> List[np.ndarray]:
        return [self.effect, IDENTITY - self.effect]

    def commutes_with(self, other: "BinaryQubitPovm", tolerance: float = 1e-12) -> bool:
        return bool(np.allclose(self.effect @ other.effect, other.effect @ self.effect, atol=tolerance))


def noisy_pauli(k: int, eta: float) -> BinaryQubitPovm:
    """Effects (I +/- eta sigma_k) / 2 for axis k in {1, 2, 3}.

    Raises:
        OutOfRange: If k is not an axis or eta lies outside [0, 1].
    """
    if k not in (1, 2, 3):
        raise OutOfRange(f"Pauli axis {k} not in {{1, 2, 3}}", "/axis")
    if not 0.0 <= float(eta) <= 1.0:
        raise OutOfRange(f"sharpness {eta} outside [0, 1]", "/eta")
    return BinaryQubitPovm((IDENTITY + float(eta) * PAULIS[k - 1]) / 2, label=f"M{k}")


def noisy_direction(direction: Sequence[float], eta: float, label: str = "") -> BinaryQubitPovm:
    """Unbiased POVM (I + eta n . sigma) / 2 along a unit Bloch vector n."""
    if not 0.0 <= float(eta) <= 1.0:
        raise OutOfRange(f"sharpness {eta} outside [0, 1]", "/eta")
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    return BinaryQubitPovm(from_bloch([0.5, *(0.5 * float(eta) * n)]), label=label)


def planar_povms(n_lines: int, eta: float, lines: Optional[Sequence[int]] = None) -> List[BinaryQubitPovm]:
    """Unbiased POVMs along the lines at angles k pi / n_lines in the x-z plane."""
    lines = range(n_lines) if lines is None else lines
    povms = []
    for k in lines:
        theta = k * math.pi / n_lines
        povms.append(noisy_direction([math.sin(theta), 0.0, math.cos(theta)], eta, label=f"M{k + 1}"))
    return povms


def parse_povms(raw: Any) -> List[BinaryQubitPovm]:
    """Parse ``{"povms": [{"effect": [[[re, im], ...], ...]}]}`` or ``{"noisy_pauli": [{"axis", "eta"}]}``."""
    if not isinstance(raw, dict):
        raise SchemaViolation("POVM document must be an object", "")
    if "noisy_pauli" in raw:
        return [noisy_pauli(int(item["axis"]), float(item["eta"])) for item in raw["noisy_pauli"]]
    if "povms" not in raw:
        raise SchemaViolation("expected 'povms' or 'noisy_pauli'", "/povms")
    povms = []
    for index, item in enumerate(raw["povms"]):
        path = pointer("povms", index, "effect")
        try:
            rows = [[complex(float(e[0]), float(e[1])) for e in row] for row in item["effect"]]
        except (KeyError, TypeError, IndexError, ValueError) as e:
            raise SchemaViolation(f"malformed effect: {e}", path)
        try:
            povms.append(BinaryQubitPovm(np.array(rows), label=item.get("label", f"M{index + 1}")))
        except InvalidMeasurement as e:
            raise InvalidMeasurement(e.message, path)
    return povms


# ============================================================================
# JOINT POVMS
# ============================================================================


def outcome_bits(index: int, n: int) -> Tuple[int, ...]:
    """Big-endian outcome string of a joint-effect index."""
    return tuple((index >> (n - 1 - i)) & 1 for i in range(n))


@dataclass
class JointPovm:
    """Joint effects G(a), a in {0, 1}^N big-endian, as an array of shape (2^N, 2, 2)."""

    effects: np.ndarray

    @property
    def n_povms(self) -> int:
        return int(round(math.log2(self.effects.shape[0])))

    def marginal(self, i: int) -> np.ndarray:
        """Sum of G(a) over outcome strings with a_i = 0."""
        n = self.n_povms
        return sum(self.effects[a] for a in range(2 ** n) if outcome_bits(a, n)[i] == 0)

    def completeness_residual(self) -> float:
        return float(np.linalg.norm(self.effects.sum(axis=0) - IDENTITY, ord=2))

    def min_eigenvalue(self) -> float:
        return float(min(np.linalg.eigvalsh(G).min() for G in self.effects))

    def marginal_residual(self, povms: Sequence[BinaryQubitPovm]) -> float:
        return float(max(np.linalg.norm(self.marginal(i) - p.effect, ord=2) for i, p in enumerate(povms)))

    def to_dict(self) -> Dict[str, Any]:
        n = self.n_povms
        return {
            "effects": {
                "".join(map(str, outcome_bits(a, n))): [[[float(z.real), float(z.imag)] for z in row] for row in self.effects[a]]
                for a in range(2 ** n)
            }
        }


@dataclass
class JmResult:
    """Verdict of a joint measurability test with its evidence."""

    feasible: bool
    joint: Optional[JointPovm]
    residual: float
    iterations: int
    certificate: Optional[Dict[str, Any]] = None
    method: str = "alternating_projections"

    def to_dict(self) -> Dict[str, Any]:
        report = {
            "feasible": self.feasible,
            "residual": self.residual,
            "iterations": self.iterations,
            "method": self.method,
        }
        if self.joint is not None:
            report["joint"] = self.joint.to_dict()
            report["min_eigenvalue"] = self.joint.min_eigenvalue()
        if self.certificate is not None:
            report["certificate"] = self.certificate
        return report


def _marginal_system(n: int) -> np.ndarray:
    """Rows: all-ones (completeness) then the a_i = 0 indicator for every i."""
    B = np.zeros((n + 1, 2 ** n))
    B[0, :] = 1.0
    for a in range(2 ** n):
        for i, bit in enumerate(outcome_bits(a, n)):
            if bit == 0:
                B[i + 1, a] = 1.0
    return B


def _cone_projection(x: np.ndarray) -> np.ndarray:
    """Project each row (t, v) onto the Lorentz cone t >= |v|."""
    t = x[:, 0]
    v = x[:, 1:]
    norms = np.linalg.norm(v, axis=1)
    out = x.copy()
    polar = norms <= -t
    mixed = (norms > t) & ~polar
    scale = (t[mixed] + norms[mixed]) / 2
    out[mixed, 0] = scale
    out[mixed, 1:] = v[mixed] * (scale / norms[mixed])[:, None]
    out[polar] = 0.0
    return out


def _block_min_eigenvalues(x: np.ndarray) -> np.ndarray:
    return x[:, 0] - np.linalg.norm(x[:, 1:], axis=1)


def _dual_certificate(
    normal: np.ndarray, B: np.ndarray, gram_inverse: np.ndarray, target: np.ndarray
) -> Dict[str, Any]:
    """Fit Y with Z = B^T Y and check Z(a) PSD for all a and <Y, b> < 0.

    Any feasible joint POVM would give ``sum_a <Z(a), G(a)> = <Y, b>`` with
    the left side nonnegative, so a negative value proves infeasibility.
    """
    Y = gram_inverse @ (B @ normal)
    Z = B.T @ Y
    scale = np.abs(Z).max()
    if scale == 0:
        return {"verified": False, "value": 0.0}
    Y, Z = Y / scale, Z / scale
    shift = max(0.0, -float(_block_min_eigenvalues(Z).min()))
    Y[0, 0] += shift
    # Frobenius pairing is twice the coordinate pairing
    value = 2.0 * float(np.sum(Y * target))
    return {
        "verified": value < -1e-9,
        "value": value,
        "identity_term": [[float(z.real), float(z.imag)] for z in from_bloch(Y[0]).reshape(-1)],
        "marginal_terms": [
            [[float(z.real), float(z.imag)] for z in from_bloch(Y[i]).reshape(-1)] for i in range(1, Y.shape[0])
        ],
    }


def _commuting_joint(povms: Sequence[BinaryQubitPovm]) -> JointPovm:
    """Product joint POVM of pairwise commuting effects."""
    n = len(povms)
    effects = []
    for a in range(2 ** n):
        G = IDENTITY.copy()
        for i, bit in enumerate(outcome_bits(a, n)):
            G = G @ povms[i].effects()[bit]
        effects.append((G + G.conj().T) / 2)
    return JointPovm(np.array(effects))


def jm_feasible(
    povms: Sequence[BinaryQubitPovm],
    config: Optional[JointMeasurabilityConfig] = None,
    tolerances: Optional[ToleranceConfig] = None,
) -> JmResult:
    """Decide whether binary qubit POVMs admit a joint POVM.

    The iteration starts at the minimum-norm point of the affine marginal
    set and alternates cone and affine projections. It stops as feasible
    once the gap drops below ``tolerances.jm_feasible``; as infeasible once
    a dual certificate verifies, or when the gap plateaus above
    ``tolerances.jm_infeasible``.

    Args:
        povms: One to six POVMs.
        config: Iteration budget and plateau detection.
        tolerances: Feasibility and infeasibility thresholds.

    Returns:
        JmResult with a joint POVM or an infeasibility certificate.

    Raises:
        NotConverged: If the gap ends between the two thresholds.
        TooLarge: For more than six POVMs.

    Example:
        >>> jm_feasible([noisy_pauli(k, 0.5) for k in (1, 2, 3)]).feasible
        True
    """
    config = config or JointMeasurabilityConfig()
    tolerances = tolerances or ToleranceConfig()
    n = len(povms)
    if n == 0:
        raise SchemaViolation("at least one POVM is required", "/povms")
    if n > MAX_POVMS:
        raise TooLarge(f"{n} POVMs exceed the bound of {MAX_POVMS}", {"povms": n, "bound": MAX_POVMS})
    if all(a.commutes_with(b) for a, b in combinations(povms, 2)):
        joint = _commuting_joint(povms)
        return JmResult(True, joint, 0.0, 0, method="commuting_product")

    B = _marginal_system(n)
    gram_inverse = np.linalg.inv(B @ B.T)
    target = np.array([[1.0, 0.0, 0.0, 0.0]] + [p.bloch for p in povms])

    def affine(x: np.ndarray) -> np.ndarray:
        return x - B.T @ (gram_inverse @ (B @ x - target))

    x = affine(np.zeros((2 ** n, 4)))
    window_start_gap = None
    certificate = None
    gap = float("inf")
    check_every = max(1, config.plateau_window // 10)
    for iteration in range(1, config.max_iterations + 1):
        cone_point = _cone_projection(x)
        gap = float(np.linalg.norm(x - cone_point))
        if gap < tolerances.jm_feasible:
            joint = JointPovm(np.array([from_bloch(row) for row in cone_point]))
            logger.debug(f"Joint POVM for {n} POVMs found after {iteration} iterations (gap {gap:.2e})")
            return JmResult(True, joint, gap, iteration)
        if iteration % check_every == 0 and gap > tolerances.jm_infeasible:
            certificate = _dual_certificate(cone_point - x, B, gram_inverse, target)
            if certificate["verified"]:
                logger.debug(f"Infeasibility of {n} POVMs certified after {iteration} iterations (gap {gap:.2e})")
                return JmResult(False, None, gap, iteration, certificate)
        if iteration % config.plateau_window == 0:
            if window_start_gap is not None and gap > tolerances.jm_infeasible:
                if window_start_gap - gap < config.plateau_ratio * window_start_gap:
                    logger.debug(f"Gap plateaued at {gap:.3e} after {iteration} iterations")
                    return JmResult(False, None, gap, iteration, certificate)
            window_start_gap = gap
        x = affine(cone_point)

    if gap > tolerances.jm_infeasible:
        return JmResult(False, None, gap, config.max_iterations, certificate)
    raise NotConverged(
        f"gap {gap:.3e} between the feasible and infeasible thresholds after {config.max_iterations} iterations",
        {"residual": gap, "iterations": config.max_iterations},
    )


# ============================================================================
# THRESHOLDS
# ============================================================================


def pauli_family(axes: Sequence[int], eta: float) -> List[BinaryQubitPovm]:
    """Noisy Paulis on the given axes with a common sharpness."""
    return [noisy_pauli(k, eta) for k in axes]


def planar_family(n_lines: int, lines: Sequence[int], eta: float) -> List[BinaryQubitPovm]:
    return planar_povms(n_lines, eta, lines)


@dataclass
class ThresholdResult:
    eta: float
    interval: Tuple[float, float]
    evaluations: List[Tuple[float, bool]] = field(default_factory=list)
    unconverged: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "eta": self.eta,
            "interval": list(self.interval),
            "evaluations": [{"eta": e, "feasible": f} for e, f in self.evaluations],
            "unconverged": self.unconverged,
        }


def _feasible_at(family: Callable[[float], List[BinaryQubitPovm]], eta: float, config, tolerances) -> Tuple[bool, bool]:
    """(feasible, converged); an unconverged gap below the infeasible threshold counts as feasible."""
    try:
        return jm_feasible(family(eta), config, tolerances).feasible, True
    except NotConverged as e:
        logger.warning(f"eta = {eta:.6f}: {e.message}; counted as feasible")
        return True, False


def jm_threshold(
    family: Callable[[float], List[BinaryQubitPovm]],
    low: float = 0.0,
    high: float = 1.0,
    config: Optional[JointMeasurabilityConfig] = None,
    tolerances: Optional[ToleranceConfig] = None,
) -> ThresholdResult:
    """Bisection for the sharpness where a POVM family stops being jointly measurable.

    Raises:
        NoTransition: If the family is feasible (or infeasible) on all of [low, high].

    Example:
        >>> round(jm_threshold(partial(pauli_family, (1, 3))).eta, 3)
        0.707
    """
    config = config or JointMeasurabilityConfig()
    result = ThresholdResult(eta=float("nan"), interval=(low, high))
    feasible_high, converged = _feasible_at(family, high, config, tolerances)
    result.evaluations.append((high, feasible_high))
    result.unconverged += not converged
    if feasible_high:
        raise NoTransition(f"family is jointly measurable up to eta = {high}", {"feasible_everywhere": True})
    feasible_low, converged = _feasible_at(family, low, config, tolerances)
    result.evaluations.append((low, feasible_low))
    result.unconverged += not converged
    if not feasible_low:
        raise NoTransition(f"family is incompatible down to eta = {low}", {"feasible_everywhere": False})

    a, b = low, high
    while b - a > config.bisection_precision:
        mid = (a + b) / 2
        feasible, converged = _feasible_at(family, mid, config, tolerances)
        result.evaluations.append((mid, feasible))
        result.unconverged += not converged
        if feasible:
            a = mid
        else:
            b = mid
    result.eta = (a + b) / 2
    result.interval = (a, b)
    logger.info(f"Joint measurability threshold eta* = {result.eta:.6f} (interval [{a:.6f}, {b:.6f}])")
    return result


def feasibility_grid(
    family: Callable[[float], List[BinaryQubitPovm]],
    grid: Sequence[float],
    config: Optional[JointMeasurabilityConfig] = None,
) -> List[Tuple[float, bool]]:
    return [(float(eta), _feasible_at(family, eta, config or JointMeasurabilityConfig(), None)[0]) for eta in grid]


# ============================================================================
# MARGINAL SURGERY
# ============================================================================


@dataclass
class SurgeryResult:
    """POVMs whose compatibility pattern was verified against a target structure."""

    kind: str
    n: int
    eta: float
    povms: List[BinaryQubitPovm]
    structure: JointMeasurabilityStructure
    checks: List[Dict[str, Any]]
    verified: bool
    stages: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "n": self.n,
            "eta": self.eta,
            "povms": [{"label": p.label, "bloch": p.bloch.tolist()} for p in self.povms],
            "structure": self.structure.to_dict(),
            "checks": self.checks,
            "verified": self.verified,
            "stages": self.stages,
        }


def _check_subset(effects: List[np.ndarray], config: JointMeasurabilityConfig) -> bool:
    povms = [BinaryQubitPovm(e) for e in effects]
    return _feasible_at(lambda _: povms, 0.0, config, None)[0]


def verify_pattern(
    povms: Sequence[BinaryQubitPovm],
    structure: JointMeasurabilityStructure,
    exhaustive: bool = True,
    config: Optional[JointMeasurabilityConfig] = None,
    threads: int = 1,
) -> List[Dict[str, Any]]:
    """Compare jm_feasible verdicts with the target structure.

    Exhaustive mode checks every subset of two or more POVMs; otherwise the
    maximal compatible sets and the minimal incompatible sets, which
    determine the whole pattern.
    """
    config = config or JointMeasurabilityConfig()
    names = list(structure.vertices)
    if len(names) != len(povms):
        raise SchemaViolation(f"{len(povms)} POVMs for {len(names)} measurements")
    if exhaustive:
        subsets = [frozenset(c) for r in range(2, len(names) + 1) for c in combinations(names, r)]
    else:
        subsets = [s for s in structure.maximal_compatible_sets() if len(s) > 1]
        if not structure.is_trivial:
            subsets += specker_decomposition(structure)
    position = {name: i for i, name in enumerate(names)}
    tasks = [([povms[position[v]].effect for v in sorted(s, key=position.get)], config) for s in subsets]
    verdicts = ParallelRunner(threads, label="subset checks").map(_check_subset, tasks, star=True)
    checks = []
    for subset, feasible in zip(subsets, verdicts):
        expected = structure.is_compatible(subset)
        checks.append({
            "subset": sorted(subset, key=position.get),
            "expected_compatible": expected,
            "feasible": feasible,
            "ok": expected == feasible,
        })
    return checks


def _finish(kind, n, eta, povms, structure, exhaustive, config, threads, stages=None) -> SurgeryResult:
    names = list(structure.vertices)
    for name, povm in zip(names, povms):
        povm.label = name
    checks = verify_pattern(povms, structure, exhaustive, config, threads)
    verified = all(c["ok"] for c in checks)
    result = SurgeryResult(kind, n, eta, list(povms), structure, checks, verified, stages or [])
    if not verified:
        raise VerificationFailed(
            f"{kind} construction for N = {n} does not reproduce the target pattern",
            {"failed": [c for c in checks if not c["ok"]], "eta": eta},
        )
    logger.info(f"{n}-{kind} realization verified on {len(checks)} subsets at eta = {eta:.6f}")
    return result


def marginal_surgery_specker(
    n: int,
    eta: Optional[float] = None,
    exhaustive: Optional[bool] = None,
    config: Optional[JointMeasurabilityConfig] = None,
    threads: int = 1,
) -> SurgeryResult:
    """Qubit POVMs realizing the N-Specker structure.

    N = 2 uses sharp X and Z; N = 3 uses three noisy Paulis between the
    triple and pair thresholds. For N >= 4 the POVMs sit on N equally
    spaced lines of a Bloch great circle, with eta placed midway between the
    threshold of the full set and that of an (N - 1)-subset (all of which
    are congruent).

    Raises:
        OutOfRange: If N < 2.
        VerificationFailed: If the verified pattern differs from the target.
    """
    if n < 2:
        raise OutOfRange(f"N-Specker needs N >= 2, got {n}", "/n")
    config = config or JointMeasurabilityConfig()
    structure = n_specker_jms(n)
    exhaustive = n <= 5 if exhaustive is None else exhaustive
    stages: List[Dict[str, Any]] = []
    if n == 2:
        eta = 1.0 if eta is None else eta
        povms = pauli_family((1, 3), eta)
    elif n == 3:
        eta = (1 / math.sqrt(3) + 1 / math.sqrt(2)) / 2 if eta is None else eta
        povms = pauli_family((1, 2, 3), eta)
    else:
        if eta is None:
            full = jm_threshold(partial(planar_family, n, tuple(range(n))), config=config).eta
            sub = jm_threshold(partial(planar_family, n, tuple(range(n - 1))), config=config).eta
            stages = [{"stage": "full_set_threshold", "eta": full}, {"stage": "subset_threshold", "eta": sub}]
            if sub - full <= 2 * config.bisection_precision:
                raise VerificationFailed(
                    f"no gap between the thresholds ({full:.6f}, {sub:.6f}) of the planar {n}-line family",
                    {"full": full, "subset": sub},
                )
            eta = (full + sub) / 2
        povms = planar_povms(n, eta)
    return _finish("specker", n, eta, povms, structure, exhaustive, config, threads, stages)


def cycle_window(n: int) -> Tuple[float, float]:
    """Open-closed sharpness window where adjacent lines are compatible and others are not.

    Unbiased qubit POVMs at Bloch angle theta are compatible iff
    ``eta <= 1 / (cos(theta/2) + sin(theta/2))``.
    """
    return 1 / (math.cos(math.pi / n) + math.sin(math.pi / n)), 1 / (math.cos(math.pi / (2 * n)) + math.sin(math.pi / (2 * n)))


def marginal_surgery_cycle(
    n: int,
    eta: Optional[float] = None,
    exhaustive: Optional[bool] = None,
    config: Optional[JointMeasurabilityConfig] = None,
    threads: int = 1,
) -> SurgeryResult:
    """Qubit POVMs realizing the N-cycle structure (adjacent pairs compatible only).

    The 3-cycle is the 3-Specker structure. For N >= 4 the POVMs sit on N
    equally spaced lines with eta in the middle of :func:`cycle_window`.

    Raises:
        OutOfRange: If N < 3.
        VerificationFailed: If the verified pattern differs from the target.
    """
    if n < 3:
        raise OutOfRange(f"N-cycle needs N >= 3, got {n}", "/n")
    config = config or JointMeasurabilityConfig()
    exhaustive = n <= 5 if exhaustive is None else exhaustive
    if n == 3:
        specker = marginal_surgery_specker(3, eta, exhaustive, config, threads)
        return _finish("cycle", 3, specker.eta, specker.povms, n_cycle_jms(3), exhaustive, config, threads)
    if eta is None:
        lower, upper = cycle_window(n)
        eta = (lower + upper) / 2
    return _finish("cycle", n, eta, planar_povms(n, eta), n_cycle_jms(n), exhaustive, config, threads)


def pauli_surgery_example(
    eta_base: float = 0.5,
    eta_boosted: float = 0.7,
    eta_third: float = 1.0,
    config: Optional[JointMeasurabilityConfig] = None,
) -> Dict[str, Any]:
    """Three-stage noisy-Pauli surgery.

    Stage one: {M1, M2, M3} at eta_base is compatible. Stage two: M1 and M2
    are sharpened to eta_boosted, which makes the triple incompatible while
    every pair stays compatible. Stage three: M3 is sharpened to eta_third,
    which also breaks the pairs containing it.
    """
    config = config or JointMeasurabilityConfig()

    def verdicts(etas: Sequence[float]) -> Dict[str, bool]:
        povms = [noisy_pauli(k + 1, e) for k, e in enumerate(etas)]
        report = {}
        for r in (2, 3):
            for subset in combinations(range(3), r):
                key = "".join(f"M{i + 1}" for i in subset)
                report[key] = _feasible_at(lambda _: [povms[i] for i in subset], 0.0, config, None)[0]
        return report

    stages = [
        {"stage": "compatible_triple", "etas": [eta_base] * 3},
        {"stage": "boosted_pair", "etas": [eta_boosted, eta_boosted, eta_base]},
        {"stage": "sharp_third", "etas": [eta_boosted, eta_boosted, eta_third]},
    ]
    for stage in stages:
        stage["compatible"] = verdicts(stage["etas"])
        logger.debug(f"Surgery stage {stage['stage']}: {stage['compatible']}")
    return {"stages": stages}


# ============================================================================
# PENTAGONAL INEQUALITY
# ============================================================================

PENTAGON_PAIRS = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))
PAIR_SIGNS = {(1, 2): -1, (1, 3): -1, (1, 4): 1, (2, 3): -1, (2, 4): 1, (3, 4): 1}
SINGLE_SIGNS = {1: 1, 2: 1, 3: 1, 4: -1}
CLASSICAL_PENTAGONAL_BOUND = 2


def _pair_key(raw_key: Any) -> Tuple[int, int]:
    if isinstance(raw_key, str):
        digits = [int(c) for c in raw_key if c.isdigit()]
        return (digits[0], digits[1])
    return tuple(raw_key)  # type: ignore[return-value]


def pentagonal_value(
    pairs: Dict[Any, Sequence[Sequence[Any]]],
    singles: Optional[Dict[Any, Sequence[Any]]] = None,
    tolerance: float = 1e-9,
) -> Any:
    """Evaluate the pentagonal expression on pairwise outcome tables.

    Args:
        pairs: ``p(a_i a_j | ij)`` as 2 x 2 tables keyed by (i, j) or "ij".
        singles: ``p(a_j | j)``; derived from the pair marginals when absent.
        tolerance: Marginal consistency tolerance.

    Returns:
        The value, exact when every entry is exact.

    Raises:
        SchemaViolation: If a pair is missing or a table is not normalized.
        InconsistentMarginals: If two tables disagree on a single marginal.
    """
    tables = {_pair_key(k): v for k, v in pairs.items()}
    for pair in PENTAGON_PAIRS:
        if pair not in tables:
            raise SchemaViolation(f"missing table for pair {pair}", pointer("pairs", f"{pair[0]}{pair[1]}"))
        table = tables[pair]
        total = sum(table[a][b] for a in (0, 1) for b in (0, 1))
        if any(table[a][b] < -tolerance for a in (0, 1) for b in (0, 1)) or abs(total - 1) > tolerance:
            raise SchemaViolation(f"table for pair {pair} is not a distribution", pointer("pairs", f"{pair[0]}{pair[1]}"))

    marginals: Dict[int, List[Tuple[Tuple[int, int], Any]]] = {i: [] for i in range(1, 5)}
    for (i, j), table in tables.items():
        marginals[i].append(((i, j), table[0][0] + table[0][1]))
        marginals[j].append(((i, j), table[0][0] + table[1][0]))
    reference = {}
    for i in range(1, 5):
        if singles is not None and (i in singles or str(i) in singles):
            reference[i] = (singles.get(i) or singles.get(str(i)))[0]
        else:
            reference[i] = marginals[i][0][1]
        for pair, value in marginals[i]:
            if abs(value - reference[i]) > tolerance:
                raise InconsistentMarginals(
                    f"pair {pair} gives p(a_{i}=0) = {value}, expected {reference[i]}",
                    pointer("pairs", f"{pair[0]}{pair[1]}"),
                    {"measurement": i, "pair": list(pair)},
                )

    value = 0
    for pair, sign in PAIR_SIGNS.items():
        t = tables[pair]
        value += sign * (t[0][0] - t[0][1] - t[1][0] + t[1][1])
    for i, sign in SINGLE_SIGNS.items():
        value += sign * (2 * reference[i] - 1)
    return value


def deterministic_tables(assignment: Sequence[int]) -> Dict[Tuple[int, int], List[List[int]]]:
    """Pair tables of a global assignment (x1, x2, x3, x4)."""
    tables = {}
    for i, j in PENTAGON_PAIRS:
        table = [[0, 0], [0, 0]]
        table[assignment[i - 1]][assignment[j - 1]] = 1
        tables[(i, j)] = table
    return tables


def uniform_tables() -> Dict[Tuple[int, int], List[List[Fraction]]]:
    return {pair: [[Fraction(1, 4)] * 2 for _ in range(2)] for pair in PENTAGON_PAIRS}


def classical_pentagonal_max() -> Tuple[int, List[Tuple[int, ...]]]:
    """Maximum over the 16 deterministic assignments and the assignments attaining it."""
    values = {x: pentagonal_value(deterministic_tables(x)) for x in product((0, 1), repeat=4)}
    best = max(values.values())
    return best, [x for x, v in values.items() if v == best]


def pentagonal_lp_max(exact: bool = True) -> Tuple[Any, Dict[Tuple[int, int], List[List[Any]]]]:
    """Maximize the pentagonal expression over all pairwise models.

    Variables are the 24 pair-table entries; constraints are normalization
    and agreement of single marginals between pairs sharing a measurement.
    """
    index = {(pair, a, b): 4 * k + 2 * a + b for k, pair in enumerate(PENTAGON_PAIRS) for a in (0, 1) for b in (0, 1)}
    objective = [0] * 24
    for pair, sign in PAIR_SIGNS.items():
        for a, b in product((0, 1), repeat=2):
            objective[index[(pair, a, b)]] += sign * (-1) ** (a + b)
    for i, sign in SINGLE_SIGNS.items():
        pair = next(p for p in PENTAGON_PAIRS if i in p)
        position = pair.index(i)
        for a, b in product((0, 1), repeat=2):
            objective[index[(pair, a, b)]] += sign * (-1) ** (a if position == 0 else b)

    constraints = []
    for pair in PENTAGON_PAIRS:
        row = [0] * 24
        for a, b in product((0, 1), repeat=2):
            row[index[(pair, a, b)]] = 1
        constraints.append((row, "=", 1))

    def zero_marginal(pair, i):
        row = [0] * 24
        for a, b in product((0, 1), repeat=2):
            if (a if pair.index(i) == 0 else b) == 0:
                row[index[(pair, a, b)]] = 1
        return row

    for i in range(1, 5):
        containing = [p for p in PENTAGON_PAIRS if i in p]
        first = zero_marginal(containing[0], i)
        for other in containing[1:]:
            constraints.append(([x - y for x, y in zip(first, zero_marginal(other, i))], "=", 0))

    solution = simplex_maximize(LinearProgram(objective, constraints, exact=exact))
    tables = {
        pair: [[solution.x[index[(pair, a, b)]] for b in (0, 1)] for a in (0, 1)] for pair in PENTAGON_PAIRS
    }
    logger.info(f"Pentagonal expression maximized over pairwise models: {solution.value}")
    return solution.value, tables


def mix_tables(assignments: Sequence[Sequence[int]], weights: Sequence[Any]) -> Dict[Tuple[int, int], List[List[Any]]]:
    """Convex mixture of deterministic pair tables."""
    if len(assignments) != len(weights):
        raise SchemaViolation("one weight per assignment is required")
    exact = all(is_exact(w) for w in weights)
    zero = Fraction(0) if exact else 0.0
    mixed = {pair: [[zero, zero], [zero, zero]] for pair in PENTAGON_PAIRS}
    for assignment, weight in zip(assignments, weights):
        w = to_fraction(weight) if exact else float(weight)
        for pair, table in deterministic_tables(assignment).items():
            for a, b in product((0, 1), repeat=2):
                mixed[pair][a][b] += w * table[a][b]
    return mixed
