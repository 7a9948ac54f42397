"""Qubit bases from Boolean process functions and the discrimination protocol.

A Boolean process function omega without global past labels an orthonormal
product basis S_omega = {H^omega(o) |o>}: qubit k is Hadamard-rotated exactly
when omega_k(o) = 1. Parties wired by omega can identify any element of the
basis with certainty: party k applies H^{i_k}, measures in the computational
basis (projector |0><0| reads o_k = 0) and reapplies H^{i_k}.
"""

from dataclasses import dataclass
from functools import reduce
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np

from src.causality import ProcessEnvironment, afbw_process, process_consistency
from src.config_loader import ToleranceConfig
from src.exceptions import InconsistentProcess, NoGlobalPastViolated, NonBasisInput, NotOrthogonal
from src.validators import InvalidState, OutOfRange, ShapeMismatch, require_complex, require_list

logger = logging.getLogger(__name__)

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
IDENTITY = np.eye(2)
KETS = {
    "0": np.array([1.0, 0.0]),
    "1": np.array([0.0, 1.0]),
    "+": np.array([1.0, 1.0]) / np.sqrt(2.0),
    "-": np.array([1.0, -1.0]) / np.sqrt(2.0),
}


def _bits(index: int, n: int) -> Tuple[int, ...]:
    return tuple((index >> (n - 1 - k)) & 1 for k in range(n))


def _bit_string(bits: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in bits)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit vector on n qubits, amplitude index big-endian in qubit order."""

    amplitudes: np.ndarray
    label: str = ""

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        n = int(round(np.log2(amps.size))) if amps.size else 0
        if amps.size < 2 or 2 ** n != amps.size:
            raise ShapeMismatch(f"state dimension {amps.size} is not a power of two", "/amplitudes")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > ToleranceConfig().normalization:
            raise InvalidState(f"state has norm {norm:.15f}, expected 1", "/amplitudes")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return int(round(np.log2(self.amplitudes.size)))

    @classmethod
    def from_label(cls, label: str) -> "StateVector":
        """Product state from a label over 0, 1, + and - such as "+01"."""
        try:
            kets = [KETS[c] for c in label.replace("−", "-")]
        except KeyError as e:
            raise InvalidState(f"unknown qubit label {e.args[0]!r} in {label!r}", "/label")
        return cls(reduce(np.kron, kets), label=label)

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return abs(self.overlap(other)) ** 2

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
        }


def parse_state(raw: Any) -> StateVector:
    """Parse {"label": "+01"} or {"amplitudes": [...]} (complex entries as [re, im])."""
    if isinstance(raw, str):
        return StateVector.from_label(raw)
    if isinstance(raw, dict) and "label" in raw and "amplitudes" not in raw:
        return StateVector.from_label(str(raw["label"]))
    amplitudes = require_list(raw.get("amplitudes") if isinstance(raw, dict) else raw, "/amplitudes")
    return StateVector(np.array([require_complex(a, f"/amplitudes/{i}") for i, a in enumerate(amplitudes)]))


@dataclass(frozen=True, eq=False)
class BooleanProcessFunction:
    """n-party process function with binary inputs and outputs.

    ``functions[k][o]`` is omega_k evaluated on the output string with index o.
    """

    functions: Tuple[Tuple[int, ...], ...]
    name: str = ""

    def __post_init__(self):
        functions = tuple(tuple(int(v) for v in fn) for fn in self.functions)
        n = len(functions)
        if n < 1:
            raise ShapeMismatch("at least one party is required", "/functions")
        for k, fn in enumerate(functions):
            if len(fn) != 2 ** n:
                raise ShapeMismatch(f"function {k} has {len(fn)} entries, expected {2 ** n}", f"/functions/{k}")
            if any(v not in (0, 1) for v in fn):
                raise OutOfRange(f"function {k} must be Boolean", f"/functions/{k}")
        object.__setattr__(self, "functions", functions)

    @property
    def n(self) -> int:
        return len(self.functions)

    def __call__(self, outputs: Sequence[int]) -> Tuple[int, ...]:
        index = int(_bit_string(outputs), 2)
        return tuple(fn[index] for fn in self.functions)

    def environment(self) -> ProcessEnvironment:
        return ProcessEnvironment.from_functions(self.functions, (2,) * self.n, (2,) * self.n, name=self.name)

    @classmethod
    def from_environment(cls, env: ProcessEnvironment) -> "BooleanProcessFunction":
        if env.inputs != (2,) * env.n or env.outputs != (2,) * env.n:
            raise ShapeMismatch("a Boolean process function needs binary inputs and outputs", "/inputs")
        return cls(tuple(tuple(fn) for fn in env.party_functions()), name=env.name)

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "n": self.n, "functions": [list(fn) for fn in self.functions]}


def afbw_function() -> BooleanProcessFunction:
    return BooleanProcessFunction.from_environment(afbw_process())


def _require_consistent(omega: BooleanProcessFunction) -> None:
    report = process_consistency(omega.environment())
    if not report.consistent:
        raise InconsistentProcess(
            f"process function {omega.name or '<unnamed>'} is inconsistent", details=report.to_dict()
        )


def global_past_parties(omega: BooleanProcessFunction) -> List[int]:
    """Parties (0-based) whose input no other party's output can change."""
    _require_consistent(omega)
    n = omega.n
    parties = []
    for k, fn in enumerate(omega.functions):
        table = np.asarray(fn)
        idx = np.arange(2 ** n)
        receives = any(np.any(table != table[idx ^ (1 << (n - 1 - j))]) for j in range(n) if j != k)
        if not receives:
            parties.append(k)
    return parties


def no_global_past(omega: BooleanProcessFunction) -> bool:
    """True iff every party can receive a signal from some other party.

    Raises:
        InconsistentProcess: If omega is not logically consistent.
    """
    parties = global_past_parties(omega)
    if parties:
        logger.info(f"Parties {[k + 1 for k in parties]} of {omega.name or '<unnamed>'} have a constant input")
    return not parties


def _state_label(o_bits: Sequence[int], i_bits: Sequence[int]) -> str:
    chars = []
    for o, i in zip(o_bits, i_bits):
        chars.append(("+" if o == 0 else "-") if i else str(o))
    return "".join(chars)


def _basis_vector(o_bits: Sequence[int], i_bits: Sequence[int]) -> np.ndarray:
    kets = [HADAMARD @ KETS[str(o)] if i else KETS[str(o)] for o, i in zip(o_bits, i_bits)]
    return reduce(np.kron, kets)


def s_omega_basis(
    omega: BooleanProcessFunction, tolerances: Optional[ToleranceConfig] = None
) -> List[StateVector]:
    """States H^omega(o)|o> for every output string o, in output-string order.

    Raises:
        InconsistentProcess: If omega is inconsistent.
        NoGlobalPastViolated: If some party lies in the global past.
        NotOrthogonal: If the Gram matrix deviates from the identity.
    """
    tol = (tolerances or ToleranceConfig()).normalization
    parties = global_past_parties(omega)
    if parties:
        raise NoGlobalPastViolated(
            f"parties {[k + 1 for k in parties]} have a constant input",
            details={"parties": [k + 1 for k in parties]},
        )
    n = omega.n
    states = []
    for index in range(2 ** n):
        o_bits = _bits(index, n)
        i_bits = omega(o_bits)
        states.append(StateVector(_basis_vector(o_bits, i_bits), label=_state_label(o_bits, i_bits)))

    V = np.array([s.amplitudes for s in states])
    gram = V.conj() @ V.T
    deviation = np.abs(gram - np.eye(2 ** n))
    worst = float(deviation.max())
    if worst > tol:
        a, b = np.unravel_index(int(np.argmax(deviation)), deviation.shape)
        raise NotOrthogonal(
            f"basis states {states[a].label} and {states[b].label} deviate by {worst:.3e}",
            details={"pair": [states[a].label, states[b].label], "deviation": worst},
        )
    logger.debug(f"Generated {len(states)}-state basis for {omega.name or '<unnamed>'}; Gram deviation {worst:.1e}")
    return states


@dataclass
class ProtocolRecord:
    """Deterministic record of one protocol run on a basis state."""

    inputs: str
    outputs: str
    state_index: int
    label: str
    probability: float
    fidelity: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "inputs": self.inputs,
            "outputs": self.outputs,
            "state_index": self.state_index,
            "state": self.label,
            "probability": self.probability,
            "fidelity": self.fidelity,
        }


def _measurement_rotation(i_bits: Sequence[int]) -> np.ndarray:
    return reduce(np.kron, [HADAMARD if i else IDENTITY for i in i_bits])


def shift_outcome_distribution(
    psi: StateVector, omega: BooleanProcessFunction, tolerances: Optional[ToleranceConfig] = None
) -> List[Dict[str, Any]]:
    """Records (i, o) with nonzero probability for an arbitrary input state.

    Every pair of input and output strings is tried; a pair survives when
    i = omega(o) and measuring H^i psi yields o with nonzero probability.
    """
    tol = (tolerances or ToleranceConfig()).normalization
    n = omega.n
    if psi.n_qubits != n:
        raise ShapeMismatch(f"state has {psi.n_qubits} qubits, process has {n} parties", "/state")
    records = []
    for i_bits in product((0, 1), repeat=n):
        amplitudes = _measurement_rotation(i_bits) @ psi.amplitudes
        for o_index, amplitude in enumerate(amplitudes):
            o_bits = _bits(o_index, n)
            probability = float(abs(amplitude) ** 2)
            if probability > tol and omega(o_bits) == i_bits:
                records.append(
                    {"inputs": _bit_string(i_bits), "outputs": _bit_string(o_bits), "probability": probability}
                )
    return records


def shift_protocol_sim(
    psi: StateVector, omega: BooleanProcessFunction, tolerances: Optional[ToleranceConfig] = None
) -> ProtocolRecord:
    """Run the discrimination protocol on one state.

    Raises:
        NonBasisInput: If the record is not deterministic; the outcome
            distribution is attached.
    """
    tol = (tolerances or ToleranceConfig()).normalization
    records = shift_outcome_distribution(psi, omega, tolerances)
    if len(records) != 1 or abs(records[0]["probability"] - 1.0) > tol:
        raise NonBasisInput(
            f"state {psi.label or '<unlabelled>'} is not an element of the basis; outcomes are probabilistic",
            details={"distribution": records, "total": sum(r["probability"] for r in records)},
        )
    record = records[0]
    o_bits = [int(c) for c in record["outputs"]]
    i_bits = [int(c) for c in record["inputs"]]
    # step 3: reapplying H^i to |o> must return the input state
    corrected = _measurement_rotation(i_bits) @ _basis_vector(o_bits, [0] * omega.n)
    fidelity = float(abs(np.vdot(corrected, psi.amplitudes)) ** 2)
    index = int(record["outputs"], 2)
    return ProtocolRecord(
        record["inputs"], record["outputs"], index, _state_label(o_bits, i_bits), record["probability"], fidelity
    )


def shift_table(omega: Optional[BooleanProcessFunction] = None) -> List[ProtocolRecord]:
    """Protocol record for every element of S_omega (AF/BW by default)."""
    omega = omega or afbw_function()
    rows = [shift_protocol_sim(state, omega) for state in s_omega_basis(omega)]
    if len({(r.inputs, r.outputs) for r in rows}) != len(rows):
        raise NotOrthogonal(
            "two basis states produced the same record", details={"rows": [r.to_dict() for r in rows]}
        )
    logger.info(f"Identified all {len(rows)} basis states of {omega.name or '<unnamed>'}")
    return rows
