#!/usr/bin/env python3
"""Command-line front end for the quantum certificate workbench.

Every invocation prints exactly one JSON report on standard output and a
human-readable summary on standard error. Exit codes: 0 computed, 1
internal error, 2 invalid input, 3 negative answer to a yes/no question
(or infeasible), 4 resource bound exceeded.

Usage:
    python scripts/qcw.py scenario colorings --scenario data/scenarios/gamma18.json
    python scripts/qcw.py invariants --scenario gamma5 --uniform-q
    python scripts/qcw.py causal bound --game gyni --scenario 2,2,2
    python scripts/qcw.py process nomic-bound --game gynin --mode audit --threads 8
"""

import argparse
import json
import logging
import sys
import time
from fractions import Fraction
from functools import partial
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

# Add parent directory to path to import src modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.causality import (
    CorrelationalScenario,
    builtin_correlation,
    builtin_game,
    builtin_process,
    brute_force_causal_codes,
    causal_bound,
    causal_vertex_codes,
    copy_interventions,
    correlation_from_process,
    enumerate_process_functions,
    game_value,
    hierarchy_report,
    is_causal,
    nomic_game_bound,
    parse_correlation,
    parse_game,
    parse_interventions,
    parse_process,
    process_consistency,
)
from src.config_loader import ConfigLoader, QcwConfig
from src.corpus_runner import run_corpus
from src.data_handler import DataHandler, RunManifest
from src.exceptions import (
    EXIT_INTERNAL,
    EXIT_INVALID_INPUT,
    EXIT_NEGATIVE,
    EXIT_OK,
    QcwError,
)
from src.graph_invariants import (
    EdgeDistribution,
    consistent_exclusivity_check,
    csw_value,
    invariant_report,
)
from src.joint_measurability import (
    classical_pentagonal_max,
    jm_feasible,
    jm_threshold,
    marginal_surgery_cycle,
    marginal_surgery_specker,
    pauli_family,
    pauli_surgery_example,
    parse_povms,
    pentagonal_lp_max,
    pentagonal_value,
    planar_family,
)
from src.lopf import (
    BooleanProcessFunction,
    afbw_function,
    parse_state,
    s_omega_basis,
    shift_protocol_sim,
    shift_table,
)
from src.quantum_models import (
    Ray,
    builtin_constructions,
    born_model,
    entanglement_flags,
    find_noise_crossing,
    noise_sweep,
    parse_rays,
    peres_mermin_audit,
    pure_state,
    simulate_noisy_corr,
    simulate_special_source,
    validate_realization,
)
from src.scenarios import (
    brute_force_ks_colorings,
    builtin_scenario,
    enumerate_ks_colorings,
    n_cycle_jms,
    n_specker_jms,
    parse_vertex_weights,
    validate_jms,
    validate_scenario,
)
from src.utils import number_to_json, setup_logging, to_fraction
from src.validators import (
    SchemaViolation,
    UnknownCommand,
    UnknownName,
    ValidationError,
    require_complex,
    require_list,
    validate_all_configs,
)
from src.witnesses import (
    PrepareMeasureData,
    classical_one_shot_value,
    logical_witness,
    one_shot_success,
    parse_one_shot_task,
    statistical_witness,
)

logger = logging.getLogger(__name__)

Outcome = Tuple[Dict[str, Any], int]


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting, so errors become JSON reports."""

    def error(self, message: str):
        raise UnknownCommand(message, "/argv")


# ============================================================================
# INPUT HELPERS
# ============================================================================


class Context:
    """Per-invocation state shared by the command handlers."""

    def __init__(self, args: argparse.Namespace, config: QcwConfig):
        self.args = args
        self.config = config
        self.threads = config.parallel.threads
        self.inputs: List[Path] = []

    def load_json(self, path: str) -> Any:
        """Load a JSON input and remember it for the manifest digests."""
        file_path = Path(path)
        try:
            data = DataHandler.load_json(file_path)
        except json.JSONDecodeError as e:
            raise SchemaViolation(f"{file_path} is not valid JSON: {e}", "")
        self.inputs.append(file_path)
        return data

    def named_or_file(self, value: str, builtin: Callable[[str], Any], parse: Callable[[Any], Any]) -> Any:
        """Resolve VALUE as a JSON file when it exists or has a .json suffix, else as a built-in name."""
        if Path(value).is_file() or value.endswith(".json"):
            return parse(self.load_json(value))
        return builtin(value)


def _parse_triple(text: str) -> CorrelationalScenario:
    try:
        n, m, d = (int(part) for part in text.split(","))
    except ValueError:
        raise SchemaViolation(f"expected N,M,D, got {text!r}", "/scenario")
    return CorrelationalScenario(n, m, d)


def _int_tuple(text: str) -> Tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part)
    except ValueError:
        raise SchemaViolation(f"expected comma-separated integers, got {text!r}", "/argv")


def _parse_overrides(items: Sequence[str]) -> Dict[str, Any]:
    """``["audit.seed=7", "tolerances.lp=1e-10"]`` -> nested override dict."""
    overrides: Dict[str, Dict[str, Any]] = {}
    for index, item in enumerate(items):
        key, sep, raw = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not section or not name:
            raise SchemaViolation(f"expected SECTION.KEY=VALUE, got {item!r}", f"/set/{index}")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as e:
            raise SchemaViolation(f"cannot parse value of {key!r}: {e}", f"/set/{index}")
        overrides.setdefault(section, {})[name] = value
    return overrides


def _builtin_jms(name: str):
    """"specker-N" or "cycle-N"."""
    kind, _, size = name.partition("-")
    if kind not in ("specker", "cycle") or not size.isdigit():
        raise UnknownName(f"unknown structure {name!r}; expected specker-N or cycle-N", "/jms")
    return n_specker_jms(int(size)) if kind == "specker" else n_cycle_jms(int(size))


def _pure_state(raw: Any, path: str) -> np.ndarray:
    """Density matrix of a JSON state vector with [re, im] entries."""
    amplitudes = [require_complex(a, f"{path}/{i}") for i, a in enumerate(require_list(raw, path, min_length=1))]
    return pure_state(Ray(np.array(amplitudes)))


def _load_scenario(ctx: Context):
    return ctx.named_or_file(ctx.args.scenario, builtin_scenario, validate_scenario)


def _load_q(ctx: Context, H) -> Optional[EdgeDistribution]:
    if getattr(ctx.args, "q", None):
        return EdgeDistribution.from_raw(H, ctx.load_json(ctx.args.q))
    if getattr(ctx.args, "uniform_q", False):
        return EdgeDistribution.uniform(H)
    return None


def _load_weights(ctx: Context, H) -> Tuple[Any, ...]:
    if getattr(ctx.args, "weights", None):
        return parse_vertex_weights(ctx.load_json(ctx.args.weights), H)
    return parse_vertex_weights(None, H)


def _load_realization(ctx: Context):
    """Realization from --construction, or from --rays with --scenario."""
    args = ctx.args
    if getattr(args, "construction", None):
        construction = builtin_constructions(args.construction)
        return construction.scenario, construction.realization, construction
    if not args.rays or not args.scenario:
        raise SchemaViolation("either --construction or both --rays and --scenario are required", "/argv")
    H = _load_scenario(ctx)
    raw = ctx.load_json(args.rays)
    _, rays = parse_rays(raw)
    state = None
    if isinstance(raw, dict) and "state" in raw:
        state = _pure_state(raw["state"], "/state")
    return H, validate_realization(H, rays, state, ctx.config.tolerances), None


def _load_data(ctx: Context, H) -> PrepareMeasureData:
    """Witness data from --data, or simulated from a built-in construction."""
    args = ctx.args
    if args.data:
        return PrepareMeasureData.from_raw(H, ctx.load_json(args.data))
    if not args.simulate:
        raise SchemaViolation("either --data or --simulate is required", "/argv")
    construction = builtin_constructions(args.simulate)
    R = construction.realization
    if args.p0 is not None:
        return simulate_special_source(H, R, R.state, float(to_fraction(args.p0)), args.noise)
    return simulate_noisy_corr(H, R, args.noise)


def _load_game(ctx: Context):
    return ctx.named_or_file(ctx.args.game, builtin_game, parse_game)


def _load_process(ctx: Context):
    return ctx.named_or_file(ctx.args.process, builtin_process, parse_process)


def _load_correlation(ctx: Context):
    return ctx.named_or_file(ctx.args.correlation, builtin_correlation, parse_correlation)


def _exact(value: Optional[str]) -> Optional[Fraction]:
    return None if value is None else to_fraction(value)


# ============================================================================
# SCENARIO
# ============================================================================


def cmd_scenario_validate(ctx: Context) -> Outcome:
    if ctx.args.jms:
        structure = ctx.named_or_file(ctx.args.jms, _builtin_jms, validate_jms)
        result = structure.to_dict()
        result["trivial"] = structure.is_trivial
        return result, EXIT_OK
    H = _load_scenario(ctx)
    result = H.to_dict()
    result.update({"n_vertices": H.n_vertices, "n_hyperedges": H.n_hyperedges})
    return result, EXIT_OK


def cmd_scenario_colorings(ctx: Context) -> Outcome:
    """Exit 3 when the scenario has no KS colouring."""
    H = _load_scenario(ctx)
    if ctx.args.oracle:
        colorings = brute_force_ks_colorings(H, max_vertices=ctx.config.enumeration.max_polytope_vertices)
        method = "brute_force"
    else:
        colorings = enumerate_ks_colorings(H, ctx.args.limit, ctx.threads, ctx.config.enumeration)
        method = "backtracking"
    result = {
        "scenario": H.name,
        "method": method,
        "count": len(colorings),
        "colorings": [c.as_dict() for c in colorings],
    }
    return result, EXIT_OK if colorings else EXIT_NEGATIVE


# ============================================================================
# INVARIANTS AND WITNESSES
# ============================================================================


def cmd_invariants(ctx: Context) -> Outcome:
    H = _load_scenario(ctx)
    report = invariant_report(
        H,
        _load_weights(ctx, H),
        _load_q(ctx, H),
        ctx.config.sdp,
        ctx.config.tolerances,
        ctx.config.enumeration,
    )
    result = report.to_dict()
    result["scenario"] = H.name
    return result, EXIT_OK


def cmd_witness_logical(ctx: Context) -> Outcome:
    """Exit 3 when the data does not violate the inequality."""
    H = _load_scenario(ctx)
    q = _load_q(ctx, H) or EdgeDistribution.uniform(H)
    report = logical_witness(H, q, _load_data(ctx, H), _exact(ctx.args.beta), ctx.config.tolerances)
    return report.to_dict(), EXIT_OK if report.violated else EXIT_NEGATIVE


def cmd_witness_statistical(ctx: Context) -> Outcome:
    """Exit 3 when the data does not violate the inequality."""
    args = ctx.args
    H = _load_scenario(ctx)
    q = _load_q(ctx, H) or EdgeDistribution.uniform(H)
    report = statistical_witness(
        H,
        q,
        _load_weights(ctx, H),
        _load_data(ctx, H),
        alpha=_exact(args.alpha),
        alpha_star=_exact(args.alpha_star),
        beta=_exact(args.beta),
        tolerances=ctx.config.tolerances,
    )
    return report.to_dict(), EXIT_OK if report.violated else EXIT_NEGATIVE


def cmd_witness_oneshot(ctx: Context) -> Outcome:
    task = parse_one_shot_task(ctx.load_json(ctx.args.task))
    quantum = one_shot_success(task)
    classical, encoding = classical_one_shot_value(task.channel, task.prior)
    return {
        "quantum_success": quantum,
        "classical_success": classical,
        "classical_encoding": encoding,
        "advantage": quantum - classical,
        "quantum_advantage": quantum > classical + ctx.config.tolerances.witness,
    }, EXIT_OK


# ============================================================================
# QUANTUM MODELS
# ============================================================================


def cmd_quantum_validate(ctx: Context) -> Outcome:
    H, R, construction = _load_realization(ctx)
    result = {"scenario": H.name, "valid": True, "dimension": R.dimension, "n_hyperedges": H.n_hyperedges}
    if construction is not None:
        result["construction"] = construction.name
    return result, EXIT_OK


def cmd_quantum_born(ctx: Context) -> Outcome:
    H, R, _ = _load_realization(ctx)
    rho = None
    if ctx.args.state:
        rho = _pure_state(ctx.load_json(ctx.args.state), "")
    model = born_model(R, rho)
    exclusivity = consistent_exclusivity_check(H, model, ctx.config.tolerances.model)
    return {
        "scenario": H.name,
        "model": model.as_dict(),
        "csw_value": number_to_json(csw_value(model, _load_weights(ctx, H))),
        "consistent_exclusivity": {
            "passes": exclusivity.passes,
            "clique": exclusivity.clique,
            "total": float(exclusivity.total),
        },
    }, EXIT_OK


def cmd_quantum_noise_sweep(ctx: Context) -> Outcome:
    args = ctx.args
    H, R, _ = _load_realization(ctx)
    q = _load_q(ctx, H) or EdgeDistribution.uniform(H)
    grid = np.linspace(0.0, 1.0, args.points)
    sweep = noise_sweep(H, q, R, grid)
    values = [corr for _, corr in sweep]
    result: Dict[str, Any] = {
        "scenario": H.name,
        "sweep": [{"noise": nu, "corr": corr} for nu, corr in sweep],
        "monotone": all(b <= a + 1e-12 for a, b in zip(values, values[1:])),
    }
    if args.target is not None:
        target = to_fraction(args.target)
        result["target"] = number_to_json(target)
        result["crossing"] = find_noise_crossing(H, q, R, float(target), args.precision)
    return result, EXIT_OK


def cmd_quantum_pm_audit(ctx: Context) -> Outcome:
    audit = peres_mermin_audit()
    return audit.to_dict(), EXIT_OK


def cmd_quantum_builtin(ctx: Context) -> Outcome:
    construction = builtin_constructions(ctx.args.name)
    result = construction.to_dict()
    if construction.factors:
        rays = [construction.realization.rays[v] for v in construction.scenario.vertices]
        flags = entanglement_flags(rays, construction.factors, ctx.config.tolerances.orthogonality)
        for vertex, flag in zip(construction.scenario.vertices, flags):
            flag["vertex"] = vertex
        result["entanglement"] = flags
        result["n_entangled"] = sum(1 for flag in flags if not flag["product"])
    return result, EXIT_OK


# ============================================================================
# JOINT MEASURABILITY
# ============================================================================


def cmd_jm_feasible(ctx: Context) -> Outcome:
    """Exit 3 when the POVMs are not jointly measurable."""
    povms = parse_povms(ctx.load_json(ctx.args.povms))
    result = jm_feasible(povms, ctx.config.joint_measurability, ctx.config.tolerances)
    return result.to_dict(), EXIT_OK if result.feasible else EXIT_NEGATIVE


def cmd_jm_threshold(ctx: Context) -> Outcome:
    args = ctx.args
    if args.family == "pauli":
        family = partial(_pauli_at, _int_tuple(args.axes))
    else:
        lines = _int_tuple(args.select) if args.select else tuple(range(args.lines))
        family = partial(planar_family, args.lines, lines)
    result = jm_threshold(family, config=ctx.config.joint_measurability, tolerances=ctx.config.tolerances)
    report = result.to_dict()
    report["family"] = args.family
    return report, EXIT_OK


def _pauli_at(axes: Tuple[int, ...], eta: float):
    return pauli_family(axes, eta)


def cmd_jm_surgery(ctx: Context) -> Outcome:
    args = ctx.args
    config = ctx.config.joint_measurability
    if args.kind == "pauli":
        return pauli_surgery_example(config=config), EXIT_OK
    build = marginal_surgery_specker if args.kind == "specker" else marginal_surgery_cycle
    result = build(args.n, args.eta, config=config, threads=ctx.threads)
    return result.to_dict(), EXIT_OK


def cmd_jm_pentagon(ctx: Context) -> Outcome:
    classical, maximizers = classical_pentagonal_max()
    lp_value, _ = pentagonal_lp_max(exact=True)
    result: Dict[str, Any] = {
        "classical_max": classical,
        "classical_maximizers": [list(x) for x in maximizers],
        "pairwise_max": number_to_json(lp_value),
    }
    if ctx.args.tables:
        raw = ctx.load_json(ctx.args.tables)
        value = pentagonal_value(raw.get("pairs", {}), raw.get("singles"))
        result["value"] = number_to_json(value)
        result["exceeds_classical"] = float(value) > classical + ctx.config.tolerances.lp
    return result, EXIT_OK


# ============================================================================
# CAUSALITY
# ============================================================================


def cmd_causal_vertices(ctx: Context) -> Outcome:
    s = _parse_triple(ctx.args.scenario)
    if ctx.args.oracle:
        codes = brute_force_causal_codes(s)
    else:
        codes = causal_vertex_codes(s, ctx.config.enumeration, ctx.threads)
    result: Dict[str, Any] = {"scenario": s.to_dict(), "count": int(codes.shape[0])}
    if ctx.args.list:
        result["codes"] = codes.tolist()
    return result, EXIT_OK


def cmd_causal_bound(ctx: Context) -> Outcome:
    game = _load_game(ctx)
    if ctx.args.scenario and _parse_triple(ctx.args.scenario) != game.scenario:
        raise SchemaViolation(
            f"game {game.name} is defined on {game.scenario.to_dict()}, not {ctx.args.scenario}", "/scenario"
        )
    bound = causal_bound(game, ctx.config.enumeration, ctx.threads)
    return bound.to_dict(), EXIT_OK


def cmd_causal_check(ctx: Context) -> Outcome:
    """Exit 3 when the correlation is not causal."""
    correlation = _load_correlation(ctx)
    verdict = is_causal(correlation, ctx.config.enumeration, ctx.config.tolerances, ctx.threads)
    return verdict.to_dict(), EXIT_OK if verdict.causal else EXIT_NEGATIVE


def cmd_causal_game(ctx: Context) -> Outcome:
    game = _load_game(ctx)
    correlation = _load_correlation(ctx)
    return {"game": game.name, "value": number_to_json(game_value(game, correlation))}, EXIT_OK


# ============================================================================
# PROCESSES
# ============================================================================


def cmd_process_check(ctx: Context) -> Outcome:
    """Exit 3 when the environment is not logically consistent."""
    env = _load_process(ctx)
    report = process_consistency(env, ctx.config.tolerances, ctx.config.enumeration)
    result = report.to_dict()
    result["process"] = env.name
    return result, EXIT_OK if report.consistent else EXIT_NEGATIVE


def cmd_process_correlate(ctx: Context) -> Outcome:
    args = ctx.args
    env = _load_process(ctx)
    if args.interventions:
        interventions = parse_interventions(ctx.load_json(args.interventions))
    else:
        interventions = copy_interventions(env.n)
    scenario = _parse_triple(args.scenario) if args.scenario else CorrelationalScenario(
        env.n, interventions[0].settings, interventions[0].outcomes
    )
    correlation = correlation_from_process(env, interventions, scenario)
    result: Dict[str, Any] = {"correlation": correlation.to_dict()}
    if args.game:
        game = _load_game(ctx)
        result["game"] = game.name
        result["value"] = number_to_json(game_value(game, correlation))
    if args.check_causal:
        result["causality"] = is_causal(correlation, ctx.config.enumeration, ctx.config.tolerances, ctx.threads).to_dict()
    return result, EXIT_OK


def cmd_process_enumerate(ctx: Context) -> Outcome:
    args = ctx.args
    processes = enumerate_process_functions(args.parties, args.candidate_space, ctx.config.enumeration, ctx.threads)
    result: Dict[str, Any] = {
        "parties": args.parties,
        "candidate_space": args.candidate_space,
        "count": len(processes),
    }
    if args.list:
        result["functions"] = [env.party_functions() for env in processes]
    return result, EXIT_OK


def cmd_process_nomic_bound(ctx: Context) -> Outcome:
    args = ctx.args
    game = _load_game(ctx)
    processes = [_load_process(ctx)] if args.process else None
    audit = ctx.config.audit
    if args.samples is not None:
        audit.samples = args.samples
    if args.seed is not None:
        audit.seed = args.seed
    if args.checkpoint:
        audit.checkpoint_file = args.checkpoint
    bound = nomic_game_bound(
        game,
        mode=args.mode,
        processes=processes,
        candidate_space=args.candidate_space,
        audit=audit,
        reference=_exact(args.reference),
        config=ctx.config.enumeration,
        threads=ctx.threads,
    )
    return bound.to_dict(), EXIT_OK


def cmd_process_hierarchy(ctx: Context) -> Outcome:
    return hierarchy_report(ctx.config.enumeration, ctx.threads), EXIT_OK


# ============================================================================
# LOGICALLY CONSISTENT PROCESS FUNCTIONS
# ============================================================================


def _load_boolean_process(ctx: Context) -> BooleanProcessFunction:
    if not ctx.args.process:
        return afbw_function()
    return BooleanProcessFunction.from_environment(_load_process(ctx))


def cmd_lopf_shift(ctx: Context) -> Outcome:
    """Without a state, reproduce the whole table; with one, run the protocol on it."""
    omega = _load_boolean_process(ctx)
    if ctx.args.state_label or ctx.args.state:
        raw = ctx.args.state_label or ctx.load_json(ctx.args.state)
        record = shift_protocol_sim(parse_state(raw), omega, ctx.config.tolerances)
        return record.to_dict(), EXIT_OK
    rows = shift_table(omega)
    return {"process": omega.to_dict(), "rows": [r.to_dict() for r in rows]}, EXIT_OK


def cmd_lopf_basis(ctx: Context) -> Outcome:
    omega = _load_boolean_process(ctx)
    basis = s_omega_basis(omega, ctx.config.tolerances)
    gram = np.array([[b.overlap(c) for c in basis] for b in basis])
    return {
        "process": omega.to_dict(),
        "basis": [b.to_dict() for b in basis],
        "gram_deviation": float(np.max(np.abs(gram - np.eye(len(basis))))),
    }, EXIT_OK


# ============================================================================
# CORPUS
# ============================================================================


def cmd_corpus_run(ctx: Context) -> Outcome:
    """Exit 3 when any corpus case fails."""
    args = ctx.args
    summary = run_corpus(
        args.corpus,
        execute,
        output_dir=args.output_dir or ctx.config.output.output_dir,
        config_path=args.config,
        only=args.only,
    )
    return summary.to_dict(), EXIT_OK if summary.all_passed else EXIT_NEGATIVE


COMMANDS: Dict[Tuple[str, Optional[str]], Callable[[Context], Outcome]] = {
    ("scenario", "validate"): cmd_scenario_validate,
    ("scenario", "colorings"): cmd_scenario_colorings,
    ("invariants", None): cmd_invariants,
    ("witness", "logical"): cmd_witness_logical,
    ("witness", "statistical"): cmd_witness_statistical,
    ("witness", "oneshot"): cmd_witness_oneshot,
    ("quantum", "validate"): cmd_quantum_validate,
    ("quantum", "born"): cmd_quantum_born,
    ("quantum", "noise-sweep"): cmd_quantum_noise_sweep,
    ("quantum", "pm-audit"): cmd_quantum_pm_audit,
    ("quantum", "builtin"): cmd_quantum_builtin,
    ("jm", "feasible"): cmd_jm_feasible,
    ("jm", "threshold"): cmd_jm_threshold,
    ("jm", "surgery"): cmd_jm_surgery,
    ("jm", "pentagon"): cmd_jm_pentagon,
    ("causal", "vertices"): cmd_causal_vertices,
    ("causal", "bound"): cmd_causal_bound,
    ("causal", "check"): cmd_causal_check,
    ("causal", "game"): cmd_causal_game,
    ("process", "check"): cmd_process_check,
    ("process", "correlate"): cmd_process_correlate,
    ("process", "enumerate"): cmd_process_enumerate,
    ("process", "nomic-bound"): cmd_process_nomic_bound,
    ("process", "hierarchy"): cmd_process_hierarchy,
    ("lopf", "shift"): cmd_lopf_shift,
    ("lopf", "basis"): cmd_lopf_basis,
    ("corpus", "run"): cmd_corpus_run,
}


# ============================================================================
# ARGUMENT PARSING
# ============================================================================


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", "-c", type=str, default=None, help="Configuration YAML (default: built-in)")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override one configuration value (repeatable); VALUE is parsed as YAML",
    )
    parser.add_argument("--threads", "-t", type=int, default=None, help="Worker processes (overrides QCW_THREADS)")
    parser.add_argument("--output", "-o", type=str, default=None, help="Also write the report to this file")
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable debug logging")
    parser.add_argument("--quiet", "-q", action="store_true", help="Only log warnings and errors")
    parser.add_argument("--log-file", type=str, default=None, help="Also write logs to this file")


def _add_scenario(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument(
        "--scenario", "-s", type=str, required=required,
        help="Scenario JSON file or built-in name (gamma18, gamma5, triangle)",
    )


def _add_q(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--q", type=str, default=None, help="JSON list of hyperedge weights")
    group.add_argument("--uniform-q", action="store_true", help="Uniform hyperedge weights")


def _add_data(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", type=str, default=None, help="Prepare-measure data JSON")
    parser.add_argument("--simulate", type=str, default=None, help="Simulate data from a built-in construction")
    parser.add_argument("--noise", type=float, default=0.0, help="Depolarizing noise for --simulate (default: 0)")
    parser.add_argument("--p0", type=str, default=None, help="Special-source marginal for --simulate")


def _add_realization(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--construction", type=str, default=None, help="Built-in construction (cega18, kcbs, peres24, shift)")
    parser.add_argument("--rays", type=str, default=None, help="Ray JSON file (requires --scenario)")
    _add_scenario(parser, required=False)


def build_parser() -> argparse.ArgumentParser:
    """Build the full subcommand grammar."""
    common = _Parser(add_help=False)
    _add_common(common)

    parser = _Parser(
        prog="qcw",
        description="Certify contextuality, incompatibility and noncausality from finite data",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Γ18 has no KS colouring (exit 3)
  qcw scenario colorings --scenario data/scenarios/gamma18.json

  # Pentagon invariants with uniform hyperedge weights
  qcw invariants --scenario gamma5 --uniform-q

  # Causal bound of GYNI
  qcw causal bound --game gyni --scenario 2,2,2

  # Seeded audit of the nomic bound on 8 workers
  qcw process nomic-bound --game gynin --mode audit --reference 5/8 --threads 8

  # Hierarchy of perfect GYNI, AF/BW and BFW
  qcw process hierarchy

  # Override one configuration key
  qcw causal check --correlation c.json --set enumeration.column_batch=64
        """,
    )
    groups = parser.add_subparsers(dest="group", metavar="COMMAND")
    groups.required = True

    def group(name: str, help_text: str):
        sub = groups.add_parser(name, help=help_text)
        actions = sub.add_subparsers(dest="action", metavar="ACTION")
        actions.required = True
        return actions

    def action(actions, name: str, help_text: str) -> argparse.ArgumentParser:
        return actions.add_parser(name, help=help_text, parents=[common])

    scenario = group("scenario", "Contextuality scenarios")
    p = action(scenario, "validate", "Validate a scenario or a joint-measurability structure")
    _add_scenario(p, required=False)
    p.add_argument("--jms", type=str, default=None, help="JMS JSON file to validate instead")
    p = action(scenario, "colorings", "Enumerate KS colourings")
    _add_scenario(p)
    p.add_argument("--limit", type=int, default=None, help="Stop after this many colourings")
    p.add_argument("--oracle", action="store_true", help="Use the plain 2^|V| scan")

    p = groups.add_parser("invariants", help="alpha, theta, alpha* and beta", parents=[common])
    _add_scenario(p)
    _add_q(p)
    p.add_argument("--weights", type=str, default=None, help="JSON mapping of vertex weights")

    witness = group("witness", "Contextuality witnesses")
    p = action(witness, "logical", "Corr <= beta(H,q)")
    _add_scenario(p)
    _add_q(p)
    _add_data(p)
    p.add_argument("--beta", type=str, default=None, help="Known beta(H,q) as p/q")
    p = action(witness, "statistical", "Statistical witness with a special source")
    _add_scenario(p)
    _add_q(p)
    _add_data(p)
    p.add_argument("--weights", type=str, default=None, help="JSON mapping of vertex weights")
    p.add_argument("--alpha", type=str, default=None, help="Known alpha as p/q")
    p.add_argument("--alpha-star", type=str, default=None, help="Known alpha* as p/q")
    p.add_argument("--beta", type=str, default=None, help="Known beta as p/q")
    p = action(witness, "oneshot", "Entanglement-assisted one-shot success")
    p.add_argument("--task", type=str, required=True, help="One-shot task JSON")

    quantum = group("quantum", "Quantum realizations")
    p = action(quantum, "validate", "Check that rays complete every hyperedge")
    _add_realization(p)
    p = action(quantum, "born", "Born-rule model of a realization")
    _add_realization(p)
    p.add_argument("--state", type=str, default=None, help="JSON state vector (default: realization state)")
    p.add_argument("--weights", type=str, default=None, help="JSON mapping of vertex weights for the CSW value")
    p = action(quantum, "noise-sweep", "Corr under depolarizing noise")
    _add_realization(p)
    _add_q(p)
    p.add_argument("--points", type=int, default=11, help="Grid points on [0, 1] (default: 11)")
    p.add_argument("--target", type=str, default=None, help="Locate the noise level where Corr equals this value")
    p.add_argument("--precision", type=float, default=1e-6, help="Bisection precision (default: 1e-6)")
    action(quantum, "pm-audit", "Peres-Mermin operator identities and valuations")
    p = action(quantum, "builtin", "Built-in construction with entanglement flags")
    p.add_argument("--name", type=str, required=True, help="cega18, kcbs, peres24 or shift")

    jm = group("jm", "Joint measurability")
    p = action(jm, "feasible", "Decide joint measurability of binary qubit POVMs")
    p.add_argument("--povms", type=str, required=True, help="POVM JSON file")
    p = action(jm, "threshold", "Bisect the sharpness threshold of a family")
    p.add_argument("--family", choices=["pauli", "planar"], default="pauli")
    p.add_argument("--axes", type=str, default="1,2,3", help="Pauli axes for --family pauli")
    p.add_argument("--lines", type=int, default=4, help="Lines on the Bloch circle for --family planar")
    p.add_argument("--select", type=str, default=None, help="Selected lines for --family planar")
    p = action(jm, "surgery", "Marginal-surgery realizations")
    p.add_argument("--kind", choices=["specker", "cycle", "pauli"], default="specker")
    p.add_argument("--n", type=int, default=3, help="Number of measurements")
    p.add_argument("--eta", type=float, default=None, help="Sharpness (default: mid-window)")
    p = action(jm, "pentagon", "Pentagonal inequality bounds")
    p.add_argument("--tables", type=str, default=None, help="Pair tables to evaluate")

    causal = group("causal", "Causal correlations and games")
    p = action(causal, "vertices", "Count deterministic causal vertices")
    p.add_argument("--scenario", "-s", type=str, required=True, help="N,M,D")
    p.add_argument("--oracle", action="store_true", help="Use the brute-force recursive test")
    p.add_argument("--list", action="store_true", help="Include vertex codes in the report")
    p = action(causal, "bound", "Causal bound of a game")
    p.add_argument("--game", type=str, required=True, help="Game JSON file or gyni, afbw, gynin")
    p.add_argument("--scenario", "-s", type=str, default=None, help="Expected N,M,D")
    p = action(causal, "check", "Decide whether a correlation is causal")
    p.add_argument("--correlation", type=str, required=True, help="Correlation JSON file or built-in name")
    p = action(causal, "game", "Game value of a correlation")
    p.add_argument("--game", type=str, required=True)
    p.add_argument("--correlation", type=str, required=True)

    process = group("process", "Classical processes")
    p = action(process, "check", "Logical consistency of an environment")
    p.add_argument("--process", type=str, required=True, help="Process JSON file or afbw, bfw, identity-loop")
    p = action(process, "correlate", "Correlation generated by a process and interventions")
    p.add_argument("--process", type=str, required=True)
    p.add_argument("--interventions", type=str, default=None, help="Intervention JSON (default: copy)")
    p.add_argument("--scenario", "-s", type=str, default=None, help="N,M,D")
    p.add_argument("--game", type=str, default=None, help="Also report this game's value")
    p.add_argument("--check-causal", action="store_true", help="Also decide causality")
    p = action(process, "enumerate", "Enumerate binary process functions")
    p.add_argument("--parties", type=int, default=2)
    p.add_argument("--candidate-space", choices=["self_independent", "full"], default="self_independent")
    p.add_argument("--list", action="store_true", help="Include truth tables in the report")
    p = action(process, "nomic-bound", "Game bound over process functions")
    p.add_argument("--game", type=str, required=True)
    p.add_argument("--mode", choices=["exhaustive", "audit"], default="exhaustive")
    p.add_argument("--process", type=str, default=None, help="Restrict to one process function")
    p.add_argument("--candidate-space", choices=["self_independent", "full"], default="self_independent")
    p.add_argument("--reference", type=str, default=None, help="Claimed bound checked by the audit")
    p.add_argument("--samples", type=int, default=None, help="Audit sample count")
    p.add_argument("--seed", type=int, default=None, help="Audit seed")
    p.add_argument("--checkpoint", type=str, default=None, help="Checkpoint file for resumable runs (both modes)")
    action(process, "hierarchy", "Place perfect GYNI, AF/BW and BFW in the correlation hierarchy")

    lopf = group("lopf", "Discrimination with logically consistent process functions")
    p = action(lopf, "shift", "Run the discrimination protocol")
    p.add_argument("--process", type=str, default=None, help="Boolean process function (default: afbw)")
    p.add_argument("--state-label", type=str, default=None, help="Input state label such as +01")
    p.add_argument("--state", type=str, default=None, help="Input state JSON")
    p = action(lopf, "basis", "Basis discriminated by a process function")
    p.add_argument("--process", type=str, default=None, help="Boolean process function (default: afbw)")

    corpus = group("corpus", "Regression corpus")
    p = action(corpus, "run", "Run every case of a corpus directory")
    p.add_argument("--corpus", type=str, default="configs/corpus", help="Corpus directory")
    p.add_argument("--output-dir", type=str, default=None, help="Directory for results.csv and results.json")
    p.add_argument("--only", type=str, nargs="*", default=None, help="Run only these case ids")

    return parser


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments.

    Raises:
        UnknownCommand: For an unknown subcommand or malformed options.
    """
    return build_parser().parse_args(argv)


# ============================================================================
# DISPATCH
# ============================================================================


def _error_report(error: Exception) -> Dict[str, Any]:
    return {
        "type": type(error).__name__,
        "message": getattr(error, "message", str(error)),
        "path": getattr(error, "path", None),
        "details": getattr(error, "details", {}) or {},
    }


def execute(argv: Sequence[str], configure_logging: bool = False) -> Tuple[Dict[str, Any], int]:
    """Run one command and return its JSON report and exit code.

    Args:
        argv: Command line without the program name.
        configure_logging: Apply the -v/-q/--log-file options.

    Returns:
        (report, exit code); the report always carries "command" and
        "exit_code", plus "result" on success or "error" on failure, and a
        "manifest" unless the configuration disables it.
    """
    start = time.time()
    argv = list(argv)
    command = " ".join(a for a in argv[:2] if not a.startswith("-"))
    config: Optional[QcwConfig] = None
    ctx: Optional[Context] = None
    output_path = None
    try:
        args = parse_arguments(argv)
        action = getattr(args, "action", None)
        command = args.group if action is None else f"{args.group} {action}"
        output_path = args.output
        if configure_logging:
            level = "DEBUG" if args.verbose else "WARNING" if args.quiet else "INFO"
            setup_logging(level=level, log_file=args.log_file)
        overrides = _parse_overrides(args.overrides)
        try:
            config = ConfigLoader().load_complete_config(args.config, overrides)
        except (ValueError, TypeError, yaml.YAMLError) as e:
            raise SchemaViolation(f"invalid configuration: {e}", "/config")
        if args.threads is not None:
            config.parallel.threads = args.threads
        validate_all_configs(config)

        logger.info("=" * 60)
        logger.info(f"QCW {command.upper()}")
        logger.info("=" * 60)

        ctx = Context(args, config)
        result, exit_code = COMMANDS[(args.group, action)](ctx)
        report: Dict[str, Any] = {"command": command, "exit_code": exit_code, "result": result}
        logger.info("\n" + DataHandler.format_summary_text(command, result))
    except (ValidationError, FileNotFoundError) as e:
        logger.error(f"Invalid input: {e}")
        exit_code = EXIT_INVALID_INPUT
        report = {"command": command, "exit_code": exit_code, "error": _error_report(e)}
    except QcwError as e:
        logger.warning(f"{type(e).__name__}: {e.message}")
        exit_code = e.exit_code
        report = {"command": command, "exit_code": exit_code, "error": _error_report(e)}
    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=True)
        exit_code = EXIT_INTERNAL
        report = {"command": command, "exit_code": exit_code, "error": _error_report(e)}

    if config is None or config.output.write_manifest:
        manifest = RunManifest.build(
            ["qcw"] + argv,
            ctx.inputs if ctx is not None else [],
            vars(config.tolerances) if config is not None else {},
            time.time() - start,
            report.get("result", report.get("error")),
        )
        report["manifest"] = manifest.to_dict()
    if output_path:
        indent = config.output.indent if config is not None else 2
        DataHandler(indent=indent).export_report_json(report, output_path=output_path)
    return report, exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main execution function."""
    argv = sys.argv[1:] if argv is None else list(argv)
    setup_logging(level="INFO")
    report, exit_code = execute(argv, configure_logging=True)
    DataHandler.write_report(report)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
