"""Regression corpus runner.

A corpus directory holds YAML case files. Each file lists cases that are
command lines for the dispatcher together with the expected exit code and
value checks on the JSON report::

    name: reference_cases
    data_root: ../..
    cases:
      - id: gamma18-uncolorable
        criterion: 1
        argv: [scenario, colorings, --scenario, "{root}/data/scenarios/gamma18.json"]
        expect:
          exit_code: 3
          checks:
            - {path: result/count, equals: 0}

``{root}`` in an argument is replaced by ``data_root`` resolved against the
case file. A case may also list ``threads: [1, 8]``; it then passes only
when every worker count yields the same result digest.
"""

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union
import logging
import time

import yaml

from src.data_handler import DataHandler, sha256_digest
from src.exceptions import CorpusMissing
from src.utils import format_duration, to_fraction
from src.validators import SchemaViolation, pointer, require_key, require_list, require_object

logger = logging.getLogger(__name__)

Executor = Callable[[Sequence[str]], Tuple[Dict[str, Any], int]]


@dataclass
class CorpusCase:
    """One command line with its expectations."""

    id: str
    argv: List[str]
    exit_code: int = 0
    checks: List[Dict[str, Any]] = field(default_factory=list)
    criterion: Optional[int] = None
    threads: List[int] = field(default_factory=list)
    source: str = ""


@dataclass
class CaseResult:
    """Outcome of one corpus case (one row of the results table)."""

    id: str
    criterion: Optional[int]
    command: str
    expected_exit: int
    exit_code: int
    passed: bool
    wall_time_s: float
    message: str = ""
    result_digest: str = ""


@dataclass
class CorpusSummary:
    """All case results plus the files they were written to."""

    results: List[CaseResult]
    outputs: Dict[str, str] = field(default_factory=dict)

    @property
    def n_passed(self) -> int:
        return sum(1 for r in self.results if r.passed)

    @property
    def all_passed(self) -> bool:
        return self.n_passed == len(self.results)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cases": len(self.results),
            "passed": self.n_passed,
            "failed": [r.id for r in self.results if not r.passed],
            "all_passed": self.all_passed,
            "results": [asdict(r) for r in self.results],
            "outputs": self.outputs,
        }


# ============================================================================
# LOADING
# ============================================================================


def load_cases(corpus_dir: Union[str, Path]) -> List[CorpusCase]:
    """Read every ``*.yaml`` case file of a corpus directory in name order.

    Raises:
        CorpusMissing: If the directory is absent or holds no cases.
        SchemaViolation: If a case file is malformed.
    """
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise CorpusMissing(f"corpus directory not found: {corpus_dir}", {"corpus": str(corpus_dir)})
    cases: List[CorpusCase] = []
    seen = set()
    for case_file in sorted(corpus_dir.glob("*.yaml")):
        with open(case_file, "r") as f:
            document = yaml.safe_load(f) or {}
        document = require_object(document)
        root = (case_file.parent / document.get("data_root", ".")).resolve()
        for index, raw in enumerate(require_list(document.get("cases", []), "/cases")):
            path = pointer("cases", index)
            raw = require_object(raw, path)
            case_id = str(require_key(raw, "id", path))
            if case_id in seen:
                raise SchemaViolation(f"duplicate case id '{case_id}' in {case_file.name}", f"{path}/id")
            seen.add(case_id)
            expect = require_object(raw.get("expect", {}), f"{path}/expect")
            argv = [str(a).replace("{root}", str(root)) for a in require_list(require_key(raw, "argv", path), f"{path}/argv")]
            cases.append(
                CorpusCase(
                    id=case_id,
                    argv=argv,
                    exit_code=int(expect.get("exit_code", 0)),
                    checks=list(expect.get("checks", [])),
                    criterion=raw.get("criterion"),
                    threads=[int(t) for t in raw.get("threads", [])],
                    source=case_file.name,
                )
            )
    if not cases:
        raise CorpusMissing(f"no corpus cases found in {corpus_dir}", {"corpus": str(corpus_dir)})
    logger.info(f"Loaded {len(cases)} corpus cases from {corpus_dir}")
    return cases


# ============================================================================
# CHECKS
# ============================================================================


def lookup(report: Any, path: str) -> Any:
    """Follow a slash-separated path through nested dicts and lists.

    Raises:
        KeyError: If a component is missing.
    """
    value = report
    for part in [p for p in path.split("/") if p]:
        if isinstance(value, list):
            value = value[int(part)]
        elif isinstance(value, dict) and part in value:
            value = value[part]
        else:
            raise KeyError(path)
    return value


def _exact(value: Any) -> Any:
    """Numbers in reports are ints, floats or {"exact": "p/q", "value": x}."""
    if isinstance(value, dict) and "exact" in value:
        return to_fraction(value["exact"])
    return value


def check_value(actual: Any, check: Dict[str, Any]) -> Optional[str]:
    """Return None when actual satisfies the check, else a failure message.

    Supported keys: ``equals`` (exact, "p/q" strings compare as rationals),
    ``approx`` with ``tol``, ``length``, ``at_least``, ``at_most``.
    """
    if "equals" in check:
        expected = check["equals"]
        value = _exact(actual)
        if isinstance(expected, str) and "/" in expected:
            if isinstance(value, float) or to_fraction(value) != to_fraction(expected):
                return f"expected {expected}, got {actual}"
        elif value != expected:
            return f"expected {expected!r}, got {actual!r}"
    if "approx" in check:
        target = float(to_fraction(check["approx"]))
        tol = float(check.get("tol", 1e-9))
        value = _exact(actual)
        if abs(float(value) - target) > tol:
            return f"expected {target} within {tol}, got {float(value)}"
    if "length" in check and len(actual) != check["length"]:
        return f"expected length {check['length']}, got {len(actual)}"
    if "at_least" in check and float(_exact(actual)) < float(to_fraction(check["at_least"])):
        return f"expected at least {check['at_least']}, got {actual}"
    if "at_most" in check and float(_exact(actual)) > float(to_fraction(check["at_most"])):
        return f"expected at most {check['at_most']}, got {actual}"
    return None


def _evaluate(case: CorpusCase, report: Dict[str, Any], exit_code: int) -> List[str]:
    failures = []
    if exit_code != case.exit_code:
        error = report.get("error", {})
        failures.append(f"exit code {exit_code}, expected {case.exit_code} {error.get('type', '')}".strip())
    for check in case.checks:
        path = check.get("path", "")
        try:
            actual = lookup(report, path)
        except (KeyError, IndexError, ValueError):
            failures.append(f"{path}: missing")
            continue
        message = check_value(actual, check)
        if message:
            failures.append(f"{path}: {message}")
    return failures


def _with_threads(argv: Sequence[str], threads: int) -> List[str]:
    return list(argv) + ["--threads", str(threads)]


# ============================================================================
# RUNNING
# ============================================================================


def run_case(case: CorpusCase, execute: Executor, config_path: Optional[str] = None) -> CaseResult:
    """Run one case and compare the report with its expectations."""
    start = time.time()
    argv = list(case.argv)
    if config_path and "--config" not in argv:
        argv += ["--config", str(config_path)]
    report, exit_code = execute(argv)
    failures = _evaluate(case, report, exit_code)
    digest = sha256_digest(report.get("result", report.get("error")))

    for threads in case.threads:
        other, other_exit = execute(_with_threads(argv, threads))
        other_digest = sha256_digest(other.get("result", other.get("error")))
        if other_exit != exit_code or other_digest != digest:
            failures.append(f"report differs with --threads {threads}")

    wall = time.time() - start
    passed = not failures
    level = logging.INFO if passed else logging.WARNING
    logger.log(level, f"{'PASS' if passed else 'FAIL'} {case.id} ({format_duration(wall)})")
    return CaseResult(
        id=case.id,
        criterion=case.criterion,
        command=" ".join(case.argv),
        expected_exit=case.exit_code,
        exit_code=exit_code,
        passed=passed,
        wall_time_s=round(wall, 3),
        message="; ".join(failures),
        result_digest=digest,
    )


def run_corpus(
    corpus_dir: Union[str, Path],
    execute: Executor,
    output_dir: Optional[Union[str, Path]] = "outputs/corpus",
    config_path: Optional[str] = None,
    only: Optional[Sequence[str]] = None,
) -> CorpusSummary:
    """Run every case of a corpus and write results.csv and results.json.

    A failing case never stops the run; its failure is recorded in its row.

    Args:
        corpus_dir: Directory of YAML case files.
        execute: Dispatcher returning (report, exit code) for a command line.
        output_dir: Where the results tables go; None skips writing.
        config_path: Configuration passed to every case.
        only: Restrict the run to these case ids.

    Raises:
        CorpusMissing: If the directory holds no cases.
    """
    cases = load_cases(corpus_dir)
    if only:
        cases = [c for c in cases if c.id in set(only)]
        if not cases:
            raise CorpusMissing(f"none of the cases {list(only)} exist in {corpus_dir}")

    logger.info(f"Running {len(cases)} corpus cases")
    results = []
    for case in cases:
        try:
            results.append(run_case(case, execute, config_path))
        except Exception as e:
            logger.error(f"Case {case.id} crashed: {e}", exc_info=True)
            results.append(
                CaseResult(case.id, case.criterion, " ".join(case.argv), case.exit_code, 1, False, 0.0, str(e))
            )

    summary = CorpusSummary(results)
    if output_dir is not None:
        handler = DataHandler(str(output_dir))
        rows = [asdict(r) for r in results]
        summary.outputs = {
            "csv": str(handler.export_results_csv(rows, filename="results.csv")),
            "json": str(handler.export_report_json({"results": rows}, filename="results.json")),
        }
    logger.info(f"Corpus finished: {summary.n_passed}/{len(results)} passed")
    return summary
