"""Tests for the regression corpus runner."""

import textwrap

import pytest

from src.corpus_runner import (
    CorpusCase,
    _with_threads,
    check_value,
    load_cases,
    lookup,
    run_case,
    run_corpus,
)
from src.exceptions import CorpusMissing
from src.validators import SchemaViolation

CASE_FILE = """
name: small
data_root: .
cases:
  - id: ok
    criterion: 2
    argv: [invariants, --scenario, "{root}/gamma5.json"]
    expect:
      exit_code: 0
      checks:
        - {path: result/beta, equals: "1/2"}
  - id: negative
    argv: [scenario, colorings]
    threads: [1, 2]
    expect:
      exit_code: 3
"""


def fake_execute(argv):
    if argv[0] == "invariants":
        return {"command": "invariants", "exit_code": 0, "result": {"beta": {"exact": "1/2", "value": 0.5}}}, 0
    if argv[0] == "scenario":
        return {"command": "scenario colorings", "exit_code": 3, "result": {"count": 0}}, 3
    raise RuntimeError("boom")


def thread_sensitive_execute(argv):
    return {"result": {"threads": argv.count("--threads")}}, 0


@pytest.fixture
def corpus_dir(tmp_path):
    directory = tmp_path / "corpus"
    directory.mkdir()
    (directory / "cases.yaml").write_text(textwrap.dedent(CASE_FILE))
    return directory


class TestChecks:
    """Test value lookup and comparison."""

    def test_lookup(self):
        report = {"result": {"rows": [{"state": "+01"}]}}
        assert lookup(report, "result/rows/0/state") == "+01"
        with pytest.raises(KeyError):
            lookup(report, "result/missing")

    def test_exact_equality(self):
        assert check_value({"exact": "5/6", "value": 5 / 6}, {"equals": "5/6"}) is None
        assert check_value(5 / 6, {"equals": "5/6"}) is not None
        assert check_value(2, {"equals": 2}) is None
        assert check_value(True, {"equals": False}) is not None

    def test_approx(self):
        assert check_value(2.23607, {"approx": 2.2360679, "tol": 1e-4}) is None
        assert check_value(2.3, {"approx": 2.2360679, "tol": 1e-4}) is not None

    def test_length_and_bounds(self):
        assert check_value([1, 2, 3], {"length": 3}) is None
        assert check_value([1, 2], {"length": 3}) == "expected length 3, got 2"
        assert check_value({"exact": "5/8", "value": 0.625}, {"at_least": "1/2", "at_most": 1}) is None
        assert check_value(0.4, {"at_least": "1/2"}) is not None


class TestLoadCases:
    """Test reading case files."""

    def test_load(self, corpus_dir):
        cases = load_cases(corpus_dir)
        assert [c.id for c in cases] == ["ok", "negative"]
        assert cases[0].argv[-1] == f"{corpus_dir.resolve()}/gamma5.json"
        assert cases[1].exit_code == 3
        assert cases[1].threads == [1, 2]

    def test_missing_directory(self, tmp_path):
        with pytest.raises(CorpusMissing):
            load_cases(tmp_path / "absent")

    def test_empty_directory(self, tmp_path):
        with pytest.raises(CorpusMissing, match="no corpus cases"):
            load_cases(tmp_path)

    def test_duplicate_ids(self, corpus_dir):
        (corpus_dir / "more.yaml").write_text("cases:\n  - id: ok\n    argv: [invariants]\n")
        with pytest.raises(SchemaViolation, match="duplicate case id"):
            load_cases(corpus_dir)

    def test_shipped_corpus_loads(self, repo_root):
        cases = load_cases(repo_root / "configs" / "corpus")
        assert len({c.id for c in cases}) == len(cases)
        assert cases
        assert not any("{root}" in arg for c in cases for arg in c.argv)


class TestRunning:
    """Test case execution against a fake dispatcher."""

    def test_with_threads(self):
        assert _with_threads(["causal", "vertices"], 4) == ["causal", "vertices", "--threads", "4"]

    def test_passing_case(self):
        case = CorpusCase("ok", ["invariants"], checks=[{"path": "result/beta", "equals": "1/2"}])
        result = run_case(case, fake_execute)
        assert result.passed
        assert result.message == ""
        assert result.result_digest

    def test_wrong_exit_code(self):
        result = run_case(CorpusCase("neg", ["scenario"], exit_code=0), fake_execute)
        assert not result.passed
        assert "exit code 3" in result.message

    def test_missing_check_path(self):
        case = CorpusCase("ok", ["invariants"], checks=[{"path": "result/alpha", "equals": 2}])
        assert "result/alpha: missing" in run_case(case, fake_execute).message

    def test_thread_digest_mismatch(self):
        result = run_case(CorpusCase("t", ["causal"], threads=[2]), thread_sensitive_execute)
        assert not result.passed
        assert "--threads 2" in result.message

    def test_config_path_appended(self):
        seen = []

        def recording_execute(argv):
            seen.append(list(argv))
            return {"result": {}}, 0

        run_case(CorpusCase("c", ["invariants"]), recording_execute, config_path="configs/strict.yaml")
        assert seen[0][-2:] == ["--config", "configs/strict.yaml"]

    def test_run_corpus_writes_tables(self, corpus_dir, tmp_path):
        summary = run_corpus(corpus_dir, fake_execute, output_dir=tmp_path / "results")
        assert summary.all_passed
        assert summary.to_dict()["passed"] == 2
        assert (tmp_path / "results" / "results.csv").exists()
        assert (tmp_path / "results" / "results.json").exists()

    def test_crashing_case_is_recorded(self, corpus_dir):
        (corpus_dir / "z.yaml").write_text("cases:\n  - id: crash\n    argv: [explode]\n")
        summary = run_corpus(corpus_dir, fake_execute, output_dir=None)
        assert summary.to_dict()["failed"] == ["crash"]
        assert summary.results[-1].exit_code == 1

    def test_only_unknown(self, corpus_dir):
        with pytest.raises(CorpusMissing):
            run_corpus(corpus_dir, fake_execute, output_dir=None, only=["nope"])
