"""Tests for the qcw command-line dispatcher."""

import json

import pytest

from scripts.qcw import COMMANDS, build_parser, cmd_process_hierarchy, execute, main
from src.data_handler import canonical_json
from src.exceptions import EXIT_INVALID_INPUT, EXIT_NEGATIVE, EXIT_OK


@pytest.fixture
def path(data_dir):
    def resolve(*parts):
        return str(data_dir.joinpath(*parts))

    return resolve


class TestParser:
    """Test the subcommand grammar."""

    def test_group_and_action(self):
        args = build_parser().parse_args(["causal", "bound", "--game", "gyni"])
        assert (args.group, args.action) == ("causal", "bound")
        assert args.threads is None

    def test_invariants_has_no_action(self):
        args = build_parser().parse_args(["invariants", "--scenario", "gamma5", "--uniform-q"])
        assert args.group == "invariants"
        assert args.uniform_q

    def test_hierarchy_action(self):
        args = build_parser().parse_args(["process", "hierarchy", "--threads", "2"])
        assert (args.group, args.action) == ("process", "hierarchy")
        assert COMMANDS[("process", "hierarchy")] is cmd_process_hierarchy


class TestReports:
    """Test report shape and exit codes."""

    def test_success_report(self):
        report, code = execute(["causal", "bound", "--game", "gyni", "--scenario", "2,2,2"])
        assert code == EXIT_OK
        assert set(report) == {"command", "exit_code", "result", "manifest"}
        assert report["command"] == "causal bound"
        assert report["result"]["value"] == {"exact": "1/2", "value": 0.5}

    def test_negative_answer(self, path):
        report, code = execute(["scenario", "colorings", "--scenario", path("scenarios", "gamma18.json")])
        assert code == EXIT_NEGATIVE
        assert report["result"]["count"] == 0
        assert path("scenarios", "gamma18.json") in report["manifest"]["input_digests"]

    def test_unknown_command(self):
        report, code = execute(["bogus"])
        assert code == EXIT_INVALID_INPUT
        assert report["error"]["type"] == "UnknownCommand"
        assert set(report["error"]) == {"type", "message", "path", "details"}

    def test_missing_file(self, tmp_path):
        report, code = execute(["process", "check", "--process", str(tmp_path / "absent.json")])
        assert code == EXIT_INVALID_INPUT
        assert report["error"]["type"] == "FileNotFoundError"

    def test_unknown_builtin(self):
        report, code = execute(["invariants", "--scenario", "gamma19"])
        assert code == EXIT_INVALID_INPUT
        assert report["error"]["type"] == "UnknownName"

    def test_computation_error_carries_details(self):
        report, code = execute(["lopf", "shift", "--state-label", "+++"])
        assert code == EXIT_NEGATIVE
        assert report["error"]["type"] == "NonBasisInput"
        assert report["error"]["details"]["distribution"]

    def test_inconsistent_process(self):
        report, code = execute(["process", "check", "--process", "identity-loop"])
        assert code == EXIT_NEGATIVE
        assert report["result"]["consistent"] is False

    def test_result_digest_is_stable(self):
        first, _ = execute(["lopf", "shift", "--state-label", "+01"])
        second, _ = execute(["lopf", "shift", "--state-label", "+01"])
        assert first["result"]["inputs"] == "100"
        assert first["manifest"]["result_digest"] == second["manifest"]["result_digest"]

    def test_threads_do_not_change_result(self):
        one, _ = execute(["causal", "vertices", "--scenario", "2,2,2", "--threads", "1"])
        two, _ = execute(["causal", "vertices", "--scenario", "2,2,2", "--threads", "2"])
        assert one["result"]["count"] == 112
        assert one["manifest"]["result_digest"] == two["manifest"]["result_digest"]

    def test_set_overrides_configuration(self):
        report, code = execute(["causal", "bound", "--game", "gyni", "--set", "tolerances.hull=1e-7"])
        assert code == EXIT_OK
        assert report["manifest"]["tolerances"]["hull"] == 1e-7
        assert report["manifest"]["tolerances"]["lp"] == 1e-9

    def test_set_layers_over_config_file(self, repo_root):
        config = str(repo_root / "configs" / "strict.yaml")
        report, _ = execute(["causal", "bound", "--game", "gyni", "--config", config, "--set", "tolerances.lp=1e-11"])
        assert report["manifest"]["tolerances"]["lp"] == 1e-11

    @pytest.mark.parametrize("item", ["tolerances", "tolerances.lp", "=3", "tolerances.lp=[1,"])
    def test_malformed_set(self, item):
        report, code = execute(["causal", "bound", "--game", "gyni", "--set", item])
        assert code == EXIT_INVALID_INPUT
        assert report["error"]["path"] == "/set/0"

    def test_output_file(self, tmp_path):
        target = tmp_path / "report.json"
        report, _ = execute(["quantum", "pm-audit", "--output", str(target)])
        written = json.loads(target.read_text())
        assert written["command"] == "quantum pm-audit"
        assert written["manifest"]["result_digest"] == report["manifest"]["result_digest"]


class TestMain:
    """Test the entry point."""

    def test_prints_one_report(self, capsys, path):
        code = main(["witness", "logical", "--scenario", "gamma5", "--data", path("witness", "gamma5_uniform.json")])
        assert code == EXIT_NEGATIVE
        report = json.loads(capsys.readouterr().out)
        assert report["exit_code"] == code
        assert report["result"]["violated"] is False

    def test_exit_code_on_bad_input(self, capsys):
        assert main(["causal", "vertices", "--scenario", "2,x,2"]) == EXIT_INVALID_INPUT
        assert json.loads(capsys.readouterr().out)["error"]["path"] == "/scenario"


class TestCanonicalOutput:
    """Test that emitted reports survive a parse and re-emit unchanged."""

    @pytest.mark.parametrize(
        "argv",
        [
            ["invariants", "--scenario", "gamma5", "--uniform-q"],
            ["lopf", "shift"],
            ["jm", "pentagon"],
            ["causal", "bound", "--game", "afbw"],
            ["process", "check", "--process", "bfw"],
            ["witness", "oneshot", "--task", "binary_identity.json"],
            ["bogus"],
        ],
        ids=["invariants", "lopf-shift", "jm-pentagon", "causal-bound", "process-check", "witness-oneshot", "error"],
    )
    def test_emit_parse_emit_is_identical(self, argv, data_dir):
        if argv[0] == "witness":
            argv = argv[:-1] + [str(data_dir / "tasks" / argv[-1])]
        report, _ = execute(argv)
        emitted = canonical_json(report)
        assert canonical_json(json.loads(emitted)) == emitted
