"""Tests for report export, digests and checkpoints."""

import io
import json

import pandas as pd
import pytest

from src.data_handler import (
    TOOL_VERSION,
    DataHandler,
    RunManifest,
    canonical_json,
    file_digest,
    load_checkpoint,
    save_checkpoint,
    sha256_digest,
)


@pytest.fixture
def handler(tmp_path):
    return DataHandler(str(tmp_path / "out"))


class TestDigests:
    """Test canonical serialization and hashing."""

    def test_canonical_json_sorts_keys(self):
        assert canonical_json({"b": 1, "a": 2}, indent=None) == '{"a": 2, "b": 1}'

    def test_canonical_json_rejects_nan(self):
        with pytest.raises(ValueError):
            canonical_json({"x": float("nan")})

    def test_digest_independent_of_key_order(self):
        assert sha256_digest({"a": 1, "b": [1, 2]}) == sha256_digest({"b": [1, 2], "a": 1})
        assert sha256_digest({"a": 1}) != sha256_digest({"a": 2})

    def test_digest_of_bytes_and_str(self):
        assert sha256_digest("abc") == sha256_digest(b"abc")
        assert sha256_digest(b"abc").startswith("ba7816bf")

    def test_file_digest(self, tmp_path):
        path = tmp_path / "input.json"
        path.write_bytes(b"abc")
        assert file_digest(path) == sha256_digest(b"abc")


class TestRunManifest:
    """Test provenance records."""

    def test_build(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text("{}")
        manifest = RunManifest.build(
            ["invariants", "--scenario", str(path)],
            [str(path), str(tmp_path / "missing.json")],
            {"exact_rational": 1e-12},
            0.1234567,
            {"alpha": 2},
        )
        data = manifest.to_dict()
        assert list(data["input_digests"]) == [str(path)]
        assert data["version"] == TOOL_VERSION
        assert data["wall_time_s"] == 0.123457
        assert data["result_digest"] == sha256_digest({"alpha": 2})


class TestDataHandler:
    """Test JSON and CSV export."""

    def test_export_report_json(self, handler):
        path = handler.export_report_json({"b": 1, "a": [1, 2]})
        assert path.name == "report.json"
        assert json.loads(path.read_text()) == {"a": [1, 2], "b": 1}
        assert DataHandler.load_json(path) == {"a": [1, 2], "b": 1}

    def test_export_to_custom_path(self, handler, tmp_path):
        target = tmp_path / "nested" / "dir" / "r.json"
        assert handler.export_report_json({"x": 1}, output_path=target) == target
        assert target.exists()

    def test_csv_round_trip(self, handler):
        rows = [{"id": "a", "passed": True, "wall_time_s": 0.5}, {"id": "b", "passed": False, "wall_time_s": 1.0}]
        path = handler.export_results_csv(rows)
        frame = handler.load_results_csv(path)
        assert isinstance(frame, pd.DataFrame)
        assert list(frame["id"]) == ["a", "b"]
        assert list(frame.columns) == ["id", "passed", "wall_time_s"]

    def test_missing_files(self, handler, tmp_path):
        with pytest.raises(FileNotFoundError):
            handler.load_results_csv(tmp_path / "nope.csv")
        with pytest.raises(FileNotFoundError):
            DataHandler.load_json(tmp_path / "nope.json")

    def test_write_report(self):
        stream = io.StringIO()
        DataHandler.write_report({"command": "x", "exit_code": 0}, stream)
        assert json.loads(stream.getvalue()) == {"command": "x", "exit_code": 0}
        assert stream.getvalue().endswith("\n")

    def test_summary_text(self):
        text = DataHandler.format_summary_text(
            "invariants", {"alpha": 2, "beta": {"exact": "1/2", "value": 0.5}, "model": [1, 2]}
        )
        assert "INVARIANTS" in text
        assert "1/2" in text
        assert "model" not in text


class TestCheckpoint:
    """Test atomic checkpoint files."""

    def test_save_and_load(self, tmp_path):
        path = tmp_path / "search" / "checkpoint.json"
        save_checkpoint(path, {"next_chunk": 3, "best": "1/2"})
        assert load_checkpoint(path) == {"next_chunk": 3, "best": "1/2"}
        assert not path.with_suffix(".json.tmp").exists()

    def test_overwrite(self, tmp_path):
        path = tmp_path / "checkpoint.json"
        save_checkpoint(path, {"next_chunk": 1})
        save_checkpoint(path, {"next_chunk": 2})
        assert load_checkpoint(path)["next_chunk"] == 2
