"""Data handler for exporting witness reports and corpus results.

This module provides utilities for writing JSON reports with run manifests,
exporting result tables to CSV, digesting inputs and persisting search
checkpoints.
"""

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union
import hashlib
import json
import logging
import os
import sys

import pandas as pd

from src.utils import ensure_directory_exists

logger = logging.getLogger(__name__)

TOOL_VERSION = "0.1.0"


def canonical_json(data: Any, indent: Optional[int] = 2) -> str:
    """Serialize with sorted keys so equal reports give equal bytes."""
    return json.dumps(data, indent=indent, sort_keys=True, ensure_ascii=False, allow_nan=False)


def sha256_digest(data: Union[bytes, str, Any]) -> str:
    """Hex SHA-256 of bytes, a string, or the compact canonical JSON of an object."""
    if isinstance(data, bytes):
        payload = data
    elif isinstance(data, str):
        payload = data.encode("utf-8")
    else:
        payload = canonical_json(data, indent=None).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def file_digest(path: Union[str, Path]) -> str:
    """Hex SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


@dataclass
class RunManifest:
    """Provenance attached to every report.

    The result digest covers the result object only, so it is stable across
    repeated runs and worker counts even though the wall time is not.
    """

    command: List[str]
    input_digests: Dict[str, str] = field(default_factory=dict)
    version: str = TOOL_VERSION
    tolerances: Dict[str, float] = field(default_factory=dict)
    wall_time_s: float = 0.0
    result_digest: str = ""

    @classmethod
    def build(
        cls,
        command: Sequence[str],
        inputs: Sequence[Union[str, Path]],
        tolerances: Dict[str, float],
        wall_time_s: float,
        result: Any,
    ) -> "RunManifest":
        digests = {}
        for path in inputs:
            if Path(path).is_file():
                digests[str(path)] = file_digest(path)
        return cls(
            command=list(command),
            input_digests=digests,
            tolerances=dict(tolerances),
            wall_time_s=round(float(wall_time_s), 6),
            result_digest=sha256_digest(result),
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class DataHandler:
    """Handler for exporting reports and result tables.

    Example:
        >>> handler = DataHandler("outputs/corpus")
        >>> handler.export_report_json(report, filename="results.json")
        >>> handler.export_results_csv(rows, filename="results.csv")
    """

    def __init__(self, output_dir: str = "outputs", indent: int = 2):
        """Initialize DataHandler.

        Args:
            output_dir: Default output directory for exports.
            indent: JSON indentation level.
        """
        self.output_dir = Path(output_dir)
        self.indent = indent
        logger.debug(f"DataHandler initialized with output_dir: {self.output_dir}")

    def _resolve(self, output_path: Optional[Union[str, Path]], filename: str) -> Path:
        if output_path is None:
            ensure_directory_exists(self.output_dir)
            return self.output_dir / filename
        path = Path(output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def export_report_json(
        self,
        report: Dict[str, Any],
        output_path: Optional[Union[str, Path]] = None,
        filename: str = "report.json",
    ) -> Path:
        """Write a report as canonical JSON.

        Args:
            report: JSON-serializable report.
            output_path: Optional custom output path. If None, uses output_dir.
            filename: Filename used with output_dir.

        Returns:
            Path to created JSON file.
        """
        path = self._resolve(output_path, filename)
        with open(path, "w", encoding="utf-8") as f:
            f.write(canonical_json(report, self.indent))
            f.write("\n")
        logger.info(f"Exported report → {path}")
        return path

    def export_results_csv(
        self,
        rows: List[Dict[str, Any]],
        output_path: Optional[Union[str, Path]] = None,
        filename: str = "results.csv",
    ) -> Path:
        """Write a list of flat records as a CSV table.

        Returns:
            Path to created CSV file.
        """
        path = self._resolve(output_path, filename)
        pd.DataFrame.from_records(rows).to_csv(path, index=False)
        logger.info(f"Exported {len(rows)} rows to {path}")
        return path

    def load_results_csv(self, csv_path: Union[str, Path]) -> pd.DataFrame:
        """Load a CSV table written by export_results_csv.

        Raises:
            FileNotFoundError: If the file does not exist.
        """
        csv_path = Path(csv_path)
        if not csv_path.exists():
            raise FileNotFoundError(f"CSV file not found: {csv_path}")
        return pd.read_csv(csv_path)

    @staticmethod
    def load_json(json_path: Union[str, Path]) -> Any:
        """Load a JSON document.

        Raises:
            FileNotFoundError: If the file does not exist.
        """
        json_path = Path(json_path)
        if not json_path.exists():
            raise FileNotFoundError(f"JSON file not found: {json_path}")
        with open(json_path, "r", encoding="utf-8") as f:
            return json.load(f)

    @staticmethod
    def write_report(report: Dict[str, Any], stream=None, indent: int = 2) -> None:
        """Print one report object to standard output."""
        stream = stream or sys.stdout
        stream.write(canonical_json(report, indent))
        stream.write("\n")
        stream.flush()

    @staticmethod
    def format_summary_text(title: str, summary: Dict[str, Any]) -> str:
        """Format the scalar entries of a result as readable text."""
        lines = ["=" * 60, title.upper(), "=" * 60]
        for key, value in summary.items():
            if isinstance(value, dict) and "exact" in value:
                value = value["exact"]
            if isinstance(value, (dict, list)):
                continue
            lines.append(f"  {key:30s}: {value}")
        lines.append("=" * 60)
        return "\n".join(lines)


def save_checkpoint(path: Union[str, Path], state: Dict[str, Any]) -> None:
    """Atomically replace a JSON checkpoint file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(canonical_json(state, indent=None))
    os.replace(tmp, path)
    logger.debug(f"Checkpoint written to {path}")


def load_checkpoint(path: Union[str, Path]) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
