"""Configuration loader for certificate computations.

This module provides dataclasses for solver tolerances, search bounds,
parallelism and output options, and a loader that reads them from YAML
files. Every section is optional; missing keys fall back to the defaults
below, which are the tolerances quoted in reports.
"""

from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Any, Dict, Optional, Union
import logging
import os

import yaml

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "QCW_THREADS"


@dataclass
class ToleranceConfig:
    """Numerical tolerances surfaced in every report."""

    lp: float = 1e-9  # Simplex pivoting and feasibility
    hull: float = 1e-8  # Convex weights and separation margin
    sdp: float = 1e-5  # Objective accuracy of the SDP solver
    sdp_residual: float = 1e-8  # Primal residual for SDP convergence
    orthogonality: float = 1e-10  # Ray orthogonality inside a hyperedge
    normalization: float = 1e-12  # Column sums of correlation tables
    model: float = 1e-9  # Hyperedge normalization of probabilistic models
    jm_feasible: float = 1e-10  # Alternating-projection gap declared feasible
    jm_infeasible: float = 1e-6  # Plateau gap declared infeasible
    witness: float = 1e-12  # Witness violation threshold


@dataclass
class SdpConfig:
    """Augmented-Lagrangian SDP solver parameters."""

    max_iterations: int = 50000
    penalty: float = 1.0  # Initial mu
    relaxation: float = 1.6  # Over-relaxation of the multiplier step
    check_every: int = 50  # Residual checks and penalty updates


@dataclass
class JointMeasurabilityConfig:
    """Alternating-projection parameters for joint measurability."""

    max_iterations: int = 10000
    plateau_window: int = 1000
    plateau_ratio: float = 1e-4  # Relative gap decrease over a window below which it plateaus
    bisection_precision: float = 1e-4


@dataclass
class EnumerationConfig:
    """Size bounds of the exhaustive searches."""

    max_ks_vertices: int = 30
    max_polytope_vertices: int = 24
    max_alpha_vertices: int = 40
    max_alpha_oracle_vertices: int = 25
    max_theta_vertices: int = 32
    max_clique_vertices: int = 30
    max_jms_vertices: int = 20
    max_causal_cells: int = 10_000
    max_causal_recursion: int = 10_000_000
    max_reply_inputs: int = 2 ** 20
    max_basis_candidates: int = 5_000_000
    chunk_size: int = 20000
    column_batch: int = 32  # Causal vertices added per column-generation round


@dataclass
class ParallelConfig:
    """Worker pool settings; results never depend on the worker count."""

    threads: int = 1
    chunk_size: int = 64


@dataclass
class AuditConfig:
    """Randomized nomic-bound audit settings."""

    samples: int = 10000
    seed: int = 12345
    checkpoint_file: Optional[str] = None
    checkpoint_every: int = 256


@dataclass
class OutputConfig:
    """Report output settings."""

    output_dir: str = "outputs"
    indent: int = 2
    write_manifest: bool = True


@dataclass
class QcwConfig:
    """Complete configuration bundle."""

    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    sdp: SdpConfig = field(default_factory=SdpConfig)
    joint_measurability: JointMeasurabilityConfig = field(
        default_factory=JointMeasurabilityConfig
    )
    enumeration: EnumerationConfig = field(default_factory=EnumerationConfig)
    parallel: ParallelConfig = field(default_factory=ParallelConfig)
    audit: AuditConfig = field(default_factory=AuditConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> Dict[str, Any]:
        """Return the configuration as nested plain dictionaries."""
        return asdict(self)


def _build(cls, data: Dict[str, Any]):
    """Instantiate a config dataclass from a dict, ignoring unknown keys."""
    defaults = cls()
    known = {name for name in defaults.__dataclass_fields__}
    unknown = set(data) - known
    if unknown:
        logger.warning(f"Ignoring unknown {cls.__name__} keys: {sorted(unknown)}")
    values = {name: data.get(name, getattr(defaults, name)) for name in known}
    return cls(**values)


class ConfigLoader:
    """Load configuration from YAML files."""

    SECTIONS = {
        "tolerances": ToleranceConfig,
        "sdp": SdpConfig,
        "joint_measurability": JointMeasurabilityConfig,
        "enumeration": EnumerationConfig,
        "parallel": ParallelConfig,
        "audit": AuditConfig,
        "output": OutputConfig,
    }

    def __init__(self, config_path: Optional[Union[str, Path]] = None):
        """Initialize ConfigLoader.

        Args:
            config_path: Path to main configuration file (YAML).
        """
        self.config_path = Path(config_path) if config_path else None
        self.config_data: Dict[str, Any] = {}

    def load_yaml(self, file_path: Union[str, Path]) -> Dict[str, Any]:
        """Load YAML file.

        Args:
            file_path: Path to YAML file.

        Returns:
            Dictionary with configuration data.

        Raises:
            FileNotFoundError: If file does not exist.
            yaml.YAMLError: If YAML parsing fails.
        """
        path = Path(file_path)
        if not path.exists():
            raise FileNotFoundError(f"Configuration file not found: {path}")

        logger.info(f"Loading configuration from {path}")

        with open(path, "r") as f:
            data = yaml.safe_load(f)

        return data or {}

    def merge_configs(self, *config_dicts: Optional[Dict[str, Any]]) -> Dict[str, Any]:
        """Layer configuration dictionaries, later ones winning key by key.

        Inputs are never modified; None layers are skipped.

        Args:
            *config_dicts: Layers from lowest to highest precedence.

        Returns:
            New merged dictionary.
        """
        merged: Dict[str, Any] = {}
        for config in config_dicts:
            if config:
                self._deep_merge(merged, config)
        return merged

    def _deep_merge(self, base: Dict[str, Any], update: Dict[str, Any]) -> None:
        """Merge update into base in place, copying nested sections.

        An empty section (``sdp:`` with no keys parses as None) leaves the
        lower layer untouched.
        """
        for key, value in update.items():
            if isinstance(base.get(key), dict) and value is None:
                continue
            if isinstance(base.get(key), dict) and isinstance(value, dict):
                self._deep_merge(base[key], value)
            elif isinstance(value, dict):
                base[key] = {}
                self._deep_merge(base[key], value)
            else:
                base[key] = value

    def load_from_yaml(self, config_path: Union[str, Path]) -> None:
        """Load configuration from YAML file.

        Args:
            config_path: Path to configuration YAML file.
        """
        self.config_path = Path(config_path)
        self.config_data = self.load_yaml(config_path)

    def _section(self, name: str) -> Dict[str, Any]:
        if name not in self.config_data:
            raise KeyError(f"'{name}' section not found in configuration")
        return self.config_data[name] or {}

    def get_tolerance_config(self) -> ToleranceConfig:
        """Parse and return ToleranceConfig from loaded data.

        Raises:
            KeyError: If the section is missing.
        """
        return _build(ToleranceConfig, self._section("tolerances"))

    def get_sdp_config(self) -> SdpConfig:
        """Parse and return SdpConfig from loaded data."""
        return _build(SdpConfig, self._section("sdp"))

    def get_joint_measurability_config(self) -> JointMeasurabilityConfig:
        """Parse and return JointMeasurabilityConfig from loaded data."""
        return _build(JointMeasurabilityConfig, self._section("joint_measurability"))

    def get_enumeration_config(self) -> EnumerationConfig:
        """Parse and return EnumerationConfig from loaded data."""
        return _build(EnumerationConfig, self._section("enumeration"))

    def get_parallel_config(self) -> ParallelConfig:
        """Parse and return ParallelConfig, applying the QCW_THREADS override.

        The environment variable wins over the file; the ``--threads`` flag
        is applied later by the CLI and wins over both.
        """
        data = self.config_data.get("parallel") or {}
        parallel = _build(ParallelConfig, data)
        env_threads = os.environ.get(THREADS_ENV_VAR)
        if env_threads:
            try:
                parallel.threads = int(env_threads)
                logger.debug(f"{THREADS_ENV_VAR}={env_threads} overrides parallel.threads")
            except ValueError:
                logger.warning(f"Ignoring non-integer {THREADS_ENV_VAR}={env_threads!r}")
        return parallel

    def get_audit_config(self) -> AuditConfig:
        """Parse and return AuditConfig from loaded data."""
        return _build(AuditConfig, self._section("audit"))

    def get_output_config(self) -> OutputConfig:
        """Parse and return OutputConfig from loaded data."""
        return _build(OutputConfig, self._section("output"))

    def load_complete_config(
        self,
        config_path: Optional[Union[str, Path]] = None,
        overrides: Optional[Dict[str, Any]] = None,
    ) -> QcwConfig:
        """Load every section, layering built-in defaults, the file and overrides.

        Args:
            config_path: Optional YAML path; None uses built-in defaults.
            overrides: Nested ``{section: {key: value}}`` applied last, as
                produced by the CLI ``--set section.key=value`` flags.

        Returns:
            QcwConfig bundle.

        Example:
            >>> config = ConfigLoader().load_complete_config("configs/default.yaml")
            >>> config.tolerances.lp
            1e-09
        """
        path = config_path or self.config_path
        file_data: Dict[str, Any] = {}
        if path is not None:
            self.load_from_yaml(path)
            file_data = self.config_data
        self.config_data = self.merge_configs(QcwConfig().to_dict(), file_data, overrides)
        for name, value in self.config_data.items():
            if name not in self.SECTIONS:
                logger.warning(f"Ignoring unknown configuration section '{name}'")
            elif not isinstance(value, dict):
                raise ValueError(f"'{name}' section must be a mapping, got {type(value).__name__}")

        getters = {
            "tolerances": self.get_tolerance_config,
            "sdp": self.get_sdp_config,
            "joint_measurability": self.get_joint_measurability_config,
            "enumeration": self.get_enumeration_config,
            "parallel": self.get_parallel_config,
            "audit": self.get_audit_config,
            "output": self.get_output_config,
        }
        config = QcwConfig(**{name: getters[name]() for name in self.SECTIONS})
        logger.debug(f"Loaded configuration: {config.to_dict()}")
        return config


def default_config() -> QcwConfig:
    """Return the built-in configuration (environment overrides applied)."""
    return ConfigLoader().load_complete_config()
