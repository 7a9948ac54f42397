"""Validation utilities for input documents and configuration.

This module provides the error types for malformed input (each carrying a
JSON-pointer path to the offending value), small schema helpers used by the
document parsers of the kernel modules, and validators that check
configuration plausibility.
"""

from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence
import logging
import os

from src.config_loader import QcwConfig

logger = logging.getLogger(__name__)


class ValidationWarning:
    """Represents a validation warning."""

    def __init__(self, category: str, message: str):
        """Initialize validation warning.

        Args:
            category: Category of warning (e.g., "tolerance", "closure").
            message: Descriptive warning message.
        """
        self.category = category
        self.message = message

    def __str__(self) -> str:
        """Return string representation."""
        return f"[{self.category}] {self.message}"


class ValidationError(Exception):
    """Raised when input validation fails.

    Args:
        message: Descriptive message.
        path: JSON pointer to the offending value ("" for the document root).
        details: Extra machine-readable context.
    """

    exit_code = 2

    def __init__(self, message: str, path: str = "", details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.path = path
        self.details: Dict[str, Any] = details or {}

    def __str__(self) -> str:
        if self.path:
            return f"{self.message} (at {self.path})"
        return self.message


class SchemaViolation(ValidationError):
    """Document does not match its schema."""


class EmptyHyperedge(ValidationError):
    """A hyperedge lists no vertices."""


class UnknownVertex(ValidationError):
    """A hyperedge or compatible set names a vertex that is not declared."""


class OrphanVertex(ValidationError):
    """A declared vertex appears in no hyperedge."""


class DimensionMismatch(ValidationError):
    """Vectors or operators of inconsistent dimensions."""


class ShapeMismatch(ValidationError):
    """Tables whose shapes do not fit the declared scenario."""


class InvalidState(ValidationError):
    """Density operator that is not PSD with unit trace."""


class IncompleteRealization(ValidationError):
    """A realization does not assign a ray to every vertex."""


class InvalidMeasurement(ValidationError):
    """Effects that are not PSD or do not sum to the identity."""


class NonProjectiveEncoding(ValidationError):
    """An encoding measurement has non-projective elements."""


class OutOfRange(ValidationError):
    """A scalar parameter lies outside its allowed interval."""


class InvalidNoise(OutOfRange):
    """Depolarizing parameter outside [0, 1]."""


class MissingEdgeData(ValidationError):
    """Prepare-measure data lacks a table for some hyperedge."""


class MissingSpecialSource(ValidationError):
    """Statistical witness requested without special-source data."""


class ZeroP0(ValidationError):
    """Special-source marginal p_0 is zero."""


class InconsistentMarginals(ValidationError):
    """Pairwise tables disagree with single-measurement marginals."""


class UnknownName(ValidationError):
    """Built-in construction, game or process name not recognised."""


class UnknownCommand(ValidationError):
    """Command-line subcommand not recognised."""


# ============================================================================
# SCHEMA HELPERS
# ============================================================================


def pointer(*parts: Any) -> str:
    """Build a JSON pointer from path components.

    Example:
        >>> pointer("hyperedges", 3, 1)
        '/hyperedges/3/1'
    """
    escaped = [str(p).replace("~", "~0").replace("/", "~1") for p in parts]
    return "".join(f"/{p}" for p in escaped)


def require_object(raw: Any, path: str = "") -> Dict[str, Any]:
    """Return raw if it is a JSON object, else raise SchemaViolation."""
    if not isinstance(raw, dict):
        raise SchemaViolation(f"expected an object, got {type(raw).__name__}", path)
    return raw


def require_key(raw: Dict[str, Any], key: str, path: str = "") -> Any:
    """Return raw[key] or raise SchemaViolation pointing at the missing key."""
    if key not in raw:
        raise SchemaViolation(f"missing required key '{key}'", f"{path}/{key}")
    return raw[key]


def require_list(raw: Any, path: str = "", min_length: int = 0) -> List[Any]:
    """Return raw if it is a JSON array of at least min_length items."""
    if not isinstance(raw, list):
        raise SchemaViolation(f"expected an array, got {type(raw).__name__}", path)
    if len(raw) < min_length:
        raise SchemaViolation(f"expected at least {min_length} items", path)
    return raw


def require_int(raw: Any, path: str = "", minimum: Optional[int] = None) -> int:
    """Return raw as int, rejecting bools and non-integers."""
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise SchemaViolation(f"expected an integer, got {raw!r}", path)
    if minimum is not None and raw < minimum:
        raise SchemaViolation(f"expected an integer >= {minimum}, got {raw}", path)
    return raw


def require_number(raw: Any, path: str = "") -> Fraction:
    """Parse a JSON number or "p/q" string into an exact Fraction."""
    if isinstance(raw, bool):
        raise SchemaViolation(f"expected a number, got {raw!r}", path)
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, float):
        return Fraction(raw)
    if isinstance(raw, str):
        try:
            return Fraction(raw.strip())
        except (ValueError, ZeroDivisionError):
            raise SchemaViolation(f"cannot parse number {raw!r}", path)
    raise SchemaViolation(f"expected a number, got {type(raw).__name__}", path)


def require_complex(raw: Any, path: str = "") -> complex:
    """Parse a [re, im] pair (or a bare real) into a complex number."""
    if isinstance(raw, list):
        if len(raw) != 2:
            raise SchemaViolation("expected a [re, im] pair", path)
        return complex(float(require_number(raw[0], f"{path}/0")), float(require_number(raw[1], f"{path}/1")))
    return complex(float(require_number(raw, path)))


def require_vertex_ids(raw: Any, path: str = "") -> List[str]:
    """Return a list of string vertex ids without duplicates."""
    items = require_list(raw, path)
    seen = set()
    for index, item in enumerate(items):
        if not isinstance(item, str) or not item:
            raise SchemaViolation(f"vertex ids must be non-empty strings, got {item!r}", f"{path}/{index}")
        if item in seen:
            raise SchemaViolation(f"duplicate vertex id '{item}'", f"{path}/{index}")
        seen.add(item)
    return items


def check_distribution(values: Sequence[Any], path: str, tolerance: float = 1e-12) -> None:
    """Raise SchemaViolation unless values are nonnegative and sum to 1."""
    total = 0.0
    for index, value in enumerate(values):
        if value < -tolerance:
            raise SchemaViolation(f"negative probability {float(value)}", f"{path}/{index}")
        total += float(value)
    if abs(total - 1.0) > max(tolerance, 1e-12):
        raise SchemaViolation(f"probabilities sum to {total}, expected 1", path)


# ============================================================================
# CONFIGURATION VALIDATORS
# ============================================================================


class ConfigValidator:
    """Validator for the solver configuration."""

    @staticmethod
    def validate(config: QcwConfig) -> List[ValidationWarning]:
        """Validate configuration.

        Args:
            config: QcwConfig to validate.

        Returns:
            List of ValidationWarning objects.

        Raises:
            ValidationError: If a tolerance or iteration budget is not positive.
        """
        warnings = []

        for name, value in vars(config.tolerances).items():
            if value <= 0:
                raise ValidationError(f"Tolerance '{name}' must be positive", pointer("tolerances", name))

        if config.tolerances.lp > 1e-4:
            warnings.append(
                ValidationWarning(
                    "tolerance",
                    f"LP tolerance ({config.tolerances.lp:g}) is loose; exact values may be misreported.",
                )
            )

        if config.tolerances.jm_feasible >= config.tolerances.jm_infeasible:
            raise ValidationError(
                "jm_feasible tolerance must be below jm_infeasible",
                pointer("tolerances", "jm_feasible"),
            )

        if config.sdp.max_iterations <= 0 or config.joint_measurability.max_iterations <= 0:
            raise ValidationError("Iteration budgets must be positive")

        if not 0.0 < config.sdp.relaxation < 1.618:
            raise ValidationError(
                f"SDP relaxation ({config.sdp.relaxation}) must lie in (0, 1.618)",
                pointer("sdp", "relaxation"),
            )

        if config.parallel.threads < 1:
            raise ValidationError("Thread count must be at least 1", pointer("parallel", "threads"))

        cpu_count = os.cpu_count() or 1
        if config.parallel.threads > cpu_count:
            warnings.append(
                ValidationWarning(
                    "parallel",
                    f"{config.parallel.threads} threads requested but only {cpu_count} CPUs available.",
                )
            )

        if config.enumeration.column_batch < 1:
            raise ValidationError("Column batch must be at least 1", pointer("enumeration", "column_batch"))

        if config.audit.samples < 1:
            raise ValidationError("Audit sample count must be positive", pointer("audit", "samples"))

        return warnings


def validate_all_configs(config: QcwConfig) -> List[ValidationWarning]:
    """Validate the configuration bundle and log the warnings.

    Args:
        config: Loaded configuration.

    Returns:
        List of all warnings.

    Raises:
        ValidationError: If any critical validation fails.
    """
    all_warnings = ConfigValidator.validate(config)

    if all_warnings:
        logger.warning(f"Configuration validation produced {len(all_warnings)} warnings:")
        for warning in all_warnings:
            logger.warning(f"  {warning}")
    else:
        logger.info("Configuration validation passed with no warnings")

    return all_warnings
