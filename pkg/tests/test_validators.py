"""Tests for input and configuration validation functionality."""

from fractions import Fraction

import pytest

from src.config_loader import QcwConfig
from src.validators import (
    ConfigValidator,
    SchemaViolation,
    ValidationError,
    ValidationWarning,
    check_distribution,
    pointer,
    require_complex,
    require_int,
    require_key,
    require_list,
    require_number,
    require_object,
    require_vertex_ids,
    validate_all_configs,
)


class TestValidationWarning:
    """Test ValidationWarning class."""

    def test_creation(self):
        """Test ValidationWarning creation."""
        warning = ValidationWarning("tolerance", "Test warning message")
        assert warning.category == "tolerance"
        assert warning.message == "Test warning message"

    def test_string_representation(self):
        """Test string representation."""
        warning = ValidationWarning("parallel", "Too many threads")
        assert str(warning) == "[parallel] Too many threads"


class TestValidationError:
    """Test the error payload carried into JSON reports."""

    def test_path_in_message(self):
        error = SchemaViolation("bad value", "/hyperedges/2")
        assert error.path == "/hyperedges/2"
        assert str(error) == "bad value (at /hyperedges/2)"
        assert error.details == {}

    def test_exit_code(self):
        assert ValidationError("x").exit_code == 2


class TestSchemaHelpers:
    """Test the JSON schema helpers."""

    def test_pointer_escapes(self):
        assert pointer("hyperedges", 3, 1) == "/hyperedges/3/1"
        assert pointer("a/b", "c~d") == "/a~1b/c~0d"

    def test_require_object(self):
        assert require_object({"a": 1}) == {"a": 1}
        with pytest.raises(SchemaViolation, match="expected an object"):
            require_object([1, 2], "/x")

    def test_require_key(self):
        with pytest.raises(SchemaViolation) as excinfo:
            require_key({}, "vertices", "/doc")
        assert excinfo.value.path == "/doc/vertices"

    def test_require_list_min_length(self):
        assert require_list([1], min_length=1) == [1]
        with pytest.raises(SchemaViolation, match="at least 2"):
            require_list([1], "/l", min_length=2)

    def test_require_int_rejects_bool(self):
        assert require_int(3, minimum=0) == 3
        with pytest.raises(SchemaViolation):
            require_int(True)
        with pytest.raises(SchemaViolation, match=">= 1"):
            require_int(0, minimum=1)

    @pytest.mark.parametrize(
        "raw, expected",
        [
            (2, Fraction(2)),
            ("5/6", Fraction(5, 6)),
            (" 1/4 ", Fraction(1, 4)),
            (0.5, Fraction(1, 2)),
        ],
    )
    def test_require_number(self, raw, expected):
        assert require_number(raw) == expected

    @pytest.mark.parametrize("raw", ["abc", "1/0", None, False])
    def test_require_number_rejects(self, raw):
        with pytest.raises(SchemaViolation):
            require_number(raw, "/n")

    def test_require_complex(self):
        assert require_complex([1, -2]) == complex(1, -2)
        assert require_complex("1/2") == complex(0.5, 0)
        with pytest.raises(SchemaViolation, match="pair"):
            require_complex([1, 2, 3])

    def test_require_vertex_ids_rejects_duplicates(self):
        assert require_vertex_ids(["a", "b"]) == ["a", "b"]
        with pytest.raises(SchemaViolation, match="duplicate") as excinfo:
            require_vertex_ids(["a", "b", "a"], "/vertices")
        assert excinfo.value.path == "/vertices/2"

    def test_require_vertex_ids_rejects_empty_string(self):
        with pytest.raises(SchemaViolation):
            require_vertex_ids([""])

    def test_check_distribution(self):
        check_distribution([Fraction(1, 3), Fraction(2, 3)], "/p")
        with pytest.raises(SchemaViolation, match="sum to"):
            check_distribution([0.5, 0.4], "/p")
        with pytest.raises(SchemaViolation, match="negative") as excinfo:
            check_distribution([1.5, -0.5], "/p")
        assert excinfo.value.path == "/p/1"


class TestConfigValidator:
    """Test ConfigValidator class."""

    def test_default_config_passes(self):
        """Test the default bundle validates without raising."""
        warnings = ConfigValidator.validate(QcwConfig())
        assert isinstance(warnings, list)

    def test_nonpositive_tolerance_raises(self):
        config = QcwConfig()
        config.tolerances.sdp = 0.0
        with pytest.raises(ValidationError, match="'sdp' must be positive"):
            ConfigValidator.validate(config)

    def test_loose_lp_tolerance_warns(self):
        config = QcwConfig()
        config.tolerances.lp = 1e-3
        warnings = ConfigValidator.validate(config)
        assert any(w.category == "tolerance" for w in warnings)

    def test_jm_tolerances_ordered(self):
        config = QcwConfig()
        config.tolerances.jm_feasible = 1e-5
        config.tolerances.jm_infeasible = 1e-6
        with pytest.raises(ValidationError, match="jm_feasible"):
            ConfigValidator.validate(config)

    def test_relaxation_range(self):
        config = QcwConfig()
        config.sdp.relaxation = 2.0
        with pytest.raises(ValidationError, match="relaxation"):
            ConfigValidator.validate(config)

    def test_zero_threads_raises(self):
        config = QcwConfig()
        config.parallel.threads = 0
        with pytest.raises(ValidationError, match="at least 1"):
            ConfigValidator.validate(config)

    def test_too_many_threads_warns(self):
        config = QcwConfig()
        config.parallel.threads = 100000
        warnings = ConfigValidator.validate(config)
        assert any(w.category == "parallel" for w in warnings)

    def test_audit_samples_positive(self):
        config = QcwConfig()
        config.audit.samples = 0
        with pytest.raises(ValidationError, match="sample count"):
            ConfigValidator.validate(config)

    def test_validate_all_configs_logs(self, caplog):
        config = QcwConfig()
        config.parallel.threads = 100000
        warnings = validate_all_configs(config)
        assert warnings
        assert "warnings" in caplog.text
