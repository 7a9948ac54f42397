"""Pytest configuration and shared fixtures for tests."""

import json
import pytest
from pathlib import Path
import yaml

from src.config_loader import (
    AuditConfig,
    EnumerationConfig,
    JointMeasurabilityConfig,
    QcwConfig,
    ToleranceConfig,
)
from src.scenarios import gamma5, gamma18, triangle_scenario, validate_scenario

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = REPO_ROOT / "data"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running searches and solver sweeps")


@pytest.fixture
def repo_root():
    """Return the repository root."""
    return REPO_ROOT


@pytest.fixture
def data_dir():
    """Return the directory of shipped input documents."""
    return DATA_DIR


@pytest.fixture
def gamma5_scenario():
    """Return the pentagon (KCBS) scenario."""
    return gamma5()


@pytest.fixture
def gamma18_scenario():
    """Return the 18-vertex KS-uncolourable scenario."""
    return gamma18()


@pytest.fixture
def triangle():
    """Return the three-measurement triangle scenario."""
    return triangle_scenario()


@pytest.fixture
def square_scenario():
    """Return a small colourable scenario: two 2-outcome measurements sharing nothing."""
    return validate_scenario(
        {"name": "square", "vertices": ["a", "b", "c", "d"], "hyperedges": [["a", "b"], ["c", "d"]]}
    )


@pytest.fixture
def default_config():
    """Return the built-in configuration bundle."""
    return QcwConfig()


@pytest.fixture
def tolerances():
    """Return default tolerances."""
    return ToleranceConfig()


@pytest.fixture
def small_enumeration():
    """Return enumeration bounds small enough to trigger TooLarge in tests."""
    return EnumerationConfig(max_ks_vertices=4, max_polytope_vertices=4, max_alpha_vertices=4)


@pytest.fixture
def fast_jm_config():
    """Return a coarser joint-measurability configuration for quick tests."""
    return JointMeasurabilityConfig(max_iterations=4000, plateau_window=400, bisection_precision=1e-3)


@pytest.fixture
def small_audit():
    """Return a short seeded audit configuration."""
    return AuditConfig(samples=200, seed=7)


@pytest.fixture
def sample_yaml_config(tmp_path):
    """Create a temporary YAML configuration file for testing.

    Args:
        tmp_path: Pytest temporary directory fixture.

    Returns:
        Path to temporary YAML file.
    """
    config_data = {
        "tolerances": {
            "lp": 1e-10,
            "sdp": 1e-6,
            "witness": 1e-12,
        },
        "sdp": {
            "max_iterations": 20000,
            "penalty": 2.0,
        },
        "joint_measurability": {
            "max_iterations": 5000,
            "bisection_precision": 1e-3,
        },
        "enumeration": {
            "max_ks_vertices": 24,
        },
        "parallel": {
            "threads": 2,
        },
        "audit": {
            "samples": 500,
            "seed": 99,
        },
        "output": {
            "output_dir": str(tmp_path / "outputs"),
            "indent": 4,
        },
    }

    config_file = tmp_path / "test_config.yaml"
    with open(config_file, "w") as f:
        yaml.dump(config_data, f)

    return config_file


@pytest.fixture
def write_json(tmp_path):
    """Return a helper that writes a JSON document into tmp_path."""

    def _write(name, document):
        path = tmp_path / name
        with open(path, "w") as f:
            json.dump(document, f)
        return path

    return _write
