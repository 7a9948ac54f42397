"""Tests for configuration loading functionality."""

import pytest
from pathlib import Path
import yaml

from src.config_loader import (
    THREADS_ENV_VAR,
    AuditConfig,
    ConfigLoader,
    EnumerationConfig,
    OutputConfig,
    ParallelConfig,
    QcwConfig,
    SdpConfig,
    ToleranceConfig,
    default_config,
)


class TestConfigLoader:
    """Test ConfigLoader class."""

    def test_load_yaml_success(self, sample_yaml_config):
        """Test successful YAML file loading."""
        loader = ConfigLoader()
        data = loader.load_yaml(sample_yaml_config)

        assert isinstance(data, dict)
        assert "tolerances" in data
        assert "sdp" in data
        assert "audit" in data

    def test_load_yaml_file_not_found(self):
        """Test loading non-existent YAML file raises FileNotFoundError."""
        loader = ConfigLoader()
        with pytest.raises(FileNotFoundError):
            loader.load_yaml("nonexistent_file.yaml")

    def test_load_empty_yaml(self, tmp_path):
        """Test an empty YAML file loads as an empty dict."""
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert ConfigLoader().load_yaml(path) == {}

    def test_load_from_yaml(self, sample_yaml_config):
        """Test load_from_yaml method."""
        loader = ConfigLoader()
        loader.load_from_yaml(sample_yaml_config)

        assert loader.config_path == Path(sample_yaml_config)
        assert isinstance(loader.config_data, dict)
        assert len(loader.config_data) > 0

    def test_merge_configs(self):
        """Test configuration merging."""
        loader = ConfigLoader()

        base = {"a": 1, "b": {"c": 2, "d": 3}}
        update = {"b": {"d": 4, "e": 5}, "f": 6}

        merged = loader.merge_configs(base, update)

        assert merged["a"] == 1
        assert merged["b"]["c"] == 2
        assert merged["b"]["d"] == 4
        assert merged["b"]["e"] == 5
        assert merged["f"] == 6

    def test_merge_leaves_layers_untouched(self):
        """Test merging copies nested sections instead of aliasing them."""
        loader = ConfigLoader()
        base = {"audit": {"seed": 1, "samples": 10}}
        update = {"audit": {"seed": 2}}

        merged = loader.merge_configs(base, update, None)
        merged["audit"]["samples"] = 99

        assert base == {"audit": {"seed": 1, "samples": 10}}
        assert update == {"audit": {"seed": 2}}
        assert merged["audit"]["seed"] == 2

    def test_empty_section_keeps_lower_layer(self):
        """Test a bare ``sdp:`` key does not wipe the defaults."""
        merged = ConfigLoader().merge_configs({"sdp": {"penalty": 1.0}}, {"sdp": None})
        assert merged == {"sdp": {"penalty": 1.0}}

    def test_overrides_win_over_file(self, sample_yaml_config, monkeypatch):
        """Test overrides layer on top of the YAML file and the defaults."""
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        loader = ConfigLoader()
        config = loader.load_complete_config(sample_yaml_config, {"audit": {"seed": 7}, "sdp": {"relaxation": 1.2}})

        assert config.audit.seed == 7
        assert config.audit.samples == 500
        assert config.sdp.penalty == 2.0
        assert config.sdp.relaxation == 1.2
        assert set(loader.config_data) == set(ConfigLoader.SECTIONS)

    def test_empty_section_in_file(self, tmp_path, monkeypatch):
        """Test a section present without keys falls back to the defaults."""
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        path = tmp_path / "bare.yaml"
        path.write_text("sdp:\naudit:\n  seed: 3\n")

        config = ConfigLoader().load_complete_config(path)

        assert config.sdp == SdpConfig()
        assert config.audit.seed == 3

    def test_non_mapping_section_rejected(self, tmp_path):
        """Test a scalar where a section belongs is an error."""
        path = tmp_path / "scalar.yaml"
        path.write_text("tolerances: 5\n")

        with pytest.raises(ValueError, match="'tolerances' section must be a mapping"):
            ConfigLoader().load_complete_config(path)

    def test_unknown_section_warns(self, tmp_path, caplog):
        """Test unknown top-level sections are reported and ignored."""
        path = tmp_path / "extra.yaml"
        path.write_text("rocket:\n  mass: 3\n")

        config = ConfigLoader().load_complete_config(path)

        assert "rocket" in caplog.text
        assert config.tolerances == ToleranceConfig()

    def test_get_tolerance_config(self, sample_yaml_config):
        """Test parsing ToleranceConfig; absent keys keep their defaults."""
        loader = ConfigLoader()
        loader.load_from_yaml(sample_yaml_config)
        tolerances = loader.get_tolerance_config()

        assert isinstance(tolerances, ToleranceConfig)
        assert tolerances.lp == 1e-10
        assert tolerances.sdp == 1e-6
        assert tolerances.hull == ToleranceConfig().hull

    def test_get_tolerance_config_missing_section(self):
        """Test getting tolerances without the section raises KeyError."""
        loader = ConfigLoader()
        loader.config_data = {"sdp": {}}

        with pytest.raises(KeyError, match="'tolerances' section not found"):
            loader.get_tolerance_config()

    def test_get_sdp_config(self, sample_yaml_config):
        """Test parsing SdpConfig from YAML."""
        loader = ConfigLoader()
        loader.load_from_yaml(sample_yaml_config)
        sdp = loader.get_sdp_config()

        assert isinstance(sdp, SdpConfig)
        assert sdp.max_iterations == 20000
        assert sdp.penalty == 2.0
        assert sdp.relaxation == SdpConfig().relaxation

    def test_get_audit_config(self, sample_yaml_config):
        """Test parsing AuditConfig from YAML."""
        loader = ConfigLoader()
        loader.load_from_yaml(sample_yaml_config)
        audit = loader.get_audit_config()

        assert isinstance(audit, AuditConfig)
        assert audit.samples == 500
        assert audit.seed == 99
        assert audit.checkpoint_file is None

    def test_unknown_keys_are_ignored(self, caplog):
        """Test unknown keys are dropped with a warning."""
        loader = ConfigLoader()
        loader.config_data = {"enumeration": {"max_ks_vertices": 12, "bogus": 1}}

        enumeration = loader.get_enumeration_config()

        assert enumeration.max_ks_vertices == 12
        assert not hasattr(enumeration, "bogus")
        assert "bogus" in caplog.text

    def test_load_complete_config(self, sample_yaml_config, monkeypatch):
        """Test loading all configurations at once."""
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        config = ConfigLoader().load_complete_config(sample_yaml_config)

        assert isinstance(config, QcwConfig)
        assert config.tolerances.lp == 1e-10
        assert config.joint_measurability.max_iterations == 5000
        assert config.enumeration.max_ks_vertices == 24
        assert config.parallel.threads == 2
        assert config.output.indent == 4

    def test_load_complete_config_defaults(self, monkeypatch):
        """Test every section falls back to defaults without a file."""
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        config = ConfigLoader().load_complete_config()

        assert config.to_dict() == QcwConfig().to_dict()

    def test_shipped_configs_load(self, repo_root, monkeypatch):
        """Test the shipped YAML files parse into a bundle."""
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        default = ConfigLoader().load_complete_config(repo_root / "configs" / "default.yaml")
        strict = ConfigLoader().load_complete_config(repo_root / "configs" / "strict.yaml")

        assert default.tolerances.lp == ToleranceConfig().lp
        assert strict.tolerances.lp <= default.tolerances.lp
        assert strict.audit.samples >= default.audit.samples


class TestParallelConfig:
    """Test the worker-count override chain."""

    def test_env_var_overrides_file(self, sample_yaml_config, monkeypatch):
        """Test QCW_THREADS wins over the YAML value."""
        monkeypatch.setenv(THREADS_ENV_VAR, "6")
        config = ConfigLoader().load_complete_config(sample_yaml_config)
        assert config.parallel.threads == 6

    def test_non_integer_env_var_is_ignored(self, monkeypatch):
        """Test a malformed QCW_THREADS falls back to the file value."""
        monkeypatch.setenv(THREADS_ENV_VAR, "many")
        loader = ConfigLoader()
        loader.config_data = {"parallel": {"threads": 3}}
        assert loader.get_parallel_config().threads == 3

    def test_missing_section_uses_default(self, monkeypatch):
        """Test the parallel section is optional."""
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        loader = ConfigLoader()
        loader.config_data = {}
        assert loader.get_parallel_config() == ParallelConfig()


class TestQcwConfig:
    """Test QcwConfig bundle."""

    def test_to_dict_is_nested(self):
        """Test to_dict returns plain nested dictionaries."""
        data = QcwConfig().to_dict()

        assert data["tolerances"]["lp"] == 1e-9
        assert data["output"] == vars(OutputConfig())
        assert set(data) == set(ConfigLoader.SECTIONS)

    def test_default_config(self, monkeypatch):
        """Test default_config matches the dataclass defaults."""
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        config = default_config()
        assert config.enumeration == EnumerationConfig()

    def test_yaml_round_trip(self, tmp_path, monkeypatch):
        """Test a dumped configuration loads back unchanged."""
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        original = QcwConfig()
        original.audit.samples = 123
        path = tmp_path / "dumped.yaml"
        with open(path, "w") as f:
            yaml.dump(original.to_dict(), f)

        loaded = ConfigLoader().load_complete_config(path)
        assert loaded.to_dict() == original.to_dict()
