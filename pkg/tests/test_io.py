import math
from dataclasses import dataclass

import pytest

from lureid.sdp import SolverSettings
from lureid.utils.config import ConfigMixin
from lureid.utils.exceptions import ConfigurationError, DatasetFormatError, SchemaVersionError
from lureid.utils.io import check_schema_version, content_hash, read_json, write_json


@dataclass
class _Config(ConfigMixin):
    rate: float = 0.5
    name: str = "run"


def test_json_roundtrip_is_exact(tmp_path):
    """Doubles survive at full precision."""
    values = [math.pi, 1e-300, 0.1 + 0.2, -2.0**-1074, 12345678901234567.0]
    path = tmp_path / "sub" / "values.json"
    write_json({"values": values}, path)
    assert read_json(path)["values"] == values


def test_json_rejects_non_finite(tmp_path):
    """NaN and infinity are not JSON."""
    with pytest.raises(ValueError):
        write_json({"x": float("nan")}, tmp_path / "bad.json")


def test_read_json_reports_location(tmp_path):
    """Parse errors carry file, line and column."""
    path = tmp_path / "broken.json"
    path.write_text('{\n "a": [1, 2,\n')
    with pytest.raises(DatasetFormatError) as excinfo:
        read_json(path)
    assert excinfo.value.path == str(path)
    assert excinfo.value.line >= 2
    assert str(path) in str(excinfo.value)


def test_check_schema_version():
    """Missing, unsupported and supported versions."""
    check_schema_version({"schema_version": 1}, 1, "model")
    with pytest.raises(DatasetFormatError):
        check_schema_version({}, 1, "model")
    with pytest.raises(DatasetFormatError):
        check_schema_version([1], 1, "model")
    with pytest.raises(SchemaVersionError):
        check_schema_version({"schema_version": 3}, 1, "model")


def test_content_hash_matches_git(tmp_path):
    """Same digest as `git hash-object`."""
    path = tmp_path / "hello.txt"
    path.write_bytes(b"hello\n")
    assert content_hash(path) == "ce013625030ba8dba906f756967f9e9ca394464a"


def test_config_yaml_roundtrip(tmp_path):
    """Configurations are written and read as YAML."""
    config = _Config(rate=0.25, name="desk")
    path = tmp_path / "config.yml"
    config.save_yml(path)
    assert _Config.from_yml(path) == config
    with open(path) as f:
        assert _Config.from_yml(f) == config


def test_config_yaml_empty_file(tmp_path):
    """An empty file gives the defaults."""
    path = tmp_path / "empty.yml"
    path.write_text("")
    assert _Config.from_yml(path) == _Config()


def test_config_unknown_keys():
    """Unknown keys and non-mappings are refused."""
    with pytest.raises(ConfigurationError):
        _Config.from_dict({"rate": 0.1, "speed": 3})
    with pytest.raises(ConfigurationError):
        _Config.from_dict([("rate", 0.1)])


def test_solver_settings_yaml(tmp_path):
    """Solver settings are a configuration like any other."""
    settings = SolverSettings(solver="SCS", tol_feas=1e-7)
    path = tmp_path / "solver.yml"
    settings.save_yml(path)
    assert SolverSettings.from_yml(path) == settings
