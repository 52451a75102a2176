import json
from pathlib import Path

import pytest

from config_manager import ConfigManager
from wavelab.core.errors import ConfigError
from wavelab.core.models import ExperimentKind

DOCUMENT = {
    "kind": "diagnose",
    "params": {"n": 3, "p": 7},
    "time": {"t_end": 20.0},
    "output_dir": "diag",
}


def test_loads_document(tmp_path):
    manager = ConfigManager.from_dict(DOCUMENT, tmp_path / "cfg" / "run.json")
    assert manager.config.kind is ExperimentKind.DIAGNOSE
    assert manager.raw == DOCUMENT
    assert manager.config.grid.r_max == 12.0


def test_output_dir_uses_environment(tmp_path, monkeypatch):
    manager = ConfigManager.from_dict(DOCUMENT, tmp_path / "run.json")
    monkeypatch.delenv("WAVELAB_OUT", raising=False)
    assert manager.output_dir == Path("diag")
    monkeypatch.setenv("WAVELAB_OUT", str(tmp_path / "root"))
    assert manager.output_dir == tmp_path / "root" / "diag"


def test_absolute_output_dir_ignores_environment(tmp_path, monkeypatch):
    document = dict(DOCUMENT, output_dir=str(tmp_path / "abs"))
    manager = ConfigManager.from_dict(document, tmp_path / "run.json")
    monkeypatch.setenv("WAVELAB_OUT", str(tmp_path / "root"))
    assert manager.output_dir == tmp_path / "abs"


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        ConfigManager(tmp_path / "nope.json")


def test_invalid_json_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "kind": ,\n}', encoding="utf-8")
    with pytest.raises(ConfigError, match="linha 2"):
        ConfigManager(path)


def test_document_must_be_object(tmp_path):
    path = tmp_path / "list.json"
    path.write_text(json.dumps([1, 2]), encoding="utf-8")
    with pytest.raises(ConfigError):
        ConfigManager(path)


def test_reload_picks_up_changes(tmp_path):
    path = tmp_path / "run.json"
    manager = ConfigManager.from_dict(DOCUMENT, path)
    path.write_text(json.dumps(dict(DOCUMENT, kind="hardy-test")), encoding="utf-8")
    manager.reload()
    assert manager.config.kind is ExperimentKind.HARDY_TEST
