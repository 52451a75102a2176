"""CLI: subcomandos, códigos de saída, artefatos e verificação de manifestos."""

import csv
import json
import logging

import pytest

import main
from wavelab.core.errors import (
    CausalityError,
    ConfigError,
    InconclusiveError,
    NumericalBlowupError,
)

BUMP = {"profile": "bump4", "amplitude": 0.5}


@pytest.fixture
def out_root(tmp_path, monkeypatch):
    monkeypatch.setenv("WAVELAB_OUT", str(tmp_path / "runs"))
    return tmp_path / "runs"


def _write(tmp_path, document, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(document), encoding="utf-8")
    return str(path)


def _document(kind, **overrides):
    document = {
        "kind": kind,
        "params": {"n": 3, "p": 7},
        "grid": {"r_max": 6.0, "num_points": 101},
        "time": {"t_end": 1.0},
        "data": {"u0": BUMP},
        "output_dir": kind,
    }
    document.update(overrides)
    return document


@pytest.mark.parametrize(
    "exc,code",
    [
        (ConfigError("x"), 2),
        (ValueError("x"), 2),
        (CausalityError("x", required_r_max=3.0), 3),
        (NumericalBlowupError("x", 1.0), 3),
        (InconclusiveError("x"), 3),
        (AssertionError("x"), 1),
        (RuntimeError("x"), 3),
    ],
)
def test_exit_code_mapping(exc, code):
    assert main.exit_code_for(exc) == code


def test_profiles_listing(capsys):
    assert main.main(["profiles"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("bump4")
    assert main.main(["profiles", "poly"]) == 0
    assert "poly_compat" in capsys.readouterr().out


def test_zero_run_and_verify(tmp_path, out_root):
    document = _document(
        "run-radial",
        grid={"r_max": 4.0, "num_points": 61},
        time={"t_end": 1.0, "stride": 5},
        data={},
    )
    assert main.main(["run", _write(tmp_path, document)]) == 0
    run_dir = out_root / "run-radial"
    with (run_dir / "energy.csv").open(encoding="utf-8") as fp:
        rows = list(csv.DictReader(fp))
    assert rows and all(row["E_total"] == "0" for row in rows)
    manifest = json.loads((run_dir / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["passed"] is True
    assert {"energy.csv", "state_final.csv", "heatmap.png", "summary.json"} <= set(manifest["outputs"])
    assert main.main(["verify", str(run_dir / "manifest.json")]) == 0
    assert (out_root / "run-radial_verify" / "energy.csv").exists()


def test_missing_field_exits_with_config_code(tmp_path, out_root, caplog):
    document = _document("run-radial", params={"n": 3})
    with caplog.at_level(logging.ERROR):
        assert main.main(["run", _write(tmp_path, document)]) == 2
    assert "params.p" in caplog.text


def test_invalid_json_exits_with_config_code(tmp_path, out_root):
    path = tmp_path / "broken.json"
    path.write_text('{"kind": "run-radial",\n', encoding="utf-8")
    assert main.main(["run", str(path)]) == 2
    assert main.main(["run", str(tmp_path / "missing.json")]) == 2


def test_causal_window_failure(tmp_path, out_root):
    document = _document("run-radial", grid={"r_max": 4.0, "num_points": 61}, time={"t_end": 5.0})
    assert main.main(["run", _write(tmp_path, document)]) == 3
    failure = json.loads((out_root / "run-radial" / "failure.json").read_text(encoding="utf-8"))
    assert failure["type"] == "CausalityError"
    assert failure["required_r_max"] > 4.0


def test_unreadable_manifest(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text("{}", encoding="utf-8")
    assert main.main(["verify", str(path)]) == 2


def test_hardy_experiment(tmp_path, out_root):
    document = _document(
        "hardy-test",
        time={"t_end": 0.0},
        data={},
        seed=3,
        options={"trials": 50, "scaling_trials": 20, "kernel_trials": 200},
    )
    assert main.main(["run", _write(tmp_path, document)]) == 0
    payload = json.loads((out_root / "hardy-test" / "hardy.json").read_text(encoding="utf-8"))
    assert payload["survey"]["seed"] == 3
    assert set(payload["kernel_errors"]) == {"7", "8"}


def test_compat_experiment(tmp_path, out_root):
    document = _document(
        "check-compat",
        grid={"r_max": 4.0, "num_points": 601},
        time={"t_end": 0.0},
        options={"N": 2, "expect_pass": True},
    )
    assert main.main(["run", _write(tmp_path, document)]) == 0
    payload = json.loads((out_root / "check-compat" / "compat.json").read_text(encoding="utf-8"))
    assert payload["nonlinear"]["passed"] is True
    assert (out_root / "check-compat" / "compat.csv").exists()


def test_poly_profile_fails_expected_verdict(tmp_path, out_root):
    document = _document(
        "check-compat",
        grid={"r_max": 4.0, "num_points": 601},
        time={"t_end": 0.0},
        data={"u0": {"profile": "poly_compat"}},
        options={"N": 2, "expect_pass": True, "strong": False},
    )
    assert main.main(["run", _write(tmp_path, document)]) == 1


@pytest.mark.parametrize(
    "kind,overrides,files",
    [
        (
            "run-penrose",
            {"grid": {"r_max": 6.0, "num_points": 301}, "options": {"num_alpha": 64, "T_end": 0.3}},
            ["compact_energy.csv", "compact_final.csv", "compact_final.json"],
        ),
        (
            "run-perturb",
            {"options": {"ells": [0, 1], "num_theta": 4}},
            ["mode_00.csv", "mode_01.csv", "axisym_final.csv", "axisym_final.json", "gronwall.json"],
        ),
        (
            "diagnose",
            {
                "grid": {"r_max": 26.0, "num_points": 251},
                "time": {"t_end": 22.0, "stride": 10},
                "data": {"u0": {"profile": "bump4", "amplitude": 0.2}},
            },
            ["decay.csv", "decay_bracket.csv", "sobolev.csv", "l2.csv", "diagnose.json"],
        ),
        (
            "sweep",
            {"options": {"epsilons": [1e-3, 1e-2], "num_theta": 4, "checkpoints": 4}},
            ["sweep_linearized.csv", "sweep_axisym.csv", "sweep.json", "gronwall.json"],
        ),
    ],
)
def test_small_experiments_write_artifacts(tmp_path, out_root, kind, overrides, files):
    code = main.main(["run", _write(tmp_path, _document(kind, **overrides))])
    assert code in (0, 1)
    run_dir = out_root / kind
    for name in files + ["manifest.json"]:
        assert (run_dir / name).exists(), name


def test_penrose_summary_reports_flux_identity(tmp_path, out_root):
    document = _document(
        "run-penrose",
        grid={"r_max": 6.0, "num_points": 301},
        options={"num_alpha": 256, "T_end": 0.6, "M": 3.0, "flux_tolerance": 0.05},
    )
    main.main(["run", _write(tmp_path, document)])
    summary = json.loads((out_root / "run-penrose" / "summary.json").read_text(encoding="utf-8"))
    metrics = summary["metrics"]
    assert 0.0 <= metrics["flux_identity_residual"] <= 0.05
    assert summary["checks"]["flux_identity"]["passed"]
    assert metrics["initial_energy_ratio"] > 0.0
