"""Gravação de artefatos, manifesto, verificação de hashes e mapa de calor."""

import json
import math

import numpy as np
import pytest
from PIL import Image

from wavelab.artifacts import ArtifactStore, compare_outputs, file_digest, format_value, load_manifest
from wavelab.core.errors import CausalityError
from wavelab.renderer import MIN_SIZE, SpacetimeRenderer


@pytest.mark.parametrize(
    "value,text",
    [
        (0.0, "0"),
        (1.0, "1"),
        (0.1, "0.10000000000000001"),
        (math.nan, "nan"),
        (3, "3"),
        (True, "1"),
        (None, ""),
        (np.float64(2.5), "2.5"),
    ],
)
def test_format_value(value, text):
    assert format_value(value) == text


def test_csv_round_trip_and_digest(tmp_path):
    store = ArtifactStore(tmp_path / "run")
    path = store.write_csv("energy.csv", ["t", "E"], [(0.0, 1.5), (0.5, 1.25)])
    assert path.read_text(encoding="utf-8") == "t,E\n0,1.5\n0.5,1.25\n"
    assert store.outputs == {"energy.csv": file_digest(path)}


def test_json_handles_non_finite(tmp_path):
    store = ArtifactStore(tmp_path)
    path = store.write_json("summary.json", {"a": math.inf, "b": math.nan, "c": np.float64(1.0), "d": (1, 2)})
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload == {"a": "inf", "b": None, "c": 1.0, "d": [1, 2]}


def test_manifest_and_compare(tmp_path):
    first = ArtifactStore(tmp_path / "a")
    first.write_csv("x.csv", ["v"], [(1.0,)])
    first.write_snapshots("state", ["r", "u"], [[(1.0, 0.0)], [(1.0, 0.0)]])
    manifest = first.write_manifest({"kind": "run-radial"}, "0.1.0", 3661.5, {"ok": True}, True)
    payload = load_manifest(manifest)
    assert payload["wall_time"] == "1h 1min 1.50seg"
    assert set(payload["outputs"]) == {"x.csv", "state_00000.csv", "state_00001.csv"}
    assert "manifest.json" not in payload["outputs"]

    second = ArtifactStore(tmp_path / "b")
    second.write_csv("x.csv", ["v"], [(1.0,)])
    second.write_csv("state_00000.csv", ["r", "u"], [(1.0, 1e-3)])
    result = compare_outputs(payload["outputs"], second.output_dir)
    assert result == {"state_00000.csv": False, "state_00001.csv": False, "x.csv": True}


def test_failure_records_required_radius(tmp_path):
    store = ArtifactStore(tmp_path)
    try:
        raise CausalityError("janela causal excedida", required_r_max=12.5)
    except CausalityError as exc:
        path = store.write_failure(exc, {"kind": "run-radial"})
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload["type"] == "CausalityError"
    assert payload["required_r_max"] == 12.5
    assert payload["traceback"]


def test_png_artifact(tmp_path):
    store = ArtifactStore(tmp_path)
    image = SpacetimeRenderer().render(np.outer(np.linspace(0.0, 1.0, 10), np.ones(20)))
    path = store.write_png("heatmap.png", image)
    with Image.open(path) as loaded:
        assert loaded.format == "PNG"
        assert loaded.size == image.size


def test_render_minimum_size_and_orientation():
    renderer = SpacetimeRenderer()
    values = np.zeros((4, 8))
    values[-1] = 1.0
    image = renderer.render(values)
    assert image.height == MIN_SIZE
    assert image.width > MIN_SIZE
    last_color = tuple(int(c) for c in renderer.palette[-1])
    first_color = tuple(int(c) for c in renderer.palette[0])
    assert image.getpixel((0, 0)) == last_color
    assert image.getpixel((0, MIN_SIZE - 1)) == first_color


def test_render_zero_field_uses_first_color():
    renderer = SpacetimeRenderer()
    rgb = renderer.colorize(np.zeros((3, 3)))
    assert np.all(rgb == renderer.palette[0])


@pytest.mark.parametrize("values", [np.zeros(5), np.zeros((0, 4))])
def test_render_rejects_bad_shapes(values):
    with pytest.raises(ValueError):
        SpacetimeRenderer().render(values)


def test_render_bytes_is_png():
    buffer = SpacetimeRenderer().render_bytes(np.ones((70, 70)))
    assert buffer.read(8) == b"\x89PNG\r\n\x1a\n"
