"""Gravação de artefatos de experimento: CSV, JSON, PNG e manifesto."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import traceback
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from PIL import Image

from .core.utils import format_elapsed

LOGGER = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
FAILURE_NAME = "failure.json"


def format_value(value: Any) -> str:
    """Texto decimal com 17 dígitos significativos para reais."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, str)):
        return str(value)
    return "%.17g" % float(value)


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if hasattr(value, "item"):
        return _json_safe(value.item())
    return value


def file_digest(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fp:
        for chunk in iter(lambda: fp.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


class ArtifactStore:
    """Diretório de saída de uma execução, com registro de hashes."""

    def __init__(self, output_dir: Path) -> None:
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self._outputs: dict[str, str] = {}

    @property
    def outputs(self) -> dict[str, str]:
        return dict(self._outputs)

    def _register(self, path: Path) -> Path:
        self._outputs[path.name] = file_digest(path)
        LOGGER.debug("Artefato gravado: %s", path)
        return path

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        """
        Grava um CSV com cabeçalho.

        Args:
            name: Nome do arquivo dentro do diretório de saída
            header: Nomes das colunas
            rows: Linhas de valores

        Returns:
            Caminho do arquivo gravado
        """
        path = self.output_dir / name
        with path.open("w", encoding="utf-8", newline="") as fp:
            writer = csv.writer(fp, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(v) for v in row])
        return self._register(path)

    def write_json(self, name: str, payload: Any) -> Path:
        path = self.output_dir / name
        with path.open("w", encoding="utf-8") as fp:
            json.dump(_json_safe(payload), fp, indent=2, sort_keys=True)
            fp.write("\n")
        return self._register(path)

    def write_png(self, name: str, image: Image.Image) -> Path:
        path = self.output_dir / name
        image.save(path, format="PNG")
        return self._register(path)

    def write_snapshots(self, prefix: str, header: Sequence[str], snapshots: Sequence[Iterable[Sequence[Any]]]) -> list[Path]:
        """Um CSV por instantâneo, com índice de 5 dígitos."""
        return [self.write_csv(f"{prefix}_{index:05d}.csv", header, rows) for index, rows in enumerate(snapshots)]

    def write_manifest(
        self,
        config: dict,
        version: str,
        wall_seconds: float,
        checks: dict,
        passed: bool,
    ) -> Path:
        """
        Grava o manifesto: eco da configuração, versão, tempo e hashes das saídas.

        O manifesto não entra no próprio registro de hashes.
        """
        payload = {
            "config": config,
            "version": version,
            "output_dir": str(self.output_dir),
            "wall_time": format_elapsed(wall_seconds),
            "wall_seconds": wall_seconds,
            "outputs": dict(sorted(self._outputs.items())),
            "checks": checks,
            "passed": passed,
        }
        path = self.output_dir / MANIFEST_NAME
        with path.open("w", encoding="utf-8") as fp:
            json.dump(_json_safe(payload), fp, indent=2, sort_keys=True)
            fp.write("\n")
        LOGGER.info("Manifesto salvo em %s", path)
        return path

    def write_failure(self, exc: BaseException, config: Optional[dict] = None) -> Path:
        """Grava failure.json com tipo, mensagem e traceback."""
        payload = {
            "type": type(exc).__name__,
            "message": str(exc),
            "traceback": traceback.format_exception(type(exc), exc, exc.__traceback__),
            "config": config,
        }
        required = getattr(exc, "required_r_max", None)
        if required is not None:
            payload["required_r_max"] = required
        path = self.output_dir / FAILURE_NAME
        with path.open("w", encoding="utf-8") as fp:
            json.dump(_json_safe(payload), fp, indent=2)
            fp.write("\n")
        LOGGER.error("Falha registrada em %s", path)
        return path


def load_manifest(path: Path) -> dict:
    with Path(path).open("r", encoding="utf-8") as fp:
        return json.load(fp)


def compare_outputs(expected: dict[str, str], directory: Path) -> dict[str, bool]:
    """Compara hashes SHA-256 esperados com os arquivos de outro diretório."""
    result = {}
    for name, digest in sorted(expected.items()):
        candidate = Path(directory) / name
        result[name] = candidate.exists() and file_digest(candidate) == digest
    return result
