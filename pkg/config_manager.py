import json
import logging
import os
from pathlib import Path
from typing import Optional

from wavelab.core.errors import ConfigError
from wavelab.core.models import ExperimentConfig

LOGGER = logging.getLogger(__name__)

OUTPUT_ENV = "WAVELAB_OUT"


class ConfigManager:
    """Lê e valida o documento JSON de um experimento."""

    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self._data: dict = {}
        self._config: Optional[ExperimentConfig] = None
        self.reload()

    @property
    def config(self) -> ExperimentConfig:
        return self._config

    @property
    def raw(self) -> dict:
        """Documento original, ecoado no manifesto."""
        return dict(self._data)

    @property
    def output_dir(self) -> Path:
        """Diretório efetivo: WAVELAB_OUT (se definida) / output_dir."""
        root = os.environ.get(OUTPUT_ENV)
        base = Path(self._config.output_dir)
        if root and not base.is_absolute():
            return Path(root) / base
        return base

    def reload(self) -> None:
        """Relê o documento do disco."""
        if not self.path.exists():
            raise ConfigError(f"arquivo de configuração não encontrado: {self.path}")
        text = self.path.read_text(encoding="utf-8")
        try:
            self._data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{self.path}: JSON inválido na linha {exc.lineno}, coluna {exc.colno}: {exc.msg}"
            ) from None
        if not isinstance(self._data, dict):
            raise ConfigError(f"{self.path}: o documento deve ser um objeto JSON")
        self._config = ExperimentConfig.from_dict(self._data)
        LOGGER.info("Configuração carregada de %s (%s)", self.path, self._config.kind.value)

    @classmethod
    def from_dict(cls, data: dict, path: Path) -> "ConfigManager":
        """Grava o documento em `path` e o carrega (usado pela verificação de manifestos)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fp:
            json.dump(data, fp, indent=2)
        return cls(path)
