"""Cache em memória de evoluções já calculadas (fundos radiais, históricos)."""

import json
import logging
from collections import OrderedDict
from typing import Any, Callable, Dict, Hashable, Optional

LOGGER = logging.getLogger(__name__)


def make_key(**parts: Any) -> str:
    """Chave estável a partir de parâmetros serializáveis em JSON."""
    return json.dumps(parts, sort_keys=True, default=repr)


class RunCache:
    """Cache LRU com estatísticas de acerto."""

    def __init__(self, max_entries: int = 8):
        """
        Inicializa o cache.

        Args:
            max_entries: Número máximo de execuções guardadas (padrão: 8)
        """
        if max_entries < 1:
            raise ValueError("max_entries deve ser >= 1")
        self._entries: "OrderedDict[Hashable, Any]" = OrderedDict()
        self._max_entries = max_entries
        self._hits = 0
        self._misses = 0

    def get(self, key: Hashable) -> Optional[Any]:
        """
        Busca uma execução no cache.

        Args:
            key: Chave da execução

        Returns:
            O valor guardado, ou None
        """
        if key in self._entries:
            self._entries.move_to_end(key)
            self._hits += 1
            return self._entries[key]
        self._misses += 1
        return None

    def set(self, key: Hashable, value: Any) -> None:
        self._entries[key] = value
        self._entries.move_to_end(key)
        while len(self._entries) > self._max_entries:
            evicted, _ = self._entries.popitem(last=False)
            LOGGER.debug("Execução removida do cache: %s", evicted)

    def get_or_compute(self, key: Hashable, compute: Callable[[], Any]) -> Any:
        value = self.get(key)
        if value is None:
            value = compute()
            self.set(key, value)
        return value

    def get_stats(self) -> Dict[str, Any]:
        """
        Retorna estatísticas do cache.

        Returns:
            Dicionário com estatísticas (hits, misses, hit_rate, size)
        """
        total = self._hits + self._misses
        hit_rate = (self._hits / total * 100) if total > 0 else 0.0
        return {
            "hits": self._hits,
            "misses": self._misses,
            "hit_rate": round(hit_rate, 2),
            "size": len(self._entries),
        }
