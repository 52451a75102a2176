"""Catálogo de perfis analíticos para dados iniciais.

Cada perfil anula exatamente o nó r = 1 e informa sua ordem de
compatibilidade linear, calculada uma vez numa malha de referência.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .compat import MAX_ORDER, linear_sequence, zero_forcing
from .core.errors import ConfigError
from .core.models import RadialGrid, make_grid

LOGGER = logging.getLogger(__name__)

CATALOG_GRID = (6.0, 1001)
CATALOG_DIMENSION = 3
GAUSS_TRUNCATION = 6.0


def _bump4(r: np.ndarray, amplitude: float, width: float, center: float) -> np.ndarray:
    a, b = center - 0.5 * width, center + 0.5 * width
    if a < 1.0:
        raise ConfigError(f"bump4: suporte [{a:g}, {b:g}] invade o obstáculo r < 1")
    inside = (r > a) & (r < b)
    values = np.zeros_like(r)
    values[inside] = 256.0 * ((r[inside] - a) * (b - r[inside])) ** 4 / width**8
    return amplitude * values


def _gauss_cutoff(r: np.ndarray, amplitude: float, width: float, center: float) -> np.ndarray:
    x = (r - center) / width
    values = np.exp(-(x**2)) * (1.0 - np.exp(-(((r - 1.0) / width) ** 2))) ** 3
    values[np.abs(x) > GAUSS_TRUNCATION] = 0.0
    return amplitude * values


def _poly_compat(r: np.ndarray, amplitude: float, width: float, center: float) -> np.ndarray:
    b = 1.0 + width
    inside = r < b
    values = np.zeros_like(r)
    values[inside] = 16.0 * ((r[inside] - 1.0) * (b - r[inside])) ** 2 / width**4
    return amplitude * values


@dataclass(frozen=True)
class Profile:
    """Perfil nomeado com parâmetros padrão."""
    name: str
    description: str
    builder: Callable[[np.ndarray, float, float, float], np.ndarray]
    width: float
    center: float

    def sample(
        self,
        grid: RadialGrid,
        amplitude: float = 1.0,
        width: Optional[float] = None,
        center: Optional[float] = None,
    ) -> np.ndarray:
        values = self.builder(
            np.asarray(grid.r, dtype=float),
            float(amplitude),
            float(self.width if width is None else width),
            float(self.center if center is None else center),
        )
        values[0] = 0.0
        return values

    @property
    def compat_order(self) -> int:
        return _catalog_compat_order(self.name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "width": self.width,
            "center": self.center,
            "compat_order": self.compat_order,
        }


PROFILES: dict[str, Profile] = {
    profile.name: profile
    for profile in (
        Profile("bump4", "bolha compacta 256((r-a)(b-r))^4/(b-a)^8", _bump4, width=1.0, center=1.5),
        Profile("gauss_cutoff", "gaussiana vezes corte (1 - e^{-((r-1)/σ)²})³", _gauss_cutoff, width=0.5, center=3.0),
        Profile("poly_compat", "polinômio 16((r-1)(b-r))²/(b-1)^4 compatível na fronteira", _poly_compat, width=1.0, center=1.5),
    )
}


def compat_order(u0: np.ndarray, grid: RadialGrid, n: int) -> int:
    """Ordem da sequência linear (u1 = 0, forçante nula) até MAX_ORDER."""
    report = linear_sequence(u0, np.zeros_like(u0), zero_forcing(grid, MAX_ORDER), grid, n, MAX_ORDER)
    return report.compat_order


@lru_cache(maxsize=None)
def _catalog_compat_order(name: str) -> int:
    grid = make_grid(*CATALOG_GRID)
    order = compat_order(PROFILES[name].sample(grid), grid, CATALOG_DIMENSION)
    LOGGER.debug("Ordem de compatibilidade de %s: %d", name, order)
    return order


def get_profile(name: str) -> Profile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ConfigError(f"perfil desconhecido: {name!r} (disponíveis: {', '.join(sorted(PROFILES))})") from None


def list_profiles(name_filter: str = "") -> list[Profile]:
    """Perfis cujo nome contém o filtro; filtro vazio devolve o catálogo inteiro."""
    return [profile for name, profile in sorted(PROFILES.items()) if name_filter in name]


def build_data(spec: Optional[dict], grid: RadialGrid) -> np.ndarray:
    """
    Constrói um campo a partir de {profile, amplitude, width, center}.

    Args:
        spec: Especificação do perfil, ou None para o campo nulo
        grid: Malha radial

    Returns:
        Valores nos nós com u[0] = 0
    """
    if spec is None:
        return np.zeros(grid.num_points)
    profile = get_profile(spec["profile"])
    return profile.sample(grid, spec.get("amplitude", 1.0), spec.get("width"), spec.get("center"))
