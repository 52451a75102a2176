"""Quadraturas, estênceis e normas discretas.

Todas as integrais radiais usam a medida r^{n-1} dr e omitem o fator de área
|S^{n-1}|: ele se cancela em todas as razões formadas pelos diagnósticos.
Para funções radiais a norma H^k(Ω) completa é equivalente (não igual) à soma
das normas L² das derivadas radiais de ordem <= k usada aqui.
"""

from __future__ import annotations

import logging
from enum import Enum
from typing import Optional, Protocol, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .models import RadialGrid, RadialState

LOGGER = logging.getLogger(__name__)

MAX_SOBOLEV_ORDER = 3
MAX_Y_ORDER = 2


def japanese_bracket(s):
    """⟨s⟩ = (1 + s²)^{1/2}."""
    return np.sqrt(1.0 + np.square(s))


def d_dr(f: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Primeira derivada: centrada no interior, unilateral de 2ª ordem nas bordas."""
    return np.gradient(f, h, axis=axis, edge_order=2)


def d2_dr2(f: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Segunda derivada com o mesmo par de estênceis de d_dr."""
    g = np.moveaxis(np.asarray(f, dtype=float), axis, 0)
    out = np.empty_like(g)
    out[1:-1] = (g[2:] - 2.0 * g[1:-1] + g[:-2]) / h**2
    out[0] = (2.0 * g[0] - 5.0 * g[1] + 4.0 * g[2] - g[3]) / h**2
    out[-1] = (2.0 * g[-1] - 5.0 * g[-2] + 4.0 * g[-3] - g[-4]) / h**2
    return np.moveaxis(out, 0, axis)


def radial_derivative(f: np.ndarray, h: float, k: int, axis: int = 0) -> np.ndarray:
    if k == 0:
        return np.asarray(f, dtype=float)
    if k == 1:
        return d_dr(f, h, axis)
    if k == 2:
        return d2_dr2(f, h, axis)
    if k == 3:
        return d_dr(d2_dr2(f, h, axis), h, axis)
    raise ValueError(f"ordem de derivada {k} > {MAX_SOBOLEV_ORDER} não suportada")


def radial_laplacian(f: np.ndarray, grid: RadialGrid, n: int) -> np.ndarray:
    """f'' + (n-1)/r f' em todos os nós (bordas unilaterais)."""
    return d2_dr2(f, grid.h) + (n - 1) / grid.r * d_dr(f, grid.h)


def interior_laplacian(f: np.ndarray, r: np.ndarray, h: float, n: int) -> np.ndarray:
    """Laplaciano radial centrado nos nós interiores; zero nos dois extremos."""
    out = np.zeros_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h**2 + (n - 1) / r[1:-1] * (f[2:] - f[:-2]) / (2.0 * h)
    return out


def _region(grid: RadialGrid, r_from: Optional[float]) -> slice:
    if r_from is None or r_from <= grid.r_min:
        return slice(None)
    start = int(np.searchsorted(grid.r, r_from - 1e-12 * grid.h))
    if grid.num_points - start < 2:
        raise ValueError(f"região r >= {r_from} tem menos de dois nós")
    return slice(start, None)


def _lq_integral(f, grid: RadialGrid, n: int, q: float, weight_exponent: float, r_from: Optional[float]) -> float:
    region = _region(grid, r_from)
    r = grid.r[region]
    g = np.abs(np.asarray(f, dtype=float)[region])
    if weight_exponent:
        g = g * japanese_bracket(r) ** weight_exponent
    return float(trapezoid(g**q * r ** (n - 1), r))


def lp_norm(
    f: np.ndarray,
    grid: RadialGrid,
    n: int,
    q: float = 2.0,
    weight_exponent: float = 0.0,
    r_from: Optional[float] = None,
) -> float:
    """
    Calcula ‖⟨r⟩^a f‖_{L^q} com medida radial r^{n-1} dr (trapézio composto).

    Args:
        f: Valores nos nós da malha
        grid: Malha radial
        n: Dimensão espacial
        q: Expoente (>= 1 ou np.inf)
        weight_exponent: Expoente a do peso ⟨r⟩^a
        r_from: Restringe a integral a r >= r_from

    Returns:
        Valor da norma
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.num_points,):
        raise ValueError(f"forma {f.shape} incompatível com a malha ({grid.num_points},)")
    if np.isinf(q):
        region = _region(grid, r_from)
        g = np.abs(f[region])
        if weight_exponent:
            g = g * japanese_bracket(grid.r[region]) ** weight_exponent
        return float(g.max(initial=0.0))
    if q < 1:
        raise ValueError(f"q deve ser >= 1 (recebido {q})")
    integral = _lq_integral(f, grid, n, q, weight_exponent, r_from)
    if q == 2:
        return float(np.sqrt(integral))
    return integral ** (1.0 / q)


def sobolev_norm(f: np.ndarray, grid: RadialGrid, n: int, k: int) -> float:
    """Norma H^k discreta: (Σ_{j<=k} ‖∂_r^j f‖²_{L²})^{1/2}."""
    if k < 0 or k > MAX_SOBOLEV_ORDER:
        raise ValueError(f"k deve estar em 0..{MAX_SOBOLEV_ORDER} (recebido {k})")
    total = 0.0
    for j in range(k + 1):
        total += _lq_integral(radial_derivative(f, grid.h, j), grid, n, 2.0, 0.0, None)
    return float(np.sqrt(total))


def weighted_sobolev_norm(
    f: np.ndarray,
    grid: RadialGrid,
    n: int,
    a: int,
    b: float,
    r_from: Optional[float] = None,
) -> float:
    """Convenção H^{a,b}(r >= M): Σ_{k<=a} ‖⟨r⟩^b ∂_r^k f‖_{L²(r >= M)}."""
    if a > MAX_SOBOLEV_ORDER:
        LOGGER.warning("Ordem %d reduzida para %d na norma de Sobolev com peso", a, MAX_SOBOLEV_ORDER)
        a = MAX_SOBOLEV_ORDER
    total = 0.0
    for k in range(a + 1):
        total += np.sqrt(_lq_integral(radial_derivative(f, grid.h, k), grid, n, 2.0, b, r_from))
    return float(total)


class FieldGeometry(Protocol):
    """Geometria espacial usada pelas normas de espaço-tempo."""

    def derivatives(self, fields: np.ndarray, order: int) -> list[np.ndarray]:
        """Componentes de todas as derivadas espaciais de ordem exata `order` (eixo 0 = tempo)."""
        ...

    def lp(self, f: np.ndarray, q: float) -> float:
        """Norma L^q de um único campo espacial."""
        ...

    def integrate(self, density: np.ndarray) -> float:
        """Integral espacial de uma densidade."""
        ...


class RadialGeometry:
    """Geometria de campos radiais em dimensão n."""

    def __init__(self, grid: RadialGrid, n: int) -> None:
        self.grid = grid
        self.n = n

    def derivatives(self, fields: np.ndarray, order: int) -> list[np.ndarray]:
        return [radial_derivative(fields, self.grid.h, order, axis=1)]

    def lp(self, f: np.ndarray, q: float) -> float:
        return lp_norm(f, self.grid, self.n, q)

    def integrate(self, density: np.ndarray) -> float:
        r = self.grid.r
        return float(trapezoid(density * r ** (self.n - 1), r))


def _time_lq(series: np.ndarray, times: np.ndarray, q: float) -> float:
    if series.size == 0:
        return 0.0
    if np.isinf(q):
        return float(series.max())
    if series.size == 1:
        return 0.0
    return float(trapezoid(series**q, times) ** (1.0 / q))


def spacetime_norm(
    times: np.ndarray,
    fields: np.ndarray,
    geometry: FieldGeometry,
    q: float,
    r_exp: float,
    N: int,
) -> float:
    """
    Norma Y^{q,r;N}: Σ_{j+k<=N} ‖∂_t^j ∂_x^k u‖_{L^q_t L^r_x}.

    Args:
        times: Instantes igualmente espaçados
        fields: Array (nt, ...) com os campos em cada instante
        geometry: Geometria espacial (derivadas e normas L^r)
        q: Expoente temporal (np.inf = máximo)
        r_exp: Expoente espacial
        N: Ordem total máxima de derivadas (<= 2)

    Returns:
        Valor da norma
    """
    times = np.asarray(times, dtype=float)
    fields = np.asarray(fields, dtype=float)
    if N < 0 or N > MAX_Y_ORDER:
        raise ValueError(f"N deve estar em 0..{MAX_Y_ORDER} (recebido {N})")
    if fields.shape[0] != times.size:
        raise ValueError("número de instantes difere do número de campos")
    if N >= 1 and times.size < 3:
        raise ValueError(f"N = {N} exige pelo menos 3 instantes (recebidos {times.size})")
    if times.size >= 2:
        steps = np.diff(times)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("histórico precisa ser igualmente espaçado no tempo")

    time_derivs = [fields]
    for _ in range(N):
        time_derivs.append(np.gradient(time_derivs[-1], times, axis=0, edge_order=2))

    total = 0.0
    for j in range(N + 1):
        for k in range(N + 1 - j):
            for component in geometry.derivatives(time_derivs[j], k):
                series = np.array([geometry.lp(component[i], r_exp) for i in range(times.size)])
                total += _time_lq(series, times, q)
    return float(total)


def y_norm(history: Sequence[RadialState], n: int, q: float, r_exp: float, N: int = 0) -> float:
    """Norma Y^{q,r;N} de um histórico de estados radiais."""
    if not history:
        return 0.0
    times = np.array([state.t for state in history])
    fields = np.stack([state.u for state in history])
    return spacetime_norm(times, fields, RadialGeometry(history[0].grid, n), q, r_exp, N)


class PairClass(str, Enum):
    """Classificação de um par de expoentes (q, r) de Strichartz."""
    ADMISSIBLE = "admissible"
    ENDPOINT_EXCLUDED = "endpoint-excluded"
    SOBOLEV_EXTENDED = "sobolev-extended"
    NEITHER = "neither"


PAIR_TOLERANCE = 1e-12


def _inverse(x: float) -> float:
    return 0.0 if np.isinf(x) else 1.0 / x


def is_admissible(q: float, r: float, n: int) -> tuple[bool, Optional[str]]:
    """
    Testa 2/q + (n-1)/r = (n-1)/2, 2 < q <= ∞, 2 <= r < 2(n-1)/(n-3).

    Returns:
        (True, None) ou (False, motivo)
    """
    if abs(2.0 * _inverse(q) + (n - 1) * _inverse(r) - (n - 1) / 2.0) > PAIR_TOLERANCE:
        return False, "relação de escala violada"
    if not q > 2.0:
        return False, "q deve ser > 2"
    upper = np.inf if n == 3 else 2.0 * (n - 1) / (n - 3)
    if not (r >= 2.0 and r < upper):
        return False, "r fora de [2, 2(n-1)/(n-3))"
    return True, None


def is_endpoint(q: float, r: float, n: int) -> bool:
    if n == 3:
        return False
    return abs(q - 2.0) <= PAIR_TOLERANCE and abs(r - 2.0 * (n - 1) / (n - 3)) <= PAIR_TOLERANCE


def sobolev_strichartz_pair(delta: float, n: int) -> tuple[float, float]:
    """Par da família estendida: q = 2/δ, r = 2n/(n-2-δ), 0 <= δ < 1."""
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"δ deve estar em [0, 1) (recebido {delta})")
    q = np.inf if delta == 0.0 else 2.0 / delta
    return q, 2.0 * n / (n - 2.0 - delta)


def sobolev_extended_delta(q: float, r: float, n: int) -> Optional[float]:
    """δ tal que (q, r) pertence à família estendida, ou None."""
    delta = 2.0 * _inverse(q)
    if not 0.0 <= delta < 1.0:
        return None
    expected = 2.0 * n / (n - 2.0 - delta)
    if np.isinf(r) or abs(r - expected) > PAIR_TOLERANCE * max(1.0, expected):
        return None
    return delta


def classify_pair(q: float, r: float, n: int) -> PairClass:
    if is_admissible(q, r, n)[0]:
        return PairClass.ADMISSIBLE
    if is_endpoint(q, r, n):
        return PairClass.ENDPOINT_EXCLUDED
    if sobolev_extended_delta(q, r, n) is not None:
        return PairClass.SOBOLEV_EXTENDED
    return PairClass.NEITHER
