"""Condições de compatibilidade lineares (h_j) e não lineares (ψ_j).

A pertinência a H¹₀ é operacionalizada como |ψ_j(1)| <= tol·(‖ψ_j‖_{H¹} + piso).
A ordem é limitada a 4: cada nível aplica um laplaciano discreto e perde duas
ordens de precisão.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
import sympy

from .core.models import Params, RadialGrid
from .core.norms import radial_laplacian, sobolev_norm
from .radial_solver import NonlinearitySpec

LOGGER = logging.getLogger(__name__)

MAX_ORDER = 4
BASE_TOLERANCE = 1e-8
TOLERANCE_FLOOR = 1e-14


def boundary_tolerance(grid: RadialGrid) -> float:
    """Tolerância relativa efetiva: max(1e-8, 100 h²)."""
    return max(BASE_TOLERANCE, 100.0 * grid.h**2)


@dataclass
class CompatReport:
    """Sequência de compatibilidade com o veredito de traço em r = 1."""
    order: int
    sequence: list[np.ndarray]
    boundary_values: list[float]
    verdicts: list[bool]
    tolerance: float
    kind: str = "nonlinear"
    norms: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.sequence) != self.order + 1:
            raise ValueError("sequência deve ter order + 1 termos")

    @property
    def passed(self) -> bool:
        return all(self.verdicts)

    @property
    def compat_order(self) -> int:
        """Maior j tal que todos os termos até j passam (-1 se o primeiro falha)."""
        order = -1
        for verdict in self.verdicts:
            if not verdict:
                break
            order += 1
        return order

    def first_failure(self) -> Optional[int]:
        for j, verdict in enumerate(self.verdicts):
            if not verdict:
                return j
        return None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "order": self.order,
            "boundary_values": [float(v) for v in self.boundary_values],
            "verdicts": list(self.verdicts),
            "tolerance": self.tolerance,
            "compat_order": self.compat_order,
        }


def _check_order(N: int) -> None:
    if N < 0 or N > MAX_ORDER:
        raise ValueError(f"ordem N deve estar em 0..{MAX_ORDER} (recebido {N})")


def _report(sequence: list[np.ndarray], grid: RadialGrid, n: int, N: int, kind: str) -> CompatReport:
    tolerance = boundary_tolerance(grid)
    boundary_values, verdicts, norms = [], [], []
    for term in sequence:
        trace = abs(float(term[0]))
        norm = sobolev_norm(term, grid, n, 1)
        boundary_values.append(trace)
        norms.append(norm)
        verdicts.append(trace <= tolerance * (norm + TOLERANCE_FLOOR))
    return CompatReport(N, sequence, boundary_values, verdicts, tolerance, kind, norms)


def linear_sequence(
    u0: np.ndarray,
    u1: np.ndarray,
    forcing: Sequence[np.ndarray],
    grid: RadialGrid,
    n: int,
    N: int,
) -> CompatReport:
    """
    h_0 = u0, h_1 = u1, h_j = Δh_{j-2} + ∂_t^{j-2}F(0, ·).

    Args:
        u0, u1: Dados iniciais nos nós
        forcing: Derivadas temporais da forçante em t = 0 (pelo menos N - 1 campos)
        grid: Malha radial
        n: Dimensão
        N: Ordem (<= 4)
    """
    _check_order(N)
    if len(forcing) < N - 1:
        raise ValueError(f"ordem {N} exige {N - 1} derivadas da forçante (recebidas {len(forcing)})")
    sequence = [np.asarray(u0, dtype=float), np.asarray(u1, dtype=float)][: N + 1]
    for j in range(2, N + 1):
        sequence.append(radial_laplacian(sequence[j - 2], grid, n) + np.asarray(forcing[j - 2], dtype=float))
    return _report(sequence, grid, n, N, "linear")


def zero_forcing(grid: RadialGrid, N: int) -> list[np.ndarray]:
    return [np.zeros(grid.num_points) for _ in range(max(N - 1, 0))]


@lru_cache(maxsize=None)
def _bell_function(m: int, k: int) -> Callable:
    """B_{m,k}(x_1, ..., x_{m-k+1}) vetorizado."""
    symbols = sympy.symbols(f"x1:{m - k + 2}")
    polynomial = sympy.bell(m, k, symbols)
    return sympy.lambdify(symbols, polynomial, modules="numpy")


def time_derivative_of_force(psi: Sequence[np.ndarray], m: int, nl: NonlinearitySpec) -> np.ndarray:
    """∂_t^m f(u)|_{t=0} por Faà di Bruno: Σ_k f^{(k)}(ψ_0) B_{m,k}(ψ_1, ..., ψ_{m-k+1})."""
    if m == 0:
        return nl.force(psi[0])
    total = np.zeros_like(psi[0])
    for k in range(1, m + 1):
        bell = _bell_function(m, k)
        total = total + nl.derivative(psi[0], k) * bell(*psi[1 : m - k + 2])
    return total


def nonlinear_sequence(
    u0: np.ndarray,
    u1: np.ndarray,
    grid: RadialGrid,
    params: Params,
    N: int,
    nonlinearity: Optional[NonlinearitySpec] = None,
) -> CompatReport:
    """
    ψ_0 = u0, ψ_1 = u1, ψ_j = Δψ_{j-2} - ∂_t^{j-2} f(u)|_0.

    O sinal segue de u_tt = Δu - f(u).
    """
    _check_order(N)
    nl = nonlinearity or NonlinearitySpec(params.p)
    if not nl.is_linear and params.p <= N:
        raise ValueError(f"p = {params.p} <= N = {N}: suavidade insuficiente de f")
    sequence = [np.asarray(u0, dtype=float), np.asarray(u1, dtype=float)][: N + 1]
    for j in range(2, N + 1):
        source = time_derivative_of_force(sequence, j - 2, nl)
        sequence.append(radial_laplacian(sequence[j - 2], grid, params.n) - source)
    return _report(sequence, grid, params.n, N, "nonlinear")


def _vanishing_orders(f: np.ndarray, grid: RadialGrid, orders: int, tol: float) -> bool:
    """Verifica por ajuste polinomial local que f, f', ..., f^{(orders-1)} se anulam em r = 1."""
    if orders <= 0:
        return True
    degree = max(orders + 3, 8)
    count = min(grid.num_points, 4 * (degree + 1))
    span = grid.r[count - 1] - grid.r_min
    x = (grid.r[:count] - grid.r_min) / span
    window = np.asarray(f[:count], dtype=float)
    scale = float(np.max(np.abs(window)))
    if scale == 0.0:
        return True
    coefficients = np.polynomial.polynomial.polyfit(x, window / scale, degree)
    reference = max(float(np.max(np.abs(coefficients))), 1.0)
    return bool(np.all(np.abs(coefficients[:orders]) <= tol * reference))


def strong_condition_check(
    u0: np.ndarray,
    u1: np.ndarray,
    grid: RadialGrid,
    n: int,
    N: int,
    tol: float = 1e-6,
) -> bool:
    """Triagem suficiente: u0 ∈ H₀^{⌊n/2⌋+N+1} e u1 ∈ H₀^{⌊n/2⌋+N} no traço em r = 1."""
    order_u0 = n // 2 + N + 1
    passed = _vanishing_orders(u0, grid, order_u0, tol) and _vanishing_orders(u1, grid, order_u0 - 1, tol)
    LOGGER.debug("Condição forte de ordem %d: %s", N, passed)
    return passed

