"""Compactificação de Penrose do problema radial.

Mapa (t, r) -> (T, α), fator conforme ω, curvas da fronteira Γ/γ, transformação
u = ω^{(n-1)/2} U, a equação estendida no domínio móvel α ∈ [Γ(T), π], suas
energias E(T)/F(T) e o resíduo da identidade de fluxo.

A malha em α é deslocada de meio passo, de modo que nem α = 0 nem o polo
α = π são nós. O operador angular é discretizado na forma conservativa
(1/s) ∂_α(s ∂_α U), s = sin^{n-1} α, equivalente em segunda ordem ao termo
cot α ∂_α U centrado; o peso de face s(π) = 0 dá a regularidade no polo.

Na célula cortada por Γ(T), o vizinho à esquerda do primeiro nó livre é a
quadrática que passa por (Γ, 0) e pelos dois primeiros nós livres. Um nó a
menos de Δα/2 de Γ não tem equação própria: U e W seguem essa quadrática.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.interpolate import CubicSpline, RectBivariateSpline

from .core.errors import CFLViolationError, CoverageError, DomainError, NumericalBlowupError
from .core.models import Params, RadialGrid, RadialState
from .radial_solver import step_count

LOGGER = logging.getLogger(__name__)

DEFAULT_DELTA = 0.2
COMPACT_CFL = 0.9
DEFAULT_CFL_FRACTION = 0.5
CELL_NODES, CELL_WEIGHTS = np.polynomial.legendre.leggauss(4)


@dataclass(frozen=True)
class PenrosePoint:
    T: float
    alpha: float

    @property
    def in_image(self) -> bool:
        return 0.0 <= self.T < math.pi and 0.0 < self.alpha <= math.pi


def penrose_coordinates(t, r):
    """Versão vetorizada de to_penrose: (T, α)."""
    plus, minus = np.arctan(np.add(t, r)), np.arctan(np.subtract(t, r))
    return plus + minus, plus - minus


def physical_coordinates(T, alpha):
    """Versão vetorizada de from_penrose, sem verificação do sinal de ω."""
    w = np.cos(T) + np.cos(alpha)
    return np.sin(T) / w, np.sin(alpha) / w


def to_penrose(t: float, r: float) -> PenrosePoint:
    if not r > 0:
        raise DomainError(f"r deve ser positivo (recebido {r})")
    T, alpha = penrose_coordinates(t, r)
    return PenrosePoint(float(T), float(alpha))


def from_penrose(pt: PenrosePoint) -> tuple[float, float]:
    w = omega(pt)
    if w <= 0:
        raise DomainError(f"ponto fora do diamante: ω({pt.T:g}, {pt.alpha:g}) = {w:g} <= 0")
    return math.sin(pt.T) / w, math.sin(pt.alpha) / w


def omega(pt: PenrosePoint) -> float:
    return math.cos(pt.T) + math.cos(pt.alpha)


def omega_physical(t, r):
    """ω = 2 / (⟨t+r⟩⟨t-r⟩)."""
    return 2.0 / (np.sqrt(1.0 + np.square(np.add(t, r))) * np.sqrt(1.0 + np.square(np.subtract(t, r))))


def boundary_alpha(T):
    """Γ(T) = π/4 + arcsin(cos T / √2): imagem de r = 1."""
    return math.pi / 4.0 + np.arcsin(np.cos(T) / math.sqrt(2.0))


def boundary_time(alpha):
    """γ(α) = arccos(sin α - cos α), inversa de Γ."""
    return np.arccos(np.clip(np.sin(alpha) - np.cos(alpha), -1.0, 1.0))


def boundary_time_slope(alpha):
    """γ'(α) = -(cos α + sin α)/√(1 - (sin α - cos α)²); ilimitada em α = π/2."""
    alpha = np.asarray(alpha, dtype=float)
    radicand = 1.0 - (np.sin(alpha) - np.cos(alpha)) ** 2
    if np.any(radicand <= 1e-12):
        raise DomainError("γ' ilimitada: α fora de (0, π/2)")
    return -(np.cos(alpha) + np.sin(alpha)) / np.sqrt(radicand)


def boundary_slope(T):
    """Γ'(T) = -sin T / √(1 + sin² T); |Γ'| < 1."""
    return -np.sin(T) / np.sqrt(1.0 + np.sin(T) ** 2)


@dataclass(frozen=True)
class CompactGrid:
    """Malha deslocada α_j = (j + ½)π/N em (0, π)."""
    num_alpha: int

    def __post_init__(self) -> None:
        if self.num_alpha < 16:
            raise ValueError(f"num_alpha deve ser >= 16 (recebido {self.num_alpha})")

    @property
    def d_alpha(self) -> float:
        return math.pi / self.num_alpha

    @cached_property
    def alpha(self) -> np.ndarray:
        nodes = (np.arange(self.num_alpha) + 0.5) * self.d_alpha
        nodes.setflags(write=False)
        return nodes

    @cached_property
    def faces(self) -> np.ndarray:
        """Faces j·Δα, j = 0..N (a face j separa os nós j-1 e j)."""
        return np.arange(self.num_alpha + 1) * self.d_alpha

    def weights(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """
        (média de sin^{n-1} em cada célula, sin^{n-1} nas faces) com as faces extremas nulas.

        As médias de célula (Gauss-Legendre de 4 pontos) tornam o operador
        consistente na última célula, onde sin^{n-1} se anula no polo.
        """
        offsets = 0.5 * self.d_alpha * CELL_NODES
        node = 0.5 * (np.sin(self.alpha[:, None] + offsets[None, :]) ** (n - 1)) @ CELL_WEIGHTS
        face = np.sin(self.faces) ** (n - 1)
        face[0] = 0.0
        face[-1] = 0.0
        return node, face


@dataclass(frozen=True)
class BoundaryLayout:
    """Célula cortada: primeiro nó ativo k e distância d = α_k - Γ(T)."""
    gamma: float
    first: int
    distance: float
    slaved: bool

    @property
    def free(self) -> int:
        """Primeiro nó com equação própria."""
        return self.first + 1 if self.slaved else self.first


def boundary_layout(grid: CompactGrid, T: float) -> BoundaryLayout:
    gamma = float(boundary_alpha(T))
    first = int(np.searchsorted(grid.alpha, gamma, side="right"))
    distance = float(grid.alpha[first] - gamma)
    return BoundaryLayout(gamma, first, distance, distance < 0.5 * grid.d_alpha)


def extrapolation_weights(D: float, d_alpha: float) -> tuple[float, float, float, float]:
    """
    Pesos da quadrática por (Γ, 0), (Γ + D, U₁), (Γ + D + Δα, U₂) avaliada em Γ + D - Δα.

    Returns:
        (a, b, da/dD, db/dD) com valor a·U₁ + b·U₂
    """
    a = 2.0 * (D - d_alpha) / D
    b = -(D - d_alpha) / (D + d_alpha)
    return a, b, 2.0 * d_alpha / D**2, -2.0 * d_alpha / (D + d_alpha) ** 2


def _interpolated_nodes(layout: BoundaryLayout, upto: Optional[int]) -> range:
    """Nós entre first e upto - 1, em ordem decrescente (cada um usa os dois à direita)."""
    top = layout.free if upto is None else max(upto, layout.free)
    return range(top - 1, layout.first - 1, -1)


def impose_boundary(values: np.ndarray, layout: BoundaryLayout, d_alpha: float, upto: Optional[int] = None) -> np.ndarray:
    """
    Zera os nós mascarados e preenche pela quadrática através de Γ os nós sem equação própria.

    Args:
        values: U na malha (alterado no lugar)
        layout: Célula cortada no instante atual
        d_alpha: Passo Δα
        upto: Reinterpola também os nós abaixo deste índice (troca de escravo para livre)
    """
    values[: layout.first] = 0.0
    for k in _interpolated_nodes(layout, upto):
        a, b, _, _ = extrapolation_weights((k + 1.5) * d_alpha - layout.gamma, d_alpha)
        values[k] = a * values[k + 1] + b * values[k + 2]
    return values


def impose_velocity(
    W: np.ndarray,
    U: np.ndarray,
    layout: BoundaryLayout,
    d_alpha: float,
    slope: float,
    upto: Optional[int] = None,
) -> np.ndarray:
    """
    Derivada temporal da restrição de impose_boundary: W_k = aW₁ + bW₂ - Γ'(a'U₁ + b'U₂).

    Args:
        slope: Γ'(T)
    """
    W[: layout.first] = 0.0
    for k in _interpolated_nodes(layout, upto):
        a, b, da, db = extrapolation_weights((k + 1.5) * d_alpha - layout.gamma, d_alpha)
        W[k] = a * W[k + 1] + b * W[k + 2] - slope * (da * U[k + 1] + db * U[k + 2])
    return W


@dataclass(frozen=True)
class CompactState:
    """Campo transformado (U, W = ∂_T U) no instante T."""
    grid: CompactGrid
    T: float
    U: np.ndarray
    W: np.ndarray
    params: Params
    delta: float = DEFAULT_DELTA
    nonlinear: bool = True

    def __post_init__(self) -> None:
        size = self.grid.num_alpha
        if self.U.shape != (size,) or self.W.shape != (size,):
            raise ValueError(f"campos devem ter forma ({size},)")
        if self.nu <= 0:
            raise ValueError(f"ν = {self.nu:g} deve ser positivo")
        masked = self.grid.alpha <= boundary_alpha(self.T)
        if np.any(self.U[masked] != 0.0):
            raise ValueError("U deve ser nulo nos nós mascarados α <= Γ(T)")

    @property
    def nu(self) -> float:
        return self.params.nu

    @property
    def gamma(self) -> float:
        return float(boundary_alpha(self.T))

    def sidecar(self) -> dict:
        return {
            "T": self.T,
            "n": self.params.n,
            "p": self.params.p,
            "nu": self.nu,
            "delta": self.delta,
            "Gamma_T": self.gamma,
        }


def extended_omega_power(T: float, alpha: np.ndarray, exponent: float) -> np.ndarray:
    """ω̃^e com ω̃ = cos T + cos α se T + α <= π, senão 0; calculado como exp(e ln ω̃)."""
    w = np.cos(T) + np.cos(alpha)
    inside = (T + alpha <= math.pi) & (w > 0.0)
    out = np.zeros_like(alpha, dtype=float)
    out[inside] = np.exp(exponent * np.log(w[inside]))
    return out


def check_nu(params: Params) -> None:
    nu = params.nu
    if nu < 1.0:
        raise ValueError(f"equação compactificada exige ν >= 1 (ν = {nu:g})")
    if nu < 2.0:
        LOGGER.warning("ν = %.3g < 2: suavidade reduzida na fronteira nula degrada a convergência", nu)
    if nu < params.N0:
        LOGGER.warning("ν = %.3g abaixo do limiar de suavidade N0 = %d", nu, params.N0)


def _acceleration(U: np.ndarray, T: float, grid: CompactGrid, params: Params, nonlinear: bool) -> np.ndarray:
    layout = boundary_layout(grid, T)
    node_w, face_w = grid.weights(params.n)
    da = grid.d_alpha
    left = np.empty_like(U)
    left[1:] = U[:-1]
    left[0] = 0.0
    right = np.empty_like(U)
    right[:-1] = U[1:]
    right[-1] = 0.0
    j = layout.free
    a, b, _, _ = extrapolation_weights(grid.alpha[j] - layout.gamma, da)
    left[j] = a * U[j] + b * U[j + 1]
    flux = face_w[1:] * (right - U) - face_w[:-1] * (U - left)
    accel = flux / (node_w * da**2) - (params.n - 1) ** 2 / 4.0 * U
    if nonlinear:
        accel -= extended_omega_power(T, grid.alpha, params.nu) * np.abs(U) ** (params.p - 1.0) * U
    accel[: layout.free] = 0.0
    return accel


def compact_rhs(state: CompactState, nonlinear: Optional[bool] = None) -> tuple[np.ndarray, np.ndarray]:
    """
    Lado direito da equação estendida.

    Returns:
        (dU, dW) = (W, Δ_α U - (n-1)²/4 U - ω̃^ν |U|^{p-1} U), nulo nos nós mascarados
    """
    check_nu(state.params)
    use_nonlinear = state.nonlinear if nonlinear is None else nonlinear
    dU = state.W.copy()
    dU[: boundary_layout(state.grid, state.T).first] = 0.0
    return dU, _acceleration(state.U, state.T, state.grid, state.params, use_nonlinear)


def evolve_compact(
    state: CompactState,
    T_end: float,
    dT: Optional[float] = None,
    stride: int = 1,
    cfl_fraction: float = DEFAULT_CFL_FRACTION,
) -> list[CompactState]:
    """
    Evolui a equação estendida por Verlet até T_end.

    Args:
        state: Estado inicial (em geral de compact_slice em T = 0)
        T_end: Instante final (< π)
        dT: Passo; por padrão cfl_fraction·Δα
        stride: Passos entre estados guardados
        cfl_fraction: Fração CFL usada quando dT é omitido

    Returns:
        Histórico de estados (o inicial incluído)
    """
    if not T_end < math.pi:
        raise DomainError(f"T_end deve ser < π (recebido {T_end})")
    check_nu(state.params)
    grid, params, nonlinear = state.grid, state.params, state.nonlinear
    da = grid.d_alpha
    steps, dT_eff = step_count(T_end - state.T, dT if dT is not None else cfl_fraction * da)
    if dT_eff > COMPACT_CFL * da * (1.0 + 1e-12):
        raise CFLViolationError(f"dT = {dT_eff:g} excede {COMPACT_CFL}·Δα = {COMPACT_CFL * da:g}")

    history = [state]
    U, W, T0 = state.U.copy(), state.W.copy(), state.T
    accel = _acceleration(U, T0, grid, params, nonlinear)
    previous = boundary_layout(grid, T0)
    for k in range(1, steps + 1):
        T = T0 + k * dT_eff
        W_half = W + 0.5 * dT_eff * accel
        U = U + dT_eff * W_half
        layout = boundary_layout(grid, T)
        # nós ativados ou liberados neste passo voltam à quadrática por Γ(T)
        impose_boundary(U, layout, da, previous.free)
        accel = _acceleration(U, T, grid, params, nonlinear)
        W = impose_velocity(W_half + 0.5 * dT_eff * accel, U, layout, da, float(boundary_slope(T)), previous.free)
        previous = layout
        if not (np.isfinite(U).all() and np.isfinite(W).all()):
            raise NumericalBlowupError(f"NaN/Inf na evolução compacta em T = {T:.6g}", T)
        if k % stride == 0 or k == steps:
            history.append(CompactState(grid, T, U.copy(), W.copy(), params, state.delta, nonlinear))
    LOGGER.debug("Evolução compacta: %d passos, dT = %g", steps, dT_eff)
    return history


def compact_slice(
    state: RadialState,
    grid: CompactGrid,
    params: Params,
    delta: float = DEFAULT_DELTA,
    nonlinear: bool = True,
) -> CompactState:
    """
    Transforma o dado radial em t = 0 na fatia T = 0.

    Em T = 0: r = tan(α/2), ω = 1 + cos α, U = ω^{-(n-1)/2} u0, W = ω^{-(n+1)/2} u1.
    Pontos além de r_max recebem zero (dados de suporte compacto).
    """
    if state.t != 0.0:
        raise ValueError("compact_slice exige o instante t = 0; use transform_field")
    alpha = grid.alpha
    w = 1.0 + np.cos(alpha)
    r = np.tan(alpha / 2.0)
    inside = (r >= state.grid.r_min) & (r <= state.grid.r_max)
    u0 = np.zeros_like(alpha)
    u1 = np.zeros_like(alpha)
    u0[inside] = CubicSpline(state.grid.r, state.u)(r[inside])
    u1[inside] = CubicSpline(state.grid.r, state.v)(r[inside])
    half = (params.n - 1) / 2.0
    layout = boundary_layout(grid, 0.0)
    U = impose_boundary(w ** (-half) * u0, layout, grid.d_alpha)
    W = impose_velocity(w ** (-half - 1.0) * u1, U, layout, grid.d_alpha, float(boundary_slope(0.0)))
    return CompactState(grid, 0.0, U, W, params, delta, nonlinear)


def radial_slice(state: CompactState, grid: RadialGrid) -> np.ndarray:
    """Inversa em T = 0: u(r) = ω^{(n-1)/2} U(2 arctan r) nos nós radiais."""
    if state.T != 0.0:
        raise ValueError("radial_slice exige T = 0")
    alpha = 2.0 * np.arctan(grid.r)
    values = CubicSpline(state.grid.alpha, state.U)(alpha)
    u = (1.0 + np.cos(alpha)) ** ((state.params.n - 1) / 2.0) * values
    u[0] = 0.0
    return u


class RadialSpacetime:
    """Interpolador bicúbico (t, r) de um histórico radial igualmente espaçado."""

    def __init__(self, history: Sequence[RadialState]) -> None:
        if len(history) < 4:
            raise ValueError("histórico radial precisa de pelo menos 4 instantes")
        self.grid = history[0].grid
        self.times = np.array([s.t for s in history])
        u = np.stack([s.u for s in history])
        v = np.stack([s.v for s in history])
        self._u = RectBivariateSpline(self.times, self.grid.r, u, kx=3, ky=3)
        self._v = RectBivariateSpline(self.times, self.grid.r, v, kx=3, ky=3)

    def covers(self, t, r) -> np.ndarray:
        t, r = np.asarray(t), np.asarray(r)
        return (t >= self.times[0]) & (t <= self.times[-1]) & (r >= self.grid.r_min) & (r <= self.grid.r_max)

    def sample(self, t, r) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(u, u_t, u_r) nos pontos dados."""
        t, r = np.asarray(t, dtype=float), np.asarray(r, dtype=float)
        if not np.all(self.covers(t, r)):
            raise CoverageError("amostra fora da cobertura do histórico radial")
        return (
            self._u.ev(t, r),
            self._v.ev(t, r),
            self._u.ev(t, r, dy=1),
        )


def transform_field(
    spacetime: RadialSpacetime,
    T: float,
    grid: CompactGrid,
    params: Params,
    delta: float = DEFAULT_DELTA,
    nonlinear: bool = True,
) -> tuple[CompactState, np.ndarray]:
    """
    Amostra U(T, ·) e W(T, ·) a partir da solução radial.

    Returns:
        Estado compacto e máscara dos nós efetivamente amostrados (ativos, dentro
        do diamante e da cobertura); os demais nós recebem zero.
    """
    alpha = grid.alpha
    w = np.cos(T) + np.cos(alpha)
    layout = boundary_layout(grid, T)
    candidates = (np.arange(alpha.size) >= layout.first) & (w > 0.0)
    t = np.full_like(alpha, np.inf)
    r = np.full_like(alpha, np.inf)
    t[candidates] = np.sin(T) / w[candidates]
    r[candidates] = np.sin(alpha[candidates]) / w[candidates]
    sampled = candidates & spacetime.covers(t, r)
    U = np.zeros_like(alpha)
    W = np.zeros_like(alpha)
    if np.any(sampled):
        ws = w[sampled]
        u, ut, ur = spacetime.sample(t[sampled], r[sampled])
        half = (params.n - 1) / 2.0
        dt_dT = (1.0 + np.cos(T) * np.cos(alpha[sampled])) / ws**2
        dr_dT = np.sin(alpha[sampled]) * np.sin(T) / ws**2
        U[sampled] = ws ** (-half) * u
        W[sampled] = ws ** (-half) * (ut * dt_dT + ur * dr_dT) + half * ws ** (-half - 1.0) * np.sin(T) * u
    impose_boundary(U, layout, grid.d_alpha)
    impose_velocity(W, U, layout, grid.d_alpha, float(boundary_slope(T)))
    return CompactState(grid, float(T), U, W, params, delta, nonlinear), sampled


def inverse_transform(state: CompactState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t, r, u) nos nós ativos dentro do diamante: u = ω^{(n-1)/2} U."""
    alpha = state.grid.alpha
    w = np.cos(state.T) + np.cos(alpha)
    active = (alpha > state.gamma) & (w > 0.0)
    t, r = physical_coordinates(state.T, alpha[active])
    u = w[active] ** ((state.params.n - 1) / 2.0) * state.U[active]
    return t, r, u


def _boundary_quadratic(state: CompactState, layout: BoundaryLayout) -> tuple[float, float]:
    """Coeficientes (A, B) de U ≈ A x + B x², x = α - Γ, pelos dois primeiros nós livres."""
    j = layout.free
    x1 = state.grid.alpha[j] - layout.gamma
    x2 = x1 + state.grid.d_alpha
    u1, u2 = state.U[j], state.U[j + 1]
    denominator = x1 * x2 * (x2 - x1)
    return float((u1 * x2**2 - u2 * x1**2) / denominator), float((u2 * x1 - u1 * x2) / denominator)


def _energy_quadrature(state: CompactState) -> tuple[np.ndarray, np.ndarray]:
    """
    Pontos Γ, α_k, ..., α_{N-1}, π e a densidade de energia em cada um.

    Em Γ vale U = 0 e W = -Γ' U_α, logo a densidade é ½ s (1 + Γ'²) U_α².
    U_α é centrada no interior, vem da quadrática de fronteira no primeiro nó
    ativo e usa o reflexo par U_N = U_{N-1} no polo.
    """
    grid, params = state.grid, state.params
    layout = boundary_layout(grid, state.T)
    alpha, da = grid.alpha, grid.d_alpha
    U, W = state.U, state.W
    k = layout.first
    A, B = _boundary_quadratic(state, layout)
    gradient = np.zeros_like(U)
    gradient[1:-1] = (U[2:] - U[:-2]) / (2.0 * da)
    gradient[-1] = (U[-1] - U[-2]) / (2.0 * da)
    gradient[k] = A + 2.0 * B * (alpha[k] - layout.gamma)
    density = 0.5 * (W**2 + gradient**2) + (params.n - 1) ** 2 / 8.0 * U**2
    if state.nonlinear:
        density = density + extended_omega_power(state.T, alpha, params.nu) * np.abs(U) ** (params.p + 1.0) / (params.p + 1.0)
    density = np.sin(alpha) ** (params.n - 1) * density
    slope = float(boundary_slope(state.T))
    at_boundary = 0.5 * math.sin(layout.gamma) ** (params.n - 1) * (1.0 + slope**2) * A**2
    points = np.concatenate(([layout.gamma], alpha[k:], [math.pi]))
    return points, np.concatenate(([at_boundary], density[k:], [0.0]))


def _integrate_up_to(points: np.ndarray, values: np.ndarray, upper: float) -> float:
    """Trapézios até upper, com o valor final interpolado linearmente."""
    if upper >= points[-1]:
        return float(trapezoid(values, points))
    inside = points < upper
    xs = np.append(points[inside], upper)
    ys = np.append(values[inside], np.interp(upper, points, values))
    return float(trapezoid(ys, xs))


def energy_E(state: CompactState) -> float:
    """E(T) = ∫_{Γ(T)}^{π} s[½(W² + U_α²) + ω̃^ν|U|^{p+1}/(p+1) + (n-1)²/8 U²] dα."""
    points, density = _energy_quadrature(state)
    return float(trapezoid(density, points))


def energy_F(state: CompactState, delta: Optional[float] = None) -> float:
    """F(T): mesma densidade integrada até π - T + δ/4."""
    delta = state.delta if delta is None else delta
    upper = min(math.pi, math.pi - state.T + delta / 4.0)
    if upper <= state.gamma:
        raise DomainError(f"intervalo vazio: Γ(T) = {state.gamma:g} >= {upper:g}")
    points, density = _energy_quadrature(state)
    return _integrate_up_to(points, density, upper)


def boundary_derivative(state: CompactState) -> float:
    """U_α em Γ(T) pela quadrática que passa por (Γ, 0) e pelos dois primeiros nós livres."""
    A, _ = _boundary_quadratic(state, boundary_layout(state.grid, state.T))
    return A


def boundary_flux(state: CompactState) -> float:
    """s(Γ) U_α² Γ'(1 - Γ'²)/2 <= 0, usando W = -Γ' U_α na fronteira."""
    slope = float(boundary_slope(state.T))
    gradient = boundary_derivative(state)
    weight = math.sin(state.gamma) ** (state.params.n - 1)
    return weight * gradient**2 * slope * (1.0 - slope**2) / 2.0


def nonlinear_sink(state: CompactState) -> float:
    """-∫ ν ω̃^{ν-1} sin T / (p+1) s |U|^{p+1} dα, nos mesmos pontos de E(T)."""
    if not state.nonlinear:
        return 0.0
    grid, params = state.grid, state.params
    layout = boundary_layout(grid, state.T)
    alpha, k = grid.alpha, layout.first
    factor = extended_omega_power(state.T, alpha, params.nu - 1.0)
    weight = np.sin(alpha) ** (params.n - 1)
    integrand = params.nu * factor * math.sin(state.T) / (params.p + 1.0) * weight * np.abs(state.U) ** (params.p + 1.0)
    points = np.concatenate(([layout.gamma], alpha[k:], [math.pi]))
    values = np.concatenate(([0.0], integrand[k:], [0.0]))
    return -float(trapezoid(values, points))


def flux_identity_residual(history: Sequence[CompactState]) -> float:
    """
    Maior |E(T) - E(T₀) - ∫_{T₀}^{T}(fluxo de fronteira + sumidouro) dT| ao longo do trecho.

    A integral em T usa trapézios nos instantes do histórico; com stride 1 o
    resíduo é dominado pelo erro espacial.
    """
    if len(history) < 3:
        raise ValueError("o trecho precisa de pelo menos 3 instantes")
    times = np.array([s.T for s in history])
    rates = np.array([boundary_flux(s) + nonlinear_sink(s) for s in history])
    energies = np.array([energy_E(s) for s in history])
    balance = energies - energies[0] - cumulative_trapezoid(rates, times, initial=0.0)
    return float(np.max(np.abs(balance)))


@dataclass
class DualComparison:
    """Resultado do oráculo de dupla representação em uma fatia T."""
    T: float
    sup_difference: float
    compared_nodes: int
    meta: dict = field(default_factory=dict)


def compare_representations(
    spacetime: RadialSpacetime,
    compact: CompactState,
    margin: int = 2,
) -> DualComparison:
    """
    Compara U evoluído no cilindro com a transformação da solução radial.

    Args:
        spacetime: Interpolador do histórico radial
        compact: Estado compacto no instante T
        margin: Nós descartados junto à fronteira móvel

    Returns:
        Sup da diferença nos nós amostrados
    """
    reference, sampled = transform_field(spacetime, compact.T, compact.grid, compact.params, compact.delta, compact.nonlinear)
    layout = boundary_layout(compact.grid, compact.T)
    sampled = sampled & (np.arange(sampled.size) >= layout.free + margin)
    if not np.any(sampled):
        return DualComparison(compact.T, 0.0, 0)
    difference = float(np.max(np.abs(reference.U[sampled] - compact.U[sampled])))
    return DualComparison(compact.T, difference, int(np.count_nonzero(sampled)))
