"""Perturbações não radiais de uma solução radial de fundo.

Dois caminhos de evolução:

* equação linearizada □w + V w = 0 por harmônico esférico ℓ, V = p|u|^{p-1},
  em qualquer dimensão;
* equação não linear completa □w + f(u+w) - f(u) = 0 em forma axissimétrica
  (r, θ) para n = 3.

Também calcula a norma a priori M(T), a varredura em ε e o diagnóstico de
Gronwall da unicidade fraca-forte.
"""

from __future__ import annotations

import asyncio
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline

from .compat import nonlinear_sequence
from .core.errors import CausalityError, CFLViolationError, CoverageError, NumericalBlowupError, SolverError
from .core.models import Params, RadialGrid, RadialState
from .core.norms import (
    FieldGeometry,
    RadialGeometry,
    d_dr,
    interior_laplacian,
    sobolev_extended_delta,
    sobolev_strichartz_pair,
    spacetime_norm,
)
from .radial_solver import CFL_FRACTION, NonlinearitySpec, step_count, support_radius

LOGGER = logging.getLogger(__name__)

MIN_SAMPLES_PER_OSCILLATION = 8
GROWTH_LIMIT = 10.0
GAUSS_NODES, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(8)


class Background:
    """Solução radial armazenada, interpolada em t por splines cúbicos."""

    def __init__(self, history: Sequence[RadialState], params: Params, validate_stride: bool = True) -> None:
        if len(history) < 4:
            raise ValueError("fundo precisa de pelo menos 4 instantes")
        self.grid: RadialGrid = history[0].grid
        self.params = params
        self.times = np.array([state.t for state in history])
        steps = np.diff(self.times)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("instantes do fundo devem ser igualmente espaçados")
        self.dt = float(steps[0])
        self._u = np.stack([state.u for state in history])
        self._v = np.stack([state.v for state in history])
        if validate_stride:
            self._validate_stride()
        self._u_spline = CubicSpline(self.times, self._u, axis=0)
        self._v_spline = CubicSpline(self.times, self._v, axis=0)

    @classmethod
    def zero(cls, grid: RadialGrid, params: Params, t_end: float, samples: int = 16) -> "Background":
        times = np.linspace(0.0, t_end, samples)
        return cls([RadialState.zeros(grid, float(t)) for t in times], params)

    @classmethod
    def from_log(cls, log, params: Params) -> "Background":
        """Fundo a partir de um registro de observações com instantâneos."""
        if not log.snapshots:
            raise ValueError("registro sem instantâneos: use keep_snapshots=True")
        return cls(log.snapshots, params)

    def _validate_stride(self) -> None:
        peak_u = float(np.max(np.abs(self._u)))
        peak_v = float(np.max(np.abs(self._v)))
        if peak_u == 0.0 or peak_v == 0.0:
            return
        period = 2.0 * math.pi * peak_u / peak_v
        samples = period / self.dt
        if samples < MIN_SAMPLES_PER_OSCILLATION:
            raise ValueError(
                f"passo de armazenamento do fundo grosso demais: {samples:.1f} amostras por oscilação "
                f"(mínimo {MIN_SAMPLES_PER_OSCILLATION})"
            )

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def _check_time(self, t: float) -> None:
        slack = 1e-9 * max(1.0, self.t_end)
        if t < self.times[0] - slack or t > self.t_end + slack:
            raise CoverageError(f"t = {t:g} fora da cobertura do fundo [{self.times[0]:g}, {self.t_end:g}]")

    def profile(self, t: float) -> np.ndarray:
        self._check_time(t)
        return self._u_spline(t)

    def rate(self, t: float) -> np.ndarray:
        self._check_time(t)
        return self._v_spline(t)

    def value(self, t: float, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if np.any(r < self.grid.r_min) or np.any(r > self.grid.r_max):
            raise CoverageError("r fora da malha do fundo")
        return CubicSpline(self.grid.r, self.profile(t))(r)

    def snapshots(self) -> list[RadialState]:
        return [RadialState(self.grid, float(t), u, v) for t, u, v in zip(self.times, self._u, self._v)]


def potential(bg: Background, t: float, r) -> np.ndarray:
    """V(t, r) = p|u(t, r)|^{p-1}."""
    return bg.params.p * np.abs(bg.value(t, r)) ** (bg.params.p - 1.0)


def potential_profile(bg: Background, t: float) -> np.ndarray:
    return bg.params.p * np.abs(bg.profile(t)) ** (bg.params.p - 1.0)


@dataclass(frozen=True)
class ModeState:
    """Canal w_ℓ(t, r) de um harmônico esférico."""
    ell: int
    grid: RadialGrid
    t: float
    w: np.ndarray
    w_t: np.ndarray

    def __post_init__(self) -> None:
        if self.ell < 0:
            raise ValueError("ℓ deve ser >= 0")
        if self.w[0] != 0.0 or self.w_t[0] != 0.0:
            raise ValueError("condição de Dirichlet violada em r = 1")


def _centrifugal(ell: int, grid: RadialGrid, n: int) -> np.ndarray:
    return ell * (ell + n - 2) / grid.r**2


def _mode_acceleration(w: np.ndarray, t: float, ell: int, bg: Background, params: Params) -> np.ndarray:
    grid = bg.grid
    dv = interior_laplacian(w, grid.r, grid.h, params.n)
    coefficient = _centrifugal(ell, grid, params.n) + potential_profile(bg, t)
    dv[1:-1] -= coefficient[1:-1] * w[1:-1]
    return dv


def linearized_mode_rhs(state: ModeState, bg: Background, params: Params) -> tuple[np.ndarray, np.ndarray]:
    """(dw, dw_t) com dw_t = w'' + (n-1)/r w' - ℓ(ℓ+n-2)/r² w - V w."""
    if state.grid != bg.grid:
        raise ValueError("modo e fundo precisam da mesma malha")
    return state.w_t.copy(), _mode_acceleration(state.w, state.t, state.ell, bg, params)


def _check_window(w0: np.ndarray, w1: np.ndarray, grid: RadialGrid, t_span: float) -> None:
    required = support_radius(w0, w1, grid) + t_span + 2.0 * grid.h
    if required > grid.r_max + 1e-12:
        raise CausalityError(f"janela causal excedida: r_max >= {required:g} necessário", required_r_max=required)


def evolve_mode(
    state: ModeState,
    bg: Background,
    params: Params,
    t_end: float,
    dt: float,
    stride: int = 1,
) -> list[ModeState]:
    """Evolui um canal linearizado por Verlet; devolve o histórico igualmente espaçado."""
    if state.grid != bg.grid:
        raise ValueError("modo e fundo precisam da mesma malha")
    if t_end > bg.t_end + 1e-9:
        raise CoverageError(f"t_end = {t_end:g} além da cobertura do fundo ({bg.t_end:g})")
    steps, dt_eff = step_count(t_end - state.t, dt)
    if dt_eff > CFL_FRACTION * state.grid.h * (1.0 + 1e-12):
        raise CFLViolationError(f"dt = {dt_eff:g} excede o limite CFL")
    _check_window(state.w, state.w_t, state.grid, t_end - state.t)

    history = [state]
    w, w_t, t0 = state.w.copy(), state.w_t.copy(), state.t
    accel = _mode_acceleration(w, t0, state.ell, bg, params)
    for k in range(1, steps + 1):
        t = t0 + k * dt_eff
        v_half = w_t + 0.5 * dt_eff * accel
        v_half[0] = 0.0
        w = w + dt_eff * v_half
        w[0] = 0.0
        accel = _mode_acceleration(w, t, state.ell, bg, params)
        w_t = v_half + 0.5 * dt_eff * accel
        w_t[0] = 0.0
        if not np.isfinite(w_t).all():
            raise NumericalBlowupError(f"NaN/Inf no modo ℓ = {state.ell} em t = {t:.6g}", t)
        if k % stride == 0:
            history.append(ModeState(state.ell, state.grid, t, w.copy(), w_t.copy()))
    return history


def linearized_energy(state: ModeState, bg: Background, params: Params) -> float:
    """½‖w_t‖² + ½‖w_r‖² + ½∫ℓ(ℓ+n-2)/r² w² + ½∫V w²."""
    grid = state.grid
    r = grid.r
    weight = r ** (params.n - 1)
    coefficient = _centrifugal(state.ell, grid, params.n) + potential_profile(bg, state.t)
    density = state.w_t**2 + d_dr(state.w, grid.h) ** 2 + coefficient * state.w**2
    return 0.5 * float(trapezoid(density * weight, r))


def potential_drift_bound(history: Sequence[ModeState], bg: Background, params: Params) -> tuple[np.ndarray, np.ndarray]:
    """
    Deriva da energia linearizada e a cota ½∫_0^t∫|∂_t V| w².

    Returns:
        (|E(t) - E(0)|, cota acumulada) nos instantes do histórico
    """
    p = params.p
    r = history[0].grid.r
    weight = r ** (params.n - 1)
    times = np.array([s.t for s in history])
    energies = np.array([linearized_energy(s, bg, params) for s in history])
    rates = []
    for s in history:
        u = bg.profile(s.t)
        dV = p * (p - 1.0) * np.abs(u) ** (p - 2.0) * np.sign(u) * bg.rate(s.t)
        rates.append(0.5 * float(trapezoid(np.abs(dV) * s.w**2 * weight, r)))
    bound = np.concatenate([[0.0], np.cumsum(0.5 * (np.array(rates[1:]) + np.array(rates[:-1])) * np.diff(times))])
    return np.abs(energies - energies[0]), bound


def F_kernel(u_val, w_val, params: Params):
    """
    F[u, w] = -p(p-1)∫_0^1 |u+σw|^{p-3}(u+σw)(1-σ)dσ por Gauss-Legendre de 8 nós.

    O intervalo é dividido na troca de sinal σ* = -u/w, o que torna a regra
    exata para p inteiro até 16.
    """
    p = params.p
    if not p > 3:
        raise ValueError(f"F[u, w] exige p > 3 (recebido {p})")
    u = np.asarray(u_val, dtype=float)
    w = np.asarray(w_val, dtype=float)
    u, w = np.broadcast_arrays(u, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        split = np.where(w != 0.0, -u / w, -1.0)
    split = np.where((split > 0.0) & (split < 1.0), split, 1.0)

    def piece(lower, upper):
        half = 0.5 * (upper - lower)
        middle = 0.5 * (upper + lower)
        total = np.zeros_like(u)
        for node, weight in zip(GAUSS_NODES, GAUSS_WEIGHTS):
            sigma = middle + half * node
            x = u + sigma * w
            total = total + weight * half * np.abs(x) ** (p - 3.0) * x * (1.0 - sigma)
        return total

    integral = piece(np.zeros_like(u), split) + piece(split, np.ones_like(u))
    result = -p * (p - 1.0) * integral
    return float(result) if result.ndim == 0 else result


def kernel_identity_error(u_val, w_val, params: Params) -> np.ndarray:
    """
    Erro relativo de f(u+w) - f(u) = p|u|^{p-1}w - w²F[u, w].

    Normalizado pela soma dos módulos dos termos; nulo quando todos se anulam.
    """
    u = np.asarray(u_val, dtype=float)
    w = np.asarray(w_val, dtype=float)
    p = params.p
    lhs = np.abs(u + w) ** (p - 1.0) * (u + w) - np.abs(u) ** (p - 1.0) * u
    linear = p * np.abs(u) ** (p - 1.0) * w
    quadratic = w**2 * np.asarray(F_kernel(u, w, params))
    scale = np.abs(lhs) + np.abs(linear) + np.abs(quadratic)
    residual = np.abs(lhs - (linear - quadratic))
    return np.divide(residual, scale, out=np.zeros_like(residual), where=scale > 0.0)


@dataclass(frozen=True)
class AxisymGrid:
    """Malha (r, θ) com θ_j = (j + ½)π/N_θ; n = 3."""
    radial: RadialGrid
    num_theta: int

    def __post_init__(self) -> None:
        if self.num_theta < 4:
            raise ValueError("num_theta deve ser >= 4")

    @property
    def d_theta(self) -> float:
        return math.pi / self.num_theta

    @cached_property
    def theta(self) -> np.ndarray:
        return (np.arange(self.num_theta) + 0.5) * self.d_theta

    @cached_property
    def angular_weights(self) -> np.ndarray:
        """Pesos de sin θ normalizados para somar 1 (a medida da esfera é omitida)."""
        s = np.sin(self.theta)
        return s / s.sum()

    @cached_property
    def face_sines(self) -> np.ndarray:
        faces = np.sin(np.arange(self.num_theta + 1) * self.d_theta)
        faces[0] = 0.0
        faces[-1] = 0.0
        return faces

    @property
    def shape(self) -> tuple[int, int]:
        return self.radial.num_points, self.num_theta

    def max_dt(self) -> float:
        h = self.radial.h
        return CFL_FRACTION / math.sqrt(1.0 / h**2 + 1.0 / (self.radial.r_min * self.d_theta) ** 2)

    def extend(self, profile: np.ndarray, ell: int = 0) -> np.ndarray:
        """profile(r)·P_ℓ(cos θ)."""
        angular = np.polynomial.legendre.legval(np.cos(self.theta), [0.0] * ell + [1.0])
        return np.outer(profile, angular)


@dataclass(frozen=True)
class AxisymState:
    grid: AxisymGrid
    t: float
    w: np.ndarray
    w_t: np.ndarray

    def __post_init__(self) -> None:
        if self.w.shape != self.grid.shape or self.w_t.shape != self.grid.shape:
            raise ValueError(f"campos devem ter forma {self.grid.shape}")
        if np.any(self.w[0] != 0.0) or np.any(self.w_t[0] != 0.0):
            raise ValueError("condição de Dirichlet violada em r = 1")


class AxisymGeometry:
    """Geometria (r, θ) com medida r² dr · (sin θ dθ normalizado)."""

    def __init__(self, grid: AxisymGrid) -> None:
        self.grid = grid

    def gradient(self, fields: np.ndarray) -> list[np.ndarray]:
        """(∂_r, r⁻¹∂_θ) aplicados a campos (nt, nr, nθ)."""
        return self.derivatives(fields, 1)

    def derivatives(self, fields: np.ndarray, order: int) -> list[np.ndarray]:
        components = [np.asarray(fields, dtype=float)]
        r = self.grid.radial.r[None, :, None]
        for _ in range(order):
            next_components = []
            for c in components:
                next_components.append(d_dr(c, self.grid.radial.h, axis=1))
                next_components.append(np.gradient(c, self.grid.d_theta, axis=2, edge_order=2) / r)
            components = next_components
        return components

    def integrate(self, density: np.ndarray) -> float:
        r = self.grid.radial.r
        radial = density @ self.grid.angular_weights
        return float(trapezoid(radial * r**2, r))

    def lp(self, f: np.ndarray, q: float) -> float:
        if np.isinf(q):
            return float(np.max(np.abs(f), initial=0.0))
        return self.integrate(np.abs(f) ** q) ** (1.0 / q)


def _axisym_laplacian(w: np.ndarray, grid: AxisymGrid) -> np.ndarray:
    radial = grid.radial
    r = radial.r[:, None]
    out = np.zeros_like(w)
    h = radial.h
    out[1:-1] = (w[2:] - 2.0 * w[1:-1] + w[:-2]) / h**2 + 2.0 / r[1:-1] * (w[2:] - w[:-2]) / (2.0 * h)
    faces = grid.face_sines
    left = np.concatenate([w[:, :1], w[:, :-1]], axis=1)
    right = np.concatenate([w[:, 1:], w[:, -1:]], axis=1)
    angular = (faces[1:] * (right - w) - faces[:-1] * (w - left)) / (np.sin(grid.theta) * grid.d_theta**2)
    out[1:-1] += angular[1:-1] / r[1:-1] ** 2
    return out


def _axisym_acceleration(w: np.ndarray, t: float, grid: AxisymGrid, bg: Background, f: NonlinearitySpec) -> np.ndarray:
    u = bg.profile(t)[:, None]
    accel = _axisym_laplacian(w, grid)
    accel[1:-1] -= (f.force(u + w) - f.force(u))[1:-1]
    accel[0] = 0.0
    accel[-1] = 0.0
    return accel


def evolve_axisym(
    w0: np.ndarray,
    w1: np.ndarray,
    grid: AxisymGrid,
    bg: Background,
    params: Params,
    t_end: float,
    dt: Optional[float] = None,
    stride: int = 1,
) -> list[AxisymState]:
    """
    Evolui □w + f(u+w) - f(u) = 0 em (r, θ) para n = 3.

    Args:
        w0, w1: Dados (nr, nθ) com w = 0 em r = 1
        grid: Malha axissimétrica (mesma malha radial do fundo)
        bg: Fundo radial
        params: Parâmetros (n deve ser 3)
        t_end: Instante final
        dt: Passo (padrão: limite CFL)
        stride: Passos entre estados guardados

    Returns:
        Histórico igualmente espaçado
    """
    if params.n != 3:
        raise ValueError("a evolução axissimétrica só existe para n = 3")
    if grid.radial != bg.grid:
        raise ValueError("malha radial difere da malha do fundo")
    if t_end > bg.t_end + 1e-9:
        raise CoverageError(f"t_end = {t_end:g} além da cobertura do fundo ({bg.t_end:g})")
    limit = grid.max_dt()
    steps, dt_eff = step_count(t_end, dt if dt is not None else limit)
    if dt_eff > limit * (1.0 + 1e-12):
        raise CFLViolationError(f"dt = {dt_eff:g} excede o limite CFL {limit:g}")
    radial_w0 = np.max(np.abs(w0), axis=1)
    radial_w1 = np.max(np.abs(w1), axis=1)
    _check_window(radial_w0, radial_w1, grid.radial, t_end)

    f = NonlinearitySpec(params.p)
    w, w_t = np.array(w0, dtype=float), np.array(w1, dtype=float)
    history = [AxisymState(grid, 0.0, w.copy(), w_t.copy())]
    accel = _axisym_acceleration(w, 0.0, grid, bg, f)
    for k in range(1, steps + 1):
        t = k * dt_eff
        v_half = w_t + 0.5 * dt_eff * accel
        v_half[0] = 0.0
        w = w + dt_eff * v_half
        w[0] = 0.0
        accel = _axisym_acceleration(w, t, grid, bg, f)
        w_t = v_half + 0.5 * dt_eff * accel
        w_t[0] = 0.0
        if not np.isfinite(w_t).all():
            raise NumericalBlowupError(f"NaN/Inf na evolução axissimétrica em t = {t:.6g}", t)
        if k % stride == 0:
            history.append(AxisymState(grid, t, w.copy(), w_t.copy()))
    return history


def M_norm(
    times: np.ndarray,
    fields: np.ndarray,
    geometry: FieldGeometry,
    m: int,
    q: float,
    r_exp: float,
    n: int,
) -> float:
    """
    M(T) = ‖w‖_{Y^{∞,2;m+1}} + ‖w‖_{Y^{q,r;m}}, com m limitado a 1.

    Raises:
        ValueError: se (q, r_exp) não pertence à família q = 2/δ, r = 2n/(n-2-δ), 0 <= δ < 1
    """
    if sobolev_extended_delta(q, r_exp, n) is None:
        raise ValueError(f"par (q, r) = ({q}, {r_exp}) inadmissível para n = {n}")
    if m > 1:
        LOGGER.warning("m = %d reduzido para 1 na malha discreta", m)
        m = 1
    return (
        spacetime_norm(times, fields, geometry, np.inf, 2.0, m + 1)
        + spacetime_norm(times, fields, geometry, q, r_exp, m)
    )


@dataclass
class PerturbationShape:
    """Forma radial da perturbação e seu harmônico ℓ."""
    profile_u: np.ndarray
    profile_v: np.ndarray
    ell: int = 0

    def validate(self, grid: RadialGrid, params: Params) -> None:
        report = nonlinear_sequence(self.profile_u, self.profile_v, grid, params, N=1)
        if not report.passed:
            raise ValueError(f"forma de perturbação incompatível (falha em j = {report.first_failure()})")


@dataclass
class FieldRun:
    """Campos (nt, ...) com suas derivadas temporais e a geometria espacial."""
    times: np.ndarray
    values: np.ndarray
    rates: np.ndarray
    geometry: FieldGeometry

    @classmethod
    def from_radial(cls, history: Sequence[RadialState], n: int) -> "FieldRun":
        return cls(
            np.array([s.t for s in history]),
            np.stack([s.u for s in history]),
            np.stack([s.v for s in history]),
            RadialGeometry(history[0].grid, n),
        )

    @classmethod
    def background_on_axisym(cls, bg: Background, grid: AxisymGrid, times: np.ndarray) -> "FieldRun":
        ones = np.ones(grid.num_theta)
        values = np.stack([np.outer(bg.profile(t), ones) for t in times])
        rates = np.stack([np.outer(bg.rate(t), ones) for t in times])
        return cls(np.asarray(times, dtype=float), values, rates, AxisymGeometry(grid))

    @classmethod
    def from_axisym(cls, history: Sequence[AxisymState], bg: Optional[Background] = None) -> "FieldRun":
        """Campos w (ou u + w quando o fundo é dado)."""
        grid = history[0].grid
        times = np.array([s.t for s in history])
        values = np.stack([s.w for s in history])
        rates = np.stack([s.w_t for s in history])
        if bg is not None:
            base = cls.background_on_axisym(bg, grid, times)
            values = values + base.values
            rates = rates + base.rates
        return cls(times, values, rates, AxisymGeometry(grid))


@dataclass
class GronwallReport:
    times: np.ndarray
    A: np.ndarray
    B: np.ndarray
    E_u: np.ndarray
    E_v: np.ndarray
    E_w: np.ndarray
    w0_norm_sq: float
    K: float
    C: float
    log_bound: np.ndarray
    decomposition_residual: float
    satisfied: bool

    @property
    def bound(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.where(self.log_bound < 700.0, np.exp(np.minimum(self.log_bound, 700.0)), np.inf)

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "C": self.C,
            "w0_norm_sq": self.w0_norm_sq,
            "decomposition_residual": self.decomposition_residual,
            "satisfied": self.satisfied,
            "max_E_w": float(np.max(self.E_w)),
        }


def gronwall_constant(K: float, p: float) -> float:
    """C = 2^p · max(1, (p/2) K^{p-1})."""
    return 2.0**p * max(1.0, 0.5 * p * K ** (p - 1.0))


def gronwall_check(u_run: FieldRun, v_run: FieldRun, params: Params) -> GronwallReport:
    """
    Decomposição E(v) = E(u) + A(t) + B(t) e a cota E(w) <= C e^{Ct}(E(w0) + ‖w0‖²).

    Raises:
        ValueError: se as execuções não compartilham instantes e malha
    """
    if u_run.values.shape != v_run.values.shape or not np.array_equal(u_run.times, v_run.times):
        raise ValueError("execuções u e v com discretizações diferentes")
    p = params.p
    geometry = u_run.geometry
    u, ut = u_run.values, u_run.rates
    v, vt = v_run.values, v_run.rates
    w, wt = v - u, vt - ut
    grad_u = geometry.derivatives(u, 1)
    grad_w = [gv - gu for gv, gu in zip(geometry.derivatives(v, 1), grad_u)]
    grad_v = [gu + gw for gu, gw in zip(grad_u, grad_w)]
    fu = np.abs(u) ** (p - 1.0) * u

    def energy_density(x, xt, grad):
        return 0.5 * (xt**2 + sum(g**2 for g in grad)) + np.abs(x) ** (p + 1.0) / (p + 1.0)

    density_A = 0.5 * (wt**2 + sum(g**2 for g in grad_w)) + (
        (np.abs(v) ** (p + 1.0) - np.abs(u) ** (p + 1.0)) / (p + 1.0) - fu * w
    )
    density_B = ut * wt + sum(gu * gw for gu, gw in zip(grad_u, grad_w)) + fu * w
    density_u = energy_density(u, ut, grad_u)
    density_v = energy_density(v, vt, grad_v)
    density_w = energy_density(w, wt, grad_w)

    def series(density):
        return np.array([geometry.integrate(density[i]) for i in range(density.shape[0])])

    A, B = series(density_A), series(density_B)
    E_u, E_v, E_w = series(density_u), series(density_v), series(density_w)
    w0_norm_sq = geometry.integrate(w[0] ** 2)
    K = float(np.max(np.abs(u) + np.abs(ut), initial=0.0))
    C = gronwall_constant(K, p)
    seed = E_w[0] + w0_norm_sq
    times = u_run.times - u_run.times[0]
    if seed > 0.0:
        log_bound = math.log(C) + C * times + math.log(seed)
        positive = E_w > 0.0
        satisfied = bool(np.all(np.log(E_w[positive]) <= log_bound[positive] + 1e-12))
    else:
        log_bound = np.full_like(times, -np.inf)
        satisfied = bool(np.all(E_w <= 0.0))
    scale = max(1.0, float(np.max(np.abs(E_v))))
    residual = float(np.max(np.abs(E_v - E_u - A - B))) / scale
    return GronwallReport(u_run.times, A, B, E_u, E_v, E_w, w0_norm_sq, K, C, log_bound, residual, satisfied)


def linearized_gronwall(history: Sequence[ModeState], bg: Background, params: Params, slack: float = 5e-3) -> GronwallReport:
    """
    Cota a posteriori de um canal linearizado: E(t) <= E(0) + B(t).

    A(t) é a deriva E(t) - E(0) e B(t) a cota acumulada ½∫_0^t∫|∂_t V| w²
    (ver ``potential_drift_bound``). O coeficiente da cota linear é 1.

    Args:
        slack: folga relativa a E(0) para o erro de discretização da energia
    """
    grid = history[0].grid
    times = np.array([s.t for s in history])
    E_w = np.array([linearized_energy(s, bg, params) for s in history])
    drift, B = potential_drift_bound(history, bg, params)
    A = E_w - E_w[0]
    tolerance = slack * E_w[0]
    excess = float(np.max(drift - B, initial=0.0))
    satisfied = bool(np.all(drift <= B + tolerance))
    seed = E_w[0] + B
    with np.errstate(divide="ignore"):
        log_bound = np.where(seed > 0.0, np.log(np.where(seed > 0.0, seed, 1.0)), -np.inf)
    K = float(max(np.max(np.abs(bg.profile(t)) + np.abs(bg.rate(t))) for t in times))
    w0_norm_sq = RadialGeometry(grid, params.n).integrate(history[0].w ** 2)
    residual = max(0.0, excess) / E_w[0] if E_w[0] > 0.0 else excess
    if not satisfied:
        LOGGER.warning("Deriva do canal ℓ = %d excede a cota em %.3g", history[0].ell, excess)
    return GronwallReport(times, A, B, np.zeros_like(E_w), E_w.copy(), E_w, w0_norm_sq, K, 1.0, log_bound, residual, satisfied)


@dataclass
class StabilityRecord:
    """Histórico de M(t) de um membro da varredura."""
    epsilon: float
    mode: str
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    M: np.ndarray = field(default_factory=lambda: np.zeros(0))
    E_w: np.ndarray = field(default_factory=lambda: np.zeros(0))
    bound: np.ndarray = field(default_factory=lambda: np.zeros(0))
    verdict: str = "bounded"
    growth_factor: float = 0.0
    error: Optional[str] = None
    gronwall: Optional[GronwallReport] = None

    def __post_init__(self) -> None:
        if np.any(np.asarray(self.M) < 0):
            raise ValueError("M deve ser não negativo")

    @property
    def final_M(self) -> float:
        return float(self.M[-1]) if len(self.M) else math.nan

    def to_rows(self) -> list[tuple]:
        bound = self.bound if len(self.bound) == len(self.times) else np.full(len(self.times), math.nan)
        return [
            (self.epsilon, float(t), float(m), float(e), float(b))
            for t, m, e, b in zip(self.times, self.M, self.E_w, bound)
        ]


def _checkpoints(count: int, pieces: int) -> list[int]:
    """Índices finais (exclusivos) dos prefixos usados para M(t); o primeiro tem >= 3 instantes."""
    first = max(3, count // pieces)
    marks = sorted(set(np.linspace(first, count, pieces).astype(int).tolist()))
    return [m for m in marks if m >= 3]


def _M_history(times, fields, geometry, m, q, r_exp, n, pieces):
    if times.size < 3:
        raise ValueError(f"histórico curto demais para M(t): {times.size} instantes")
    marks = _checkpoints(times.size, pieces)
    values = np.array([M_norm(times[:j], fields[:j], geometry, m, q, r_exp, n) for j in marks])
    return times[np.array(marks) - 1], values, marks


def _classify(values: np.ndarray) -> tuple[str, float]:
    initial, final = float(values[0]), float(values[-1])
    if initial == 0.0:
        return ("bounded", 0.0) if final == 0.0 else ("grew", math.inf)
    growth = final / initial
    return ("bounded" if final <= GROWTH_LIMIT * initial else "grew"), growth


def _free_energy(geometry: FieldGeometry, fields: np.ndarray, rates: np.ndarray) -> np.ndarray:
    grads = geometry.derivatives(fields, 1)
    density = 0.5 * (rates**2 + sum(g**2 for g in grads))
    return np.array([geometry.integrate(density[i]) for i in range(density.shape[0])])


@dataclass
class SweepSettings:
    """Parâmetros numéricos compartilhados pelos membros da varredura."""
    t_end: float
    dt: float
    stride: int = 1
    num_theta: int = 16
    delta: float = 0.5
    m: int = 1
    checkpoints: int = 10
    modes: tuple[str, ...] = ("linearized", "axisym")


def _run_member(epsilon: float, mode: str, shape: PerturbationShape, bg: Background, params: Params, settings: SweepSettings) -> StabilityRecord:
    q, r_exp = sobolev_strichartz_pair(settings.delta, params.n)
    grid = bg.grid
    if mode == "linearized":
        start = ModeState(shape.ell, grid, 0.0, epsilon * shape.profile_u, epsilon * shape.profile_v)
        history = evolve_mode(start, bg, params, settings.t_end, settings.dt, settings.stride)
        geometry: FieldGeometry = RadialGeometry(grid, params.n)
        times = np.array([s.t for s in history])
        fields = np.stack([s.w for s in history])
        rates = np.stack([s.w_t for s in history])
        gronwall = linearized_gronwall(history, bg, params)
    elif mode == "axisym":
        agrid = AxisymGrid(grid, settings.num_theta)
        w0 = agrid.extend(epsilon * shape.profile_u, shape.ell)
        w1 = agrid.extend(epsilon * shape.profile_v, shape.ell)
        dt = min(settings.dt, agrid.max_dt())
        history = evolve_axisym(w0, w1, agrid, bg, params, settings.t_end, dt, settings.stride)
        geometry = AxisymGeometry(agrid)
        times = np.array([s.t for s in history])
        fields = np.stack([s.w for s in history])
        rates = np.stack([s.w_t for s in history])
        gronwall = gronwall_check(
            FieldRun.background_on_axisym(bg, agrid, times),
            FieldRun.from_axisym(history, bg),
            params,
        )
    else:
        raise ValueError(f"modo de varredura desconhecido: {mode}")

    checkpoint_times, values, marks = _M_history(times, fields, geometry, settings.m, q, r_exp, params.n, settings.checkpoints)
    energies = _free_energy(geometry, fields, rates)[np.array(marks) - 1]
    bound = gronwall.bound[np.array(marks) - 1]
    verdict, growth = _classify(values)
    return StabilityRecord(epsilon, mode, checkpoint_times, values, energies, bound, verdict, growth, None, gronwall)


async def stability_sweep_async(
    epsilons: Sequence[float],
    shape: PerturbationShape,
    bg: Background,
    params: Params,
    settings: SweepSettings,
) -> list[StabilityRecord]:
    """Executa os membros em paralelo (threads); erros por membro são registrados."""
    shape.validate(bg.grid, params)
    jobs = []
    for mode in settings.modes:
        if mode == "axisym" and params.n != 3:
            LOGGER.info("Modo axissimétrico ignorado para n = %d", params.n)
            continue
        for epsilon in epsilons:
            jobs.append((float(epsilon), mode))

    async def run(epsilon: float, mode: str) -> StabilityRecord:
        try:
            return await asyncio.to_thread(_run_member, epsilon, mode, shape, bg, params, settings)
        except (SolverError, ValueError) as exc:
            LOGGER.error("Membro ε = %g (%s) falhou: %s", epsilon, mode, exc, exc_info=True)
            return StabilityRecord(epsilon, mode, verdict="error", growth_factor=math.nan, error=str(exc))

    return list(await asyncio.gather(*(run(e, m) for e, m in jobs)))


def stability_sweep(
    epsilons: Sequence[float],
    shape: PerturbationShape,
    bg: Background,
    params: Params,
    settings: SweepSettings,
) -> list[StabilityRecord]:
    return asyncio.run(stability_sweep_async(epsilons, shape, bg, params, settings))


def linear_response_spread(records: Sequence[StabilityRecord], mode: str) -> float:
    """|ρ₁ - ρ₂| / max(ρ₁, ρ₂) para ρ = M(t_end)/ε nos dois menores ε não nulos."""
    members = sorted((r for r in records if r.mode == mode and r.epsilon > 0 and r.error is None), key=lambda r: r.epsilon)
    if len(members) < 2:
        raise ValueError(f"modo {mode}: menos de dois membros válidos")
    first, second = (r.final_M / r.epsilon for r in members[:2])
    return abs(first - second) / max(first, second)

