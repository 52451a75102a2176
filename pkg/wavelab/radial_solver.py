"""Solver radial da equação de onda defocalizante fora da bola unitária.

u_tt = u'' + (n-1)/r u' - f(u) em r ∈ [1, r_max], u(t, 1) = 0, integrado por
Störmer-Verlet (kick-drift-kick). O domínio é truncado sem camadas
absorventes: a duração da execução é limitada pela velocidade finita de
propagação, o que torna o truncamento exato.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid

from .core.errors import (
    CausalityError,
    CFLViolationError,
    InconclusiveError,
    NumericalBlowupError,
    UndefinedRatioError,
)
from .core.models import EnergyReport, Params, RadialGrid, RadialState
from .core.norms import d_dr, interior_laplacian

LOGGER = logging.getLogger(__name__)

CFL_FRACTION = 0.9
MIN_NONLINEAR_POWER = 3.0


@dataclass(frozen=True)
class NonlinearitySpec:
    """f(s) = |s|^{p-1}s ou a versão truncada f_M(s) = min{|s|, M}^{p-1}s.

    M = 0 anula a não linearidade (equação linear). `focusing` inverte o
    sinal e só existe para o autoteste do detector de explosão.
    """
    p: float
    M: Optional[float] = None
    focusing: bool = False

    def __post_init__(self) -> None:
        if not self.p > 1:
            raise ValueError(f"p deve ser > 1 (recebido {self.p})")
        if self.M is not None and self.M < 0:
            raise ValueError(f"truncamento M deve ser >= 0 (recebido {self.M})")

    @classmethod
    def linear(cls, p: float = 3.0) -> "NonlinearitySpec":
        return cls(p=p, M=0.0)

    @property
    def is_linear(self) -> bool:
        return self.M == 0.0

    @property
    def sign(self) -> float:
        return -1.0 if self.focusing else 1.0

    def force(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.is_linear:
            return np.zeros_like(s)
        magnitude = np.abs(s)
        if self.M is not None:
            magnitude = np.minimum(magnitude, self.M)
        return self.sign * magnitude ** (self.p - 1.0) * s

    def primitive(self, s: np.ndarray) -> np.ndarray:
        """F(s) = ∫_0^s f, contínua através de |s| = M."""
        s = np.asarray(s, dtype=float)
        if self.is_linear:
            return np.zeros_like(s)
        p = self.p
        magnitude = np.abs(s)
        full = magnitude ** (p + 1.0) / (p + 1.0)
        if self.M is None:
            return self.sign * full
        M = self.M
        clipped = M ** (p + 1.0) / (p + 1.0) + M ** (p - 1.0) * (s**2 - M**2) / 2.0
        return self.sign * np.where(magnitude <= M, full, clipped)

    def derivative(self, s: np.ndarray, k: int) -> np.ndarray:
        """
        Derivada k-ésima da não linearidade não truncada, em forma fechada.

        Args:
            s: Pontos de avaliação
            k: Ordem (0 devolve f)

        Returns:
            c_k |s|^{p-k} (k ímpar) ou c_k |s|^{p-k-1} s (k par), c_k = p(p-1)...(p-k+1)
        """
        s = np.asarray(s, dtype=float)
        if self.is_linear:
            return np.zeros_like(s)
        if self.M is not None:
            raise ValueError("derivadas em forma fechada só existem para f não truncada")
        coefficient = math.prod(self.p - j for j in range(k))
        magnitude = np.abs(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            if k % 2 == 1:
                values = magnitude ** (self.p - k)
            else:
                values = magnitude ** (self.p - k - 1.0) * s
        values = np.where(magnitude == 0.0, 0.0 if self.p > k else np.nan, values)
        return self.sign * coefficient * values


@dataclass(frozen=True)
class BlowupVerdict:
    """Resultado do detector de explosão."""
    exceeded: bool
    threshold: float
    first_time: Optional[float] = None
    location: Optional[float] = None

    def __post_init__(self) -> None:
        if self.exceeded != (self.first_time is not None):
            raise ValueError("exceeded deve valer exatamente quando first_time está presente")


@dataclass
class ObservationLog:
    """Registro de observações ao longo de uma evolução."""
    times: list[float] = field(default_factory=list)
    energies: list[Optional[EnergyReport]] = field(default_factory=list)
    sup_u: list[float] = field(default_factory=list)
    sup_location: list[float] = field(default_factory=list)
    strauss: list[float] = field(default_factory=list)
    snapshots: list[RadialState] = field(default_factory=list)
    blowup_time: Optional[float] = None

    CSV_HEADER = ("t", "E_total", "E_kin", "E_grad", "E_pot", "sup_u", "strauss_ratio")

    def __len__(self) -> int:
        return len(self.times)

    def record(self, state: RadialState, nl: NonlinearitySpec, params: Params, keep_snapshot: bool) -> None:
        index = int(np.argmax(np.abs(state.u)))
        self.times.append(state.t)
        self.sup_u.append(float(abs(state.u[index])))
        self.sup_location.append(float(state.grid.r[index]))
        self.energies.append(None if nl.focusing else energy(state, nl, params))
        try:
            self.strauss.append(strauss_ratio(state, params))
        except UndefinedRatioError:
            self.strauss.append(math.nan)
        if keep_snapshot:
            self.snapshots.append(state)

    def total_energy(self) -> np.ndarray:
        return np.array([e.total if e is not None else math.nan for e in self.energies])

    def max_relative_drift(self) -> float:
        """max_t |E(t) - E(0)| / E(0); zero quando E(0) = 0 e a energia permanece nula."""
        totals = self.total_energy()
        if totals.size == 0:
            return 0.0
        deviation = float(np.max(np.abs(totals - totals[0])))
        if totals[0] == 0.0:
            return 0.0 if deviation == 0.0 else math.inf
        return deviation / totals[0]

    def to_rows(self) -> list[tuple]:
        rows = []
        for t, e, sup, ratio in zip(self.times, self.energies, self.sup_u, self.strauss):
            if e is None:
                parts = (math.nan,) * 4
            else:
                parts = (e.total, e.kinetic, e.gradient, e.potential)
            rows.append((t, *parts, sup, ratio))
        return rows


def check_nonlinear_power(nl: NonlinearitySpec) -> None:
    if not nl.is_linear and nl.p < MIN_NONLINEAR_POWER:
        raise ValueError(f"solvers não lineares exigem p >= {MIN_NONLINEAR_POWER} (recebido {nl.p})")


def _acceleration(u: np.ndarray, grid: RadialGrid, nl: NonlinearitySpec, n: int) -> np.ndarray:
    dv = interior_laplacian(u, grid.r, grid.h, n)
    dv[1:-1] -= nl.force(u[1:-1])
    return dv


def rhs(state: RadialState, nl: NonlinearitySpec, params: Params) -> tuple[np.ndarray, np.ndarray]:
    """
    Lado direito do sistema de primeira ordem.

    Returns:
        (du, dv) com du = v e dv = u'' + (n-1)/r u' - f(u) no interior, zero nos extremos
    """
    return state.v.copy(), _acceleration(state.u, state.grid, nl, params.n)


def _check_cfl(dt: float, grid: RadialGrid, cfl_fraction: float) -> None:
    if dt <= 0:
        raise CFLViolationError(f"dt deve ser positivo (recebido {dt})")
    limit = cfl_fraction * grid.h
    if dt > limit * (1.0 + 1e-12):
        raise CFLViolationError(f"dt = {dt:g} excede o limite CFL {limit:g} (h = {grid.h:g})")


def _kick_drift_kick(u, v, accel, dt, grid, nl, n):
    v_half = v + 0.5 * dt * accel
    v_half[0] = 0.0
    u_new = u + dt * v_half
    u_new[0] = 0.0
    accel_new = _acceleration(u_new, grid, nl, n)
    v_new = v_half + 0.5 * dt * accel_new
    v_new[0] = 0.0
    return u_new, v_new, accel_new


def step(
    state: RadialState,
    dt: float,
    nl: NonlinearitySpec,
    params: Params,
    cfl_fraction: float = CFL_FRACTION,
) -> RadialState:
    """Um passo de Störmer-Verlet (kick-drift-kick)."""
    _check_cfl(dt, state.grid, cfl_fraction)
    accel = _acceleration(state.u, state.grid, nl, params.n)
    u, v, _ = _kick_drift_kick(state.u, state.v, accel, dt, state.grid, nl, params.n)
    return RadialState(state.grid, state.t + dt, u, v)


def support_radius(u0: np.ndarray, u1: np.ndarray, grid: RadialGrid, tol: float = 0.0) -> float:
    """Maior raio onde os dados iniciais são não nulos (1 para dados nulos)."""
    active = np.flatnonzero((np.abs(u0) > tol) | (np.abs(u1) > tol))
    if active.size == 0:
        return grid.r_min
    return float(grid.r[active[-1]])


def causal_window_check(state: RadialState, t_end: float) -> None:
    """Garante R0 + (t_end - t) + 2h <= r_max."""
    grid = state.grid
    radius = support_radius(state.u, state.v, grid)
    required = radius + (t_end - state.t) + 2.0 * grid.h
    if required > grid.r_max + 1e-12:
        raise CausalityError(
            f"janela causal excedida: t_end = {t_end:g} com suporte até r = {radius:g} "
            f"exige r_max >= {required:g} (atual {grid.r_max:g})",
            required_r_max=required,
        )


def step_count(t_span: float, dt: float) -> tuple[int, float]:
    """Número de passos e dt efetivo que cobrem t_span exatamente."""
    if t_span <= 0:
        return 0, dt
    count = max(1, int(math.ceil(t_span / dt - 1e-9)))
    return count, t_span / count


def evolve(
    state: RadialState,
    t_end: float,
    dt: float,
    nl: NonlinearitySpec,
    params: Params,
    observer: Optional[Callable[[RadialState], None]] = None,
    stride: int = 1,
    keep_snapshots: bool = False,
    cfl_fraction: float = CFL_FRACTION,
    check_causality: bool = True,
    raise_on_blowup: bool = True,
    stop_above: Optional[float] = None,
) -> tuple[RadialState, ObservationLog]:
    """
    Evolui o estado até t_end, observando a cada `stride` passos.

    Args:
        state: Estado inicial
        t_end: Instante final
        dt: Passo desejado (ajustado para baixo para cobrir o intervalo exatamente)
        nl: Não linearidade
        params: Parâmetros (n, p)
        observer: Callback chamado com cada estado observado
        stride: Passos entre observações; o estado final sempre entra nas séries do registro
        keep_snapshots: Guarda os estados observados no registro (igualmente espaçados)
        cfl_fraction: Fração CFL permitida
        check_causality: Aplica a pré-condição da janela causal
        raise_on_blowup: Se False, NaN/Inf apenas interrompem a evolução
        stop_above: Interrompe quando sup|u| ultrapassa este valor

    Returns:
        Estado final e registro de observações
    """
    if stride < 1:
        raise ValueError("stride deve ser >= 1")
    check_nonlinear_power(nl)
    steps, dt_eff = step_count(t_end - state.t, dt)
    _check_cfl(dt_eff, state.grid, cfl_fraction)
    if check_causality:
        causal_window_check(state, t_end)

    grid, n, t0 = state.grid, params.n, state.t
    log = ObservationLog()
    log.record(state, nl, params, keep_snapshots)
    if observer is not None:
        observer(state)

    u, v = state.u.copy(), state.v.copy()
    accel = _acceleration(u, grid, nl, n)
    current = state
    for k in range(1, steps + 1):
        u, v, accel = _kick_drift_kick(u, v, accel, dt_eff, grid, nl, n)
        t = t0 + k * dt_eff
        if not (np.isfinite(accel).all() and np.isfinite(v).all()):
            LOGGER.warning("Explosão numérica detectada em t = %.6g", t)
            log.blowup_time = t
            if raise_on_blowup:
                raise NumericalBlowupError(f"NaN/Inf detectado em t = {t:.6g} (explosão numérica)", t)
            return current, log
        current = RadialState(grid, t, u.copy(), v.copy())
        if k % stride == 0:
            log.record(current, nl, params, keep_snapshots)
            if observer is not None:
                observer(current)
        if stop_above is not None and np.max(np.abs(u)) > stop_above:
            if k % stride != 0:
                log.record(current, nl, params, keep_snapshots)
            LOGGER.info("Evolução interrompida em t = %.6g: sup|u| > %g", t, stop_above)
            return current, log
    if steps % stride != 0:
        # instantâneos ficam no passo regular; só as séries escalares recebem o estado final
        log.record(current, nl, params, keep_snapshot=False)
    LOGGER.debug("Evolução concluída: %d passos, dt = %g", steps, dt_eff)
    return current, log


def energy(state: RadialState, nl: NonlinearitySpec, params: Params) -> EnergyReport:
    """E = ½‖v‖² + ½‖∂_r u‖² + ∫F(u), medida r^{n-1} dr."""
    r = state.grid.r
    weight = r ** (params.n - 1)
    ur = d_dr(state.u, state.grid.h)
    kinetic = 0.5 * float(trapezoid(state.v**2 * weight, r))
    gradient = 0.5 * float(trapezoid(ur**2 * weight, r))
    if nl.focusing:
        raise ValueError("energia não é coerciva para a não linearidade focalizante")
    potential = float(trapezoid(nl.primitive(state.u) * weight, r))
    return EnergyReport(kinetic, gradient, potential)


def strauss_ratio(state: RadialState, params: Params) -> float:
    """sup r^{n/2-1}|u| / ‖∂_r u‖_{L²}."""
    r = state.grid.r
    ur = d_dr(state.u, state.grid.h)
    gradient = math.sqrt(float(trapezoid(ur**2 * r ** (params.n - 1), r)))
    if gradient == 0.0:
        raise UndefinedRatioError("razão de Strauss indefinida: gradiente nulo")
    return float(np.max(r ** (params.n / 2.0 - 1.0) * np.abs(state.u))) / gradient


def truncation_consistency(
    state: RadialState,
    params: Params,
    M_big: float,
    t_end: float,
    dt: float,
) -> float:
    """
    Compara as evoluções com f_{M_big} e com f não truncada, passo a passo.

    Returns:
        Máximo sobre todos os passos de ‖u_M - u‖_∞

    Raises:
        InconclusiveError: se a própria execução truncada atinge M_big em algum passo
    """
    truncated = NonlinearitySpec(params.p, M=M_big)
    full = NonlinearitySpec(params.p)
    check_nonlinear_power(full)
    steps, dt_eff = step_count(t_end - state.t, dt)
    _check_cfl(dt_eff, state.grid, CFL_FRACTION)
    causal_window_check(state, t_end)

    grid, n = state.grid, params.n
    u_m, v_m = state.u.copy(), state.v.copy()
    u_f, v_f = state.u.copy(), state.v.copy()
    accel_m = _acceleration(u_m, grid, truncated, n)
    accel_f = _acceleration(u_f, grid, full, n)
    peak = float(np.max(np.abs(u_m)))
    worst = 0.0
    for k in range(1, steps + 1):
        u_m, v_m, accel_m = _kick_drift_kick(u_m, v_m, accel_m, dt_eff, grid, truncated, n)
        u_f, v_f, accel_f = _kick_drift_kick(u_f, v_f, accel_f, dt_eff, grid, full, n)
        if not (np.isfinite(u_m).all() and np.isfinite(u_f).all()):
            t = state.t + k * dt_eff
            raise NumericalBlowupError(f"NaN/Inf detectado em t = {t:.6g} (explosão numérica)", t)
        peak = max(peak, float(np.max(np.abs(u_m))))
        worst = max(worst, float(np.max(np.abs(u_m - u_f))))
    if peak >= M_big:
        raise InconclusiveError(f"execução truncada atingiu sup|u| = {peak:g} >= M = {M_big:g}")
    return worst


def detect_blowup(log: ObservationLog, threshold: float) -> BlowupVerdict:
    """Primeiro instante em que sup|u| excede estritamente o limiar."""
    if len(log) == 0:
        raise ValueError("registro de observações vazio")
    for t, sup, where in zip(log.times, log.sup_u, log.sup_location):
        if sup > threshold or not math.isfinite(sup):
            return BlowupVerdict(True, threshold, first_time=t, location=where)
    if log.blowup_time is not None:
        return BlowupVerdict(True, threshold, first_time=log.blowup_time)
    return BlowupVerdict(False, threshold)
