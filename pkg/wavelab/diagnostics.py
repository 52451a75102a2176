"""Diagnósticos transversais sobre execuções já concluídas.

Decaimento ponderado, desigualdade de Hardy em intervalos, normas dos dados,
monitor de Strichartz e históricos de Sobolev. Nada aqui evolui a EDP: as
funções recebem históricos de `RadialState` e devolvem relatórios.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid

from .core.errors import DomainError
from .core.models import Params, RadialGrid, RadialState, TimeSeries
from .core.norms import (
    PairClass,
    RadialGeometry,
    classify_pair,
    d2_dr2,
    d_dr,
    is_admissible,
    is_endpoint,
    japanese_bracket,
    lp_norm,
    sobolev_extended_delta,
    sobolev_norm,
    weighted_sobolev_norm,
    y_norm,
)

LOGGER = logging.getLogger(__name__)

MIN_DECAY_DURATION = 20.0
HALF_SLACK = 1.2
HARDY_INTERVAL = (0.05, 20.0)
HARDY_MAX_DEGREE = 6


def half_verdict(times: np.ndarray, values: np.ndarray, slack: float = HALF_SLACK) -> bool:
    """Limitada se o máximo da segunda metade <= slack × máximo da primeira."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    middle = times[0] + 0.5 * (times[-1] - times[0])
    first = values[times <= middle]
    last = values[times > middle]
    if last.size == 0:
        return True
    head = float(first.max(initial=0.0))
    return bool(float(last.max()) <= slack * head)


def _check_history(history: Sequence[RadialState]) -> np.ndarray:
    if len(history) < 2:
        raise ValueError("histórico precisa de pelo menos 2 instantes")
    times = np.array([s.t for s in history])
    steps = np.diff(times)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ValueError("histórico precisa ser igualmente espaçado no tempo")
    return times


@dataclass
class DecayReport:
    """Q(t) = sup_r r^{n/2-1}⟨t+r⟩^{1/2}⟨t-r⟩^{1/2}|u| e o máximo corrente."""
    times: np.ndarray
    Q: np.ndarray
    running_max: np.ndarray
    bracket_sup: np.ndarray
    bounded: bool
    bracket_bounded: bool

    def __post_init__(self) -> None:
        if np.any(self.Q < 0):
            raise ValueError("Q(t) deve ser não negativo")

    @property
    def C_emp(self) -> float:
        return float(self.running_max[-1]) if self.running_max.size else 0.0

    def to_rows(self) -> list[tuple[float, float]]:
        return [(float(t), float(q)) for t, q in zip(self.times, self.Q)]

    def to_dict(self) -> dict:
        return {
            "C_emp": self.C_emp,
            "bounded": self.bounded,
            "bracket_sup_max": float(self.bracket_sup.max(initial=0.0)),
            "bracket_bounded": self.bracket_bounded,
            "t_end": float(self.times[-1]),
        }


def decay_profile(history: Sequence[RadialState], params: Params, min_duration: float = MIN_DECAY_DURATION) -> DecayReport:
    """
    Calcula Q(t) e ⟨t⟩‖u(t)‖_∞ em cada instantâneo.

    Args:
        history: Instantâneos igualmente espaçados começando em t = 0
        params: Parâmetros (n, p)
        min_duration: Duração mínima exigida

    Returns:
        DecayReport com vereditos pela comparação entre as metades

    Raises:
        ValueError: se a execução é curta demais
    """
    times = _check_history(history)
    if times[-1] - times[0] < min_duration:
        raise ValueError(f"execução curta demais: {times[-1] - times[0]:g} < {min_duration:g}")
    r = history[0].grid.r
    radial_weight = r ** (params.n / 2.0 - 1.0)
    Q = np.empty(times.size)
    bracket_sup = np.empty(times.size)
    for i, state in enumerate(history):
        t = state.t
        weight = radial_weight * np.sqrt(japanese_bracket(t + r) * japanese_bracket(t - r))
        Q[i] = float(np.max(weight * np.abs(state.u)))
        bracket_sup[i] = float(japanese_bracket(t)) * float(np.max(np.abs(state.u)))
    report = DecayReport(
        times,
        Q,
        np.maximum.accumulate(Q),
        bracket_sup,
        half_verdict(times, Q),
        half_verdict(times, bracket_sup),
    )
    LOGGER.info("Perfil de decaimento: C_emp = %.6g, limitado = %s", report.C_emp, report.bounded)
    return report


@dataclass
class HardyResult:
    lhs: float
    rhs_gradient: float
    rhs_mass: float
    ratio: Optional[float]

    @property
    def rhs(self) -> float:
        return self.rhs_gradient + self.rhs_mass

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs_gradient": self.rhs_gradient,
            "rhs_mass": self.rhs_mass,
            "ratio": self.ratio,
        }


def hardy_check(
    V: Union[Callable[[np.ndarray], np.ndarray], np.ndarray],
    interval: tuple[float, float],
    n: int,
    num_quad: int = 2001,
) -> HardyResult:
    """
    Lados da desigualdade sup s^{n/2-1}|V| <= C[(∫s^{n-1}V'²)^{1/2} + |I|^{-1}(∫s^{n-1}V²)^{1/2}].

    Args:
        V: Função vetorizada ou amostras em num_quad nós igualmente espaçados de I
        interval: (a, b) com 0 < a < b < ∞
        n: Dimensão
        num_quad: Número de nós de quadratura

    Returns:
        HardyResult; ratio é None quando o lado direito se anula

    Raises:
        DomainError: para intervalos degenerados
    """
    a, b = (float(x) for x in interval)
    if not (math.isfinite(a) and math.isfinite(b)) or a <= 0.0 or b <= a:
        raise DomainError(f"intervalo degenerado: [{a:g}, {b:g}]")
    s = np.linspace(a, b, num_quad)
    values = np.asarray(V(s) if callable(V) else V, dtype=float)
    if values.shape != s.shape:
        raise ValueError(f"amostras devem ter forma ({num_quad},)")
    slope = np.gradient(values, s, edge_order=2)
    weight = s ** (n - 1)
    lhs = float(np.max(s ** (n / 2.0 - 1.0) * np.abs(values)))
    rhs_gradient = math.sqrt(float(trapezoid(weight * slope**2, s)))
    rhs_mass = math.sqrt(float(trapezoid(weight * values**2, s))) / (b - a)
    rhs = rhs_gradient + rhs_mass
    return HardyResult(lhs, rhs_gradient, rhs_mass, lhs / rhs if rhs > 0.0 else None)


@dataclass
class HardySurvey:
    """Razões de uma bateria Monte Carlo e a constante empírica C_H."""
    ratios: np.ndarray
    seed: int
    n: int

    @property
    def C_H(self) -> float:
        return float(self.ratios.max(initial=0.0))

    def to_dict(self) -> dict:
        return {
            "trials": int(self.ratios.size),
            "seed": self.seed,
            "n": self.n,
            "C_H": self.C_H,
            "median_ratio": float(np.median(self.ratios)) if self.ratios.size else 0.0,
        }


def _random_trial(rng: np.random.Generator, n: int) -> tuple[Callable, tuple[float, float]]:
    """Sorteia (V, I): polinômio de grau <= 6 ou potência s^a, a ∈ [-n/2, 2]."""
    low, high = HARDY_INTERVAL
    ends = np.sort(np.exp(rng.uniform(math.log(low), math.log(high), size=2)))
    a, b = float(ends[0]), float(ends[1])
    if b - a < 1e-3 * a:
        b = a * (1.0 + 1e-3)
    if rng.random() < 0.5:
        degree = int(rng.integers(0, HARDY_MAX_DEGREE + 1))
        polynomial = np.polynomial.Polynomial(rng.standard_normal(degree + 1), domain=[a, b], window=[0.0, 1.0])
        return polynomial, (a, b)
    exponent = float(rng.uniform(-n / 2.0, 2.0))
    scale = float(rng.standard_normal())
    return (lambda s: scale * s**exponent), (a, b)


def hardy_monte_carlo(num_trials: int, n: int, seed: int, num_quad: int = 401) -> HardySurvey:
    """Bateria de `num_trials` pares (V, I) sorteados com gerador semeado."""
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(num_trials):
        V, interval = _random_trial(rng, n)
        result = hardy_check(V, interval, n, num_quad)
        if result.ratio is not None:
            ratios.append(result.ratio)
    survey = HardySurvey(np.array(ratios), seed, n)
    LOGGER.info("Hardy Monte Carlo: %d tentativas, C_H = %.6g", num_trials, survey.C_H)
    return survey


def hardy_scaling_study(
    scales: Sequence[float],
    num_trials: int,
    n: int,
    seed: int,
    num_quad: int = 401,
) -> dict[float, float]:
    """
    C_H da mesma bateria dilatada: V_λ(s) = V(s/λ) em λI.

    Returns:
        Mapa λ -> C_H
    """
    result: dict[float, float] = {}
    for scale in scales:
        if not scale > 0:
            raise ValueError(f"fator de dilatação deve ser positivo (recebido {scale})")
        rng = np.random.default_rng(seed)
        ratios = []
        for _ in range(num_trials):
            V, (a, b) = _random_trial(rng, n)
            dilated = hardy_check(lambda s, V=V, scale=scale: V(s / scale), (scale * a, scale * b), n, num_quad)
            if dilated.ratio is not None:
                ratios.append(dilated.ratio)
        result[float(scale)] = float(max(ratios, default=0.0))
    return result


def scaling_spread(constants: dict[float, float]) -> float:
    """(max - min)/min dos valores de C_H."""
    values = np.array(list(constants.values()))
    if values.size == 0 or values.min() == 0.0:
        return 0.0
    return float((values.max() - values.min()) / values.min())


@dataclass
class DataNorm:
    C_M: float
    h2_u0: float
    h1_u1: float
    weighted_lp: float
    N0: int
    weight_exponent: float

    @property
    def full_norm(self) -> float:
        return self.C_M + self.h2_u0 + self.h1_u1 + self.weighted_lp

    def to_dict(self) -> dict:
        return {
            "C_M": self.C_M,
            "h2_u0": self.h2_u0,
            "h1_u1": self.h1_u1,
            "weighted_lp": self.weighted_lp,
            "N0": self.N0,
            "weight_exponent": self.weight_exponent,
            "full_norm": self.full_norm,
        }


def data_norm(u0: np.ndarray, u1: np.ndarray, grid: RadialGrid, params: Params, M: float) -> DataNorm:
    """
    ‖(u0, u1)‖_M = C_M + ‖u0‖_{H²} + ‖u1‖_{H¹} + ‖⟨r⟩^{n(p-1)/(p+1)-1} u0‖_{L^{p+1}}.

    C_M = ‖u0‖_{H^{N0+1,N0}(r >= M)} + ‖u1‖_{H^{N0,N0+1}(r >= M)}, com a convenção
    de `weighted_sobolev_norm`.
    """
    if not M > 1.0:
        raise ValueError(f"M deve ser > 1 (recebido {M})")
    if M >= grid.r_max:
        raise ValueError(f"M = {M:g} fora da malha (r_max = {grid.r_max:g})")
    n, p, N0 = params.n, params.p, params.N0
    C_M = weighted_sobolev_norm(u0, grid, n, N0 + 1, N0, r_from=M) + weighted_sobolev_norm(u1, grid, n, N0, N0 + 1, r_from=M)
    exponent = n * (p - 1.0) / (p + 1.0) - 1.0
    return DataNorm(
        C_M=C_M,
        h2_u0=sobolev_norm(u0, grid, n, 2),
        h1_u1=sobolev_norm(u1, grid, n, 1),
        weighted_lp=lp_norm(u0, grid, n, p + 1.0, exponent),
        N0=N0,
        weight_exponent=exponent,
    )


@dataclass
class StrichartzEntry:
    q: float
    r: float
    classification: PairClass
    admissible: bool
    sobolev_extended: bool
    endpoint: bool
    norm: float
    ratio: Optional[float] = None
    reason: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "q": None if math.isinf(self.q) else self.q,
            "r": None if math.isinf(self.r) else self.r,
            "classification": self.classification.value,
            "admissible": self.admissible,
            "sobolev_extended": self.sobolev_extended,
            "endpoint": self.endpoint,
            "norm": self.norm,
            "ratio": self.ratio,
            "reason": self.reason,
        }


def _energy_data_norm(state: RadialState, n: int) -> float:
    """‖u0‖_{Ḣ¹} + ‖u1‖_{L²}."""
    grid = state.grid
    return lp_norm(d_dr(state.u, grid.h), grid, n, 2.0) + lp_norm(state.v, grid, n, 2.0)


def strichartz_monitor(
    history: Sequence[RadialState],
    params: Params,
    pairs: Sequence[tuple[float, float]],
    linear: bool = False,
) -> list[StrichartzEntry]:
    """
    Classifica cada par (q, r) e mede ‖u‖_{L^q_t L^r_x} da execução.

    Para execuções lineares também informa a razão entre a norma e
    ‖u0‖_{Ḣ¹} + ‖u1‖_{L²}.
    """
    _check_history(history)
    n = params.n
    reference = _energy_data_norm(history[0], n) if linear else 0.0
    entries = []
    for q, r in pairs:
        q, r = float(q), float(r)
        admissible, reason = is_admissible(q, r, n)
        norm = y_norm(history, n, q, r, 0)
        ratio = norm / reference if linear and reference > 0.0 else None
        entries.append(
            StrichartzEntry(
                q=q,
                r=r,
                classification=classify_pair(q, r, n),
                admissible=admissible,
                sobolev_extended=sobolev_extended_delta(q, r, n) is not None,
                endpoint=is_endpoint(q, r, n),
                norm=norm,
                ratio=ratio,
                reason=reason,
            )
        )
    return entries


def sobolev_history(history: Sequence[RadialState], params: Params, k: int) -> TimeSeries:
    """
    S_k(t)² = Σ_{1<=a+b<=k} ‖∂_t^a ∂_r^b u(t)‖²_{L²}, com ∂_t u = v armazenado.

    Derivadas temporais de v usam diferenças centradas do histórico.
    """
    if k < 1 or k > 2:
        raise ValueError(f"k deve estar em 1..2 (recebido {k})")
    times = _check_history(history)
    grid = history[0].grid
    geometry = RadialGeometry(grid, params.n)
    u = np.stack([s.u for s in history])
    v = np.stack([s.v for s in history])
    components = [v, d_dr(u, grid.h, axis=1)]
    if k == 2:
        if times.size < 3:
            raise ValueError("k = 2 exige pelo menos 3 instantes")
        components += [
            np.gradient(v, times, axis=0, edge_order=2),
            d_dr(v, grid.h, axis=1),
            d2_dr2(u, grid.h, axis=1),
        ]
    squares = np.zeros(times.size)
    for component in components:
        squares += np.array([geometry.integrate(component[i] ** 2) for i in range(times.size)])
    values = np.sqrt(squares)
    return TimeSeries(times, values, half_verdict(times, values), {"k": k})


def l2_history(history: Sequence[RadialState], params: Params) -> TimeSeries:
    """‖u(t)‖_{L²}; o limite uniforme é esperado para p > 2n/(n-2)."""
    times = _check_history(history)
    grid = history[0].grid
    values = np.array([lp_norm(s.u, grid, params.n, 2.0) for s in history])
    threshold = 2.0 * params.n / (params.n - 2.0)
    return TimeSeries(times, values, half_verdict(times, values), {"p_threshold": threshold, "applies": params.p > threshold})


@dataclass
class PotentialIntegrability:
    """∫‖V(t)‖_∞ dt dividida em cabeça [t0, split] e cauda [split, t_end]."""
    times: np.ndarray
    sup_V: np.ndarray
    split: float
    head: float
    tail: float
    meta: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.head + self.tail

    @property
    def passed(self) -> bool:
        return bool(math.isfinite(self.total) and self.tail <= self.head)

    def to_dict(self) -> dict:
        return {"split": self.split, "head": self.head, "tail": self.tail, "total": self.total, "passed": self.passed}


def potential_sup(history: Sequence[RadialState], params: Params) -> np.ndarray:
    """sup_r V(t, r) = p‖u(t)‖_∞^{p-1} por instantâneo."""
    return np.array([params.p * float(np.max(np.abs(s.u))) ** (params.p - 1.0) for s in history])


def potential_integrability(
    history: Sequence[RadialState],
    params: Params,
    split: Optional[float] = None,
) -> PotentialIntegrability:
    times = _check_history(history)
    split = 0.5 * (times[0] + times[-1]) if split is None else float(split)
    if not times[0] < split < times[-1]:
        raise ValueError(f"corte {split:g} fora do intervalo ({times[0]:g}, {times[-1]:g})")
    sup_V = potential_sup(history, params)
    grid_t = np.union1d(times, [split])
    values = np.interp(grid_t, times, sup_V)
    head_mask = grid_t <= split
    tail_mask = grid_t >= split
    head = float(trapezoid(values[head_mask], grid_t[head_mask]))
    tail = float(trapezoid(values[tail_mask], grid_t[tail_mask]))
    return PotentialIntegrability(times, sup_V, split, head, tail)


def potential_decay_constant(history: Sequence[RadialState], params: Params) -> float:
    """max_t ⟨t⟩^{p-1} sup_r V(t, r)."""
    times = _check_history(history)
    return float(np.max(japanese_bracket(times) ** (params.p - 1.0) * potential_sup(history, params)))


def initial_energy_ratio(compact_energy: float, u0: np.ndarray, u1: np.ndarray, grid: RadialGrid, params: Params, M: float) -> float:
    """E_compact(0) / ‖(u0, u1)‖_M; zero para dados nulos."""
    norm = data_norm(u0, u1, grid, params, M).full_norm
    if norm == 0.0:
        return 0.0
    return compact_energy / norm
