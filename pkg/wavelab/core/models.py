"""Modelos de dados compartilhados usando dataclasses."""

from __future__ import annotations

from dataclasses import MISSING, dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Optional

import numpy as np

from .errors import ConfigError

MIN_GRID_POINTS = 16


@dataclass(frozen=True)
class Params:
    """Família de EDPs: dimensão espacial n, potência p e um rótulo."""
    n: int
    p: float
    label: str = ""

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"n deve ser inteiro >= 3 (recebido {self.n})")
        if not self.p > 1:
            raise ValueError(f"p deve ser > 1 (recebido {self.p})")

    @property
    def nu(self) -> float:
        """Expoente do fator conforme na equação compactificada."""
        return (self.n - 1) * self.p / 2.0 - (self.n + 3) / 2.0

    @property
    def N0(self) -> int:
        return self.n // 2 + 1

    @classmethod
    def from_dict(cls, data: dict) -> "Params":
        """Cria instância a partir de dicionário de configuração."""
        return cls(n=int(data["n"]), p=float(data["p"]), label=str(data.get("label", "")))

    def to_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "label": self.label}


@dataclass(frozen=True)
class RadialGrid:
    """Malha uniforme em r ∈ [1, r_max]."""
    r_max: float
    num_points: int
    r_min: float = 1.0

    @property
    def h(self) -> float:
        return (self.r_max - self.r_min) / (self.num_points - 1)

    @cached_property
    def r(self) -> np.ndarray:
        nodes = self.r_min + self.h * np.arange(self.num_points)
        nodes[-1] = self.r_max
        nodes.setflags(write=False)
        return nodes

    def to_dict(self) -> dict:
        return {"r_max": self.r_max, "num_points": self.num_points}


def make_grid(r_max: float, num_points: int) -> RadialGrid:
    """
    Cria a malha radial uniforme de 1 até r_max (inclusive).

    Args:
        r_max: Raio externo (> 1)
        num_points: Número de nós (>= 16)

    Returns:
        RadialGrid com espaçamento h = (r_max - 1)/(num_points - 1)
    """
    if not r_max > 1.0:
        raise ValueError(f"r_max deve ser > 1 (recebido {r_max}): domínio degenerado")
    if int(num_points) != num_points or num_points < MIN_GRID_POINTS:
        raise ValueError(f"num_points deve ser inteiro >= {MIN_GRID_POINTS} (recebido {num_points})")
    return RadialGrid(r_max=float(r_max), num_points=int(num_points))


@dataclass(frozen=True)
class RadialState:
    """Par (u, ∂_t u) no tempo t sobre uma RadialGrid."""
    grid: RadialGrid
    t: float
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        size = self.grid.num_points
        if self.u.shape != (size,) or self.v.shape != (size,):
            raise ValueError(f"campos devem ter forma ({size},): u{self.u.shape}, v{self.v.shape}")
        if self.u[0] != 0.0 or self.v[0] != 0.0:
            raise ValueError(f"condição de Dirichlet violada em r = 1: u={self.u[0]!r}, v={self.v[0]!r}")

    @classmethod
    def zeros(cls, grid: RadialGrid, t: float = 0.0) -> "RadialState":
        return cls(grid, t, np.zeros(grid.num_points), np.zeros(grid.num_points))

    @classmethod
    def from_data(cls, grid: RadialGrid, u0: np.ndarray, u1: np.ndarray, t: float = 0.0) -> "RadialState":
        """Cria estado copiando os dados; o nó de fronteira precisa já ser nulo."""
        return cls(grid, float(t), np.array(u0, dtype=float), np.array(u1, dtype=float))

    def negated(self) -> "RadialState":
        return RadialState(self.grid, self.t, -self.u, -self.v)


@dataclass(frozen=True)
class EnergyReport:
    """Energia decomposta: cinética, gradiente e potencial."""
    kinetic: float
    gradient: float
    potential: float

    def __post_init__(self) -> None:
        for name in ("kinetic", "gradient", "potential"):
            if getattr(self, name) < 0:
                raise ValueError(f"parcela de energia negativa: {name}={getattr(self, name)}")

    @property
    def total(self) -> float:
        return self.kinetic + self.gradient + self.potential

    def to_dict(self) -> dict:
        return {
            "kinetic": self.kinetic,
            "gradient": self.gradient,
            "potential": self.potential,
            "total": self.total,
        }


@dataclass
class TimeSeries:
    """Série temporal (t, valor) com veredito opcional de limitação."""
    times: np.ndarray
    values: np.ndarray
    bounded: Optional[bool] = None
    meta: dict = field(default_factory=dict)

    def to_rows(self) -> list[tuple[float, float]]:
        return [(float(t), float(v)) for t, v in zip(self.times, self.values)]


class ExperimentKind(str, Enum):
    """Experimentos nomeados executáveis pela CLI."""
    RUN_RADIAL = "run-radial"
    RUN_PENROSE = "run-penrose"
    RUN_PERTURB = "run-perturb"
    CHECK_COMPAT = "check-compat"
    DIAGNOSE = "diagnose"
    HARDY_TEST = "hardy-test"
    SWEEP = "sweep"


def _field(data: dict, key: str, path: str, kind: type, default: Any = MISSING) -> Any:
    """Lê data[key] convertendo para `kind`; erros citam o nome pontuado do campo."""
    name = f"{path}.{key}" if path else key
    if not isinstance(data, dict):
        raise ConfigError(f"campo {path or 'raiz'} deve ser um objeto")
    if key not in data or data[key] is None:
        if default is MISSING:
            raise ConfigError(f"campo obrigatório ausente: {name}")
        return default
    value = data[key]
    if kind in (int, float) and isinstance(value, bool):
        raise ConfigError(f"campo {name} deve ser numérico (recebido {value!r})")
    try:
        converted = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"campo {name} com tipo inválido: {value!r}") from None
    if kind is int and converted != value:
        raise ConfigError(f"campo {name} deve ser inteiro (recebido {value!r})")
    return converted


@dataclass(frozen=True)
class TimeSpec:
    t_end: float
    dt: Optional[float] = None
    cfl_fraction: float = 0.9
    stride: int = 1

    def resolve_dt(self, h: float) -> float:
        """dt explícito, ou cfl_fraction·h."""
        return self.dt if self.dt is not None else self.cfl_fraction * h

    @classmethod
    def from_dict(cls, data: dict) -> "TimeSpec":
        spec = cls(
            t_end=_field(data, "t_end", "time", float),
            dt=_field(data, "dt", "time", float, None),
            cfl_fraction=_field(data, "cfl_fraction", "time", float, 0.9),
            stride=_field(data, "stride", "time", int, 1),
        )
        if spec.t_end < 0:
            raise ConfigError("campo time.t_end deve ser >= 0")
        if spec.dt is not None and spec.dt <= 0:
            raise ConfigError("campo time.dt deve ser positivo")
        if not 0 < spec.cfl_fraction <= 1:
            raise ConfigError("campo time.cfl_fraction deve estar em (0, 1]")
        if spec.stride < 1:
            raise ConfigError("campo time.stride deve ser >= 1")
        return spec

    def to_dict(self) -> dict:
        return {"t_end": self.t_end, "dt": self.dt, "cfl_fraction": self.cfl_fraction, "stride": self.stride}


@dataclass
class ExperimentConfig:
    """Documento de configuração de um experimento."""
    kind: ExperimentKind
    params: Params
    grid: RadialGrid
    time: TimeSpec
    data: dict = field(default_factory=lambda: {"u0": None, "u1": None})
    output_dir: str = "out"
    seed: int = 0
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """
        Cria instância a partir do documento JSON já decodificado.

        Raises:
            ConfigError: com o nome pontuado do campo ausente ou inválido
        """
        raw_kind = _field(data, "kind", "", str)
        try:
            kind = ExperimentKind(raw_kind)
        except ValueError:
            allowed = ", ".join(k.value for k in ExperimentKind)
            raise ConfigError(f"campo kind inválido: {raw_kind!r} (esperado um de {allowed})") from None

        params_data = _field(data, "params", "", dict)
        n = _field(params_data, "n", "params", int)
        p = _field(params_data, "p", "params", float)
        try:
            params = Params(n=n, p=p, label=str(params_data.get("label", "")))
        except ValueError as exc:
            raise ConfigError(f"campo params inválido: {exc}") from None

        grid_data = _field(data, "grid", "", dict, {})
        try:
            grid = make_grid(
                _field(grid_data, "r_max", "grid", float, 12.0),
                _field(grid_data, "num_points", "grid", int, 1101),
            )
        except ValueError as exc:
            raise ConfigError(f"campo grid inválido: {exc}") from None

        time = TimeSpec.from_dict(_field(data, "time", "", dict))
        data_spec = _field(data, "data", "", dict, {})
        for key in ("u0", "u1"):
            entry = data_spec.get(key)
            if entry is not None:
                _field(entry, "profile", f"data.{key}", str)
                for number in ("amplitude", "width", "center"):
                    _field(entry, number, f"data.{key}", float, None)
        return cls(
            kind=kind,
            params=params,
            grid=grid,
            time=time,
            data={"u0": data_spec.get("u0"), "u1": data_spec.get("u1")},
            output_dir=_field(data, "output_dir", "", str, "out"),
            seed=_field(data, "seed", "", int, 0),
            options=_field(data, "options", "", dict, {}),
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "params": self.params.to_dict(),
            "grid": self.grid.to_dict(),
            "time": self.time.to_dict(),
            "data": self.data,
            "output_dir": self.output_dir,
            "seed": self.seed,
            "options": self.options,
        }
