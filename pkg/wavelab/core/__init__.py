"""Tipos, erros e normas compartilhados pelos solvers e diagnósticos."""
from .cache import RunCache
from .errors import WaveLabError
from .models import Params, RadialGrid, RadialState, make_grid

__all__ = ["RunCache", "WaveLabError", "Params", "RadialGrid", "RadialState", "make_grid"]
