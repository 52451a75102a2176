"""Hierarquia de exceções do wavelab."""


class WaveLabError(Exception):
    """Erro base de todo o pacote."""


class ConfigError(WaveLabError, ValueError):
    """Configuração de experimento inválida ou ilegível."""


class DomainError(WaveLabError, ValueError):
    """Argumento fora do domínio de uma operação (ponto fora do diamante, intervalo degenerado)."""


class UndefinedRatioError(WaveLabError, ArithmeticError):
    """Razão com denominador nulo (por exemplo, gradiente identicamente zero)."""


class InconclusiveError(WaveLabError):
    """Verificação cujo contrato não pôde ser avaliado."""


class SolverError(WaveLabError, RuntimeError):
    """Falha durante uma evolução numérica."""


class NumericalBlowupError(SolverError):
    """NaN ou Inf detectado no estado."""

    def __init__(self, message: str, t: float) -> None:
        super().__init__(message)
        self.t = t


class CFLViolationError(SolverError, ValueError):
    """Passo de tempo acima do limite de estabilidade."""


class CausalityError(SolverError, ValueError):
    """Janela causal excedida; carrega o r_max necessário."""

    def __init__(self, message: str, required_r_max: float) -> None:
        super().__init__(message)
        self.required_r_max = required_r_max


class CoverageError(SolverError, ValueError):
    """Consulta fora da cobertura de um fundo armazenado."""
