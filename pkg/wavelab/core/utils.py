"""Funções utilitárias: cores para renderização e formatação de tempo."""

from typing import Tuple


def hex_to_rgb(hex_color: str) -> Tuple[int, int, int]:
    """
    Converte cor hexadecimal para RGB.

    Args:
        hex_color: Cor em formato hex (#RRGGBB ou RRGGBB)

    Returns:
        Tupla (R, G, B)
    """
    digits = hex_color.lstrip("#")
    if len(digits) != 6:
        raise ValueError("Cor hex deve ter 6 caracteres")
    return tuple(int(digits[i:i + 2], 16) for i in (0, 2, 4))


def generate_color_gradient(stops: list[str], steps: int) -> list[Tuple[int, int, int]]:
    """
    Gera uma paleta RGB interpolando linearmente entre várias cores.

    Args:
        stops: Cores de controle em hex, da menor para a maior intensidade
        steps: Número de cores na paleta (>= 2)

    Returns:
        Lista de tuplas (R, G, B)
    """
    if len(stops) < 2:
        raise ValueError("São necessárias pelo menos duas cores de controle")
    if steps < 2:
        raise ValueError("steps deve ser >= 2")
    anchors = [hex_to_rgb(color) for color in stops]
    segments = len(anchors) - 1
    palette = []
    for i in range(steps):
        position = i / (steps - 1) * segments
        index = min(int(position), segments - 1)
        ratio = position - index
        start, end = anchors[index], anchors[index + 1]
        palette.append(tuple(
            max(0, min(255, round(a + (b - a) * ratio))) for a, b in zip(start, end)
        ))
    return palette


def format_elapsed(seconds: float) -> str:
    """Formata segundos como "Xh Ymin Z.ZZseg".

    Examples:
        >>> format_elapsed(3661.5)
        '1h 1min 1.50seg'
        >>> format_elapsed(-2)
        '0h 0min 0.00seg'
    """
    seconds = max(0.0, float(seconds))
    hours = int(seconds // 3600)
    minutes = int((seconds % 3600) // 60)
    secs = seconds - 3600 * hours - 60 * minutes
    return f"{hours}h {minutes}min {secs:.2f}seg"
