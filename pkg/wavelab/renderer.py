import io
import logging
from typing import Optional, Sequence

import numpy as np
from PIL import Image, ImageDraw

from .core.utils import generate_color_gradient

LOGGER = logging.getLogger(__name__)

# Paleta padrão: azul escuro -> amarelo
DEFAULT_STOPS = ["#0b1a3a", "#1f6f8b", "#99d98c", "#fde725"]
PALETTE_STEPS = 256
COLORBAR_WIDTH = 12
MIN_SIZE = 64


class SpacetimeRenderer:
    """Mapa de calor de |u| sobre (tempo, espaço), tempo crescendo para cima."""

    def __init__(self, stops: Optional[Sequence[str]] = None, steps: int = PALETTE_STEPS):
        self.palette = np.array(generate_color_gradient(list(stops or DEFAULT_STOPS), steps), dtype=np.uint8)

    def colorize(self, values: np.ndarray, scale: Optional[float] = None) -> np.ndarray:
        """Converte |values| em índices da paleta; escala nula produz a primeira cor."""
        magnitude = np.abs(np.asarray(values, dtype=float))
        magnitude = np.where(np.isfinite(magnitude), magnitude, 0.0)
        top = float(magnitude.max(initial=0.0)) if scale is None else float(scale)
        if top <= 0.0:
            indices = np.zeros(magnitude.shape, dtype=int)
        else:
            indices = np.clip((magnitude / top * (len(self.palette) - 1)).round().astype(int), 0, len(self.palette) - 1)
        return self.palette[indices]

    def render(self, values: np.ndarray, scale: Optional[float] = None) -> Image.Image:
        """
        Renderiza a matriz (nt, nx) de valores.

        Args:
            values: Campo amostrado, uma linha por instante
            scale: Valor associado à cor máxima (padrão: máximo de |values|)

        Returns:
            Imagem RGB com barra de cores à direita
        """
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.size == 0:
            raise ValueError("esperada matriz (nt, nx) não vazia")
        rgb = self.colorize(values[::-1], scale)
        heatmap = Image.fromarray(rgb, "RGB")
        width = max(MIN_SIZE, heatmap.width)
        height = max(MIN_SIZE, heatmap.height)
        if heatmap.size != (width, height):
            heatmap = heatmap.resize((width, height), Image.Resampling.NEAREST)

        canvas = Image.new("RGB", (width + COLORBAR_WIDTH + 4, height), (255, 255, 255))
        canvas.paste(heatmap, (0, 0))
        draw = ImageDraw.Draw(canvas)
        for y in range(height):
            color = self.palette[int((height - 1 - y) / max(height - 1, 1) * (len(self.palette) - 1))]
            draw.line([(width + 4, y), (width + 3 + COLORBAR_WIDTH, y)], fill=tuple(int(c) for c in color))
        return canvas

    def render_bytes(self, values: np.ndarray, scale: Optional[float] = None) -> io.BytesIO:
        output = io.BytesIO()
        self.render(values, scale).save(output, format="PNG")
        output.seek(0)
        return output
