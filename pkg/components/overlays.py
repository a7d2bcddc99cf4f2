# components/overlays.py

import logging
from typing import List, Sequence, Tuple

import numpy as np
from contourpy import contour_generator
from PIL import Image, ImageDraw

log = logging.getLogger(__name__)


def contour_paths(values: np.ndarray, mask: np.ndarray, level: float) -> List[np.ndarray]:
    """
    Isolinhas de um campo real por marching squares (contourpy).
    As coordenadas saem em índices (coluna, linha), ou seja, em pixels.
    """
    z = np.ma.array(values, mask=~mask | ~np.isfinite(values))
    generator = contour_generator(z=z, line_type="Separate")
    return [path for path in generator.lines(level) if len(path) > 1]


def draw_paths(image: Image.Image, paths: Sequence[np.ndarray], color: Tuple[int, int, int, int],
               width: int = 1) -> int:
    """Desenha as polilinhas na imagem; devolve quantas foram desenhadas."""
    draw = ImageDraw.Draw(image)
    for path in paths:
        draw.line([(float(x) + 0.5, float(y) + 0.5) for x, y in path], fill=color, width=width)
    return len(paths)


def draw_level_set(image: Image.Image, values: np.ndarray, mask: np.ndarray,
                   levels: Sequence[float], color: Tuple[int, int, int, int]) -> int:
    total = 0
    for level in levels:
        total += draw_paths(image, contour_paths(values, mask, float(level)), color)
    return total


def mark_crossings(ax, angles: Sequence[float]) -> None:
    for angle in angles:
        ax.axvline(angle, color="0.4", linestyle=":", linewidth=0.8)
    if len(angles):
        ax.plot(angles, np.zeros(len(angles)), "ko", markersize=3, label="Re f = 0")


def draw_imaginary_axis(ax, curve: np.ndarray) -> None:
    """Fronteira de decisão no espaço imagem: o eixo imaginário."""
    span = max(1.0, float(np.max(np.abs(curve.imag), initial=0.0))) * 1.1
    ax.plot([0.0, 0.0], [-span, span], color="black", linewidth=1.0)
    ax.axhline(0.0, color="0.7", linewidth=0.5)


def mark_training_points(ax, x: np.ndarray, t: np.ndarray) -> None:
    ax.scatter(x[t > 0], np.ones(np.sum(t > 0)), marker="+", color="tab:blue", zorder=3)
    ax.scatter(x[t < 0], -np.ones(np.sum(t < 0)), marker="x", color="tab:red", zorder=3)
