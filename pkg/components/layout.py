# components/layout.py

import io
import logging
from typing import Tuple

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib.figure import Figure
from PIL import Image

log = logging.getLogger(__name__)

BLACK = (0, 0, 0, 255)
WHITE = (255, 255, 255, 255)


def pixel_grid(size: int, half_width: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Centros dos pixels de uma tela quadrada size×size sobre [−w, w]².

    Args:
        size (int): Largura/altura em pixels
        half_width (float): Meia largura da janela no plano complexo

    Returns:
        Tuple[np.ndarray, np.ndarray]: (z[linha, coluna], máscara |z| ≤ 1).
        A linha 0 é o topo (Im z máximo).
    """
    step = 2.0 * half_width / size
    coords = -half_width + step * (np.arange(size) + 0.5)
    z = coords[None, :] + 1j * coords[::-1, None]
    return z, np.abs(z) <= 1.0


def canvas_from_rgba(rgba: np.ndarray) -> Image.Image:
    """Converte um array float (H, W, 4) em [0, 1] para uma imagem RGBA de 8 bits."""
    data = np.clip(np.rint(rgba * 255.0), 0, 255).astype(np.uint8)
    return Image.fromarray(data, mode="RGBA")


def encode_png(image: Image.Image) -> bytes:
    """PNG sem blocos auxiliares (sem tEXt/tIME), para hashes reprodutíveis."""
    buffer = io.BytesIO()
    image.save(buffer, format="PNG", optimize=False)
    return buffer.getvalue()


def new_figure(width: float = 6.0, height: float = 4.0) -> Tuple[Figure, object]:
    """Figura matplotlib fora do pyplot (segura entre threads), com um único eixo."""
    fig = Figure(figsize=(width, height), dpi=100)
    ax = fig.add_subplot(1, 1, 1)
    return fig, ax


def figure_png(fig: Figure) -> bytes:
    buffer = io.BytesIO()
    fig.savefig(buffer, format="png", metadata={"Software": None})
    return buffer.getvalue()
