# modules/render.py

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Mapping, Tuple, Union

import numpy as np
import pandas as pd
from matplotlib import colormaps
from matplotlib.colors import hsv_to_rgb

from components.layout import (
    BLACK,
    WHITE,
    canvas_from_rgba,
    encode_png,
    figure_png,
    new_figure,
    pixel_grid,
)
from components.overlays import (
    draw_imaginary_axis,
    draw_level_set,
    mark_crossings,
    mark_training_points,
)
from modules.core import Dataset, Hypothesis
from modules.errors import InvalidArgumentError
from modules.pde import GridField
from modules.quadrature import circle_rule
from modules.robustness import boundary_crossings
from utils.file_utils import atomic_write_bytes, content_hash, safe_filename, write_csv

log = logging.getLogger(__name__)

MIN_IMAGE_SIZE = 64
PROFILE_ANGLES = 4096


class MagnitudeMap(str, Enum):
    RATIONAL = "rational"  # m/(1+m)
    LOG = "log"            # log(1+m)/(1+log(1+m))


class MagnitudeChannel(str, Enum):
    SATURATION = "saturation"
    VALUE = "value"


@dataclass(frozen=True)
class RenderConfig:
    """Parâmetros do domain coloring: tamanho, níveis de contorno e mapas de cor."""
    size: int = 512
    re_levels: Tuple[float, ...] = (0.0,)
    im_levels: Tuple[float, ...] = (0.0,)
    magnitude_map: MagnitudeMap = MagnitudeMap.RATIONAL
    magnitude_channel: MagnitudeChannel = MagnitudeChannel.SATURATION
    hue_offset: float = 0.0
    n_angles: int = PROFILE_ANGLES

    def __post_init__(self):
        if self.size < MIN_IMAGE_SIZE:
            raise InvalidArgumentError(f"Tamanho da imagem deve ser >= {MIN_IMAGE_SIZE}.", size=self.size)
        levels = tuple(float(v) for v in self.re_levels) + tuple(float(v) for v in self.im_levels)
        if not np.all(np.isfinite(levels)):
            raise InvalidArgumentError("Níveis de contorno devem ser finitos.")
        object.__setattr__(self, "re_levels", tuple(float(v) for v in self.re_levels))
        object.__setattr__(self, "im_levels", tuple(float(v) for v in self.im_levels))
        object.__setattr__(self, "magnitude_map", MagnitudeMap(self.magnitude_map))
        object.__setattr__(self, "magnitude_channel", MagnitudeChannel(self.magnitude_channel))


@dataclass(frozen=True, eq=False)
class RenderedImage:
    style: str
    png: bytes
    stats: Dict[str, Any] = field(default_factory=dict)

    @property
    def digest(self) -> str:
        return content_hash(self.png)


@dataclass(frozen=True, eq=False)
class CurveData:
    style: str
    frame: pd.DataFrame
    image: RenderedImage
    stats: Dict[str, Any] = field(default_factory=dict)


def compress_magnitude(m: np.ndarray, kind: MagnitudeMap = MagnitudeMap.RATIONAL) -> np.ndarray:
    if kind == MagnitudeMap.LOG:
        m = np.log1p(m)
    return m / (1.0 + m)


def domain_colors(values: np.ndarray, cfg: RenderConfig) -> np.ndarray:
    """
    Cor HSV → RGB de cada valor: matiz = arg f/2π, magnitude comprimida no
    canal escolhido (saturação por padrão, valor como alternativa).
    """
    hue = np.mod(np.angle(values) / (2.0 * np.pi) + cfg.hue_offset, 1.0)
    level = compress_magnitude(np.abs(values), cfg.magnitude_map)
    ones = np.ones_like(level)
    if cfg.magnitude_channel == MagnitudeChannel.SATURATION:
        hsv = np.stack([hue, level, ones], axis=-1)
    else:
        hsv = np.stack([hue, ones, level], axis=-1)
    return hsv_to_rgb(hsv)


def render_domain_coloring(h: Hypothesis, cfg: RenderConfig = RenderConfig()) -> RenderedImage:
    """
    Domain coloring de f no disco unitário, com isolinhas de Re f (brancas)
    e Im f (pretas). Fora do disco os pixels ficam transparentes; valores não
    finitos ficam pretos e são contados em `stats["nonfinite"]`.
    """
    z, inside = pixel_grid(cfg.size)
    values = np.full(z.shape, np.nan, dtype=complex)
    values[inside] = h(z[inside])
    finite = np.isfinite(values) & inside

    rgba = np.zeros(z.shape + (4,))
    rgba[finite, :3] = domain_colors(values[finite], cfg)
    rgba[inside, 3] = 1.0
    nonfinite = int(np.sum(inside & ~finite))
    if nonfinite:
        log.warning(f"{nonfinite} pixel(s) com valor não finito renderizados em preto.")
    image = canvas_from_rgba(rgba)

    re_lines = draw_level_set(image, values.real, finite, cfg.re_levels, WHITE)
    im_lines = draw_level_set(image, values.imag, finite, cfg.im_levels, BLACK)
    stats = {"size": cfg.size, "nonfinite": nonfinite, "re_contours": re_lines, "im_contours": im_lines}
    return RenderedImage("domain", encode_png(image), stats)


def circle_profile_frame(h: Hypothesis, n_angles: int = PROFILE_ANGLES) -> pd.DataFrame:
    theta = 2.0 * np.pi * (np.arange(n_angles) + 0.5) / n_angles
    f = h(np.exp(1j * theta))
    return pd.DataFrame({"theta": theta, "re": f.real, "im": f.imag})


def render_circle_profiles(h: Hypothesis, n_angles: int = PROFILE_ANGLES, title: str = "") -> CurveData:
    """Gráfico de Re f(e^{iθ}) e Im f(e^{iθ}) em [0, 2π), com os zeros de Re f marcados."""
    frame = circle_profile_frame(h, n_angles)
    crossings = boundary_crossings(h, n_angles)
    fig, ax = new_figure()
    ax.plot(frame["theta"], frame["re"], color="tab:blue", linewidth=1.0, label="Re f")
    ax.plot(frame["theta"], frame["im"], color="tab:orange", linewidth=1.0, label="Im f")
    mark_crossings(ax, crossings.angles)
    ax.set_xlim(0.0, 2.0 * np.pi)
    ax.set_xlabel("θ")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    image = RenderedImage("profile", figure_png(fig))
    stats = {"crossings": crossings.count, "crossing_angles": list(crossings.angles)}
    return CurveData("profile", frame, image, stats)


def polygon_length(curve: np.ndarray) -> float:
    """Comprimento da poligonal fechada pelos pontos (o último liga ao primeiro)."""
    return float(np.sum(np.abs(np.diff(np.append(curve, curve[:1])))))


def curve_length_integral(h: Hypothesis, n_angles: int = PROFILE_ANGLES) -> float:
    """∫₀^{2π} |f'(e^{iθ})| dθ, o comprimento de f(𝕋) pela regra do círculo."""
    rule = circle_rule(n_angles)
    return float(np.sum(rule.weights * np.abs(h.derivative(rule.points))))


def render_range_curve(h: Hypothesis, n_angles: int = PROFILE_ANGLES, title: str = "") -> CurveData:
    """
    Curva fechada f(e^{iθ}) no plano imagem, com o eixo imaginário (fronteira
    de decisão) sobreposto. Reporta comprimento e número de cruzamentos do eixo.
    """
    frame = circle_profile_frame(h, n_angles)
    curve = frame["re"].to_numpy() + 1j * frame["im"].to_numpy()
    length = polygon_length(curve)
    crossings = boundary_crossings(h, n_angles)

    fig, ax = new_figure(5.0, 5.0)
    closed = np.append(curve, curve[:1])
    ax.plot(closed.real, closed.imag, color="tab:purple", linewidth=1.0)
    draw_imaginary_axis(ax, curve)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("Re f")
    ax.set_ylabel("Im f")
    if title:
        ax.set_title(title)
    image = RenderedImage("range", figure_png(fig))
    stats = {"curve_length": length, "axis_crossings": crossings.count}
    return CurveData("range", frame, image, stats)


def render_interval_plot(models: Mapping[str, Hypothesis], data: Dataset, n_points: int = 512,
                         title: str = "") -> CurveData:
    """Hipóteses reais sobre [0, 1] com os pontos de treino e as faixas de margem ±1."""
    x = np.linspace(0.0, 1.0, n_points)
    columns: Dict[str, np.ndarray] = {"x": x}
    fig, ax = new_figure()
    for label, h in models.items():
        columns[label] = np.real(h(x.astype(complex)))
        ax.plot(x, columns[label], linewidth=1.2, label=label)
    for level in (-1.0, 1.0):
        ax.axhline(level, color="0.6", linestyle="--", linewidth=0.7)
    ax.axhline(0.0, color="black", linewidth=0.7)
    mark_training_points(ax, np.real(data.z), data.t)
    ax.set_xlim(0.0, 1.0)
    ax.set_xlabel("x")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper left", fontsize=8)
    return CurveData("interval", pd.DataFrame(columns), RenderedImage("interval", figure_png(fig)))


def render_field_heatmap(grid_field: GridField, cmap: str = "viridis") -> RenderedImage:
    """Mapa de calor de um campo real em grade (linha 0 = y máximo)."""
    values = np.real(np.asarray(grid_field.values, dtype=complex)).T[::-1, :]
    finite = np.isfinite(values)
    lo = float(np.min(values[finite], initial=0.0))
    hi = float(np.max(values[finite], initial=0.0))
    scaled = (values - lo) / (hi - lo) if hi > lo else np.zeros_like(values)
    rgba = colormaps[cmap](np.where(finite, scaled, 0.0))
    rgba[~finite] = (0.0, 0.0, 0.0, 1.0)
    return RenderedImage("heatmap", encode_png(canvas_from_rgba(rgba)), {"min": lo, "max": hi})


def artifact_name(experiment: str, style: str, png: bytes) -> str:
    return f"{safe_filename(experiment)}_{safe_filename(style)}_{content_hash(png)}.png"


def save_image(image: RenderedImage, directory: Union[str, Path], experiment: str) -> Path:
    """Grava o PNG como <experimento>_<estilo>_<hash>.png."""
    path = Path(directory) / artifact_name(experiment, image.style, image.png)
    atomic_write_bytes(path, image.png)
    log.info(f"Imagem gravada: {path}")
    return path


def save_curve(curve: CurveData, directory: Union[str, Path], experiment: str) -> Dict[str, Path]:
    directory = Path(directory)
    csv_path = write_csv(curve.frame, directory / f"{safe_filename(experiment)}_{curve.style}.csv")
    return {"csv": csv_path, "png": save_image(curve.image, directory, experiment)}
