# commands/render.py

import logging
from pathlib import Path

import click

from commands.common import execute, finish
from modules.learner import FeatureChoice, load_hypothesis
from modules.render import (
    MagnitudeChannel,
    MagnitudeMap,
    RenderConfig,
    render_circle_profiles,
    render_domain_coloring,
    render_range_curve,
    save_curve,
    save_image,
)
from utils.config import output_root

log = logging.getLogger(__name__)

STYLES = ("domain", "profile", "range")


def register_commands(cli):
    """Registra o comando de renderização"""

    @cli.command("render")
    @click.option("--coeffs", type=click.Path(exists=True, dir_okay=False), required=True,
                  help="Arquivo <name>_coeffs.csv de um modelo no disco")
    @click.option("--feature-kind", type=click.Choice([FeatureChoice.ORTHONORMAL.value, FeatureChoice.HARMONIC.value]),
                  default=FeatureChoice.ORTHONORMAL.value, show_default=True)
    @click.option("--style", type=click.Choice(STYLES + ("all",)), default="all", show_default=True)
    @click.option("--size", type=int, default=512, show_default=True, help="Lado da imagem em pixels")
    @click.option("--log-magnitude", is_flag=True, help="Compressão logarítmica da magnitude")
    @click.option("--value-channel", is_flag=True, help="Magnitude no canal de valor em vez da saturação")
    @click.option("--angles", type=int, default=4096, show_default=True, help="Ângulos no círculo")
    @click.option("--name", default="render", show_default=True, help="Prefixo dos arquivos")
    @click.option("--out", type=click.Path(file_okay=False), default=None, help="Diretório de saída")
    def render_command(coeffs, feature_kind, style, size, log_magnitude, value_channel, angles, name, out):
        """Domain coloring, perfis no círculo e curva imagem de uma hipótese salva."""

        def action():
            h = load_hypothesis(Path(coeffs), FeatureChoice(feature_kind))
            cfg = RenderConfig(size=size,
                               magnitude_map=MagnitudeMap.LOG if log_magnitude else MagnitudeMap.RATIONAL,
                               magnitude_channel=MagnitudeChannel.VALUE if value_channel
                               else MagnitudeChannel.SATURATION,
                               n_angles=angles)
            directory = Path(out) if out else output_root()
            styles = STYLES if style == "all" else (style,)
            files, stats = [], {}
            if "domain" in styles:
                image = render_domain_coloring(h, cfg)
                files.append(save_image(image, directory, name).as_posix())
                stats["domain"] = image.stats
            if "profile" in styles:
                profile = render_circle_profiles(h, angles)
                files.extend(p.as_posix() for p in save_curve(profile, directory, name).values())
                stats["profile"] = profile.stats
            if "range" in styles:
                curve = render_range_curve(h, angles)
                files.extend(p.as_posix() for p in save_curve(curve, directory, name).values())
                stats["range"] = curve.stats
            return {"files": files, "stats": stats}

        finish(execute(action, "Renderização concluída", stage="render"))
