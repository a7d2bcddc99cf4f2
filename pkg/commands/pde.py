# commands/pde.py

import logging

import click

from commands.common import execute, finish
from modules.experiments import ExperimentId, build_config, run_pde_check

log = logging.getLogger(__name__)


def register_commands(cli):
    """Registra o comando da checagem de EDP"""

    @cli.command("pde")
    @click.option("--grid", type=int, default=None, help="Nós por eixo da grade grossa (padrão 129)")
    @click.option("--refined-grid", type=int, default=None, help="Nós por eixo da grade refinada (padrão 257)")
    @click.option("--threshold", type=float, default=None, help="Resíduo relativo máximo")
    @click.option("--no-heatmap", is_flag=True, help="Não gera o mapa de calor de h")
    @click.option("--out", type=click.Path(file_okay=False), default=None, help="Diretório de saída")
    def pde_command(grid, refined_grid, threshold, no_heatmap, out):
        """Potencial newtoniano das ativações duais e identidade das ativações harmônicas."""

        def action():
            config = build_config({"experiment": ExperimentId.PDE_CHECK.value},
                                  {"output_dir": out, "pde_check.grid": grid,
                                   "pde_check.refined_grid": refined_grid, "pde_check.threshold": threshold,
                                   "pde_check.heatmap": False if no_heatmap else None})
            return run_pde_check(config).summary()

        finish(execute(action, "Checagem da EDP concluída", stage="pde"))
