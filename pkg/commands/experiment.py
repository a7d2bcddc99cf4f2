# commands/experiment.py

import logging

import click

from commands.common import execute, finish, parse_assignments
from modules.experiments import ExperimentId, load_config, run_experiment

log = logging.getLogger(__name__)


def register_commands(cli):
    """Registra o comando de experimentos completos"""

    @cli.command("experiment")
    @click.argument("experiment_id", required=False, type=click.Choice([e.value for e in ExperimentId]))
    @click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
                  help="Arquivo JSON de configuração")
    @click.option("--seed", type=int, default=None, help="Semente (padrão 0)")
    @click.option("--out", type=click.Path(file_okay=False), default=None, help="Diretório do pacote")
    @click.option("--strict-claims", is_flag=True, default=None,
                  help="Afirmações qualitativas passam a ser asserções de etapa")
    @click.option("--sequential", is_flag=True, help="Desliga a execução paralela")
    @click.option("--set", "assignments", multiple=True, help="Sobrescrita chave=valor, ex.: fig1.C=1.0")
    def experiment_command(experiment_id, config_path, seed, out, strict_claims, sequential, assignments):
        """Executa um experimento (fig1, fig2, pde_check, transfer, normality ou custom)."""

        def action():
            overrides = parse_assignments(assignments)
            overrides.update({"experiment": experiment_id, "seed": seed, "output_dir": out,
                              "strict_claims": strict_claims or None,
                              "parallel": False if sequential else None})
            config = load_config(config_path, overrides)
            bundles = run_experiment(config)
            failed = {b.experiment: b.failed_claims for b in bundles if b.failed_claims}
            if failed:
                log.warning(f"Afirmações qualitativas que não se mantiveram: {failed}")
            return {"bundles": [b.summary() for b in bundles],
                    "directories": [b.directory.as_posix() for b in bundles],
                    "failed_claims": failed}

        finish(execute(action, "Experimento concluído", stage="experiment"))
