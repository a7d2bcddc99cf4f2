# app.py

import logging

import click

from commands import data, experiment, pde, render, robustness, training
from utils.config import load_environment

# Configuração de Logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
log = logging.getLogger(__name__)


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Ativa logs de depuração")
def cli(verbose: bool):
    """Classificação robusta com hipóteses holomorfas no disco unitário."""
    load_environment()
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
        log.debug("Modo verboso ativado.")


# Registrar comandos
data.register_commands(cli)
training.register_commands(cli)
robustness.register_commands(cli)
pde.register_commands(cli)
render.register_commands(cli)
experiment.register_commands(cli)


if __name__ == "__main__":
    cli()
