# commands/robustness.py

import logging
from pathlib import Path

import click

from commands.common import execute, finish, parse_int_list
from modules.core import Domain
from modules.experiments import ExperimentId, build_config, run_normality, run_transfer
from modules.learner import FeatureChoice, load_hypothesis
from modules.robustness import AttackConfig, boundary_crossings, gradient_attack, min_flip_radius

log = logging.getLogger(__name__)


def register_commands(cli):
    """Registra os comandos de robustez: attack, transfer e normality"""

    @cli.command("attack")
    @click.option("--coeffs", type=click.Path(exists=True, dir_okay=False), required=True,
                  help="Arquivo <name>_coeffs.csv de um modelo")
    @click.option("--feature-kind", type=click.Choice([k.value for k in FeatureChoice]),
                  default=FeatureChoice.ORTHONORMAL.value, show_default=True)
    @click.option("--re", "re_part", type=float, required=True, help="Re z0")
    @click.option("--im", "im_part", type=float, default=0.0, show_default=True, help="Im z0")
    @click.option("--t", "label", type=click.Choice(["-1", "1"]), required=True, help="Rótulo verdadeiro")
    @click.option("--step", type=float, default=0.01, show_default=True)
    @click.option("--max-iter", type=int, default=500, show_default=True)
    @click.option("--eps-max", type=float, default=2.0, show_default=True)
    @click.option("--bisection-tol", type=float, default=1e-3, show_default=True)
    @click.option("--min-radius", is_flag=True, help="Bisseção no orçamento (menor raio de inversão)")
    def attack_command(coeffs, feature_kind, re_part, im_part, label, step, max_iter, eps_max, bisection_tol,
                       min_radius):
        """Ataque de gradiente a partir de z0 contra uma hipótese salva."""

        def action():
            h = load_hypothesis(Path(coeffs), FeatureChoice(feature_kind))
            cfg = AttackConfig(step, max_iter, eps_max, bisection_tol)
            z0 = complex(re_part, im_part)
            t = int(label)
            result = gradient_attack(h, z0, t, cfg)
            data = {
                "start": [z0.real, z0.imag],
                "point": [result.point.real, result.point.imag],
                "perturbation": result.perturbation,
                "success": result.success,
                "stalled": result.stalled,
                "iterations": result.iterations,
            }
            if h.features.domain == Domain.UNIT_DISK:
                data["boundary_crossings"] = boundary_crossings(h).count
            if min_radius:
                radius = min_flip_radius(h, z0, t, cfg)
                data["min_flip_radius"] = {"radius": radius.radius, "exhausted": radius.exhausted,
                                           "stalled": radius.stalled}
            return data

        finish(execute(action, "Ataque concluído", stage="attack"))

    @cli.command("transfer")
    @click.option("--n", "n", type=int, default=None, help="Tamanho de S_n")
    @click.option("--K", "K", type=int, default=None, help="Número de features")
    @click.option("--C", "C", type=float, default=None, help="Peso das folgas")
    @click.option("--n-eval", type=int, default=None, help="Pontos de avaliação")
    @click.option("--seed", type=int, default=0, show_default=True)
    @click.option("--out", type=click.Path(file_okay=False), default=None, help="Diretório de saída")
    @click.option("--sequential", is_flag=True, help="Desliga a execução paralela")
    def transfer_command(n, K, C, n_eval, seed, out, sequential):
        """Métricas de transferência: substituto monomial contra alvos não robusto e robusto."""

        def action():
            config = build_config({"experiment": ExperimentId.TRANSFER.value},
                                  {"seed": seed, "output_dir": out, "parallel": not sequential,
                                   "transfer.n": n, "transfer.K": K, "transfer.C": C, "transfer.n_eval": n_eval})
            return run_transfer(config).summary()

        finish(execute(action, "Métricas de transferência calculadas", stage="transfer"))

    @cli.command("normality")
    @click.option("--schedule", default=None, help="Lista de n, ex.: 20,40,80")
    @click.option("--reference", "reference_n", type=int, default=None, help="n de referência")
    @click.option("--K", "K", type=int, default=None, help="Truncamento do SVC")
    @click.option("--dirac-schedule", default=None, help="Lista de n do memorizador de Dirac")
    @click.option("--out", type=click.Path(file_okay=False), default=None, help="Diretório de saída")
    @click.option("--sequential", is_flag=True, help="Desliga a execução paralela")
    def normality_command(schedule, reference_n, K, dirac_schedule, out, sequential):
        """Sonda de normalidade: desvio sup entre S_n e a referência."""

        def action():
            config = build_config({"experiment": ExperimentId.NORMALITY.value},
                                  {"output_dir": out, "parallel": not sequential,
                                   "normality.schedule": parse_int_list(schedule),
                                   "normality.reference_n": reference_n, "normality.K": K,
                                   "normality.dirac_schedule": parse_int_list(dirac_schedule)})
            return run_normality(config).summary()

        finish(execute(action, "Sonda de normalidade concluída", stage="normality"))
