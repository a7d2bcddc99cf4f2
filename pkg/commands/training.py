# commands/training.py

import logging
from pathlib import Path

import click

from commands.common import execute, finish
from modules.core import dataset_from_csv, make_circle_dataset, make_interval_dataset
from modules.learner import (
    FeatureChoice,
    TrainConfig,
    complex_svc_problem,
    real_svc_problem,
    save_model,
    train_model,
    train_robust,
)
from modules.qp import dump_qp
from utils.config import output_root

log = logging.getLogger(__name__)


def register_commands(cli):
    """Registra o comando de treino"""

    @cli.command("train")
    @click.option("--dataset", "dataset_path", type=click.Path(exists=True, dir_okay=False), default=None,
                  help="CSV (re, im, t); sem ele usa S_n ou a tarefa do intervalo")
    @click.option("--n", "n", type=int, default=30, show_default=True, help="Tamanho do conjunto gerado")
    @click.option("--feature-kind", type=click.Choice([k.value for k in FeatureChoice]),
                  default=FeatureChoice.ORTHONORMAL.value, show_default=True)
    @click.option("--C", "C", type=float, default=10.0, show_default=True, help="Peso das folgas")
    @click.option("--K", "K", type=int, default=30, show_default=True, help="Número de features")
    @click.option("--robust", is_flag=True, help="Usa a contrapartida harmônica das features")
    @click.option("--hard-margin", is_flag=True, help="Margem rígida (C = 1e8, folgas devem ser nulas)")
    @click.option("--no-conjugate", is_flag=True, help="Usa z_n em vez de conj(z_n) nas restrições")
    @click.option("--dump-qp", "dump_problem", is_flag=True, help="Grava o QP e a solução em CSV para depuração")
    @click.option("--name", default=None, help="Prefixo dos arquivos do modelo")
    @click.option("--out", type=click.Path(file_okay=False), default=None, help="Diretório de saída")
    def train_command(dataset_path, n, feature_kind, C, K, robust, hard_margin, no_conjugate, dump_problem,
                      name, out):
        """Treina o SVC complexo (disco) ou real (features ANN no intervalo)."""

        def action():
            kind = FeatureChoice(feature_kind)
            if dataset_path:
                data = dataset_from_csv(Path(dataset_path), provenance=Path(dataset_path).name)
            elif kind.is_ann:
                data = make_interval_dataset(n)
            else:
                data = make_circle_dataset(n)
            cfg = TrainConfig(C=C, K=K, feature_kind=kind, conjugate_samples=not no_conjugate,
                              hard_margin=hard_margin)
            model = train_robust(data, cfg) if robust else train_model(data, cfg)
            directory = Path(out) if out else output_root()
            prefix = name or f"{model.config.feature_kind.value}_K{K}"
            files = {key: path.as_posix() for key, path in save_model(model, directory, prefix).items()}
            if dump_problem:
                features = model.hypothesis.features
                problem = (real_svc_problem(features, data, cfg.effective_C) if model.rule == "real_svc"
                           else complex_svc_problem(features, data, cfg.effective_C, cfg.conjugate_samples))
                files["qp"] = dump_qp(problem, model.qp, directory / f"{prefix}_qp.csv").as_posix()
            return {"files": files, "metadata": model.metadata()}

        finish(execute(action, "Modelo treinado", stage="train"))
