# commands/data.py

import logging
from pathlib import Path

import click
import numpy as np

from commands.common import execute, finish
from modules.bergman import SZEGO_ANGLES, KernelKind, KernelSpec, holomorphic_bayes, sign_boundary_labeler
from modules.core import (
    MonomialFeatures,
    coefficients_frame,
    dataset_fingerprint,
    dataset_to_csv,
    make_circle_dataset,
    make_interval_dataset,
)
from modules.features import ann_features, harmonic_transform, save_feature_table, tuning_matrix
from utils.config import output_root
from utils.file_utils import write_csv

log = logging.getLogger(__name__)


def register_commands(cli):
    """Registra os comandos de dados: dataset, basis e project"""

    @cli.command("dataset")
    @click.option("--kind", type=click.Choice(["circle", "interval"]), default="circle", show_default=True,
                  help="S_n no círculo ou a tarefa de brinquedo no intervalo")
    @click.option("--n", "n", type=int, default=30, show_default=True, help="Número de pontos")
    @click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV de saída (re, im, t)")
    def dataset_command(kind: str, n: int, out):
        """Gera um conjunto de dados rotulado e grava em CSV."""

        def action():
            data = make_circle_dataset(n) if kind == "circle" else make_interval_dataset(n)
            path = Path(out) if out else output_root() / f"dataset_{kind}_{n}.csv"
            dataset_to_csv(data, path)
            return {"n": data.n, "provenance": data.provenance, "fingerprint": dataset_fingerprint(data),
                    "path": path.as_posix()}

        finish(execute(action, "Conjunto de dados gerado", stage="dataset"))

    @cli.command("basis")
    @click.option("--K", "K", type=int, default=30, show_default=True, help="Número de features")
    @click.option("--harmonic/--orthonormal", default=False, help="Matriz de sintonia das features harmônicas")
    @click.option("--out", type=click.Path(file_okay=False), default=None, help="Diretório de saída")
    def basis_command(K: int, harmonic: bool, out):
        """Calcula a matriz de sintonia Σ (Gram dos gradientes) da base monomial."""

        def action():
            features = MonomialFeatures(K)
            if harmonic:
                features = harmonic_transform(features)
            tuning = tuning_matrix(features)
            directory = Path(out) if out else output_root()
            name = "harmonic" if harmonic else "orthonormal"
            path = write_csv(tuning.to_frame(), directory / f"tuning_{name}_K{K}.csv", header=tuning.header())
            sigma = tuning.matrix
            off_diagonal = sigma - np.diag(np.diag(sigma))
            return {"K": K, "basis": tuning.basis, "path": path.as_posix(),
                    "min_eigenvalue": float(np.min(tuning.eigenvalues())),
                    "max_off_diagonal": float(np.max(np.abs(off_diagonal), initial=0.0))}

        finish(execute(action, "Matriz de sintonia calculada", stage="basis"))

    @cli.command("project")
    @click.option("--target", type=click.Choice(["bayes", "ann", "ann_harmonic"]), default="bayes",
                  show_default=True, help="Projeção do rotulador ou tabela de features ReLU")
    @click.option("--kernel", type=click.Choice([k.value for k in KernelKind]), default=KernelKind.SZEGO_DISK.value,
                  show_default=True, help="Núcleo da projeção holomorfa")
    @click.option("--K", "K", type=int, default=30, show_default=True, help="Truncamento")
    @click.option("--angles", type=int, default=SZEGO_ANGLES, show_default=True, help="Ângulos da regra de Szegő")
    @click.option("--out", type=click.Path(file_okay=False), default=None, help="Diretório de saída")
    def project_command(target: str, kernel: str, K: int, angles: int, out):
        """Projeta o rotulador sign(Re z) no espaço holomorfo, ou tabula as features ANN."""

        def action():
            directory = Path(out) if out else output_root()
            if target == "bayes":
                spec = KernelSpec(KernelKind(kernel), K if kernel == KernelKind.TRUNCATED_SERIES.value else None)
                h = holomorphic_bayes(sign_boundary_labeler, spec, K=K, n_angles=angles)
                path = write_csv(coefficients_frame(h), directory / f"bayes_{kernel}_K{K}.csv")
                return {"path": path.as_posix(), "K": K, "kernel": kernel,
                        "abs_value_near_branch_point": float(abs(h(0.999j)[0]))}
            features = ann_features(K, harmonic=target == "ann_harmonic")
            path = save_feature_table(features, directory / f"{target}_features_K{K}.csv")
            return {"path": path.as_posix(), "K": K, "grid_points": int(features.grid.size)}

        finish(execute(action, "Projeção concluída", stage="project"))
