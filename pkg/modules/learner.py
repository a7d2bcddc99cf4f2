# modules/learner.py

import logging
from dataclasses import asdict, dataclass, replace
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from modules.core import (
    Dataset,
    FeatureSet,
    FeatureKind,
    Hypothesis,
    LinearMapFeatures,
    MonomialFeatures,
    coefficients_frame,
    dataset_fingerprint,
)
from modules.errors import (
    InfeasibleProgramError,
    InternalError,
    InvalidArgumentError,
    MarginInfeasibleError,
)
from modules.features import (
    ActivationFamily,
    ann_features,
    complex_from_realified,
    dirichlet_energy,
    harmonic_transform,
    realify_features,
)
from modules.qp import DEFAULT_TOL, QPProblem, QPSolution, solve_qp
from modules.quadrature import split_disk_rule

log = logging.getLogger(__name__)

HARD_MARGIN_C = 1e8
HARD_MARGIN_SLACK = 1e-6


class FeatureChoice(str, Enum):
    ORTHONORMAL = "orthonormal"
    HARMONIC = "harmonic"
    ANN_PROJECTED = "ann_projected"
    ANN_PROJECTED_HARMONIC = "ann_projected_harmonic"

    @property
    def robust_counterpart(self) -> "FeatureChoice":
        if self in (FeatureChoice.ORTHONORMAL, FeatureChoice.HARMONIC):
            return FeatureChoice.HARMONIC
        return FeatureChoice.ANN_PROJECTED_HARMONIC

    @property
    def is_ann(self) -> bool:
        return self in (FeatureChoice.ANN_PROJECTED, FeatureChoice.ANN_PROJECTED_HARMONIC)


@dataclass(frozen=True)
class TrainConfig:
    """Parâmetros de treino do SVC (C, K, família de features, tolerância do QP)."""
    C: float = 10.0
    K: int = 30
    feature_kind: FeatureChoice = FeatureChoice.ORTHONORMAL
    conjugate_samples: bool = True
    tol: float = DEFAULT_TOL
    hard_margin: bool = False

    def __post_init__(self):
        if not self.C > 0:
            raise InvalidArgumentError(f"C deve ser positivo (recebido {self.C}).", C=self.C)
        if self.K < 1:
            raise InvalidArgumentError(f"K deve ser >= 1 (recebido {self.K}).", K=self.K)
        object.__setattr__(self, "feature_kind", FeatureChoice(self.feature_kind))

    @property
    def effective_C(self) -> float:
        return HARD_MARGIN_C if self.hard_margin else self.C

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["feature_kind"] = self.feature_kind.value
        return data


@dataclass(frozen=True, eq=False)
class TrainedModel:
    hypothesis: Hypothesis
    qp: QPSolution
    slacks: np.ndarray
    duals: np.ndarray
    config: TrainConfig
    fingerprint: str
    dataset: Dataset
    rule: str = "complex_svc"

    @property
    def objective(self) -> float:
        return self.qp.objective

    @property
    def training_loss(self) -> float:
        return float(np.sum(self.slacks))

    @property
    def complex_hypothesis(self) -> Hypothesis:
        """Hipótese complexa equivalente quando o modelo foi treinado sobre features empilhadas."""
        source = getattr(self.hypothesis.features, "source", None)
        if source is None:
            return self.hypothesis
        return Hypothesis(source, complex_from_realified(self.hypothesis.coeffs))

    def decision(self, z) -> np.ndarray:
        return np.real(self.hypothesis(z))

    def margins(self) -> np.ndarray:
        """t_n·Re f(z_n) nos pontos de treino (sem conjugação)."""
        return self.dataset.t * np.real(self.hypothesis(self.dataset.z))

    def metadata(self) -> Dict[str, Any]:
        return {
            "rule": self.rule,
            "config": self.config.to_dict(),
            "features": self.hypothesis.features.describe(),
            "dataset": {"provenance": self.dataset.provenance, "n": self.dataset.n,
                        "fingerprint": self.fingerprint},
            "objective": self.objective,
            "training_loss": self.training_loss,
            "kkt_residuals": dict(self.qp.residuals),
            "dirichlet_energy": model_energy(self),
        }


@lru_cache(maxsize=16)
def build_features(kind: FeatureChoice, K: int) -> FeatureSet:
    """Constrói (e memoriza) o FeatureSet de uma família; FeatureSets são imutáveis."""
    kind = FeatureChoice(kind)
    if kind == FeatureChoice.ORTHONORMAL:
        return MonomialFeatures(K)
    if kind == FeatureChoice.HARMONIC:
        if K == 1:
            # só a constante: a transformação é a identidade, sem regularização
            return LinearMapFeatures(MonomialFeatures(1), np.eye(1), FeatureKind.HARMONIC,
                                     constant_index=0, unregularized=[0], label="harmonic[monomial K=1]")
        return harmonic_transform(MonomialFeatures(K))
    return ann_features(K, harmonic=kind == FeatureChoice.ANN_PROJECTED_HARMONIC)


def _solve(problem: QPProblem, cfg: TrainConfig) -> QPSolution:
    try:
        return solve_qp(problem, cfg.tol)
    except InfeasibleProgramError as e:
        # com margem suave o programa é sempre viável
        raise InternalError(f"QP de margem suave declarado inviável: {e}") from e


def _check_hard_margin(cfg: TrainConfig, slacks: np.ndarray) -> None:
    if cfg.hard_margin and slacks.size and float(np.max(slacks)) > HARD_MARGIN_SLACK:
        raise MarginInfeasibleError(
            f"Dados não separáveis com margem rígida (folga máxima {np.max(slacks):.3e}).",
            max_slack=float(np.max(slacks)))


def complex_svc_problem(features: FeatureSet, data: Dataset, C: float,
                        conjugate_samples: bool = True) -> QPProblem:
    """
    QP realificado do SVC complexo. Variáveis (Re a, Im a, ξ); restrições
    ξ ≥ 0, t·Re f(w_n) + ξ ≥ 1, ξ − Im f(w_n) ≥ 0, Im f(w_n) + ξ ≥ 0,
    com w_n = conj(z_n) por padrão.
    """
    K, N = features.K, data.n
    points = np.conj(data.z) if conjugate_samples else data.z
    psi = features.values(points)
    p, q = psi.real, psi.imag
    t = data.t[:, None].astype(float)
    eye = np.eye(N)
    zeros = np.zeros((N, K))

    A = np.vstack([
        np.hstack([zeros, zeros, eye]),
        np.hstack([t * p, -t * q, eye]),
        np.hstack([-q, -p, eye]),
        np.hstack([q, p, eye]),
    ])
    b = np.concatenate([np.zeros(N), np.ones(N), np.zeros(N), np.zeros(N)])
    mask = features.regularization_mask.astype(float)
    Q = np.diag(np.concatenate([mask, mask, np.zeros(N)]))
    c = np.concatenate([np.zeros(2 * K), np.full(N, C)])
    return QPProblem(Q, c, A, b)


def train_complex_svc(data: Dataset, cfg: TrainConfig,
                      features: Optional[FeatureSet] = None) -> TrainedModel:
    """
    SVC complexo de margem suave: min ½‖a‖² + CΣξ sobre as colunas regularizadas.

    Args:
        data (Dataset): Amostras rotuladas
        cfg (TrainConfig): Configuração de treino
        features (FeatureSet): Features explícitas (opcional; senão construídas de cfg)

    Returns:
        TrainedModel: Modelo com hipótese, folgas e duais das restrições de margem

    Raises:
        MarginInfeasibleError: margem rígida pedida mas dados não separáveis
        InternalError: QP de margem suave inviável
    """
    features = features or build_features(cfg.feature_kind, cfg.K)
    K, N = features.K, data.n
    problem = complex_svc_problem(features, data, cfg.effective_C, cfg.conjugate_samples)
    solution = _solve(problem, cfg)
    coeffs = solution.x[:K] + 1j * solution.x[K:2 * K]
    slacks = np.array(solution.x[2 * K:])
    _check_hard_margin(cfg, slacks)
    duals = np.array(solution.lam[N:2 * N])
    log.info(f"SVC complexo treinado ({features.label}, N={N}, C={cfg.effective_C:g}): "
             f"objetivo={solution.objective:.8g}, {solution.iterations} iterações.")
    return TrainedModel(Hypothesis(features, coeffs), solution, slacks, duals, cfg,
                        dataset_fingerprint(data), data, rule="complex_svc")


def real_svc_problem(features: FeatureSet, data: Dataset, C: float) -> QPProblem:
    values = features.values(data.z)
    if np.max(np.abs(values.imag), initial=0.0) > 1e-12:
        raise InvalidArgumentError("SVC real exige features reais (use realify_features).")
    K, N = features.K, data.n
    psi = values.real
    t = data.t[:, None].astype(float)
    eye = np.eye(N)
    A = np.vstack([np.hstack([np.zeros((N, K)), eye]), np.hstack([t * psi, eye])])
    b = np.concatenate([np.zeros(N), np.ones(N)])
    Q = np.diag(np.concatenate([features.regularization_mask.astype(float), np.zeros(N)]))
    c = np.concatenate([np.zeros(K), np.full(N, C)])
    return QPProblem(Q, c, A, b)


def train_real_svc(data: Dataset, features: FeatureSet, cfg: TrainConfig) -> TrainedModel:
    """
    SVC real: min ½‖w‖² + CΣξ, t_n f(x_n) ≥ 1 − ξ_n, ξ ≥ 0.

    As features precisam ser reais nos pontos de treino (ex.: pilha Re/−Im das
    projeções ψ, ou features de Dirac).
    """
    K, N = features.K, data.n
    problem = real_svc_problem(features, data, cfg.effective_C)
    solution = _solve(problem, cfg)
    slacks = np.array(solution.x[K:])
    _check_hard_margin(cfg, slacks)
    duals = np.array(solution.lam[N:])
    log.info(f"SVC real treinado ({features.label}, N={N}, C={cfg.effective_C:g}): "
             f"objetivo={solution.objective:.8g}.")
    return TrainedModel(Hypothesis(features, solution.x[:K]), solution, slacks, duals, cfg,
                        dataset_fingerprint(data), data, rule="real_svc")


def train_model(data: Dataset, cfg: TrainConfig) -> TrainedModel:
    """Despacha para o SVC complexo (disco) ou real (features ANN no intervalo)."""
    if cfg.feature_kind.is_ann:
        features = realify_features(build_features(cfg.feature_kind, cfg.K))
        return train_real_svc(data, features, cfg)
    return train_complex_svc(data, cfg)


def train_robust(data: Dataset, cfg: TrainConfig) -> TrainedModel:
    """
    Regra robusta: o mesmo programa sobre as features harmônicas, onde ½‖a‖²
    coincide com a energia de Dirichlet da hipótese.
    """
    robust_cfg = replace(cfg, feature_kind=cfg.feature_kind.robust_counterpart)
    model = train_model(data, robust_cfg)
    log.info(f"Modelo robusto: energia de Dirichlet {model_energy(model):.6g}")
    return model


def parameter_hypothesis(model: TrainedModel) -> Optional[Hypothesis]:
    """h(ω) = Σ a_α φ_α(ω) sobre o disco de parâmetros, para modelos ANN."""
    complex_h = model.complex_hypothesis
    basis = getattr(complex_h.features, "parameter_basis", None)
    if basis is None:
        return None
    return Hypothesis(basis, complex_h.coeffs)


def model_energy(model: TrainedModel) -> float:
    """
    Energia de Dirichlet relevante: da hipótese no disco para modelos complexos,
    do campo de parâmetros h(ω) para modelos ANN.
    """
    h = parameter_hypothesis(model)
    if h is not None:
        return dirichlet_energy(h)
    return dirichlet_energy(model.hypothesis)


def reconstruct_from_duals(model: TrainedModel) -> np.ndarray:
    """
    Coeficientes pela forma dual: Σ_n λ_n t_n conj(ψ(x_n)). Vale para as
    colunas regularizadas de um SVC real.
    """
    if model.rule != "real_svc":
        raise InvalidArgumentError("Reconstrução dual implementada apenas para o SVC real.")
    psi = model.hypothesis.features.values(model.dataset.z)
    weights = model.duals * model.dataset.t
    return weights @ np.conj(psi)


def project_dual_activation(model: TrainedModel, family: ActivationFamily,
                            basis: FeatureSet, n_radial: int = 32, n_angular: int = 48) -> np.ndarray:
    """
    Projeta h*(ω) = Σ λ_n t_n s(x_n; ω) na base: c_α = ∫ h*(ω) conj(φ_α(ω)) dV.
    Para a ReLU a integral é dividida nas retas de dobra de cada amostra.
    """
    x = np.real(model.dataset.z)
    weights = model.duals * model.dataset.t
    kinks = np.concatenate([-np.arctan2(x, 1.0), np.pi - np.arctan2(x, 1.0)])
    rule = split_disk_rule(kinks, n_radial, n_angular)
    omega = rule.points
    h_star = family.evaluate(x[None, :], omega[:, None]) @ weights
    return rule.gram(basis.values(omega), h_star[:, None].astype(complex))[:, 0]


def save_model(model: TrainedModel, directory: Union[str, Path], name: str) -> Dict[str, Path]:
    """Grava <name>_coeffs.csv e <name>_meta.json."""
    from utils.file_utils import write_csv, write_json

    directory = Path(directory)
    coeffs_path = write_csv(coefficients_frame(model.hypothesis), directory / f"{name}_coeffs.csv")
    meta_path = write_json(model.metadata(), directory / f"{name}_meta.json")
    return {"coeffs": coeffs_path, "meta": meta_path}


def load_hypothesis(path: Union[str, Path], feature_kind: FeatureChoice) -> Hypothesis:
    """
    Reconstrói a hipótese de um <name>_coeffs.csv. Para famílias ANN, um vetor
    com 2K entradas é lido sobre a pilha realificada das features.
    """
    from utils.file_utils import read_csv

    frame, _ = read_csv(path)
    coeffs = frame["re"].to_numpy() + 1j * frame["im"].to_numpy()
    kind = FeatureChoice(feature_kind)
    if kind.is_ann and coeffs.size % 2 == 0:
        features = realify_features(build_features(kind, coeffs.size // 2))
        return Hypothesis(features, coeffs)
    return Hypothesis(build_features(kind, coeffs.size), coeffs)
