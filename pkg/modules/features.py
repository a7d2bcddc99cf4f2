# modules/features.py

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from modules.core import (
    CallableFeatures,
    Domain,
    FeatureKind,
    FeatureSet,
    Hypothesis,
    LinearMapFeatures,
    MonomialFeatures,
    TabulatedFeatures,
    as_points,
    interval_chart,
)
from modules.errors import InvalidArgumentError, NotPositiveDefiniteError
from modules.quadrature import (
    DISK_ANGULAR_ORDER,
    DISK_RADIAL_ORDER,
    INTERVAL_ORDER,
    QuadratureRule,
    disk_rule,
    interval_rule,
    rect_rule,
    sector_rule,
)

log = logging.getLogger(__name__)

# Convenção ‖∇f‖² := |f'|² (uma cópia) para f holomorfa
GRADIENT_CONVENTION = "single_copy"
EIGENVALUE_FLOOR = 1e-10
ANN_GRID_POINTS = 513
# Ordens da regra de setor usada na projeção da ReLU
SECTOR_RADIAL_ORDER = 32
SECTOR_ANGULAR_ORDER = 64


@dataclass(frozen=True, eq=False)
class TuningMatrix:
    """Σ_jk = ∫ conj(∇φ_j)·∇φ_k dV, hermitiana (real para a base monomial)."""
    matrix: np.ndarray
    basis: str
    order: Tuple[int, ...]
    convention: str = GRADIENT_CONVENTION

    @property
    def K(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def header(self) -> Dict[str, str]:
        return {
            "K": str(self.K),
            "basis": self.basis,
            "quadrature_order": "x".join(str(o) for o in self.order),
            "convention": self.convention,
        }

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for j in range(self.K):
            for k in range(self.K):
                value = self.matrix[j, k]
                rows.append((j, k, value.real, value.imag))
        return pd.DataFrame(rows, columns=["j", "k", "re", "im"])


def quadrature_for(features: FeatureSet, n_radial: int = DISK_RADIAL_ORDER,
                   n_angular: int = DISK_ANGULAR_ORDER,
                   n_interval: int = INTERVAL_ORDER) -> QuadratureRule:
    """Regra de quadratura natural para o domínio de um FeatureSet."""
    if features.domain == Domain.UNIT_DISK:
        return disk_rule(n_radial, n_angular)
    if features.domain == Domain.UNIT_INTERVAL:
        return interval_rule(n_interval)
    if features.bounds is None:
        raise InvalidArgumentError("FeatureSet retangular sem limites.")
    return rect_rule(tuple(features.bounds), n_radial, n_radial)


def tuning_matrix(features: FeatureSet, n_radial: int = DISK_RADIAL_ORDER,
                  n_angular: int = DISK_ANGULAR_ORDER,
                  n_interval: int = INTERVAL_ORDER) -> TuningMatrix:
    """
    Matriz de sintonia (Gram dos gradientes) por quadratura.

    Args:
        features (FeatureSet): Features com derivadas avaliáveis

    Returns:
        TuningMatrix: Σ simetrizada após a quadratura
    """
    rule = quadrature_for(features, n_radial, n_angular, n_interval)
    derivatives = rule.evaluate(features.derivatives)
    sigma = rule.gram(derivatives, derivatives)
    sigma = 0.5 * (sigma + sigma.conj().T)
    return TuningMatrix(sigma, features.label, rule.order)


def _non_constant(features: FeatureSet) -> np.ndarray:
    idx = np.arange(features.K)
    if features.constant_index is None:
        return idx
    return idx[idx != features.constant_index]


def inverse_sqrt(block: np.ndarray) -> np.ndarray:
    """Raiz quadrada inversa espectral de uma matriz hermitiana definida positiva."""
    values, vectors = np.linalg.eigh(block)
    smallest = float(values.min())
    if smallest <= EIGENVALUE_FLOOR:
        raise NotPositiveDefiniteError(
            f"Matriz de sintonia não é definida positiva (autovalor mínimo {smallest:.3e}).",
            eigenvalue=smallest)
    return (vectors / np.sqrt(values)) @ vectors.conj().T


def harmonic_transform(features: FeatureSet, n_radial: int = DISK_RADIAL_ORDER,
                       n_angular: int = DISK_ANGULAR_ORDER,
                       n_interval: int = INTERVAL_ORDER) -> LinearMapFeatures:
    """
    Transforma as features não constantes em φ* = Σ^{-1/2} φ.

    A feature constante (se houver) passa inalterada e fica fora da
    regularização. O resultado satisfaz ∫ conj(∇φ*_j)·∇φ*_k = δ_jk.

    Raises:
        NotPositiveDefiniteError: bloco não constante de Σ singular ou indefinido
    """
    sigma = tuning_matrix(features, n_radial, n_angular, n_interval).matrix
    active = _non_constant(features)
    if active.size == 0:
        raise NotPositiveDefiniteError("Nenhuma feature não constante para transformar.", eigenvalue=0.0)
    block = sigma[np.ix_(active, active)]
    transform = np.eye(features.K, dtype=complex)
    transform[np.ix_(active, active)] = np.conj(inverse_sqrt(block))

    unregularized = set(features.unregularized)
    if features.constant_index is not None:
        unregularized.add(features.constant_index)

    base, matrix = features, transform
    if isinstance(features, LinearMapFeatures):
        base, matrix = features.base, transform @ features.matrix
    log.info(f"Transformação harmônica de '{features.label}' (K={features.K}) construída.")
    return LinearMapFeatures(base, matrix, FeatureKind.HARMONIC,
                             constant_index=features.constant_index,
                             unregularized=sorted(unregularized),
                             label=f"harmonic[{features.label}]")


def dirichlet_energy(h: Hypothesis, n_radial: int = DISK_RADIAL_ORDER,
                     n_angular: int = DISK_ANGULAR_ORDER,
                     n_interval: int = INTERVAL_ORDER) -> float:
    """E[f] = ∫ |f'|² dV no domínio das features."""
    if not np.any(h.coeffs):
        return 0.0
    rule = quadrature_for(h.features, n_radial, n_angular, n_interval)
    values = rule.evaluate(h.derivative)
    return float(np.real(rule.weights @ (np.abs(values) ** 2)))


# --- Famílias de ativação ---

class ActivationKind(str, Enum):
    RELU_AFFINE = "relu_affine"
    DIRAC = "dirac"
    BERGMAN_KERNEL = "bergman_kernel"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class ActivationFamily:
    """
    Família s(x; ω) com x no domínio de entrada e ω no disco de parâmetros.
    `value_fn`/`derivative_fn` só são usados quando kind = custom.
    """
    kind: ActivationKind
    input_domain: Domain = Domain.UNIT_INTERVAL
    value_fn: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    derivative_fn: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def evaluate(self, x: np.ndarray, omega: np.ndarray) -> np.ndarray:
        if self.kind == ActivationKind.RELU_AFFINE:
            return np.maximum(0.0, np.real(omega) * np.real(x) + np.imag(omega))
        if self.kind == ActivationKind.BERGMAN_KERNEL:
            return 1.0 / (np.pi * (1.0 - x * np.conj(omega)) ** 2)
        if self.kind == ActivationKind.CUSTOM and self.value_fn is not None:
            return self.value_fn(x, omega)
        raise InvalidArgumentError(f"Família '{self.kind.value}' não tem avaliação pontual.")

    def derivative_x(self, x: np.ndarray, omega: np.ndarray) -> np.ndarray:
        if self.kind == ActivationKind.RELU_AFFINE:
            active = np.real(omega) * np.real(x) + np.imag(omega) > 0
            return np.where(active, np.real(omega), 0.0)
        if self.kind == ActivationKind.BERGMAN_KERNEL:
            return 2.0 * np.conj(omega) / (np.pi * (1.0 - x * np.conj(omega)) ** 3)
        if self.kind == ActivationKind.CUSTOM and self.derivative_fn is not None:
            return self.derivative_fn(x, omega)
        raise InvalidArgumentError(f"Família '{self.kind.value}' não tem derivada pontual.")


def relu_family() -> ActivationFamily:
    return ActivationFamily(ActivationKind.RELU_AFFINE, Domain.UNIT_INTERVAL)


def kernel_section_family() -> ActivationFamily:
    return ActivationFamily(ActivationKind.BERGMAN_KERNEL, Domain.UNIT_DISK)


class DiracFeatures(CallableFeatures):
    """
    Features de Dirac: ψ_j(z) = 1 se z coincide com o ponto j, 0 caso contrário.
    Como base sobre Ω, representam avaliações pontuais (propriedade de filtragem).
    """

    def __init__(self, locations: Sequence[complex], domain: Domain = Domain.UNIT_DISK,
                 width: float = 1e-9):
        self.locations = as_points(locations)
        self.width = float(width)
        K = self.locations.size
        super().__init__(self._indicator, lambda p: np.zeros((p.size, K), dtype=complex), K,
                         domain=domain, kind=FeatureKind.CUSTOM_GRID,
                         label=f"dirac n={K}")

    def _indicator(self, points: np.ndarray) -> np.ndarray:
        distance = np.abs(points[:, None] - self.locations[None, :])
        return (distance <= self.width).astype(complex)


def dirac_features(points: Sequence[complex], domain: Domain = Domain.UNIT_DISK) -> DiracFeatures:
    """Memorizador de Dirac: uma feature indicadora por ponto de treino."""
    return DiracFeatures(points, domain)


def _relu_projection_row(x: float, basis: FeatureSet, conjugate: bool) -> np.ndarray:
    # região positiva de Re(ω)x + Im(ω) é o setor θ ∈ (−β, π − β)
    beta = float(np.arctan2(x, 1.0))
    rule = sector_rule(-beta, np.pi - beta, SECTOR_RADIAL_ORDER, SECTOR_ANGULAR_ORDER)
    phi = basis.values(rule.points)
    if conjugate:
        phi = np.conj(phi)
    s = np.maximum(0.0, rule.points.real * x + rule.points.imag)
    return (rule.weights * s) @ phi


def _cache_matches(cached: "TabulatedFeatures", metadata: Dict[str, Any], grid: np.ndarray) -> bool:
    # o cabeçalho do CSV guarda tudo como texto
    stored = cached.metadata
    same_meta = all(str(stored.get(key)) == str(metadata[key])
                    for key in ("basis", "K", "sector_order", "conjugate"))
    return same_meta and cached.K == metadata["K"] and np.array_equal(cached.grid, grid)


def project_activation(family: ActivationFamily, basis: FeatureSet,
                       x_grid: Optional[np.ndarray] = None, conjugate: bool = False,
                       cache_path: Optional[Union[str, Path]] = None) -> FeatureSet:
    """
    Features projetadas ψ_α(x) = ∫_Ω φ_α(ω) s(x; ω) dV(ω).

    - ReLU afim: tabela em x_grid ⊂ [0, 1] (513 pontos por padrão) com
      interpolação cúbica; a integral é feita no setor onde a ReLU é positiva.
    - Base de Dirac em ζ_j: filtragem, ψ_j(x) = s(x; ζ_j).
    - Família de Dirac: ψ_α = φ_α (a própria base).

    Args:
        family (ActivationFamily): Família de ativação
        basis (FeatureSet): Base sobre o disco de parâmetros
        x_grid: Grade de tabulação (somente ReLU)
        conjugate (bool): Usa conj(φ_α) no integrando
        cache_path: CSV onde a tabela é lida/gravada

    Returns:
        FeatureSet: Features sobre o domínio de entrada
    """
    if basis.domain != Domain.UNIT_DISK:
        raise InvalidArgumentError("A base de parâmetros deve estar no disco unitário.")

    if family.kind == ActivationKind.DIRAC:
        return CallableFeatures(basis._values, basis._derivatives, basis.K, domain=basis.domain,
                                kind=basis.kind, constant_index=basis.constant_index,
                                unregularized=basis.unregularized, label=f"dirac[{basis.label}]")

    if isinstance(basis, DiracFeatures):
        centers = basis.locations
        return CallableFeatures(
            lambda p: family.evaluate(p[:, None], centers[None, :]),
            lambda p: family.derivative_x(p[:, None], centers[None, :]),
            basis.K, domain=family.input_domain, kind=FeatureKind.ANN_PROJECTED,
            label=f"{family.kind.value} sections n={basis.K}")

    if family.kind != ActivationKind.RELU_AFFINE:
        raise InvalidArgumentError(
            f"Projeção de '{family.kind.value}' só é suportada sobre base de Dirac.")

    grid = np.linspace(0.0, 1.0, ANN_GRID_POINTS) if x_grid is None else np.asarray(x_grid, dtype=float)
    if grid.min() < 0.0 or grid.max() > 1.0:
        raise InvalidArgumentError("x_grid deve estar contido em [0, 1].")
    kind = FeatureKind.ANN_PROJECTED
    label = f"relu[{basis.label}]"
    metadata = {"K": basis.K, "basis": basis.label, "grid_points": grid.size,
                "sector_order": f"{SECTOR_RADIAL_ORDER}x{SECTOR_ANGULAR_ORDER}",
                "conjugate": conjugate}

    if cache_path is not None and Path(cache_path).exists():
        cached = load_feature_table(cache_path, basis.unregularized)
        if _cache_matches(cached, metadata, grid):
            log.info(f"Tabela de features projetadas lida do cache: {cache_path}")
            cached.parameter_basis = basis
            return cached
        log.warning(f"Cache {cache_path} não corresponde à base atual; recalculando.")

    table = np.vstack([_relu_projection_row(float(x), basis, conjugate) for x in grid])
    projected = TabulatedFeatures(grid, table, kind=kind, unregularized=basis.unregularized,
                                  label=label, metadata=metadata)
    projected.parameter_basis = basis
    log.info(f"Features ReLU projetadas: K={basis.K}, {grid.size} pontos de grade.")
    if cache_path is not None:
        save_feature_table(projected, cache_path)
    return projected


def save_feature_table(features: TabulatedFeatures, path: Union[str, Path]) -> Path:
    from utils.file_utils import write_csv
    header = {k: str(v) for k, v in features.metadata.items()}
    header["label"] = features.label
    return write_csv(features.to_frame(), path, header=header)


def load_feature_table(path: Union[str, Path], unregularized: Sequence[int] = ()) -> TabulatedFeatures:
    from utils.file_utils import read_csv
    frame, header = read_csv(path)
    K = (len(frame.columns) - 1) // 2
    table = np.stack([frame[f"re_{k}"].to_numpy() + 1j * frame[f"im_{k}"].to_numpy()
                      for k in range(K)], axis=1)
    metadata = dict(header)
    if "K" in metadata:
        metadata["K"] = int(metadata["K"])
    return TabulatedFeatures(frame["x"].to_numpy(), table, unregularized=unregularized,
                             label=header.get("label", "cached"), metadata=metadata)


def realify_features(features: FeatureSet) -> CallableFeatures:
    """
    Empilha (Re ψ, −Im ψ) em 2K features reais. Um SVC real com pesos
    (u, v) sobre a pilha equivale à hipótese complexa a = u + iv.
    """
    K = features.K

    def stack(values: np.ndarray) -> np.ndarray:
        return np.concatenate([values.real, -values.imag], axis=1).astype(complex)

    unregularized = list(features.unregularized) + [K + j for j in features.unregularized]
    realified = CallableFeatures(lambda p: stack(features._values(p)),
                                 lambda p: stack(features._derivatives(p)),
                                 2 * K, domain=features.domain, kind=features.kind,
                                 unregularized=unregularized, bounds=features.bounds,
                                 label=f"real[{features.label}]")
    realified.source = features
    return realified


def complex_from_realified(weights: np.ndarray) -> np.ndarray:
    weights = np.real(np.asarray(weights))
    K = weights.size // 2
    return weights[:K] + 1j * weights[K:]


def ann_features(K: int = 30, harmonic: bool = False, x_grid: Optional[np.ndarray] = None,
                 conjugate: bool = False, cache_dir: Optional[Union[str, Path]] = None) -> FeatureSet:
    """Features ReLU projetadas sobre a base monomial (ou sua versão harmônica)."""
    basis: FeatureSet = MonomialFeatures(K)
    if harmonic:
        basis = harmonic_transform(basis)
    cache_path = None
    if cache_dir is not None:
        suffix = "harmonic" if harmonic else "orthonormal"
        cache_path = Path(cache_dir) / f"ann_features_{suffix}_K{K}.csv"
    return project_activation(relu_family(), basis, x_grid, conjugate, cache_path)


def lift_to_disk(features: FeatureSet) -> CallableFeatures:
    """
    Leva features reais do intervalo ao disco por x = (1 + Re z)/2.

    Como F(x(z)) é real, ∂_x Re f = ½F'(x) e ∂_y Re f = 0; a derivada devolvida
    é ½F'(x), real, o que mantém a convenção ∇ Re f = (Re f', −Im f').
    Exige features reais (por exemplo, saída de `realify_features`).
    """
    if features.domain != Domain.UNIT_INTERVAL:
        raise InvalidArgumentError(f"Só features do intervalo podem ser levadas ao disco "
                                   f"(recebido {features.domain.value}).")
    return CallableFeatures(lambda p: features._values(interval_chart(p).astype(complex)).real,
                            lambda p: 0.5 * features._derivatives(interval_chart(p).astype(complex)).real,
                            features.K, domain=Domain.UNIT_DISK, kind=features.kind,
                            constant_index=features.constant_index, unregularized=features.unregularized,
                            label=f"disk[{features.label}]")
