# modules/bergman.py

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from modules.core import ArrayLike, Hypothesis, MonomialFeatures, as_points, DISK_TOLERANCE
from modules.errors import DomainViolationError, InvalidArgumentError, SingularEvaluationError
from modules.quadrature import DISK_ANGULAR_ORDER, DISK_RADIAL_ORDER, circle_rule, disk_rule

log = logging.getLogger(__name__)

# Ângulos da projeção de Szegő; o rotulador tem saltos, então a regra precisa ser fina
SZEGO_ANGLES = 65536
POLE_TOLERANCE = 1e-12
# Crescimento perto do ponto de ramificação i de arctan: |o(0.999i)| > 1.5 exige K >= 34
BRANCH_POINT = 0.999j
BRANCH_POINT_K = 64
BRANCH_POINT_MIN = 1.5
BOUNDARY_TOLERANCE = 1e-9

Labeler = Callable[[np.ndarray], np.ndarray]


class KernelKind(str, Enum):
    BERGMAN_DISK = "bergman_disk"
    SZEGO_DISK = "szego_disk"
    TRUNCATED_SERIES = "truncated_series"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind = KernelKind.SZEGO_DISK
    K: Optional[int] = None

    def __post_init__(self):
        if self.kind == KernelKind.TRUNCATED_SERIES and (self.K is None or self.K < 1):
            raise InvalidArgumentError("Núcleo em série truncada exige K >= 1.")


def _pair(z: ArrayLike, zeta: ArrayLike):
    zz, ww = np.broadcast_arrays(as_points(z), as_points(zeta))
    return zz, ww


def _check_pole(denominator: np.ndarray, z: np.ndarray, zeta: np.ndarray) -> None:
    near = np.abs(denominator) < POLE_TOLERANCE
    if np.any(near):
        i = int(np.argmax(near))
        raise SingularEvaluationError(
            f"Polo do núcleo: z·conj(ζ) = 1 em z={complex(z[i])}, ζ={complex(zeta[i])}.",
            z=complex(z[i]), zeta=complex(zeta[i]))


def _shape_like(values: np.ndarray, z: ArrayLike, zeta: ArrayLike):
    if np.ndim(z) == 0 and np.ndim(zeta) == 0:
        return complex(values[0])
    return values


def bergman_kernel(z: ArrayLike, zeta: ArrayLike):
    """
    Núcleo de Bergman do disco: K(z, ζ) = 1 / (π (1 − z·conj(ζ))²).

    Aceita escalares ou vetores (com broadcasting).

    Raises:
        DomainViolationError: ponto fora do disco fechado
        SingularEvaluationError: z·conj(ζ) = 1
    """
    zz, ww = _pair(z, zeta)
    if np.any(np.abs(zz) > 1.0 + DISK_TOLERANCE) or np.any(np.abs(ww) > 1.0 + DISK_TOLERANCE):
        raise DomainViolationError("Argumento do núcleo de Bergman fora do disco.")
    denominator = 1.0 - zz * np.conj(ww)
    _check_pole(denominator, zz, ww)
    return _shape_like(1.0 / (np.pi * denominator ** 2), z, zeta)


def szego_kernel(z: ArrayLike, zeta_boundary: ArrayLike):
    """Núcleo de Szegő: S(z, ζ) = 1 / (2π (1 − z·conj(ζ))), com |ζ| = 1."""
    zz, ww = _pair(z, zeta_boundary)
    if np.any(np.abs(np.abs(ww) - 1.0) > BOUNDARY_TOLERANCE):
        raise DomainViolationError("Segundo argumento do núcleo de Szegő deve estar no círculo unitário.")
    if np.any(np.abs(zz) > 1.0 + DISK_TOLERANCE):
        raise DomainViolationError("Primeiro argumento do núcleo de Szegő fora do disco.")
    denominator = 1.0 - zz * np.conj(ww)
    _check_pole(denominator, zz, ww)
    return _shape_like(1.0 / (2.0 * np.pi * denominator), z, zeta_boundary)


def kernel_series(z: ArrayLike, zeta: ArrayLike, K: int):
    """Σ_{k<K} φ_k(z) conj(φ_k(ζ)) na base monomial ortonormal."""
    basis = MonomialFeatures(K)
    zz, ww = _pair(z, zeta)
    values = np.sum(basis.values(zz) * np.conj(basis.values(ww)), axis=1)
    return _shape_like(values, z, zeta)


def evaluate_kernel(spec: KernelSpec, z: ArrayLike, zeta: ArrayLike):
    if spec.kind == KernelKind.BERGMAN_DISK:
        return bergman_kernel(z, zeta)
    if spec.kind == KernelKind.SZEGO_DISK:
        return szego_kernel(z, zeta)
    return kernel_series(z, zeta, spec.K)


def holomorphic_bayes(labeler: Labeler, kernel: KernelSpec = KernelSpec(), K: int = 30,
                      n_angles: int = SZEGO_ANGLES, n_radial: int = DISK_RADIAL_ORDER,
                      n_angular: int = DISK_ANGULAR_ORDER) -> Hypothesis:
    """
    Projeção ortogonal de um rotulador no espaço holomorfo truncado.

    - Szegő: c_k = (1/2π) ∫ t(e^{iθ}) e^{−ikθ} dθ é o coeficiente de z^k,
      convertido para a base ortonormal por a_k = c_k / sqrt((k+1)/π).
    - Bergman (ou série truncada): a_k = ∫_D t(ζ) conj(φ_k(ζ)) dV.

    Args:
        labeler: Função vetorizada de pontos complexos para valores reais/complexos
        kernel (KernelSpec): Núcleo que define o produto interno
        K (int): Truncamento

    Returns:
        Hypothesis: Projeção sobre a base monomial com K termos
    """
    if K < 1:
        raise InvalidArgumentError(f"K deve ser >= 1 (recebido {K}).", K=K)
    basis = MonomialFeatures(K)
    if kernel.kind == KernelKind.SZEGO_DISK:
        rule = circle_rule(n_angles)
        values = rule.evaluate(labeler)
        powers = np.conj(rule.points[:, None] ** basis.powers[None, :])
        series = (rule.weights * values) @ powers / (2.0 * np.pi)
        coeffs = series / basis.norms
    else:
        rule = disk_rule(n_radial, n_angular)
        values = rule.evaluate(labeler)
        coeffs = rule.gram(basis.values(rule.points), values[:, None])[:, 0]
    log.info(f"Projeção holomorfa ({kernel.kind.value}, K={K}) calculada com {rule.points.size} nós.")
    return Hypothesis(basis, coeffs)


def sign_boundary_labeler(z: np.ndarray) -> np.ndarray:
    """t(z) = sign(Re z); nos nós deslocados nunca há Re z = 0 exato."""
    return np.sign(np.real(z))


def sign_labeler_series(K: int) -> np.ndarray:
    """
    Coeficientes de z^k (k < K) da projeção exata de sign(Re z):
    (2/π)·arctan(z) = (2/π)·Σ (−1)^j z^(2j+1)/(2j+1).
    """
    k = np.arange(K)
    odd = k % 2 == 1
    series = np.zeros(K)
    series[odd] = (2.0 / np.pi) * np.where((k[odd] // 2) % 2 == 0, 1.0, -1.0) / k[odd]
    return series


def truncated_branch_bound(K: int) -> float:
    """
    Cota (2/π)·Σ_{k<K ímpar} 1/k de |o_K(z)| em todo o disco, atingida em z → i.
    Para K = 30 ela fica abaixo de 1.5.
    """
    k = np.arange(1, K, 2)
    return float((2.0 / np.pi) * np.sum(1.0 / k))
