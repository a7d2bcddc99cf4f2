# modules/core.py

import hashlib
import io
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline

from modules.errors import (
    DegenerateDatasetError,
    DomainViolationError,
    InvalidArgumentError,
)

log = logging.getLogger(__name__)

# Tolerância para pontos "no" disco fechado
DISK_TOLERANCE = 1e-12
# Amostras com |Re z| abaixo disso não recebem rótulo (sign(0) indefinido)
LABEL_EPS = 1e-9
# Casas decimais usadas em todos os CSVs numéricos
CSV_FLOAT_FORMAT = "%.17g"

ArrayLike = Union[complex, float, Sequence[complex], np.ndarray]


class Domain(str, Enum):
    UNIT_DISK = "unit_disk"
    UNIT_INTERVAL = "unit_interval"
    RECTANGLE = "rectangle"


class FeatureKind(str, Enum):
    MONOMIAL_ORTHONORMAL = "monomial_orthonormal"
    HARMONIC = "harmonic"
    ANN_PROJECTED = "ann_projected"
    CUSTOM_GRID = "custom_grid"


@dataclass(frozen=True)
class ComplexPoint:
    re: float
    im: float

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexPoint":
        return cls(float(np.real(z)), float(np.imag(z)))

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    def in_disk(self) -> bool:
        return self.re ** 2 + self.im ** 2 <= 1.0 + DISK_TOLERANCE


@dataclass(frozen=True)
class LabeledSample:
    z: complex
    t: int

    def __post_init__(self):
        if self.t not in (-1, 1):
            raise InvalidArgumentError(f"Rótulo inválido: {self.t} (esperado -1 ou +1)", label=self.t)


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Conjunto de treino ordenado {(z_n, t_n)}.

    Os pontos ficam em um vetor complexo e os rótulos em um vetor de inteiros;
    `samples` devolve a visão como lista de LabeledSample.
    """
    z: np.ndarray
    t: np.ndarray
    provenance: str = "custom"

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=complex)).copy()
        t = np.atleast_1d(np.asarray(self.t)).astype(int).copy()
        if z.shape != t.shape:
            raise InvalidArgumentError("Pontos e rótulos com tamanhos diferentes.", n_z=z.size, n_t=t.size)
        if z.size < 1:
            raise DegenerateDatasetError("Conjunto de dados vazio.")
        if not np.all(np.isin(t, (-1, 1))):
            raise InvalidArgumentError("Rótulos devem ser exatamente -1 ou +1.")
        if np.unique(z).size != z.size:
            raise InvalidArgumentError("Dois exemplos compartilham o mesmo ponto z.")
        z.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "t", t)

    @property
    def n(self) -> int:
        return int(self.z.size)

    @property
    def samples(self) -> List[LabeledSample]:
        return [LabeledSample(complex(z), int(t)) for z, t in zip(self.z, self.t)]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.z[idx], self.t[idx], f"{self.provenance} [subset]")


def as_points(z: ArrayLike) -> np.ndarray:
    """Converte escalar/sequência/ComplexPoint em vetor complexo 1-D."""
    if isinstance(z, ComplexPoint):
        z = complex(z)
    return np.atleast_1d(np.asarray(z, dtype=complex)).ravel()


def check_domain(points: np.ndarray, domain: Domain,
                 bounds: Optional[Tuple[float, float, float, float]] = None) -> None:
    """
    Verifica se todos os pontos estão no domínio fechado.

    Raises:
        DomainViolationError: com o primeiro ponto fora do domínio
    """
    if domain == Domain.UNIT_DISK:
        bad = np.abs(points) > 1.0 + DISK_TOLERANCE
    elif domain == Domain.UNIT_INTERVAL:
        bad = (np.abs(points.imag) > DISK_TOLERANCE) | (points.real < -DISK_TOLERANCE) \
            | (points.real > 1.0 + DISK_TOLERANCE)
    elif domain == Domain.RECTANGLE:
        if bounds is None:
            raise InvalidArgumentError("Domínio retangular sem limites.")
        x0, x1, y0, y1 = bounds
        bad = (points.real < x0 - DISK_TOLERANCE) | (points.real > x1 + DISK_TOLERANCE) \
            | (points.imag < y0 - DISK_TOLERANCE) | (points.imag > y1 + DISK_TOLERANCE)
    else:
        raise InvalidArgumentError(f"Domínio desconhecido: {domain}")
    if np.any(bad):
        first = complex(points[np.argmax(bad)])
        raise DomainViolationError(f"Ponto {first} fora do domínio {domain.value}.", point=first)


# --- Conjuntos de features ---

class FeatureSet(ABC):
    """
    Família truncada de K features complexas sobre um domínio, avaliável junto
    com a derivada complexa (ou d/dx no intervalo).

    `constant_index` marca a feature constante, se houver; `unregularized`
    lista as colunas excluídas do termo ½‖a‖² no treino.
    """

    def __init__(self, kind: FeatureKind, domain: Domain, K: int,
                 constant_index: Optional[int] = None,
                 unregularized: Sequence[int] = (),
                 bounds: Optional[Tuple[float, float, float, float]] = None,
                 label: str = ""):
        if K < 1:
            raise InvalidArgumentError(f"K deve ser >= 1 (recebido {K}).", K=K)
        self.kind = kind
        self.domain = domain
        self.K = int(K)
        self.constant_index = constant_index
        self.unregularized = tuple(int(i) for i in unregularized)
        self.bounds = bounds
        self.label = label or kind.value

    @property
    def includes_constant(self) -> bool:
        return self.constant_index is not None

    @property
    def regularization_mask(self) -> np.ndarray:
        mask = np.ones(self.K, dtype=bool)
        mask[list(self.unregularized)] = False
        return mask

    def values(self, z: ArrayLike) -> np.ndarray:
        points = as_points(z)
        check_domain(points, self.domain, self.bounds)
        return self._values(points)

    def derivatives(self, z: ArrayLike) -> np.ndarray:
        points = as_points(z)
        check_domain(points, self.domain, self.bounds)
        return self._derivatives(points)

    @abstractmethod
    def _values(self, points: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def _derivatives(self, points: np.ndarray) -> np.ndarray:
        ...

    def describe(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "domain": self.domain.value,
            "K": self.K,
            "constant_index": self.constant_index,
            "unregularized": list(self.unregularized),
            "label": self.label,
        }


class MonomialFeatures(FeatureSet):
    """Base ortonormal de A²(D): φ_k(z) = sqrt((k+1)/π)·z^k."""

    def __init__(self, K: int):
        super().__init__(FeatureKind.MONOMIAL_ORTHONORMAL, Domain.UNIT_DISK, K,
                         constant_index=0, label=f"monomial K={K}")
        self.powers = np.arange(self.K)
        self.norms = np.sqrt((self.powers + 1) / np.pi)

    def _values(self, points: np.ndarray) -> np.ndarray:
        return points[:, None] ** self.powers[None, :] * self.norms

    def _derivatives(self, points: np.ndarray) -> np.ndarray:
        lowered = np.maximum(self.powers - 1, 0)
        return points[:, None] ** lowered[None, :] * (self.powers * self.norms)


class LinearMapFeatures(FeatureSet):
    """Features obtidas por combinação linear de uma base: φ'_j = Σ_k T_jk φ_k."""

    def __init__(self, base: FeatureSet, matrix: np.ndarray, kind: FeatureKind,
                 constant_index: Optional[int] = None, unregularized: Sequence[int] = (),
                 label: str = ""):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[1] != base.K:
            raise InvalidArgumentError("Matriz de transformação incompatível com a base.",
                                       shape=str(matrix.shape), K=base.K)
        super().__init__(kind, base.domain, matrix.shape[0], constant_index, unregularized,
                         base.bounds, label)
        self.base = base
        self.matrix = matrix

    def _values(self, points: np.ndarray) -> np.ndarray:
        return self.base._values(points) @ self.matrix.T

    def _derivatives(self, points: np.ndarray) -> np.ndarray:
        return self.base._derivatives(points) @ self.matrix.T


class TabulatedFeatures(FeatureSet):
    """
    Features complexas de x real tabuladas numa grade, com interpolação cúbica
    (partes real e imaginária interpoladas juntas).
    """

    def __init__(self, grid: np.ndarray, table: np.ndarray, kind: FeatureKind = FeatureKind.ANN_PROJECTED,
                 constant_index: Optional[int] = None, unregularized: Sequence[int] = (),
                 label: str = "", metadata: Optional[Dict[str, Any]] = None):
        grid = np.asarray(grid, dtype=float)
        table = np.asarray(table, dtype=complex)
        if table.shape[0] != grid.size or grid.size < 4:
            raise InvalidArgumentError("Tabela de features incompatível com a grade.",
                                       grid=grid.size, rows=table.shape[0])
        super().__init__(kind, Domain.UNIT_INTERVAL, table.shape[1], constant_index, unregularized,
                         label=label)
        self.grid = grid
        self.table = table
        self.metadata = dict(metadata or {})
        stacked = np.concatenate([table.real, table.imag], axis=1)
        self._spline = CubicSpline(grid, stacked, axis=0)
        self._dspline = self._spline.derivative()

    def _unstack(self, stacked: np.ndarray) -> np.ndarray:
        return stacked[:, :self.K] + 1j * stacked[:, self.K:]

    def _values(self, points: np.ndarray) -> np.ndarray:
        return self._unstack(self._spline(points.real))

    def _derivatives(self, points: np.ndarray) -> np.ndarray:
        return self._unstack(self._dspline(points.real))

    def to_frame(self) -> pd.DataFrame:
        data = {"x": self.grid}
        for k in range(self.K):
            data[f"re_{k}"] = self.table[:, k].real
            data[f"im_{k}"] = self.table[:, k].imag
        return pd.DataFrame(data)


class CallableFeatures(FeatureSet):
    """Features definidas por funções vetorizadas (valores e derivadas)."""

    def __init__(self, value_fn: Callable[[np.ndarray], np.ndarray],
                 derivative_fn: Callable[[np.ndarray], np.ndarray], K: int,
                 domain: Domain = Domain.UNIT_DISK, kind: FeatureKind = FeatureKind.CUSTOM_GRID,
                 constant_index: Optional[int] = None, unregularized: Sequence[int] = (),
                 bounds: Optional[Tuple[float, float, float, float]] = None, label: str = ""):
        super().__init__(kind, domain, K, constant_index, unregularized, bounds, label)
        self.value_fn = value_fn
        self.derivative_fn = derivative_fn

    def _values(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.value_fn(points), dtype=complex).reshape(points.size, self.K)

    def _derivatives(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.derivative_fn(points), dtype=complex).reshape(points.size, self.K)


# --- Hipóteses ---

@dataclass(frozen=True, eq=False)
class Hypothesis:
    """f(z) = Σ_k a_k φ_k(z) sobre um FeatureSet."""
    features: FeatureSet
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=complex)).copy()
        if coeffs.shape != (self.features.K,):
            raise InvalidArgumentError(
                f"Vetor de coeficientes com tamanho {coeffs.size}, esperado {self.features.K}.")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zero(cls, features: FeatureSet) -> "Hypothesis":
        return cls(features, np.zeros(features.K, dtype=complex))

    @classmethod
    def basis_vector(cls, features: FeatureSet, k: int, scale: complex = 1.0) -> "Hypothesis":
        coeffs = np.zeros(features.K, dtype=complex)
        coeffs[k] = scale
        return cls(features, coeffs)

    def __call__(self, z: ArrayLike) -> np.ndarray:
        return self.features.values(z) @ self.coeffs

    def derivative(self, z: ArrayLike) -> np.ndarray:
        return self.features.derivatives(z) @ self.coeffs

    def combine(self, other: "Hypothesis", alpha: complex = 1.0, beta: complex = 1.0) -> "Hypothesis":
        if other.features is not self.features:
            raise InvalidArgumentError("Combinação linear exige o mesmo FeatureSet.")
        return Hypothesis(self.features, alpha * self.coeffs + beta * other.coeffs)

    def scaled(self, c: complex) -> "Hypothesis":
        return Hypothesis(self.features, c * self.coeffs)

    def regularized_norm_sq(self) -> float:
        """‖a‖² restrito às colunas regularizadas."""
        mask = self.features.regularization_mask
        return float(np.sum(np.abs(self.coeffs[mask]) ** 2))


def _scalar_or_array(values: np.ndarray, z: ArrayLike):
    if np.ndim(z) == 0 or isinstance(z, ComplexPoint):
        return complex(values[0])
    return values


def eval_hypothesis(h: Hypothesis, z: ArrayLike):
    """
    Avalia f(z) = Σ a_k φ_k(z).

    Args:
        h (Hypothesis): Hipótese
        z: Ponto (escalar, ComplexPoint) ou vetor de pontos

    Returns:
        complex para entrada escalar, np.ndarray caso contrário

    Raises:
        DomainViolationError: se algum ponto estiver fora do domínio das features
    """
    return _scalar_or_array(h(z), z)


def eval_derivative(h: Hypothesis, z: ArrayLike):
    """Avalia f'(z) = Σ a_k φ_k'(z) (mesmas convenções de eval_hypothesis)."""
    return _scalar_or_array(h.derivative(z), z)


def complex_01_loss(t: int, z: ArrayLike, h: Hypothesis) -> float:
    """
    Perda 0-1 complexa: [sign(Re f(z)) ≠ t] + (Im f(z))².
    Re f = 0 conta como erro de classificação.
    """
    if t not in (-1, 1):
        raise InvalidArgumentError(f"Rótulo inválido: {t}", label=t)
    f = complex(h(z)[0])
    misclassified = 1.0 if np.sign(f.real) != t else 0.0
    return misclassified + f.imag ** 2


def power_series_coefficients(h: Hypothesis) -> np.ndarray:
    """Coeficientes de z^k para uma hipótese sobre a base monomial ortonormal."""
    if not isinstance(h.features, MonomialFeatures):
        raise InvalidArgumentError("Conversão para série de potências exige a base monomial.")
    return h.coeffs * h.features.norms


# --- Conjuntos de dados ---

def sign_labeler(z: ArrayLike) -> np.ndarray:
    """t(z) = sign(Re z), com 0 onde |Re z| < LABEL_EPS."""
    points = as_points(z)
    return np.where(np.abs(points.real) < LABEL_EPS, 0.0, np.sign(points.real))


def make_circle_dataset(n: int) -> Dataset:
    """
    Gera S_n = {(e^{i2πk/n}, sign(Re z))}, descartando pontos com |Re z| < 1e-9.

    Raises:
        InvalidArgumentError: n < 2
        DegenerateDatasetError: todos os pontos descartados
    """
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"n deve ser inteiro >= 2 (recebido {n}).", n=n)
    k = np.arange(int(n))
    z = np.exp(2j * np.pi * k / n)
    keep = np.abs(z.real) >= LABEL_EPS
    dropped = int(np.sum(~keep))
    if dropped:
        log.warning(f"S_{n}: {dropped} ponto(s) com Re z = 0 descartado(s) (rótulo indefinido).")
    if not np.any(keep):
        raise DegenerateDatasetError(f"S_{n} ficou vazio após descartar pontos sem rótulo.", n=n)
    z = z[keep]
    return Dataset(z, np.sign(z.real).astype(int), provenance=f"S_{n} circle")


def make_interval_dataset(n: int = 16) -> Dataset:
    """
    Tarefa de intervalo usada no experimento de ANN: t(x) = sign(x − ½) em n
    pontos equiespaçados de [0, 1]. Tarefa sintética; a proveniência registra isso.
    """
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"n deve ser inteiro >= 2 (recebido {n}).", n=n)
    x = np.linspace(0.0, 1.0, int(n))
    keep = np.abs(x - 0.5) >= LABEL_EPS
    if not np.any(keep):
        raise DegenerateDatasetError("Conjunto de intervalo vazio.", n=n)
    x = x[keep]
    return Dataset(x.astype(complex), np.sign(x - 0.5).astype(int),
                   provenance=f"interval toy n={n} (synthetic)")


def interval_chart(z: ArrayLike) -> np.ndarray:
    """Carta do disco no intervalo: x = (1 + Re z)/2, de modo que sign(Re z) = sign(x − ½)."""
    return np.clip((1.0 + as_points(z).real) / 2.0, 0.0, 1.0)


def chart_dataset(ds: Dataset) -> Dataset:
    """
    Lê um conjunto do disco pela carta `interval_chart`. Pontos conjugados
    caem no mesmo x; fica o primeiro de cada par (os rótulos coincidem).
    """
    x = interval_chart(ds.z)
    order = np.argsort(x, kind="stable")
    fresh = np.concatenate([[True], np.diff(x[order]) > DISK_TOLERANCE])
    first = np.sort(order[fresh])
    return Dataset(x[first].astype(complex), ds.t[first], provenance=f"{ds.provenance} [interval chart]")


def dataset_to_csv(ds: Dataset, path: Optional[Union[str, Path]] = None) -> str:
    """Serializa o conjunto em CSV (re, im, t) com 17 dígitos significativos."""
    frame = pd.DataFrame({"re": ds.z.real, "im": ds.z.imag, "t": ds.t})
    text = frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    if path is not None:
        from utils.file_utils import atomic_write_text
        atomic_write_text(path, text)
    return text


def dataset_from_csv(source: Union[str, Path], provenance: str = "csv") -> Dataset:
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        frame = pd.read_csv(source)
    else:
        frame = pd.read_csv(io.StringIO(source))
    missing = {"re", "im", "t"} - set(frame.columns)
    if missing:
        raise InvalidArgumentError(f"Colunas ausentes no CSV: {sorted(missing)}")
    return Dataset(frame["re"].to_numpy() + 1j * frame["im"].to_numpy(),
                   frame["t"].to_numpy(), provenance=provenance)


def dataset_fingerprint(ds: Dataset) -> str:
    return hashlib.sha256(dataset_to_csv(ds).encode("utf-8")).hexdigest()


def coefficients_frame(h: Hypothesis) -> pd.DataFrame:
    """Tabela (k, re, im) dos coeficientes de uma hipótese."""
    return pd.DataFrame({"k": np.arange(h.features.K), "re": h.coeffs.real, "im": h.coeffs.imag})


# --- Perdas ---

class LossKind(str, Enum):
    COMPLEX_01 = "complex_01"
    HINGE_COMPLEX = "hinge_complex"


@dataclass(frozen=True)
class LossSpec:
    """
    complex_01: [sign(Re f) ≠ t] + (Im f)².
    hinge_complex: max(0, 1 − t·Re f), a relaxação linear usada pelos ataques;
    a parte imaginária entra no SVC como restrição, não aqui.
    """
    kind: LossKind = LossKind.COMPLEX_01

    def value(self, t: np.ndarray, f: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        f = np.asarray(f, dtype=complex)
        if self.kind == LossKind.COMPLEX_01:
            return (np.sign(f.real) != t).astype(float) + f.imag ** 2
        return np.maximum(0.0, 1.0 - t * f.real)

    def gradient(self, t: np.ndarray, f: np.ndarray, fprime: np.ndarray) -> np.ndarray:
        """
        Gradiente em z visto como ℝ² (codificado como complexo x + iy).
        Para u = Re f vale ∇u = conj(f'); a parte 0-1 tem gradiente nulo.
        """
        t = np.asarray(t, dtype=float)
        f = np.asarray(f, dtype=complex)
        fprime = np.asarray(fprime, dtype=complex)
        if self.kind == LossKind.COMPLEX_01:
            # ∇(Im f) = (Im f', Re f') = i·conj(f')
            return 2.0 * f.imag * 1j * np.conj(fprime)
        active = 1.0 - t * f.real > 0
        return np.where(active, -t * np.conj(fprime), 0.0)
