# modules/quadrature.py

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence, Tuple

import numpy as np

from modules.errors import IntegrationError, InvalidArgumentError

log = logging.getLogger(__name__)

# Ordens padrão (raio × ângulo no disco, ângulos no círculo, nós no intervalo)
DISK_RADIAL_ORDER = 64
DISK_ANGULAR_ORDER = 256
CIRCLE_ORDER = 4096
INTERVAL_ORDER = 256
RECT_ORDER = 64

Integrand = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """
    Regra de quadratura: nós complexos (x + iy) e pesos positivos.

    `order` guarda os parâmetros de resolução usados na construção, para que
    relatórios e cabeçalhos de CSV possam citá-los.
    """
    domain: str
    points: np.ndarray
    weights: np.ndarray
    order: Tuple[int, ...]

    @property
    def measure(self) -> float:
        return float(np.sum(self.weights))

    def evaluate(self, f: Integrand) -> np.ndarray:
        values = np.asarray(f(self.points), dtype=complex)
        if values.shape[:1] != self.points.shape:
            values = np.broadcast_to(values, self.points.shape + values.shape[1:])
        finite = np.isfinite(values)
        if not np.all(finite):
            flat = finite.reshape(finite.shape[0], -1).all(axis=1)
            node = complex(self.points[np.argmin(flat)])
            raise IntegrationError(f"Integrando não finito no nó {node} ({self.domain}).", node=node)
        return values

    def integrate(self, f: Integrand):
        """
        Soma ponderada Σ w_m f(p_m). Integrandos vetoriais (M, ...) devolvem
        um vetor de integrais; a ordem de soma é fixa para uma dada regra.
        """
        values = self.evaluate(f)
        result = np.tensordot(self.weights, values, axes=(0, 0))
        if np.ndim(result) == 0:
            return complex(result)
        return result

    def gram(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        """G_jk = Σ_m w_m conj(left_mj) right_mk para colunas avaliadas nos nós."""
        return (np.conj(left) * self.weights[:, None]).T @ right


def _frozen(rule: QuadratureRule) -> QuadratureRule:
    rule.points.setflags(write=False)
    rule.weights.setflags(write=False)
    return rule


def _offset_angles(n: int) -> np.ndarray:
    # meio passo: nenhum nó cai em θ = ±π/2
    return 2.0 * np.pi * (np.arange(n) + 0.5) / n


@lru_cache(maxsize=32)
def disk_rule(n_radial: int = DISK_RADIAL_ORDER, n_angular: int = DISK_ANGULAR_ORDER) -> QuadratureRule:
    """Gauss–Legendre em r (jacobiano r incluído) × trapézio em θ."""
    if n_radial < 1 or n_angular < 1:
        raise InvalidArgumentError("Ordens de quadratura devem ser positivas.")
    x, w = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * (x + 1.0)
    wr = 0.5 * w * r
    theta = _offset_angles(n_angular)
    points = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = (wr[:, None] * np.full(n_angular, 2.0 * np.pi / n_angular)[None, :]).ravel()
    return _frozen(QuadratureRule("unit_disk", points, weights, (n_radial, n_angular)))


@lru_cache(maxsize=8)
def circle_rule(n_angles: int = CIRCLE_ORDER) -> QuadratureRule:
    """N ângulos equiespaçados deslocados de meio passo; pesos 2π/N."""
    if n_angles < 1:
        raise InvalidArgumentError("Número de ângulos deve ser positivo.")
    theta = _offset_angles(n_angles)
    weights = np.full(n_angles, 2.0 * np.pi / n_angles)
    return _frozen(QuadratureRule("unit_circle", np.exp(1j * theta), weights, (n_angles,)))


@lru_cache(maxsize=16)
def interval_rule(n: int = INTERVAL_ORDER, breaks: Tuple[float, ...] = (),
                  lower: float = 0.0, upper: float = 1.0) -> QuadratureRule:
    """
    Gauss–Legendre em [lower, upper], com n nós por subintervalo.

    Args:
        n (int): Nós por subintervalo
        breaks (tuple): Pontos de quebra internos (ex.: dobra de uma ReLU)
    """
    if n < 1:
        raise InvalidArgumentError("Número de nós deve ser positivo.")
    cuts = [lower] + sorted(b for b in breaks if lower < b < upper) + [upper]
    x, w = np.polynomial.legendre.leggauss(n)
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        nodes.append(0.5 * (b - a) * (x + 1.0) + a)
        weights.append(0.5 * (b - a) * w)
    points = np.concatenate(nodes).astype(complex)
    return _frozen(QuadratureRule("unit_interval", points, np.concatenate(weights), (n, len(cuts) - 1)))


@lru_cache(maxsize=16)
def rect_rule(bounds: Tuple[float, float, float, float], nx: int = RECT_ORDER,
              ny: int = RECT_ORDER) -> QuadratureRule:
    """Produto tensorial Gauss–Legendre em [x0, x1] × [y0, y1]."""
    x0, x1, y0, y1 = bounds
    if not (x1 > x0 and y1 > y0):
        raise InvalidArgumentError(f"Retângulo inválido: {bounds}")
    gx, wx = np.polynomial.legendre.leggauss(nx)
    gy, wy = np.polynomial.legendre.leggauss(ny)
    xs = 0.5 * (x1 - x0) * (gx + 1.0) + x0
    ys = 0.5 * (y1 - y0) * (gy + 1.0) + y0
    points = (xs[:, None] + 1j * ys[None, :]).ravel()
    weights = (0.25 * (x1 - x0) * (y1 - y0) * wx[:, None] * wy[None, :]).ravel()
    return _frozen(QuadratureRule("rectangle", points, weights, (nx, ny)))


@lru_cache(maxsize=64)
def sector_rule(theta0: float, theta1: float, n_radial: int = DISK_RADIAL_ORDER,
                n_angular: int = 128) -> QuadratureRule:
    """
    Setor {r ≤ 1, θ0 ≤ θ ≤ θ1} do disco, Gauss–Legendre nas duas variáveis.
    Usado para integrandos com dobra ao longo de uma reta pela origem.
    """
    if not theta1 > theta0:
        raise InvalidArgumentError("Setor vazio.")
    x, w = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * (x + 1.0)
    wr = 0.5 * w * r
    g, wg = np.polynomial.legendre.leggauss(n_angular)
    theta = 0.5 * (theta1 - theta0) * (g + 1.0) + theta0
    wt = 0.5 * (theta1 - theta0) * wg
    points = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = (wr[:, None] * wt[None, :]).ravel()
    return _frozen(QuadratureRule("unit_disk", points, weights, (n_radial, n_angular)))


def integrate_disk(f: Integrand, n_radial: int = DISK_RADIAL_ORDER,
                   n_angular: int = DISK_ANGULAR_ORDER):
    """
    Integra f sobre o disco unitário (dV = r dr dθ).

    Args:
        f: Função vetorizada de pontos complexos (M,) para valores (M,) ou (M, ...)

    Returns:
        complex ou np.ndarray

    Raises:
        IntegrationError: valor não finito em algum nó
    """
    return disk_rule(n_radial, n_angular).integrate(f)


def integrate_circle(f: Integrand, n_angles: int = CIRCLE_ORDER):
    """Integra f(e^{iθ}) dθ sobre [0, 2π)."""
    return circle_rule(n_angles).integrate(f)


def integrate_interval(f: Integrand, n: int = INTERVAL_ORDER, breaks: Sequence[float] = ()):
    """Integra f(x) dx em [0, 1]; f recebe pontos complexos com parte imaginária nula."""
    return interval_rule(n, tuple(float(b) for b in breaks)).integrate(f)


def integrate_rect(f: Integrand, bounds: Tuple[float, float, float, float],
                   nx: int = RECT_ORDER, ny: int = RECT_ORDER):
    return rect_rule(tuple(float(b) for b in bounds), nx, ny).integrate(f)


def split_disk_rule(kink_angles, n_radial: int = 32, n_angular: int = 48) -> QuadratureRule:
    """
    Disco inteiro dividido em setores nos ângulos dados (retas de dobra pela
    origem); dentro de cada setor usa sector_rule.
    """
    angles = np.sort(np.mod(np.asarray(list(kink_angles), dtype=float), 2.0 * np.pi))
    angles = angles[np.concatenate([[True], np.diff(angles) > 1e-14])] if angles.size else angles
    if angles.size == 0:
        return disk_rule(n_radial, 2 * n_angular)
    cuts = np.concatenate([angles, [angles[0] + 2.0 * np.pi]])
    rules = [sector_rule(float(a), float(b), n_radial, n_angular)
             for a, b in zip(cuts[:-1], cuts[1:]) if b - a > 1e-14]
    points = np.concatenate([r.points for r in rules])
    weights = np.concatenate([r.weights for r in rules])
    return _frozen(QuadratureRule("unit_disk", points, weights, (n_radial, n_angular, len(rules))))
