# modules/pde.py

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.signal import fftconvolve

from modules.errors import (
    BoundaryConditionError,
    InvalidArgumentError,
    ResolutionInsufficientError,
    SingularEvaluationError,
)
from modules.features import ActivationFamily, ActivationKind
from modules.quadrature import rect_rule

log = logging.getLogger(__name__)

GRID_DEFAULT = 129
GRID_REFINED = 257
GRID_HALF_WIDTH = 1.25
# Raio físico onde o resíduo do potencial é medido (longe da borda do suporte)
RESIDUAL_RADIUS = 0.9
RESIDUAL_THRESHOLD = 5e-2
# Distância física mínima às dobras da densidade na estimativa de ordem
KINK_CLEARANCE = 0.1
DUAL_ACTIVE_FRACTION = 1e-6
CONVERGENCE_ORDER_MIN = 1.5
NEUMANN_TOLERANCE = 1e-3
Bounds = Tuple[float, float, float, float]


@dataclass(frozen=True, eq=False)
class GridField:
    """
    Campo amostrado numa grade regular: values[i, j] = f(x_i, y_j).
    As células são quadradas (mesmo espaçamento nos dois eixos).
    """
    bounds: Bounds
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2 or min(values.shape) < 3:
            raise InvalidArgumentError(f"Grade precisa de >= 3 nós por eixo (forma {values.shape}).")
        x0, x1, y0, y1 = self.bounds
        hx = (x1 - x0) / (values.shape[0] - 1)
        hy = (y1 - y0) / (values.shape[1] - 1)
        if not np.isclose(hx, hy, rtol=1e-10):
            raise InvalidArgumentError(f"Espaçamento não uniforme: hx={hx}, hy={hy}.")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    @property
    def spacing(self) -> float:
        return (self.bounds[1] - self.bounds[0]) / (self.shape[0] - 1)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.bounds[0], self.bounds[1], self.shape[0])

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.bounds[2], self.bounds[3], self.shape[1])

    @property
    def points(self) -> np.ndarray:
        return self.xs[:, None] + 1j * self.ys[None, :]

    def with_values(self, values: np.ndarray) -> "GridField":
        return GridField(self.bounds, values)

    def same_grid(self, other: "GridField") -> bool:
        return self.shape == other.shape and np.allclose(self.bounds, other.bounds, rtol=0, atol=1e-12)

    def to_frame(self) -> pd.DataFrame:
        pts = self.points.ravel()
        data = {"x": pts.real, "y": pts.imag}
        if np.iscomplexobj(self.values):
            data["re"] = self.values.real.ravel()
            data["im"] = self.values.imag.ravel()
        else:
            data["value"] = self.values.ravel()
        return pd.DataFrame(data)


def disk_grid(n: int = GRID_DEFAULT, half_width: float = GRID_HALF_WIDTH) -> GridField:
    """Grade n×n nula sobre [−w, w]², cobrindo o disco com margem."""
    return GridField((-half_width, half_width, -half_width, half_width), np.zeros((n, n)))


def sample_field(f: Callable[[np.ndarray], np.ndarray], grid: GridField) -> GridField:
    return grid.with_values(np.asarray(f(grid.points)))


def fundamental_solution_2d(omega):
    """Φ(ω) = −(1/2π) ln|ω| (−ΔΦ = δ)."""
    r = np.abs(np.asarray(omega, dtype=complex))
    if np.any(r == 0):
        raise SingularEvaluationError("Solução fundamental avaliada em ω = 0.")
    value = -np.log(r) / (2.0 * np.pi)
    return float(value) if np.ndim(value) == 0 else value


def _self_cell_average(h: float) -> float:
    # média de −(1/2π) ln|ω| sobre o quadrado [−h/2, h/2]²
    return -(np.log(h / 2.0) + 0.5 * (np.log(2.0) - 3.0 + np.pi / 2.0)) / (2.0 * np.pi)


def newtonian_potential(density: GridField) -> GridField:
    """
    Convolução em espaço livre h = Φ * ρ (regra do ponto médio por célula;
    a célula do próprio nó usa a média analítica do logaritmo).
    """
    n_x, n_y = density.shape
    h = density.spacing
    ex = np.arange(-(n_x - 1), n_x) * h
    ey = np.arange(-(n_y - 1), n_y) * h
    distance = np.hypot(ex[:, None], ey[None, :])
    distance[n_x - 1, n_y - 1] = 1.0
    kernel = -np.log(distance) / (2.0 * np.pi)
    kernel[n_x - 1, n_y - 1] = _self_cell_average(h)
    rho = np.asarray(density.values)
    if np.iscomplexobj(rho):
        full = fftconvolve(rho.real, kernel, mode="full") + 1j * fftconvolve(rho.imag, kernel, mode="full")
    else:
        full = fftconvolve(rho, kernel, mode="full")
    potential = full[n_x - 1:2 * n_x - 1, n_y - 1:2 * n_y - 1] * h * h
    return density.with_values(potential)


def laplacian(field: GridField) -> np.ndarray:
    """Laplaciano de 5 pontos nos nós interiores (forma (n−2) × (n−2))."""
    u = np.asarray(field.values)
    h2 = field.spacing ** 2
    return (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4.0 * u[1:-1, 1:-1]) / h2


@dataclass(frozen=True)
class ResidualReport:
    max_abs: float
    mean_abs: float
    max_rel: float
    spacing: float
    nodes: int

    def to_dict(self) -> Dict[str, float]:
        return {"max_abs": self.max_abs, "mean_abs": self.mean_abs, "max_rel": self.max_rel,
                "spacing": self.spacing, "nodes": self.nodes}


def laplacian_residual(h_field: GridField, rhs_field: GridField, mask: Optional[np.ndarray] = None,
                       margin: int = 2) -> ResidualReport:
    """
    |(−Δ_h h) − rhs| nos nós interiores (margem de `margin` células da borda),
    opcionalmente restritos a uma máscara booleana do tamanho da grade.
    O erro relativo usa max|rhs| na região (ou 1 se rhs ≡ 0).
    """
    if not h_field.same_grid(rhs_field):
        raise InvalidArgumentError("Campos em grades diferentes.")
    if margin < 1:
        raise InvalidArgumentError("A margem deve ser de pelo menos uma célula.")
    residual = np.abs(-laplacian(h_field) - np.asarray(rhs_field.values)[1:-1, 1:-1])
    region = np.zeros(h_field.shape, dtype=bool)
    region[margin:-margin, margin:-margin] = True
    if mask is not None:
        region &= np.asarray(mask, dtype=bool)
    region = region[1:-1, 1:-1]
    if not np.any(region):
        raise InvalidArgumentError("Região de medição do resíduo vazia.")
    values = residual[region]
    rhs = np.abs(np.asarray(rhs_field.values)[1:-1, 1:-1][region])
    scale = float(np.max(rhs)) if np.max(rhs) > 0 else 1.0
    return ResidualReport(float(np.max(values)), float(np.mean(values)), float(np.max(values) / scale),
                          h_field.spacing, int(values.size))


def activation_density(duals: Sequence[float], labels: Sequence[int], family: ActivationFamily,
                       samples: Sequence[complex], grid: GridField) -> GridField:
    """ρ(ω) = Σ λ_n t_n s(x_n; ω), restrita ao disco de parâmetros |ω| ≤ 1."""
    weights = np.asarray(duals, dtype=float) * np.asarray(labels, dtype=float)
    if np.any(np.asarray(duals) < 0):
        raise InvalidArgumentError("Multiplicadores devem ser não negativos.")
    omega = grid.points
    rho = np.zeros(grid.shape)
    for w, x in zip(weights, np.asarray(samples)):
        if w != 0.0:
            rho = rho + w * np.real(family.evaluate(x, omega))
    rho = np.where(np.abs(omega) <= 1.0, rho, 0.0)
    return grid.with_values(rho)


def smooth_region(duals: Sequence[float], family: ActivationFamily, samples: Sequence[complex],
                  grid: GridField, radius: float = RESIDUAL_RADIUS,
                  clearance: float = KINK_CLEARANCE) -> np.ndarray:
    """
    Máscara dos nós com |ω| ≤ radius a pelo menos `clearance` de toda dobra da
    densidade: as retas x_n·Re ω + Im ω = 0 das ReLU ativas e o círculo |ω| = 1.
    Fora dessas dobras ρ é afim e o estêncil de 5 pontos converge em segunda ordem.
    """
    omega = grid.points
    region = (np.abs(omega) <= radius) & (np.abs(1.0 - np.abs(omega)) >= clearance)
    if family.kind != ActivationKind.RELU_AFFINE:
        return region
    duals = np.asarray(duals, dtype=float)
    active = duals > DUAL_ACTIVE_FRACTION * np.max(duals, initial=0.0)
    for x in np.real(np.asarray(samples))[active]:
        distance = np.abs(x * omega.real + omega.imag) / np.hypot(x, 1.0)
        region &= distance >= clearance
    return region


def robust_h_from_duals(duals: Sequence[float], labels: Sequence[int], family: ActivationFamily,
                        samples: Sequence[complex], grid: Optional[GridField] = None,
                        check: bool = True, threshold: float = RESIDUAL_THRESHOLD) -> GridField:
    """
    h(ω) = Σ λ_n t_n ∫ Φ(ω − w) s(x_n; w) dV(w) na grade (convolução em espaço livre).

    Args:
        duals: Multiplicadores λ_n ≥ 0
        labels: Rótulos t_n
        family (ActivationFamily): Família s(x; ω)
        samples: Pontos x_n
        grid (GridField): Grade sobre Ω com margem (padrão 129², ±1.25)
        check (bool): Mede −Δh contra a densidade em |ω| ≤ 0.9

    Raises:
        ResolutionInsufficientError: resíduo relativo acima do limiar
    """
    grid = grid or disk_grid()
    density = activation_density(duals, labels, family, samples, grid)
    potential = newtonian_potential(density)
    if check and np.any(density.values):
        report = laplacian_residual(potential, density, mask=np.abs(grid.points) <= RESIDUAL_RADIUS)
        log.info(f"Resíduo do potencial: max_rel={report.max_rel:.3e} (h={report.spacing:.4g})")
        if report.max_rel > threshold:
            raise ResolutionInsufficientError(
                f"Grade grossa demais: resíduo relativo {report.max_rel:.3e} > {threshold:g}.",
                residual=report.max_rel, spacing=report.spacing)
    return potential


def stencil_convergence(reports: Sequence[ResidualReport], key: str = "max_abs") -> float:
    """Ordem observada entre os dois últimos relatórios: log(r1/r2) / log(h1/h2)."""
    if len(reports) < 2:
        raise InvalidArgumentError("São necessários pelo menos dois relatórios.")
    coarse, fine = reports[-2], reports[-1]
    r1, r2 = getattr(coarse, key), getattr(fine, key)
    if r1 <= 0 or r2 <= 0:
        raise InvalidArgumentError("Resíduos nulos não definem ordem de convergência.")
    return float(np.log(r1 / r2) / np.log(coarse.spacing / fine.spacing))


# --- Ativações harmônicas ---

@dataclass(frozen=True, eq=False)
class ActivationField:
    """
    Ativação 𝔰 analítica num retângulo: valor, gradiente e laplaciano como
    funções vetorizadas de (x, y).
    """
    value: Callable[[np.ndarray, np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]
    laplacian: Callable[[np.ndarray, np.ndarray], np.ndarray]
    label: str = "custom"

    def source(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """s = −Δ𝔰."""
        return -self.laplacian(x, y)


def cosine_activation(kx: float, ky: float) -> ActivationField:
    """𝔰 = cos(kx·x)·cos(ky·y); −Δ𝔰 = (kx² + ky²)𝔰, Neumann em [0, π]² para k inteiros."""
    def value(x, y):
        return np.cos(kx * x) * np.cos(ky * y)

    def gradient(x, y):
        return -kx * np.sin(kx * x) * np.cos(ky * y), -ky * np.cos(kx * x) * np.sin(ky * y)

    def lap(x, y):
        return -(kx ** 2 + ky ** 2) * value(x, y)

    return ActivationField(value, gradient, lap, label=f"cos({kx:g}x)cos({ky:g}y)")


@dataclass(frozen=True)
class HarmonicActivationReport:
    energy: float
    norm_sq: float
    cross_form: float
    identity_error: float
    eigen_case: bool
    norm_energy_gap: float
    neumann_max: float
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def norm_equals_energy(self) -> bool:
        return self.norm_energy_gap <= 1e-6 * (1.0 + abs(self.energy))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "energy": self.energy,
            "norm_sq": self.norm_sq,
            "cross_form": self.cross_form,
            "identity_error": self.identity_error,
            "eigen_case": self.eigen_case,
            "norm_energy_gap": self.norm_energy_gap,
            "norm_equals_energy": self.norm_equals_energy,
            "neumann_max": self.neumann_max,
            **self.details,
        }


def neumann_violation(fields: Sequence[ActivationField], bounds: Bounds, samples: int = 257) -> float:
    """max |∂𝔰/∂n| ao longo das quatro arestas do retângulo."""
    x0, x1, y0, y1 = bounds
    xs = np.linspace(x0, x1, samples)
    ys = np.linspace(y0, y1, samples)
    worst = 0.0
    for f in fields:
        edges = [
            (np.full(samples, x0), ys, -1.0, 0),
            (np.full(samples, x1), ys, 1.0, 0),
            (xs, np.full(samples, y0), -1.0, 1),
            (xs, np.full(samples, y1), 1.0, 1),
        ]
        for x, y, sign, axis in edges:
            normal = sign * f.gradient(x, y)[axis]
            worst = max(worst, float(np.max(np.abs(normal))))
    return worst


def harmonic_activation_check(fields: Sequence[ActivationField], coeffs: Sequence[float],
                              bounds: Bounds = (0.0, np.pi, 0.0, np.pi), order: int = 64,
                              neumann_tol: float = NEUMANN_TOLERANCE) -> HarmonicActivationReport:
    """
    Para h = Σ a_n 𝔰_n: E[h] = ∫‖∇h‖², ‖h‖², a forma cruzada Σ a_n a_m ∫𝔰_n s_m,
    o erro da identidade ∫∇𝔰_n·∇𝔰_m = ∫𝔰_n s_m e, no caso −Δ𝔰 = 𝔰, a
    diferença |‖h‖² − E[h]|.

    Raises:
        BoundaryConditionError: derivada normal acima de neumann_tol na borda
    """
    a = np.asarray(coeffs, dtype=float)
    if a.size != len(fields):
        raise InvalidArgumentError("Número de coeficientes diferente do número de ativações.")
    neumann = neumann_violation(fields, bounds)
    if neumann > neumann_tol:
        raise BoundaryConditionError(f"Condição de Neumann violada: max|∂n 𝔰| = {neumann:.3e}.",
                                     neumann=neumann)
    rule = rect_rule(tuple(float(b) for b in bounds), order, order)
    x, y = rule.points.real, rule.points.imag
    w = rule.weights
    values = np.stack([f.value(x, y) for f in fields], axis=1)
    sources = np.stack([f.source(x, y) for f in fields], axis=1)
    grads = [f.gradient(x, y) for f in fields]
    gx = np.stack([g[0] for g in grads], axis=1)
    gy = np.stack([g[1] for g in grads], axis=1)

    gram_grad = (gx * w[:, None]).T @ gx + (gy * w[:, None]).T @ gy
    gram_cross = (values * w[:, None]).T @ sources
    gram_l2 = (values * w[:, None]).T @ values

    identity_error = float(np.max(np.abs(gram_grad - gram_cross) / (1.0 + np.abs(gram_cross))))
    scale = float(np.max(np.abs(values))) or 1.0
    eigen_case = bool(np.max(np.abs(sources - values)) <= 1e-10 * scale)
    energy = float(a @ gram_grad @ a)
    norm_sq = float(a @ gram_l2 @ a)
    cross = float(a @ gram_cross @ a)
    report = HarmonicActivationReport(energy, norm_sq, cross, identity_error, eigen_case,
                                      abs(norm_sq - energy), neumann,
                                      {"labels": [f.label for f in fields], "order": order})
    log.info(f"Checagem de ativação harmônica: E={energy:.10g}, ‖h‖²={norm_sq:.10g}, "
             f"erro da identidade={identity_error:.2e}, autocaso={eigen_case}")
    return report
