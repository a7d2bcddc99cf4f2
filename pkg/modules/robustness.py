# modules/robustness.py

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from modules.core import (
    Domain,
    Hypothesis,
    LossKind,
    LossSpec,
    as_points,
    make_circle_dataset,
    sign_labeler,
)
from modules.errors import DomainViolationError, InvalidArgumentError, UndefinedMetricError
from modules.features import dirac_features
from modules.learner import FeatureChoice, TrainConfig, TrainedModel, train_complex_svc, train_real_svc
from utils.task_manager import run_tasks

log = logging.getLogger(__name__)

STALL_GRADIENT = 1e-12
MIN_CROSSING_ANGLES = 64
NORMALITY_GRID = 64
NORMALITY_RADIUS = 0.95


@dataclass(frozen=True)
class AttackConfig:
    """Passo η, limite de iterações, orçamento ε_max e tolerância da bisseção."""
    step: float = 0.01
    max_iter: int = 500
    eps_max: float = 2.0
    bisection_tol: float = 1e-3
    crossing_tol: float = 1e-10

    def __post_init__(self):
        if min(self.step, self.max_iter, self.eps_max, self.bisection_tol, self.crossing_tol) <= 0:
            raise InvalidArgumentError("Parâmetros do ataque devem ser positivos.")


@dataclass(frozen=True)
class AttackResult:
    start: complex
    point: complex
    perturbation: float
    success: bool
    stalled: bool = False
    iterations: int = 0


@dataclass(frozen=True)
class FlipRadius:
    radius: float
    exhausted: bool
    stalled: bool = False


def _misclassified(h: Hypothesis, z: complex, t: int) -> bool:
    return bool(t * np.real(h(z)[0]) <= 0.0)


def _project(z: complex, z0: complex, eps: float) -> complex:
    offset = z - z0
    if abs(offset) > eps:
        z = z0 + eps * offset / abs(offset)
    if abs(z) > 1.0:
        z = z / abs(z)
    return z


def _refine_crossing(h: Hypothesis, t: int, inside: complex, outside: complex, tol: float) -> complex:
    # inside classificado corretamente, outside não; devolve um ponto do lado errado
    lo, hi = 0.0, 1.0
    while (hi - lo) * abs(outside - inside) > tol:
        mid = 0.5 * (lo + hi)
        if _misclassified(h, inside + mid * (outside - inside), t):
            hi = mid
        else:
            lo = mid
    return inside + hi * (outside - inside)


def gradient_attack(h: Hypothesis, z0: complex, t: int, cfg: AttackConfig = AttackConfig(),
                    eps: Optional[float] = None) -> AttackResult:
    """
    Ataque de gradiente normalizado: z ← z − η·t·conj(f'(z))/|f'(z)|, projetado
    na bola de raio ε em torno de z0 e no disco fechado, até sign(Re f) ≠ t.

    Args:
        h (Hypothesis): Hipótese atacada
        z0 (complex): Ponto inicial (no disco fechado)
        t (int): Rótulo verdadeiro
        cfg (AttackConfig): Configuração
        eps (float, optional): Orçamento (padrão cfg.eps_max)

    Returns:
        AttackResult: Ponto final, |z − z0|, sucesso e sinalização de estagnação
    """
    z0 = complex(z0)
    if abs(z0) > 1.0 + 1e-12:
        raise DomainViolationError(f"Ponto inicial {z0} fora do disco.", point=z0)
    if t not in (-1, 1):
        raise InvalidArgumentError(f"Rótulo inválido: {t}")
    budget = cfg.eps_max if eps is None else float(eps)
    if _misclassified(h, z0, t):
        return AttackResult(z0, z0, 0.0, True)

    z = z0
    for iteration in range(1, cfg.max_iter + 1):
        g = complex(h.derivative(z)[0])
        if abs(g) < STALL_GRADIENT:
            log.debug(f"Ataque estagnado em {z} (|f'| < {STALL_GRADIENT}).")
            return AttackResult(z0, z, abs(z - z0), False, stalled=True, iterations=iteration)
        candidate = _project(z - cfg.step * t * np.conj(g) / abs(g), z0, budget)
        if _misclassified(h, candidate, t):
            point = _refine_crossing(h, t, z, candidate, cfg.crossing_tol)
            return AttackResult(z0, point, abs(point - z0), True, iterations=iteration)
        if abs(candidate - z) < 1e-15:
            break
        z = candidate
    return AttackResult(z0, z, abs(z - z0), False, iterations=cfg.max_iter)


def min_flip_radius(h: Hypothesis, z0: complex, t: int, cfg: AttackConfig = AttackConfig()) -> FlipRadius:
    """
    Menor orçamento ε ≤ ε_max com ataque bem-sucedido, por bisseção em ε.
    Sem sucesso em ε_max devolve ε_max com `exhausted=True`.
    """
    first = gradient_attack(h, z0, t, cfg)
    if first.success and first.perturbation == 0.0:
        return FlipRadius(0.0, False)
    if not first.success:
        log.warning(f"Nenhuma inversão até ε_max={cfg.eps_max} a partir de {complex(z0)}.")
        return FlipRadius(cfg.eps_max, True, first.stalled)
    lo, hi = 0.0, min(cfg.eps_max, first.perturbation + cfg.bisection_tol)
    while hi - lo > cfg.bisection_tol:
        mid = 0.5 * (lo + hi)
        if gradient_attack(h, z0, t, cfg, eps=mid).success:
            hi = mid
        else:
            lo = mid
    return FlipRadius(hi, False)


def interval_flip_distance(h: Hypothesis, x0: float, t: int, n_grid: int = 4097) -> float:
    """
    Menor |x − x0| com x ∈ [0, 1] e t·Re f(x) ≤ 0 (ataque exato em uma
    dimensão). Devolve inf quando f não troca de sinal no intervalo.
    """
    x = np.linspace(0.0, 1.0, n_grid)
    margin = t * np.real(h(x.astype(complex)))
    at_start = t * float(np.real(h(complex(x0))[0]))
    if at_start <= 0.0:
        return 0.0

    def g(value: float) -> float:
        return t * float(np.real(h(complex(value))[0]))

    best = np.inf
    # índices em ordem de distância crescente a x0, à direita e à esquerda
    for idx in (np.flatnonzero(x >= x0), np.flatnonzero(x <= x0)[::-1]):
        bad = idx[margin[idx] <= 0.0]
        if bad.size == 0:
            continue
        first = bad[0]
        position = np.flatnonzero(idx == first)[0]
        good = x0 if position == 0 else x[idx[position - 1]]
        root = brentq(g, min(good, x[first]), max(good, x[first])) if g(x[first]) < 0.0 else x[first]
        best = min(best, abs(root - x0))
    return float(best)


@dataclass(frozen=True)
class CrossingReport:
    count: int
    angles: Tuple[float, ...]


def boundary_crossings(h: Hypothesis, n_angles: int = 4096) -> CrossingReport:
    """
    Conta as trocas de sinal de θ ↦ Re f(e^{iθ}) em [0, 2π) (cíclicas,
    amostras nulas ignoradas) e refina cada raiz com brentq.
    """
    if n_angles < MIN_CROSSING_ANGLES:
        raise InvalidArgumentError(f"n_angles deve ser >= {MIN_CROSSING_ANGLES}.", n_angles=n_angles)
    theta = 2.0 * np.pi * (np.arange(n_angles) + 0.5) / n_angles
    u = np.real(h(np.exp(1j * theta)))
    nonzero = np.flatnonzero(u != 0.0)
    if nonzero.size < 2:
        return CrossingReport(0, ())

    def re_f(angle: float) -> float:
        return float(np.real(h(np.exp(1j * angle))[0]))

    angles: List[float] = []
    for a, b in zip(nonzero, np.roll(nonzero, -1)):
        if np.sign(u[a]) == np.sign(u[b]):
            continue
        lo = theta[a]
        hi = theta[b] if b > a else theta[b] + 2.0 * np.pi
        root = brentq(re_f, lo, hi, xtol=1e-13)
        angles.append(float(np.mod(root, 2.0 * np.pi)))
    return CrossingReport(len(angles), tuple(sorted(angles)))


# --- Transferência ---

@dataclass(frozen=True)
class TransferReport:
    grad_norm_target: float
    grad_cosine_distance: float
    loss_variance_surrogate: float
    transfer_rate: float
    attacks_attempted: int = 0
    attacks_successful: int = 0
    attacks_transferred: int = 0
    cosine_points: int = 0
    no_successful_attacks: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def _loss_gradients(h: Hypothesis, z: np.ndarray, t: np.ndarray, loss: LossSpec) -> np.ndarray:
    return loss.gradient(t, h(z), h.derivative(z))


def transfer_metrics(target: TrainedModel, surrogate: TrainedModel, eval_points: Sequence[complex],
                     labels: Optional[Sequence[int]] = None,
                     loss: LossSpec = LossSpec(LossKind.HINGE_COMPLEX),
                     attack: AttackConfig = AttackConfig(), parallel: bool = True) -> TransferReport:
    """
    Métricas de transferibilidade entre um modelo substituto e um alvo.

    - grad_norm_target: média de |∇_z ℓ| do alvo nos pontos
    - grad_cosine_distance: média de 1 − cos∠(∇ℓ_alvo, ∇ℓ_substituto), ℂ como ℝ²,
      ignorando pontos com gradiente nulo
    - loss_variance_surrogate: E[ℓ²] − E[ℓ]² da perda do substituto
    - transfer_rate: fração dos ataques bem-sucedidos no substituto que também
      invertem o alvo (pontos já errados no alvo não entram)

    Raises:
        UndefinedMetricError: todos os pontos com gradiente nulo
    """
    z = as_points(eval_points)
    t = sign_labeler(z) if labels is None else np.asarray(labels, dtype=float)
    keep = t != 0
    z, t = z[keep], t[keep].astype(int)
    if z.size == 0:
        raise InvalidArgumentError("Nenhum ponto de avaliação com rótulo definido.")

    h_target = target.hypothesis
    h_surrogate = surrogate.hypothesis
    g_target = _loss_gradients(h_target, z, t, loss)
    g_surrogate = _loss_gradients(h_surrogate, z, t, loss)
    grad_norm = float(np.mean(np.abs(g_target)))

    usable = (np.abs(g_target) > 0) & (np.abs(g_surrogate) > 0)
    if not np.any(usable):
        raise UndefinedMetricError("Distância de cosseno indefinida: todos os gradientes são nulos.")
    a, b = g_target[usable], g_surrogate[usable]
    cosine = np.real(a * np.conj(b)) / (np.abs(a) * np.abs(b))
    cosine_distance = float(np.mean(1.0 - np.clip(cosine, -1.0, 1.0)))

    surrogate_loss = loss.value(t, h_surrogate(z))
    variance = float(max(0.0, np.mean(surrogate_loss ** 2) - np.mean(surrogate_loss) ** 2))

    candidates = [i for i in range(z.size) if not _misclassified(h_target, z[i], int(t[i]))]
    attacks = run_tasks([lambda i=i: gradient_attack(h_surrogate, z[i], int(t[i]), attack)
                         for i in candidates], parallel=parallel)
    successful = [(i, r) for i, r in zip(candidates, attacks) if r.success]
    transferred = sum(1 for i, r in successful if _misclassified(h_target, r.point, int(t[i])))
    if successful:
        rate = transferred / len(successful)
    else:
        log.warning("Nenhum ataque bem-sucedido no substituto; taxa de transferência definida como 0.")
        rate = 0.0
    return TransferReport(grad_norm, cosine_distance, variance, float(rate),
                          len(candidates), len(successful), int(transferred), int(a.size),
                          not successful)


# --- Normalidade ---

class NormalityRule(str, Enum):
    SVC = "svc"
    DIRAC = "dirac"


@dataclass(frozen=True)
class NormalityReport:
    rule: str
    reference: str
    rows: Tuple[Tuple[int, float], ...]
    training_fit: Tuple[Tuple[int, float], ...] = ()

    @property
    def deviations(self) -> List[float]:
        return [d for _, d in self.rows]

    def strictly_decreasing(self) -> bool:
        d = self.deviations
        return all(b < a for a, b in zip(d[:-1], d[1:]))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.rows), columns=["n", "sup_deviation"])


def normality_grid(n: int = NORMALITY_GRID, radius: float = NORMALITY_RADIUS) -> np.ndarray:
    """Pontos de uma grade n×n em [−r, r]² com |z| ≤ r."""
    axis = np.linspace(-radius, radius, n)
    pts = (axis[:, None] + 1j * axis[None, :]).ravel()
    return pts[np.abs(pts) <= radius + 1e-12]


def _memorizer(n: int, C: float):
    data = make_circle_dataset(n)
    features = dirac_features(data.z, Domain.UNIT_DISK)
    return train_real_svc(data, features, TrainConfig(C=C, K=features.K, hard_margin=True))


def normality_probe(rule: NormalityRule, n_schedule: Sequence[int], reference_n: int,
                    grid: Optional[np.ndarray] = None, K: int = 15, C: float = 10.0,
                    parallel: bool = True) -> NormalityReport:
    """
    Treina em S_n para cada n e mede sup_grade |f_n − f_ref|; para o
    memorizador de Dirac mede sup |f_n − t| fora dos pontos de treino.
    """
    rule = NormalityRule(rule)
    schedule = [int(n) for n in n_schedule]
    if not schedule or any(b <= a for a, b in zip(schedule[:-1], schedule[1:])):
        raise InvalidArgumentError("n_schedule deve ser estritamente crescente.", schedule=schedule)
    if reference_n < schedule[-1]:
        raise InvalidArgumentError("reference_n deve ser >= max(n_schedule).", reference_n=reference_n)
    points = normality_grid() if grid is None else as_points(grid)

    if rule == NormalityRule.DIRAC:
        models = run_tasks([lambda n=n: _memorizer(n, C) for n in schedule],
                           labels=[f"dirac S_{n}" for n in schedule], parallel=parallel)
        truth = sign_labeler(points)
        labeled = truth != 0
        rows, fit = [], []
        for n, model in zip(schedule, models):
            values = np.real(model.hypothesis(points[labeled]))
            rows.append((n, float(np.max(np.abs(values - truth[labeled])))))
            at_samples = np.real(model.hypothesis(model.dataset.z))
            fit.append((n, float(np.max(np.abs(at_samples - model.dataset.t)))))
        log.info(f"Sonda de normalidade (Dirac): {rows}")
        return NormalityReport(rule.value, "labeler t(z) = sign(Re z)", tuple(rows), tuple(fit))

    cfg = TrainConfig(C=C, K=K, feature_kind=FeatureChoice.ORTHONORMAL)
    ns = schedule + ([reference_n] if reference_n != schedule[-1] else [])
    models = run_tasks([lambda n=n: train_complex_svc(make_circle_dataset(n), cfg) for n in ns],
                       labels=[f"svc S_{n}" for n in ns], parallel=parallel)
    by_n = dict(zip(ns, models))
    reference = by_n[reference_n].hypothesis(points)
    rows = [(n, float(np.max(np.abs(by_n[n].hypothesis(points) - reference)))) for n in schedule]
    log.info(f"Sonda de normalidade (SVC K={K}): {rows}")
    return NormalityReport(rule.value, f"S_{reference_n} SVC K={K} C={C:g}", tuple(rows))
