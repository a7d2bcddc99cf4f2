# modules/qp.py

import itertools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd
import scipy.linalg
from scipy.optimize import linprog

from modules.errors import (
    InfeasibleProgramError,
    InvalidArgumentError,
    NoConvergenceError,
    OracleTooLargeError,
)

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
MAX_ITERATIONS = 200
ORACLE_MAX_CONSTRAINTS = 16
STEP_FRACTION = 0.99


@dataclass(frozen=True, eq=False)
class QPProblem:
    """
    min ½ xᵀQx + cᵀx  sujeito a  A x ≥ b.
    """
    Q: np.ndarray
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        n = c.size
        A = np.asarray(self.A, dtype=float).reshape(-1, n)
        b = np.atleast_1d(np.asarray(self.b, dtype=float)).ravel()
        if Q.shape != (n, n):
            raise InvalidArgumentError(f"Q com forma {Q.shape}, esperado ({n}, {n}).")
        if A.shape[0] != b.size:
            raise InvalidArgumentError(f"A tem {A.shape[0]} linhas mas b tem {b.size} entradas.")
        if np.max(np.abs(Q - Q.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(Q), initial=0.0)):
            raise InvalidArgumentError("Q não é simétrica.")
        for name, value in (("Q", Q), ("c", c), ("A", A), ("b", b)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.b.size

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.Q @ x + self.c @ x)


@dataclass(frozen=True, eq=False)
class QPSolution:
    x: np.ndarray
    lam: np.ndarray
    objective: float
    residuals: Dict[str, float]
    iterations: int = 0
    method: str = "interior-point"

    def to_dict(self) -> Dict:
        return {
            "objective": self.objective,
            "iterations": self.iterations,
            "method": self.method,
            "kkt_residuals": dict(self.residuals),
        }


def kkt_residuals(p: QPProblem, x: np.ndarray, lam: np.ndarray) -> Dict[str, float]:
    """Resíduos de estacionaridade, viabilidade primal/dual e complementaridade."""
    gap = p.A @ x - p.b
    return {
        "stationarity": float(np.max(np.abs(p.Q @ x + p.c - p.A.T @ lam), initial=0.0)),
        "primal_feasibility": float(max(0.0, -np.min(gap, initial=0.0))),
        "dual_feasibility": float(max(0.0, -np.min(lam, initial=0.0))),
        "complementarity": float(np.max(np.abs(lam * gap), initial=0.0)),
    }


def _solve_sym(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.solve(M, rhs, assume_a="sym", check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError):
        log.debug("Sistema de Newton singular; usando mínimos quadrados.")
        return np.linalg.lstsq(M, rhs, rcond=None)[0]


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    negative = dv < 0
    if not np.any(negative):
        return 1.0
    return float(min(1.0, np.min(-v[negative] / dv[negative])))


def _phase_one_infeasible(p: QPProblem) -> bool:
    """Confirma inviabilidade com um LP de fase 1 (HiGHS)."""
    result = linprog(np.zeros(p.n), A_ub=-p.A, b_ub=-p.b, bounds=[(None, None)] * p.n,
                     method="highs")
    return result.status == 2


def _farkas_certificate(p: QPProblem, lam: np.ndarray) -> bool:
    total = float(np.sum(lam))
    if total <= 0:
        return False
    direction = lam / total
    scale = 1.0 + np.max(np.abs(p.A), initial=0.0)
    return bool(np.max(np.abs(p.A.T @ direction), initial=0.0) <= 1e-8 * scale
                and p.b @ direction > 1e-8 * (1.0 + np.max(np.abs(p.b), initial=0.0)))


class MehrotraSolver:
    """
    Método de pontos interiores primal-dual (preditor-corretor de Mehrotra)
    para QPs densos pequenos. Usa um único comprimento de passo para primal e dual.
    """

    def __init__(self, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITERATIONS):
        if tol <= 0 or max_iter < 1:
            raise InvalidArgumentError("Tolerância e limite de iterações devem ser positivos.")
        self.tol = tol
        self.max_iter = max_iter

    def _start(self, p: QPProblem):
        M = p.Q + p.A.T @ p.A + np.eye(p.n)
        x = _solve_sym(M, p.A.T @ p.b - p.c)
        s = np.maximum(np.abs(p.A @ x - p.b), 1.0)
        lam = np.ones(p.m)
        return x, s, lam

    def _direction(self, p: QPProblem, s, lam, r_d, r_p, r_c):
        D = lam / s
        M = p.Q + (p.A.T * D) @ p.A
        rhs = -r_d - p.A.T @ (D * (r_p + r_c / lam))
        dx = _solve_sym(M, rhs)
        ds = p.A @ dx + r_p
        dlam = -(r_c + lam * ds) / s
        return dx, ds, dlam

    def solve(self, p: QPProblem) -> QPSolution:
        if p.m == 0:
            x = _solve_sym(p.Q, -p.c)
            lam = np.zeros(0)
            return QPSolution(x, lam, p.objective(x), kkt_residuals(p, x, lam), 0)

        x, s, lam = self._start(p)
        scale_p = 1.0 + np.max(np.abs(p.b), initial=0.0)

        for iteration in range(1, self.max_iter + 1):
            r_d = p.Q @ x + p.c - p.A.T @ lam
            r_p = p.A @ x - s - p.b
            mu = float(s @ lam) / p.m
            objective = p.objective(x)
            log.debug(f"IPM it={iteration} obj={objective:.10g} mu={mu:.3e} "
                      f"|r_d|={np.max(np.abs(r_d)):.3e} |r_p|={np.max(np.abs(r_p)):.3e}")

            # escala por linha: termos grandes (ex.: C = 1e8) só afrouxam a própria linha
            scale_d = 1.0 + np.abs(p.c) + np.abs(p.Q @ x) + np.abs(p.A.T) @ lam
            if (np.all(np.abs(r_d) <= self.tol * scale_d)
                    and np.max(np.abs(r_p)) <= self.tol * scale_p
                    and np.max(s * lam) <= self.tol * (1.0 + abs(objective))):
                return self._finish(p, x, lam, iteration)

            if iteration > 10 and _farkas_certificate(p, lam) and _phase_one_infeasible(p):
                raise InfeasibleProgramError("Programa inviável (certificado de Farkas).",
                                             iterations=iteration)

            # preditor
            dx_a, ds_a, dlam_a = self._direction(p, s, lam, r_d, r_p, s * lam)
            alpha_a = min(_max_step(s, ds_a), _max_step(lam, dlam_a))
            mu_aff = float((s + alpha_a * ds_a) @ (lam + alpha_a * dlam_a)) / p.m
            sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0

            # corretor
            r_c = s * lam + ds_a * dlam_a - sigma * mu
            dx, ds, dlam = self._direction(p, s, lam, r_d, r_p, r_c)
            alpha = STEP_FRACTION * min(_max_step(s, ds), _max_step(lam, dlam))
            alpha = min(alpha, 1.0)
            x = x + alpha * dx
            s = s + alpha * ds
            lam = lam + alpha * dlam

        if _phase_one_infeasible(p):
            raise InfeasibleProgramError("Programa inviável (fase 1).", iterations=self.max_iter)
        residuals = kkt_residuals(p, x, lam)
        raise NoConvergenceError(f"IPM não convergiu em {self.max_iter} iterações.",
                                 **residuals)

    def _finish(self, p: QPProblem, x: np.ndarray, lam: np.ndarray, iterations: int) -> QPSolution:
        x.setflags(write=False)
        lam.setflags(write=False)
        residuals = kkt_residuals(p, x, lam)
        log.debug(f"IPM convergiu em {iterations} iterações: {residuals}")
        return QPSolution(x, lam, p.objective(x), residuals, iterations)


def solve_qp(p: QPProblem, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITERATIONS) -> QPSolution:
    """
    Resolve o QP convexo por pontos interiores.

    Args:
        p (QPProblem): Problema
        tol (float): Tolerância (escalada pela magnitude dos dados)

    Returns:
        QPSolution: Primal, duais, objetivo e resíduos KKT

    Raises:
        InfeasibleProgramError: região viável vazia
        NoConvergenceError: limite de iterações atingido
    """
    return MehrotraSolver(tol, max_iter).solve(p)


def brute_force_qp(p: QPProblem, tol: float = 1e-9) -> QPSolution:
    """
    Oráculo: enumera os 2^m conjuntos ativos, resolve o sistema KKT de
    igualdade de cada um e devolve o ponto KKT viável de menor objetivo.

    Raises:
        OracleTooLargeError: m > 16
        InfeasibleProgramError: nenhum conjunto ativo produz ponto KKT viável
    """
    if p.m > ORACLE_MAX_CONSTRAINTS:
        raise OracleTooLargeError(f"Oráculo limitado a {ORACLE_MAX_CONSTRAINTS} restrições (m={p.m}).",
                                  m=p.m)
    best: Optional[QPSolution] = None
    n = p.n
    for size in range(p.m + 1):
        for active in itertools.combinations(range(p.m), size):
            idx = list(active)
            A_w = p.A[idx]
            kkt = np.block([[p.Q, -A_w.T], [A_w, np.zeros((size, size))]])
            rhs = np.concatenate([-p.c, p.b[idx]])
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            if np.max(np.abs(kkt @ sol - rhs), initial=0.0) > tol * (1.0 + np.max(np.abs(rhs), initial=0.0)):
                continue
            x, lam_w = sol[:n], sol[n:]
            if np.any(lam_w < -tol) or np.any(p.A @ x - p.b < -tol):
                continue
            lam = np.zeros(p.m)
            lam[idx] = np.maximum(lam_w, 0.0)
            objective = p.objective(x)
            if best is None or objective < best.objective - 1e-12:
                best = QPSolution(x, lam, objective, kkt_residuals(p, x, lam), 0, "active-set-oracle")
    if best is None:
        raise InfeasibleProgramError("Nenhum ponto KKT viável (oráculo).")
    return best


def dump_qp(p: QPProblem, solution: Optional[QPSolution], path: Union[str, Path]) -> Path:
    """Grava Q, c, A, b, x e λ como blocos CSV para conferência externa."""
    from utils.file_utils import atomic_write_text, CSV_FLOAT_FORMAT

    blocks = [("Q", p.Q), ("c", p.c[None, :]), ("A", p.A), ("b", p.b[None, :])]
    if solution is not None:
        blocks += [("x", solution.x[None, :]), ("lambda", solution.lam[None, :])]
    parts = []
    for name, matrix in blocks:
        frame = pd.DataFrame(np.atleast_2d(matrix))
        parts.append(f"# {name}\n" + frame.to_csv(index=False, header=False,
                                                  float_format=CSV_FLOAT_FORMAT, lineterminator="\n"))
    return atomic_write_text(path, "".join(parts))
