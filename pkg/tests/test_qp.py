# tests/test_qp.py

import numpy as np
import pytest

from modules.errors import InfeasibleProgramError, InvalidArgumentError, OracleTooLargeError
from modules.qp import MehrotraSolver, QPProblem, brute_force_qp, dump_qp, solve_qp


def test_single_active_constraint():
    # min ½x² − x  s.a.  x ≥ 2
    p = QPProblem([[1.0]], [-1.0], [[1.0]], [2.0])
    sol = solve_qp(p)
    assert sol.x[0] == pytest.approx(2.0, abs=1e-7)
    assert sol.lam[0] == pytest.approx(1.0, abs=1e-6)
    assert sol.objective == pytest.approx(0.0, abs=1e-7)
    assert sol.residuals["primal_feasibility"] <= 1e-7


def test_unconstrained():
    p = QPProblem(np.eye(2), [-1.0, 2.0], np.zeros((0, 2)), [])
    sol = solve_qp(p)
    np.testing.assert_allclose(sol.x, [1.0, -2.0])
    assert sol.lam.size == 0


@pytest.mark.parametrize("seed", range(200))
def test_interior_point_matches_active_set_oracle(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(1, 7)), int(rng.integers(1, 11))
    M = rng.normal(size=(n, n))
    Q = M @ M.T + np.eye(n)
    c = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    b = -rng.uniform(0.0, 1.0, size=m)  # x = 0 é viável
    p = QPProblem(Q, c, A, b)
    ipm = solve_qp(p)
    oracle = brute_force_qp(p)
    assert ipm.objective == pytest.approx(oracle.objective, abs=1e-6)
    np.testing.assert_allclose(ipm.x, oracle.x, atol=1e-5)
    assert oracle.method == "active-set-oracle"
    assert ipm.residuals["dual_feasibility"] <= 1e-7


def test_oracle_detects_infeasible_program():
    p = QPProblem([[1.0]], [0.0], [[1.0], [-1.0]], [1.0, 0.0])
    with pytest.raises(InfeasibleProgramError):
        brute_force_qp(p)


def test_oracle_size_limit():
    p = QPProblem([[1.0]], [0.0], np.ones((17, 1)), -np.ones(17))
    with pytest.raises(OracleTooLargeError):
        brute_force_qp(p)


def test_problem_validation():
    with pytest.raises(InvalidArgumentError):
        QPProblem([[1.0, 2.0], [0.0, 1.0]], [0.0, 0.0], np.zeros((0, 2)), [])
    with pytest.raises(InvalidArgumentError):
        QPProblem([[1.0]], [0.0], [[1.0]], [1.0, 2.0])
    with pytest.raises(InvalidArgumentError):
        MehrotraSolver(tol=0.0)


def test_dump_qp(tmp_path):
    p = QPProblem([[1.0]], [-1.0], [[1.0]], [2.0])
    path = dump_qp(p, solve_qp(p), tmp_path / "qp.csv")
    text = path.read_text(encoding="utf-8")
    for block in ("# Q", "# c", "# A", "# b", "# x", "# lambda"):
        assert block in text
