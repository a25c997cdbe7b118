"""Dense two-phase simplex for equality-form linear programs.

Solves min/max c^T x subject to A x = b, x >= 0 on a dense tableau.
Pivoting follows Bland's rule throughout (smallest eligible entering
index; ties in the ratio test broken by smallest basic variable index),
which rules out cycling.  Artificial columns are kept in the tableau so
the optimal dual vector can be read off their reduced costs.

Intended for desk-scale problems (up to a few thousand variables).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, SolverError

_TOL = 1e-9


@dataclass
class SimplexResult:
    x: np.ndarray
    objective: float
    duals: np.ndarray
    basis: np.ndarray
    pivots: int
    redundant_rows: tuple


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    basis[row] = col


def _bland_entering(z_row: np.ndarray, allowed: np.ndarray) -> int:
    candidates = np.flatnonzero(allowed & (z_row < -_TOL))
    return int(candidates[0]) if candidates.size else -1


def _bland_leaving(tableau: np.ndarray, basis: np.ndarray, col: int, m: int) -> int:
    rows = np.flatnonzero(tableau[:m, col] > _TOL)
    if not rows.size:
        return -1
    ratios = tableau[rows, -1] / tableau[rows, col]
    best = ratios.min()
    ties = rows[ratios <= best + _TOL * max(1.0, abs(best))]
    return int(ties[np.argmin(basis[ties])])


def _run_phase(tableau: np.ndarray, basis: np.ndarray, allowed: np.ndarray,
               m: int, budget: int) -> int:
    pivots = 0
    while True:
        col = _bland_entering(tableau[m], allowed)
        if col < 0:
            return pivots
        row = _bland_leaving(tableau, basis, col, m)
        if row < 0:
            raise SolverError("linear program is unbounded")
        _pivot(tableau, basis, row, col)
        pivots += 1
        if pivots > budget:
            raise NumericalError("simplex pivot budget exceeded (degeneracy?)")


def solve_linear_program(c: np.ndarray, A: np.ndarray, b: np.ndarray,
                         maximize: bool = False,
                         max_pivots: int = 200_000) -> SimplexResult:
    """Two-phase simplex on A x = b, x >= 0.

    Returns the optimizer, objective, and the dual vector y of the
    equality constraints (satisfying y^T A <= c^T for min problems,
    y^T A >= c^T for max problems, with complementary slackness).
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).copy()
    c = np.asarray(c, dtype=np.float64)
    if maximize:
        c = -c
    m, n = A.shape
    A = A.copy()
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    # columns: n structural, m artificial, rhs
    tableau = np.zeros((m + 1, n + m + 1))
    tableau[:m, :n] = A
    tableau[:m, n:n + m] = np.eye(m)
    tableau[:m, -1] = b
    basis = np.arange(n, n + m)

    # phase 1: minimize the artificial mass
    tableau[m] = -tableau[:m].sum(axis=0)
    tableau[m, n:n + m] = 0.0
    allowed = np.zeros(n + m + 1, dtype=bool)
    allowed[:n + m] = True  # artificials may re-enter during phase 1
    pivots = _run_phase(tableau, basis, allowed, m, max_pivots)
    infeasibility = -tableau[m, -1]
    if infeasibility > 1e-7 * max(1.0, np.abs(b).max()):
        raise SolverError(f"linear program infeasible (residual {infeasibility:.3e})")

    # drive surviving artificials out of the basis where possible
    redundant = []
    for row in np.flatnonzero(basis >= n):
        cols = np.flatnonzero(np.abs(tableau[row, :n]) > _TOL)
        if cols.size:
            _pivot(tableau, basis, int(row), int(cols[0]))
            pivots += 1
        else:
            redundant.append(int(row))  # dependent constraint; row now reads 0 = 0

    # phase 2: real objective, artificial columns frozen out
    cost = np.zeros(n + m)
    cost[:n] = c
    tableau[m, :] = 0.0
    tableau[m, :n] = c
    for row in range(m):
        if basis[row] < n:
            tableau[m] -= cost[basis[row]] * tableau[row]
    allowed = np.zeros(n + m + 1, dtype=bool)
    allowed[:n] = True
    pivots += _run_phase(tableau, basis, allowed, m, max_pivots - pivots)

    x = np.zeros(n + m)
    x[basis] = tableau[:m, -1]
    x = x[:n]
    objective = float(c @ x)
    # dual of the min problem from the artificial reduced costs, undoing row flips
    duals = -tableau[m, n:n + m].copy()
    duals[flip] *= -1.0
    if maximize:
        objective = -objective
        duals = -duals
    return SimplexResult(x, objective, duals, basis.copy(), pivots, tuple(redundant))
