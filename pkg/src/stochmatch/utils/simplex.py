"""Dense tableau simplex for small packing LPs."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import CapacityError, InvalidParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimplexResult:
    value: float
    x: np.ndarray
    pivots: int
    used_bland: bool


class DenseSimplex:
    """Solve max c.x subject to A x <= b, x >= 0 with b >= 0.

    The slack basis is feasible, so a single phase suffices. Pivots follow
    Dantzig's rule (most negative reduced cost) until ``bland_after`` pivots
    have been made, then Bland's rule, which cannot cycle.
    """

    def __init__(
        self,
        c: np.ndarray,
        A: np.ndarray,
        b: np.ndarray,
        tol: float = 1e-12,
        bland_after: Optional[int] = None,
        max_pivots: Optional[int] = None,
    ):
        self.c = np.asarray(c, dtype=float).reshape(-1)
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float).reshape(-1)
        rows, cols = len(self.b), len(self.c)
        if self.A.size == 0:
            self.A = np.zeros((rows, cols))
        if self.A.shape != (rows, cols):
            raise InvalidParameterError(f"shape mismatch: A is {self.A.shape}, c has {len(self.c)}, b has {len(self.b)}")
        if np.any(self.b < 0):
            raise InvalidParameterError("right-hand side must be non-negative")
        self.tol = tol
        size = rows + cols
        self.bland_after = 10 * size if bland_after is None else bland_after
        self.max_pivots = 50 * size * size + 100 if max_pivots is None else max_pivots

    def _entering(self, reduced: np.ndarray, bland: bool) -> Optional[int]:
        candidates = np.flatnonzero(reduced < -self.tol)
        if len(candidates) == 0:
            return None
        if bland:
            return int(candidates[0])
        return int(candidates[np.argmin(reduced[candidates])])

    def _leaving(self, column: np.ndarray, rhs: np.ndarray, basis: np.ndarray) -> Optional[int]:
        rows = np.flatnonzero(column > self.tol)
        if len(rows) == 0:
            return None
        ratios = rhs[rows] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + self.tol * max(1.0, abs(best))]
        # smallest basic variable among the tied rows
        return int(tied[np.argmin(basis[tied])])

    def solve(self) -> SimplexResult:
        n_vars = len(self.c)
        if n_vars == 0:
            return SimplexResult(value=0.0, x=np.zeros(0), pivots=0, used_bland=False)

        m = len(self.b)
        tableau = np.zeros((m + 1, n_vars + m + 1))
        tableau[:m, :n_vars] = self.A
        tableau[:m, n_vars:n_vars + m] = np.eye(m)
        tableau[:m, -1] = self.b
        tableau[m, :n_vars] = -self.c
        basis = np.arange(n_vars, n_vars + m)

        pivots = 0
        while True:
            bland = pivots >= self.bland_after
            col = self._entering(tableau[m, :-1], bland)
            if col is None:
                break
            row = self._leaving(tableau[:m, col], tableau[:m, -1], basis)
            if row is None:
                raise InvalidParameterError("LP is unbounded")
            if pivots >= self.max_pivots:
                raise CapacityError(f"simplex exceeded {self.max_pivots} pivots")

            tableau[row] /= tableau[row, col]
            factors = tableau[:, col].copy()
            factors[row] = 0.0
            tableau -= np.outer(factors, tableau[row])
            basis[row] = col
            pivots += 1

        x = np.zeros(n_vars + m)
        x[basis] = tableau[:m, -1]
        x = np.clip(x[:n_vars], 0.0, None)
        logger.debug(f"Simplex finished after {pivots} pivots ({m} rows, {n_vars} columns)")
        return SimplexResult(value=float(tableau[m, -1]), x=x, pivots=pivots, used_bland=pivots > self.bland_after)
