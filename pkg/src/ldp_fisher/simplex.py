"""Dense two-phase primal simplex with Bland's anti-cycling rule.

Solves ``max c^T x  s.t.  A x = b, x >= 0`` for small dense problems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-11
COST_TOL = 1e-12


class LPError(RuntimeError):
    pass


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    basis: list[int]
    iterations: int


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    others = np.flatnonzero(T[:, col])
    for r in others:
        if r != row:
            T[r] -= T[r, col] * T[row]


def _run(T: np.ndarray, basis: list[int], allowed: np.ndarray, max_iter: int) -> int:
    """Iterate on tableau ``T`` (last row holds reduced costs of a min problem)."""
    m = T.shape[0] - 1
    it = 0
    while True:
        reduced = T[-1, :-1]
        candidates = np.flatnonzero(allowed & (reduced < -COST_TOL))
        if candidates.size == 0:
            return it
        col = int(candidates[0])  # Bland: smallest entering index
        column = T[:m, col]
        pos = column > PIVOT_TOL
        if not np.any(pos):
            raise Unbounded(f"column {col} is unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-14 * max(1.0, abs(best)))
        # Bland: among tied rows leave with the smallest basic index
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
        it += 1
        if it > max_iter:
            raise LPError(f"simplex did not terminate in {max_iter} pivots")


def solve(c, A, b, max_iter: int = 100_000) -> LPResult:
    """Maximize ``c @ x`` subject to ``A @ x == b`` and ``x >= 0``."""
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("dimension mismatch between c, A and b")
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    # phase 1: minimize the sum of artificials
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    allowed = np.ones(n + m, dtype=bool)
    it = _run(T, basis, allowed, max_iter)
    if -T[-1, -1] > 1e-9 * max(1.0, b.sum()):
        raise Infeasible(f"phase 1 residual {-T[-1, -1]!r}")

    # drive remaining artificials out of the basis; drop redundant rows
    keep_rows = []
    for r in range(m):
        if basis[r] >= n:
            nz = np.flatnonzero(np.abs(T[r, :n]) > PIVOT_TOL)
            if nz.size:
                _pivot(T, r, int(nz[0]))
                basis[r] = int(nz[0])
                keep_rows.append(r)
        else:
            keep_rows.append(r)
    T = np.vstack([T[keep_rows], T[-1:]])
    basis = [basis[r] for r in keep_rows]
    T = np.delete(T, np.s_[n:n + m], axis=1)

    # phase 2: minimize -c
    T[-1, :] = 0.0
    T[-1, :n] = -c
    for r, j in enumerate(basis):
        if T[-1, j] != 0:
            T[-1] -= T[-1, j] * T[r]
    it += _run(T, basis, np.ones(n, dtype=bool), max_iter)

    x = np.zeros(n)
    for r, j in enumerate(basis):
        x[j] = T[r, -1]
    x[x < 0] = 0.0
    return LPResult(x=x, objective=float(c @ x), basis=basis, iterations=it)
