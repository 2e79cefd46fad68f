"""Small dense two-phase simplex solver.

Solves ``min c @ x  s.t.  A_eq @ x == b_eq, A_ub @ x <= b_ub, x >= 0``.
Redundant equality rows (the symmetrizing systems are full of them) keep their
artificial variable basic at level zero through phase 1 and are then deleted. Large instances can be routed to
HiGHS through scipy with ``method="highs"``; ``method="auto"`` does so above a
size threshold.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

FEAS_TOL = 1e-7
INFEASIBLE_RESIDUAL = 1e-4
PIVOT_TOL = 1e-11
AUTO_DENSE_LIMIT = 20_000  # rows * cols above which "auto" uses HiGHS


class LPFailure(RuntimeError):
    """Numerical failure (iteration cap, ambiguous phase-1 residual)."""


@dataclass
class LPResult:
    status: str  # optimal | infeasible | unbounded
    x: np.ndarray | None
    fun: float
    phase1_residual: float = 0.0
    iterations: int = 0
    method: str = "simplex"

    @property
    def success(self) -> bool:
        return self.status == "optimal"


def independent_rows(A: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Indices of a maximal linearly independent subset of rows of A."""
    if A.shape[0] == 0:
        return np.arange(0)
    _, R, piv = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    if d.size == 0 or d[0] == 0:
        return np.arange(0)
    rank = int(np.sum(d > tol * d[0]))
    return np.sort(piv[:rank])


class _Tableau:
    def __init__(self, T: np.ndarray, basis: np.ndarray, max_iter: int):
        self.T = T
        self.basis = basis
        self.max_iter = max_iter
        self.iterations = 0

    def pivot(self, r: int, c: int) -> None:
        T = self.T
        T[r] /= T[r, c]
        col = T[:, c].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = c

    def run(self, allowed: np.ndarray) -> str:
        """Minimize the objective stored in the last row. ``allowed`` masks entering columns."""
        T = self.T
        m = T.shape[0] - 1
        degenerate = 0
        while True:
            if self.iterations >= self.max_iter:
                raise LPFailure("simplex iteration cap reached")
            red = T[-1, :-1]
            cand = np.flatnonzero(allowed & (red < -1e-10))
            if cand.size == 0:
                return "optimal"
            if degenerate > 50:
                c = int(cand[0])  # Bland's rule against cycling
            else:
                c = int(cand[np.argmin(red[cand])])
            col = T[:m, c]
            pos = col > PIVOT_TOL
            if not np.any(pos):
                return "unbounded"
            ratios = np.full(m, np.inf)
            ratios[pos] = T[:m, -1][pos] / col[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + 1e-12)
            r = int(ties[np.argmin(self.basis[ties])]) if degenerate > 50 else int(
                ties[np.argmax(col[ties])])
            degenerate = degenerate + 1 if best < 1e-12 else 0
            self.pivot(r, c)
            self.iterations += 1


def _simplex(c, A, b, max_iter):
    m, n = A.shape
    neg = b < 0
    A = A.copy()
    b = b.copy()
    A[neg] *= -1
    b[neg] *= -1
    # tableau columns: n structural, m artificial, rhs
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    tab = _Tableau(T, np.arange(n, n + m), max_iter)
    allowed = np.ones(n + m, dtype=bool)
    status = tab.run(allowed)
    if status != "optimal":
        raise LPFailure("phase 1 reported unbounded")
    resid = -T[-1, -1]
    if resid >= INFEASIBLE_RESIDUAL:
        return LPResult("infeasible", None, np.inf, resid, tab.iterations)
    if resid > FEAS_TOL * max(1.0, np.abs(b).max(initial=0.0)):
        raise LPFailure(f"ambiguous phase-1 residual {resid:.3g}")
    # drive artificials out of the basis
    for r in range(m):
        if tab.basis[r] >= n:
            row = T[r, :n]
            nz = np.flatnonzero(np.abs(row) > 1e-9)
            if nz.size:
                tab.pivot(r, int(nz[np.argmax(np.abs(row[nz]))]))
    keep = tab.basis < n
    T = np.delete(T, np.flatnonzero(~keep), axis=0)
    T = np.delete(T, np.arange(n, n + m), axis=1)
    basis = tab.basis[keep]
    T[-1, :] = 0.0
    T[-1, :n] = c
    for r, j in enumerate(basis):
        T[-1] -= c[j] * T[r]
    tab2 = _Tableau(T, basis, max_iter)
    tab2.iterations = tab.iterations
    status = tab2.run(np.ones(n, dtype=bool))
    if status == "unbounded":
        return LPResult("unbounded", None, -np.inf, resid, tab2.iterations)
    x = np.zeros(n)
    x[tab2.basis] = T[:-1, -1]
    x = np.clip(x, 0.0, None)
    return LPResult("optimal", x, float(c @ x), resid, tab2.iterations)


def _highs(c, A_eq, b_eq, A_ub, b_ub):
    res = scipy.optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                                 bounds=(0, None), method="highs")
    if res.status == 4:
        # presolve trips over nearly dependent equality rows; solve the raw model
        res = scipy.optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                                     bounds=(0, None), method="highs",
                                     options={"presolve": False})
    if res.status == 0:
        return LPResult("optimal", np.clip(res.x, 0, None), float(res.fun), 0.0, int(res.nit), "highs")
    if res.status == 2:
        return LPResult("infeasible", None, np.inf, np.inf, int(res.nit), "highs")
    if res.status == 3:
        return LPResult("unbounded", None, -np.inf, 0.0, int(res.nit), "highs")
    raise LPFailure(f"HiGHS failed: {res.message}")


def linprog(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None, method: str = "auto",
            max_iter: int = 20_000) -> LPResult:
    """Solve a nonnegative-variable LP. Raises ``LPFailure`` on numerical trouble."""
    c = np.asarray(c, dtype=float)
    n = c.size
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    if method == "auto":
        if (A_eq.shape[0] + A_ub.shape[0]) * n > AUTO_DENSE_LIMIT:
            method = "highs"
        else:
            try:
                return linprog(c, A_eq, b_eq, A_ub, b_ub, "simplex", max_iter)
            except LPFailure:
                method = "highs"  # degenerate or ill-conditioned; hand over
    if method == "highs":
        return _highs(c, A_eq if A_eq.size else None, b_eq if A_eq.size else None,
                      A_ub if A_ub.size else None, b_ub if A_ub.size else None)
    if method != "simplex":
        raise ValueError(f"unknown LP method {method!r}")

    A_red, b_red = A_eq, b_eq  # redundant rows are dropped at the end of phase 1
    k = A_ub.shape[0]
    # slack variables for the inequalities
    A = np.zeros((A_red.shape[0] + k, n + k))
    A[:A_red.shape[0], :n] = A_red
    A[A_red.shape[0]:, :n] = A_ub
    A[A_red.shape[0]:, n:] = np.eye(k)
    b = np.concatenate([b_red, b_ub])
    res = _simplex(np.concatenate([c, np.zeros(k)]), A, b, max_iter)
    if res.x is not None:
        res.x = res.x[:n]
        if A_eq.shape[0]:
            viol = np.abs(A_eq @ res.x - b_eq).max()
            if viol > 1e-6:
                raise LPFailure(f"equality residual {viol:.3g} after phase 1")
    return res
