"""Dense revised simplex for small standard-form LPs.

    min c.x   s.t.  A x = b,  x >= 0

Two phases with explicit artificials; pricing is Dantzig (most negative
reduced cost) for the first 2*(rows+cols) pivots and then switches to
Bland's rule, which breaks ties by smallest variable index and guarantees
termination on degenerate problems.  The basis inverse is kept explicitly
and refreshed from scratch every few dozen pivots; a basis that cannot be
(re)factorized raises SolverFailure carrying the pivot count so far.

Problem sizes here are tiny (the one-resource hot path never reaches this
module), so O(r^2) updates and dense storage are the right trade.
"""

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-8
REFACTOR_EVERY = 64


class SolverFailure(RuntimeError):
    """Numerical failure inside an LP solve (singular basis, lost
    feasibility, unbounded ray).  `pivots` is the pivot history length;
    `step` is attached by online policies to name the arrival index."""

    def __init__(self, message, pivots=0, step=None):
        super().__init__(message)
        self.pivots = pivots
        self.step = step


@dataclass
class SimplexResult:
    x: np.ndarray
    obj: float
    y: np.ndarray        # equality-row duals, min convention (y = c_B B^-1)
    iterations: int
    status: str


def _refactor(A, basis, pivots):
    B = A[:, basis]
    try:
        B_inv = np.linalg.inv(B)
    except np.linalg.LinAlgError:
        raise SolverFailure("singular basis during refactorization", pivots=pivots)
    if not np.all(np.isfinite(B_inv)):
        raise SolverFailure("non-finite basis inverse", pivots=pivots)
    return B_inv


def _pivot_loop(A, b, c, basis, B_inv, allowed, pivots, max_dantzig, total_cap):
    """Run pivots until optimal.  Returns (basis, B_inv, pivots)."""
    r = len(b)
    while True:
        if pivots > total_cap:
            raise SolverFailure("pivot cap exceeded (cycling?)", pivots=pivots)
        if pivots and pivots % REFACTOR_EVERY == 0:
            B_inv = _refactor(A, basis, pivots)
        y = c[basis] @ B_inv
        red = c - y @ A
        red[basis] = 0.0
        cand = np.flatnonzero((red < -PIVOT_TOL) & allowed)
        if cand.size == 0:
            return basis, B_inv, pivots
        if pivots < max_dantzig:
            enter = cand[np.argmin(red[cand])]
        else:
            enter = cand[0]  # Bland: smallest index
        d = B_inv @ A[:, enter]
        xB = B_inv @ b
        pos = np.flatnonzero(d > PIVOT_TOL)
        if pos.size == 0:
            raise SolverFailure("unbounded direction", pivots=pivots)
        theta = xB[pos] / d[pos]
        tmin = theta.min()
        ties = pos[theta <= tmin + FEAS_TOL * max(1.0, abs(tmin))]
        leave_row = ties[np.argmin(basis[ties])]  # Bland-style deterministic tie-break
        # eta update of the basis inverse
        piv = d[leave_row]
        if abs(piv) < PIVOT_TOL:
            raise SolverFailure("pivot element below tolerance", pivots=pivots)
        B_inv[leave_row, :] /= piv
        for i in range(r):
            if i != leave_row and d[i] != 0.0:
                B_inv[i, :] -= d[i] * B_inv[leave_row, :]
        basis[leave_row] = enter
        pivots += 1


def solve_standard_form(A, b, c):
    """Solve min c.x, A x = b, x >= 0.  A is (r, ncols) dense.

    SimplexResult.y holds duals for the rows as given by the caller (sign
    flips from the b >= 0 normalization and dropped redundant rows are
    mapped back)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    r, ncols = A.shape
    r_orig = r

    # phase 1 wants b >= 0
    flip = b < 0
    if np.any(flip):
        A = A.copy()
        A[flip] *= -1.0
        b[flip] *= -1.0

    art = np.arange(ncols, ncols + r)
    A1 = np.hstack([A, np.eye(r)])
    c1 = np.concatenate([np.zeros(ncols), np.ones(r)])
    basis = art.copy()
    B_inv = np.eye(r)
    allowed1 = np.ones(ncols + r, dtype=bool)
    cap = 50 * (r + ncols) + 200
    basis, B_inv, pivots = _pivot_loop(
        A1, b, c1, basis, B_inv, allowed1, 0, 2 * (r + ncols), cap)

    xB = B_inv @ b
    phase1_obj = float(np.sum(xB[np.isin(basis, art)])) if np.any(np.isin(basis, art)) else 0.0
    if phase1_obj > FEAS_TOL:
        raise SolverFailure("LP infeasible (phase-1 objective %.3e)" % phase1_obj,
                            pivots=pivots)

    # drive leftover artificials out of the basis, dropping redundant rows
    keep = np.ones(r, dtype=bool)
    for row in range(r):
        if basis[row] < ncols:
            continue
        pivoted = False
        tab_row = B_inv[row, :] @ A1[:, :ncols]
        for j in range(ncols):
            if abs(tab_row[j]) > PIVOT_TOL and j not in basis:
                piv = tab_row[j]
                d = B_inv @ A1[:, j]
                B_inv[row, :] /= piv
                for i in range(r):
                    if i != row and d[i] != 0.0:
                        B_inv[i, :] -= d[i] * B_inv[row, :]
                basis[row] = j
                pivots += 1
                pivoted = True
                break
        if not pivoted:
            keep[row] = False  # redundant constraint
    row_ids = np.flatnonzero(keep)
    if not np.all(keep):
        A = A[keep]
        b = b[keep]
        basis = basis[keep]
        r = len(b)
        A1 = np.hstack([A, np.eye(r)])
        B_inv = _refactor(A1, basis, pivots)

    # phase 2 over the original columns only
    allowed2 = np.concatenate([np.ones(ncols, dtype=bool), np.zeros(r, dtype=bool)])
    c2 = np.concatenate([c, np.zeros(r)])
    basis, B_inv, pivots = _pivot_loop(
        A1, b, c2, basis, B_inv, allowed2, pivots, pivots + 2 * (r + ncols), cap + pivots)

    xB = B_inv @ b
    if np.min(xB) < -FEAS_TOL:
        raise SolverFailure("feasibility lost in phase 2", pivots=pivots)
    x = np.zeros(ncols)
    for i, v in enumerate(basis):
        if v < ncols:
            x[v] = max(xB[i], 0.0)
    y_rows = c2[basis] @ B_inv
    y = np.zeros(r_orig)
    y[row_ids] = y_rows
    y[flip] *= -1.0
    obj = float(c @ x)
    return SimplexResult(x=x, obj=obj, y=y, iterations=pivots, status="optimal")
