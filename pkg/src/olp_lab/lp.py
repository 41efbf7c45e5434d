"""Offline LP and dual-price solvers.

The dual objective used throughout, in its normalized form, is

    g(p) = d.p + (1/N) * sum_k (u_k - a_k.p)^+

over the N orders supplied.  Its minimizer over p >= 0 is the bid price.
For one resource the minimizer is found exactly by sorting the breakpoints
u_k/a_k; for several resources the LP reformulation goes to the dense
simplex.  Flat optimal intervals are real (the objective is piecewise
linear), so every solver returns the SMALLEST minimizer, which keeps runs
reproducible and matches the accept rule's strict inequality.

Scaling note: multiplying g by N turns d into the unnormalized budget b and
leaves the argmin unchanged, so the online re-solves pass raw budgets
through the same machinery.
"""

from dataclasses import dataclass

import numpy as np

from .simplex import SolverFailure, solve_standard_form  # noqa: F401  (re-export)

OBJ_RECOMPUTE_TOL = 1e-9
CROSS_SOLVER_TOL = 1e-8
TIE_TOL = 1e-12

STATUS_OPTIMAL = "optimal"
STATUS_UNBOUNDED = "unbounded_below_impossible"  # g >= 0 always; listed for completeness
STATUS_TIE = "degenerate_tie"


@dataclass
class DualSolution:
    p: np.ndarray
    objective: float      # normalized dual objective at p
    status: str
    tie_note: str = None


@dataclass
class PrimalSolution:
    x: np.ndarray
    value: float
    dual_price: np.ndarray
    basis_note: int       # number of strictly fractional entries


def _order_arrays(orders, m=None):
    """(u, A) columnar view of a sequence of Order-like objects."""
    if isinstance(orders, tuple) and len(orders) == 2:
        u, A = orders  # already columnar
        A = np.asarray(A, float)
        if A.ndim == 1:
            A = A[:, None]
        return np.asarray(u, float), A
    n = len(orders)
    if n == 0:
        return np.zeros(0), np.zeros((0, m if m else 1))
    m = len(np.atleast_1d(orders[0].a)) if m is None else m
    u = np.fromiter((o.u for o in orders), dtype=float, count=n)
    A = np.vstack([np.atleast_1d(o.a) for o in orders]).astype(float)
    return u, A


def dual_objective(p, orders, d):
    """g(p) = d.p + (1/N) sum (u_k - a_k.p)^+; with N = 0 just d.p."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(p < 0):
        raise ValueError("negative price entry")
    d = np.atleast_1d(np.asarray(d, dtype=float))
    u, A = _order_arrays(orders, m=len(p))
    val = float(d @ p)
    if len(u):
        val += float(np.mean(np.maximum(u - A @ p, 0.0)))
    return val


def dual_subgradient(p, orders, d):
    """d - (1/N) sum a_k 1{u_k > a_k.p}; ties count as rejected."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(p < 0):
        raise ValueError("negative price entry")
    d = np.atleast_1d(np.asarray(d, dtype=float)).copy()
    u, A = _order_arrays(orders, m=len(p))
    if len(u):
        live = u > A @ p
        d = d - A[live].sum(axis=0) / len(u)
    return d


def breakpoint_prep(u, a):
    """Sorted breakpoint table for the one-resource dual.

    Orders with a_k = 0 or u_k = 0 carry no breakpoint (the former never
    bind the price, the latter never activate for p >= 0).  Returns ratios
    and weights sorted by ratio descending, stable in the original index,
    plus the position of each original order in the sorted table (-1 if
    absent).  The table is reused by the online policies, which retire one
    order per step by zeroing its weight.
    """
    u = np.asarray(u, float)
    a = np.asarray(a, float)
    active = (a > 0) & (u > 0)
    idx = np.flatnonzero(active)
    ratios = u[idx] / a[idx]
    order = np.argsort(-ratios, kind="stable")
    pos = np.full(len(u), -1, dtype=np.int64)
    pos[idx[order]] = np.arange(len(idx))
    return ratios[order], a[idx][order], pos


def breakpoint_price(ratios_desc, prefix_weight, budget):
    """Smallest minimizer given the descending ratio table and the running
    prefix sums of its weights; `budget` is unnormalized (N*d)."""
    q = np.searchsorted(prefix_weight, budget, side="right")
    if q < len(ratios_desc):
        return float(ratios_desc[q]), int(q)
    return 0.0, int(q)


def solve_dual_breakpoint(orders, d):
    """Exact one-resource dual minimizer in O(N log N)."""
    d = float(np.atleast_1d(np.asarray(d, dtype=float))[0])
    if d <= 0:
        raise ValueError("average budget d must be positive")
    u, A = _order_arrays(orders, m=1)
    N = len(u)
    if N == 0:
        return DualSolution(p=np.zeros(1), objective=0.0, status=STATUS_OPTIMAL)
    a = A[:, 0]
    ratios, weights, _ = breakpoint_prep(u, a)
    C = np.cumsum(weights)
    budget = N * d
    p_star, q = breakpoint_price(ratios, C, budget)
    obj = d * p_star + float(np.mean(np.maximum(u - a * p_star, 0.0)))
    status, note = STATUS_OPTIMAL, None
    if q >= 1 and abs(C[q - 1] - budget) <= TIE_TOL * max(1.0, budget):
        status = STATUS_TIE
        hi = ratios[q - 1]
        note = "flat optimum on [%.17g, %.17g]" % (p_star, hi)
    return DualSolution(p=np.array([p_star]), objective=obj, status=status, tie_note=note)


def solve_dual_simplex(orders, d):
    """General-m dual via the LP  min d.p + (1/N) sum y_k
    s.t. a_k.p + y_k - s_k = u_k, all variables >= 0."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    u, A = _order_arrays(orders, m=len(d))
    N, m = A.shape
    if N == 0:
        raise ValueError("need at least one order")
    big_A = np.hstack([A, np.eye(N), -np.eye(N)])
    c = np.concatenate([d, np.full(N, 1.0 / N), np.zeros(N)])
    res = solve_standard_form(big_A, u, c)
    p = np.maximum(res.x[:m], 0.0)
    obj = dual_objective(p, (u, A), d)
    return DualSolution(p=p, objective=obj, status=STATUS_OPTIMAL)


def _offline_one_resource(u, a, b):
    """Greedy ratio fill; returns (x, value, p_star)."""
    N = len(u)
    x = np.zeros(N)
    free = (a <= 0) & (u > 0)
    x[free] = 1.0
    ratios, weights, _ = breakpoint_prep(u, a)
    C = np.cumsum(weights)
    p_star, _ = breakpoint_price(ratios, C, b)
    constrained = (a > 0) & (u > 0)
    r_all = np.zeros(N)
    r_all[constrained] = u[constrained] / a[constrained]
    strict = constrained & (r_all > p_star)
    x[strict] = 1.0
    left = b - float(a[strict].sum())
    if p_star > 0:
        for k in np.flatnonzero(constrained & (r_all == p_star)):
            if left <= 0:
                break
            take = min(1.0, left / a[k])
            x[k] = take
            left -= a[k] * take
    value = float(u @ x)
    return x, value, p_star


def solve_offline_fractional(orders, b):
    """Hindsight LP relaxation: max u.x, 0 <= x <= 1, sum a_k x_k <= b."""
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if np.any(b < 0):
        raise ValueError("negative budget entry")
    u, A = _order_arrays(orders, m=len(b))
    N, m = A.shape
    if N == 0:
        return PrimalSolution(x=np.zeros(0), value=0.0, dual_price=np.zeros(m),
                              basis_note=0)
    if m == 1:
        x, value, p_star = _offline_one_resource(u, A[:, 0], float(b[0]))
        dual_price = np.array([p_star])
    else:
        # vars [x (N), budget slacks (m), box slacks (N)]
        big_A = np.zeros((m + N, N + m + N))
        big_A[:m, :N] = A.T
        big_A[:m, N:N + m] = np.eye(m)
        big_A[m:, :N] = np.eye(N)
        big_A[m:, N + m:] = np.eye(N)
        rhs = np.concatenate([b, np.ones(N)])
        c = np.concatenate([-u, np.zeros(m + N)])
        res = solve_standard_form(big_A, rhs, c)
        x = np.clip(res.x[:N], 0.0, 1.0)
        value = float(u @ x)
        dual_price = np.maximum(-res.y[:m], 0.0)
    frac = int(np.sum((x > 1e-9) & (x < 1 - 1e-9)))
    return PrimalSolution(x=x, value=value, dual_price=dual_price, basis_note=frac)


def accept_decision(order, p, remaining):
    """Strict price test plus entrywise feasibility gate."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    a = np.atleast_1d(np.asarray(order.a, dtype=float))
    remaining = np.atleast_1d(np.asarray(remaining, dtype=float))
    return bool(order.u > a @ p) and bool(np.all(remaining >= a))
