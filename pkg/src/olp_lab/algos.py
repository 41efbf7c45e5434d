"""Online decision policies.

The centerpiece is the single-sample re-solving policy: before arrival j it
minimizes the unnormalized sample dual

    b_{j-1}.p + sum_{k >= j} (tilde_u_k - tilde_a_k.p)^+

over p >= 0 (the suffix INCLUDES index j), then accepts iff the real reward
strictly beats the priced consumption and the remaining budget covers the
order entrywise.  With one resource the re-solve reuses one sorted
breakpoint table for the whole run: retiring arrival j just zeroes its
weight, which leaves all other sorted positions untouched, so every step is
a prefix-sum plus one binary search and the selected price is bit-identical
to a from-scratch solve on the suffix (the zeroed weights are exact no-ops
under addition).

Baselines: the same dual solved once at j=1 and frozen (ablation), a fixed
externally chosen price, the zero price (greedy), and a hindsight threshold
policy priced by the offline LP dual of the realized path — the latter is
flagged non_online and exists only as a diagnostic reference.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import RunRecord
from .lp import (SolverFailure, breakpoint_prep, breakpoint_price,
                 solve_dual_simplex, solve_offline_fractional)

POLICY_KINDS = ("resolve_single_sample", "one_shot_single_sample",
                "fixed_price", "greedy_accept", "oracle_offline_price")


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError("unknown policy kind %r" % self.kind)
        if self.kind == "fixed_price":
            p = np.atleast_1d(np.asarray(self.params.get("p", []), dtype=float))
            if p.size == 0:
                raise ValueError("fixed_price needs a price vector p")
            if np.any(p < 0):
                raise ValueError("fixed_price p must be entrywise >= 0")

    def label(self):
        if self.kind == "fixed_price":
            p = np.atleast_1d(np.asarray(self.params["p"], dtype=float))
            return "fixed_price[%s]" % ",".join("%g" % v for v in p)
        return self.kind


def _threshold_run(inst, prices, non_online=False):
    """Budget-gated strict-threshold run.  `prices` is either one constant
    price vector or an (n, m) matrix of per-arrival prices."""
    n, m = inst.n, inst.m
    P = np.asarray(prices, dtype=float)
    if P.ndim == 1:
        P = np.broadcast_to(P, (n, m))
    dec = np.zeros(n, dtype=bool)
    rem = np.empty((n, m))
    b = inst.b0.astype(float).copy()
    u, A = inst.u, inst.A
    for i in range(n):
        ai = A[i]
        if u[i] > ai @ P[i] and np.all(b >= ai):
            dec[i] = True
            b = b - ai
        rem[i] = b
    return RunRecord(decisions=dec, prices=np.array(P, dtype=float, copy=True),
                     remaining=rem, total_reward=float(inst.u @ dec),
                     feasible=bool(np.min(rem) >= 0.0), non_online=non_online)


def _resolve_prices_one_resource(inst):
    """Per-arrival re-solved prices and decisions for m = 1."""
    n = inst.n
    u, a = inst.u, inst.A[:, 0]
    ratios, weights, pos = breakpoint_prep(inst.tilde_u, inst.tilde_A[:, 0])
    w = weights.copy()
    b = float(inst.b0[0])
    prices = np.empty(n)
    dec = np.zeros(n, dtype=bool)
    rem = np.empty(n)
    for i in range(n):
        C = np.cumsum(w)
        p, _ = breakpoint_price(ratios, C, b)
        prices[i] = p
        if u[i] > a[i] * p and b >= a[i]:
            dec[i] = True
            b -= a[i]
        rem[i] = b
        if pos[i] >= 0:
            w[pos[i]] = 0.0  # arrival i leaves the sample suffix
    return prices[:, None], dec, rem[:, None]


def run_resolve_single_sample(inst):
    """Re-solve the sample dual before every arrival."""
    n, m = inst.n, inst.m
    if m == 1:
        prices, dec, rem = _resolve_prices_one_resource(inst)
    else:
        prices = np.empty((n, m))
        dec = np.zeros(n, dtype=bool)
        rem = np.empty((n, m))
        b = inst.b0.astype(float).copy()
        for i in range(n):
            try:
                sol = solve_dual_simplex((inst.tilde_u[i:], inst.tilde_A[i:]),
                                         b / (n - i))
            except SolverFailure as e:
                e.step = i
                raise
            prices[i] = sol.p
            ai = inst.A[i]
            if inst.u[i] > ai @ sol.p and np.all(b >= ai):
                dec[i] = True
                b = b - ai
            rem[i] = b
    return RunRecord(decisions=dec, prices=prices, remaining=rem,
                     total_reward=float(inst.u @ dec),
                     feasible=bool(np.min(rem) >= 0.0))


def run_one_shot_single_sample(inst):
    """Solve the sample dual once at j = 1 and freeze the price."""
    n, m = inst.n, inst.m
    if m == 1:
        ratios, weights, _ = breakpoint_prep(inst.tilde_u, inst.tilde_A[:, 0])
        p0, _ = breakpoint_price(ratios, np.cumsum(weights), float(inst.b0[0]))
        p = np.array([p0])
    else:
        try:
            p = solve_dual_simplex((inst.tilde_u, inst.tilde_A), inst.d0).p
        except SolverFailure as e:
            e.step = 0
            raise
    return _threshold_run(inst, p)


def run_fixed_price(inst, p):
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(p < 0):
        raise ValueError("price must be entrywise >= 0")
    return _threshold_run(inst, p)


def run_greedy_accept(inst):
    """Accept anything with positive reward while the budget allows."""
    return _threshold_run(inst, np.zeros(inst.m))


def run_oracle_offline_price(inst):
    """Threshold at the realized path's offline LP dual price (hindsight
    information; excluded from regret-scaling comparisons)."""
    sol = solve_offline_fractional((inst.u, inst.A), inst.b0)
    return _threshold_run(inst, sol.dual_price, non_online=True)


def run_policy(policy, inst):
    """Dispatch a PolicySpec."""
    kind = policy.kind
    if kind == "resolve_single_sample":
        return run_resolve_single_sample(inst)
    if kind == "one_shot_single_sample":
        return run_one_shot_single_sample(inst)
    if kind == "fixed_price":
        return run_fixed_price(inst, policy.params["p"])
    if kind == "greedy_accept":
        return run_greedy_accept(inst)
    if kind == "oracle_offline_price":
        return run_oracle_offline_price(inst)
    raise ValueError(kind)
