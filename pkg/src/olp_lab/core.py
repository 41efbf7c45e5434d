"""Shared value types for online allocation episodes.

Index conventions, fixed here once: arrays are 0-based; the classic 1-based
arrival index j corresponds to array position j-1.  Budget trajectories are
"after" views: remaining[i] is the budget after deciding arrival i, with the
initial budget b0 = n*d0 sitting conceptually at position -1.  The average
remaining resource d_j = b_j/(n-j) is defined for j = 0..n-1, so d_path[0]
is always d0.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Order:
    """One arrival: reward u and consumption vector a (length m)."""

    u: float
    a: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", np.atleast_1d(np.asarray(self.a, dtype=float)))


@dataclass
class Instance:
    """A realized episode: the real path and the one-sample (tilde) path.

    Order data is stored columnar (u vectors, consumption matrices) because
    the hot loops are vectorized; the `orders`/`tilde_orders` views build
    Order objects on demand.
    """

    n: int
    m: int
    d0: np.ndarray
    u: np.ndarray        # (n,) real rewards
    A: np.ndarray        # (n, m) real consumptions
    tilde_u: np.ndarray  # (n,) sample-path rewards
    tilde_A: np.ndarray  # (n, m) sample-path consumptions
    seed_info: dict = field(default_factory=dict)

    @property
    def b0(self):
        return self.n * self.d0

    @property
    def orders(self):
        return [Order(float(self.u[k]), self.A[k]) for k in range(self.n)]

    @property
    def tilde_orders(self):
        return [Order(float(self.tilde_u[k]), self.tilde_A[k]) for k in range(self.n)]


@dataclass
class RunRecord:
    """One policy's run on one instance.

    decisions[i] is the accept bit for arrival i, prices[i] the price vector
    in force before arrival i, remaining[i] the budget after arrival i.
    """

    decisions: np.ndarray   # (n,) bool
    prices: np.ndarray      # (n, m)
    remaining: np.ndarray   # (n, m)
    total_reward: float
    feasible: bool
    non_online: bool = False  # True for hindsight-information policies


@dataclass
class Trajectory:
    """Average-remaining-resource path d_j = b_j/(n-j), j = 0..n-1, with an
    optional deterministic reference path and the per-step deviations."""

    d_path: np.ndarray             # (n, m)
    delta_ref: np.ndarray = None   # (n, m) or None
    deviations: np.ndarray = None  # (n,) or None


def validate_instance(inst):
    """Every invariant violation as a human-readable string; [] when valid."""
    bad = []
    if inst.n < 1:
        bad.append("n not positive")
    if inst.m < 1:
        bad.append("m not positive")
    d0 = np.atleast_1d(inst.d0)
    if d0.shape != (inst.m,):
        bad.append("d0 length != m")
    for i, v in enumerate(d0):
        if not v > 0:
            bad.append("d0 entry %d not positive" % i)
    if inst.u.shape != (inst.n,) or inst.A.shape != (inst.n, inst.m):
        bad.append("real path shape mismatch")
    if inst.tilde_u.shape != (inst.n,):
        bad.append("tilde length mismatch")
    elif inst.tilde_A.shape != (inst.n, inst.m):
        bad.append("tilde consumption shape mismatch")
    if np.any(inst.u < 0) or np.any(inst.tilde_u < 0):
        bad.append("negative reward")
    if np.any(inst.A < 0) or np.any(inst.tilde_A < 0):
        bad.append("negative consumption entry")
    if not (np.all(np.isfinite(inst.u)) and np.all(np.isfinite(inst.A))
            and np.all(np.isfinite(inst.tilde_u)) and np.all(np.isfinite(inst.tilde_A))):
        bad.append("non-finite order data")
    return bad


def validate_run_record(inst, rec, tol=1e-12):
    """Check the budget recurrence, feasibility, and reward bookkeeping of a
    RunRecord against its instance.  Used as a property oracle over every
    policy."""
    bad = []
    n, m = inst.n, inst.m
    x = rec.decisions.astype(float)
    b = inst.b0.astype(float)
    for i in range(n):
        b = b - inst.A[i] * x[i]
        if np.max(np.abs(rec.remaining[i] - b)) > tol:
            bad.append("remaining recurrence broken at step %d" % i)
            break
    if np.min(rec.remaining) < -tol:
        bad.append("negative remaining budget")
    reward = float(np.dot(inst.u, x))
    if abs(reward - rec.total_reward) > max(tol, tol * abs(reward)):
        bad.append("total_reward mismatch")
    return bad


def trajectory_from_run(inst, rec, delta_ref=None):
    """Build the d_j = b_j/(n-j) path (j = 0..n-1) from a run."""
    n = inst.n
    b_hist = np.vstack([inst.b0[None, :], rec.remaining[: n - 1]])  # b_0..b_{n-1}
    denom = (n - np.arange(n)).astype(float)
    d_path = b_hist / denom[:, None]
    dev = None
    if delta_ref is not None:
        dev = np.linalg.norm(d_path - delta_ref, axis=1)
    return Trajectory(d_path=d_path, delta_ref=delta_ref, deviations=dev)
