"""Monte Carlo measurement harness.

Estimators here are deterministic functions of (generator, policy, sizes,
seed): every random draw comes off a keyed counter stream, replications are
the parallel unit, and aggregation folds results in replication order, so
the same inputs give bit-identical outputs at any worker count.

Common random numbers: instance streams are keyed by (seed, replication)
only — never by policy — so comparing two policies at the same horizon
pairs them on identical instances.
"""

import collections
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .algos import run_policy
from .core import trajectory_from_run
from .gens import _sample_path, delta_path, population_price, sample_instance
from .lp import (breakpoint_prep, breakpoint_price, solve_dual_breakpoint,
                 solve_dual_simplex, solve_offline_fractional)
from .streams import OrderStream


@dataclass
class RegretEstimate:
    n: int
    policy: object
    mean_regret: float
    stderr: float
    reps: int
    mean_offline: float
    mean_reward: float
    rows: list = field(default_factory=list, repr=False)


@dataclass
class ExitStats:
    n: int
    eps_d: float
    mean_exit_margin: float
    exit_histogram: list          # sorted [margin, count] pairs
    proxy_note: str


@dataclass
class FitResult:
    model: str
    exponent_or_coeff: float
    r2: float
    grid: list
    intercept: float = 0.0
    note: str = ""


@dataclass
class StateDeviationResult:
    stats: ExitStats
    quantiles: dict               # {"j": ..., "q25": ..., "q50": ..., "q75": ...}
    rows: list = field(repr=False, default_factory=list)


def _pmap(fn, count, threads):
    """Index-ordered map over range(count); worker count never changes the
    result, only the wall clock."""
    if threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def seed_branch_label(seed, purpose, replication):
    return "%d/%s/%d" % (seed, purpose, replication)


def estimate_regret(spec, policy, n, d0, reps, seed, threads=1):
    """Mean hindsight-LP regret of a policy over keyed replications."""
    if reps < 2:
        raise ValueError("reps must be >= 2 for a standard error")
    label = policy.label()

    def one(r):
        inst = sample_instance(spec, n, d0, seed, replication=r)
        rec = run_policy(policy, inst)
        off = solve_offline_fractional((inst.u, inst.A), inst.b0).value
        return off, rec.total_reward

    vals = _pmap(one, reps, threads)
    offs = np.array([v[0] for v in vals])
    rews = np.array([v[1] for v in vals])
    regs = offs - rews
    rows = [(n, label, r, float(offs[r]), float(rews[r]), float(regs[r]),
             seed_branch_label(seed, "instance", r)) for r in range(reps)]
    return RegretEstimate(
        n=n, policy=policy,
        mean_regret=float(np.mean(offs) - np.mean(rews)),
        stderr=float(np.std(regs, ddof=1) / np.sqrt(reps)),
        reps=reps, mean_offline=float(np.mean(offs)),
        mean_reward=float(np.mean(rews)), rows=rows)


def dual_convergence_curve(spec, n_grid, d0, reps, seed, K=200,
                           p_star_fn=None, threads=1):
    """Squared distance between the start-of-horizon sample price and the
    population price, per horizon.

    Measured at the start state (the realized d there is d0 itself — this is
    the pointwise version; it lower-bounds the neighborhood supremum form).
    Returns (points, rows): points are {n, mse, stderr} dicts, rows are
    (n, replication, sq_dist) tuples.
    """
    d0 = np.atleast_1d(np.asarray(d0, dtype=float))
    points, rows = [], []
    for n in n_grid:
        if p_star_fn is not None:
            p_star = np.atleast_1d(np.asarray(p_star_fn(n), dtype=float))
        else:
            p_star = population_price(spec, n, 0, d0, K, seed).p_star

        def one(r):
            stream = OrderStream(seed, "dualconv", r, path=0, width=spec.m + 1)
            u, A = _sample_path(spec, stream, n)
            if spec.m == 1:
                p_hat = solve_dual_breakpoint((u, A), float(d0[0])).p
            else:
                p_hat = solve_dual_simplex((u, A), d0).p
            return float(np.sum((p_hat - p_star) ** 2))

        sq = np.array(_pmap(one, reps, threads))
        rows += [(n, r, float(sq[r])) for r in range(reps)]
        stderr = float(np.std(sq, ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0
        points.append({"n": n, "mse": float(np.mean(sq)), "stderr": stderr})
    return points, rows


EXIT_PROXY_NOTE = ("tau-hat = first j in 1..n-1 with any remaining-budget entry "
                   "below alpha or ||d_j - delta_j||_2 above eps_d, else n; "
                   "Euclidean-ball proxy for the tracking neighborhoods")


def state_deviation_paths(spec, policy, n, d0, reps, eps_d, seed,
                          K=500, saa_k=200, threads=1):
    """Deviation of the average-remaining-resource path from its
    deterministic reference, with proxy exit times."""
    d0 = np.atleast_1d(np.asarray(d0, dtype=float))
    p_star = population_price(spec, n, 0, d0, saa_k, seed)
    delta = delta_path(spec, n, d0, p_star, K, seed)
    alpha = spec.bounds.alpha

    def one(r):
        inst = sample_instance(spec, n, d0, seed, replication=r)
        rec = run_policy(policy, inst)
        traj = trajectory_from_run(inst, rec, delta_ref=delta)
        dev = traj.deviations
        bud = np.any(rec.remaining[: n - 1] < alpha, axis=1)  # b_j, j=1..n-1
        trig = bud | (dev[1:] > eps_d)
        tau = int(np.argmax(trig)) + 1 if np.any(trig) else n
        return dev, tau

    res = _pmap(one, reps, threads)
    devs = np.vstack([v[0] for v in res])          # (reps, n)
    taus = np.array([v[1] for v in res])
    margins = n - taus
    hist = sorted(collections.Counter(int(v) for v in margins).items())
    stats = ExitStats(n=n, eps_d=float(eps_d),
                      mean_exit_margin=float(np.mean(margins)),
                      exit_histogram=[list(kv) for kv in hist],
                      proxy_note=EXIT_PROXY_NOTE)
    quant = {
        "j": np.arange(n),
        "q25": np.quantile(devs, 0.25, axis=0),
        "q50": np.quantile(devs, 0.50, axis=0),
        "q75": np.quantile(devs, 0.75, axis=0),
    }
    rows = []
    for r in range(reps):
        tau = taus[r]
        rows += [(n, r, j, float(devs[r, j]), int(j >= tau)) for j in range(n)]
    return StateDeviationResult(stats=stats, quantiles=quant, rows=rows)


def calibrate_eps_d(spec, policy, n, d0, reps, seed, quantile=0.95,
                    safety=2.0, K=500, saa_k=200):
    """Pilot choice of the deviation radius: a safety multiple of the given
    quantile of mid-path deviations (the last tenth of the horizon is
    excluded — the denominator n-j makes the terminal segment spike)."""
    d0 = np.atleast_1d(np.asarray(d0, dtype=float))
    p_star = population_price(spec, n, 0, d0, saa_k, seed)
    delta = delta_path(spec, n, d0, p_star, K, seed)
    cut = max(2, int(0.9 * n))
    pool = []
    for r in range(reps):
        inst = sample_instance(spec, n, d0, seed, replication=r)
        rec = run_policy(policy, inst)
        traj = trajectory_from_run(inst, rec, delta_ref=delta)
        pool.append(traj.deviations[:cut])
    return float(safety * np.quantile(np.concatenate(pool), quantile))


def fit_scaling(estimates, model):
    """Least-squares scaling fit of mean regret against the horizon.

    power_law_n: log r ~ exponent * log n;  polylog: log r ~ gamma * log log n.
    Non-positive mean regrets cannot enter a log fit; they are dropped and
    noted.
    """
    aliases = {"power": "power_law_n", "power_law_n": "power_law_n",
               "polylog": "polylog"}
    if model not in aliases:
        raise ValueError("model must be power|power_law_n|polylog")
    model = aliases[model]
    pts = [(e.n, e.mean_regret) for e in estimates]
    used = [(n, r) for n, r in pts if r > 0]
    note = ""
    if len(used) < len(pts):
        note = "%d non-positive mean regrets excluded" % (len(pts) - len(used))
    if len(used) < 3:
        raise ValueError("need at least 3 grid points with positive regret")
    ns = np.array([v[0] for v in used], dtype=float)
    rs = np.array([v[1] for v in used], dtype=float)
    x = np.log(ns) if model == "power_law_n" else np.log(np.log(ns))
    y = np.log(rs)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return FitResult(model=model, exponent_or_coeff=float(slope),
                     r2=float(min(max(r2, 0.0), 1.0)),
                     grid=[int(v) for v in ns], intercept=float(intercept),
                     note=note)


def z_field_probe(spec, n, j, d_grid, K, seed, d0=None, delta_j=None,
                  delta_j1=None, price_override=None, saa_k=200, K_delta=500):
    """One-step conditional drift of the deviation process at state (j, d).

    Each of the K transitions draws a fresh sample suffix for the price (the
    one-sample information is independent of the realized next order) and a
    fresh arrival j+1.  The reference path values delta_j, delta_j1 can be
    injected; otherwise they are estimated from d0.  price_override replaces
    the per-draw suffix re-solve (for probes against a known price).
    """
    if not 0 <= j <= n - 2:
        raise ValueError("need 0 <= j <= n-2")
    m = spec.m
    if delta_j is None or delta_j1 is None:
        if d0 is None:
            raise ValueError("give d0 or both delta_j and delta_j1")
        d0 = np.atleast_1d(np.asarray(d0, dtype=float))
        p_star = population_price(spec, n, 0, d0, saa_k, seed)
        delta = delta_path(spec, n, d0, p_star, K_delta, seed)
        delta_j, delta_j1 = delta[j], delta[j + 1]
    delta_j = np.atleast_1d(np.asarray(delta_j, dtype=float))
    delta_j1 = np.atleast_1d(np.asarray(delta_j1, dtype=float))

    R = n - j  # suffix indices j+1..n
    suffix_stream = OrderStream(seed, "probe", 0, path=0, width=m + 1)
    arrival_stream = OrderStream(seed, "probe", 0, path=1, width=m + 1)
    k_arr = np.repeat(np.arange(j + 1, n + 1)[None, :], K, axis=0).ravel()
    su, sA = _sample_path(spec, suffix_stream, n, j_arr=k_arr)  # (K*R,)
    au, aA = _sample_path(spec, arrival_stream, n,
                          j_arr=np.full(K, j + 1))               # (K,)

    out = []
    for d in d_grid:
        d = np.atleast_1d(np.asarray(d, dtype=float))
        if np.any(d <= 0):
            raise ValueError("probe states must be entrywise positive")
        b = (n - j) * d
        samples = np.empty((K, m))
        for t in range(K):
            uu = su[t * R:(t + 1) * R]
            AA = sA[t * R:(t + 1) * R]
            if price_override is not None:
                p = np.atleast_1d(np.asarray(price_override, dtype=float))
            elif m == 1:
                ratios, weights, _ = breakpoint_prep(uu, AA[:, 0])
                pv, _ = breakpoint_price(ratios, np.cumsum(weights), float(b[0]))
                p = np.array([pv])
            else:
                p = solve_dual_simplex((uu, AA), d).p
            a = aA[t]
            x = 1.0 if (au[t] > a @ p and np.all(b >= a)) else 0.0
            d_next = (b - a * x) / (n - j - 1)
            samples[t] = (d_next - delta_j1) - (d - delta_j)
        z_mean = samples.mean(axis=0)
        z_stderr = samples.std(axis=0, ddof=1) / np.sqrt(K) if K > 1 else np.zeros(m)
        out.append({"d": d, "z_mean": z_mean, "z_stderr": z_stderr})
    return out
