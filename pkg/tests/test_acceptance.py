"""End-to-end acceptance gate.

Ten criteria, one test per criterion, named test_criterion_01 .. _10 so the
verbose pytest report reads as the verdict sheet.  Each test also prints a
single measured-verdict line (visible with -s, or on failure).  Tolerances
and seeds are pinned as module constants; thresholds marked "calibrated"
were frozen from pilot runs before the assertions were written.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from olp_lab.algos import PolicySpec
from olp_lab.analysis import (calibrate_eps_d, dual_convergence_curve,
                              estimate_regret, fit_scaling,
                              state_deviation_paths)
from olp_lab.cli import main
from olp_lab.gens import make_generator, sample_instance, validate_generator
from olp_lab.lp import (dual_objective, dual_subgradient,
                        solve_dual_breakpoint, solve_dual_simplex,
                        solve_offline_fractional)

SEED = 20260

GRID_STEP = 1e-4          # criterion 1 brute-force grid
GRID_TOL = 1e-3
CROSS_TOL = 1e-8          # breakpoint vs simplex, primal vs dual
SLACK_TOL = 1e-9
PROP_TOL = 1e-12          # convexity / subgradient property suites
N_GRID = (250, 500, 1000, 2000, 4000)
REPS = 200
POWER_CAP = 0.5           # regret growth exponent ceiling
RATIO_CAP = 4.0           # mean_regret(4000)/mean_regret(500)
SEPARATION_LOW = 0.3      # greedy regret floor on the two-phase path, x n
SEPARATION_HIGH = 0.05    # re-solve regret ceiling, x n
DUAL_REPS = 500
DUAL_BAND = 4.0           # slack factor on the log(n)/n decay
EXIT_SLOPE_CAP = 0.5

ONES = {"kind": "ones"}
STATIONARY = make_generator("stationary_uniform", m=1, params={"a": ONES})
SINUSOIDAL = make_generator("sinusoidal", m=1,
                            params={"offset": 0.2, "amp": 0.3, "a": ONES})
TWO_PHASE = make_generator("two_phase_example1", m=1, params={})
RESOLVE = PolicySpec("resolve_single_sample")


def _verdict(num, ok, detail):
    line = "[criterion %02d] %s -- %s" % (num, "PASS" if ok else "FAIL", detail)
    print(line, flush=True)
    assert ok, line


def test_criterion_01_solver_oracle_equivalence():
    t0 = time.time()
    rng = np.random.default_rng(SEED)
    worst_grid, worst_cross = 0.0, 0.0
    for _ in range(500):
        N = int(rng.integers(1, 51))
        u = rng.random(N)
        a = 0.5 + rng.random(N)
        d = 0.1 + 0.9 * rng.random()
        sol = solve_dual_breakpoint((u, a[:, None]), d)
        grid = np.arange(0.0, (u / a).max() + 0.1, GRID_STEP)
        vals = d * grid + np.maximum(u[None, :] - np.outer(grid, a), 0.0).mean(axis=1)
        worst_grid = max(worst_grid, sol.objective - vals.min())
        assert sol.objective <= vals.min() + GRID_TOL
        sx = solve_dual_simplex((u, a[:, None]), [d])
        worst_cross = max(worst_cross, abs(sol.objective - sx.objective))
    dt = time.time() - t0
    ok = worst_grid <= GRID_TOL and worst_cross <= CROSS_TOL and dt < 10.0
    _verdict(1, ok, "500 one-resource duals: max grid gap %.2e (tol %g), "
             "max simplex gap %.2e (tol %g), %.1fs (cap 10s)"
             % (worst_grid, GRID_TOL, worst_cross, CROSS_TOL, dt))


def test_criterion_02_strong_duality():
    rng = np.random.default_rng(SEED + 1)
    worst_gap, worst_slack = 0.0, 0.0
    for _ in range(200):
        N = int(rng.integers(1, 51))
        m = int(rng.integers(1, 4))
        u = rng.random(N)
        A = rng.random((N, m))
        b = N * (0.05 + 0.6 * rng.random(m))
        sol = solve_offline_fractional((u, A), b)
        dual = N * dual_objective(sol.dual_price, (u, A), b / N)
        worst_gap = max(worst_gap, abs(sol.value - dual))
        slack = max(float(np.max(A.T @ sol.x - b)),
                    float(np.max(sol.x - 1.0)), float(np.max(-sol.x)))
        worst_slack = max(worst_slack, slack)
    ok = worst_gap <= CROSS_TOL and worst_slack <= SLACK_TOL
    _verdict(2, ok, "200 offline LPs (N<=50, m<=3): max primal-dual gap %.2e "
             "(tol %g), max feasibility slack %.2e (tol %g)"
             % (worst_gap, CROSS_TOL, worst_slack, SLACK_TOL))


def test_criterion_03_property_suites():
    rng = np.random.default_rng(SEED + 2)
    bad_sub, bad_cvx = 0, 0
    for _ in range(1000):
        N = int(rng.integers(1, 30))
        m = int(rng.integers(1, 4))
        u, A = rng.random(N), rng.random((N, m))
        d = 0.05 + rng.random(m)
        p, q = 2 * rng.random(m), 2 * rng.random(m)
        g = dual_subgradient(p, (u, A), d)
        if dual_objective(q, (u, A), d) < (dual_objective(p, (u, A), d)
                                           + g @ (q - p) - PROP_TOL):
            bad_sub += 1
        lam = rng.random()
        mid = lam * p + (1 - lam) * q
        if dual_objective(mid, (u, A), d) > (lam * dual_objective(p, (u, A), d)
                                             + (1 - lam) * dual_objective(q, (u, A), d)
                                             + PROP_TOL):
            bad_cvx += 1
    ok = bad_sub == 0 and bad_cvx == 0
    _verdict(3, ok, "1000-trial suites: %d subgradient violations, %d convexity "
             "violations (tol %g)" % (bad_sub, bad_cvx, PROP_TOL))


def _regret_scaling(num, spec, label):
    t0 = time.time()
    d0 = np.array([0.25])
    ests = [estimate_regret(spec, RESOLVE, n, d0, REPS, SEED) for n in N_GRID]
    means = {e.n: e.mean_regret for e in ests}
    fit = fit_scaling(ests, "power")
    ratio = means[4000] / means[500]
    dt = time.time() - t0
    ok = fit.exponent_or_coeff <= POWER_CAP and ratio <= RATIO_CAP and dt < 900
    _verdict(num, ok, "%s, %d reps x grid %s: power exponent %.3f (cap %g), "
             "regret(4000)/regret(500) = %.2f (cap %g), %.0fs (cap 900s)"
             % (label, REPS, list(N_GRID), fit.exponent_or_coeff, POWER_CAP,
                ratio, RATIO_CAP, dt))


def test_criterion_04_regret_scaling_stationary():
    _regret_scaling(4, STATIONARY, "stationary family")


def test_criterion_05_regret_scaling_sinusoidal():
    assert validate_generator(SINUSOIDAL) == []  # regularity contract holds
    _regret_scaling(5, SINUSOIDAL, "sinusoidal family")


def test_criterion_06_two_phase_separation():
    n, d0 = 2000, np.array([0.25])
    greedy = estimate_regret(TWO_PHASE, PolicySpec("greedy_accept"), n, d0,
                             REPS, SEED)
    res_p2 = estimate_regret(TWO_PHASE, RESOLVE, n, d0, REPS, SEED)
    res_p1 = estimate_regret(STATIONARY, RESOLVE, n, d0, REPS, SEED)
    ok = (greedy.mean_regret >= SEPARATION_LOW * n
          and res_p1.mean_regret <= SEPARATION_HIGH * n
          and res_p2.mean_regret <= SEPARATION_HIGH * n)
    _verdict(6, ok, "n=%d, %d reps: greedy regret %.0f (floor %.0f); re-solve "
             "regret %.1f on the stationary path / %.1f on the two-phase path "
             "(ceiling %.0f)" % (n, REPS, greedy.mean_regret, SEPARATION_LOW * n,
                                 res_p1.mean_regret, res_p2.mean_regret,
                                 SEPARATION_HIGH * n))


def test_criterion_07_dual_convergence_rate():
    d0 = np.array([0.25])
    pts, _ = dual_convergence_curve(STATIONARY, [500, 1000, 2000, 4000], d0,
                                    DUAL_REPS, SEED,
                                    p_star_fn=lambda n: [1.0 - d0[0]])
    mse = {p["n"]: p["mse"] for p in pts}
    band = mse[500] * (500 / 4000) * (np.log(4000) / np.log(500)) * DUAL_BAND
    ok = mse[4000] <= band
    _verdict(7, ok, "%d reps, analytic p*=0.75: MSE(500)=%.2e, MSE(4000)=%.2e, "
             "log(n)/n band %.2e (slack x%g) -> ratio %.2f"
             % (DUAL_REPS, mse[500], mse[4000], band, DUAL_BAND, mse[4000] / band))


def _exit_slope(spec):
    d0 = np.array([0.25])
    eps_d = calibrate_eps_d(spec, RESOLVE, N_GRID[0], d0, reps=50, seed=SEED + 1)
    margins = []
    for n in N_GRID:
        res = state_deviation_paths(spec, RESOLVE, n, d0, REPS, eps_d, SEED)
        margins.append(res.stats.mean_exit_margin)
    margins = np.array(margins)
    pos = margins > 0
    if pos.sum() < 2:
        return eps_d, margins, 0.0
    slope = np.polyfit(np.log(np.array(N_GRID)[pos]), np.log(margins[pos]), 1)[0]
    return eps_d, margins, float(slope)


def test_criterion_08_exit_time_scaling():
    t0 = time.time()
    eps1, m1, s1 = _exit_slope(STATIONARY)
    eps2, m2, s2 = _exit_slope(SINUSOIDAL)
    dt = time.time() - t0
    ok = s1 <= EXIT_SLOPE_CAP and s2 <= EXIT_SLOPE_CAP
    _verdict(8, ok, "mean(n - tau-hat) over %d reps: stationary %s -> slope "
             "%.3f (eps_d %.3f), sinusoidal %s -> slope %.3f (eps_d %.3f); "
             "cap %g; %.0fs"
             % (REPS, np.round(m1, 1).tolist(), s1, eps1,
                np.round(m2, 1).tolist(), s2, eps2, EXIT_SLOPE_CAP, dt))


def test_criterion_09_byte_determinism(tmp_path, monkeypatch):
    cfg = {
        "generator": {"family": "sinusoidal", "m": 1,
                      "params": {"offset": 0.2, "amp": 0.3, "a": ONES}},
        "policies": [{"kind": "resolve_single_sample"},
                     {"kind": "one_shot_single_sample"}],
        "n_grid": [40, 80], "reps": 5, "d0": [0.25], "seed": SEED,
        "outputs": str(tmp_path / "run1"),
        "analysis": {"regret": True, "dual_convergence": True,
                     "state_deviation": True, "dual_reps": 5, "eps_d": 0.4,
                     "delta_k": 100, "saa_k": 100},
    }
    files = ("regret.csv", "dual_convergence.csv", "state_deviation.csv")
    digests = []
    for threads, outdir in ((1, "run1"), (4, "run2"), (2, "run3")):
        cfg["outputs"] = str(tmp_path / outdir)
        p = tmp_path / ("cfg_%s.json" % outdir)
        p.write_text(json.dumps(cfg), encoding="utf-8")
        monkeypatch.setenv("OLP_LAB_THREADS", str(threads))
        assert main(["run", str(p)]) == 0
        digests.append(tuple((tmp_path / outdir / f).read_bytes() for f in files))
    monkeypatch.delenv("OLP_LAB_THREADS")
    ok = digests[0] == digests[1] == digests[2]
    _verdict(9, ok, "identical config+seed at 1/2/4 workers: %s byte-identical"
             % (("all %d CSVs" % len(files)) if ok else "NOT"))


def test_criterion_10_oracle_policy_bound():
    oracle = PolicySpec("oracle_offline_price")
    cases = [
        ("stationary_uniform", STATIONARY, 200, [0.25]),
        ("linear_drift", make_generator("linear_drift", m=1,
                                        params={"s0": -0.3, "s1": 0.3, "a": ONES}),
         200, [0.25]),
        ("sinusoidal", SINUSOIDAL, 200, [0.25]),
        ("two_phase_example1", TWO_PHASE, 200, [0.25]),
        ("custom_table", make_generator("custom_table", m=1,
                                        params={"knots": [0.0, 0.5, 1.0],
                                                "values": [0.1, -0.2, 0.3],
                                                "a": ONES}), 200, [0.25]),
        ("stationary m=2 box", make_generator(
            "stationary_uniform", m=2,
            params={"a": {"kind": "box", "lo": 0.2, "hi": 1.0}}), 60, [0.3, 0.35]),
    ]
    details = []
    ok = True
    for name, spec, n, d0 in cases:
        cap = spec.m * spec.bounds.u_bar
        est = estimate_regret(spec, oracle, n, np.array(d0), REPS, SEED + 3)
        worst = max(row[5] for row in est.rows)
        ok = ok and worst <= cap + 1e-9
        details.append("%s worst %.3f/cap %g" % (name, worst, cap))
    _verdict(10, ok, "%d reps each, per-replication regret <= m*u_bar: %s"
             % (REPS, "; ".join(details)))
