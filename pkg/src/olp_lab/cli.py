"""Command-line front door.

    olp-lab run <config.json> [--threads N] [--figures]
    olp-lab validate <config.json>
    olp-lab fit <regret.csv> --model {power,polylog}
    olp-lab plot <outdir>

Exit codes: 0 ok, 2 config error, 3 solver failure, 4 I/O error.
OLP_LAB_THREADS overrides the worker count; the worker count never changes
output bytes.  All files use UTF-8, '\\n' line endings, and '.' decimals;
floats are written in shortest round-trip form, so identical config+seed
means identical bytes.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .analysis import (calibrate_eps_d, dual_convergence_curve, estimate_regret,
                       fit_scaling, state_deviation_paths)
from .config import ConfigError, load_config
from .gens import nondegeneracy_estimate, validate_generator
from .lp import (SolverFailure, dual_objective, dual_subgradient,
                 solve_dual_breakpoint, solve_dual_simplex,
                 solve_offline_fractional)
from .streams import PURPOSES, generator_for

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

# families whose validation report is expected to carry these violation
# classes by construction
EXPECTED_VIOLATIONS = {"two_phase_example1": {"time-smoothness"}}


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _threads(flag_value):
    env = os.environ.get("OLP_LAB_THREADS")
    if env is not None:
        return max(1, int(env))
    if flag_value is not None:
        return max(1, flag_value)
    return os.cpu_count() or 1


def cmd_run(config_path, threads=None, figures=False):
    cfg = load_config(config_path)
    nthreads = _threads(threads)
    outdir = cfg.outputs
    os.makedirs(outdir, exist_ok=True)
    spec, an = cfg.generator, cfg.analysis
    written = []

    if an.regret or an.fit:
        estimates = []
        rows = []
        for n in cfg.n_grid:
            for policy in cfg.policies:
                est = estimate_regret(spec, policy, n, cfg.d0, cfg.reps,
                                      cfg.seed, threads=nthreads)
                estimates.append(est)
                rows.extend(est.rows)
        _write_csv(os.path.join(outdir, "regret.csv"),
                   ("n", "policy", "replication", "offline_value", "reward",
                    "regret", "seed_branch"), rows)
        written.append("regret.csv")

        if an.fit:
            fits = {}
            by_label = {}
            for est in estimates:
                by_label.setdefault(est.policy.label(), []).append(est)
            for label in sorted(by_label):
                try:
                    fr = fit_scaling(by_label[label], an.fit_model)
                    fits[label] = {"model": fr.model,
                                   "exponent_or_coeff": fr.exponent_or_coeff,
                                   "r2": fr.r2, "grid": fr.grid,
                                   "intercept": fr.intercept, "note": fr.note}
                except ValueError as e:
                    fits[label] = {"error": str(e)}
            with open(os.path.join(outdir, "fit.json"), "w", encoding="utf-8",
                      newline="\n") as fh:
                json.dump({"model_requested": an.fit_model, "fits": fits}, fh,
                          indent=2, sort_keys=True)
                fh.write("\n")
            written.append("fit.json")

    if an.dual_convergence:
        _, rows = dual_convergence_curve(spec, cfg.n_grid, cfg.d0, an.dual_reps,
                                         cfg.seed, K=an.saa_k, threads=nthreads)
        _write_csv(os.path.join(outdir, "dual_convergence.csv"),
                   ("n", "replication", "sq_dist"), rows)
        written.append("dual_convergence.csv")

    if an.state_deviation:
        # the deviation diagnostics track one policy: the re-solving policy
        # if configured, otherwise the first one
        policy = next((p for p in cfg.policies if p.kind == "resolve_single_sample"),
                      cfg.policies[0])
        eps_d = an.eps_d
        if eps_d == "auto":
            eps_d = calibrate_eps_d(spec, policy, cfg.n_grid[0], cfg.d0,
                                    min(cfg.reps, 50), cfg.seed + 1,
                                    K=an.delta_k, saa_k=an.saa_k)
        rows = []
        for n in cfg.n_grid:
            res = state_deviation_paths(spec, policy, n, cfg.d0, cfg.reps,
                                        eps_d, cfg.seed, K=an.delta_k,
                                        saa_k=an.saa_k, threads=nthreads)
            rows.extend(res.rows)
        _write_csv(os.path.join(outdir, "state_deviation.csv"),
                   ("n", "replication", "j", "deviation", "exited"), rows)
        written.append("state_deviation.csv")

    manifest = {
        "code_version": __version__,
        "config": cfg.raw,
        "streams": {
            "scheme": "philox 2x64 keys (seed, purpose, replication, path); "
                      "one 4-double counter block per order index",
            "purposes": PURPOSES,
        },
        "outputs_written": sorted(written),
    }
    with open(os.path.join(outdir, "run_manifest.json"), "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if figures or an.figures:
        from . import plots
        plots.render_all(outdir)
    return EXIT_OK


def _validate_report(cfg):
    """Generator grid checks plus a small cross-solver equivalence suite."""
    lines = []
    spec = cfg.generator
    expected = EXPECTED_VIOLATIONS.get(spec.family, set())

    violations = validate_generator(spec)
    classes = {v.split(":", 1)[0] for v in violations}
    for v in violations:
        tag = "NOTE" if v.split(":", 1)[0] in expected else "FAIL"
        lines.append("%s generator: %s" % (tag, v))
    if not violations:
        lines.append("PASS generator: no distribution-contract violations")
    elif classes <= expected:
        lines.append("PASS generator: only the expected violation class(es) "
                     "for this family (%s)" % ", ".join(sorted(expected)))

    est = nondegeneracy_estimate(spec, n=min(400, cfg.n_grid[-1]), d0=cfg.d0,
                                 K=cfg.analysis.saa_k, seed=cfg.seed)
    lines.append("NOTE price non-degeneracy estimates (no pass/fail semantics): "
                 + json.dumps(est, sort_keys=True))

    rng = generator_for(cfg.seed, "test", 0, 0)
    gap = 0.0
    for _ in range(50):
        N = int(rng.integers(3, 40))
        u = rng.random(N)
        A = 0.5 + rng.random((N, 1))
        d = 0.1 + 0.9 * rng.random()
        bp = solve_dual_breakpoint((u, A), d)
        sx = solve_dual_simplex((u, A), np.array([d]))
        gap = max(gap, abs(bp.objective - sx.objective))
    lines.append("%s cross-solver: max objective gap %.3e over 50 random "
                 "one-resource duals (tol 1e-08)" % ("PASS" if gap < 1e-8 else "FAIL", gap))

    worst = 0.0
    for _ in range(50):
        N = int(rng.integers(3, 40))
        m = int(rng.integers(1, 4))
        u = rng.random(N)
        A = rng.random((N, m))
        b = N * (0.1 + 0.9 * rng.random(m))
        sol = solve_offline_fractional((u, A), b)
        dual = len(u) * dual_objective(sol.dual_price, (u, A), b / len(u))
        worst = max(worst, abs(sol.value - dual))
    lines.append("%s strong-duality: max primal-dual gap %.3e over 50 random "
                 "instances (tol 1e-08)" % ("PASS" if worst < 1e-8 else "FAIL", worst))

    bad = 0
    for _ in range(200):
        N = int(rng.integers(1, 30))
        m = int(rng.integers(1, 4))
        u = rng.random(N)
        A = rng.random((N, m))
        d = rng.random(m) + 0.05
        p = 2.0 * rng.random(m)
        q = 2.0 * rng.random(m)
        g = dual_subgradient(p, (u, A), d)
        if dual_objective(q, (u, A), d) < dual_objective(p, (u, A), d) + g @ (q - p) - 1e-12:
            bad += 1
        lam = rng.random()
        mid = lam * p + (1 - lam) * q
        if dual_objective(mid, (u, A), d) > (lam * dual_objective(p, (u, A), d)
                                             + (1 - lam) * dual_objective(q, (u, A), d)
                                             + 1e-12):
            bad += 1
    lines.append("%s convexity/subgradient: %d violations in 200 randomized "
                 "trials" % ("PASS" if bad == 0 else "FAIL", bad))
    return lines


def cmd_validate(config_path):
    cfg = load_config(config_path)
    for line in _validate_report(cfg):
        print(line)
    return EXIT_OK


def cmd_fit(csv_path, model):
    from .analysis import RegretEstimate
    groups = {}
    with open(csv_path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        try:
            i_n = header.index("n")
            i_pol = header.index("policy")
            i_reg = header.index("regret")
        except ValueError:
            raise ConfigError("not a regret.csv (missing n/policy/regret columns)")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) < len(header):
                continue
            key = (parts[i_pol], int(parts[i_n]))
            groups.setdefault(key, []).append(float(parts[i_reg]))
    fits = {}
    labels = sorted({k[0] for k in groups})
    for label in labels:
        ests = [RegretEstimate(n=n, policy=None, mean_regret=float(np.mean(v)),
                               stderr=0.0, reps=len(v), mean_offline=0.0,
                               mean_reward=0.0)
                for (pol, n), v in sorted(groups.items()) if pol == label]
        try:
            fr = fit_scaling(ests, model)
            fits[label] = {"model": fr.model, "exponent_or_coeff": fr.exponent_or_coeff,
                           "r2": fr.r2, "grid": fr.grid, "intercept": fr.intercept,
                           "note": fr.note}
        except ValueError as e:
            fits[label] = {"error": str(e)}
    print(json.dumps({"model_requested": model, "fits": fits}, indent=2,
                     sort_keys=True))
    return EXIT_OK


def main(argv=None):
    ap = argparse.ArgumentParser(prog="olp-lab",
                                 description="online allocation experiment lab")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="run the experiments of a config")
    p_run.add_argument("config")
    p_run.add_argument("--threads", type=int, default=None,
                       help="worker count (default: OLP_LAB_THREADS or all cores)")
    p_run.add_argument("--figures", action="store_true",
                       help="also render figures from the CSVs")

    p_val = sub.add_parser("validate", help="generator + solver validation report")
    p_val.add_argument("config")

    p_fit = sub.add_parser("fit", help="scaling-law fit of a regret.csv")
    p_fit.add_argument("csv")
    p_fit.add_argument("--model", choices=("power", "polylog"), required=True)

    p_plot = sub.add_parser("plot", help="render figures from an output directory")
    p_plot.add_argument("outdir")

    args = ap.parse_args(argv)
    try:
        if args.cmd == "run":
            return cmd_run(args.config, threads=args.threads, figures=args.figures)
        if args.cmd == "validate":
            return cmd_validate(args.config)
        if args.cmd == "fit":
            return cmd_fit(args.csv, args.model)
        if args.cmd == "plot":
            from . import plots
            plots.render_all(args.outdir)
            return EXIT_OK
    except ConfigError as e:
        print("config error: %s" % e, file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as e:
        step = " at step %s" % e.step if e.step is not None else ""
        print("solver failure%s after %d pivots: %s" % (step, e.pivots, e),
              file=sys.stderr)
        return EXIT_SOLVER
    except OSError as e:
        print("I/O error: %s" % e, file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
