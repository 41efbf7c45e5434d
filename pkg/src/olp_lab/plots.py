"""Figure rendering on top of the delimited outputs.

Plots are derived strictly from the CSVs in an output directory, after the
fact; rendering never touches the experiment pipeline or its bytes.
"""

import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _read(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _regret_figure(rows, path):
    agg = defaultdict(list)
    for r in rows:
        agg[(r["policy"], int(r["n"]))].append(float(r["regret"]))
    policies = sorted({k[0] for k in agg})
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for pol in policies:
        ns = sorted(n for p, n in agg if p == pol)
        means = np.array([np.mean(agg[(pol, n)]) for n in ns])
        errs = np.array([np.std(agg[(pol, n)], ddof=1) / np.sqrt(len(agg[(pol, n)]))
                         if len(agg[(pol, n)]) > 1 else 0.0 for n in ns])
        ax.errorbar(ns, np.maximum(means, 1e-12), yerr=errs, marker="o",
                    capsize=3, label=pol)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("horizon n")
    ax.set_ylabel("mean regret")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _dual_figure(rows, path):
    agg = defaultdict(list)
    for r in rows:
        agg[int(r["n"])].append(float(r["sq_dist"]))
    ns = sorted(agg)
    mse = np.array([np.mean(agg[n]) for n in ns])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(ns, mse, "o-", label="mean squared price error")
    if len(ns) >= 2 and mse[0] > 0:
        ref = mse[0] * (np.log(ns) / ns) / (np.log(ns[0]) / ns[0])
        ax.loglog(ns, ref, "k--", alpha=0.6, label="log(n)/n reference")
    ax.set_xlabel("sample size n")
    ax.set_ylabel("E||p_n - p*||^2")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _deviation_figure(rows, path):
    n_max = max(int(r["n"]) for r in rows)
    per_j = defaultdict(list)
    for r in rows:
        if int(r["n"]) == n_max:
            per_j[int(r["j"])].append(float(r["deviation"]))
    js = sorted(per_j)
    q25, q50, q75 = (np.array([np.quantile(per_j[j], q) for j in js])
                     for q in (0.25, 0.5, 0.75))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(js, q50, label="median deviation")
    ax.fill_between(js, q25, q75, alpha=0.3, label="interquartile band")
    ax.set_xlabel("step j (n=%d)" % n_max)
    ax.set_ylabel("||d_j - delta_j||")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_all(outdir):
    """Render a PNG next to each CSV that exists in `outdir`."""
    made = []
    p = os.path.join(outdir, "regret.csv")
    if os.path.exists(p):
        _regret_figure(_read(p), os.path.join(outdir, "regret_scaling.png"))
        made.append("regret_scaling.png")
    p = os.path.join(outdir, "dual_convergence.csv")
    if os.path.exists(p):
        _dual_figure(_read(p), os.path.join(outdir, "dual_convergence.png"))
        made.append("dual_convergence.png")
    p = os.path.join(outdir, "state_deviation.csv")
    if os.path.exists(p):
        _deviation_figure(_read(p), os.path.join(outdir, "state_deviation.png"))
        made.append("state_deviation.png")
    return made
