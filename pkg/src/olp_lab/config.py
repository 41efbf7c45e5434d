"""Experiment configuration schema (strict JSON).

Top-level keys (all others are hard errors — silent typos corrupt
experiments):

    generator: {"family": str, "m": int, "params": {...}}
    policies:  [{"kind": str, ...per-kind params}, ...]
    n_grid:    strictly increasing list of horizons
    reps:      replication count
    d0:        length-m list of positive reals
    seed:      integer root seed
    outputs:   output directory path
    analysis:  {"regret": bool, "dual_convergence": bool,
                "state_deviation": bool, "fit": bool, "figures": bool,
                "dual_reps": int, "saa_k": int, "delta_k": int,
                "eps_d": positive float or "auto", "fit_model": str}

A run manifest (the file cmd_run writes next to its CSVs) embeds the config
under a "config" key; feeding the manifest back to `olp-lab run` replays
the run.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .algos import PolicySpec
from .gens import make_generator


class ConfigError(ValueError):
    def __init__(self, message, path=""):
        super().__init__("%s: %s" % (path, message) if path else message)
        self.path = path


@dataclass
class AnalysisToggles:
    regret: bool = True
    dual_convergence: bool = False
    state_deviation: bool = False
    fit: bool = False
    figures: bool = False
    dual_reps: int = 200
    saa_k: int = 200
    delta_k: int = 500
    eps_d: object = "auto"
    fit_model: str = "polylog"


@dataclass
class ExperimentConfig:
    generator: object
    policies: list
    n_grid: list
    reps: int
    d0: np.ndarray
    seed: int
    outputs: str
    analysis: AnalysisToggles
    raw: dict = field(repr=False, default_factory=dict)


def _require(cond, msg, path):
    if not cond:
        raise ConfigError(msg, path)


def _no_unknown(d, allowed, path):
    extra = sorted(set(d) - set(allowed))
    _require(not extra, "unknown key(s) %s" % ", ".join(extra), path)


def parse_config(obj):
    """Dict -> ExperimentConfig, validating everything."""
    _require(isinstance(obj, dict), "config must be a JSON object", "")
    if "config" in obj:  # manifest replay
        obj = obj["config"]
        _require(isinstance(obj, dict), "manifest 'config' must be an object", "config")
    top = ("generator", "policies", "n_grid", "reps", "d0", "seed",
           "outputs", "analysis")
    _no_unknown(obj, top, "")
    for key in ("generator", "policies", "n_grid", "reps", "d0", "seed", "outputs"):
        _require(key in obj, "missing required key '%s'" % key, "")

    g = obj["generator"]
    _require(isinstance(g, dict), "must be an object", "generator")
    _no_unknown(g, ("family", "m", "params"), "generator")
    _require("family" in g, "missing 'family'", "generator")
    try:
        spec = make_generator(g["family"], int(g.get("m", 1)), g.get("params", {}))
    except (ValueError, KeyError, TypeError) as e:
        raise ConfigError(str(e), "generator")

    pols = obj["policies"]
    _require(isinstance(pols, list) and pols, "must be a non-empty list", "policies")
    policies = []
    for i, p in enumerate(pols):
        path = "policies[%d]" % i
        _require(isinstance(p, dict) and "kind" in p, "needs a 'kind'", path)
        kind = p["kind"]
        extras = {k: v for k, v in p.items() if k != "kind"}
        allowed = ("p",) if kind == "fixed_price" else ()
        _no_unknown(extras, allowed, path)
        try:
            policies.append(PolicySpec(kind, extras))
        except ValueError as e:
            raise ConfigError(str(e), path)

    grid = obj["n_grid"]
    _require(isinstance(grid, list) and grid, "must be a non-empty list", "n_grid")
    _require(all(isinstance(v, int) and not isinstance(v, bool) and v >= 1
                 for v in grid),
             "entries must be integers >= 1", "n_grid")
    _require(all(b > a for a, b in zip(grid, grid[1:])), "n_grid not increasing", "n_grid")

    reps = obj["reps"]
    _require(isinstance(reps, int) and not isinstance(reps, bool) and reps >= 1,
             "must be an integer >= 1", "reps")

    d0 = obj["d0"]
    _require(isinstance(d0, list) and len(d0) == spec.m,
             "must be a list of length generator.m", "d0")
    _require(all(isinstance(v, (int, float)) and v > 0 for v in d0),
             "entries must be positive", "d0")

    seed = obj["seed"]
    _require(isinstance(seed, int) and seed >= 0, "must be a nonnegative integer", "seed")
    _require(isinstance(obj["outputs"], str) and obj["outputs"], "must be a path", "outputs")

    an = obj.get("analysis", {})
    _require(isinstance(an, dict), "must be an object", "analysis")
    toggles = AnalysisToggles()
    _no_unknown(an, vars(toggles).keys(), "analysis")
    for k, v in an.items():
        setattr(toggles, k, v)
    for k in ("regret", "dual_convergence", "state_deviation", "fit", "figures"):
        _require(isinstance(getattr(toggles, k), bool), "must be a boolean", "analysis.%s" % k)
    for k in ("dual_reps", "saa_k", "delta_k"):
        _require(isinstance(getattr(toggles, k), int) and getattr(toggles, k) >= 1,
                 "must be an integer >= 1", "analysis.%s" % k)
    _require(toggles.eps_d == "auto"
             or (isinstance(toggles.eps_d, (int, float)) and toggles.eps_d > 0),
             "must be 'auto' or a positive number", "analysis.eps_d")
    _require(toggles.fit_model in ("power", "power_law_n", "polylog"),
             "must be power|power_law_n|polylog", "analysis.fit_model")
    stderr_needed = toggles.regret or toggles.dual_convergence or toggles.state_deviation
    _require(reps >= 2 or not stderr_needed,
             "reps must be >= 2 when standard errors are requested", "reps")

    return ExperimentConfig(generator=spec, policies=policies, n_grid=list(grid),
                            reps=reps, d0=np.array(d0, dtype=float), seed=seed,
                            outputs=obj["outputs"], analysis=toggles, raw=obj)


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError("invalid JSON (line %d column %d)" % (e.lineno, e.colno))
    return parse_config(obj)
