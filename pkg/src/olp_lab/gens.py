"""Nonstationary input distribution families.

Every family fixes a consumption distribution v(t, .) on a support that
does not move with t, and a conditional reward density f(t, a, .) on
[0, u_bar].  The smooth families share one mechanism: a linear "tilt" of
the uniform density on [0, u_bar],

    f(t, u) = (1/u_bar) * (1 + s(t) * (2 u / u_bar - 1)),   |s(t)| <= 1,

whose time profile s(t) is what varies per family (constant zero, linear
drift, sinusoid, or a piecewise-linear table).  The tilt has a closed-form
inverse CDF, so sampling is exact.  The two-phase family is the adversarial
construction: uniform rewards on [0,1] for the first half of the horizon
(arrival index j <= ceil(n/2)) and on [2,3] for the second half, a == 1.
It deliberately breaks time-smoothness, and validate_generator is expected
to say exactly that and nothing else.

Boundary convention: sampling decides the phase from the integer index j;
the density view f(t, ...) uses t <= 0.5.  The two agree at every even n
(and differ only at the middle index when n is odd).

Consumption options shared by all families ("a" in params):
    {"kind": "ones"}                     a == (1, ..., 1), a point mass
    {"kind": "box", "lo": l, "hi": h}    i.i.d. Uniform[l, h] per coordinate

d0 is not part of the family; it is an experiment-level quantity.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import Instance, Order
from .lp import solve_dual_breakpoint, solve_dual_simplex
from .streams import OrderStream, generator_for

FAMILIES = ("stationary_uniform", "linear_drift", "sinusoidal",
            "two_phase_example1", "custom_table")

NORMALIZATION_TOL = 1e-6
GRID_CHECK_TOL = 1e-7
BOOTSTRAP_B = 20


@dataclass(frozen=True)
class Bounds:
    alpha: float
    u_bar: float
    mu_lo: float
    mu_hi: float
    L_bar: float


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    m: int
    params: dict
    bounds: Bounds


@dataclass
class PopulationPrice:
    p_star: np.ndarray
    n: int
    d: np.ndarray
    K: int
    stderr_note: float  # max coordinate std over bootstrap resamples


def _a_params(params, m):
    a = params.get("a", {"kind": "ones"})
    kind = a.get("kind")
    if kind == "ones":
        return {"kind": "ones"}, 1.0
    if kind == "box":
        lo, hi = float(a["lo"]), float(a["hi"])
        if not (0 <= lo < hi):
            raise ValueError("box consumption needs 0 <= lo < hi")
        return {"kind": "box", "lo": lo, "hi": hi}, hi
    raise ValueError("unknown consumption kind %r" % kind)


def make_generator(family, m=1, params=None):
    """Build a GeneratorSpec with its declared regularity bounds."""
    params = dict(params or {})
    if family not in FAMILIES:
        raise ValueError("unknown family %r" % family)
    if m < 1:
        raise ValueError("m must be >= 1")

    if family == "two_phase_example1":
        if m != 1:
            raise ValueError("two_phase_example1 is one-resource")
        a_par, alpha = _a_params(params, m)
        if a_par["kind"] != "ones":
            raise ValueError("two_phase_example1 uses a == 1")
        norm = {"a": a_par}
        bounds = Bounds(alpha=alpha, u_bar=3.0, mu_lo=1.0, mu_hi=1.0, L_bar=0.0)
        return GeneratorSpec(family, m, norm, bounds)

    a_par, alpha = _a_params(params, m)
    u_bar = float(params.get("u_bar", 1.0))
    if u_bar <= 0:
        raise ValueError("u_bar must be positive")
    norm = {"a": a_par, "u_bar": u_bar}

    if family == "stationary_uniform":
        s_max, s_rate = 0.0, 0.0
    elif family == "linear_drift":
        s0, s1 = float(params.get("s0", 0.0)), float(params.get("s1", 0.0))
        norm.update(s0=s0, s1=s1)
        s_max, s_rate = max(abs(s0), abs(s1)), abs(s1 - s0)
    elif family == "sinusoidal":
        off, amp = float(params.get("offset", 0.0)), float(params.get("amp", 0.0))
        norm.update(offset=off, amp=amp)
        s_max, s_rate = abs(off) + abs(amp), 2.0 * math.pi * abs(amp)
    else:  # custom_table
        knots = [float(v) for v in params.get("knots", [0.0, 1.0])]
        values = [float(v) for v in params.get("values", [0.0, 0.0])]
        if len(knots) != len(values) or len(knots) < 2:
            raise ValueError("knots and values must match, length >= 2")
        if knots[0] != 0.0 or knots[-1] != 1.0 or np.any(np.diff(knots) <= 0):
            raise ValueError("knots must increase from 0 to 1")
        norm.update(knots=knots, values=values)
        s_max = max(abs(v) for v in values)
        s_rate = max(abs((values[i + 1] - values[i]) / (knots[i + 1] - knots[i]))
                     for i in range(len(knots) - 1))
    if s_max > 1.0:
        raise ValueError("tilt magnitude above 1 makes the density negative")
    bounds = Bounds(alpha=alpha, u_bar=u_bar,
                    mu_lo=(1.0 - s_max) / u_bar, mu_hi=(1.0 + s_max) / u_bar,
                    L_bar=max(2.0 * s_max / u_bar ** 2, s_rate / u_bar))
    return GeneratorSpec(family, m, norm, bounds)


# ---------------------------------------------------------------- sampling

def _s_of_t(spec, t):
    t = np.asarray(t, dtype=float)
    p = spec.params
    if spec.family == "stationary_uniform":
        return np.zeros_like(t)
    if spec.family == "linear_drift":
        return p["s0"] + (p["s1"] - p["s0"]) * t
    if spec.family == "sinusoidal":
        return p["offset"] + p["amp"] * np.sin(2.0 * math.pi * t)
    if spec.family == "custom_table":
        return np.interp(t, p["knots"], p["values"])
    raise ValueError(spec.family)


def _tilt_inverse_cdf(s, F, u_bar):
    """x solving s x^2 + (1-s) x = F on [0,1], scaled to [0, u_bar]."""
    s = np.asarray(s, dtype=float)
    F = np.asarray(F, dtype=float)
    x = np.where(s == 0.0, F, 0.0)
    nz = s != 0.0
    if np.any(nz):
        sn = s[nz]
        disc = (1.0 - sn) ** 2 + 4.0 * sn * F[nz]
        x_nz = (-(1.0 - sn) + np.sqrt(np.maximum(disc, 0.0))) / (2.0 * sn)
        x = x.copy()
        x[nz] = x_nz
    return u_bar * np.clip(x, 0.0, 1.0)


def _u_from_uniform(spec, j_arr, n, F):
    """Map uniforms to rewards for 1-based arrival indices j_arr."""
    j_arr = np.asarray(j_arr)
    F = np.asarray(F, dtype=float)
    if spec.family == "two_phase_example1":
        phase1 = j_arr <= (n + 1) // 2
        return np.where(phase1, F, 2.0 + F)
    s = _s_of_t(spec, j_arr / n)
    return _tilt_inverse_cdf(s, F, spec.bounds.u_bar)


def _a_from_uniform(spec, U):
    """Map an (R, m) uniform block to consumption rows."""
    a = spec.params["a"]
    if a["kind"] == "ones":
        return np.ones_like(U)
    return a["lo"] + (a["hi"] - a["lo"]) * U


def sample_order(spec, j, n, stream):
    """Draw arrival j (1-based) of an n-horizon episode from the stream."""
    if not 1 <= j <= n:
        raise ValueError("need 1 <= j <= n")
    vals = stream.uniforms(j - 1)
    m = spec.m
    a = _a_from_uniform(spec, vals[None, :m])[0]
    u = float(_u_from_uniform(spec, np.array([j]), n, vals[m:m + 1])[0])
    return Order(u, a)


def _sample_path(spec, stream, horizon, j_arr=None):
    """Draw one row per entry of j_arr (default 1..horizon); index k of the
    stream feeds row k, and rewards use t = j_arr/horizon."""
    m = spec.m
    j_arr = np.arange(1, horizon + 1) if j_arr is None else np.asarray(j_arr)
    vals = stream.bulk(len(j_arr))
    A = _a_from_uniform(spec, vals[:, :m])
    u = _u_from_uniform(spec, j_arr, horizon, vals[:, m])
    return u, A


def sample_instance(spec, n, d0, seed, replication=0):
    """Real path and tilde path on disjoint stream branches, same marginals."""
    if n < 1:
        raise ValueError("n must be >= 1")
    d0 = np.atleast_1d(np.asarray(d0, dtype=float))
    width = spec.m + 1
    real = OrderStream(seed, "instance", replication, path=0, width=width)
    tilde = OrderStream(seed, "instance", replication, path=1, width=width)
    u, A = _sample_path(spec, real, n)
    tu, tA = _sample_path(spec, tilde, n)
    info = {"seed": int(seed), "purpose": "instance", "replication": int(replication),
            "real_path": 0, "tilde_path": 1, "family": spec.family}
    return Instance(n=n, m=spec.m, d0=d0, u=u, A=A, tilde_u=tu, tilde_A=tA,
                    seed_info=info)


# ---------------------------------------------------------------- densities

def u_support(spec, t):
    """Closed support of the reward density at time t."""
    if spec.family == "two_phase_example1":
        return (0.0, 1.0) if t <= 0.5 else (2.0, 3.0)
    return (0.0, spec.bounds.u_bar)


def density_v(spec, t, a):
    """Consumption density at a (a pmf value for the point-mass option)."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    par = spec.params["a"]
    if par["kind"] == "ones":
        return 1.0 if np.all(a == 1.0) else 0.0
    lo, hi = par["lo"], par["hi"]
    if np.all((a >= lo) & (a <= hi)):
        return float((1.0 / (hi - lo)) ** spec.m)
    return 0.0


def density_f(spec, t, a, u):
    """Conditional reward density f(t, a, u); zero outside the support."""
    lo, hi = u_support(spec, t)
    if u < lo or u > hi:
        return 0.0
    if spec.family == "two_phase_example1":
        return 1.0
    u_bar = spec.bounds.u_bar
    s = float(_s_of_t(spec, np.array([t]))[0])
    return (1.0 + s * (2.0 * u / u_bar - 1.0)) / u_bar


# ---------------------------------------------------------------- validation

def _probe_consumptions(spec, na):
    par = spec.params["a"]
    if par["kind"] == "ones":
        return [np.ones(spec.m)]
    lo, hi = par["lo"], par["hi"]
    mids = np.linspace(lo, hi, max(2, na))
    return [np.full(spec.m, v) for v in mids]


def validate_generator(spec, grid=None):
    """Grid checks of the declared regularity contract.

    Violation strings are tagged with a class prefix: density-lower-bound,
    density-upper-bound, normalization, support, u-smoothness,
    time-smoothness.  An empty list means all checks passed.
    """
    grid = dict(grid or {})
    nt = int(grid.get("nt", 21))
    nu = int(grid.get("nu", 41))
    na = int(grid.get("na", 3))
    b = spec.bounds
    out = []

    if not b.mu_lo > 0:
        out.append("density-lower-bound: declared mu_lo %.6g is not positive" % b.mu_lo)

    ts = np.linspace(0.0, 1.0, nt)
    probes = _probe_consumptions(spec, na)

    for a in probes:
        if np.any(a < 0) or np.any(a > b.alpha):
            out.append("support: consumption probe outside [0, alpha]^m")
            break

    for t in ts:
        lo, hi = u_support(spec, t)
        if lo < 0 or hi > b.u_bar:
            out.append("support: reward support at t=%.3f outside [0, u_bar]" % t)
            continue
        a = probes[0]
        total, _ = integrate.quad(lambda u: density_f(spec, t, a, u),
                                  0.0, b.u_bar, points=[lo, hi], limit=200)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            out.append("normalization: integral %.8f at t=%.3f" % (total, t))
        us = np.linspace(lo, hi, nu)
        fv = np.array([density_f(spec, t, a, u) for u in us])
        if np.any(fv < b.mu_lo - GRID_CHECK_TOL):
            out.append("density-lower-bound: f below mu_lo at t=%.3f" % t)
        if np.any(fv > b.mu_hi + GRID_CHECK_TOL):
            out.append("density-upper-bound: f above mu_hi at t=%.3f" % t)
        # reward-direction smoothness, probed strictly inside the support
        h = (hi - lo) / (4.0 * nu)
        if h > 0:
            for u in us[1:-1]:
                df = (density_f(spec, t, a, u + h) - density_f(spec, t, a, u - h)) / (2 * h)
                if abs(df) > b.L_bar + GRID_CHECK_TOL:
                    out.append("u-smoothness: |df/du|=%.4g exceeds L_bar at t=%.3f" % (df, t))
                    break

    # time-direction smoothness on the full reward range at matched (a, u);
    # zero outside the support is part of the function being compared
    a = probes[0]
    us_full = np.linspace(0.0, b.u_bar, nu)
    for t1, t2 in zip(ts[:-1], ts[1:]):
        f1 = np.array([density_f(spec, t1, a, u) for u in us_full])
        f2 = np.array([density_f(spec, t2, a, u) for u in us_full])
        rate = np.max(np.abs(f2 - f1)) / (t2 - t1)
        if rate > b.L_bar + GRID_CHECK_TOL:
            out.append("time-smoothness: rate %.4g exceeds L_bar between "
                       "t=%.3f and t=%.3f" % (rate, t1, t2))
            break
    return out


# ------------------------------------------------------------- SAA oracles

def population_price(spec, n, j, d, K, seed):
    """SAA of the expectation-form dual price at state (j, d).

    Draws K pseudo-samples for each remaining index k = j+1..n and solves
    the dual on the pooled K*(n-j) synthetic orders.  The bootstrap spread
    (B=20 pool resamples) goes into stderr_note; with m > 1 each resample
    re-runs the simplex, so keep pools small there.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if not 0 <= j < n:
        raise ValueError("need 0 <= j < n")
    d = np.atleast_1d(np.asarray(d, dtype=float))
    R = n - j
    stream = OrderStream(seed, "population", 0, path=0, width=spec.m + 1)
    j_arr = np.repeat(np.arange(j + 1, n + 1), K)
    u, A = _sample_path(spec, stream, n, j_arr=j_arr)

    def solve(uu, AA):
        if spec.m == 1:
            return solve_dual_breakpoint((uu, AA), float(d[0])).p
        return solve_dual_simplex((uu, AA), d).p

    p = solve(u, A)
    rng = generator_for(seed, "bootstrap", 0, 0)
    boots = np.empty((BOOTSTRAP_B, spec.m))
    for bi in range(BOOTSTRAP_B):
        idx = rng.integers(0, len(u), len(u))
        boots[bi] = solve(u[idx], A[idx])
    note = float(np.max(np.std(boots, axis=0)))
    return PopulationPrice(p_star=p, n=n, d=d, K=K, stderr_note=note)


def delta_path(spec, n, d0, p_star, K, seed):
    """Deterministic remaining-resource reference path, j = 0..n-1.

    delta_j = (n d0 - sum_{k<=j} E[a_k 1{u_k > a_k.p*}]) / (n - j), with the
    per-index expectations estimated by K-sample Monte Carlo.  Row 0 is d0
    exactly.
    """
    d0 = np.atleast_1d(np.asarray(d0, dtype=float))
    p = p_star.p_star if hasattr(p_star, "p_star") else np.atleast_1d(p_star)
    stream = OrderStream(seed, "delta", 0, path=0, width=spec.m + 1)
    j_arr = np.repeat(np.arange(1, n + 1), K)
    u, A = _sample_path(spec, stream, n, j_arr=j_arr)
    live = (u > A @ p).astype(float)
    E = (A * live[:, None]).reshape(n, K, spec.m).mean(axis=1)  # (n, m)
    S = np.vstack([np.zeros(spec.m), np.cumsum(E, axis=0)[:-1]])  # S_j, j=0..n-1
    denom = (n - np.arange(n)).astype(float)
    path = (n * d0[None, :] - S) / denom[:, None]
    path[0] = d0
    return path


def nondegeneracy_estimate(spec, n, d0, K=200, seed=0):
    """Numeric spot estimates around the population price at j = 0.

    Reported without pass/fail semantics: the price itself, the range of
    a.p* over sampled consumptions, and the smallest/largest per-index
    expected accepted consumption entries along the horizon.
    """
    pp = population_price(spec, n, 0, d0, K, seed)
    p = pp.p_star
    stream = OrderStream(seed, "probe", 0, path=0, width=spec.m + 1)
    j_arr = np.repeat(np.arange(1, n + 1), K)
    u, A = _sample_path(spec, stream, n, j_arr=j_arr)
    ap = A @ p
    live = (u > ap).astype(float)
    E = (A * live[:, None]).reshape(n, K, spec.m).mean(axis=1)
    return {
        "p_star": [float(v) for v in p],
        "bootstrap_spread": pp.stderr_note,
        "a_dot_p_min": float(np.min(ap)),
        "a_dot_p_max": float(np.max(ap)),
        "expected_accepted_consumption_min": float(np.min(E)),
        "expected_accepted_consumption_max": float(np.max(E)),
    }
