"""Monte Carlo estimation of functionals of time-changed processes.

Covers the unbiased estimator built on exact trajectory draws, the biased
estimator built on the Euler scheme (with its explicit L^2 error budget),
sample-size and step-size scheduling, a Berry-Esseen bound and an
Anderson-Darling normality diagnostic for the standardized batch means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import stats

from . import paths, processes, sde
from .levy import INF

# Leading constant of the Berry-Esseen smoothing bound, (1/6)(1+2*sqrt(2/pi)).
BERRY_ESSEEN_CONST = (1.0 / 6.0) * (1.0 + 2.0 * math.sqrt(2.0 / math.pi))


@dataclass(frozen=True)
class FunctionalSpec:
    """Path functional u of the process at the observation times.

    ``u`` maps an (n, d) array (one row per observation time) to a float; a
    vectorized implementation accepting (N, n, d) and returning (N,) is used
    when available.  growth_p declares the polynomial growth exponent used
    by the moment gates; lipschitz_Cu is required by the biased-estimator
    error budget.
    """

    u: Callable
    growth_p: float = 1.0
    lipschitz_Cu: Optional[float] = None

    def __post_init__(self):
        if self.growth_p < 0.0:
            raise ValueError("growth_p must be nonnegative")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    sample_variance: float
    N: int
    conf_level: float
    ci_halfwidth: float
    berry_esseen: Optional[float] = None
    l2_budget: Optional[float] = None
    authorization: Optional[dict] = None


def _z(conf_level):
    return float(stats.norm.ppf(0.5 + conf_level / 2.0))


def _pure_stable(model):
    return (model.q == 0.0 and model.r == INF and model.drift == 0.0
            and model.zeta.total_mass == 0.0)


def _apply_u(functional, values):
    """Evaluate u on a stack of paths, vectorized when u supports it."""
    N = values.shape[0]
    try:
        out = np.asarray(functional.u(values), dtype=float)
        if out.shape == (N,):
            return out
    except Exception:
        pass
    return np.array([float(functional.u(values[k])) for k in range(N)])


def _batch_clock(model, kind, grid, N, rng):
    G, X, R = paths.sample_triplet_path_batch(
        N, grid, model.alpha, model.theta, rng)
    if kind == "inverse":
        return X
    if kind == "undershoot":
        return np.maximum(grid[None, :] - G, 0.0)
    return grid[None, :] + R


def _batch_brownian(spec, T, rng):
    """Brownian values at the per-replica clock times T (shape (N, n))."""
    N, n = T.shape
    d = spec.d
    dT = np.diff(T, axis=1, prepend=0.0)
    dT = np.maximum(dT, 0.0)
    z = rng.standard_normal((N, n, d))
    if d > 1:
        root = np.linalg.cholesky(spec.diffusion + 1e-15 * np.eye(d))
        noise = np.sqrt(dT)[..., None] * (z @ root.T)
    else:
        noise = np.sqrt(dT)[..., None] * (math.sqrt(spec.diffusion[0, 0]) * z)
    inc = spec.drift[None, None, :] * dT[..., None] + noise
    return spec.x0[None, None, :] + np.cumsum(inc, axis=1)


def _replica_values(functional, spec, model, kind, grid, N, rng):
    grid = np.asarray(grid, dtype=float)
    if spec.variant == "brownian" and _pure_stable(model):
        T = _batch_clock(model, kind, grid, N, rng)
        values = _batch_brownian(spec, T, rng)
        return _apply_u(functional, values)
    out = np.empty(N)
    for k in range(N):
        s = processes.sample_time_changed(spec, model, kind, grid, rng)
        out[k] = functional.u(s.values)
    return out


def _summarize(vals, conf_level, **extra):
    N = vals.size
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise ValueError("non-finite functional value at replica %d"
                         % int(bad[0]))
    # np.add.reduce is pairwise for float arrays, so the accumulation is
    # deterministic and order-independent across chunkings.
    mean = float(np.add.reduce(vals) / N)
    var = float(np.add.reduce((vals - mean) ** 2) / (N - 1))
    ci = _z(conf_level) * math.sqrt(var / N)
    return McEstimate(mean=mean, sample_variance=var, N=N,
                      conf_level=conf_level, ci_halfwidth=ci, **extra)


def estimate_exact(functional, spec, model, kind, grid, N, rng,
                   conf_level=0.95):
    """Unbiased Monte Carlo estimate from N exact time-changed replicas."""
    if N < 2:
        raise ValueError("need at least 2 replicas")
    grid = np.asarray(grid, dtype=float)
    vals = _replica_values(functional, spec, model, kind, grid, N, rng)
    try:
        auth = processes.check_moment_conditions(
            spec, model, kind, functional.growth_p, float(grid[-1]))
    except ValueError:
        auth = None
    return _summarize(vals, conf_level, authorization=auth)


def choose_N(target_eps, variance_bound, conf_level=0.95):
    """Smallest N with sqrt(variance_bound / N) * z below target_eps."""
    if target_eps <= 0.0 or variance_bound <= 0.0:
        raise ValueError("target_eps and variance_bound must be positive")
    threshold = variance_bound * _z(conf_level) ** 2 / target_eps ** 2
    return max(2, int(math.floor(threshold)) + 1)


def berry_esseen_bound(rho, sigma2, N, psi_third_norm=1.0):
    """Smoothing bound 0.43263 * ||psi'''|| * rho / (sqrt(N) sigma^3)."""
    if sigma2 <= 0.0:
        raise ValueError("undefined for zero variance")
    return (BERRY_ESSEEN_CONST * psi_third_norm * rho
            / (math.sqrt(N) * sigma2 ** 1.5))


def sup_u_on_box(u, n, d, x0, points=11):
    """Numeric sup of |u| over the box max_i |x_i| <= x0 (grid search).

    Only meant as a fallback when the caller cannot bound sup |u|
    analytically; the grid is coarse and the value is a heuristic.
    """
    if n * d > 4:
        raise ValueError("grid search is limited to n*d <= 4 coordinates")
    axes = [np.linspace(-x0, x0, points)] * (n * d)
    best = 0.0
    for combo in np.stack(np.meshgrid(*axes), axis=-1).reshape(-1, n * d):
        best = max(best, abs(float(u(combo.reshape(n, d)))))
    return best


def variance_budget(sup_u_sq, growth_C, n_times, constants, exp_moment):
    """The L^2 budget's variance constant v.

    v = sup |u|^2 + 4*C*n*max(C1, c01)*E[exp(C2*T)], with sup over the box
    declared by the caller and C the growth constant of the functional.
    """
    return (sup_u_sq + 4.0 * growth_C * n_times
            * max(constants.C1, constants.c01) * exp_moment)


def estimate_em(functional, sde_model, levy_model, kind, grid, N, h, rng,
                conf_level=0.95, v=None, phi_margin=None):
    """Biased estimator from Euler-scheme replicas, with its error budget.

    The attached l2_budget is v/N + Cu*sqrt(C1*E[exp(C2*T)]*h^min(2g,1));
    it is omitted (None) when v is not supplied or the clock's exponential
    moment is unavailable (overshoot with divergent large-jump moment).
    """
    if N < 2:
        raise ValueError("need at least 2 replicas")
    if functional.lipschitz_Cu is None:
        raise ValueError("biased estimation needs lipschitz_Cu")
    grid = np.asarray(grid, dtype=float)
    vals = np.empty(N)
    for k in range(N):
        _, values = sde.sample_time_changed_sde(
            sde_model, levy_model, kind, grid, h, rng)
        vals[k] = functional.u(values)
    budget = None
    if v is not None:
        try:
            constants = sde.compute_constants(sde_model)
            em = sde.exp_moment_inverse(levy_model, constants.C2,
                                        float(grid[-1]), kind=kind,
                                        phi_margin=phi_margin)
            strong = constants.C1 * em * h ** min(
                2.0 * sde_model.gamma_hoelder, 1.0)
            budget = v / N + functional.lipschitz_Cu * math.sqrt(strong)
        except ValueError:
            budget = None
    return _summarize(vals, conf_level, l2_budget=budget)


def schedule_h_N(constants, exp_moment, Cu, v, target_eps=None, N=None,
                 delta=None, gamma_hoelder=1.0):
    """Couple the replica count and the Euler step.

    With the default coupling, N = ceil((v + Cu*sqrt(C1*exp_moment))/eps)
    and h solves h^min(2g,1) = N^-2.  An explicit exponent h = N^delta is
    accepted only when delta < -1 (the CLT for the biased estimator fails
    otherwise).
    """
    if (target_eps is None) == (N is None):
        raise ValueError("supply exactly one of target_eps, N")
    if delta is not None and delta >= -1.0:
        raise ValueError("delta must be < -1 for a CLT-valid schedule")
    if N is None:
        N = max(2, int(math.ceil(
            (v + Cu * math.sqrt(constants.C1 * exp_moment)) / target_eps)))
    power = min(2.0 * gamma_hoelder, 1.0)
    h = float(N) ** delta if delta is not None else float(N) ** (-2.0 / power)
    return N, min(h, 1.0 - np.finfo(float).eps)


def clt_diagnostic(batch_means, significance=0.01):
    """Anderson-Darling normality check of the standardized batch means."""
    x = np.asarray(batch_means, dtype=float)
    if x.size < 200:
        raise ValueError("need at least 200 batch estimates")
    s = x.std(ddof=1)
    if s == 0.0:
        raise ValueError("undefined for zero variance")
    z = (x - x.mean()) / s
    res = stats.anderson(z, dist="norm")
    levels = list(res.significance_level)
    cv = float(res.critical_values[levels.index(significance * 100.0)])
    return {
        "statistic": float(res.statistic),
        "critical_value": cv,
        "significance": significance,
        "passed": bool(res.statistic < cv),
        "n_batches": int(x.size),
    }
