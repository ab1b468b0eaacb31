"""Euler-Maruyama engine with explicit strong-error constants, step-size
planning for a target tolerance, and composition with sampled clocks.

The error machinery tracks the squared sup-norm criterion
E[sup_s |X_s - X_s^h|^2] <= C1 * exp(C2*t) * h^min(2*gamma,1) with fully
numeric constants assembled from the model's Lipschitz data, so a tolerance
can be turned into a step size before any path is simulated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from . import processes
from .levy import INF, eval_phi, exp_moment_levy, potential_mass

# Best constant in the L^2 Burkholder-Davis-Gundy inequality.
C1_BDG = 1.30693


@dataclass(frozen=True)
class SdeModel:
    """Ito diffusion dX = a(t,X)dt + b(t,X)dW with declared regularity.

    K is the joint Lipschitz/linear-growth constant of Assumption-style
    bounds |a(t,x)-a(t,y)| + |b(t,x)-b(t,y)| <= K|x-y| (componentwise) and
    gamma_hoelder the time-Hoelder exponent of the coefficients.  These are
    analytic inputs, not inferred.  ``time_independent`` selects the sharper
    error constants valid when a, b do not depend on t.
    """

    drift: Callable
    diffusion: Callable
    K: float
    d: int = 1
    m: int = 1
    gamma_hoelder: float = 1.0
    x0: np.ndarray = None
    x0_sq_moment: Optional[float] = None
    time_independent: bool = False

    def __post_init__(self):
        if self.K <= 0.0 or self.gamma_hoelder <= 0.0:
            raise ValueError("K and gamma_hoelder must be positive")
        x0 = np.zeros(self.d) if self.x0 is None else np.atleast_1d(
            np.asarray(self.x0, dtype=float))
        if x0.shape != (self.d,):
            raise ValueError("x0 must have shape (d,)")
        object.__setattr__(self, "x0", x0)
        if self.x0_sq_moment is None:
            object.__setattr__(self, "x0_sq_moment", float(x0 @ x0))


@dataclass(frozen=True)
class ErrorConstants:
    c1: float
    c01: float
    C1_BDG: float
    A: float
    C2: float
    C1: float


def compute_constants(model):
    """Numeric strong-error constants of the squared sup-norm bound.

    The general assembly allows time-dependent coefficients; the
    time-independent variant drops the time-Hoelder contribution and is
    substantially smaller.
    """
    d, m, K = model.d, model.m, model.K
    c1 = 4.0 * d * K * (1.0 + 0.5 * m * K)
    c01 = 0.5 + model.x0_sq_moment
    B = (1.0 + 4.0 * C1_BDG ** 2) * m
    if model.time_independent:
        C2 = 2.0 * d * (2.0 * K ** 2 * (B + 1.0) + 1.0)
        A = (8.0 * (1.0 + m ** 2) * ((1.0 + c01) / c1) * (B + 1.0)
             * d ** 2 * K ** 4)
    else:
        C2 = 2.0 * d * (3.0 * K ** 2 * (B + 1.0) + 1.0)
        A = (12.0 * d * K ** 2 * (1.0 + B)
             * (1.0 + 4.0 * (1.0 + m ** 2) * d * K ** 2)
             * (1.0 + c01 / (2.0 * c1)))
    if C2 <= 2.0 * c1:
        raise ValueError("constant assembly failed: C2 <= 2*c1")
    C1 = A * (1.0 + C2 / (C2 - 2.0 * c1))
    return ErrorConstants(c1=c1, c01=c01, C1_BDG=C1_BDG, A=A, C2=C2, C1=C1)


def euler_maruyama(model, grid, rng=None, dW=None, return_increments=False):
    """Explicit Euler scheme on an increasing grid starting at 0.

    ``dW`` (shape (len(grid)-1, m)) reuses externally drawn Brownian
    increments so a coupled exact solution can ride the same noise.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or grid[0] != 0.0:
        raise ValueError("grid must be 1-d and start at 0")
    deltas = np.diff(grid)
    if np.any(deltas <= 0.0):
        raise ValueError("grid must be strictly increasing")
    n = grid.size
    if dW is None:
        if rng is None:
            raise ValueError("need an rng when increments are not supplied")
        dW = rng.standard_normal((n - 1, model.m)) * np.sqrt(deltas)[:, None]
    out = np.empty((n, model.d))
    x = model.x0.copy()
    out[0] = x
    for i in range(n - 1):
        a = np.asarray(model.drift(grid[i], x), dtype=float)
        b = np.atleast_2d(np.asarray(model.diffusion(grid[i], x), dtype=float))
        x = x + a * deltas[i] + b @ dW[i]
        if not np.all(np.isfinite(x)):
            raise FloatingPointError(
                "scheme diverged at step %d (t=%g)" % (i + 1, grid[i + 1]))
        out[i + 1] = x
    if return_increments:
        return out, dW
    return out


# ---------------------------------------------------------------------------
# Exponential-moment bounds of the clock and step planning
# ---------------------------------------------------------------------------


def _phi_inverse(levy_model, target):
    """Smallest lam with phi(lam) = target (phi increasing)."""
    hi = 1.0
    for _ in range(200):
        if eval_phi(levy_model, hi) > target:
            break
        hi *= 2.0
    else:
        raise ValueError("Laplace exponent never exceeds the target")
    return optimize.brentq(lambda lam: eval_phi(levy_model, lam) - target,
                           0.0, hi, rtol=1e-12)


def exp_moment_inverse(levy_model, c, t, kind="inverse", phi_margin=None):
    """Upper bound on E[exp(c * T_t)] for the chosen clock.

    inverse: min over C3 with phi(C3) > c of 1 + exp(C3*t)/(phi(C3) - c);
    a fixed offset phi(C3) - c = phi_margin can be requested instead of the
    scan.  undershoot: exp(c*t).  overshoot: the potential-measure bound,
    finite only when the large-jump exponential moment M(c) is.
    """
    if c <= 0.0 or t < 0.0:
        raise ValueError("c must be positive and t nonnegative")
    if kind == "undershoot":
        return math.exp(c * t)
    if kind == "overshoot":
        M = exp_moment_levy(levy_model, c)
        if not math.isfinite(M):
            raise ValueError("large-jump exponential moment M(c) is infinite: "
                             "overshoot bound unavailable")
        u_mass = potential_mass(levy_model, t) if t > 0.0 else 0.0
        return math.exp(c * t) * (math.exp(c * max(1.0, t)) + M * u_mass)
    if kind != "inverse":
        raise ValueError("kind must be inverse, undershoot or overshoot")

    if phi_margin is not None:
        C3 = _phi_inverse(levy_model, c + phi_margin)
        return 1.0 + math.exp(C3 * t) / (eval_phi(levy_model, C3) - c)

    # Scan by doubling for an admissible C3, then golden-section refine.
    lo = _phi_inverse(levy_model, c) * (1.0 + 1e-9)
    hi = lo

    def f(C3):
        try:
            return 1.0 + math.exp(C3 * t) / (eval_phi(levy_model, C3) - c)
        except OverflowError:
            return INF

    best = f(hi)
    for _ in range(200):
        nxt = hi * 2.0
        v = f(nxt)
        if v >= best:
            break
        hi, best = nxt, v
    res = optimize.minimize_scalar(f, bounds=(lo, hi * 2.0), method="bounded")
    return min(best, float(res.fun))


def choose_step(constants, exp_moment, gamma_hoelder, epsilon):
    """Largest h in (0,1) with C1 * exp_moment * h^min(2*gamma,1) <= eps."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    power = max(1.0, 1.0 / (2.0 * gamma_hoelder))
    h = (epsilon / (constants.C1 * exp_moment)) ** power
    return min(h, 1.0 - np.finfo(float).eps)


def strong_error_bound(constants, levy_model, kind, t, h, gamma_hoelder,
                       phi_margin=None):
    """Numeric bound on E[max over grid of |Y - Y^h|^2] for the clock."""
    if not 0.0 < h < 1.0:
        raise ValueError("h must lie in (0, 1)")
    em = exp_moment_inverse(levy_model, constants.C2, t, kind=kind,
                            phi_margin=phi_margin) if t > 0.0 else 1.0
    return constants.C1 * em * h ** min(2.0 * gamma_hoelder, 1.0)


# ---------------------------------------------------------------------------
# Time-changed scheme
# ---------------------------------------------------------------------------

_MAX_MESH_NODES = 10 ** 8


def merged_grid(inner_times, h):
    """Uniform mesh of step h joined with the inner-clock times."""
    T = np.asarray(inner_times, dtype=float)
    tmax = float(T.max()) if T.size else 0.0
    n_uniform = int(math.floor(tmax / h)) + 1
    if n_uniform + T.size > _MAX_MESH_NODES:
        raise ValueError("merged grid would exceed %d nodes; increase h"
                         % _MAX_MESH_NODES)
    mesh = np.union1d(np.arange(n_uniform + 1) * h, T)
    return mesh[mesh <= max(tmax, 0.0) + h * 1e-9]


def sample_time_changed_sde(model, levy_model, kind, grid, h, rng,
                            counters=None):
    """Euler approximation of X composed with an exactly sampled clock.

    Returns (inner_times, values): the clock T at the outer grid times and
    Y^h_{t_i} = X^h_{T_{t_i}} read off the merged-mesh scheme.
    """
    clock_rng, noise_rng = rng.spawn(2)
    T = processes.inner_clock(levy_model, kind, grid, clock_rng, counters)
    mesh = merged_grid(T, h)
    path = euler_maruyama(model, mesh, noise_rng)
    idx = np.searchsorted(mesh, T)
    idx = np.minimum(idx, mesh.size - 1)
    return T, path[idx]


# ---------------------------------------------------------------------------
# Coupled exact Ornstein-Uhlenbeck solution (error-measurement oracle)
# ---------------------------------------------------------------------------


def ou_exact_coupled(rate, mean, vol, x0, grid, rng):
    """Exact OU path on ``grid`` with the Brownian increments it consumed.

    dX = rate*(mean - X)dt + vol*dW.  Per step the pair (dW, I) with
    I = int exp(rate*(s - t_n)) dW_s is jointly Gaussian:
    Var I = (exp(2*rate*dt) - 1)/(2*rate), Cov = (exp(rate*dt) - 1)/rate,
    and X_{n+1} = exp(-rate*dt)*(X_n + vol*I) + mean*(1 - exp(-rate*dt)).
    The returned increments let an Euler scheme ride the same noise.
    """
    grid = np.asarray(grid, dtype=float)
    deltas = np.diff(grid)
    if np.any(deltas <= 0.0) or grid[0] != 0.0:
        raise ValueError("grid must start at 0 and increase")
    n = grid.size
    xs = np.empty(n)
    xs[0] = x0
    dW = np.empty((n - 1, 1))
    x = float(x0)
    for i, dt in enumerate(deltas):
        var_w = dt
        var_i = math.expm1(2.0 * rate * dt) / (2.0 * rate)
        cov = math.expm1(rate * dt) / rate
        z1, z2 = rng.standard_normal(2)
        w = math.sqrt(var_w) * z1
        resid = var_i - cov ** 2 / var_w
        I = (cov / var_w) * w + math.sqrt(max(resid, 0.0)) * z2
        e = math.exp(-rate * dt)
        x = e * (x + vol * I) + mean * (1.0 - e)
        xs[i + 1] = x
        dW[i, 0] = w
    return xs, dW


def ou_strong_order_errors(rate, mean, vol, x0, h, n_rep, rng, fine_per=16):
    """Per-replica sup over [0,1] of |X_s - X^h_s|^2, common noise.

    The exact solution advances on a refinement with ``fine_per`` nodes per
    scheme step; the scheme holds its last computed value between its own
    nodes, so the sup is taken over the whole interval rather than the
    scheme grid only.  Returns an array of shape (n_rep,).
    """
    n = int(round(1.0 / h))
    if not 0.0 < h < 1.0 or abs(n * h - 1.0) > 1e-9:
        raise ValueError("h must divide 1")
    dt = h / fine_per
    e = math.exp(-rate * dt)
    var_i = math.expm1(2.0 * rate * dt) / (2.0 * rate)
    cov = math.expm1(rate * dt) / rate
    resid = max(var_i - cov ** 2 / dt, 0.0)
    a_w, b_r = cov / dt, math.sqrt(resid)
    sq = math.sqrt(dt)
    X = np.full(n_rep, float(x0))
    Y = np.full(n_rep, float(x0))
    acc = np.zeros(n_rep)
    mx = np.zeros(n_rep)
    for k in range(n * fine_per):
        z1 = rng.standard_normal(n_rep)
        z2 = rng.standard_normal(n_rep)
        w = sq * z1
        I = a_w * w + b_r * z2
        X = e * (X + vol * I) + mean * (1.0 - e)
        acc += w
        d = X - Y
        np.maximum(mx, d * d, out=mx)
        if (k + 1) % fine_per == 0:
            Y = Y + rate * (mean - Y) * h + vol * acc
            acc[:] = 0.0
            d = X - Y
            np.maximum(mx, d * d, out=mx)
    return mx


def ou_time_changed_error(rate, mean, vol, x0, levy_model, kind, grid, h,
                          rng, K=None):
    """One coupled replica of the time-changed error max |X_T - X^h_T|^2.

    Returns (t_star, max_sq_error): the outer time where the squared error
    at the clock readout points is largest, and that error.  Both the exact
    solution and the scheme ride one Brownian path on the merged mesh.
    """
    clock_rng, noise_rng = rng.spawn(2)
    T = processes.inner_clock(levy_model, kind, grid, clock_rng)
    mesh = merged_grid(T, h)
    exact, dW = ou_exact_coupled(rate, mean, vol, x0, mesh, noise_rng)
    model = ou_sde_model(rate, mean, vol, x0, K=K)
    approx = euler_maruyama(model, mesh, dW=dW)[:, 0]
    idx = np.minimum(np.searchsorted(mesh, T), mesh.size - 1)
    err = (exact[idx] - approx[idx]) ** 2
    k = int(np.argmax(err))
    return float(np.asarray(grid, dtype=float)[k]), float(err[k])


def ou_sde_model(rate, mean, vol, x0, K=None, time_independent=True):
    """SdeModel wrapper of the OU diffusion with its natural constants."""
    if K is None:
        K = max(rate, vol, abs(rate * mean))
    return SdeModel(
        drift=lambda t, x: rate * (mean - x),
        diffusion=lambda t, x: np.array([[vol]]),
        K=K, d=1, m=1, gamma_hoelder=1.0,
        x0=np.array([x0]), time_independent=time_independent,
    )
