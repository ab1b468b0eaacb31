"""One-sided stable internals: Kanter representation, density quadrature,
angle sampling and the tilted-gamma machinery behind the conditional
first-passage-time draw.

All routines work with the *standard* one-sided alpha-stable subordinator
(Laplace transform exp(-lam^alpha) at time 1); callers rescale time and space.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, optimize, special

from .levy import RejectionCapError, _REJECTION_CAP


def kanter_a(u, alpha):
    """Kanter's angular function a(u) on (0, pi).

    a(u) = sin(alpha*u)^(alpha/(1-alpha)) * sin((1-alpha)*u) / sin(u)^(1/(1-alpha)),
    increasing, with a(0+) = (1-alpha)*alpha^(alpha/(1-alpha)).
    """
    one_m = 1.0 - alpha
    with np.errstate(divide="ignore", over="ignore"):
        log_a = (
            (alpha / one_m) * np.log(np.sin(alpha * u))
            + np.log(np.sin(one_m * u))
            - (1.0 / one_m) * np.log(np.sin(u))
        )
    return np.exp(log_a)


def kanter_a0(alpha):
    """Limit of Kanter's function at 0."""
    return (1.0 - alpha) * alpha ** (alpha / (1.0 - alpha))


def sample_stable_std(alpha, rng, size=None):
    """Standard one-sided stable draw(s) via the Kanter representation."""
    u = rng.uniform(0.0, math.pi, size=size)
    e = rng.exponential(size=size)
    a = kanter_a(u, alpha)
    return (a / e) ** ((1.0 - alpha) / alpha)


def stable_density_std(x, alpha, n_nodes=512):
    """Density of the standard one-sided stable law by angular quadrature.

    g(x) = (alpha/(1-alpha)) x^(-1/(1-alpha)) (1/pi)
           * integral_0^pi a(u) exp(-a(u) x^(-alpha/(1-alpha))) du
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.zeros_like(x)
    pos = x > 0.0
    if np.any(pos):
        y = x[pos] ** (-alpha / (1.0 - alpha))
        u = (np.arange(n_nodes) + 0.5) * (math.pi / n_nodes)
        a = kanter_a(u, alpha)
        expo = -np.outer(y, a) + np.log(a)[None, :]
        np.clip(expo, -745.0, 50.0, out=expo)
        integral = np.exp(expo).mean(axis=1)
        out[pos] = (alpha / (1.0 - alpha)) * x[pos] ** (-1.0 / (1.0 - alpha)) * integral
    return float(out[0]) if scalar else out


def sample_angle(alpha, rng, counters=None):
    """Draw the angle with density proportional to a(u)^(alpha-1) on (0, pi)."""
    a0 = kanter_a0(alpha)
    one_m = 1.0 - alpha
    for _ in range(_REJECTION_CAP):
        if counters is not None:
            counters["angle_proposals"] += 1
        u = rng.uniform(0.0, math.pi)
        if rng.uniform() < (a0 / kanter_a(u, alpha)) ** one_m:
            return u
    raise RejectionCapError("angle sampler exceeded the rejection cap")


def sample_angle_batch(alpha, size, rng):
    """Vectorized version of :func:`sample_angle`."""
    a0 = kanter_a0(alpha)
    one_m = 1.0 - alpha
    out = np.empty(size)
    todo = np.arange(size)
    for _ in range(10000):
        u = rng.uniform(0.0, math.pi, size=todo.size)
        acc = rng.uniform(size=todo.size) < (a0 / kanter_a(u, alpha)) ** one_m
        out[todo[acc]] = u[acc]
        todo = todo[~acc]
        if todo.size == 0:
            return out
    raise RejectionCapError("batch angle sampler failed to converge")


# ---------------------------------------------------------------------------
# Conditional first-passage time given the undershoot (tilted-gamma scheme)
# ---------------------------------------------------------------------------
#
# Given the undershoot position u at barrier t, the first-passage time of the
# standard stable subordinator satisfies L = u^alpha * Y^(1-alpha) where,
# jointly with the Kanter angle, (angle, Y) has density proportional to
# a(angle) * Y^(1-alpha) * exp(-a(angle) Y).  Tempering at rate q adds the
# factor exp(c * Y^(1-alpha)) with c = (q*u)^alpha.


def sample_L_given_H(alpha, u_pos, rng, q=0.0, counters=None):
    """First-passage time of the standard stable core given undershoot u_pos.

    For q > 0 the draw follows the exponentially tilted law of the tempered
    core (tilt exp(c * y^(1-alpha)), c = (q*u_pos)^alpha).
    """
    if q == 0.0:
        phi = sample_angle(alpha, rng, counters)
        y = rng.gamma(2.0 - alpha, 1.0 / kanter_a(phi, alpha))
        return u_pos ** alpha * y ** (1.0 - alpha)
    c = (q * u_pos) ** alpha
    phi, y = _sample_tilted_pair(alpha, c, rng, counters)
    return u_pos ** alpha * y ** (1.0 - alpha)


def _tilt_mode(k, a, c, one_m):
    """Mode y* of y^(k-1) exp(-a y + c y^(1-alpha)): root of
    (k-1)/y + c*(1-alpha)*y^(-alpha) = a (decreasing left side)."""
    f = lambda y: (k - 1.0) / y + c * one_m * y ** (one_m - 1.0) - a
    lo, hi = 1e-12, max(4.0 * k / a, 1.0)
    while f(hi) > 0.0:
        hi *= 2.0
        if hi > 1e18:
            break
    return optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-12)


def _tilt_log_bound(alpha, a, c):
    """log of sup over y of the acceptance numerator for the tangent scheme,
    together with the tangent slope lam_t < a."""
    k = 2.0 - alpha
    one_m = 1.0 - alpha
    ystar = _tilt_mode(k, a, c, one_m)
    lam_t = c * one_m * ystar ** (-alpha)
    log_b = k * (math.log(a) - math.log(a - lam_t)) + c * ystar ** one_m - lam_t * ystar
    return lam_t, log_b


def _sample_tilted_pair(alpha, c, rng, counters=None):
    """Joint (angle, y) draw with density prop. to
    a(phi)^(alpha-1) * Gamma(y; 2-alpha, rate a(phi)) * exp(c y^(1-alpha)).

    Single-stage rejection: propose the untilted angle and a tangent-tilted
    gamma given the angle; correct with the global bound taken at the minimal
    angle value (where the tilt bites hardest).
    """
    k = 2.0 - alpha
    one_m = 1.0 - alpha
    a0 = kanter_a0(alpha)
    _, log_b0 = _tilt_log_bound(alpha, a0, c)
    log_b0 += 1e-9
    for _ in range(_REJECTION_CAP):
        if counters is not None:
            counters["tilt_proposals"] += 1
        phi = sample_angle(alpha, rng, counters)
        a = kanter_a(phi, alpha)
        lam_t, _ = _tilt_log_bound(alpha, a, c)
        y = rng.gamma(k, 1.0 / (a - lam_t))
        log_num = (
            k * (math.log(a) - math.log(a - lam_t))
            + c * y ** one_m
            - lam_t * y
        )
        if log_num > log_b0:
            # The grid-free bound was computed at a0; adapt defensively.
            log_b0 = log_num + 1e-9
            continue
        if math.log(rng.uniform()) < log_num - log_b0:
            return phi, y
    raise RejectionCapError("tilted-pair sampler exceeded the rejection cap")
