"""Brute-force discretized path-inversion oracle.

Simulates the subordinator by small-step increments (base step 1e-4 in the
operational time of the subordinator), inverts the path at a barrier and reads
off (L, gamma, Gamma) from the straddling increment.  Slow but assumption-free;
used to validate the exact samplers distributionally.

The step shrinks as the path approaches the barrier so that the spatial
resolution of the undershoot tracks its distance to the barrier (the
undershoot law is singular at the barrier; a fixed step would smear it).
The expected extra cost of the refinement is O(1) steps per path.
"""

from __future__ import annotations

import math

import numpy as np

from . import _stable
from .levy import INF


def oracle_crossing_batch(t, model, size, rng, step=1e-4, step_min=1e-10):
    """Sample (L, gamma, Gamma) for ``size`` replicas by path discretization.

    The stable core advances by exact marginal increments (tempering by
    thinning-resampling, truncation by conditioning below r, both exact for
    the one-step marginal up to the O(step) lumping of the path inside one
    step).  Finite-measure jumps arrive as a Poisson stream.
    """
    alpha, theta, q, r = model.alpha, model.theta, model.q, model.r
    upsilon = model.zeta.total_mass

    L = np.zeros(size)
    gamma = np.empty(size)
    Gamma = np.empty(size)
    pos = np.zeros(size)
    elapsed = np.zeros(size)
    active = np.arange(size)

    guard = 0
    while active.size:
        guard += 1
        if guard > 10**8:
            raise RuntimeError("oracle failed to terminate")
        p = pos[active]
        # Keep the typical increment below ~1/8 of the remaining gap.
        delta = np.clip(((t - p) / 8.0) ** alpha / theta, step_min, step)
        scale = (theta * delta) ** (1.0 / alpha)
        inc = _increment(alpha, q, r, scale, active.size, rng)
        if upsilon > 0.0:
            n_jumps = rng.poisson(upsilon * delta)
            total = int(n_jumps.sum())
            if total:
                draws = model.zeta.sample(rng, size=total)
                flat = np.repeat(np.arange(active.size), n_jumps)
                np.add.at(inc, flat, draws)
        new_pos = p + inc
        elapsed[active] += delta
        crossed = new_pos > t
        rows = active[crossed]
        L[rows] = elapsed[rows]
        gamma[rows] = t - p[crossed]
        Gamma[rows] = new_pos[crossed] - t
        rows_miss = active[~crossed]
        pos[rows_miss] = new_pos[~crossed]
        active = rows_miss
    return L, gamma, Gamma


def _increment(alpha, q, r, scale, m, rng):
    """Exact marginal increment of the (tempered, truncated) stable core."""
    out = np.empty(m)
    todo = np.arange(m)
    scale = np.broadcast_to(np.asarray(scale, dtype=float), (m,))
    for _ in range(100000):
        s = scale[todo] * _stable.sample_stable_std(alpha, rng, size=todo.size)
        ok = np.ones(todo.size, dtype=bool)
        if q > 0.0:
            ok &= rng.uniform(size=todo.size) < np.exp(-q * s)
        if r < INF:
            ok &= s < r
        out[todo[ok]] = s[ok]
        todo = todo[~ok]
        if todo.size == 0:
            return out
    raise RuntimeError("oracle increment thinning failed to converge")
