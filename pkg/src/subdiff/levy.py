"""Subordinator models: Lévy measures, Laplace exponents, tails and potentials.

The model family is a (possibly tempered, possibly truncated) one-sided
stable density plus an arbitrary finite measure::

    nu(ds) = theta * (alpha * exp(-q*s) / Gamma(1-alpha)) * s^(-alpha-1) * 1{0 < s <= r} ds
             + zeta(ds)

with ``alpha`` in (0,1), ``theta > 0``, tempering rate ``q >= 0``, truncation
level ``r`` (possibly infinite) and ``zeta`` a finite measure supplied through
``(total_mass, tail, inverse_cdf)``.  An optional nonnegative drift ``b`` adds
``b*lam`` to the Laplace exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, special

INF = math.inf

_REJECTION_CAP = 10**6


class RejectionCapError(RuntimeError):
    """An acceptance loop exceeded its iteration cap."""

    def __init__(self, message, acceptance_rate=None):
        super().__init__(message)
        self.acceptance_rate = acceptance_rate


# ---------------------------------------------------------------------------
# Finite measures
# ---------------------------------------------------------------------------


class FiniteMeasure:
    """A finite measure on (0, inf) described by its total mass, tail and
    generalized inverse CDF.  Subclasses provide closed forms; the base class
    implements sampling and conditional-tail sampling on top of them.
    """

    @property
    def total_mass(self):
        raise NotImplementedError

    def tail(self, v):
        """Mass of (v, inf)."""
        raise NotImplementedError

    def inverse_cdf(self, u):
        """Generalized inverse of the CDF at u in (0, 1)."""
        raise NotImplementedError

    def sample(self, rng, size=None):
        u = rng.uniform(size=size)
        if size is None:
            return self.inverse_cdf(u)
        return np.asarray([self.inverse_cdf(x) for x in np.atleast_1d(u)])

    def sample_tail(self, v, rng):
        """Draw from the normalized restriction of the measure to [v, inf)."""
        mass = self.tail(v)
        if mass <= 0.0:
            raise ValueError("no mass beyond v=%g" % v)
        # CDF value at v is (total - tail); map a uniform into the tail part.
        u0 = 1.0 - mass / self.total_mass
        u = u0 + rng.uniform() * (1.0 - u0)
        return max(self.inverse_cdf(u), v)

    def exp_moment(self, c):
        """integral of exp(c*s) over the part of the measure on (1, inf)."""
        mass = self.tail(1.0)
        if mass <= 0.0:
            return 0.0
        # Generic quadrature through the inverse CDF; subclasses override
        # when the integral diverges or has a closed form.
        u0 = 1.0 - mass / self.total_mass
        val, err = integrate.quad(
            lambda u: math.exp(c * self.inverse_cdf(u)), u0, 1.0, limit=200
        )
        if not math.isfinite(val):
            return INF
        return self.total_mass * val

    def mean(self):
        val, _ = integrate.quad(lambda u: self.inverse_cdf(u), 0.0, 1.0, limit=200)
        return self.total_mass * val


class ZeroMeasure(FiniteMeasure):
    """The null measure (no extra jump component)."""

    @property
    def total_mass(self):
        return 0.0

    def tail(self, v):
        return 0.0

    def inverse_cdf(self, u):
        raise ValueError("cannot sample from the zero measure")

    def exp_moment(self, c):
        return 0.0


class PointMass(FiniteMeasure):
    """mass * delta_{location}."""

    def __init__(self, location, mass=1.0):
        if location <= 0 or mass < 0:
            raise ValueError("PointMass needs location > 0 and mass >= 0")
        self.location = float(location)
        self.mass = float(mass)

    @property
    def total_mass(self):
        return self.mass

    def tail(self, v):
        return self.mass if v < self.location else 0.0

    def inverse_cdf(self, u):
        return self.location

    def exp_moment(self, c):
        if self.location > 1.0:
            return self.mass * math.exp(c * self.location)
        return 0.0


class ParetoTail(FiniteMeasure):
    """Density ``coeff * s^(-(index+1))`` on (cutoff, inf), index > 0.

    ``ParetoTail(index=4, cutoff=1, coeff=1)`` is the density s^-5 1{s>1}.
    """

    def __init__(self, index, cutoff=1.0, coeff=1.0):
        if index <= 0 or cutoff <= 0 or coeff <= 0:
            raise ValueError("ParetoTail needs positive index, cutoff, coeff")
        self.index = float(index)
        self.cutoff = float(cutoff)
        self.coeff = float(coeff)

    @property
    def total_mass(self):
        return self.coeff * self.cutoff ** (-self.index) / self.index

    def tail(self, v):
        v = max(v, self.cutoff)
        return self.coeff * v ** (-self.index) / self.index

    def inverse_cdf(self, u):
        # tail(s) = total*(s/cutoff)^-index  =>  s = cutoff*(1-u)^(-1/index)
        return self.cutoff * (1.0 - u) ** (-1.0 / self.index)

    def exp_moment(self, c):
        if c > 0:
            return INF
        lo = max(1.0, self.cutoff)
        val, _ = integrate.quad(
            lambda s: math.exp(c * s) * self.coeff * s ** (-(self.index + 1.0)),
            lo,
            INF,
            limit=200,
        )
        return val


def stable_tail_measure(alpha, theta=1.0, cutoff=1.0):
    """The (untempered) stable density beyond ``cutoff`` packaged as a finite
    measure: theta*alpha/Gamma(1-alpha) * s^(-alpha-1) on (cutoff, inf)."""
    coeff = theta * alpha / special.gamma(1.0 - alpha)
    return ParetoTail(index=alpha, cutoff=cutoff, coeff=coeff)


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevyModel:
    """A subordinator from the decomposed family (stable core + finite part)."""

    alpha: float
    theta: float = 1.0
    q: float = 0.0
    r: float = INF
    drift: float = 0.0
    zeta: FiniteMeasure = field(default_factory=ZeroMeasure)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.theta <= 0.0:
            raise ValueError("theta must be positive")
        if self.q < 0.0:
            raise ValueError("q must be nonnegative")
        if self.r <= 0.0:
            raise ValueError("r must be positive")
        if self.drift < 0.0:
            raise ValueError("drift must be nonnegative")

    @property
    def kind(self):
        if self.zeta.total_mass > 0.0:
            return "decomposed-general"
        if self.r < INF:
            return "truncated-stable"
        if self.q > 0.0:
            return "tempered-stable"
        return "pure-stable"

    @property
    def is_pure_stable(self):
        return self.q == 0.0 and self.r == INF and self.zeta.total_mass == 0.0

    # -- pointwise Lévy density of the stable core ---------------------------

    def stable_density(self, s):
        if s <= 0.0 or s > self.r:
            return 0.0
        c = self.theta * self.alpha / special.gamma(1.0 - self.alpha)
        return c * math.exp(-self.q * s) * s ** (-self.alpha - 1.0)


# ---------------------------------------------------------------------------
# Stable-core tail (closed forms)
# ---------------------------------------------------------------------------


def _stable_tail_segment(alpha, theta, q, lo, hi):
    """integral of theta*alpha/Gamma(1-alpha)*exp(-q s)*s^(-alpha-1) over (lo, hi]."""
    if hi <= lo:
        return 0.0
    ga = special.gamma(1.0 - alpha)
    if q == 0.0:
        upper = 0.0 if hi == INF else hi ** (-alpha)
        return theta * (lo ** (-alpha) - upper) / ga
    # integral exp(-q s) s^(-a-1) ds = q^a * Gamma(-a, q s) evaluated via
    # Gamma(-a, z) = (z^-a e^-z - Gamma(1-a, z)) / a
    def anti(x):
        if x == INF:
            return 0.0
        z = q * x
        g_upper = ga * special.gammaincc(1.0 - alpha, z)  # Gamma(1-a, z)
        return q ** alpha * (z ** (-alpha) * math.exp(-z) - g_upper) / alpha

    return theta * alpha * (anti(lo) - anti(hi)) / ga


def tail_nu(model, v):
    """nu(v, inf): stable-core tail plus the finite part's tail."""
    if v <= 0.0:
        return INF
    core = _stable_tail_segment(model.alpha, model.theta, model.q, v, model.r)
    return core + model.zeta.tail(v)


# ---------------------------------------------------------------------------
# Laplace exponent
# ---------------------------------------------------------------------------


def eval_phi(model, lam):
    """phi(lam) = b*lam + integral (1 - exp(-lam*s)) nu(ds)."""
    if lam < 0.0:
        raise ValueError("lambda must be nonnegative")
    if lam == 0.0:
        return 0.0
    total = model.drift * lam
    alpha, theta, q, r = model.alpha, model.theta, model.q, model.r
    if r == INF and model.zeta.total_mass == 0.0:
        # Closed form: theta * ((lam + q)^alpha - q^alpha).
        total += theta * ((lam + q) ** alpha - q ** alpha)
    else:
        c = theta * alpha / special.gamma(1.0 - alpha)

        # Substitution s = u^(1/(1-alpha)) removes the s -> 0 singularity.
        p = 1.0 / (1.0 - alpha)

        # After s = u^p the combined power factors cancel exactly:
        # s^(-alpha-1) * ds/du = p / s, leaving a bounded integrand.
        def integrand(u):
            s = u ** p
            if s == 0.0:
                return p * c * lam
            return p * c * math.exp(-q * s) * (-math.expm1(-lam * s)) / s

        hi = min(r, 1.0)
        val, _ = integrate.quad(integrand, 0.0, hi ** (1.0 - alpha), limit=200,
                                epsrel=1e-12, epsabs=1e-14)
        total += val
        if r > 1.0:
            def integrand2(s):
                return (-math.expm1(-lam * s)) * c * math.exp(-q * s) * s ** (-alpha - 1.0)

            hi2 = r if r < INF else INF
            val2, _ = integrate.quad(integrand2, 1.0, hi2, limit=200,
                                     epsrel=1e-12, epsabs=1e-14)
            total += val2
    zmass = model.zeta.total_mass
    if zmass > 0.0:
        val3, _ = integrate.quad(
            lambda u: -math.expm1(-lam * model.zeta.inverse_cdf(u)), 0.0, 1.0,
            limit=200, epsrel=1e-12,
        )
        total += zmass * val3
    if not math.isfinite(total):
        raise ValueError("non-finite Laplace exponent: invalid model")
    return total


# ---------------------------------------------------------------------------
# Residual jump sampler S_v ~ nu(.)/nu[v, inf) on [v, inf)
# ---------------------------------------------------------------------------


def sample_Sv(model, v, rng):
    """Draw the straddling-jump candidate law nu(ds)/nu[v,inf) on [v, inf)."""
    if v <= 0.0:
        raise ValueError("v must be positive")
    alpha, theta, q, r = model.alpha, model.theta, model.q, model.r
    w_core = _stable_tail_segment(alpha, theta, q, v, r)
    w_zeta = model.zeta.tail(v)
    total = w_core + w_zeta
    if total <= 0.0:
        raise ValueError("tail_nu(v) = 0: no mass beyond v")
    if rng.uniform() * total < w_zeta:
        return model.zeta.sample_tail(v, rng)
    return _sample_stable_segment(alpha, q, v, r, rng)


def _sample_stable_segment(alpha, q, lo, hi, rng):
    """Draw from density prop. to exp(-q s) s^(-alpha-1) on (lo, hi].

    Rejection from the (truncated) Pareto proposal with acceptance
    exp(-q (s - lo)); falls back to inversion of the tempered tail when the
    acceptance rate collapses.
    """
    if hi == INF:
        tail_ratio = 0.0
    else:
        tail_ratio = (lo / hi) ** alpha
    for i in range(1000):
        u = rng.uniform()
        s = lo * (1.0 - u * (1.0 - tail_ratio)) ** (-1.0 / alpha)
        if q == 0.0:
            return s
        if rng.uniform() < math.exp(-q * (s - lo)):
            return s
    # Numerical inversion fallback on the tempered tail.
    target = _stable_tail_segment(alpha, 1.0, q, lo, hi) * rng.uniform()

    from scipy.optimize import brentq

    hi_eff = hi if hi < INF else lo * 1e9
    sol = brentq(
        lambda s: _stable_tail_segment(alpha, 1.0, q, s, hi) - target,
        lo, hi_eff, xtol=1e-14 * lo,
    )
    return sol


# ---------------------------------------------------------------------------
# Decomposition at a level
# ---------------------------------------------------------------------------


class _CompositeTail(FiniteMeasure):
    """Stable-core segment on (t, r] plus zeta, as one finite measure."""

    def __init__(self, model, t):
        self.model = model
        self.t = t
        self.seg_mass = _stable_tail_segment(model.alpha, model.theta, model.q, t, model.r)

    @property
    def total_mass(self):
        return self.seg_mass + self.model.zeta.total_mass

    def tail(self, v):
        m = self.model
        seg = _stable_tail_segment(m.alpha, m.theta, m.q, max(v, self.t), m.r)
        return seg + m.zeta.tail(v)

    def inverse_cdf(self, u):
        # Generalized inverse of the mixture CDF via the tail function.
        from scipy.optimize import brentq

        target = (1.0 - u) * self.total_mass
        lo, hi = self.t, self.t
        while self.tail(hi) > target and hi < 1e12:
            hi = hi * 2.0 + 1.0
        if self.tail(hi) > target:
            return hi
        return brentq(lambda s: self.tail(s) - target, lo, hi, xtol=1e-13)

    def sample(self, rng, size=None):
        if size is not None:
            return np.asarray([self.sample(rng) for _ in range(size)])
        m = self.model
        if rng.uniform() * self.total_mass < self.seg_mass:
            return _sample_stable_segment(m.alpha, m.q, self.t, m.r, rng)
        return m.zeta.sample(rng)


def decompose_at_level(model, t):
    """Split nu at level t <= r into the truncated core and the finite rest.

    Returns ``(core_params, rest)`` where ``core_params`` is a dict with the
    truncated tempered-stable parameters and ``rest`` is the finite measure
    (stable segment on (t, r] plus zeta) with its total mass Upsilon_t.
    """
    if not 0.0 < t <= model.r:
        raise ValueError("decomposition level must satisfy 0 < t <= r")
    core = {"alpha": model.alpha, "theta": model.theta, "q": model.q, "trunc": t}
    rest = _CompositeTail(model, t)
    return core, rest


# ---------------------------------------------------------------------------
# Mittag-Leffler function
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4096)
def _ml_cached(beta, delta, x):
    if x == 0.0:
        return 1.0 / special.gamma(delta)
    if x > 0.0:
        # All series terms are positive: no cancellation; sum until the terms
        # fall below the relative cutoff.  Overflow is reported as +inf.
        if x ** (1.0 / beta) > 700.0:
            return INF
        total = 0.0
        term_log = 0.0
        n = 0
        while n < 100000:
            g = special.gammaln(beta * n + delta)
            log_term = n * math.log(x) - g
            if log_term > 700.0:
                return INF
            term = math.exp(log_term)
            total += term
            if n > x ** (1.0 / beta) and term < 1e-16 * total:
                break
            n += 1
        return total
    # Negative argument: alternating series; use high-precision arithmetic.
    import mpmath

    mpmath.mp.dps = 30 + int(3.0 * abs(x) ** (1.0 / beta))
    s = mpmath.nsum(lambda n: mpmath.mpf(x) ** n / mpmath.gamma(beta * n + delta),
                    [0, mpmath.inf])
    return float(s)


def mittag_leffler(beta, delta, x):
    """Two-parameter Mittag-Leffler function E_{beta,delta}(x)."""
    if beta <= 0.0 or delta <= 0.0:
        raise ValueError("beta and delta must be positive")
    return _ml_cached(float(beta), float(delta), float(x))


# ---------------------------------------------------------------------------
# Potential (renewal) measure of the core
# ---------------------------------------------------------------------------


def potential_density(model, s):
    """Closed-form potential density u(s) of the (tempered) stable core.

    For the unit-theta tempered stable subordinator,
    u(s) = exp(-q s) s^(alpha-1) E_{alpha,alpha}((q s)^alpha); theta rescales
    time, dividing the density by theta.
    """
    if model.r < INF or model.zeta.total_mass > 0.0:
        raise ValueError("no closed-form potential for truncated/composite models")
    a, q = model.alpha, model.q
    if q == 0.0:
        val = s ** (a - 1.0) / special.gamma(a)
    else:
        val = math.exp(-q * s) * s ** (a - 1.0) * mittag_leffler(a, a, (q * s) ** a)
    return val / model.theta


def potential_mass(model, t):
    """u((0, t]) for the pure or tempered stable model."""
    if t <= 0.0:
        raise ValueError("t must be positive")
    if model.r < INF or model.zeta.total_mass > 0.0:
        raise ValueError("no closed-form potential for truncated/composite models")
    a = model.alpha
    if model.q == 0.0:
        return t ** a / (special.gamma(1.0 + a) * model.theta)
    # Substitution s = w^(1/alpha) tames the s^(alpha-1) endpoint.
    p = 1.0 / a

    def integrand(w):
        s = w ** p
        return potential_density(model, s) * p * w ** (p - 1.0)

    val, _ = integrate.quad(integrand, 0.0, t ** a, limit=200, epsrel=1e-11)
    return val


# ---------------------------------------------------------------------------
# Exponential moment of the Lévy measure beyond 1
# ---------------------------------------------------------------------------


def exp_moment_levy(model, c):
    """M(c) = integral of exp(c*s) nu(ds) over (1, inf); +inf when divergent."""
    if c <= 0.0:
        raise ValueError("c must be positive")
    alpha, theta, q, r = model.alpha, model.theta, model.q, model.r
    total = 0.0
    if r > 1.0:
        if r == INF and q <= c:
            return INF
        coeff = theta * alpha / special.gamma(1.0 - alpha)
        hi = r if r < INF else INF
        val, _ = integrate.quad(
            lambda s: coeff * math.exp((c - q) * s) * s ** (-alpha - 1.0),
            1.0, hi, limit=200, epsrel=1e-11,
        )
        total += val
    total += model.zeta.exp_moment(c)
    return total
