import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from subdiff import first_passage as fp
from subdiff.levy import INF, LevyModel, PointMass


def test_stable_positive_law():
    # Laplace transform check: E[exp(-lam * S_t)] = exp(-t * lam^alpha)
    rng = np.random.default_rng(1)
    t, alpha = 0.7, 0.6
    s = np.array([fp.sample_stable_positive(alpha, t, rng)
                  for _ in range(40000)])
    for lam in (0.5, 2.0):
        emp = np.exp(-lam * s).mean()
        assert emp == pytest.approx(math.exp(-t * lam ** alpha), abs=0.01)


def test_stable_crossing_marginals():
    # undershoot H/t ~ Beta(alpha, 1-alpha); overshoot/t ~ BetaPrime(1-a, a)
    rng = np.random.default_rng(2)
    alpha, t, n = 0.7, 2.0, 30000
    L, g, G = fp.sample_stable_crossing_batch(t, alpha, 1.0, n, rng)
    _, p_h = stats.kstest((t - g) / t, stats.beta(alpha, 1 - alpha).cdf)
    assert p_h > 0.01
    _, p_o = stats.kstest(G / t, stats.betaprime(1 - alpha, alpha).cdf)
    assert p_o > 0.01
    # E[L_t] = t^alpha / (theta * Gamma(1+alpha))
    assert L.mean() == pytest.approx(t ** alpha / math.gamma(1 + alpha),
                                     rel=0.02)


def test_stable_crossing_scalar_matches_batch():
    rng = np.random.default_rng(3)
    alpha, t, n = 0.5, 1.0, 8000
    sc = np.array([[*_as_tuple(fp.sample_stable_crossing(t, alpha, 1.0, rng))]
                   for _ in range(n)])
    L, g, G = fp.sample_stable_crossing_batch(t, alpha, 1.0, n, rng)
    for i, other in enumerate((L, g, G)):
        _, p = stats.ks_2samp(sc[:, i], other)
        assert p > 0.01


def _as_tuple(s):
    return (s.L, s.gamma, s.Gamma)


def test_theta_scaling():
    # sigma with rate theta run at barrier t equals the unit-rate one in law
    # with time rescaled: L ~ theta^-1 * L^(1); gamma, Gamma unchanged.
    rng = np.random.default_rng(4)
    n, alpha, theta, t = 20000, 0.6, 3.0, 1.0
    L1, g1, G1 = fp.sample_stable_crossing_batch(t, alpha, 1.0, n, rng)
    L3, g3, G3 = fp.sample_stable_crossing_batch(t, alpha, theta, n, rng)
    assert stats.ks_2samp(L1 / theta, L3).pvalue > 0.01
    assert stats.ks_2samp(g1, g3).pvalue > 0.01
    assert stats.ks_2samp(G1, G3).pvalue > 0.01


def test_truncated_crossing_overshoot_capped():
    model = LevyModel(alpha=0.5, r=0.8)
    rng = np.random.default_rng(5)
    for _ in range(500):
        s = fp.sample_truncated_crossing(1.0, model, rng)
        assert 0.0 < s.Gamma < 0.8
        assert 0.0 <= s.gamma <= 1.0
        assert s.L > 0.0


def test_tempered_crossing_basic_support():
    model = LevyModel(alpha=0.75, q=1.0, r=1.0)
    rng = np.random.default_rng(6)
    for _ in range(500):
        s = fp.sample_tempered_crossing(1.0, model, rng)
        assert s.L > 0.0 and 0.0 <= s.gamma <= 1.0 and s.Gamma > 0.0


def test_composite_model_dispatch():
    model = LevyModel(alpha=0.5, q=0.5, r=2.0,
                      zeta=PointMass(location=3.0, mass=0.4))
    rng = np.random.default_rng(7)
    counters = fp.new_counters()
    for _ in range(300):
        s = fp.sample_crossing(1.5, model, rng, counters)
        assert s.L > 0.0 and s.Gamma > 0.0
    assert counters["clock_rounds"] > 0


def test_drift_not_supported():
    model = LevyModel(alpha=0.5, drift=1.0)
    with pytest.raises(NotImplementedError):
        fp.sample_crossing(1.0, model, np.random.default_rng(0))


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(0.2, 0.9), t=st.floats(0.05, 5.0),
       seed=st.integers(0, 2 ** 31))
def test_crossing_invariants(alpha, t, seed):
    rng = np.random.default_rng(seed)
    s = fp.sample_stable_crossing(t, alpha, 1.0, rng)
    assert s.L > 0.0
    assert 0.0 <= s.gamma <= t
    assert s.Gamma > 0.0


def test_dassios_cost_reference_values():
    assert fp.dassios_cost(0.2) == pytest.approx(730.0, rel=0.05)
    assert fp.dassios_cost(0.1) == pytest.approx(94500.0, rel=0.05)
    # approaches 1 from above as alpha -> 1
    assert 1.0 < fp.dassios_cost(0.99) < 1.1


def test_expected_cost_bounds_structure():
    b1, b2 = fp.expected_cost_bounds(LevyModel(alpha=0.5), 1.0)
    assert b1 > 0.0 and b2 > 0.0
    # tempered untruncated model: the tempered bound needs truncation
    b1q, b2q = fp.expected_cost_bounds(LevyModel(alpha=0.5, q=1.0), 1.0)
    assert b2q == INF
    # barrier beyond the truncation multiplies the budget
    b1r, _ = fp.expected_cost_bounds(LevyModel(alpha=0.5, r=0.25), 1.0)
    assert b1r == pytest.approx(4 * b1, rel=1e-12)
