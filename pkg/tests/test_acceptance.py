"""End-to-end acceptance checks, each with a fixed seed and the stated
tolerance.  These are deliberately heavier than the unit tests; the whole
module is sized for a desk run.
"""

import math

import numpy as np
import pytest
from scipy import stats

from subdiff import cli, first_passage as fp, montecarlo as mc
from subdiff import processes, sde
from subdiff.levy import LevyModel


def _sq_functional():
    def u(p):
        if p.ndim == 2:
            return float(np.sum(p[-1] ** 2))
        return np.sum(p[..., -1, :] ** 2, axis=-1)
    return mc.FunctionalSpec(u=u, growth_p=1.0, lipschitz_Cu=1.0)


# -- 1: inverse-clock mean reproduces t^alpha / Gamma(1 + alpha) -------------

@pytest.mark.parametrize("alpha", [0.5, 0.75])
def test_inverse_clock_mean(alpha):
    spec = processes.FellerSpec(variant="brownian", d=1)
    est = mc.estimate_exact(_sq_functional(), spec, LevyModel(alpha=alpha),
                            "inverse", [1.0], 10 ** 5,
                            np.random.default_rng([10, int(alpha * 100)]))
    target = 1.0 / math.gamma(1.0 + alpha)
    assert abs(est.mean - target) <= est.ci_halfwidth


# -- 2: age marginal gamma_t / t ~ Beta(1 - alpha, alpha) --------------------

@pytest.mark.parametrize("alpha", [0.5, 0.75])
def test_age_marginal_beta(alpha):
    rng = np.random.default_rng([21, int(alpha * 100)])
    t, n = 1.0, 10 ** 5
    g = np.array([fp.sample_stable_crossing(t, alpha, 1.0, rng).gamma
                  for _ in range(n)])
    _, p = stats.kstest(g / t, stats.beta(1.0 - alpha, alpha).cdf)
    assert p > 0.01


# -- 3: exact samplers vs the brute-force path-inversion oracle --------------

@pytest.mark.parametrize("alpha,q,r", [(0.75, 0.0, math.inf),
                                       (0.75, 1.0, 1.0),
                                       (0.5, 0.0, 1.0)])
def test_oracle_equivalence(alpha, q, r):
    cfg = {"alpha": alpha, "q": q, "r": r, "t": 1.0, "N": 10 ** 4}
    rep = cli.run_validate(cfg, seed=30, out_dir="/tmp/subdiff-acceptance")
    for row in rep["rows"]:
        assert row["p_value"] > 0.01, row


# -- 4: Markov consistency under grid refinement -----------------------------

def test_grid_refinement_consistency():
    rng = np.random.default_rng(40)
    alpha, n, t1, t2 = 0.6, 10 ** 4, 0.7, 1.3
    from subdiff import paths
    Gd, Xd, Rd = paths.sample_triplet_path_batch(n, [t2], alpha, 1.0, rng)
    Gv, Xv, Rv = paths.sample_triplet_path_batch(n, [t1, t2], alpha, 1.0, rng)
    for a, b in ((Gd[:, -1], Gv[:, -1]), (Xd[:, -1], Xv[:, -1]),
                 (Rd[:, -1], Rv[:, -1])):
        assert stats.ks_2samp(a, b).pvalue > 0.01


# -- 5: coupled strong-error experiment at the planned step ------------------

def test_strong_error_reproduction():
    rep = cli.run_strong_error({}, seed=50, out_dir="/tmp/subdiff-acceptance")
    assert rep["h"] == pytest.approx(1.9e-4, rel=0.02)
    assert rep["fraction_below_epsilon"] >= 0.95
    # the second published planning example is checked analytically only
    m = sde.SdeModel(drift=lambda t, x: np.zeros(1),
                     diffusion=lambda t, x: [[-0.2 * x[0]]],
                     K=1.2, x0=[1.0])
    c = sde.compute_constants(m)
    em = sde.exp_moment_inverse(LevyModel(alpha=0.8), c.C2, 0.1,
                                kind="undershoot")
    assert sde.choose_step(c, em, 1.0, 0.1) == pytest.approx(8.4e-9, rel=0.02)


# -- 6: empirical strong order over h in {2^-6 .. 2^-12} ---------------------

def test_strong_order_slope():
    rng = np.random.default_rng(60)
    hs = [2.0 ** (-k) for k in range(6, 13)]
    means = [sde.ou_strong_order_errors(0.5, 0.25, 0.5, 0.0, h, 500,
                                        rng).mean() for h in hs]
    slope = np.polyfit(np.log(hs), np.log(means), 1)[0]
    assert abs(slope - 1.0) <= 0.3


# -- 7: hard-coded and closed-form constants ---------------------------------

def test_constants():
    assert sde.C1_BDG == 1.30693
    assert fp.dassios_cost(0.2) == pytest.approx(730.0, rel=0.05)
    assert fp.dassios_cost(0.1) == pytest.approx(94500.0, rel=0.05)


# -- 8: weak ergodicity breaking of the time-averaged MSD --------------------

def test_web_experiment():
    rep = cli.run_web({"alpha": 0.5, "replicas": 1000}, seed=80,
                      out_dir="/tmp/subdiff-acceptance")
    assert rep["fitted_T_exponent"] == pytest.approx(-0.5, abs=0.1)
    assert rep["fitted_C"] == pytest.approx(1.1, abs=0.3)
    ctl = cli.run_web({"control": True, "ratios": [10, 100, 1000, 10000],
                       "replicas": 1000}, seed=81,
                      out_dir="/tmp/subdiff-acceptance-ctl")
    assert ctl["mean_tamsd_over_t_at_largest_T"] == pytest.approx(1.0,
                                                                  abs=0.05)


# -- 9: CLT diagnostic and confidence-interval coverage ----------------------

def test_clt_diagnostic_batches():
    spec = processes.FellerSpec(variant="brownian", d=1)
    f = _sq_functional()
    model = LevyModel(alpha=0.75)
    batches = np.array([
        mc.estimate_exact(f, spec, model, "inverse", [1.0], 1000,
                          np.random.default_rng([90, k])).mean
        for k in range(500)])
    rep = mc.clt_diagnostic(batches)
    assert rep["passed"], rep


def test_ci_coverage():
    spec = processes.FellerSpec(variant="brownian", d=1)
    f = _sq_functional()
    model = LevyModel(alpha=0.75)
    target = 1.0 / math.gamma(1.75)
    hits = 0
    runs = 1000
    for k in range(runs):
        est = mc.estimate_exact(f, spec, model, "inverse", [1.0], 1000,
                                np.random.default_rng([91, k]))
        hits += abs(est.mean - target) <= est.ci_halfwidth
    assert abs(hits / runs - 0.95) <= 0.03


# -- 10: moment-condition gates over an (alpha_M, p) grid --------------------

def test_moment_condition_gates():
    model = LevyModel(alpha=0.5, q=1.0)
    for aM in np.linspace(0.1, 1.9, 19):
        spec = processes.FellerSpec(variant="isotropic-stable", d=1,
                                    alpha_M=float(aM))
        for p in np.linspace(0.0, 1.5, 16):
            rep = processes.check_moment_conditions(spec, model, "inverse",
                                                    float(p), 1.0)
            assert rep["clt_ok"] == (p < aM / 2.0)
            assert rep["berry_esseen_ok"] == (p < aM / 3.0)
