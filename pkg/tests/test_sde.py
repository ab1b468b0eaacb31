import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subdiff import sde
from subdiff.levy import INF, LevyModel


def _ou_example():
    # rate = vol = 1/2, mean = 1/4, started at 0, declared K = 5/8
    return sde.ou_sde_model(0.5, 0.25, 0.5, 0.0, K=0.625)


def test_bdg_constant():
    assert sde.C1_BDG == 1.30693


def test_constants_simple_substitution():
    m = sde.SdeModel(drift=lambda t, x: 0 * x, diffusion=lambda t, x: [[1.0]],
                     K=1.0, x0=[0.0])
    c = sde.compute_constants(m)
    assert c.c1 == pytest.approx(6.0)
    assert c.c01 == pytest.approx(0.5)
    # re-derive C2 symbolically: 2d(3K^2((1+4*C1^2)m + 1) + 1)
    B = (1.0 + 4.0 * sde.C1_BDG ** 2) * 1
    assert c.C2 == pytest.approx(2.0 * (3.0 * (B + 1.0) + 1.0), rel=1e-14)
    assert c.C1 == pytest.approx(c.A * (1.0 + c.C2 / (c.C2 - 2.0 * c.c1)))


def test_step_plan_reproduces_ou_example():
    ou = _ou_example()
    c = sde.compute_constants(ou)
    em = sde.exp_moment_inverse(LevyModel(alpha=0.8), c.C2, 0.1,
                                kind="inverse", phi_margin=6.0)
    h = sde.choose_step(c, em, ou.gamma_hoelder, 0.1)
    # published planning value, quoted to two significant figures
    assert h == pytest.approx(1.9e-4, rel=0.02)
    assert sde.strong_error_bound(c, LevyModel(alpha=0.8), "inverse", 0.1, h,
                                  1.0, phi_margin=6.0) <= 0.1 + 1e-12


def test_step_plan_reproduces_geometric_example():
    # multiplicative diffusion with theta = -1/5, K = 1.2, undershoot clock
    m = sde.SdeModel(drift=lambda t, x: np.zeros(1),
                     diffusion=lambda t, x: [[-0.2 * x[0]]],
                     K=1.2, x0=[1.0], time_independent=False)
    c = sde.compute_constants(m)
    em = sde.exp_moment_inverse(LevyModel(alpha=0.8), c.C2, 0.1,
                                kind="undershoot")
    h = sde.choose_step(c, em, 1.0, 0.1)
    assert h == pytest.approx(8.4e-9, rel=0.02)


def test_choose_step_scaling():
    ou = _ou_example()
    c = sde.compute_constants(ou)
    h1 = sde.choose_step(c, 10.0, 1.0, 0.05)
    h2 = sde.choose_step(c, 10.0, 1.0, 0.1)
    assert h2 == pytest.approx(2.0 * h1)
    # gamma < 1/2 switches the exponent to 1/(2 gamma)
    h3 = sde.choose_step(c, 10.0, 0.25, 0.1)
    assert h3 == pytest.approx((0.1 / (c.C1 * 10.0)) ** 2)


def test_euler_deterministic_linear_drift_exact():
    m = sde.SdeModel(drift=lambda t, x: np.array([3.0]),
                     diffusion=lambda t, x: [[0.0]], K=3.0, x0=[1.0])
    grid = np.array([0.0, 0.2, 0.5, 1.3])
    out = sde.euler_maruyama(m, grid, np.random.default_rng(0))
    assert np.allclose(out[:, 0], 1.0 + 3.0 * grid)


def test_euler_divergence_reports_step():
    m = sde.SdeModel(drift=lambda t, x: x * 1e200,
                     diffusion=lambda t, x: [[0.0]], K=1.0, x0=[1e200])
    with pytest.raises(FloatingPointError):
        sde.euler_maruyama(m, np.linspace(0, 1, 5), np.random.default_rng(0))


def test_exp_moment_kinds():
    m = LevyModel(alpha=0.5)
    assert sde.exp_moment_inverse(m, 2.0, 0.7, kind="undershoot") == \
        pytest.approx(math.exp(1.4))
    with pytest.raises(ValueError):
        sde.exp_moment_inverse(m, 2.0, 0.7, kind="overshoot")
    # tempering faster than the requested exponential: bound becomes finite
    mt = LevyModel(alpha=0.5, q=3.0)
    assert np.isfinite(sde.exp_moment_inverse(mt, 2.0, 0.7, kind="overshoot"))
    # the free scan never does worse than a pinned margin
    pinned = sde.exp_moment_inverse(m, 3.0, 1.0, phi_margin=6.0)
    scanned = sde.exp_moment_inverse(m, 3.0, 1.0)
    assert scanned <= pinned + 1e-9


def test_bound_monotone_in_t_and_h():
    ou = _ou_example()
    c = sde.compute_constants(ou)
    m = LevyModel(alpha=0.8)
    prev = 0.0
    for t in (0.0, 0.05, 0.1):
        val = sde.strong_error_bound(c, m, "undershoot", t, 1e-4, 1.0)
        assert val >= prev
        prev = val
    assert sde.strong_error_bound(c, m, "undershoot", 0.1, 2e-4, 1.0) > \
        sde.strong_error_bound(c, m, "undershoot", 0.1, 1e-4, 1.0)
    # t = 0 collapses to C1 * h^min(2 gamma, 1)
    assert sde.strong_error_bound(c, m, "undershoot", 0.0, 1e-4, 1.0) == \
        pytest.approx(c.C1 * 1e-4)


def test_merged_grid_gap():
    T = np.array([0.003, 0.017, 0.017, 0.042])
    mesh = sde.merged_grid(T, 0.01)
    assert mesh[0] == 0.0
    assert np.all(np.diff(mesh) <= 0.01 + 1e-15)
    assert np.all(np.isin(T, mesh))


def test_appendix_moment_bounds_on_ou():
    # simulated E|X_t|^2 <= c01 * exp(2 c1 t) and the increment bound
    ou = _ou_example()
    c = sde.compute_constants(ou)
    rng = np.random.default_rng(11)
    grid = np.linspace(0.0, 1.0, 201)
    sq = np.zeros(grid.size)
    inc = np.zeros(grid.size - 1)
    n_rep = 400
    for _ in range(n_rep):
        path = sde.euler_maruyama(ou, grid, rng)[:, 0]
        sq += path ** 2
        inc += np.diff(path) ** 2
    sq /= n_rep
    inc /= n_rep
    assert np.all(sq <= c.c01 * np.exp(2.0 * c.c1 * grid) + 1e-9)
    h = grid[1] - grid[0]
    cap = (4.0 * 2.0 * (1.0 + c.c01) * ou.K ** 2
           * np.exp(2.0 * c.c1 * grid[1:]) * h)
    assert np.all(inc <= cap)


def test_time_changed_sde_constancy():
    ou = _ou_example()
    m = LevyModel(alpha=0.6)
    rng = np.random.default_rng(12)
    grid = np.linspace(0.05, 1.0, 20)
    T, vals = sde.sample_time_changed_sde(ou, m, "inverse", grid, 0.01, rng)
    same = np.flatnonzero(np.diff(T) == 0.0)
    for i in same:
        assert vals[i + 1, 0] == vals[i, 0]


@settings(max_examples=30, deadline=None)
@given(K=st.floats(0.1, 5.0), d=st.integers(1, 3), m=st.integers(1, 3),
       ti=st.booleans())
def test_constants_well_posed(K, d, m, ti):
    model = sde.SdeModel(drift=lambda t, x: 0 * x,
                         diffusion=lambda t, x: np.zeros((d, m)),
                         K=K, d=d, m=m, x0=np.zeros(d), time_independent=ti)
    c = sde.compute_constants(model)
    assert c.C2 > 2.0 * c.c1
    assert c.C1 > 0.0 and np.isfinite(c.C1)
