"""Exact simulation of inverse subordinators with their age and remaining
lifetime, composition with exactly samplable or Euler-approximated Feller
processes, Monte Carlo estimation with explicit error control, and the
weak-ergodicity-breaking experiment suite.
"""

from .levy import (
    INF,
    LevyModel,
    ParetoTail,
    PointMass,
    ZeroMeasure,
    eval_phi,
    mittag_leffler,
    potential_density,
    potential_mass,
    stable_tail_measure,
    tail_nu,
)
from .first_passage import (
    CrossingSample,
    dassios_cost,
    expected_cost_bounds,
    new_counters,
    sample_crossing,
    sample_stable_crossing,
    sample_stable_crossing_batch,
    sample_stable_positive,
    sample_tempered_crossing,
    sample_truncated_crossing,
)
from .paths import (
    AgeState,
    LifetimeState,
    TripletState,
    sample_age_path,
    sample_lifetime_path,
    sample_triplet_path,
    sample_triplet_path_batch,
    step_cost_report,
)
from .processes import (
    FellerSpec,
    TimeChangedSample,
    check_moment_conditions,
    inner_clock,
    pruitt_h,
    sample_feller_at,
    sample_time_changed,
)
from .sde import (
    C1_BDG,
    ErrorConstants,
    SdeModel,
    choose_step,
    compute_constants,
    euler_maruyama,
    exp_moment_inverse,
    ou_sde_model,
    sample_time_changed_sde,
    strong_error_bound,
)
from .montecarlo import (
    FunctionalSpec,
    McEstimate,
    berry_esseen_bound,
    choose_N,
    clt_diagnostic,
    estimate_em,
    estimate_exact,
    schedule_h_N,
)
from .oracle import oracle_crossing_batch

try:
    from importlib.metadata import version as _version

    __version__ = _version("subdiff")
except Exception:  # pragma: no cover
    __version__ = "0+unknown"
