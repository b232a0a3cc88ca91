from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ricci_lab.errors import ParameterError, PreconditionError
from ricci_lab.flow import (FlowConfig, doubling_constant, estimate_extinction, run_flow,
                            stability_limit, step_berger, step_warped)
from ricci_lab.homogeneous import BergerState, normalize_berger, round_berger
from ricci_lab.warped import make_round_profile, profile_from_function

from conftest import sin_cubed


def test_step_zero_is_identity():
    p = make_round_profile(3, 1.0, 64)
    assert step_warped(p, 0.0) is p
    b = round_berger()
    assert step_berger(b, 0.0) == (b, 0.0)


def test_step_above_stability_limit_rejected():
    p = make_round_profile(3, 1.0, 64)
    with pytest.raises(ParameterError):
        step_warped(p, 2 * stability_limit(p))
    with pytest.raises(ParameterError):
        step_warped(p, -1e-6)


def test_round_step_shrinks_homothetically():
    p = make_round_profile(3, 1.0, 128)
    dt = 0.5 * stability_limit(p)
    q = p
    for _ in range(20):
        q = step_warped(q, dt)
    t = q.time
    assert q.length == pytest.approx(np.pi * np.sqrt(1 - 4 * t), rel=1e-8)
    assert np.allclose(q.psi, np.sqrt(1 - 4 * t) * np.sin(np.pi * q.x), atol=1e-9)


def test_step_self_convergence_order():
    p = sin_cubed(0.05, m=64)
    dt = 0.4 * stability_limit(p)
    one = step_warped(p, dt)
    two = step_warped(step_warped(p, dt / 2), dt / 2)
    four = step_warped(step_warped(step_warped(step_warped(p, dt / 4), dt / 4), dt / 4), dt / 4)
    e1 = np.max(np.abs(one.psi - two.psi))
    e2 = np.max(np.abs(two.psi - four.psi))
    # RK4: local error O(dt^5), ratio 32 (loose to allow roundoff)
    assert e1 / e2 > 16


def test_round_run_matches_closed_form(round_trace_256):
    tr = round_trace_256
    assert tr.stop_reason == "curvature_ceiling"
    i = tr.index_of(0.1)
    p = tr.states[i]
    assert p.length == pytest.approx(np.pi * np.sqrt(0.6), rel=1e-6)
    assert np.allclose(p.psi, np.sqrt(0.6) * np.sin(np.pi * p.x), rtol=0, atol=1e-6)
    assert np.all(np.diff(tr.times) > 0)
    assert np.all(tr.r_min <= tr.r_max)
    assert np.all(np.diff(tr.r_min) >= -1e-6 * tr.r_min[1:])


def test_extinction_single_sample_formula():
    tr = run_flow(make_round_profile(3, 1.0, 64), FlowConfig(max_time=1e-9, sample_cadence=1e-9))
    T_est, T_lo, T_hi = estimate_extinction(tr)
    assert T_lo <= T_est <= T_hi
    assert T_hi == pytest.approx(0.25, abs=1e-6)


def test_round_extinction_estimate(round_trace_256):
    T_est, T_lo, T_hi = estimate_extinction(round_trace_256)
    assert abs(T_est - 0.25) < 1e-5 and T_hi - T_lo < 1e-4


def test_precondition_negative_curvature():
    # strong neck: interior radial curvature negative
    p = profile_from_function(3, lambda s: (np.sin(s) + 0.3 * np.sin(3 * s)) / 1.9, 64)
    with pytest.raises(PreconditionError):
        run_flow(p, FlowConfig(max_time=0.01))


def test_berger_round_linear():
    tr = run_flow(round_berger(), FlowConfig(max_time=0.24, sample_cadence=0.02))
    for t, b in zip(tr.times, tr.states):
        assert np.allclose(b.lambdas, 1 - 4 * t, rtol=1e-8)


def test_berger_perturbed_bracket():
    b = normalize_berger(BergerState(1.0, 1.0, 1.1))
    tr = run_flow(b, FlowConfig())
    T = estimate_extinction(tr)
    assert np.all(np.diff(tr.r_min) >= 0)
    assert 0 < T[1] <= T[0] <= T[2] <= 0.25
    assert tr.stop_reason == "curvature_ceiling"


def test_berger_embedded_error_small():
    b = normalize_berger(BergerState(1.0, 1.0, 1.2))
    _, err = step_berger(b, 1e-3)
    assert err < 1e-9


def test_berger_velocity_matches_flow_map():
    from ricci_lab.homogeneous import berger_rhs
    b = BergerState(1.0, 1.0, 1.2)
    h = 1e-6
    fwd, _ = step_berger(b, h)
    assert np.allclose((fwd.lambdas - b.lambdas) / h, berger_rhs(b), rtol=1e-5)


@settings(max_examples=5)
@given(lam=st.floats(0.3, 3.0))
def test_parabolic_rescaling_berger(lam):
    b = normalize_berger(BergerState(1.0, 1.0, 1.1))
    cfg = FlowConfig(max_time=0.2, sample_cadence=0.01)
    a = run_flow(b, cfg)
    s = run_flow(b.scaled(lam), cfg.scaled(lam))
    assert np.allclose(s.times, a.times * lam, rtol=1e-12)
    assert np.allclose(s.r_min * lam, a.r_min, rtol=1e-6)


def test_parabolic_rescaling_warped():
    p = sin_cubed(0.03, m=64)
    cfg = FlowConfig(max_time=0.05, sample_cadence=0.01, record_width=False)
    lam = 2.5
    a = run_flow(p, cfg)
    s = run_flow(p.scaled(lam), cfg.scaled(lam))
    assert np.allclose(s.times, a.times * lam, rtol=1e-12)
    assert np.allclose(s.r_max * lam, a.r_max, rtol=1e-6)
    assert np.allclose(s.r_min * lam, a.r_min, rtol=1e-6)


def test_doubling_constant_near_quarter_n():
    assert doubling_constant(3) == pytest.approx(0.75, rel=1e-3)


def test_grid_convergence_of_extinction():
    T = []
    for m in (48, 96, 192):
        tr = run_flow(sin_cubed(0.05, m=m), FlowConfig(curvature_ceiling=1e3, record_width=False))
        T.append(estimate_extinction(tr)[0])
    d1, d2 = abs(T[0] - T[1]), abs(T[1] - T[2])
    assert d2 < d1 / 3


def test_config_validation():
    with pytest.raises(ParameterError):
        FlowConfig(max_time=-1.0)
    with pytest.raises(ParameterError):
        FlowConfig(cfl=np.nan)
    sched = FlowConfig(max_time=0.1, sample_cadence=0.03, extra_times=(0.05,)).schedule()
    assert np.allclose(sched, [0, 0.03, 0.05, 0.06, 0.09, 0.1])


def test_cone_preserved_along_perturbed_run(pert_trace_256):
    from ricci_lab.warped import check_curvature_cone
    assert all(check_curvature_cone(f).ok for f in pert_trace_256.fields)
