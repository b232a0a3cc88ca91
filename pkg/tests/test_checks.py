from __future__ import annotations

import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ricci_lab.checks import (check_backward_propagation, check_distance_distortion,
                              check_extinction_bound, check_harnack, check_max_principle,
                              check_rm_le_scalar, check_scalar_evolution, harnack_factor,
                              ode_comparison, pinching_deficit, rho)
from ricci_lab.errors import DomainError, PreconditionError
from ricci_lab.flow import FlowConfig, FlowTrace, run_flow
from ricci_lab.homogeneous import BergerState, normalize_berger
from ricci_lab.warped import CurvatureField, field_from_sectional, make_round_profile

from conftest import sin_cubed


def _rebuild(trace: FlowTrace, **kw) -> FlowTrace:
    """Copy of ``trace`` with some fields replaced (cached curvature dropped)."""
    return dataclasses.replace(trace, **kw)


def test_rho_examples():
    assert rho(3, 0.0) == 6.0
    assert rho(3, 1 / 8) == pytest.approx(12.0)
    ts = np.linspace(0, 0.2499, 50)
    assert np.all(np.diff(rho(3, ts)) > 0)
    assert rho(3, 0.25 - 1e-12) > 1e11
    with pytest.raises(DomainError) as exc:
        rho(3, 0.25)
    assert exc.value.blowup == 0.25
    with pytest.raises(DomainError):
        rho(3, -0.1)


def test_ode_comparison_examples():
    assert ode_comparison(6.0, 0.0, 0.1, 3) == pytest.approx(rho(3, 0.1))
    assert ode_comparison(5.0, 0.3, 0.3, 4) == 5.0
    with pytest.raises(DomainError) as exc:
        ode_comparison(12.0, 0.0, 0.2, 3)
    assert exc.value.blowup == pytest.approx(1 / 8)


@given(R0=st.floats(0.5, 50), a=st.floats(0, 1), b=st.floats(0, 1), n=st.integers(3, 8))
def test_ode_comparison_semigroup(R0, a, b, n):
    tb = n / (2 * R0)
    t1 = 0.9 * tb * min(a, b)
    t2 = 0.9 * tb * max(a, b)
    mid = ode_comparison(R0, 0.0, t1, n)
    assert ode_comparison(mid, t1, t2, n) == pytest.approx(ode_comparison(R0, 0.0, t2, n),
                                                           rel=1e-12)


def test_max_principle_round(round_trace_256):
    rep = check_max_principle(round_trace_256)
    assert rep.passed and abs(rep.worst_margin) < 1e-6


def test_max_principle_perturbed(pert_trace_256):
    rep = check_max_principle(pert_trace_256)
    assert rep.passed and rep.details["worst_rho_margin"] > 0


def test_max_principle_detects_injected_drop(pert_trace_256):
    r = np.array(pert_trace_256.r_min)
    k = 40
    r[k] *= 0.99
    rep = check_max_principle(_rebuild(pert_trace_256, r_min=r))
    assert not rep.passed and rep.status == "fail"
    assert rep.worst_location[0] == pytest.approx(pert_trace_256.times[k])


def test_max_principle_requires_normalization():
    tr = run_flow(make_round_profile(3, 2.0, 64), FlowConfig(max_time=0.01, record_width=False))
    with pytest.raises(PreconditionError):
        check_max_principle(tr)


def test_extinction_bound(round_trace_256, pert_trace_256):
    assert check_extinction_bound(round_trace_256).passed
    rep = check_extinction_bound(pert_trace_256)
    assert rep.passed and rep.worst_margin > 0.01


def test_scalar_evolution_round():
    tr = run_flow(make_round_profile(3, 1.0, 256),
                  FlowConfig(max_time=0.05, sample_cadence=4e-4, record_width=False))
    rep = check_scalar_evolution(tr)
    assert rep.passed
    assert rep.details["residual_max"] < 1e-3
    # Einstein: |Ric|^2 = R^2 / n
    assert abs(rep.details["inequality_min_relative"]) < 1e-6


def test_scalar_evolution_detects_wrong_clock():
    tr = run_flow(make_round_profile(3, 1.0, 128),
                  FlowConfig(max_time=0.05, sample_cadence=1e-3, record_width=False))
    assert check_scalar_evolution(tr).passed
    bad = _rebuild(tr, times=tr.times * 1.05)
    assert not check_scalar_evolution(bad).passed


def test_scalar_evolution_cadence_precondition():
    tr = run_flow(make_round_profile(3, 1.0, 64), FlowConfig(max_time=0.01, sample_cadence=0.01))
    with pytest.raises(PreconditionError):
        check_scalar_evolution(tr)


def test_harnack_factor_arithmetic():
    # round, x = y, t1 = 0.1, t2 = 0.2: LHS = rho(0.1) = 10, RHS = 2 * rho(0.2) = 60
    assert harnack_factor(rho(3, 0.1), rho(3, 0.2), 0.0, 0.1, 0.2) == pytest.approx(6.0)


@given(t1=st.floats(1e-3, 0.24), t2=st.floats(1e-3, 0.24))
def test_harnack_round_identity(t1, t2):
    t1, t2 = min(t1, t2), max(t1, t2)
    if t2 - t1 < 1e-9:
        return
    assert harnack_factor(rho(3, t1), rho(3, t2), 0.0, t1, t2) >= 1.0


def test_harnack_round_and_perturbed(round_trace_256, pert_trace_256):
    assert check_harnack(round_trace_256, 2000).passed
    rep = check_harnack(pert_trace_256, 10_000, seed=3)
    assert rep.passed
    assert rep.samples_checked == 10_000


def test_harnack_deterministic(pert_trace_256):
    a = check_harnack(pert_trace_256, 500, seed=11)
    b = check_harnack(pert_trace_256, 500, seed=11)
    assert a.as_dict() == b.as_dict()


def test_harnack_detects_injected_spike(pert_trace_256):
    tr = pert_trace_256
    k = 12
    states = list(tr.states[:k])
    states[k - 2] = states[k - 2].scaled(0.5)  # doubles R at one sample
    bad = FlowTrace(tr.n, tr.times[:k], tuple(states), tr.r_min[:k], tr.r_max[:k],
                    tr.diam[:k], tr.width_proxy[:k], np.nan, np.nan, np.nan, "time_horizon",
                    tr.material[:k])
    rep = check_harnack(bad, 2000)
    assert not rep.passed
    assert rep.worst_location[0] == pytest.approx(tr.times[k - 2])


def test_harnack_berger():
    tr = run_flow(normalize_berger(BergerState(1.0, 1.0, 1.1)), FlowConfig(max_time=0.2))
    assert check_harnack(tr, 1000).passed


def test_rm_le_scalar(round_trace_256, pert_trace_256):
    rep = check_rm_le_scalar(round_trace_256)
    assert rep.passed and rep.worst_margin == pytest.approx(5 / 6, abs=1e-4)
    assert check_rm_le_scalar(pert_trace_256).passed


def test_rm_le_scalar_gating_and_mutation():
    m = 32
    bad = field_from_sectional(3, np.r_[-0.1, np.ones(m - 1)], np.ones(m))
    assert check_rm_le_scalar(bad).status == "inapplicable"
    f = field_from_sectional(3, np.ones(m), np.ones(m))
    rm = np.array(f.rm_norm)
    rm[7] = 7.0
    forged = CurvatureField(3, f.k_rad, f.k_sph, f.ric_eigs, f.R, rm, 0.0)
    rep = check_rm_le_scalar(forged)
    assert not rep.passed and rep.worst_location[1] == 7


def test_backward_propagation_round(round_short_256):
    rep = check_backward_propagation(round_short_256, 0.06, 0.1, 1e-6, 7.6)
    assert rep.passed and rep.details["witness"] == 0 or rep.passed


def test_backward_propagation_perturbed_and_vacuity():
    cfg = FlowConfig(max_time=0.1, sample_cadence=0.01, record_width=False)
    tr = run_flow(sin_cubed(0.01), cfg)
    assert check_backward_propagation(tr, 0.06, 0.1, 0.5, 7.6).passed
    assert not check_backward_propagation(tr, 0.06, 0.1, 1e-12, 7.6).passed


def test_backward_propagation_gating():
    # at eps = 0.02 the pole curvature at t2 exceeds rho(t2) + 1: hypothesis unmet
    tr = run_flow(sin_cubed(0.02), FlowConfig(max_time=0.1, sample_cadence=0.01,
                                              record_width=False))
    assert check_backward_propagation(tr, 0.06, 0.1, 0.5, 7.6).status == "inapplicable"
    assert check_backward_propagation(tr, 0.06, 0.1, 0.5, 7.6, delta=10.0).status in ("pass", "fail")


def test_backward_propagation_preconditions(round_short_256):
    with pytest.raises(PreconditionError):
        check_backward_propagation(round_short_256, 0.04, 0.1, 0.5, 7.6)


def test_pinching_deficit(round_trace_256, pert_trace_256):
    tr = round_trace_256
    for t in (0.0, 0.1, 0.2):
        i = tr.index_of(t)
        assert pinching_deficit(tr.fields[i], t) < 1e-3 * rho(3, t)
    p = pert_trace_256
    assert pinching_deficit(p.fields[0], 0.0) > 0.1
    # the scale-free spread of sectional curvatures shrinks along the flow
    spread = []
    for t in (0.0, 0.06, 0.1):
        f = p.fields[p.index_of(t)]
        k = np.concatenate([f.k_rad, f.k_sph])
        spread.append((k.max() - k.min()) / k.mean())
    assert spread[0] > spread[1] > spread[2]
    with pytest.raises(DomainError):
        pinching_deficit(tr.fields[0], 0.3)


def test_distance_distortion_round(round_short_256):
    tr = round_short_256
    rep = check_distance_distortion(tr, pairs=[(0, tr.states[0].m - 1)])
    assert rep.passed
    i = tr.index_of(0.1)
    assert tr.diam[i] == pytest.approx(np.pi * np.sqrt(0.6), rel=1e-8)
    t = tr.times[1:]
    c_exact = np.max(np.pi * (1 - np.sqrt(1 - 4 * t)) / np.sqrt(t))
    assert rep.details["c_fit"] == pytest.approx(c_exact, rel=1e-6)


def test_distance_distortion_perturbed_and_reversed(pert_short_256):
    tr = pert_short_256
    assert check_distance_distortion(tr, seed=5).passed
    rev = dataclasses.replace(tr, diam=tr.diam[::-1], material=tr.material[::-1])
    assert not check_distance_distortion(rev, seed=5).passed


def test_checks_are_deterministic(pert_short_256):
    a = check_distance_distortion(pert_short_256, seed=9).as_dict()
    b = check_distance_distortion(pert_short_256, seed=9).as_dict()
    assert a == b


def test_lemma_assertion_recorded():
    tr = run_flow(make_round_profile(3, 1.0, 128),
                  FlowConfig(max_time=0.12, lemma_checkpoints=(0.1,), record_width=False))
    entry = tr.metadata["lemma_checks"][0]
    assert entry["applicable"] and np.log(entry["max_rm"]) < entry["log_C"]
