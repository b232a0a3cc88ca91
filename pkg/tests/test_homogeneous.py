from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ricci_lab.errors import DomainError
from ricci_lab.homogeneous import (BergerState, berger_c0_distance, berger_curvature,
                                   berger_rhs, curvature_operator, milnor_ricci,
                                   normalize_berger, ricci_velocity, round_berger)
from ricci_lab.warped import curvature, make_round_profile

pos = st.floats(0.2, 5.0)


def test_state_sorted_and_validated():
    b = BergerState(3.0, 1.0, 2.0)
    assert (b.lambda1, b.lambda2, b.lambda3) == (1.0, 2.0, 3.0)
    for bad in ((0.0, 1.0, 1.0), (-1.0, 1.0, 1.0), (np.nan, 1.0, 1.0)):
        with pytest.raises(DomainError):
            BergerState(*bad)


@given(pos, pos, pos)
def test_frame_curvature_matches_milnor(a, b, c):
    assert np.allclose(berger_curvature((a, b, c)).ricci, milnor_ricci((a, b, c)),
                       rtol=1e-10, atol=1e-10)


def test_round_berger_matches_round_profile():
    b = round_berger(6.0)
    cur = berger_curvature(b)
    assert cur.R == pytest.approx(6.0, rel=1e-13)
    assert cur.sec_min == pytest.approx(1.0) and cur.sec_max == pytest.approx(1.0)
    assert np.allclose(curvature(make_round_profile(3, 1.0, 256)).R, cur.R, rtol=2e-5)


def test_known_ricci_value():
    cur = berger_curvature((1.0, 1.0, 1.2))
    assert np.allclose(cur.ricci, [1.6, 1.6, 2.4], rtol=1e-12)
    assert cur.R == pytest.approx(5.6)


@given(pos, pos, pos, st.floats(0.1, 10.0))
def test_scaling(a, b, c, mu):
    R = berger_curvature((a, b, c)).R
    assert berger_curvature((mu * a, mu * b, mu * c)).R == pytest.approx(R / mu, rel=1e-10)


def test_near_round_perturbation():
    base = berger_curvature((1.0, 1.0, 1.0)).ricci
    near = berger_curvature((1.0, 1.0, 1.0 + 1e-6)).ricci
    assert np.max(np.abs(near - base)) < 1e-5


def test_round_velocity():
    # g(t) = (1 - 4t) g0 gives d lambda / dt = -4 for lambda(0) = 1
    assert np.allclose(berger_rhs(round_berger(6.0)), -4.0, rtol=1e-13)


@given(pos, pos, pos)
def test_velocity_permutation_equivariance(a, b, c):
    v = ricci_velocity((a, b, c))
    assert np.allclose(ricci_velocity((c, a, b)), v[[2, 0, 1]], rtol=1e-12, atol=1e-14)


def test_curvature_operator_symmetric_and_positive_near_round():
    Q = curvature_operator((1.0, 1.0, 1.1))
    assert np.allclose(Q, Q.T)
    assert np.all(np.linalg.eigvalsh(Q) > 0)


def test_normalize_and_distance():
    b = normalize_berger(BergerState(1.0, 1.0, 1.1), 6.0)
    assert berger_curvature(b).R == pytest.approx(6.0, rel=1e-12)
    assert berger_c0_distance(round_berger()) == 0.0
    assert berger_c0_distance(b) > 0
