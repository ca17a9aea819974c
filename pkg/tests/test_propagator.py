import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm
from scipy.special import lambertw

from cocycle_lab.baseflow import BasePoint, FlowSpec, advance, orbit_points
from cocycle_lab.errors import CompositionMismatchError, InvalidInputError, NumericalBlowupError
from cocycle_lab.kinetic import constant_generator, evaluate
from cocycle_lab.propagator import (block_matrices, cocycle_compose, liouville_check, propagate,
                                    small_time_bracket)

from conftest import qp_dissipative, qp_flow, qp_frictionless


@pytest.mark.parametrize("alpha,beta", [(0.0, -1.0), (3.0, 2.0), (2.0, 1.0), (0.0, 1.0), (0.5, -0.3)])
def test_constant_matches_matrix_exponential(alpha, beta):
    A = constant_generator(alpha, beta)
    M = np.array([[0.0, 1.0], [-beta, -alpha]])
    for t in (0.37, 2.0, -1.5):
        P = propagate(A, FlowSpec(), BasePoint((0.0,)), t).matrix
        assert np.allclose(P, expm(M * t), rtol=1e-10, atol=1e-12)


def _ivp(A, flow, w, t):
    def rhs(s, y):
        p = orbit_points(flow, w, np.array([s]))
        a, b = A.coefficients(p)
        M = np.array([[0.0, 1.0], [-b[0], -a[0]]])
        return (M @ y.reshape(2, 2)).reshape(-1)

    sol = solve_ivp(rhs, (0.0, t), np.eye(2).reshape(-1), method="DOP853", rtol=1e-12, atol=1e-13)
    return sol.y[:, -1].reshape(2, 2)


@pytest.mark.parametrize("make", [qp_dissipative, qp_frictionless])
def test_quasi_periodic_matches_independent_solver(make):
    A, flow = make(), qp_flow()
    w = BasePoint((0.15, 0.8))
    P = propagate(A, flow, w, 3.0).matrix
    assert np.allclose(P, _ivp(A, flow, w, 3.0), rtol=1e-8, atol=1e-9)


def test_backward_is_inverse():
    A, flow = qp_dissipative(), qp_flow()
    w = BasePoint((0.4, 0.2))
    P = propagate(A, flow, w, 1.7).matrix
    Q = propagate(A, flow, advance(flow, w, 1.7), -1.7).matrix
    assert np.allclose(Q @ P, np.eye(2), atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_cocycle_law_property(s, t):
    A, flow = qp_dissipative(), qp_flow()
    w = BasePoint((0.33, 0.61))
    lhs = propagate(A, flow, w, s + t).matrix
    rhs = propagate(A, flow, advance(flow, w, s), t).matrix @ propagate(A, flow, w, s).matrix
    assert np.linalg.norm(lhs - rhs) < 1e-6


def test_compose_and_mismatch():
    A, flow = qp_frictionless(), qp_flow()
    w = BasePoint((0.1, 0.2))
    r = propagate(A, flow, w, 0.8)
    l_ = propagate(A, flow, advance(flow, w, 0.8), 1.1, t_start=0.8)
    c = cocycle_compose(l_, r, flow)
    assert np.allclose(c.matrix, propagate(A, flow, w, 1.9).matrix, atol=1e-10)
    with pytest.raises(CompositionMismatchError):
        cocycle_compose(propagate(A, flow, w, 1.0, t_start=0.5), r, flow)
    with pytest.raises(CompositionMismatchError):
        cocycle_compose(propagate(A, flow, w, 1.0, t_start=0.8), r, flow)


def test_liouville_determinant():
    A, flow = qp_dissipative(), qp_flow()
    assert liouville_check(A, flow, BasePoint((0.5, 0.5)), 5.0) < 1e-10
    P = propagate(qp_frictionless(), flow, BasePoint((0.5, 0.5)), 5.0).matrix
    assert abs(np.linalg.det(P) - 1.0) < 1e-9


def test_block_matrices_product():
    A, flow = qp_dissipative(), qp_flow()
    w = BasePoint((0.7, 0.1))
    mats = block_matrices(A, flow, w, [0.0, 0.5, 1.25, 2.0])
    P = mats[2] @ mats[1] @ mats[0]
    assert np.allclose(P, propagate(A, flow, w, 2.0).matrix, atol=1e-12)


def test_blowup_is_reported_with_time():
    A = constant_generator(0.0, -100.0)
    with pytest.raises(NumericalBlowupError) as info:
        propagate(A, FlowSpec(), BasePoint((0.0,)), 5.0)
    assert 2.0 < info.value.time < 3.0


def test_step_validation():
    A = constant_generator(0.0, 1.0)
    with pytest.raises(InvalidInputError):
        propagate(A, FlowSpec(), BasePoint((0.0,)), 1.0, step=0.0)


@pytest.mark.parametrize("ah,eps", [(1.0, 0.1), (3.5, 0.05), (21.0, 0.2), (0.2, 0.4)])
def test_small_time_bracket_lambert_oracle(ah, eps):
    # tau^2 Ah e^(Ah tau) = eps  <=>  tau = 2 W(sqrt(eps Ah) / 2) / Ah
    want = 2.0 * lambertw(math.sqrt(eps * ah) / 2.0).real / ah
    assert small_time_bracket(ah, eps) == pytest.approx(want, rel=1e-12)


def test_error_bound_reported():
    A = constant_generator(0.0, 1.0)
    p = propagate(A, FlowSpec(), BasePoint((0.0,)), 2.0, step=1e-2)
    ah = A.norm_bound()
    assert p.error_bound == pytest.approx(ah ** 5 * math.exp(ah) * 1e-8 * 2.0)
    assert np.linalg.norm(p.matrix - expm(np.array([[0, 1], [-1, 0.0]]) * 2.0)) < p.error_bound
