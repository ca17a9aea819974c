import math

import numpy as np
import pytest

from cocycle_lab.baseflow import BasePoint, FlowSpec, advance, sample_measure
from cocycle_lab.errors import InvalidInputError, NumericalDomainError, SwapInfeasibleError
from cocycle_lab.kinetic import constant_generator, metric_distance, on_support
from cocycle_lab.propagator import propagate
from cocycle_lab.spectrum import line_angle
from cocycle_lab.splitting import TRIVIAL, DOMINATED
from cocycle_lab.toolbox import (ConeSpec, ShearSpec, angle_theta, choose_cone_gamma,
                                 composed_propagator, cone_escape, conjugated_generator,
                                 global_mixing_sweep, mixing_perturbation, rotate_direction,
                                 rotate_vec, rotation_solution, shear_solution, swap_oseledets)

from conftest import kick_rotation, qp_dissipative, qp_flow, qp_frictionless

FLOW1 = FlowSpec()
# period 2, so unit-length segments do not wrap around
SLOW = FlowSpec(frequencies=(0.5,))
W0 = BasePoint((0.0,))
SADDLE = constant_generator(0.0, -1.0)
ZERO = constant_generator(0.0, 0.0)


def test_shear_solution():
    assert np.array_equal(shear_solution(ShearSpec(1.0, 1.0), 0.0), np.eye(2))
    assert np.array_equal(shear_solution(ShearSpec(2.0, 1.0), 0.5), [[1, 0], [1, 1]])


def test_angle_theta_against_vectors():
    for gamma, t, xi in [(0.3, 0.1, 0.05), (0.01, 0.1, 2.0), (0.5, 1.0, -0.4)]:
        u = np.array([gamma, 1.0])
        su = shear_solution(ShearSpec(xi, 1.0), t) @ u
        ref = math.acos(np.clip(u @ su / np.linalg.norm(u) / np.linalg.norm(su), -1, 1))
        assert angle_theta(t, gamma, xi) == pytest.approx(ref, abs=1e-10)
    assert angle_theta(0.3, 0.2, 0.0) == 0.0
    vals = [angle_theta(0.1, 0.01, x) for x in (0.1, 1.0, 10.0)]
    assert vals == sorted(vals)
    with pytest.raises(InvalidInputError):
        angle_theta(0.1, 0.0, 1.0)


def test_conjugated_generator():
    N0 = conjugated_generator(SADDLE, FLOW1, W0, 0.7, 0.0)
    assert np.allclose(N0, [[0, 0], [0.7, 0]], atol=1e-15)
    t, xi = 0.6, 0.4
    C = conjugated_generator(ZERO, FLOW1, W0, xi, t)
    assert np.allclose(C, [[-xi * t, -xi * t * t], [xi, xi * t]], atol=1e-12)
    C = conjugated_generator(qp_dissipative(), qp_flow(), BasePoint((0.2, 0.4)), 0.3, 0.8)
    assert abs(np.trace(C)) < 1e-9 and abs(np.linalg.det(C)) < 1e-9


def test_rotation_and_composition():
    R = rotation_solution(qp_frictionless(), qp_flow(), BasePoint((0.1, 0.6)), 0.5, 1.0).matrix
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-8)
    assert composed_propagator(SADDLE, SLOW, W0, 0.0, 1.0) < 1e-10
    assert composed_propagator(SADDLE, SLOW, W0, 0.1, 1.0) < 1e-6
    assert composed_propagator(qp_frictionless(), qp_flow(), BasePoint((0.3, 0.1)), 0.05, 1.0) < 1e-6


def test_cone_escape_examples():
    esc, t = cone_escape(ZERO, FLOW1, W0, 0.2, [0.0, 1.0], 0.3)
    assert esc and t == pytest.approx(0.2, abs=2e-3)
    esc, _ = cone_escape(constant_generator(0.0, 1.0), FLOW1, W0, 0.2, [0.0, 1.0], 0.3)
    assert esc
    with pytest.raises(InvalidInputError):
        cone_escape(ZERO, FLOW1, W0, 0.2, [1.0, 0.0], 0.3)


def test_choose_cone_gamma():
    g, th = choose_cone_gamma(ZERO, 0.1)
    assert 0 < g <= 0.5 and 0 < th < 0.5
    assert th == pytest.approx(0.27, abs=0.02)
    g1, _ = choose_cone_gamma(1.0, 0.1)
    g10, _ = choose_cone_gamma(10.0, 0.1)
    assert g10 < g1
    rng = np.random.default_rng(0)
    for _ in range(100):
        v = np.array([rng.uniform(-g, g) * 0.999, 1.0])
        assert cone_escape(ZERO, FLOW1, W0, g, v, th)[0]


def test_rotate_identity_case():
    B, plan, _ = rotate_direction(SADDLE, FLOW1, W0, [1, 0], [1, 0], 0.1)
    assert B is SADDLE and plan.size == 0.0


# near the vertical a shear of size 0.05 turns lines by at most about 0.004 rad
@pytest.mark.parametrize("u,angle,case", [((1.0, 0.0), 0.01, 1), ((0.001, 1.0), 0.003, 2)])
def test_rotate_cases(u, angle, case):
    u = np.array(u)
    v = rotate_vec(u, angle)
    B, plan, _ = rotate_direction(SADDLE, FLOW1, W0, u, v, 0.1)
    assert plan.audit["case"] == case
    assert plan.residuals["line_identity_rad"] < 1e-6
    assert metric_distance(SADDLE, B) < 0.1
    lhs = propagate(B, FLOW1, W0, 1.0).matrix @ u
    rhs = propagate(SADDLE, FLOW1, W0, 1.0).matrix @ v
    assert line_angle(lhs, rhs) < 1e-6
    if case == 2:
        assert plan.audit["coast"] == pytest.approx(plan.audit["tau_hat"])


def test_rotate_support_on_torus():
    A, flow, w = qp_frictionless(), qp_flow(), BasePoint((0.25, 0.5))
    B, plan, _ = rotate_direction(A, flow, w, [1.0, 0.2], rotate_vec([1.0, 0.2], 0.004), 0.2)
    g = np.stack(np.meshgrid(np.arange(16) / 16, np.arange(16) / 16), -1).reshape(-1, 2)
    off = ~on_support(B, g)
    assert off.sum() > 200
    assert np.array_equal(A.coefficients(g[off])[1], B.coefficients(g[off])[1])
    assert metric_distance(A, B) < 0.2
    assert B.class_tag == A.class_tag


@pytest.fixture(scope="module")
def kick():
    return kick_rotation()


@pytest.fixture(scope="module")
def kick_mix(kick):
    A, flow = kick
    return mixing_perturbation(A, flow, BasePoint((0.1, 0.3)), 200.0, 0.2)


def test_swap_feasible_and_monotone_in_epsilon(kick, kick_mix):
    A, flow = kick
    w = advance(flow, BasePoint((0.1, 0.3)), kick_mix.plan.audit["swap_times"][0])
    for eps in (0.2, 0.4):
        plan = swap_oseledets(A, flow, w, 2, eps)
        assert plan.residuals["swap_rad"] < 1e-4
        assert plan.size < eps


@pytest.mark.parametrize("m", [1, 5, 20, 50])
def test_swap_infeasible_for_dominated(m):
    with pytest.raises(SwapInfeasibleError, match="budget"):
        swap_oseledets(SADDLE, FLOW1, W0, m, 0.01)


def test_swap_bad_m():
    with pytest.raises(InvalidInputError):
        swap_oseledets(SADDLE, FLOW1, W0, 0, 0.1)


def test_mixing_kick(kick_mix):
    r = kick_mix
    lam1 = r.plan.audit["lambda1"]
    assert 0.3 <= lam1 <= 1.0
    assert abs(r.exponent) < 0.1
    assert r.control > lam1 - 0.05
    assert r.converged
    assert r.plan.size < 0.2


def test_sweep_trivial_and_dominated_untouched():
    s = sample_measure(FLOW1, 3, 0)
    for A, label in [(constant_generator(0.0, 1.0), TRIVIAL), (SADDLE, DOMINATED)]:
        res = global_mixing_sweep(A, FLOW1, s, 1.0, 100.0, 0.2)
        assert res.eligible == 0 and res.le_after == res.le_before
        assert all(p is None for p in res.plans)
        assert res.report.fractions[label] == 1.0
