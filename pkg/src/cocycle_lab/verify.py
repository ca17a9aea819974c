"""Self-test suite behind ``cocycle-lab verify``: fast invariant checks with explicit tolerances."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .baseflow import BasePoint, FlowSpec, advance, sample_measure
from .kinetic import (FRICTIONLESS, ConstantField, KineticGenerator, TrigPolynomial,
                      audit_points, constant_generator, metric_distance, on_support)
from .propagator import error_constant, propagate, orbit_grid
from .schrodinger import schrodinger_generator
from .spectrum import full_spectrum
from .splitting import is_m_dominated
from .toolbox import (angle_theta, choose_cone_gamma, composed_propagator, cone_escape,
                      conjugated_generator, rotate_direction, rotate_vec)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float


def _check(name, value, tol, ok=None):
    value = float(value)
    return Check(name, bool(value < tol) if ok is None else bool(ok), value, float(tol))


def _qp_flow():
    return FlowSpec(dimension=2, frequencies=(1.0, 0.6180339887498949))


def check_constant_spectrum(step):
    A = constant_generator(0.0, -1.0)
    s = full_spectrum(A, FlowSpec(), BasePoint((0.0,)), 200.0, 1.0, step)
    return _check("constant spectrum (0,-1) -> +-1", max(abs(s.lambda1 - 1), abs(s.lambda2 + 1)), 1e-3)


def check_liouville(A, flow, omega, step):
    s = full_spectrum(A, flow, omega, 200.0, 1.0, step)
    return _check("liouville sum rule", s.liouville_defect, 1e-2)


def check_cocycle_law(A, flow, step, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for w in sample_measure(flow, 3, seed).points:
        for _ in range(4):
            s, t = rng.uniform(-2, 2, 2)
            lhs = propagate(A, flow, w, s + t, step).matrix
            rhs = propagate(A, flow, advance(flow, w, s), t, step).matrix @ propagate(A, flow, w, s, step).matrix
            worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return _check("cocycle law", worst, 1e-6)


def check_composition(A, flow, step):
    w = sample_measure(flow, 1, 1).points[0]
    worst = max(composed_propagator(A, flow, w, xi, 0.3, step) for xi in (-0.5, 0.1, 0.7))
    return _check("composition identity", worst, 1e-6)


def check_conjugation(A, flow, step):
    w = sample_measure(flow, 1, 2).points[0]
    worst = 0.0
    for t in (0.1, 0.5, 1.0):
        M = conjugated_generator(A, flow, w, 0.3, t, step)
        worst = max(worst, abs(np.trace(M)), abs(np.linalg.det(M)))
    return _check("conjugated generator traceless and nilpotent", worst, 1e-8)


def check_cone_escape(step):
    A = constant_generator(0.0, -1.0)
    flow = FlowSpec()
    gamma, tau_hat = choose_cone_gamma(A, 0.1)
    rng = np.random.default_rng(0)
    ok = 0
    for g in rng.uniform(-gamma, gamma, 100) * (1 - 1e-9):
        out, _ = cone_escape(A, flow, BasePoint((0.0,)), gamma, (g, 1.0), tau_hat, step)
        ok += out
    return _check("cone escape 100/100", 100 - ok, 0.5)


def check_angle_bound(step):
    worst = -math.inf
    A = constant_generator(0.0, 0.0)
    flow = FlowSpec()
    gamma, tau = 0.01, 0.1
    from .toolbox import _rotation_pair
    u = np.array([gamma, 1.0])
    for xi in np.linspace(-1, 1, 9):
        _, R = _rotation_pair(A, flow, BasePoint((0.0,)), xi, tau, step)
        v = R @ u
        measured = math.acos(min(1.0, abs(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v))))
        worst = max(worst, angle_theta(tau, gamma, xi) - measured)
    return _check("shear angle at least the closed form", worst, 1e-6)


def check_rotation(step):
    A = constant_generator(0.0, -1.0, FRICTIONLESS)
    flow = FlowSpec(frequencies=(0.6180339887498949,))
    w = BasePoint((0.25,))
    u = np.array([1.0, 0.0])
    B, plan, _ = rotate_direction(A, flow, w, u, rotate_vec(u, 0.01), 0.1, step)
    d = metric_distance(A, B)
    pts = audit_points(A, A, 256, flow)
    keep = ~on_support(B, pts)
    off = np.array_equal(np.asarray(A.coefficients(pts))[:, keep], np.asarray(B.coefficients(pts))[:, keep])
    res = plan.residuals["line_identity_rad"]
    good = res < 1e-6 and d < 0.1 and off and B.class_tag == FRICTIONLESS
    return _check("rotation: identity, size, support, class", res, 1e-6, good)


def check_domination(step):
    A = constant_generator(0.0, -1.0)
    flow = FlowSpec()
    w = BasePoint((0.0,))
    lo = is_m_dominated(A, flow, w, 0.34, step).dominated
    hi = is_m_dominated(A, flow, w, 0.35, step).dominated
    return _check("domination flip near ln2/2", 0.0, 1.0, (not lo) and hi)


def check_schrodinger(step):
    A = schrodinger_generator(0.0, -1.0)
    s = full_spectrum(A, FlowSpec(), BasePoint((0.0,)), 200.0, 1.0, step)
    return _check("schrodinger Q=0, E=-1 -> lambda 1", abs(s.lambda1 - 1.0), 2e-2)


def check_kernel_parity(A, flow, step):
    if kernels.COMPILED is None:
        return Check("kernel parity (compiled unavailable)", True, 0.0, 1e-12)
    w = sample_measure(flow, 1, 3).points[0]
    g = orbit_grid(A, flow, w, 0.0, 2.0, step)
    ends = np.array([g.hs.size])
    a, _ = kernels.COMPILED.matrix_blocks(g.a, g.b, g.hs, ends, 1e12)
    b, _ = kernels.PURE.matrix_blocks(g.a, g.b, g.hs, ends, 1e12)
    return _check("kernel parity compiled/pure", float(np.max(np.abs(a - b))), 1e-12)


def default_system():
    beta = TrigPolynomial(-1.0, (((1, 0), 0.5, 0.0), ((0, 1), 0.0, 0.3)))
    alpha = TrigPolynomial(1.0, (((1, 1), 0.4, 0.0),))
    return KineticGenerator(alpha, beta, "dissipative"), _qp_flow()


def run_checks(A=None, flow=None, step=1e-3):
    """Run every check; ``A``/``flow`` default to a quasi-periodic dissipative system."""
    if A is None or flow is None:
        A, flow = default_system()
    omega = sample_measure(flow, 1, 0).points[0]
    out = [
        check_constant_spectrum(step),
        check_liouville(A, flow, omega, step),
        check_cocycle_law(A, flow, step),
        check_composition(A, flow, step),
        check_conjugation(A, flow, step),
        check_cone_escape(step),
        check_angle_bound(step),
        check_rotation(step),
        check_domination(step),
        check_schrodinger(step),
        check_kernel_parity(A, flow, step),
    ]
    # error bound sanity: the a-priori constant is finite for bounded generators
    out.append(_check("error bound finite", 0.0, 1.0, math.isfinite(error_constant(A))))
    return out
