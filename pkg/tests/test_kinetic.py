import math

import numpy as np
import pytest

from cocycle_lab.baseflow import BasePoint, FlowSpec, advance, orbit_points
from cocycle_lab.errors import ClassViolationError, InvalidInputError
from cocycle_lab.kinetic import (BottomRowPerturbation, ConstantField, GridField, KineticGenerator,
                                 TrigPolynomial, apply_perturbation, audit_points,
                                 constant_generator, evaluate, load_grid_csv, metric_distance,
                                 on_support, shear_perturbation, torsor_difference, write_grid_csv)

from conftest import qp_flow


def test_constant_matrix_layout():
    A = constant_generator(3.0, 2.0)
    assert np.array_equal(evaluate(A, BasePoint((0.0,))), [[0.0, 1.0], [-2.0, -3.0]])
    assert A.class_tag == "dissipative"
    assert constant_generator(0.0, 1.0).class_tag == "frictionless"


def test_trig_polynomial_values_and_bounds():
    f = TrigPolynomial(0.5, (((1, 0), 1.0, 0.0), ((1, 2), 0.0, -0.25)))
    pts = np.array([[0.1, 0.7], [0.0, 0.0], [0.5, 0.25]])
    want = 0.5 + np.cos(2 * np.pi * pts[:, 0]) - 0.25 * np.sin(2 * np.pi * (pts[:, 0] + 2 * pts[:, 1]))
    assert np.allclose(f(pts), want, atol=1e-14)
    dense = np.random.default_rng(0).random((4000, 2))
    assert np.max(np.abs(f(dense))) <= f.sup_abs()
    assert np.min(f(dense)) >= f.lower_bound()


def test_grid_interpolation_and_roundtrip(tmp_path):
    g = GridField(np.array([[0.0, 1.0], [2.0, 3.0]]))
    # periodic bilinear: the midpoint of the cell averages the four corners
    assert g(np.array([[0.25, 0.25]]))[0] == pytest.approx(1.5)
    assert g(np.array([[0.5, 0.0]]))[0] == pytest.approx(2.0)
    p = tmp_path / "g.csv"
    write_grid_csv(p, g)
    assert load_grid_csv(p) == g
    p.write_text("2,2,3\n1\n2\n")
    with pytest.raises(InvalidInputError):
        load_grid_csv(p)


def test_class_contracts():
    with pytest.raises(ClassViolationError):
        KineticGenerator(ConstantField(0.1), ConstantField(1.0), "frictionless")
    with pytest.raises(ClassViolationError):
        KineticGenerator(TrigPolynomial(0.5, (((1,), 0.6, 0.0),)), ConstantField(1.0), "dissipative")
    KineticGenerator(TrigPolynomial(0.5, (((1,), 0.4, 0.0),)), ConstantField(1.0), "dissipative")


def test_frictionless_rejects_friction_segment():
    A = constant_generator(0.0, 1.0, "frictionless")
    flow = FlowSpec(frequencies=(0.3,))
    H = BottomRowPerturbation(0.2, 0.0, shear_perturbation(BasePoint((0.0,)), 0, 0.5, 0).support)
    with pytest.raises(ClassViolationError):
        apply_perturbation(A, H, flow)


def test_segment_support_and_size():
    flow = qp_flow()
    A = constant_generator(0.0, 1.0)
    w = BasePoint((0.2, 0.4))
    B = apply_perturbation(A, shear_perturbation(w, 1.0, 0.5, 0.07), flow)
    on = orbit_points(flow, w, np.array([1.0, 1.2, 1.5]))
    a, b = B.coefficients(on)
    assert np.allclose(b, 1.0 - 0.07)
    assert np.allclose(evaluate(B, advance(flow, w, 1.2)), [[0, 1], [-0.93, 0]])
    off = orbit_points(flow, w, np.array([0.5, 2.0]))
    assert np.allclose(B.coefficients(off)[1], 1.0)
    assert metric_distance(A, B) == pytest.approx(0.07)
    pts = audit_points(A, B, 16)
    keep = ~on_support(B, pts)
    assert np.array_equal(np.asarray(A.coefficients(pts))[:, keep], np.asarray(B.coefficients(pts))[:, keep])


def test_disjoint_segments_size_is_max():
    flow = qp_flow()
    A = constant_generator(0.0, -1.0)
    w = BasePoint((0.2, 0.4))
    B = apply_perturbation(A, shear_perturbation(w, 0.0, 0.3, 0.05), flow)
    B = apply_perturbation(B, shear_perturbation(w, 2.0, 0.3, -0.08), flow)
    assert metric_distance(A, B) == pytest.approx(0.08)


def test_segment_rules():
    A = constant_generator(0.0, 1.0)
    with pytest.raises(InvalidInputError):
        apply_perturbation(A, shear_perturbation(BasePoint((0.0,)), 0.0, 0.5, 0.1),
                           FlowSpec(frequencies=(0.0,)))
    with pytest.raises(InvalidInputError):
        apply_perturbation(A, shear_perturbation(BasePoint((0.0,)), 0.0, 5.0, 0.1),
                           FlowSpec(frequencies=(0.5,)))


def test_torsor_difference_recovers_b():
    A = KineticGenerator(TrigPolynomial(1.0, (((1,), 0.2, 0.0),)), ConstantField(2.0))
    B = KineticGenerator(ConstantField(1.5), TrigPolynomial(-1.0, (((1,), 0.0, 0.3),)))
    V = torsor_difference(A, B)
    C = apply_perturbation(A, V)
    pts = np.linspace(0, 1, 33, endpoint=False)[:, None]
    for x, y in zip(C.coefficients(pts), B.coefficients(pts)):
        assert np.allclose(x, y, atol=1e-14)


def test_norm_bound_dominates_matrix_norm():
    A = KineticGenerator(TrigPolynomial(1.0, (((1, 1), 0.4, 0.0),)),
                         TrigPolynomial(-1.0, (((1, 0), 0.5, 0.0),)), "dissipative")
    pts = np.random.default_rng(1).random((500, 2))
    norms = [np.linalg.norm(evaluate(A, BasePoint(tuple(p))), 2) for p in pts]
    assert max(norms) <= A.norm_bound()
