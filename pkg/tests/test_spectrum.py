import math

import numpy as np
import pytest

from cocycle_lab.baseflow import BasePoint, FlowSpec, sample_measure
from cocycle_lab.errors import DegenerateFrameError, InvalidInputError
from cocycle_lab.kinetic import constant_generator
from cocycle_lab.spectrum import (fekete_sequence, full_spectrum, le_functional, line_angle,
                                  log_norm_sequence, oseledets_directions, sign_normalize,
                                  top_exponent)

from conftest import qp_dissipative, qp_flow

FLOW1 = FlowSpec()
W0 = BasePoint((0.0,))


def _eig_real(alpha, beta):
    M = np.array([[0.0, 1.0], [-beta, -alpha]])
    return sorted(np.linalg.eigvals(M).real, reverse=True)


@pytest.mark.parametrize("alpha,beta", [(0.0, -1.0), (1.0, -2.0), (0.5, 1.0), (3.0, 2.0), (0.0, 1.0)])
def test_constant_spectrum_matches_eigenvalues(alpha, beta):
    est = full_spectrum(constant_generator(alpha, beta), FLOW1, W0, horizon=200.0)
    l1, l2 = _eig_real(alpha, beta)
    assert est.lambda1 == pytest.approx(l1, abs=2e-2)
    assert est.lambda2 == pytest.approx(l2, abs=2e-2)
    assert est.lambda1 + est.lambda2 == pytest.approx(-alpha, abs=1e-6)


def test_history_and_convergence_flag():
    est = top_exponent(constant_generator(0.0, -1.0), FLOW1, W0, horizon=100.0)
    assert est.converged
    ts = [t for t, _ in est.history]
    assert ts == sorted(ts) and ts[-1] == pytest.approx(100.0)


def test_seed_reproducible():
    A, flow, w = qp_dissipative(), qp_flow(), BasePoint((0.2, 0.7))
    a = top_exponent(A, flow, w, 50.0, seed=3)
    b = top_exponent(A, flow, w, 50.0, seed=3)
    assert a.lambda1 == b.lambda1 and a.history == b.history


def test_frame_of_saddle():
    fr = oseledets_directions(constant_generator(0.0, -1.0), FLOW1, W0)
    assert not fr.degenerate
    assert line_angle(fr.e1, [1.0, 1.0]) < 1e-8
    assert line_angle(fr.e2, [1.0, -1.0]) < 1e-8
    assert fr.angle == pytest.approx(math.pi / 2, abs=1e-8)


def test_rotation_frame_degenerate():
    fr = oseledets_directions(constant_generator(0.0, 1.0), FLOW1, W0)
    assert fr.degenerate
    with pytest.raises(DegenerateFrameError):
        fr.require()


def test_sign_normalize_and_line_angle():
    v = sign_normalize([-3.0, 4.0])
    assert np.allclose(v, [0.6, -0.8])
    assert line_angle([1, 0], [-1, 0]) == 0.0
    assert line_angle([1, 0], [1, 1]) == pytest.approx(math.pi / 4)


def test_log_norm_sequence_constant():
    seq = log_norm_sequence(constant_generator(0.0, -1.0), FLOW1, W0, 20)
    # ||exp(n [[0,1],[1,0]])|| = e^n exactly
    assert np.allclose(seq, np.arange(1, 21), atol=1e-9)


def test_le_functional_and_fekete_agree():
    A, flow = qp_dissipative(), qp_flow()
    sample = sample_measure(flow, 6, 1)
    le = le_functional(A, flow, sample, horizon=100.0)
    fk = fekete_sequence(A, flow, sample, 100)
    assert len(le.per_point) == 6 and le.stderr >= 0
    assert fk.a_over_n[-1] == pytest.approx(le.value, abs=0.05)
    subadd = np.array(fk.a)
    # subadditivity of the averaged sequence over the invariant sample holds approximately
    assert subadd[9] <= 2 * subadd[4] + 0.05


def test_input_validation():
    A = constant_generator(0.0, -1.0)
    with pytest.raises(InvalidInputError):
        top_exponent(A, FLOW1, W0, horizon=-1.0)
    with pytest.raises(InvalidInputError):
        fekete_sequence(A, FLOW1, sample_measure(FLOW1, 2, 0), 1)
