import math

import pytest

from cocycle_lab.baseflow import BasePoint, FlowSpec, sample_measure
from cocycle_lab.errors import InvalidInputError, InvariantViolationError
from cocycle_lab.kinetic import KineticGenerator, ConstantField, constant_generator
from cocycle_lab.spectrum import oseledets_directions
from cocycle_lab.splitting import (DOMINATED, STABLE_DOMINATED, STABLE_TRIVIAL, TRIVIAL,
                                   UNDOMINATED, UNSTABLE_DOMINATED, ZERO, HYPERBOLIC,
                                   classify_dissipative, classify_frictionless, classify_sample,
                                   domination_ratio, is_m_dominated, is_m_hyperbolic)

FLOW1 = FlowSpec()
W0 = BasePoint((0.0,))
SADDLE = constant_generator(0.0, -1.0)


def test_ratio_closed_form():
    fr = oseledets_directions(SADDLE, FLOW1, W0)
    for m in (0.2, 0.5, 1.0):
        assert domination_ratio(SADDLE, FLOW1, W0, m, fr) == pytest.approx(math.exp(-2 * m), rel=1e-8)


def test_domination_threshold_flips():
    # e^{-2m} <= 1/2 exactly when m >= log(2)/2 = 0.3466
    assert not is_m_dominated(SADDLE, FLOW1, W0, 0.34).dominated
    assert is_m_dominated(SADDLE, FLOW1, W0, 0.35).dominated


def test_hyperbolic_threshold():
    # contraction e^{-m} <= 1/2 needs m >= log 2
    assert not is_m_hyperbolic(SADDLE, FLOW1, W0, 0.69).hyperbolic
    assert is_m_hyperbolic(SADDLE, FLOW1, W0, 0.70).hyperbolic


def test_rotation_unresolved_not_dominated():
    rep = is_m_dominated(constant_generator(0.0, 1.0), FLOW1, W0, 1.0)
    assert rep.unresolved and not rep.dominated


def test_bad_m():
    with pytest.raises(InvalidInputError):
        is_m_dominated(SADDLE, FLOW1, W0, 0.0)


def test_classify_sample_labels():
    s = sample_measure(FLOW1, 3, 0)
    rep = classify_sample(SADDLE, FLOW1, s, 1.0, horizon=60.0)
    assert rep.fractions[DOMINATED] == 1.0
    assert all(pv.verdict == DOMINATED for pv in rep.per_point)
    rot = classify_sample(constant_generator(0.0, 1.0), FLOW1, s, 1.0, horizon=60.0)
    assert rot.fractions[TRIVIAL] == 1.0
    assert rep.header() == ["omega1", "lambda1", "lambda2", "ratio", "verdict"]
    assert len(list(rep.rows())) == 3
    assert set(rep.fractions) == {TRIVIAL, DOMINATED, UNDOMINATED, "unresolved"}


def test_classify_frictionless():
    s = sample_measure(FLOW1, 2, 0)
    assert classify_frictionless(SADDLE, FLOW1, s, 1.0, 60.0).fractions[HYPERBOLIC] == 1.0
    assert classify_frictionless(constant_generator(0.0, 1.0), FLOW1, s, 1.0, 60.0).fractions[ZERO] == 1.0
    with pytest.raises(InvalidInputError):
        classify_frictionless(constant_generator(1.0, 1.0), FLOW1, s, 1.0, 60.0)


@pytest.mark.parametrize("alpha,beta,label", [
    (2.0, 2.0, STABLE_TRIVIAL),       # complex pair, both -1
    (3.0, 2.0, STABLE_DOMINATED),     # -1, -2
    (1.0, -2.0, UNSTABLE_DOMINATED),  # 1, -2
])
def test_classify_dissipative(alpha, beta, label):
    s = sample_measure(FLOW1, 2, 0)
    rep = classify_dissipative(constant_generator(alpha, beta), FLOW1, s, 1.0, 100.0)
    assert rep.fractions[label] == 1.0


def test_invariant_violation():
    # a generator tagged dissipative that actually has friction -1: sum rule breaks
    bogus = KineticGenerator.__new__(KineticGenerator)
    object.__setattr__(bogus, "__dict__", dict(constant_generator(0.0, 1.0).__dict__))
    bogus.__dict__["alpha"] = ConstantField(-1.0)
    bogus.__dict__["class_tag"] = "dissipative"
    s = sample_measure(FLOW1, 2, 0)
    with pytest.raises(InvariantViolationError):
        classify_dissipative(bogus, FLOW1, s, 1.0, 60.0)
