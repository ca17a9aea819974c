import math

import numpy as np
import pytest

from cocycle_lab.baseflow import BasePoint, FlowSpec, sample_measure
from cocycle_lab.errors import InvalidInputError
from cocycle_lab.kinetic import ConstantField, TrigPolynomial
from cocycle_lab.schrodinger import PotentialSpec, energy_sweep, schrodinger_generator
from cocycle_lab.splitting import HYPERBOLIC, ZERO

from conftest import GOLDEN

FLOW = FlowSpec(frequencies=(GOLDEN,))


def test_generator_matrix():
    A = schrodinger_generator(ConstantField(2.0), 3.0)
    assert np.allclose(A.evaluate(BasePoint((0.3,))), [[0, 1], [-1.0, 0]])
    assert A.class_tag == "frictionless"
    Q = TrigPolynomial(0.0, (((1,), 1.0, 0.0),))
    B = schrodinger_generator(Q, 0.5)
    # at w = 0, Q = 1 so the bottom-left entry is Q - E = 0.5
    assert B.evaluate(BasePoint((0.0,)))[1, 0] == pytest.approx(0.5)


def test_potential_bound():
    assert PotentialSpec(TrigPolynomial(0.5, (((1,), 1.0, 2.0),))).sup_bound >= 2.5


def test_constant_potential_flip():
    # Q = 2: hyperbolic below E = 2, zero spectrum above
    es = [1.0, 1.5, 1.9, 2.1, 2.5, 3.0]
    sw = energy_sweep(ConstantField(2.0), FLOW, es, sample_measure(FLOW, 2, 0), horizon=100.0)
    flips = sw.flip_energies()
    assert len(flips) == 1
    lo, hi, a, b = flips[0]
    assert (lo, hi, a, b) == (1.9, 2.1, HYPERBOLIC, ZERO)
    for row in sw.per_energy:
        assert row.mean_lambda1 == pytest.approx(math.sqrt(max(2.0 - row.E, 0.0)), abs=2e-2)
    assert sw.header()[0] == "E" and len(sw.rows()) == len(es)


def test_energy_validation():
    s = sample_measure(FLOW, 1, 0)
    with pytest.raises(InvalidInputError):
        energy_sweep(ConstantField(0.0), FLOW, [1.0, 0.0], s)
    with pytest.raises(InvalidInputError):
        energy_sweep(ConstantField(0.0), FLOW, [], s)
