import math
from math import comb

import numpy as np
import pytest

from cocycle_lab.baseflow import BasePoint, FlowSpec
from cocycle_lab.kinetic import ConstantField, KineticGenerator, TrigPolynomial

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def qp_flow():
    return FlowSpec(dimension=2, frequencies=(1.0, GOLDEN))


def qp_dissipative():
    alpha = TrigPolynomial(1.0, (((1, 1), 0.4, 0.0),))
    beta = TrigPolynomial(-1.0, (((1, 0), 0.5, 0.0), ((0, 1), 0.0, 0.3)))
    return KineticGenerator(alpha, beta, "dissipative")


def qp_frictionless():
    beta = TrigPolynomial(0.5, (((1, 0), 1.0, 0.0), ((0, 1), 0.0, 0.7)))
    return KineticGenerator(ConstantField(0.0), beta, "frictionless")


def kick_rotation(alpha=0.0, K=20.0, n=8, period=13.51):
    """beta = 1 + alpha^2/4 - K ((1 + cos 2 pi w1)/2)^n over the flow (1/period, golden)."""
    c0 = comb(2 * n, n) / 4 ** n
    base = 1.0 + alpha * alpha / 4.0
    terms = tuple(((j, 0), -K * 2 * comb(2 * n, n + j) / 4 ** n, 0.0) for j in range(1, n + 1))
    beta = TrigPolynomial(base - K * c0, terms)
    tag = "dissipative" if alpha > 0 else "frictionless"
    A = KineticGenerator(ConstantField(alpha), beta, tag)
    return A, FlowSpec(dimension=2, frequencies=(1.0 / period, GOLDEN))


@pytest.fixture
def flow2():
    return qp_flow()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def w2():
    return BasePoint((0.1, 0.3))


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
