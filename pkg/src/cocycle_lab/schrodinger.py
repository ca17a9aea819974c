"""Continuous-time Schrödinger cocycles ``x'' + (E - Q(phi^t w)) x = 0`` and energy sweeps."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .baseflow import FlowSpec, SampleSet
from .errors import InvalidInputError
from .kinetic import (FRICTIONLESS, CoefficientField, ConstantField, KineticGenerator, ScaledField,
                      SumField, as_field)
from .parallel import ordered_map
from .propagator import DEFAULT_STEP
from .splitting import HYPERBOLIC, NEITHER, UNRESOLVED, ZERO, classify_frictionless

SWEEP_HEADER = ("E", "mean_lambda1", "hyperbolic_fraction", "zero_fraction", "unresolved_fraction")


@dataclass(frozen=True)
class PotentialSpec:
    Q: CoefficientField

    def __post_init__(self):
        object.__setattr__(self, "Q", as_field(self.Q))
        if not math.isfinite(self.Q.sup_abs()):
            raise InvalidInputError("potential must be bounded")

    @property
    def sup_bound(self) -> float:
        return self.Q.sup_abs()


@dataclass(frozen=True)
class EnergyRow:
    E: float
    mean_lambda1: float
    verdict: str
    hyperbolic_fraction: float
    zero_fraction: float
    unresolved_fraction: float

    def as_tuple(self):
        return (self.E, self.mean_lambda1, self.hyperbolic_fraction, self.zero_fraction,
                self.unresolved_fraction)


@dataclass(frozen=True)
class EnergySweep:
    energies: tuple[float, ...]
    per_energy: tuple[EnergyRow, ...]

    def rows(self):
        return [r.as_tuple() for r in self.per_energy]

    def header(self):
        return list(SWEEP_HEADER)

    def flip_energies(self):
        """Consecutive energy pairs across which the verdict changes."""
        out = []
        for a, b in zip(self.per_energy, self.per_energy[1:]):
            if a.verdict != b.verdict:
                out.append((a.E, b.E, a.verdict, b.verdict))
        return out


def schrodinger_generator(Q, E: float) -> KineticGenerator:
    """``[[0, 1], [Q - E, 0]]``, i.e. ``alpha = 0`` and ``beta = E - Q``."""
    pot = Q if isinstance(Q, PotentialSpec) else PotentialSpec(Q)
    q = pot.Q
    if isinstance(q, ConstantField):
        beta = ConstantField(float(E) - q.value)
    else:
        beta = SumField((ConstantField(float(E)), ScaledField(q, -1.0)))
    return KineticGenerator(ConstantField(0.0), beta, FRICTIONLESS)


def energy_sweep(Q, flow: FlowSpec, energies, sample: SampleSet, horizon: float = 200.0,
                 m: float = 5.0, step: float = DEFAULT_STEP, threads=None) -> EnergySweep:
    """One frictionless classification per energy.

    An energy is ``hyperbolic`` or ``zero_spectrum`` only when every sample
    point agrees; anything else (including ``neither``) is ``unresolved``.
    """
    energies = tuple(float(e) for e in energies)
    if not energies:
        raise InvalidInputError("energies must be nonempty")
    if any(not math.isfinite(e) for e in energies):
        raise InvalidInputError("energies must be finite")
    if any(b <= a for a, b in zip(energies, energies[1:])):
        raise InvalidInputError("energies must be strictly increasing")

    def one(E):
        A = schrodinger_generator(Q, E)
        rep = classify_frictionless(A, flow, sample, m, horizon, step, threads=1)
        lams = np.array([pv.lambda1 for pv in rep.per_point])
        fr = rep.fractions
        unres = fr.get(UNRESOLVED, 0.0) + fr.get(NEITHER, 0.0)
        if fr[HYPERBOLIC] == 1.0:
            verdict = HYPERBOLIC
        elif fr[ZERO] == 1.0:
            verdict = ZERO
        else:
            verdict = UNRESOLVED
        with np.errstate(invalid="ignore"):
            mean = float(np.nanmean(lams)) if np.any(np.isfinite(lams)) else math.nan
        return EnergyRow(E, mean, verdict, fr[HYPERBOLIC], fr[ZERO], unres)

    rows = tuple(ordered_map(one, energies, threads))
    return EnergySweep(energies, rows)
