"""Numerical laboratory for continuous-time kinetic linear cocycles over measure-preserving flows."""

__version__ = "0.1.0"

from .baseflow import BasePoint, FlowSpec, SampleSet, advance, sample_measure  # noqa: E402
from .errors import CocycleLabError  # noqa: E402
from .kinetic import (ConstantField, GridField, KineticGenerator, TrigPolynomial,  # noqa: E402
                      constant_generator)
from .propagator import propagate  # noqa: E402
from .spectrum import full_spectrum, le_functional  # noqa: E402

__all__ = [
    "BasePoint", "FlowSpec", "SampleSet", "advance", "sample_measure", "CocycleLabError",
    "ConstantField", "GridField", "KineticGenerator", "TrigPolynomial", "constant_generator",
    "propagate", "full_spectrum", "le_functional", "__version__",
]
