"""Measure-preserving base flows: translations on the d-torus and periodic orbits.

Points live on ``[0, 1)^d``; all arithmetic is reduced mod 1 at every step so
long horizons do not drift.  For a translation flow Lebesgue measure is
invariant, which is what :func:`sample_measure` draws from.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidInputError

TORUS_TRANSLATION = "torus_translation"
PERIODIC_SUSPENSION = "periodic_suspension"
FLOW_KINDS = (TORUS_TRANSLATION, PERIODIC_SUSPENSION)


def _wrap(x: np.ndarray) -> np.ndarray:
    y = np.mod(x, 1.0)
    # np.mod(-1e-18, 1.0) == 1.0 in floating point
    y[y >= 1.0] = 0.0
    return y


@dataclass(frozen=True)
class BasePoint:
    coords: tuple[float, ...]

    def __post_init__(self):
        if len(self.coords) == 0:
            raise InvalidInputError("a base point needs at least one coordinate")
        for c in self.coords:
            if not (0.0 <= c < 1.0) or not math.isfinite(c):
                raise InvalidInputError(f"coordinate {c!r} outside [0, 1)")

    @classmethod
    def wrap(cls, coords: Sequence[float]) -> "BasePoint":
        arr = _wrap(np.asarray(coords, dtype=float).reshape(-1))
        return cls(tuple(float(c) for c in arr))

    @property
    def dimension(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


@dataclass(frozen=True)
class FlowSpec:
    """Linear flow on the torus.

    ``periodic_suspension`` is the one-dimensional flow of speed ``1/period``;
    its orbits are closed loops of length ``period``.
    """

    kind: str = TORUS_TRANSLATION
    dimension: int = 1
    frequencies: tuple[float, ...] = (1.0,)
    period: float | None = None

    def __post_init__(self):
        if self.kind not in FLOW_KINDS:
            raise InvalidInputError(f"unknown flow kind {self.kind!r}")
        if self.dimension < 1:
            raise InvalidInputError("flow dimension must be >= 1")
        if self.kind == PERIODIC_SUSPENSION:
            if self.period is None or not self.period > 0:
                raise InvalidInputError("periodic_suspension needs period > 0")
            if self.dimension != 1:
                raise InvalidInputError("periodic_suspension is one-dimensional")
            object.__setattr__(self, "frequencies", (1.0 / self.period,))
        else:
            if len(self.frequencies) != self.dimension:
                raise InvalidInputError(
                    f"{len(self.frequencies)} frequencies for dimension {self.dimension}"
                )
        object.__setattr__(self, "frequencies", tuple(float(f) for f in self.frequencies))
        if not all(math.isfinite(f) for f in self.frequencies):
            raise InvalidInputError("frequencies must be finite")

    @property
    def speeds(self) -> np.ndarray:
        return np.asarray(self.frequencies, dtype=float)

    def is_stationary(self) -> bool:
        return not np.any(self.speeds)


@dataclass(frozen=True)
class SampleSet:
    points: tuple[BasePoint, ...]
    seed: int
    count: int
    coords: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.coords is None:
            object.__setattr__(
                self, "coords", np.array([p.coords for p in self.points], dtype=float)
            )

    def __len__(self):
        return self.count

    def __iter__(self):
        return iter(self.points)

    def subset(self, indices: Sequence[int]) -> "SampleSet":
        pts = tuple(self.points[i] for i in indices)
        return SampleSet(pts, self.seed, len(pts))


def _check_point(flow: FlowSpec, omega: BasePoint):
    if omega.dimension != flow.dimension:
        raise InvalidInputError(
            f"base point of dimension {omega.dimension} on a {flow.dimension}-d flow"
        )


def advance(flow: FlowSpec, omega: BasePoint, t: float) -> BasePoint:
    """Return the time-``t`` image of ``omega`` under the flow."""
    _check_point(flow, omega)
    if not math.isfinite(t):
        raise InvalidInputError("flow time must be finite")
    if t == 0:
        return omega
    return BasePoint.wrap(omega.as_array() + flow.speeds * t)


def orbit_points(flow: FlowSpec, omega: BasePoint, times: np.ndarray) -> np.ndarray:
    """Vectorised :func:`advance`: array of shape ``(len(times), d)``."""
    _check_point(flow, omega)
    times = np.asarray(times, dtype=float)
    # split the product so that large times lose as little as possible
    shift = np.mod(np.outer(times, flow.speeds), 1.0)
    return _wrap(omega.as_array()[None, :] + shift)


def torus_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Componentwise distance mod 1 (values in [0, 1/2])."""
    d = np.abs(np.mod(np.asarray(a) - np.asarray(b), 1.0))
    return np.minimum(d, 1.0 - d)


def orbit_offsets(
    flow: FlowSpec,
    start: BasePoint,
    target: BasePoint,
    lo: float,
    hi: float,
    tol: float = 1e-9,
) -> list[float]:
    """All times ``u`` in ``[lo, hi]`` with ``advance(start, u) == target`` (within ``tol``)."""
    _check_point(flow, start)
    _check_point(flow, target)
    speeds = flow.speeds
    if flow.is_stationary():
        raise InvalidInputError("stationary flow: orbit segments are single points")
    j = int(np.argmax(np.abs(speeds)))
    fj = speeds[j]
    c = (target.coords[j] - start.coords[j]) % 1.0
    # u = (c + k) / fj  for integers k
    k_a, k_b = sorted((lo * fj - c, hi * fj - c))
    ks = np.arange(math.floor(k_a) - 1, math.ceil(k_b) + 2)
    us = (c + ks) / fj
    us = us[(us >= lo - tol) & (us <= hi + tol)]
    if us.size == 0:
        return []
    pts = orbit_points(flow, start, us)
    ok = np.all(torus_distance(pts, target.as_array()[None, :]) < tol, axis=1)
    return sorted(float(u) for u in us[ok])


def sample_measure(flow: FlowSpec, count: int, seed: int) -> SampleSet:
    """Seeded i.i.d. uniform sample of the invariant (Lebesgue) measure."""
    if count < 1:
        raise InvalidInputError("sample count must be >= 1")
    if seed < 0:
        raise InvalidInputError("seed must be a nonnegative integer")
    rng = np.random.default_rng(seed)
    coords = _wrap(rng.random((count, flow.dimension)))
    points = tuple(BasePoint(tuple(float(c) for c in row)) for row in coords)
    return SampleSet(points, seed, count)
