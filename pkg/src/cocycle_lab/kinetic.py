"""Kinetic generators ``A(w) = [[0, 1], [-beta(w), -alpha(w)]]``.

Coefficient fields come in three evaluable forms (constant, finite Fourier sum,
periodic grid with multilinear interpolation), each with an exact sup bound.
Perturbations only touch the bottom row, so every generator built here stays
kinetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from .baseflow import BasePoint, FlowSpec, orbit_offsets, orbit_points, torus_distance
from .errors import ClassViolationError, InvalidInputError

GENERAL = "general"
FRICTIONLESS = "frictionless"
DISSIPATIVE = "dissipative"
CLASS_TAGS = (GENERAL, FRICTIONLESS, DISSIPATIVE)

TWO_PI = 2.0 * math.pi


# --------------------------------------------------------------------------
# coefficient fields
# --------------------------------------------------------------------------


class CoefficientField:
    """Interface for bounded real functions on the torus."""

    kind: str
    dimension: int | None = None

    def __call__(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sup_abs(self) -> float:
        raise NotImplementedError

    def lower_bound(self) -> float:
        raise NotImplementedError

    def is_zero(self) -> bool:
        return False

    def at(self, omega: BasePoint) -> float:
        return float(self(omega.as_array()[None, :])[0])


@dataclass(frozen=True)
class ConstantField(CoefficientField):
    value: float = 0.0
    kind = "constant"
    dimension = None

    def __call__(self, points):
        points = np.asarray(points)
        return np.full(points.shape[0], float(self.value))

    def sup_abs(self):
        return abs(float(self.value))

    def lower_bound(self):
        return float(self.value)

    def is_zero(self):
        return self.value == 0.0


@dataclass(frozen=True)
class TrigPolynomial(CoefficientField):
    """``c0 + sum_k a_k cos(2 pi k.w) + b_k sin(2 pi k.w)`` over integer vectors ``k``."""

    constant: float = 0.0
    terms: tuple[tuple[tuple[int, ...], float, float], ...] = ()
    kind = "trig_polynomial"

    def __post_init__(self):
        terms = []
        dims = set()
        for k, a, b in self.terms:
            k = tuple(int(x) for x in k)
            dims.add(len(k))
            terms.append((k, float(a), float(b)))
        if len(dims) > 1:
            raise InvalidInputError("trig terms with inconsistent frequency dimensions")
        object.__setattr__(self, "terms", tuple(terms))
        object.__setattr__(self, "constant", float(self.constant))

    @property
    def dimension(self):
        return len(self.terms[0][0]) if self.terms else None

    def __call__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.full(points.shape[0], self.constant)
        if not self.terms:
            return out
        if points.shape[1] != self.dimension:
            raise InvalidInputError(
                f"trig polynomial of dimension {self.dimension} evaluated on {points.shape[1]}-d points"
            )
        ks = np.array([k for k, _, _ in self.terms], dtype=float)
        a = np.array([t[1] for t in self.terms])
        b = np.array([t[2] for t in self.terms])
        phase = TWO_PI * (points @ ks.T)
        out += np.cos(phase) @ a + np.sin(phase) @ b
        return out

    def sup_abs(self):
        return abs(self.constant) + sum(abs(a) + abs(b) for _, a, b in self.terms)

    def lower_bound(self):
        return self.constant - sum(math.hypot(a, b) for _, a, b in self.terms)

    def is_zero(self):
        return self.constant == 0.0 and all(a == 0.0 and b == 0.0 for _, a, b in self.terms)


@dataclass(frozen=True)
class GridField(CoefficientField):
    """Values on the regular grid ``i/n`` of the torus, periodic multilinear interpolation."""

    values: np.ndarray = field(default_factory=lambda: np.zeros(2))
    kind = "grid_interpolated"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim < 1 or min(v.shape) < 2:
            raise InvalidInputError("grid needs at least 2 points per dimension")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("grid values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dimension(self):
        return self.values.ndim

    def __call__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.dimension:
            raise InvalidInputError("grid field evaluated on points of the wrong dimension")
        shape = np.array(self.values.shape)
        x = np.mod(points, 1.0) * shape
        i0 = np.floor(x).astype(int)
        frac = x - i0
        i0 %= shape
        i1 = (i0 + 1) % shape
        out = np.zeros(points.shape[0])
        d = self.dimension
        for corner in range(1 << d):
            w = np.ones(points.shape[0])
            idx = []
            for j in range(d):
                if corner >> j & 1:
                    w *= frac[:, j]
                    idx.append(i1[:, j])
                else:
                    w *= 1.0 - frac[:, j]
                    idx.append(i0[:, j])
            out += w * self.values[tuple(idx)]
        return out

    def __hash__(self):
        return hash((self.values.shape, self.values.tobytes()))

    def __eq__(self, other):
        return isinstance(other, GridField) and np.array_equal(self.values, other.values)

    def sup_abs(self):
        return float(np.max(np.abs(self.values)))

    def lower_bound(self):
        return float(np.min(self.values))

    def is_zero(self):
        return not np.any(self.values)


@dataclass(frozen=True)
class SumField(CoefficientField):
    parts: tuple[CoefficientField, ...] = ()
    kind = "sum"

    @property
    def dimension(self):
        dims = {p.dimension for p in self.parts} - {None}
        return dims.pop() if dims else None

    def __call__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(points.shape[0])
        for p in self.parts:
            out = out + p(points)
        return out

    def sup_abs(self):
        return sum(p.sup_abs() for p in self.parts)

    def lower_bound(self):
        return sum(p.lower_bound() for p in self.parts)

    def is_zero(self):
        return all(p.is_zero() for p in self.parts)


@dataclass(frozen=True)
class ScaledField(CoefficientField):
    base: CoefficientField = field(default_factory=ConstantField)
    factor: float = 1.0
    kind = "scaled"

    @property
    def dimension(self):
        return self.base.dimension

    def __call__(self, points):
        return self.factor * self.base(points)

    def sup_abs(self):
        return abs(self.factor) * self.base.sup_abs()

    def lower_bound(self):
        if self.factor >= 0:
            return self.factor * self.base.lower_bound()
        return -abs(self.factor) * self.base.sup_abs()

    def is_zero(self):
        return self.factor == 0 or self.base.is_zero()


def as_field(x) -> CoefficientField:
    if isinstance(x, CoefficientField):
        return x
    return ConstantField(float(x))


def load_grid_csv(path: str | Path) -> GridField:
    """Read a grid file: header ``dims,n1[,n2,...]`` then values in row-major order."""
    text = Path(path).read_text().strip().splitlines()
    if not text:
        raise InvalidInputError(f"empty grid file {path}")
    try:
        header = [int(x) for x in text[0].split(",")]
    except ValueError as exc:
        raise InvalidInputError(f"bad grid header in {path}: {text[0]!r}") from exc
    dims, shape = header[0], tuple(header[1:])
    if dims != len(shape) or dims < 1:
        raise InvalidInputError(f"grid header declares {dims} dims but lists {len(shape)} sizes")
    vals = [float(x) for line in text[1:] for x in line.replace(",", " ").split()]
    if len(vals) != int(np.prod(shape)):
        raise InvalidInputError(f"grid file has {len(vals)} values, expected {int(np.prod(shape))}")
    return GridField(np.array(vals).reshape(shape))


def write_grid_csv(path: str | Path, grid: GridField) -> None:
    v = grid.values
    lines = [",".join(str(x) for x in (v.ndim, *v.shape))]
    lines += [repr(float(x)) for x in v.reshape(-1)]
    Path(path).write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# perturbations and generators
# --------------------------------------------------------------------------

PathValue = Union[float, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class OrbitSegment:
    """The orbit piece ``phi^[start, start+duration](origin)``."""

    origin: BasePoint
    start: float
    duration: float

    def __post_init__(self):
        if self.start < 0:
            raise InvalidInputError("segment start time must be >= 0")
        if not self.duration > 0:
            raise InvalidInputError("segment duration must be > 0")


def _path_values(h, s: np.ndarray) -> np.ndarray:
    if callable(h):
        return np.broadcast_to(np.asarray(h(s), dtype=float), s.shape)
    return np.full(s.shape, float(h))


def _path_sup(h, duration: float) -> float:
    if callable(h):
        return float(np.max(np.abs(_path_values(h, np.linspace(0.0, duration, 257)))))
    return abs(float(h))


def _path_min(h, duration: float) -> float:
    if callable(h):
        return float(np.min(_path_values(h, np.linspace(0.0, duration, 257))))
    return float(h)


@dataclass(frozen=True)
class BottomRowPerturbation:
    """Additive change of the coefficients, ``alpha += h_alpha``, ``beta += h_beta``.

    With ``support=None`` the offsets are coefficient fields applied everywhere.
    With an :class:`OrbitSegment` support they are constants or functions of the
    local segment time ``s in [0, duration]`` and vanish off the segment.
    As a matrix the perturbation is ``[[0, 0], [-h_beta, -h_alpha]]``.
    """

    h_alpha: PathValue | CoefficientField = 0.0
    h_beta: PathValue | CoefficientField = 0.0
    support: OrbitSegment | None = None

    def __post_init__(self):
        if self.support is not None:
            for h in (self.h_alpha, self.h_beta):
                if isinstance(h, CoefficientField):
                    raise InvalidInputError("segment perturbations take constants or paths of time")

    def alpha_sup(self) -> float:
        if self.support is None:
            return as_field(self.h_alpha).sup_abs()
        return _path_sup(self.h_alpha, self.support.duration)

    def beta_sup(self) -> float:
        if self.support is None:
            return as_field(self.h_beta).sup_abs()
        return _path_sup(self.h_beta, self.support.duration)

    def alpha_min(self) -> float:
        if self.support is None:
            return as_field(self.h_alpha).lower_bound()
        return _path_min(self.h_alpha, self.support.duration)

    def is_traceless(self) -> bool:
        if self.support is None:
            return as_field(self.h_alpha).is_zero()
        return _path_sup(self.h_alpha, self.support.duration) == 0.0


def shear_perturbation(origin: BasePoint, start: float, duration: float, xi: float):
    """Constant shear ``[[0, 0], [xi, 0]]`` added on a segment (so ``beta -= xi``)."""
    return BottomRowPerturbation(h_alpha=0.0, h_beta=-float(xi),
                                 support=OrbitSegment(origin, float(start), float(duration)))


@dataclass(frozen=True)
class KineticGenerator:
    alpha: CoefficientField = field(default_factory=ConstantField)
    beta: CoefficientField = field(default_factory=ConstantField)
    class_tag: str = GENERAL
    segments: tuple[BottomRowPerturbation, ...] = ()
    flow: FlowSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_field(self.alpha))
        object.__setattr__(self, "beta", as_field(self.beta))
        if self.class_tag not in CLASS_TAGS:
            raise InvalidInputError(f"unknown class tag {self.class_tag!r}")
        if self.alpha.dimension and self.beta.dimension and self.alpha.dimension != self.beta.dimension:
            raise InvalidInputError("alpha and beta live on tori of different dimension")
        if self.segments and self.flow is None:
            raise InvalidInputError("segment perturbations need the flow they live on")
        self._check_class()

    # -- class contract ----------------------------------------------------
    def _check_class(self):
        if self.class_tag == FRICTIONLESS:
            if not self.alpha.is_zero() or not all(s.is_traceless() for s in self.segments):
                raise ClassViolationError("frictionless generator needs alpha == 0")
        elif self.class_tag == DISSIPATIVE:
            # dissipative means trace = -alpha < 0 everywhere
            low = self.alpha.lower_bound()
            if self.segments:
                low += min(0.0, min(s.alpha_min() for s in self.segments))
            if not low > 0:
                raise ClassViolationError(
                    f"dissipative generator needs inf alpha > 0 (certified lower bound {low:g})"
                )

    @property
    def dimension(self) -> int | None:
        d = self.alpha.dimension or self.beta.dimension
        if d is None and self.flow is not None:
            d = self.flow.dimension
        return d

    # -- bounds --------------------------------------------------------------
    def alpha_sup(self) -> float:
        return self.alpha.sup_abs() + max((s.alpha_sup() for s in self.segments), default=0.0)

    def beta_sup(self) -> float:
        return self.beta.sup_abs() + max((s.beta_sup() for s in self.segments), default=0.0)

    def norm_bound(self) -> float:
        """Certified ``A_hat >= sup ||A(w)||``: ``||U|| + |alpha| + |beta|`` with ``||U|| = 1``."""
        return 1.0 + self.alpha_sup() + self.beta_sup()

    # -- evaluation ----------------------------------------------------------
    def base_coefficients(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return self.alpha(points), self.beta(points)

    def coefficients(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Coefficients at arbitrary base points, including segment perturbations."""
        a, b = self.base_coefficients(points)
        if not self.segments:
            return a, b
        points = np.atleast_2d(np.asarray(points, dtype=float))
        a, b = a.copy(), b.copy()
        for seg in self.segments:
            s = _segment_local_time(self.flow, seg.support, points)
            on = ~np.isnan(s)
            if np.any(on):
                a[on] += _path_values(seg.h_alpha, s[on])
                b[on] += _path_values(seg.h_beta, s[on])
        return a, b

    def evaluate(self, omega: BasePoint) -> np.ndarray:
        a, b = self.coefficients(omega.as_array()[None, :])
        return np.array([[0.0, 1.0], [-b[0], -a[0]]])

    def support_windows(self, flow: FlowSpec, omega: BasePoint, lo: float, hi: float):
        """Orbit-time windows ``(a, b, perturbation)`` meeting ``[lo, hi]`` along the orbit of ``omega``."""
        if not self.segments:
            return []
        if flow != self.flow:
            raise InvalidInputError("generator perturbations live on a different flow")
        out = []
        for seg in self.segments:
            sup = seg.support
            anchor = _segment_anchor(flow, sup)
            for u in orbit_offsets(flow, omega, anchor, lo - sup.duration, hi):
                a, b = u, u + sup.duration
                if b > lo and a < hi:
                    out.append((a, b, seg))
        out.sort(key=lambda w: w[0])
        return out


def _segment_anchor(flow: FlowSpec, seg: OrbitSegment) -> BasePoint:
    from .baseflow import advance

    return advance(flow, seg.origin, seg.start)


def _segment_local_time(flow: FlowSpec, seg: OrbitSegment, points: np.ndarray, tol=1e-9):
    """Local time ``s`` with ``point = phi^(start+s)(origin)``, NaN if off the segment."""
    anchor = _segment_anchor(flow, seg).as_array()
    speeds = flow.speeds
    j = int(np.argmax(np.abs(speeds)))
    out = np.full(points.shape[0], np.nan)
    # candidate local times from the fastest coordinate, checked on all coordinates
    c = np.mod(points[:, j] - anchor[j], 1.0)
    period_j = 1.0 / abs(speeds[j])
    base = c / speeds[j] if speeds[j] > 0 else (c - 1.0) / speeds[j]
    base = np.mod(base, period_j)
    nk = int(math.ceil(seg.duration / period_j)) + 1
    for k in range(-1, nk + 1):
        s = base + k * period_j
        cand = (s >= -tol) & (s <= seg.duration + tol) & np.isnan(out)
        if not np.any(cand):
            continue
        img = anchor[None, :] + np.outer(s[cand], speeds)
        hit = np.all(torus_distance(img, points[cand]) < tol, axis=1)
        idx = np.flatnonzero(cand)[hit]
        out[idx] = np.clip(s[cand][hit], 0.0, seg.duration)
    return out


def on_support(G: KineticGenerator, points) -> np.ndarray:
    """Boolean mask of the points lying on some perturbation support of ``G``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    mask = np.zeros(points.shape[0], dtype=bool)
    for seg in G.segments:
        mask |= ~np.isnan(_segment_local_time(G.flow, seg.support, points))
    return mask


def evaluate(A: KineticGenerator, omega: BasePoint) -> np.ndarray:
    return A.evaluate(omega)


def constant_generator(alpha: float, beta: float, class_tag: str | None = None) -> KineticGenerator:
    """Constant-coefficient generator; the class tag is inferred when not given."""
    if class_tag is None:
        class_tag = FRICTIONLESS if alpha == 0 else (DISSIPATIVE if alpha > 0 else GENERAL)
    return KineticGenerator(ConstantField(alpha), ConstantField(beta), class_tag)


# --------------------------------------------------------------------------
# metrics and torsor action
# --------------------------------------------------------------------------

def _grid_points(dim: int, resolution: int) -> np.ndarray:
    axes = [np.arange(resolution) / resolution] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def audit_points(A: KineticGenerator, B: KineticGenerator, resolution: int, flow: FlowSpec | None = None):
    """Regular grid plus points sampled on every perturbation support of A or B."""
    dim = A.dimension or B.dimension or (flow.dimension if flow else 1)
    pts = [_grid_points(dim, resolution)]
    for G in (A, B):
        for seg in G.segments:
            sup = seg.support
            times = sup.start + np.linspace(0.0, sup.duration, 65)
            pts.append(orbit_points(G.flow, sup.origin, times))
    return np.concatenate(pts, axis=0)


def metric_distance(A: KineticGenerator, B: KineticGenerator, norm: str = "rho_zero",
                    resolution: int = 64) -> float:
    """Grid approximation of ``sup_w ||A(w) - B(w)||``.

    ``rho_inf`` and ``rho_zero`` coincide here because every field is an
    everywhere-defined representative.  Perturbation supports are sampled in
    addition to the grid since they have measure zero.
    """
    if norm not in ("rho_zero", "rho_inf"):
        raise InvalidInputError(f"unknown norm {norm!r}")
    if resolution < 2:
        raise InvalidInputError("resolution must be >= 2")
    if A.dimension and B.dimension and A.dimension != B.dimension:
        raise InvalidInputError("generators over different base dimensions")
    pts = audit_points(A, B, resolution)
    aA, bA = A.coefficients(pts)
    aB, bB = B.coefficients(pts)
    # difference matrix is [[0, 0], [-(db), -(da)]]: its norm is the row length
    return float(np.max(np.hypot(aA - aB, bA - bB)))


def apply_perturbation(A: KineticGenerator, H: BottomRowPerturbation,
                       flow: FlowSpec | None = None) -> KineticGenerator:
    """Return ``B = A + H`` on the support of ``H`` and ``B = A`` elsewhere."""
    if H.support is None:
        alpha = SumField((A.alpha, as_field(H.h_alpha))) if not as_field(H.h_alpha).is_zero() else A.alpha
        beta = SumField((A.beta, as_field(H.h_beta))) if not as_field(H.h_beta).is_zero() else A.beta
        return _with_class(replace(A, alpha=alpha, beta=beta, class_tag=GENERAL), A.class_tag,
                           alpha, beta, A.segments, A.flow)
    flow = flow or A.flow
    if flow is None:
        raise InvalidInputError("a segment perturbation needs the base flow")
    if A.flow is not None and A.flow != flow:
        raise InvalidInputError("perturbation flow differs from the generator's")
    if flow.is_stationary():
        raise InvalidInputError("stationary flow: segment would be a single point")
    if flow.dimension == 1 and H.support.duration >= 1.0 / abs(flow.speeds[0]):
        raise InvalidInputError("segment longer than the orbit period self-intersects")
    if H.support.origin.dimension != flow.dimension:
        raise InvalidInputError("segment origin has the wrong dimension")
    return _with_class(A, A.class_tag, A.alpha, A.beta, A.segments + (H,), flow)


def _with_class(A, tag, alpha, beta, segments, flow):
    try:
        return KineticGenerator(alpha, beta, tag, segments, flow)
    except ClassViolationError as exc:
        raise ClassViolationError(f"perturbation breaks the {tag} class: {exc}") from exc


def torsor_difference(A: KineticGenerator, B: KineticGenerator) -> BottomRowPerturbation:
    """The unique bottom-row field ``V`` with ``A + V = B`` (global support)."""
    if A.segments or B.segments:
        raise InvalidInputError("torsor difference is defined for unperturbed generators")
    return BottomRowPerturbation(
        h_alpha=SumField((B.alpha, ScaledField(A.alpha, -1.0))),
        h_beta=SumField((B.beta, ScaledField(A.beta, -1.0))),
    )
