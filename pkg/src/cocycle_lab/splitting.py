"""Finite-window detection of dominated and hyperbolic splittings, and per-point classification."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .baseflow import BasePoint, FlowSpec, SampleSet, advance
from .errors import (CocycleLabError, DegenerateFrameError, InvalidInputError,
                     InvariantViolationError)
from .kinetic import DISSIPATIVE, FRICTIONLESS, KineticGenerator
from .parallel import ordered_map
from .propagator import DEFAULT_STEP, propagate
from .spectrum import OseledetsFrame, frames_along, full_spectrum

TRIVIAL_TOL = 2e-2
FRAME_HORIZON = 60.0

TRIVIAL = "trivial_spectrum"
DOMINATED = "dominated"
UNDOMINATED = "undominated_simple"
UNRESOLVED = "unresolved"
ZERO = "zero_spectrum"
HYPERBOLIC = "hyperbolic"
NEITHER = "neither"
STABLE_TRIVIAL = "stable_trivial"
STABLE_DOMINATED = "stable_dominated"
UNSTABLE_DOMINATED = "unstable_dominated"


@dataclass(frozen=True)
class DominationReport:
    m: float
    ratio: float
    dominated: bool
    hyperbolic: bool
    frame: OseledetsFrame
    omega: BasePoint
    unresolved: bool = False
    ratios: tuple[float, ...] = ()
    window: float = 0.0


@dataclass(frozen=True)
class PointVerdict:
    omega: BasePoint
    verdict: str
    lambda1: float
    lambda2: float
    ratio: float


@dataclass(frozen=True)
class ClassificationReport:
    per_point: tuple[PointVerdict, ...]
    m_used: float
    fractions: dict
    verdicts: tuple[str, ...]

    def rows(self):
        for pv in self.per_point:
            yield (*pv.omega.coords, pv.lambda1, pv.lambda2, pv.ratio, pv.verdict)

    def header(self):
        d = self.per_point[0].omega.dimension if self.per_point else 1
        return [f"omega{i + 1}" for i in range(d)] + ["lambda1", "lambda2", "ratio", "verdict"]


def _check_m(m):
    if not (m > 0) or not math.isfinite(m):
        raise InvalidInputError("m must be a positive time length")


def domination_ratio(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, m: float,
                     frame: OseledetsFrame, step: float = DEFAULT_STEP) -> float:
    """``||Phi(m) e2|| / ||Phi(m) e1||`` for a nondegenerate frame."""
    _check_m(m)
    frame.require()
    P = propagate(A, flow, omega, m, step).matrix
    return float(np.linalg.norm(P @ frame.e2) / np.linalg.norm(P @ frame.e1))


def window_length(m: float) -> float:
    return max(4.0 * m, 20.0)


def _window_report(A, flow, omega, m, step, horizon=FRAME_HORIZON):
    _check_m(m)
    W = window_length(m)
    count = int(math.floor(W - m + 1e-9)) + 1
    frames, _ = frames_along(A, flow, omega, count, horizon, step)
    ratios, n1s, n2s = [], [], []
    for k, fr in enumerate(frames):
        if fr.degenerate:
            continue
        P = propagate(A, flow, advance(flow, omega, float(k)), m, step).matrix
        n1 = float(np.linalg.norm(P @ fr.e1))
        n2 = float(np.linalg.norm(P @ fr.e2))
        ratios.append(n2 / n1)
        n1s.append(n1)
        n2s.append(n2)
    n_deg = count - len(ratios)
    unresolved = n_deg > 0.5 * count
    if unresolved or not ratios:
        ratio = math.nan if not ratios else ratios[0]
        return DominationReport(m, ratio, False, False, frames[0], omega, True, tuple(ratios), W)
    dominated = all(r <= 0.5 for r in ratios)
    # literal reading: contracted restriction and inverse on the expanded line both <= 1/2
    hyperbolic = all(n2 <= 0.5 for n2 in n2s) and all(1.0 / n1 <= 0.5 for n1 in n1s)
    return DominationReport(m, ratios[0], dominated, hyperbolic, frames[0], omega, False,
                            tuple(ratios), W)


def is_m_dominated(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, m: float,
                   step: float = DEFAULT_STEP) -> DominationReport:
    """All window ratios ``Delta_m <= 1/2`` at ``omega, phi^1(omega), ...``."""
    return _window_report(A, flow, omega, m, step)


def is_m_hyperbolic(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, m: float,
                    step: float = DEFAULT_STEP) -> DominationReport:
    return _window_report(A, flow, omega, m, step)


def _fractions(verdicts, labels):
    n = len(verdicts)
    return {lab: sum(v == lab for v in verdicts) / n for lab in labels}


def _classify(A, flow, sample, m, horizon, step, threads, decide, labels):
    if len(sample) == 0:
        raise InvalidInputError("sample must be nonempty")
    _check_m(m)

    def one(p):
        try:
            est = full_spectrum(A, flow, p, horizon, 1.0, step)
        except CocycleLabError:
            return PointVerdict(p, UNRESOLVED, math.nan, math.nan, math.nan)
        return decide(p, est)

    per = tuple(ordered_map(one, sample.points, threads))
    verdicts = tuple(pv.verdict for pv in per)
    return ClassificationReport(per, float(m), _fractions(verdicts, labels), labels)


def classify_sample(A: KineticGenerator, flow: FlowSpec, sample: SampleSet, m: float,
                    horizon: float = 200.0, step: float = DEFAULT_STEP,
                    threads=None) -> ClassificationReport:
    def decide(p, est):
        l1, l2 = est.lambda1, est.lambda2
        if abs(l1 - l2) < TRIVIAL_TOL:
            return PointVerdict(p, TRIVIAL, l1, l2, math.nan)
        try:
            rep = is_m_dominated(A, flow, p, m, step)
        except (CocycleLabError, DegenerateFrameError):
            return PointVerdict(p, UNRESOLVED, l1, l2, math.nan)
        if rep.unresolved:
            return PointVerdict(p, UNRESOLVED, l1, l2, rep.ratio)
        return PointVerdict(p, DOMINATED if rep.dominated else UNDOMINATED, l1, l2, rep.ratio)

    return _classify(A, flow, sample, m, horizon, step, threads, decide,
                     (TRIVIAL, DOMINATED, UNDOMINATED, UNRESOLVED))


def classify_frictionless(A: KineticGenerator, flow: FlowSpec, sample: SampleSet, m: float,
                          horizon: float = 200.0, step: float = DEFAULT_STEP,
                          threads=None) -> ClassificationReport:
    """Zero spectrum versus hyperbolic; points fitting neither horn are labelled ``neither``."""
    if A.class_tag != FRICTIONLESS:
        raise InvalidInputError("classify_frictionless needs a frictionless generator")

    def decide(p, est):
        l1, l2 = est.lambda1, est.lambda2
        if abs(l1) < TRIVIAL_TOL:
            return PointVerdict(p, ZERO, l1, l2, math.nan)
        try:
            rep = is_m_hyperbolic(A, flow, p, m, step)
        except CocycleLabError:
            return PointVerdict(p, UNRESOLVED, l1, l2, math.nan)
        if rep.unresolved:
            return PointVerdict(p, UNRESOLVED, l1, l2, rep.ratio)
        return PointVerdict(p, HYPERBOLIC if rep.hyperbolic else NEITHER, l1, l2, rep.ratio)

    return _classify(A, flow, sample, m, horizon, step, threads, decide,
                     (ZERO, HYPERBOLIC, NEITHER, UNRESOLVED))


def classify_dissipative(A: KineticGenerator, flow: FlowSpec, sample: SampleSet, m: float,
                         horizon: float = 200.0, step: float = DEFAULT_STEP,
                         threads=None) -> ClassificationReport:
    """Stable/unstable verdicts; enforces the Liouville sum rule at every point."""
    if A.class_tag != DISSIPATIVE:
        raise InvalidInputError("classify_dissipative needs a dissipative generator")
    alpha_low = A.alpha.lower_bound()
    ceiling = min(-alpha_low + TRIVIAL_TOL, 0.0)

    def decide(p, est):
        l1, l2 = est.lambda1, est.lambda2
        if l1 + l2 >= ceiling:
            raise InvariantViolationError(
                f"lambda1 + lambda2 = {l1 + l2:.4g} at {p.coords} breaks the dissipative sum rule"
            )
        if abs(l1 - l2) < TRIVIAL_TOL:
            return PointVerdict(p, STABLE_TRIVIAL if l1 < 0 else UNRESOLVED, l1, l2, math.nan)
        try:
            rep = is_m_dominated(A, flow, p, m, step)
        except CocycleLabError:
            return PointVerdict(p, UNRESOLVED, l1, l2, math.nan)
        if rep.dominated and l1 < 0:
            return PointVerdict(p, STABLE_DOMINATED, l1, l2, rep.ratio)
        if rep.dominated and l1 > 0 > l2:
            return PointVerdict(p, UNSTABLE_DOMINATED, l1, l2, rep.ratio)
        return PointVerdict(p, UNRESOLVED, l1, l2, rep.ratio)

    return _classify(A, flow, sample, m, horizon, step, threads, decide,
                     (STABLE_TRIVIAL, STABLE_DOMINATED, UNSTABLE_DOMINATED, UNRESOLVED))
