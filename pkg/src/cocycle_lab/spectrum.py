"""Lyapunov exponents, Oseledets directions, the integrated LE functional and Fekete sequences."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .baseflow import BasePoint, FlowSpec, SampleSet
from .errors import (CocycleLabError, DegenerateFrameError, InvalidInputError,
                     NumericalBlowupError)
from .kinetic import KineticGenerator
from .parallel import ordered_map
from .propagator import (BLOWUP_THRESHOLD, DEFAULT_STEP, _raise_blowup, block_matrices,
                         orbit_grid)

CONVERGENCE_TOL = 1e-3
DEGENERATE_GAP = 10 * CONVERGENCE_TOL


@dataclass(frozen=True)
class LyapunovEstimate:
    lambda1: float
    lambda2: float | None
    horizon: float
    renorm_interval: float
    history: tuple[tuple[float, float], ...]
    converged: bool
    mean_alpha: float = 0.0
    liouville_defect: float | None = None
    seed: int = 0


@dataclass(frozen=True)
class OseledetsFrame:
    e1: np.ndarray
    e2: np.ndarray
    angle: float
    gap: float
    degenerate: bool = False

    def require(self):
        if self.degenerate:
            raise DegenerateFrameError(
                f"spectrum not simple at this point (estimated gap {self.gap:.3g})"
            )
        return self


@dataclass(frozen=True)
class LEFunctionalEstimate:
    value: float
    sample: SampleSet
    per_point: tuple[float, ...]
    stderr: float
    excluded: tuple[int, ...] = ()
    n_sequence: tuple[tuple[int, float], ...] = ()


def sign_normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    for c in v:
        if abs(c) > 1e-14:
            return v if c > 0 else -v
    return v


def line_angle(u: np.ndarray, v: np.ndarray) -> float:
    """Angle in ``[0, pi/2]`` between the lines spanned by ``u`` and ``v``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    c = abs(float(u @ v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    s = abs(float(u[0] * v[1] - u[1] * v[0])) / (np.linalg.norm(u) * np.linalg.norm(v))
    return math.atan2(s, c)


def _check_horizon(horizon, renorm):
    if not (0.1 <= renorm <= 10):
        raise InvalidInputError("renorm must lie in [0.1, 10]")
    if horizon < 10 * renorm:
        raise InvalidInputError("horizon must be at least 10 renorm intervals")


def _block_times(horizon: float, renorm: float) -> np.ndarray:
    n = int(math.floor(horizon / renorm + 1e-9))
    times = set((np.arange(n + 1) * renorm).tolist())
    times.update([0.5 * horizon, horizon])
    return np.array(sorted(t for t in times if t <= horizon))


def _initial_vector(seed: int) -> np.ndarray:
    theta = np.random.default_rng(seed).uniform(0.0, math.pi)
    return np.array([math.cos(theta), math.sin(theta)])


def _benettin(A, flow, omega, horizon, renorm, step, seed, v0=None):
    _check_horizon(horizon, renorm)
    times = _block_times(horizon, renorm)
    grid = orbit_grid(A, flow, omega, 0.0, horizon, step, cuts=times)
    v0 = _initial_vector(seed) if v0 is None else np.asarray(v0, dtype=float)
    logs, _, fail = kernels.vector_blocks(grid.a, grid.b, grid.hs, grid.cut_steps[1:], v0,
                                          BLOWUP_THRESHOLD)
    if fail >= 0:
        _raise_blowup(grid, fail)
    return times, np.concatenate([[0.0], np.cumsum(logs)]), grid


def _burn_in_estimate(times, S, t):
    """``(S(t) - S(t/2)) / (t/2)`` with ``S`` read at the last block time <= t/2."""
    j = int(np.searchsorted(times, 0.5 * t + 1e-12, side="right") - 1)
    dt = t - times[j]
    i = int(np.searchsorted(times, t - 1e-12))
    return (S[i] - S[j]) / dt


def top_exponent(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, horizon: float = 200.0,
                 renorm: float = 1.0, step: float = DEFAULT_STEP, seed: int = 0,
                 v0=None) -> LyapunovEstimate:
    """Benettin estimate of the top exponent.

    The first half of the horizon is discarded as burn-in: the estimate is the
    log growth over ``[T/2, T]`` divided by ``T/2``, which removes the
    ``log|<v, E^1>| / T`` bias of the plain average.
    """
    times, S, _ = _benettin(A, flow, omega, horizon, renorm, step, seed, v0)
    return _estimate(times, S, horizon, renorm, seed)


def _estimate(times, S, horizon, renorm, seed):
    hist = []
    for t in times[1:]:
        if t >= 2 * renorm:
            hist.append((float(t), float(_burn_in_estimate(times, S, t))))
    lam = _burn_in_estimate(times, S, horizon)
    tail = [v for t, v in hist if t >= 0.75 * horizon]
    converged = bool(tail) and (max(tail) - min(tail) < CONVERGENCE_TOL)
    return LyapunovEstimate(float(lam), None, float(horizon), float(renorm), tuple(hist),
                            converged, seed=seed)


def _alpha_window_mean(grid, t_lo: float, t_hi: float) -> float:
    w = grid.hs / 6.0 * (grid.a[:, 0] + 4.0 * grid.a[:, 1] + grid.a[:, 2])
    mid = grid.t + 0.5 * grid.hs
    sel = (mid >= t_lo) & (mid <= t_hi)
    return float(np.sum(w[sel]) / (t_hi - t_lo))


def full_spectrum(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, horizon: float = 200.0,
                  renorm: float = 1.0, step: float = DEFAULT_STEP, seed: int = 0) -> LyapunovEstimate:
    """``lambda1`` from :func:`top_exponent` and ``lambda2`` from Liouville.

    ``lambda2 = -<alpha> - lambda1`` with the time average of ``alpha`` taken
    over the same window as ``lambda1``.  ``liouville_defect`` then compares the
    pair against the full-horizon average of ``alpha``, which exposes window bias.
    """
    times, S, grid = _benettin(A, flow, omega, horizon, renorm, step, seed)
    est = _estimate(times, S, horizon, renorm, seed)
    lam1 = est.lambda1
    mean_window = _alpha_window_mean(grid, 0.5 * horizon, horizon)
    lam2 = -mean_window - lam1
    mean_full = grid.alpha_integral() / horizon
    if lam2 > lam1:
        lam1, lam2 = max(lam1, lam2), min(lam1, lam2)
    return LyapunovEstimate(lam1, lam2, est.horizon, est.renorm_interval, est.history,
                            est.converged, mean_alpha=mean_full,
                            liouville_defect=abs(lam1 + lam2 + mean_full), seed=seed)


# --------------------------------------------------------------------------
# Oseledets directions
# --------------------------------------------------------------------------

def _push_lines(mats: np.ndarray, v: np.ndarray):
    """Iterate ``v <- M v / |M v|``; returns the directions after each block and log growths."""
    out = np.zeros((len(mats), 2))
    logs = np.zeros(len(mats))
    for k, M in enumerate(mats):
        v = M @ v
        n = math.hypot(v[0], v[1])
        logs[k] = math.log(n)
        v = v / n
        out[k] = v
    return out, logs


def _pull_lines(mats: np.ndarray, w: np.ndarray):
    """Iterate ``w <- M^-1 w / |.|`` from the last block to the first."""
    out = np.zeros((len(mats), 2))
    logs = np.zeros(len(mats))
    for k in range(len(mats) - 1, -1, -1):
        M = mats[k]
        det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        inv = np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]]) / det
        w = inv @ w
        n = math.hypot(w[0], w[1])
        logs[k] = math.log(n)
        w = w / n
        out[k] = w
    return out, logs


def frames_along(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, count: int,
                 horizon: float = 60.0, step: float = DEFAULT_STEP, seed: int = 0):
    """Oseledets frames at ``phi^k(omega)`` for ``k = 0..count-1`` from one orbit pass.

    ``e1`` is a generic line pushed forward from ``phi^-T``; ``e2`` is a generic
    line pulled back from ``phi^(count-1+T)`` through inverse unit-time blocks.
    The growth rates of both iterations give the spectral gap estimate.
    """
    T = int(math.ceil(horizon))
    times = np.arange(-T, count - 1 + T + 1, dtype=float)
    mats = block_matrices(A, flow, omega, times, step)
    rng = np.random.default_rng(seed)
    th = rng.uniform(0.0, math.pi, size=2)
    v = np.array([math.cos(th[0]), math.sin(th[0])])
    w = np.array([math.cos(th[1]), math.sin(th[1])])
    fwd, flog = _push_lines(mats, v)
    bwd, blog = _pull_lines(mats, w)
    half = T // 2
    # forward growth approximates lambda1, backward growth approximates -lambda2
    lam1 = float(np.mean(flog[half:T]))
    lam2 = -float(np.mean(blog[len(mats) - T:len(mats) - half]))
    gap = lam1 - lam2
    frames = []
    for k in range(count):
        # fwd[i] is the line at time times[i+1]; point k sits at times index T + k
        e1 = fwd[T + k - 1]
        e2 = bwd[T + k]
        frames.append(_make_frame(e1, e2, gap))
    return frames, (lam1, lam2)


def _make_frame(e1, e2, gap):
    e1 = sign_normalize(e1)
    e2 = sign_normalize(e2)
    ang = line_angle(e1, e2)
    degenerate = (gap <= DEGENERATE_GAP) or ang == 0.0
    return OseledetsFrame(e1, e2, ang, gap, degenerate)


def oseledets_directions(A: KineticGenerator, flow: FlowSpec, omega: BasePoint,
                         horizon: float = 60.0, step: float = DEFAULT_STEP,
                         seed: int = 0) -> OseledetsFrame:
    """Frame at ``omega``; check ``.degenerate`` (or call ``.require()``)."""
    frames, _ = frames_along(A, flow, omega, 1, horizon, step, seed)
    return frames[0]


# --------------------------------------------------------------------------
# functionals over samples
# --------------------------------------------------------------------------

def _per_point(fn, sample: SampleSet, threads):
    def safe(p):
        try:
            return fn(p)
        except (NumericalBlowupError, DegenerateFrameError, FloatingPointError) as exc:
            return exc

    return ordered_map(safe, sample.points, threads)


def _split_failures(results, what: str):
    bad = tuple(i for i, r in enumerate(results) if isinstance(r, Exception))
    if bad:
        warnings.warn(f"{len(bad)} of {len(results)} points excluded from {what}", RuntimeWarning)
    if len(bad) > 0.1 * len(results):
        raise CocycleLabError(f"{len(bad)} of {len(results)} points failed in {what} (limit 10%)")
    return bad


def le_functional(A: KineticGenerator, flow: FlowSpec, sample: SampleSet, horizon: float = 200.0,
                  renorm: float = 1.0, step: float = DEFAULT_STEP, threads=None,
                  seed: int = 0) -> LEFunctionalEstimate:
    """Sample mean of the per-point top exponent (not clipped at zero)."""
    if len(sample) == 0:
        raise InvalidInputError("sample must be nonempty")
    res = _per_point(lambda p: top_exponent(A, flow, p, horizon, renorm, step, seed).lambda1,
                     sample, threads)
    bad = _split_failures(res, "le_functional")
    vals = np.array([r for i, r in enumerate(res) if i not in bad], dtype=float)
    stderr = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return LEFunctionalEstimate(float(np.mean(vals)), sample,
                                tuple(float(r) if not isinstance(r, Exception) else math.nan for r in res),
                                stderr, bad)


def log_norm_sequence(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, n_max: int,
                      step: float = DEFAULT_STEP) -> np.ndarray:
    """``log ||Phi(n, omega)||`` for ``n = 1..n_max`` via renormalised unit-time products."""
    mats = block_matrices(A, flow, omega, np.arange(n_max + 1, dtype=float), step)
    out = np.zeros(n_max)
    P = np.eye(2)
    scale = 0.0
    for n, M in enumerate(mats):
        P = M @ P
        s = np.linalg.norm(P, 2)
        scale += math.log(s)
        P /= s
        out[n] = scale
    return out


@dataclass(frozen=True)
class FeketeResult:
    n: tuple[int, ...]
    a_over_n: tuple[float, ...]
    a: tuple[float, ...]
    stderr: tuple[float, ...]
    per_point: np.ndarray = field(repr=False, compare=False, default=None)

    def pairs(self):
        return list(zip(self.n, self.a_over_n))


def fekete_sequence(A: KineticGenerator, flow: FlowSpec, sample: SampleSet, n_max: int,
                    step: float = DEFAULT_STEP, threads=None) -> FeketeResult:
    if n_max < 2:
        raise InvalidInputError("n_max must be >= 2")
    if len(sample) == 0:
        raise InvalidInputError("sample must be nonempty")
    res = _per_point(lambda p: log_norm_sequence(A, flow, p, n_max, step), sample, threads)
    bad = _split_failures(res, "fekete_sequence")
    rows = np.array([r for i, r in enumerate(res) if i not in bad])
    a = rows.mean(axis=0)
    se = rows.std(axis=0, ddof=1) / math.sqrt(rows.shape[0]) if rows.shape[0] > 1 else np.zeros(n_max)
    ns = np.arange(1, n_max + 1)
    return FeketeResult(tuple(int(n) for n in ns), tuple(float(x) for x in a / ns),
                        tuple(float(x) for x in a), tuple(float(x) for x in se), rows)


def angle_growth(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, t: int,
                 horizon: float = 60.0, step: float = DEFAULT_STEP) -> float:
    """``(1/t) log sin angle(E1, E2)`` at ``phi^t(omega)`` relative to ``omega``."""
    frames, _ = frames_along(A, flow, omega, t + 1, horizon, step)
    s0 = math.sin(frames[0].angle)
    st = math.sin(frames[t].angle)
    return (math.log(st) - math.log(s0)) / t
