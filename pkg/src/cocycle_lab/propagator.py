"""Fixed-step RK4 integration of ``U' = A(phi^t(w)) U`` and the cocycle algebra."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .baseflow import BasePoint, FlowSpec, advance, orbit_points, torus_distance
from .errors import CompositionMismatchError, InvalidInputError, NumericalBlowupError
from .kinetic import KineticGenerator, _path_values

DEFAULT_STEP = 1e-3
BLOWUP_THRESHOLD = 1e12


@dataclass(frozen=True)
class Propagator2:
    matrix: np.ndarray
    t_start: float
    t_end: float
    base_point: BasePoint
    error_bound: float

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


@dataclass
class OrbitGrid:
    """Pre-sampled RK4 nodes along an orbit piece.

    ``a``/``b`` hold (start, mid, end) coefficient values per step, ``hs`` the
    signed step lengths, ``t`` the step start times and ``cut_steps`` the step
    index at which each requested cut time is reached.
    """

    a: np.ndarray
    b: np.ndarray
    hs: np.ndarray
    t: np.ndarray
    cut_steps: np.ndarray

    def alpha_integral(self) -> float:
        """Simpson rule on the RK nodes, the quadrature matching the integrator."""
        return float(np.sum(self.hs / 6.0 * (self.a[:, 0] + 4.0 * self.a[:, 1] + self.a[:, 2])))

    def fail_time(self, k: int) -> float:
        return float(self.t[k] + self.hs[k])


def _check_step(step: float):
    if not (step > 0) or not math.isfinite(step):
        raise InvalidInputError(f"step must be a positive finite number, got {step!r}")


def error_constant(A: KineticGenerator) -> float:
    ah = A.norm_bound()
    return ah ** 5 * math.exp(min(ah, 700.0))


def orbit_grid(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, t0: float, t1: float,
               step: float, cuts=()) -> OrbitGrid:
    """Build the node arrays from ``t0`` to ``t1`` (either order).

    Sub-intervals end at every cut and at every perturbation support endpoint,
    so no RK4 step straddles a coefficient jump.
    """
    _check_step(step)
    if not (math.isfinite(t0) and math.isfinite(t1)):
        raise InvalidInputError("integration times must be finite")
    sign = 1.0 if t1 >= t0 else -1.0
    lo, hi = min(t0, t1), max(t0, t1)
    windows = A.support_windows(flow, omega, lo, hi) if A.segments else []
    marks = {float(t0), float(t1)}
    for c in cuts:
        if lo <= c <= hi:
            marks.add(float(c))
    for wa, wb, _ in windows:
        for x in (wa, wb):
            if lo < x < hi:
                marks.add(float(x))
    pts = sorted(marks, reverse=(sign < 0))
    starts, hs, seg_id, counts = [], [], [], []
    for i in range(len(pts) - 1):
        p, q = pts[i], pts[i + 1]
        length = abs(q - p)
        if length == 0:
            counts.append(0)
            continue
        n = max(1, int(math.ceil(length / step - 1e-9)))
        k = np.arange(n)
        st = p + sign * step * k
        h = np.full(n, sign * step)
        h[-1] = q - st[-1]
        starts.append(st)
        hs.append(h)
        seg_id.append(np.full(n, i))
        counts.append(n)
    if starts:
        st = np.concatenate(starts)
        h = np.concatenate(hs)
        sid = np.concatenate(seg_id)
    else:
        st, h, sid = np.zeros(0), np.zeros(0), np.zeros(0, dtype=int)
    node_t = np.stack([st, st + 0.5 * h, st + h], axis=1)
    if st.size:
        P = orbit_points(flow, omega, node_t.reshape(-1))
        a, b = A.base_coefficients(P)
        a = a.reshape(-1, 3).copy()
        b = b.reshape(-1, 3).copy()
    else:
        a = np.zeros((0, 3))
        b = np.zeros((0, 3))
    # activate support windows for whole sub-intervals, decided at their midpoints
    for wa, wb, seg in windows:
        active = []
        for i in range(len(pts) - 1):
            mid = 0.5 * (pts[i] + pts[i + 1])
            if wa < mid < wb:
                active.append(i)
        if not active:
            continue
        mask = np.isin(sid, active)
        s = np.clip(node_t[mask] - wa, 0.0, seg.support.duration)
        a[mask] += _path_values(seg.h_alpha, s)
        b[mask] += _path_values(seg.h_beta, s)
    # step index where each cut is reached
    ends = np.concatenate([[0], np.cumsum(counts)]).astype(int)
    reach = {ptime: int(ends[i]) for i, ptime in enumerate(pts)}
    cut_steps = np.array([reach[float(c)] for c in cuts if lo <= c <= hi], dtype=np.int64)
    return OrbitGrid(a, b, h, st, cut_steps)


def _raise_blowup(grid: OrbitGrid, k: int):
    t = grid.fail_time(k)
    raise NumericalBlowupError(f"solution left the finite range near t = {t:.6g}", time=t)


def propagate(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, t: float,
              step: float = DEFAULT_STEP, t_start: float = 0.0,
              threshold: float = BLOWUP_THRESHOLD) -> Propagator2:
    """``Phi_A(t, omega)``; negative ``t`` integrates the equation backward."""
    grid = orbit_grid(A, flow, omega, 0.0, t, step)
    if grid.hs.size == 0:
        mat = np.eye(2)
    else:
        mats, fail = kernels.matrix_blocks(grid.a, grid.b, grid.hs, np.array([grid.hs.size]), threshold)
        if fail >= 0:
            _raise_blowup(grid, fail)
        mat = mats[0].reshape(2, 2)
    bound = error_constant(A) * step ** 4 * abs(t)
    return Propagator2(mat, float(t_start), float(t_start + t), omega, bound)


def block_matrices(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, times,
                   step: float = DEFAULT_STEP, threshold: float = BLOWUP_THRESHOLD) -> np.ndarray:
    """Propagators ``Phi(times[i+1] - times[i], phi^times[i] w)`` for consecutive times.

    Returns an array of shape ``(len(times) - 1, 2, 2)``; each block starts from the
    identity, so long horizons never overflow.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        return np.zeros((0, 2, 2))
    d = np.diff(times)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise InvalidInputError("block times must be strictly monotone")
    grid = orbit_grid(A, flow, omega, times[0], times[-1], step, cuts=times)
    ends = grid.cut_steps[1:]
    mats, fail = kernels.matrix_blocks(grid.a, grid.b, grid.hs, ends, threshold)
    if fail >= 0:
        _raise_blowup(grid, fail)
    return mats.reshape(-1, 2, 2)


def cocycle_compose(left: Propagator2, right: Propagator2, flow: FlowSpec | None = None,
                    tol: float = 1e-9) -> Propagator2:
    """``left . right``; ``right`` runs first."""
    if abs(left.t_start - right.t_end) > tol:
        raise CompositionMismatchError(
            f"intervals do not abut: right ends at {right.t_end}, left starts at {left.t_start}"
        )
    if flow is not None:
        expected = advance(flow, right.base_point, right.duration)
        gap = float(np.max(torus_distance(expected.as_array(), left.base_point.as_array())))
        if gap > tol:
            raise CompositionMismatchError(f"base points differ by {gap:.3g} after the right segment")
    elif right.duration == 0 and left.base_point != right.base_point:
        raise CompositionMismatchError("base points differ")
    return Propagator2(left.matrix @ right.matrix, right.t_start, left.t_end, right.base_point,
                       left.error_bound + right.error_bound)


def liouville_check(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, t: float,
                    step: float = DEFAULT_STEP) -> float:
    """Defect ``|log det Phi(t) + int_0^t alpha|`` on the integrator's own nodes."""
    grid = orbit_grid(A, flow, omega, 0.0, t, step)
    if grid.hs.size == 0:
        return 0.0
    mats, fail = kernels.matrix_blocks(grid.a, grid.b, grid.hs, np.array([grid.hs.size]), BLOWUP_THRESHOLD)
    if fail >= 0:
        _raise_blowup(grid, fail)
    det = float(np.linalg.det(mats[0].reshape(2, 2)))
    if not det > 0:
        raise NumericalBlowupError(f"determinant lost positivity ({det:g})", time=t)
    return abs(math.log(det) + grid.alpha_integral())


def small_time_bracket(A, epsilon: float) -> float:
    """Largest (to bisection accuracy) ``tau`` with ``tau^2 Ah exp(Ah tau) < epsilon``.

    ``A`` may be a generator or directly the bound ``Ah``.
    """
    if not (0 < epsilon < 0.5):
        raise InvalidInputError("epsilon must lie in (0, 1/2)")
    ah = A.norm_bound() if isinstance(A, KineticGenerator) else float(A)
    if not ah > 0:
        raise InvalidInputError("norm bound must be positive")

    def f(tau):
        return tau * tau * ah * math.exp(ah * tau)

    lo, hi = 0.0, 1.0
    while f(hi) < epsilon:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < epsilon:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return lo
