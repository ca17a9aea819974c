"""Kinetic perturbation toolbox: shears, conjugated generators, cones, rotations, swaps and mixing.

Every perturbation built here is a constant bottom-left shear ``[[0, 0], [xi, 0]]``
on a piece of orbit, so it is traceless and keeps the generator kinetic and in
its class.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .baseflow import BasePoint, FlowSpec, SampleSet, advance
from .errors import (CocycleLabError, ConstructionFailureError, DegenerateFrameError,
                     InvalidInputError, NumericalDomainError, RotationInfeasibleError,
                     SwapInfeasibleError)
from .kinetic import KineticGenerator, apply_perturbation, shear_perturbation
from .propagator import (BLOWUP_THRESHOLD, DEFAULT_STEP, Propagator2, _raise_blowup,
                         block_matrices, error_constant, orbit_grid, propagate,
                         small_time_bracket)
from .spectrum import (DEGENERATE_GAP, OseledetsFrame, line_angle, oseledets_directions,
                       sign_normalize)
from .spectrum import _pull_lines as spectrum_pull
from .spectrum import _push_lines as spectrum_push

TAU_TILDE_CAP = 0.1
# longer shear durations tried when the default one cannot reach the target line
TAU_TILDE_LADDER = (0.2, 0.3, 0.45)
ESCAPE_TRIALS = 100


# --------------------------------------------------------------------------
# small value types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConeSpec:
    gamma: float

    def __post_init__(self):
        if not (0 < self.gamma < 1):
            raise InvalidInputError("cone aperture gamma must lie in (0, 1)")

    def contains(self, v) -> bool:
        return abs(v[0]) < self.gamma * abs(v[1])


@dataclass(frozen=True)
class ShearSpec:
    xi: float
    duration: float

    def __post_init__(self):
        if not (0 < self.duration <= 1):
            raise InvalidInputError("shear duration must lie in (0, 1]")

    def generator(self) -> np.ndarray:
        return np.array([[0.0, 0.0], [self.xi, 0.0]])


@dataclass(frozen=True)
class ShearRecord:
    origin: BasePoint
    start: float
    duration: float
    xi: float


@dataclass
class PerturbationPlan:
    """Audit record of a toolbox construction.

    ``shears`` lists every support piece ``phi^[start, start+duration](origin)``
    with its constant shear ``xi``; ``size`` is the largest ``|xi|``.
    """

    target: str
    support: tuple[BasePoint, float, float]
    shears: list[ShearRecord] = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    audit: dict = field(default_factory=dict)
    # the perturbed generator; not part of the text record
    generator: object = field(default=None, repr=False, compare=False)

    @property
    def size(self) -> float:
        return max((abs(s.xi) for s in self.shears), default=0.0)

    def to_text(self) -> str:
        w, T, tau = self.support
        lines = [
            "[plan]",
            f"target = {self.target}",
            f"support_origin = {list(w.coords)!r}",
            f"support_start = {T!r}",
            f"support_duration = {tau!r}",
            f"size = {self.size!r}",
            f"segments = {len(self.shears)}",
        ]
        for i, s in enumerate(self.shears):
            lines.append(f"[segment.{i}]")
            lines.append(f"origin = {list(s.origin.coords)!r}")
            lines.append(f"start = {s.start!r}")
            lines.append(f"duration = {s.duration!r}")
            lines.append(f"xi = {s.xi!r}")
        if self.residuals:
            lines.append("[residuals]")
            lines += [f"{k} = {v!r}" for k, v in sorted(self.residuals.items())]
        if self.audit:
            lines.append("[audit]")
            lines += [f"{k} = {v!r}" for k, v in sorted(self.audit.items())]
        return "\n".join(lines) + "\n"


def build_generator(A: KineticGenerator, flow: FlowSpec, shears) -> KineticGenerator:
    B = A
    for s in shears:
        if s.xi != 0.0:
            B = apply_perturbation(B, shear_perturbation(s.origin, s.start, s.duration, s.xi), flow)
    return B


# --------------------------------------------------------------------------
# closed forms
# --------------------------------------------------------------------------

def shear_solution(shear: ShearSpec, t: float) -> np.ndarray:
    """``S^t = [[1, 0], [xi t, 1]]``, the flow of the constant shear."""
    return np.array([[1.0, 0.0], [shear.xi * t, 1.0]])


def angle_theta(t: float, gamma: float, xi: float) -> float:
    """Angle between ``u = (gamma, 1)`` and ``S^t u`` in closed form."""
    if not gamma > 0:
        raise InvalidInputError("gamma must be positive")
    s = t * xi * gamma
    num = 1.0 + gamma * gamma + s
    den = math.sqrt(gamma * gamma + 1.0) * math.sqrt(gamma * gamma + 1.0 + 2.0 * s + s * s)
    c = num / den
    if abs(c) > 1.0 + 1e-12:
        raise NumericalDomainError(f"arccos operand {c!r} outside [-1, 1]")
    return math.acos(max(-1.0, min(1.0, c)))


# --------------------------------------------------------------------------
# conjugated generator and the fiber rotation R^t
# --------------------------------------------------------------------------

def conjugated_generator(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, xi: float,
                         t: float, step: float = DEFAULT_STEP) -> np.ndarray:
    """``Phi_A(t)^-1 [[0, 0], [xi, 0]] Phi_A(t)``."""
    P = propagate(A, flow, omega, t, step).matrix
    N = np.array([[0.0, 0.0], [xi, 0.0]])
    det = P[0, 0] * P[1, 1] - P[0, 1] * P[1, 0]
    Pinv = np.array([[P[1, 1], -P[0, 1]], [-P[1, 0], P[0, 0]]]) / det
    return Pinv @ N @ P


def _rotation_pair(A, flow, omega, xi, tau, step):
    grid = orbit_grid(A, flow, omega, 0.0, tau, step)
    phi, r, fail = kernels.rotation(grid.a, grid.b, grid.hs, float(xi), BLOWUP_THRESHOLD)
    if fail >= 0:
        _raise_blowup(grid, fail)
    return phi.reshape(2, 2), r.reshape(2, 2)


def rotation_solution(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, xi: float,
                      tau: float, step: float = DEFAULT_STEP) -> Propagator2:
    """``R^tau`` solving ``X' = A_xi(t) X`` on ``[0, tau]``."""
    if not (0 < tau <= 1):
        raise InvalidInputError("tau must lie in (0, 1]")
    _, R = _rotation_pair(A, flow, omega, xi, tau, step)
    bound = error_constant(A) * step ** 4 * tau
    return Propagator2(R, 0.0, float(tau), omega, bound)


def composed_propagator(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, xi: float,
                        tau: float, step: float = DEFAULT_STEP) -> float:
    """``||Phi_B(tau) - Phi_A(tau) R^tau||`` with ``B = A + shear`` on ``phi^[0, tau](omega)``."""
    if not (0 < tau <= 1):
        raise InvalidInputError("tau must lie in (0, 1]")
    B = build_generator(A, flow, [ShearRecord(omega, 0.0, tau, xi)])
    PB = propagate(B, flow, omega, tau, step).matrix
    PA, R = _rotation_pair(A, flow, omega, xi, tau, step)
    return float(np.linalg.norm(PB - PA @ R, 2))


# --------------------------------------------------------------------------
# cones
# --------------------------------------------------------------------------

def _sampled_path(A, flow, omega, t_end, step):
    """Matrices ``Phi(k step)`` for ``k = 0..n`` (last time exactly ``t_end``)."""
    n = max(1, int(math.ceil(t_end / step - 1e-9)))
    times = np.minimum(np.arange(n + 1) * step, t_end)
    times[-1] = t_end
    mats = block_matrices(A, flow, omega, times, step)
    path = [np.eye(2)]
    for M in mats:
        path.append(M @ path[-1])
    return times, path


def cone_escape(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, gamma: float, v,
                tau_hat: float, step: float = DEFAULT_STEP):
    """Propagate ``v`` and report ``(outside at tau_hat, first sampled exit time or None)``."""
    cone = ConeSpec(gamma)
    v = np.asarray(v, dtype=float)
    if not cone.contains(v):
        raise InvalidInputError("v must lie inside the cone")
    if not (0 < tau_hat < 0.5):
        raise InvalidInputError("tau_hat must lie in (0, 1/2)")
    times, path = _sampled_path(A, flow, omega, tau_hat, step)
    exit_time = None
    for t, P in zip(times, path):
        if not cone.contains(P @ v):
            exit_time = float(t)
            break
    return (not cone.contains(path[-1] @ v)), exit_time


def _cone_margin(gamma, tau_hat, eps, ell, g_tilde):
    g = abs(g_tilde)
    low = g_tilde + (1.0 - eps) * tau_hat - tau_hat * g * eps
    den = 1.0 + tau_hat * ell * (2.0 * g * eps + 2.0 * eps + g + 1.0 + eps)
    return low / den


def cone_condition(gamma: float, tau_hat: float, eps: float, ell: float) -> bool:
    """Certified escape test over all signed offsets ``|g~| < gamma``.

    The bound on ``z1`` is taken with the worst sign of ``g~``; the ratio
    ``low / den`` is monotone in ``g~``, so checking a fine grid including the
    endpoints is exact up to the open boundary.
    """
    gs = np.linspace(-gamma, gamma, 41)
    return all(_cone_margin(gamma, tau_hat, eps, ell, g) > gamma for g in gs)


def choose_cone_gamma(A: KineticGenerator | float, epsilon: float) -> tuple[float, float]:
    """Largest admissible ``gamma <= 1/2`` with the matching ``tau_hat``.

    ``A`` may also be the bound ``ell`` directly (with ``Ah = 1 + 2 ell``).
    """
    if not (0 < epsilon < 0.5):
        raise InvalidInputError("epsilon must lie in (0, 1/2)")
    if isinstance(A, KineticGenerator):
        ell = max(A.alpha_sup(), A.beta_sup()) + 1e-6
        ah = A.norm_bound()
    else:
        ell = float(A)
        ah = 1.0 + 2.0 * ell
    tau_hat = min(small_time_bracket(ah, epsilon), 0.4999)
    lo, hi = 0.0, 0.5
    if cone_condition(hi, tau_hat, epsilon, ell):
        return hi, tau_hat
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if cone_condition(mid, tau_hat, epsilon, ell):
            lo = mid
        else:
            hi = mid
    if lo <= 1e-6:
        raise ConstructionFailureError(
            f"no cone aperture above 1e-6 certifies escape (ell = {ell:.4g}, tau_hat = {tau_hat:.4g})"
        )
    return lo, tau_hat


# --------------------------------------------------------------------------
# rotations of a single direction
# --------------------------------------------------------------------------

def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise InvalidInputError("direction vectors must be nonzero")
    return v / n


def signed_line_angle(u, v) -> float:
    """Angle from line ``v`` to line ``u`` in ``(-pi/2, pi/2]``."""
    a = math.atan2(v[0] * u[1] - v[1] * u[0], u[0] * v[0] + u[1] * v[1])
    if a > math.pi / 2:
        a -= math.pi
    elif a <= -math.pi / 2:
        a += math.pi
    return a


def rotate_vec(u, theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([c * u[0] - s * u[1], s * u[0] + c * u[1]])


@dataclass(frozen=True)
class RotationBudget:
    theta: float
    theta0: float
    theta1: float
    theta2: float
    gamma: float
    tau_hat: float
    tau_tilde: float


def rotation_budget(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, epsilon: float,
                    step: float = DEFAULT_STEP, seed: int = 0) -> RotationBudget:
    """``theta = min(theta0, theta1, theta2)`` of the accessibility construction.

    ``theta1 = angle_theta(tau~, gamma, eps/2)`` and ``theta2`` divides it by the
    Lipschitz bound ``(pi/2) exp(2 Ah tau^)`` of the projective action over the
    coast; ``theta0`` is half the largest angle for which 100 random cone pairs
    at ``omega`` all leave the cone by ``tau^``.
    """
    eps_c = min(epsilon, 0.4999)
    gamma, tau_hat = choose_cone_gamma(A, eps_c)
    tau_tilde = tau_tilde_default(A, epsilon)
    theta1 = angle_theta(tau_tilde, gamma, epsilon / 2.0)
    ah = A.norm_bound()
    theta2 = (2.0 / math.pi) * theta1 / math.exp(2.0 * ah * tau_hat)
    theta0 = _empirical_theta0(A, flow, omega, gamma, tau_hat, step, seed)
    return RotationBudget(min(theta0, theta1, theta2), theta0, theta1, theta2, gamma, tau_hat,
                          tau_tilde)


def tau_tilde_default(A: KineticGenerator, epsilon: float) -> float:
    return min(TAU_TILDE_CAP, small_time_bracket(A, min(epsilon / 4.0, 0.4999)))


def _empirical_theta0(A, flow, omega, gamma, tau_hat, step, seed):
    P = propagate(A, flow, omega, tau_hat, step).matrix
    cone = ConeSpec(gamma)
    rng = np.random.default_rng(seed)
    g = rng.uniform(-gamma, gamma, ESCAPE_TRIALS) * (1 - 1e-9)
    us = np.stack([g, np.ones_like(g)], axis=1)
    signs = rng.choice([-1.0, 1.0], ESCAPE_TRIALS)

    def all_escape(theta):
        for u, sgn in zip(us, signs):
            v = rotate_vec(u, sgn * theta)
            if cone.contains(P @ u) or cone.contains(P @ v):
                return False
        return True

    if not all_escape(0.0):
        return 0.0
    lo, hi = 0.0, math.pi / 2
    if all_escape(hi):
        return hi / 2
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if all_escape(mid):
            lo = mid
        else:
            hi = mid
    return lo / 2


def _shear_image(A, flow, origin, u, xi, tau, step):
    """``R^tau u`` for the rotation conjugated along the orbit of ``origin``."""
    _, R = _rotation_pair(A, flow, origin, xi, tau, step)
    return R @ u


def solve_shear(A: KineticGenerator, flow: FlowSpec, origin: BasePoint, u, v, xi_max: float,
                tau: float, step: float = DEFAULT_STEP, xtol: float = 1e-14):
    """Find ``|xi| <= xi_max`` with ``R^tau u`` parallel to ``v``; ``None`` without a bracket."""
    u = _unit(u)
    v = _unit(v)

    def f(xi):
        return signed_line_angle(_shear_image(A, flow, origin, u, xi, tau, step), v)

    f0 = signed_line_angle(u, v)
    if f0 == 0.0:
        return 0.0
    fa, fb = f(-xi_max), f(xi_max)
    if fa == 0.0:
        return -xi_max
    if fb == 0.0:
        return xi_max
    if np.sign(fa) == np.sign(fb):
        return None
    # pick the sub-bracket around 0 so the smallest |xi| solution is used
    if np.sign(fa) != np.sign(f0):
        a, b = -xi_max, 0.0
    else:
        a, b = 0.0, xi_max
    xi = float(brentq(f, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200))
    # a sign change can also come from the jump at +-pi/2 rather than a root
    if abs(f(xi)) > 1e-8:
        return None
    return xi


def rotate_direction(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, u, v,
                     epsilon: float, step: float = DEFAULT_STEP, start: float = 0.0,
                     strict_budget: bool = False, budget: RotationBudget | None = None):
    """Perturb ``A`` on ``phi^[start, start+1](omega)`` so that ``Phi_B(1) u`` spans ``Phi_A(1) v``.

    Returns ``(B, plan, theta_budget)``.  The budget is a sufficient condition:
    larger angles are attempted and :class:`RotationInfeasibleError` is raised
    only when no admissible shear reaches the target (or when
    ``strict_budget`` is set).
    """
    if not epsilon > 0:
        raise InvalidInputError("epsilon must be positive")
    u = _unit(u)
    v = _unit(v)
    w0 = advance(flow, omega, start) if start else omega
    if budget is None:
        budget = rotation_budget(A, flow, w0, epsilon, step)
    ang = line_angle(u, v)
    plan = PerturbationPlan("rotate_direction", (omega, float(start), 1.0))
    plan.audit.update(dict(gamma=budget.gamma, tau_hat=budget.tau_hat, tau_tilde=budget.tau_tilde,
                           theta0=budget.theta0, theta1=budget.theta1, theta2=budget.theta2,
                           theta_budget=budget.theta, angle=ang,
                           theta0_rule="half the largest angle with 100/100 cone escapes"))
    if strict_budget and ang >= budget.theta:
        raise RotationInfeasibleError(f"angle {ang:.3g} exceeds the budget {budget.theta:.3g}")
    if ang == 0.0:
        plan.residuals["line_identity_rad"] = 0.0
        return A, plan, budget.theta
    cone = ConeSpec(budget.gamma)
    coast = 0.0
    u1, v1 = u, v
    if cone.contains(u) or cone.contains(v):
        coast = budget.tau_hat
        P = propagate(A, flow, w0, coast, step).matrix
        u1, v1 = P @ u, P @ v
    plan.audit["case"] = 2 if coast else 1
    origin = advance(flow, w0, coast) if coast else w0
    xi = None
    used_tau = None
    for tau in (budget.tau_tilde,) + tuple(t for t in TAU_TILDE_LADDER if t > budget.tau_tilde):
        if coast + tau > 1.0:
            break
        xi = solve_shear(A, flow, origin, u1, v1, epsilon / 2.0, tau, step)
        if xi is not None:
            used_tau = tau
            break
    if xi is None:
        raise RotationInfeasibleError(
            f"no shear with |xi| <= {epsilon / 2:.3g} turns the line by {ang:.3g} rad "
            f"(budget {budget.theta:.3g})"
        )
    shear = ShearRecord(omega, float(start + coast), float(used_tau), float(xi))
    plan.shears.append(shear)
    plan.audit["tau_used"] = used_tau
    plan.audit["coast"] = coast
    B = build_generator(A, flow, [shear]) if xi != 0.0 else A
    lhs = propagate(B, flow, w0, 1.0, step).matrix @ u
    rhs = propagate(A, flow, w0, 1.0, step).matrix @ v
    plan.residuals["line_identity_rad"] = line_angle(lhs, rhs)
    plan.generator = B
    return B, plan, budget.theta


# --------------------------------------------------------------------------
# swaps of Oseledets directions
# --------------------------------------------------------------------------

SWAP_TOL = 1e-4


def _steer(A, flow, origin, u, v, epsilon, budget, step):
    """One unit segment: hit the line ``v`` if possible, else shear at full size toward it.

    Returns ``(shear or None, hit)`` where the shear is relative to ``origin``.
    """
    cone = ConeSpec(budget.gamma)
    coast = 0.0
    u1, v1 = u, v
    if cone.contains(u) or cone.contains(v):
        coast = budget.tau_hat
        P = propagate(A, flow, origin, coast, step).matrix
        u1, v1 = P @ u, P @ v
    w = advance(flow, origin, coast) if coast else origin
    taus = [t for t in (budget.tau_tilde,) + TAU_TILDE_LADDER
            if t >= budget.tau_tilde and coast + t <= 1.0]
    xi_max = epsilon / 2.0
    for tau in taus:
        xi = solve_shear(A, flow, w, u1, v1, xi_max, tau, step)
        if xi is not None:
            return (coast, tau, xi), True
    tau = taus[-1]
    best = None
    for xi in (-xi_max, xi_max):
        miss = abs(signed_line_angle(_shear_image(A, flow, w, _unit(u1), xi, tau, step), v1))
        if best is None or miss < best[0]:
            best = (miss, xi)
    return (coast, tau, best[1]), False


def swap_oseledets(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, m: int,
                   epsilon: float, step: float = DEFAULT_STEP, frame=None,
                   target=None) -> PerturbationPlan:
    """Steer the expanding line ``E1_omega`` onto the contracting line ``E2`` at ``phi^m(omega)``.

    The chain uses the unit segments ``phi^[k, k+1](omega)``; each one either
    hits the pulled-back target line or shears by ``epsilon/2`` toward it.
    ``frame`` (at ``omega``) and ``target`` (the ``E2`` line at ``phi^m``) can
    be passed when the caller already has them.
    """
    if int(m) != m or m < 1:
        raise InvalidInputError("m must be a positive integer")
    m = int(m)
    if not epsilon > 0:
        raise InvalidInputError("epsilon must be positive")
    if frame is None:
        frame = oseledets_directions(A, flow, omega, step=step)
    frame.require()
    if target is None:
        end = oseledets_directions(A, flow, advance(flow, omega, float(m)), step=step)
        end.require()
        target = end.e2
    e1 = _unit(frame.e1)
    target = _unit(target)
    mats = block_matrices(A, flow, omega, np.arange(m + 1, dtype=float), step)
    # pull the target back along A: pulled[k] is the line at time k
    pulled = [None] * (m + 1)
    pulled[m] = target
    for k in range(m - 1, -1, -1):
        pulled[k] = _unit(np.linalg.solve(mats[k], pulled[k + 1]))
    budget = rotation_budget(A, flow, omega, epsilon, step)
    plan = PerturbationPlan("swap_oseledets", (omega, 0.0, float(m)))
    plan.audit.update(dict(m=m, epsilon=epsilon, theta_budget=budget.theta, gamma=budget.gamma,
                           tau_hat=budget.tau_hat, tau_tilde=budget.tau_tilde,
                           start_angle=line_angle(e1, pulled[0]),
                           per_segment_xi_max=epsilon / 2.0))
    u = e1
    hit = False
    for k in range(m):
        origin = advance(flow, omega, float(k))
        shear, hit = _steer(A, flow, origin, u, pulled[k], epsilon, budget, step)
        coast, tau, xi = shear
        rec = ShearRecord(omega, float(k + coast), float(tau), float(xi))
        if xi != 0.0:
            plan.shears.append(rec)
            seg = build_generator(A, flow, [ShearRecord(origin, coast, tau, xi)])
            u = _unit(propagate(seg, flow, origin, 1.0, step).matrix @ u)
        else:
            u = _unit(mats[k] @ u)
        if hit:
            break
    B = build_generator(A, flow, plan.shears)
    image = e1
    for M in block_matrices(B, flow, omega, np.arange(m + 1, dtype=float), step):
        image = _unit(M @ image)
    miss = line_angle(image, target)
    plan.residuals["swap_rad"] = miss
    plan.audit["segments_used"] = len(plan.shears)
    plan.generator = B
    if miss > SWAP_TOL:
        raise SwapInfeasibleError(
            f"E1 reaches E2 only within {miss:.3g} rad after m = {m} unit segments "
            f"(start angle {plan.audit['start_angle']:.3g} rad, per-segment shear "
            f"|xi| <= {epsilon / 2:.3g}, theta budget {budget.theta:.3g})"
        )
    return plan


# --------------------------------------------------------------------------
# exponent mixing
# --------------------------------------------------------------------------

FRAME_DT = 0.05
FRAME_BURN = 60.0
MIX_MIN_TAU = 100.0
# largest log growth of E1 against E2 allowed between consecutive swaps; the
# swap residual (~1e-12 rad) must stay small after that much amplification
LEAK_LOG = 25.0
# two swaps with little growth between them do not cancel, so demand this much
SPLIT_MIN = 8.0
BALANCE_BIN = 0.25


@dataclass(frozen=True)
class MixingResult:
    generator: KineticGenerator
    exponent: float
    plan: PerturbationPlan
    converged: bool
    control: float


@dataclass
class _OrbitFrames:
    t: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    angle: np.ndarray
    split: np.ndarray  # cumulative log growth of E1 minus that of E2
    lam1: float
    lam2: float


def _orbit_frames(A, flow, omega, tau, step, dt=FRAME_DT, burn=FRAME_BURN):
    """Oseledets lines on the grid ``0, dt, ..., tau`` from a single pass."""
    n = int(round(tau / dt))
    nb = int(round(burn / dt))
    times = np.arange(-nb, n + nb + 1) * dt
    mats = block_matrices(A, flow, omega, times, step)
    fwd, flog = spectrum_push(mats, np.array([0.6, 0.8]))
    bwd, blog = spectrum_pull(mats, np.array([0.8, -0.6]))
    e1 = fwd[nb - 1:nb + n]
    e2 = bwd[nb:nb + n + 1]
    g1 = flog[nb:nb + n]
    g2 = -blog[nb:nb + n]
    split = np.concatenate([[0.0], np.cumsum(g1 - g2)])
    ang = np.array([line_angle(a, b) for a, b in zip(e1, e2)])
    return _OrbitFrames(np.arange(n + 1) * dt, e1, e2, ang, split,
                        float(g1.sum() / tau), float(g2.sum() / tau))


def finite_time_exponent(B: KineticGenerator, flow: FlowSpec, omega: BasePoint, tau: float,
                         step: float = DEFAULT_STEP) -> float:
    """``(1/tau) log ||Phi_B(tau, omega)||`` through renormalised unit blocks."""
    if not tau > 0:
        raise InvalidInputError("tau must be positive")
    times = np.append(np.arange(0.0, tau, 1.0), tau)
    if times[-1] - times[-2] < 1e-12:
        times = times[:-1]
    mats = block_matrices(B, flow, omega, times, step)
    P = np.eye(2)
    log_scale = 0.0
    for M in mats:
        P = M @ P
        s = np.abs(P).max()
        P /= s
        log_scale += math.log(s)
    return (log_scale + math.log(np.linalg.norm(P, 2))) / tau


def _angle_minima(ang):
    i = np.arange(1, len(ang) - 1)
    return i[(ang[i] <= ang[i - 1]) & (ang[i] < ang[i + 1])]


def _balanced_swaps(split, cand, mstep, leak=LEAK_LOG):
    """Pick swap indices so the alternating sum of split growths is near zero.

    Between swaps the growth of ``E1`` over ``E2`` is ``g_j``; the mixed
    propagator has norm about ``exp(|g_0 - g_1 + g_2 - ...| / 2)`` as long as
    every interior ``g_j`` is large; each one is kept in ``[SPLIT_MIN, leak]``.  Returns a list of
    indices into the frame grid, or ``None``.
    """
    end = len(split) - 1
    nodes = [0] + [int(c) for c in cand] + [end]
    # states: node -> {(parity, bin): (balance, previous state)}
    states = [dict() for _ in nodes]
    states[0][(0, 0)] = (0.0, None)
    for a in range(len(nodes) - 1):
        if not states[a]:
            continue
        for b in range(a + 1, len(nodes)):
            if a > 0 and b < len(nodes) - 1 and nodes[b] - nodes[a] < mstep:
                continue
            g = split[nodes[b]] - split[nodes[a]]
            if a > 0 and g > leak:
                if g > 2.0 * leak:
                    break
                continue
            if a > 0 and b < len(nodes) - 1 and g < SPLIT_MIN:
                continue
            for (par, _), (bal, _) in list(states[a].items()):
                nb = bal + (g if par == 0 else -g)
                key = (1 - par, int(round(nb / BALANCE_BIN)))
                if key not in states[b] or abs(nb) < abs(states[b][key][0]):
                    states[b][key] = (nb, (a, par, bal))
    final = states[-1]
    if not final:
        return None
    key = min(final, key=lambda k: abs(final[k][0]))
    # walk back
    path = []
    node, (bal, prev) = len(nodes) - 1, final[key]
    while prev is not None:
        a, par, pbal = prev
        if a > 0:
            path.append(nodes[a])
        node = a
        k = (par, int(round(pbal / BALANCE_BIN)))
        bal, prev = states[a][k]
    return sorted(path)


def mixing_perturbation(A: KineticGenerator, flow: FlowSpec, omega: BasePoint, tau: float,
                        epsilon: float, step: float = DEFAULT_STEP, m: int = 2) -> MixingResult:
    """Swap ``E1`` onto ``E2`` along ``phi^[0, tau](omega)`` to mix the two growth rates.

    One mid-orbit swap leaves a residual along ``E1`` that regrows like
    ``exp((lambda1 - lambda2) t)``, so the swap is repeated.  Candidate start
    times are the local minima of the angle between the Oseledets lines where
    a swap succeeds; the chosen subset balances the growth accumulated between
    swaps.  With a short orbit the choice reduces to one swap near ``tau/2``.
    """
    if not tau > 0:
        raise InvalidInputError("tau must be positive")
    fr = _orbit_frames(A, flow, omega, tau, step)
    gap = fr.lam1 - fr.lam2
    if gap <= DEGENERATE_GAP:
        raise DegenerateFrameError(f"spectral gap {gap:.3g} too small for a swap")
    mstep = int(round(m / FRAME_DT))
    plans = {}
    for i in _angle_minima(fr.angle):
        if i + mstep >= len(fr.t):
            continue
        w = advance(flow, omega, float(fr.t[i]))
        frame = OseledetsFrame(sign_normalize(fr.e1[i]), sign_normalize(fr.e2[i]),
                               float(fr.angle[i]), gap, False)
        try:
            plans[int(i)] = swap_oseledets(A, flow, w, m, epsilon, step, frame=frame,
                                           target=fr.e2[i + mstep])
        except (SwapInfeasibleError, RotationInfeasibleError):
            continue
    chosen = _balanced_swaps(fr.split, sorted(plans), mstep) if plans else None
    if not chosen:
        raise SwapInfeasibleError(
            f"no balanced set of feasible swaps on [0, {tau:g}] "
            f"({len(plans)} feasible candidates, m = {m})"
        )
    shears = []
    for i in chosen:
        for rec in plans[i].shears:
            shears.append(ShearRecord(omega, float(fr.t[i] + rec.start), rec.duration, rec.xi))
    B = build_generator(A, flow, shears)
    plan = PerturbationPlan("mixing_perturbation", (omega, 0.0, float(tau)), shears)
    plan.generator = B
    exponent = finite_time_exponent(B, flow, omega, tau, step)
    control = finite_time_exponent(A, flow, omega, tau, step)
    nodes = [0] + chosen + [len(fr.t) - 1]
    g = np.diff(fr.split[nodes])
    plan.residuals["max_swap_rad"] = max(plans[i].residuals["swap_rad"] for i in chosen)
    plan.audit.update(dict(lambda1=fr.lam1, lambda2=fr.lam2, swaps=len(chosen),
                           swap_times=[float(fr.t[i]) for i in chosen], m=m, epsilon=epsilon,
                           imbalance=float(np.sum(g * (-1.0) ** np.arange(len(g)))),
                           candidates=len(plans), exponent=exponent, control=control,
                           target=0.5 * (fr.lam1 + fr.lam2)))
    return MixingResult(B, exponent, plan, tau >= MIX_MIN_TAU, control)


@dataclass(frozen=True)
class SweepResult:
    plans: tuple
    le_before: float
    le_after: float
    eligible: int
    infeasible: int
    report: object


def global_mixing_sweep(A: KineticGenerator, flow: FlowSpec, sample: SampleSet, m: float,
                        tau: float, epsilon: float, step: float = DEFAULT_STEP, report=None,
                        swap_m: int = 2, threads=None) -> SweepResult:
    """Mix every ``undominated_simple`` point of the sample independently.

    Points are perturbed on their own orbit pieces; sample orbits of an
    irrational flow are almost surely disjoint, so the per-point generators
    stand in for one global perturbation.  ``le_after`` averages the mixed
    finite-time exponent over perturbed points and ``lambda1`` elsewhere.
    """
    from .parallel import ordered_map
    from .splitting import UNDOMINATED, classify_sample

    if report is None:
        report = classify_sample(A, flow, sample, m, step=step, threads=threads)
    pvs = report.per_point
    before = [pv.lambda1 for pv in pvs]
    if any(not math.isfinite(x) for x in before):
        raise ConstructionFailureError("classification left points without an exponent")
    eligible = [i for i, pv in enumerate(pvs) if pv.verdict == UNDOMINATED]

    def one(i):
        try:
            return mixing_perturbation(A, flow, pvs[i].omega, tau, epsilon, step, swap_m)
        except (SwapInfeasibleError, DegenerateFrameError):
            return None

    results = ordered_map(one, eligible, threads)
    failed = sum(r is None for r in results)
    if eligible and failed > 0.2 * len(eligible):
        raise SwapInfeasibleError(f"{failed} of {len(eligible)} eligible points admit no mixing swap")
    after = list(before)
    plans = [None] * len(pvs)
    for i, r in zip(eligible, results):
        if r is not None:
            after[i] = r.exponent
            plans[i] = r.plan
    return SweepResult(tuple(plans), float(np.mean(before)), float(np.mean(after)),
                       len(eligible), failed, report)
