"""Planar stationary curves of the weighted perimeter |x|**p.

A unit-speed curve gamma with outward normal nu = (gamma_2', -gamma_1')
and classical curvature kappa = <gamma', nu'> has generalized curvature

    k = p |gamma|**(p-2) <gamma, nu> + |gamma|**p kappa,

which is constant along boundaries of perimeter-stationary sets.  Writing
w = gamma_1 gamma_2' - gamma_2 gamma_1', constancy of k is equivalent to
the second-order system

    gamma_1'' = (gamma_2' / |gamma|**p) * (-k + p |gamma|**(p-2) w)
    gamma_2'' = (gamma_1' / |gamma|**p) * ( k - p |gamma|**(p-2) w),

integrated here with a fixed-step classical Runge-Kutta scheme (default
step: circumference / 4096 for the circle through the start).  Fixed steps
keep runs bitwise reproducible; the step is halved and the run repeated
whenever unit speed drifts beyond 1e-9.

The right-hand side is even in the reflection (gamma_1, gamma_2, t) ->
(gamma_1, -gamma_2, -t), so a trajectory started on the positive x-axis
with vertical velocity must coincide with its own reflection; the defect
of that coincidence is a global integration diagnostic.

Circles centered at the origin through distance d are stationary with
k = (p + 1) * d**(p - 1).

For the graph boundary (f(t), t) of a set whose boundary passes through
the origin tangentially (f(0) = 0, f'(0) = 0), the generalized curvature
along the graph is

    m(t) = p |a|**p / sqrt(1 + f'**2) * (t f' - f) / |a|**2
           + |a|**p * f'' / (1 + f'**2)**(3/2),       a = (f(t), t),

and m(t) -> 0 as t -> 0 whenever p > 0, with (t f' - f) / t**2 -> f''(0)/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .domains import CURVE_CLOSURE_TOL, CURVE_SPEED_TOL, PlanarCurve
from .errors import (
    DomainError,
    EvaluationError,
    PreconditionError,
    SingularityError,
)

DEFAULT_STEPS_PER_TURN = 4096
ORIGIN_ABORT_RADIUS = 1e-8
SPEED_DRIFT_TOL = 1e-9
SPEED_SANITY_BOUND = 1e-3
MAX_STEP_HALVINGS = 6
BLOWUP_FACTOR = 1e6


@dataclass(frozen=True)
class ELState:
    """Position, unit velocity, exponent, and curvature label of a trajectory."""

    gamma: tuple[float, float]
    alpha: tuple[float, float]
    p: float
    k: float
    t: float = 0.0

    def __post_init__(self):
        g = (float(self.gamma[0]), float(self.gamma[1]))
        a = (float(self.alpha[0]), float(self.alpha[1]))
        if math.hypot(*g) <= 0.0:
            raise DomainError("state at the origin: the system is undefined there")
        if abs(math.hypot(*a) - 1.0) > 1e-9:
            raise DomainError(f"velocity must be unit, got |alpha| = {math.hypot(*a)}")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "alpha", a)


def circle_curvature(p: float, d: float) -> float:
    """Generalized curvature (p+1) d**(p-1) of the centered circle radius d."""
    if d <= 0:
        raise DomainError(f"radius must be positive, got {d}")
    return (p + 1.0) * d ** (p - 1.0)


def _rhs(p, k, g1, g2, a1, a2):
    rm_sq = g1 * g1 + g2 * g2
    rm = math.sqrt(rm_sq)
    w = g1 * a2 - g2 * a1
    c = (k - p * rm ** (p - 2.0) * w) / rm**p
    return -a2 * c, a1 * c


def _rk4_run(p, k, g1, g2, a1, a2, h, steps):
    """Fixed-step RK4; returns (samples, abort_reason)."""
    out = [(0.0, g1, g2, a1, a2)]
    blowup = BLOWUP_FACTOR * (1.0 + math.hypot(g1, g2))
    t = 0.0
    for i in range(steps):
        b1, c1 = _rhs(p, k, g1, g2, a1, a2)
        g1b = g1 + 0.5 * h * a1
        g2b = g2 + 0.5 * h * a2
        a1b = a1 + 0.5 * h * b1
        a2b = a2 + 0.5 * h * c1
        b2, c2 = _rhs(p, k, g1b, g2b, a1b, a2b)
        g1c = g1 + 0.5 * h * a1b
        g2c = g2 + 0.5 * h * a2b
        a1c = a1 + 0.5 * h * b2
        a2c = a2 + 0.5 * h * c2
        b3, c3 = _rhs(p, k, g1c, g2c, a1c, a2c)
        g1d = g1 + h * a1c
        g2d = g2 + h * a2c
        a1d = a1 + h * b3
        a2d = a2 + h * c3
        b4, c4 = _rhs(p, k, g1d, g2d, a1d, a2d)
        g1 = g1 + h * (a1 + 2.0 * a1b + 2.0 * a1c + a1d) / 6.0
        g2 = g2 + h * (a2 + 2.0 * a2b + 2.0 * a2c + a2d) / 6.0
        a1 = a1 + h * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0
        a2 = a2 + h * (c1 + 2.0 * c2 + 2.0 * c3 + c4) / 6.0
        # a corrupt step (stage hit the singularity) is dropped, not kept
        if abs(math.hypot(a1, a2) - 1.0) > SPEED_SANITY_BOUND:
            return out, "divergence"
        t = (i + 1) * h
        out.append((t, g1, g2, a1, a2))
        rm = math.hypot(g1, g2)
        if rm < ORIGIN_ABORT_RADIUS:
            return out, "near-origin"
        if rm > blowup:
            return out, "divergence"
    return out, None


def _integrate_raw(p, k, start_gamma, start_alpha, t_end, step):
    """Run RK4 toward t_end (sign gives direction), halving on speed drift."""
    duration = abs(t_end)
    if duration <= 0:
        raise DomainError(f"t_end must be nonzero, got {t_end}")
    sign = 1.0 if t_end > 0 else -1.0
    for _ in range(MAX_STEP_HALVINGS + 1):
        steps = max(1, round(duration / step))
        h = sign * duration / steps
        samples, abort = _rk4_run(
            p, k, start_gamma[0], start_gamma[1], start_alpha[0], start_alpha[1], h, steps
        )
        drift = max(abs(math.hypot(a1, a2) - 1.0) for _, _, _, a1, a2 in samples)
        if drift <= SPEED_DRIFT_TOL or abort is not None:
            return samples, abort
        step *= 0.5
    raise PreconditionError(
        f"unit speed drift {drift:.3e} persists after {MAX_STEP_HALVINGS} halvings"
    )


def default_step(start: ELState) -> float:
    d = math.hypot(*start.gamma)
    return 2.0 * math.pi * d / DEFAULT_STEPS_PER_TURN


def integrate_el(
    p: float,
    start: ELState,
    t_end: float,
    step: float | None = None,
) -> PlanarCurve:
    """Integrate the stationary-curve system forward to t_end.

    Aborts near the origin or on blowup return the partial trajectory with
    ``aborted`` set; otherwise the curve is marked closed when the final
    point returns to the start within the closure tolerance.
    """
    if step is None:
        step = default_step(start)
    if step <= 0:
        raise DomainError(f"step must be positive, got {step}")
    samples, abort = _integrate_raw(p, start.k, start.gamma, start.alpha, t_end, step)
    arr = np.array(samples, dtype=float)
    if abort is not None:
        # keep only the prefix still within the curve-container speed tolerance
        dev = np.abs(np.hypot(arr[:, 3], arr[:, 4]) - 1.0)
        bad = np.nonzero(dev > CURVE_SPEED_TOL)[0]
        if bad.size:
            arr = arr[: bad[0]]
        if arr.shape[0] < 2:
            raise EvaluationError(
                f"integration degenerated immediately (abort: {abort})"
            )
    if t_end < 0:
        # reparametrize by increasing time: reverse order, flip tangents
        arr = arr[::-1]
        arr[:, 3:5] = -arr[:, 3:5]
    t = arr[:, 0]
    gamma = arr[:, 1:3]
    dgamma = arr[:, 3:5]
    gap = float(np.hypot(*(gamma[0] - gamma[-1])))
    closed = abort is None and gap <= CURVE_CLOSURE_TOL
    return PlanarCurve(
        t=t - t[0],
        gamma=gamma,
        dgamma=dgamma,
        closed=closed,
        p_exponent=float(p),
        k=float(start.k),
        aborted=abort,
    )


def _fd_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order first derivative of equally spaced samples.

    One-sided stencils at the ends even for closed curves: wrapping across
    the join would amplify the integrator's closure gap by 1/h.
    """
    v = values
    m = v.shape[0]
    out = np.empty_like(v)
    if m < 5:
        raise PreconditionError("need at least 5 samples for curvature")
    out[2:-2] = (-v[4:] + 8.0 * v[3:-1] - 8.0 * v[1:-3] + v[:-4]) / (12.0 * h)
    for i in (0, 1):
        out[i] = (
            -25.0 * v[i] + 48.0 * v[i + 1] - 36.0 * v[i + 2]
            + 16.0 * v[i + 3] - 3.0 * v[i + 4]
        ) / (12.0 * h)
        out[m - 1 - i] = -(
            -25.0 * v[m - 1 - i] + 48.0 * v[m - 2 - i] - 36.0 * v[m - 3 - i]
            + 16.0 * v[m - 4 - i] - 3.0 * v[m - 5 - i]
        ) / (12.0 * h)
    return out


def generalized_curvature_series(curve: PlanarCurve) -> np.ndarray:
    """k along the whole curve, with kappa from finite differences of gamma'."""
    radius = np.hypot(curve.gamma[:, 0], curve.gamma[:, 1])
    if float(radius.min()) <= 1e-12:
        raise SingularityError("curve sample at the origin")
    steps = np.diff(curve.t)
    h = float(steps[0])
    if not np.allclose(steps, h, rtol=1e-9, atol=1e-12):
        raise PreconditionError("curvature series needs uniform sample spacing")
    nu = np.stack([curve.dgamma[:, 1], -curve.dgamma[:, 0]], axis=-1)
    dnu = np.empty_like(nu)
    dnu[:, 0] = _fd_derivative(nu[:, 0], h)
    dnu[:, 1] = _fd_derivative(nu[:, 1], h)
    kappa = np.sum(curve.dgamma * dnu, axis=-1)
    p = curve.p_exponent
    inner = np.sum(curve.gamma * nu, axis=-1)
    return p * radius ** (p - 2.0) * inner + radius**p * kappa


def generalized_curvature(curve: PlanarCurve, t: float) -> float:
    """k at one sample time of the curve."""
    idx = int(np.argmin(np.abs(curve.t - t)))
    if abs(float(curve.t[idx]) - t) > 0.5 * float(curve.t[1] - curve.t[0]) + 1e-12:
        raise DomainError(f"t = {t} is not within half a step of any sample")
    return float(generalized_curvature_series(curve)[idx])


class SymmetryReport(NamedTuple):
    applicable: bool
    defect: float
    passed: bool
    reason: str


SYMMETRY_TOL = 1e-7


def check_symmetry(curve: PlanarCurve, tol: float = SYMMETRY_TOL) -> SymmetryReport:
    """Compare a trajectory with its reflection run backward in time.

    Only meaningful for curves produced by ``integrate_el`` from a start on
    the positive x-axis with velocity (0, +-1); anything else is reported
    as not applicable rather than failed.
    """
    if curve.k is None:
        return SymmetryReport(False, math.nan, False, "curve carries no curvature label")
    g0 = curve.gamma[0]
    a0 = curve.dgamma[0]
    scale = 1.0 + abs(float(g0[0]))
    if not (g0[0] > 0 and abs(g0[1]) <= 1e-9 * scale and abs(a0[0]) <= 1e-9):
        return SymmetryReport(
            False, math.nan, False,
            "start is not on the positive x-axis with vertical velocity",
        )
    duration = float(curve.t[-1] - curve.t[0])
    step = float(curve.t[1] - curve.t[0])
    samples, abort = _integrate_raw(
        curve.p_exponent, curve.k,
        (float(g0[0]), float(g0[1])), (float(a0[0]), float(a0[1])),
        -duration, step,
    )
    if abort is not None:
        return SymmetryReport(False, math.nan, False, f"backward run aborted: {abort}")
    back = np.array(samples, dtype=float)
    if back.shape[0] != curve.t.size:
        return SymmetryReport(False, math.nan, False, "sample counts differ")
    mirrored = np.stack([back[:, 1], -back[:, 2]], axis=-1)
    defect = float(np.max(np.hypot(*(curve.gamma - mirrored).T)))
    return SymmetryReport(True, defect, defect < tol, "")


class ShootResult(NamedTuple):
    k: float
    closure_error: float


def _first_return(p, k, d, step, t_max):
    """Axis crossing data (miss, closure) for the upward return, or None."""
    steps = max(1, int(math.ceil(t_max / step)))
    h = t_max / steps
    g1, g2, a1, a2 = d, 0.0, 0.0, 1.0
    blowup = BLOWUP_FACTOR * (1.0 + d)
    for i in range(steps):
        p1, p2, v1, v2 = g1, g2, a1, a2
        b1, c1 = _rhs(p, k, g1, g2, a1, a2)
        g1b = g1 + 0.5 * h * a1
        g2b = g2 + 0.5 * h * a2
        a1b = a1 + 0.5 * h * b1
        a2b = a2 + 0.5 * h * c1
        b2, c2 = _rhs(p, k, g1b, g2b, a1b, a2b)
        g1c = g1 + 0.5 * h * a1b
        g2c = g2 + 0.5 * h * a2b
        a1c = a1 + 0.5 * h * b2
        a2c = a2 + 0.5 * h * c2
        b3, c3 = _rhs(p, k, g1c, g2c, a1c, a2c)
        g1d = g1 + h * a1c
        g2d = g2 + h * a2c
        a1d = a1 + h * b3
        a2d = a2 + h * c3
        b4, c4 = _rhs(p, k, g1d, g2d, a1d, a2d)
        g1 = g1 + h * (a1 + 2.0 * a1b + 2.0 * a1c + a1d) / 6.0
        g2 = g2 + h * (a2 + 2.0 * a2b + 2.0 * a2c + a2d) / 6.0
        a1 = a1 + h * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0
        a2 = a2 + h * (c1 + 2.0 * c2 + 2.0 * c3 + c4) / 6.0
        rm = math.hypot(g1, g2)
        if rm < ORIGIN_ABORT_RADIUS or rm > blowup:
            return None
        if i > 0 and p2 < 0.0 <= g2 and g1 > 0 and a2 > 0:
            # Hermite refinement of the crossing inside this step
            tau = _hermite_root(p2, v2, g2, a2, h)
            x1 = _hermite_eval(p1, v1, g1, a1, h, tau)
            vx1 = _hermite_deriv(p1, v1, g1, a1, h, tau)
            vx2 = _hermite_deriv(p2, v2, g2, a2, h, tau)
            closure = math.hypot(x1 - d, 0.0) + math.hypot(vx1 - 0.0, vx2 - 1.0)
            return x1 - d, closure
    return None


def _hermite_eval(f0, m0, f1, m1, h, tau):
    s = tau / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * f0 + h10 * h * m0 + h01 * f1 + h11 * h * m1


def _hermite_deriv(f0, m0, f1, m1, h, tau):
    s = tau / h
    d00 = 6 * s * (s - 1) / h
    d10 = (1 - 4 * s + 3 * s * s)
    d01 = -6 * s * (s - 1) / h
    d11 = (3 * s * s - 2 * s)
    return d00 * f0 + d10 * m0 + d01 * f1 + d11 * m1


def _hermite_root(f0, m0, f1, m1, h):
    lo, hi = 0.0, h
    v_lo = f0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        v = _hermite_eval(f0, m0, f1, m1, h, mid)
        if (v_lo <= 0) == (v <= 0):
            lo, v_lo = mid, v
        else:
            hi = mid
    return 0.5 * (lo + hi)


def shoot_closed(
    p: float,
    d: float,
    k_range,
    tol: float = 1e-8,
    step: float | None = None,
    t_max: float | None = None,
) -> list[ShootResult]:
    """Bisect the transverse return miss over a k-grid for closed orbits.

    Starts sit at (d, 0) with velocity (0, 1); each candidate k integrates
    until the first upward crossing of the positive x-axis (or t_max).
    Grid cells whose miss changes sign are bisected to width ``tol``; pairs
    with a lost trajectory on either side are skipped.  Matching a closed
    orbit's enclosed area to a target is left to the caller.
    """
    if d <= 0:
        raise DomainError(f"start distance must be positive, got {d}")
    ks = sorted(float(k) for k in k_range)
    if len(ks) < 2:
        raise PreconditionError("k_range needs at least two grid values")
    if step is None:
        step = 2.0 * math.pi * d / DEFAULT_STEPS_PER_TURN
    if t_max is None:
        t_max = 10.0 * 2.0 * math.pi * d

    misses = {k: _first_return(p, k, d, step, t_max) for k in ks}
    roots: list[ShootResult] = []
    for k_lo, k_hi in zip(ks[:-1], ks[1:]):
        lo, hi = misses[k_lo], misses[k_hi]
        if lo is None or hi is None:
            continue
        if lo[0] == 0.0:
            roots.append(ShootResult(k_lo, lo[1]))
            continue
        if (lo[0] < 0) == (hi[0] < 0):
            continue
        a, b = k_lo, k_hi
        fa = lo
        best = lo if abs(lo[0]) < abs(hi[0]) else hi
        while b - a > tol:
            mid = 0.5 * (a + b)
            fm = _first_return(p, mid, d, step, t_max)
            if fm is None:
                break
            if abs(fm[0]) < abs(best[0]):
                best = fm
            if (fa[0] < 0) == (fm[0] < 0):
                a, fa = mid, fm
            else:
                b = mid
        roots.append(ShootResult(0.5 * (a + b), best[1]))
    return roots


@dataclass(frozen=True)
class C2Function:
    """A scalar function with two derivatives, for graph-boundary checks."""

    name: str
    value: Callable[[float], float]
    deriv: Callable[[float], float]
    deriv2: Callable[[float], float]


class BoundaryLimitResult(NamedTuple):
    t: np.ndarray
    m: np.ndarray
    half_curvature_ratio: np.ndarray  # (t f' - f) / t**2, limit f''(0)/2


def boundary_limit_m(f: C2Function, p: float, t_grid) -> BoundaryLimitResult:
    """Generalized curvature m(t) along the graph (f(t), t) near t = 0.

    Requires p > 0, f(0) = 0, and a strictly decreasing positive grid; the
    returned ratio samples (t f' - f)/t**2 converge to f''(0)/2.
    """
    if not p > 0:
        raise PreconditionError(f"the boundary limit needs p > 0, got {p}")
    t = np.asarray(list(t_grid), dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(t <= 0) or np.any(np.diff(t) >= 0):
        raise PreconditionError("t_grid must be positive and strictly decreasing")
    f0 = float(f.value(0.0))
    if abs(f0) > 1e-12:
        raise PreconditionError(f"f(0) = {f0} must vanish")
    fv = np.array([float(f.value(x)) for x in t])
    fd = np.array([float(f.deriv(x)) for x in t])
    fdd = np.array([float(f.deriv2(x)) for x in t])
    norm_sq = fv * fv + t * t
    slope_sq = fd * fd
    m = (
        p * norm_sq ** (p / 2.0) / np.sqrt(1.0 + slope_sq)
        * (t * fd - fv) / norm_sq
        + norm_sq ** (p / 2.0) * fdd / (1.0 + slope_sq) ** 1.5
    )
    ratio = (t * fd - fv) / (t * t)
    return BoundaryLimitResult(t=t, m=m, half_curvature_ratio=ratio)
