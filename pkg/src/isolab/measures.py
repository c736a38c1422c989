"""Volumes, weighted perimeters, and the central inequality report.

The quantity under study compares, for a body ``Omega`` in R^n and a radial
weight ``|x|**p`` on its boundary,

    lhs = (n * vol(Omega) / omega)**((n + p - 1) / n)
    rhs = (1 / omega) * integral_{boundary} |x|**p dH^(n-1)

where ``omega`` is the surface area of the unit sphere S^(n-1).  Balls
centered at the origin give ``lhs = rhs`` exactly, so the ratio ``rhs/lhs``
is a scale-invariant figure of merit with 1 as the reference value.

Starshaped volumes use ``vol = (1/n) * integral_Q r**n g``, and weighted
perimeters use the covariant form of the graph area element,

    integral_Q a(r) * r**(n-1) * sqrt(1 + |grad_S r|**2 / r**2) * g,

with ``|grad_S r|**2 = sum_i (dr/dphi_i)**2 / d_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Integral
from typing import Callable

import numpy as np

from .domains import CompositeCounterexample, IntervalUnion, PlanarCurve, StarshapedDomain
from .errors import DomainError, EvaluationError, SingularityError
from .hypersphere import (
    covariant_gradient_sq_many,
    surface_element_many,
)
from .quadrature import integrate_box, integrate_interval, pairwise_sum


def unit_sphere_area(n: int) -> float:
    """Surface area of S^(n-1) in R^n: 2 pi^(n/2) / Gamma(n/2)."""
    if not isinstance(n, int) or n < 1:
        raise DomainError(f"need integer dimension >= 1, got {n!r}")
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n."""
    return unit_sphere_area(n) / n


@dataclass(frozen=True)
class RadialDensity:
    """A radial weight t -> a(t) with optional derivatives."""

    name: str
    value: Callable
    deriv: Callable | None = None
    deriv2: Callable | None = None

    def __call__(self, t):
        return self.value(t)


def power_density(p: float) -> RadialDensity:
    """The weight t**p with analytic first and second derivatives."""
    p = float(p)
    return RadialDensity(
        name=f"t^{p:g}",
        value=lambda t: np.asarray(t, dtype=float) ** p,
        deriv=lambda t: p * np.asarray(t, dtype=float) ** (p - 1.0),
        deriv2=lambda t: p * (p - 1.0) * np.asarray(t, dtype=float) ** (p - 2.0),
    )


def volume_starshaped(dom: StarshapedDomain, order: int | None = None) -> tuple[float, float]:
    """Volume (1/n) * integral_Q r**n g of a starshaped body, with error."""
    n = dom.n

    def f(phi):
        r = dom.radius(phi)
        return r**n * surface_element_many(n, phi)

    value, err = integrate_box(f, n, order)
    return value / n, err / n


def weighted_perimeter_starshaped(
    dom: StarshapedDomain,
    density: RadialDensity,
    order: int | None = None,
) -> tuple[float, float]:
    """Weighted boundary area of a starshaped body, with error estimate."""
    n = dom.n

    def f(phi):
        r = dom.radius(phi)
        grad = dom.radius_gradient(phi)
        grad_sq = covariant_gradient_sq_many(n, phi, grad)
        a = np.asarray(density(r), dtype=float)
        if not np.all(np.isfinite(a)):
            raise EvaluationError(
                f"density {density.name!r} non-finite on radii "
                f"[{r.min():.6g}, {r.max():.6g}]"
            )
        return a * r ** (n - 1) * np.sqrt(1.0 + grad_sq / (r * r)) * surface_element_many(n, phi)

    return integrate_box(f, n, order)


def weighted_perimeter_curve(curve: PlanarCurve, p: float) -> tuple[float, float]:
    """Line integral of |gamma|**p along a sampled unit-speed curve.

    Closed curves use the periodic trapezoid rule, which converges
    spectrally for smooth data; open curves use the plain trapezoid rule.
    The error estimate compares against the half-resolution rule.
    """
    gamma = curve.gamma
    radius = np.hypot(gamma[:, 0], gamma[:, 1])
    if p < 0 and float(radius.min()) <= 1e-12:
        raise SingularityError(
            f"curve reaches the origin (min |gamma| = {radius.min():.3e}) with p < 0"
        )
    speed = np.hypot(curve.dgamma[:, 0], curve.dgamma[:, 1])
    vals = radius**p * speed
    value = float(np.trapezoid(vals, curve.t))
    coarse = float(np.trapezoid(vals[::2], curve.t[::2]))
    return value, abs(value - coarse)


def weighted_perimeter_1d(u: IntervalUnion, p):
    """Sum of |endpoint|**p over the boundary of an interval union.

    Integer ``p`` with integer or Fraction endpoints is computed exactly in
    rational arithmetic; anything else falls back to float.
    """
    endpoints = u.endpoints
    if p <= 0 and any(x == 0 for x in endpoints):
        raise SingularityError(f"zero endpoint with p = {p} <= 0")
    exact = u.is_exact() and isinstance(p, Integral) and not isinstance(p, bool)
    if exact:
        total = Fraction(0)
        for x in endpoints:
            total += Fraction(abs(x)) ** int(p)
        return total
    return pairwise_sum([abs(float(x)) ** float(p) for x in endpoints])


@dataclass(frozen=True)
class CounterexamplePieces:
    """Per-piece breakdown of the glued body's volume and weighted area."""

    volume_half_ball: float
    volume_tube: float
    volume_cut_ball: float
    area_hemisphere: float
    area_tube_inner: float   # lateral piece over x_1 in (0, eps**2)
    area_tube_outer: float   # lateral piece over x_1 in (eps**2, tube length)
    area_cut_sphere: float


@dataclass(frozen=True)
class CounterexampleMeasures:
    volume: float
    volume_error: float
    perimeter: float
    perimeter_error: float
    pieces: CounterexamplePieces

    @property
    def area_tube(self) -> float:
        return self.pieces.area_tube_inner + self.pieces.area_tube_outer


def counterexample_measures(body: CompositeCounterexample) -> CounterexampleMeasures:
    """Volume and weighted perimeter of the glued body, piece by piece.

    The half ball and tube have closed-form volumes; the cut ball's volume
    subtracts a cap computed by slice quadrature.  The weighted boundary
    splits into the small hemisphere (closed form), the tube's lateral
    surface (interval quadrature, graded toward the gluing plane), and the
    cut sphere (slice quadrature).  Internal gluing disks are not boundary.
    """
    n, p, R, eps = body.n, body.p, body.R, body.eps
    omega_n = unit_sphere_area(n)        # area of S^(n-1)
    omega_low = unit_sphere_area(n - 1)  # area of S^(n-2)
    alpha_n = unit_ball_volume(n)
    alpha_low = unit_ball_volume(n - 1)
    ell = body.tube_length
    offset = body.axis_offset

    vol_half_ball = 0.5 * alpha_n * eps ** (2 * n)
    vol_tube = alpha_low * eps ** (n - 1)

    # cap cut away from the big ball: slices at distance u in (offset, R)
    # from its center, flipped so the vanishing end sits at the graded side
    def cap_slice(v):
        u = R - np.asarray(v, dtype=float)
        return alpha_low * (R * R - u * u) ** ((n - 1) / 2.0)

    cap = integrate_interval(cap_slice, 0.0, R - offset)
    vol_cut_ball = alpha_n * R**n - cap.value

    area_hemisphere = 0.5 * omega_n * eps ** (2 * (n - 1) + 2 * p)

    tube_r = eps**2

    def lateral(x):
        x = np.asarray(x, dtype=float)
        return (x * x + eps**4) ** (p / 2.0)

    lat_in = integrate_interval(lateral, 0.0, tube_r)
    lat_out = integrate_interval(lateral, tube_r, ell)
    lat_coeff = omega_low * eps ** (2 * (n - 2))
    area_tube_inner = lat_coeff * lat_in.value
    area_tube_outer = lat_coeff * lat_out.value

    # cut sphere: axial slices u = x_1 - c_eps in (-offset, R); substitute
    # v = R - u so the (R**2 - u**2)^((n-3)/2) factor degenerates at v = 0
    c = body.c_eps

    def sphere_slice(v):
        u = R - np.asarray(v, dtype=float)
        rho_sq = R * R - u * u
        dist_sq = (c + u) ** 2 + rho_sq
        return dist_sq ** (p / 2.0) * rho_sq ** ((n - 3) / 2.0)

    sphere = integrate_interval(sphere_slice, 0.0, R + offset)
    area_cut_sphere = omega_low * R * sphere.value

    pieces = CounterexamplePieces(
        volume_half_ball=vol_half_ball,
        volume_tube=vol_tube,
        volume_cut_ball=vol_cut_ball,
        area_hemisphere=area_hemisphere,
        area_tube_inner=area_tube_inner,
        area_tube_outer=area_tube_outer,
        area_cut_sphere=area_cut_sphere,
    )
    volume = vol_half_ball + vol_tube + vol_cut_ball
    perimeter = area_hemisphere + area_tube_inner + area_tube_outer + area_cut_sphere
    vol_err = cap.error
    per_err = lat_coeff * (lat_in.error + lat_out.error) + omega_low * R * sphere.error
    return CounterexampleMeasures(
        volume=volume,
        volume_error=vol_err,
        perimeter=perimeter,
        perimeter_error=per_err,
        pieces=pieces,
    )


CSV_COLUMNS = ("n", "p", "family", "params_hash", "lhs", "rhs", "ratio", "slack", "quad_error")


@dataclass(frozen=True)
class InequalityReport:
    """One evaluation of the weighted isoperimetric comparison."""

    n: int
    p: float
    lhs: float
    rhs: float
    ratio: float
    slack: float
    quadrature_error: float
    family: str = ""
    params_hash: str = ""

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "family": self.family,
            "params_hash": self.params_hash,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "slack": self.slack,
            "quad_error": self.quadrature_error,
        }

    def csv_row(self) -> tuple:
        return (
            self.n,
            self.p,
            self.family,
            self.params_hash,
            self.lhs,
            self.rhs,
            self.ratio,
            self.slack,
            self.quadrature_error,
        )


def inequality_report(
    volume: float,
    weighted_perimeter: float,
    n: int,
    p: float,
    quadrature_error: float = 0.0,
    family: str = "",
    params_hash: str = "",
) -> InequalityReport:
    """Assemble lhs, rhs, ratio, and slack from a volume and a perimeter."""
    if volume <= 0 or weighted_perimeter <= 0:
        raise DomainError(
            f"need positive measures, got volume={volume}, perimeter={weighted_perimeter}"
        )
    omega = unit_sphere_area(n)
    exponent = (n + p - 1.0) / n
    lhs = (n * volume / omega) ** exponent
    rhs = weighted_perimeter / omega
    return InequalityReport(
        n=n,
        p=float(p),
        lhs=lhs,
        rhs=rhs,
        ratio=rhs / lhs,
        slack=rhs - lhs,
        quadrature_error=float(quadrature_error),
        family=family,
        params_hash=params_hash,
    )


def report_for_domain(
    dom: StarshapedDomain, p: float, order: int | None = None
) -> InequalityReport:
    """Volume + weighted perimeter + comparison for a starshaped body."""
    vol, vol_err = volume_starshaped(dom, order)
    per, per_err = weighted_perimeter_starshaped(dom, power_density(p), order)
    omega = unit_sphere_area(dom.n)
    exponent = (dom.n + p - 1.0) / dom.n
    lhs = (dom.n * vol / omega) ** exponent
    # first-order propagation of both quadrature errors into the comparison
    qerr = abs(exponent) * lhs / vol * vol_err + per_err / omega
    return inequality_report(
        vol, per, dom.n, p, qerr, dom.family, dom.params_hash()
    )
