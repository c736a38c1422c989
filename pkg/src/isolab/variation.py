"""Variation checks around centered balls.

Two families of perturbations are covered.

Translations: for the ball of radius r centered at the origin, the weighted
boundary area after a shift by s along the first axis is

    P(s) = integral_Q (r**2 + 2 s r cos(phi_1) + s**2)**(p/2) r**(n-1) g dphi.

P is even in s, so the first variation at s = 0 vanishes; the second
variation has the closed form

    P''(0) = (r**(p-2) / n) * omega * r**(n-1) * p * (p - 2 + n),

whose sign is the sign of p * (p + n - 2).  The classifier maps that sign
to stable / marginal / unstable.  Finite-difference checks integrate the
pointwise difference quotient, which is algebraically identical to
differencing P and avoids magnifying quadrature noise by 1/h**2.

Normal perturbations under a radial weight G: for a volume-preserving
normal field u on the sphere of radius r (mean projected out), the second
variation splits into

    M1 = G(r) * ( integral |grad_Sigma u|**2 - (n-1)/r**2 * integral u**2 )
    M2 = ( (n-1) G'(r) / r + G''(r) ) * integral u**2.

M1 is nonnegative by the sphere's Poincare inequality; first-degree
harmonics make it vanish.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import AngularField
from .errors import DomainError, PreconditionError, SingularityError
from .hypersphere import metric_diagonal_many, surface_element_many
from .measures import RadialDensity, unit_sphere_area
from .quadrature import integrate_box

FIRST_DIFF_STEP = 1e-4
SECOND_DIFF_STEP = 1e-3


def _check_ball(n: int, p: float, r: float, s: float = 0.0) -> None:
    if not isinstance(n, int) or n < 2:
        raise DomainError(f"need integer dimension >= 2, got {n!r}")
    if r <= 0:
        raise DomainError(f"ball radius must be positive, got {r}")
    if p < 0 and abs(s) >= r:
        raise SingularityError(
            f"shift |s| = {abs(s)} >= r = {r} puts the origin on or outside "
            f"the ball with p = {p} < 0"
        )


def translated_ball_perimeter(
    n: int, p: float, r: float, s: float, order: int | None = None
) -> tuple[float, float]:
    """Weighted boundary area of the r-ball shifted by s along axis 1."""
    _check_ball(n, p, r, s)

    def f(phi):
        x1 = r * np.cos(phi[..., 0])
        dist_sq = r * r + 2.0 * s * x1 + s * s
        return dist_sq ** (p / 2.0) * r ** (n - 1) * surface_element_many(n, phi)

    return integrate_box(f, n, order)


def translation_scan(n: int, p: float, r: float, s_grid) -> np.ndarray:
    """P(s) sampled over a shift grid (exploration helper)."""
    return np.array(
        [translated_ball_perimeter(n, p, r, float(s))[0] for s in s_grid]
    )


def first_variation_translation(
    n: int, p: float, r: float, order: int | None = None
) -> float:
    """Central difference dP/ds at s = 0 with step 1e-4 * r.

    Evaluated as one integral of the pointwise difference quotient.  The
    symmetry s -> -s makes the true value 0 for every (n, p, r); checks
    only cover the weight t**p, criticality under other radial weights is
    not implemented.
    """
    _check_ball(n, p, r)
    h = FIRST_DIFF_STEP * r

    def f(phi):
        x1 = r * np.cos(phi[..., 0])
        plus = (r * r + 2.0 * h * x1 + h * h) ** (p / 2.0)
        minus = (r * r - 2.0 * h * x1 + h * h) ** (p / 2.0)
        return (plus - minus) / (2.0 * h) * r ** (n - 1) * surface_element_many(n, phi)

    value, _ = integrate_box(f, n, order)
    return value


def second_variation_translation_closed_form(n: int, p: float, r: float) -> float:
    """P''(0) = (r**(p-2)/n) * omega * r**(n-1) * p * (p - 2 + n)."""
    _check_ball(n, p, r)
    return (r ** (p - 2.0) / n) * unit_sphere_area(n) * r ** (n - 1) * p * (p - 2.0 + n)


def classify_translation_stability(n: int, p: float) -> str:
    """Sign of p * (p + n - 2) mapped to stable / marginal / unstable."""
    if not isinstance(n, int) or n < 2:
        raise DomainError(f"need integer dimension >= 2, got {n!r}")
    q = p * (p + n - 2.0)
    if q > 0:
        return "stable"
    if q < 0:
        return "unstable"
    return "marginal"


@dataclass(frozen=True)
class VariationReport:
    """Summary of the translation variations of one centered ball."""

    n: int
    p: float
    r: float
    first: float
    second_numeric: float
    second_analytic: float
    classification: str

    FIRST_TOL_SCALE = 1e-6
    SECOND_REL_TOL = 1e-3

    def first_tolerance(self) -> float:
        return self.FIRST_TOL_SCALE * unit_sphere_area(self.n) * self.r ** (
            self.n + self.p - 1.0
        )

    def violations(self) -> list[str]:
        """Invariant failures, empty when the report is consistent."""
        out = []
        if abs(self.first) > self.first_tolerance():
            out.append(
                f"first variation {self.first:.3e} exceeds {self.first_tolerance():.3e}"
            )
        scale = abs(self.second_analytic)
        if scale > 0 and abs(self.second_numeric - self.second_analytic) > (
            self.SECOND_REL_TOL * scale
        ):
            out.append(
                f"second variation mismatch: numeric {self.second_numeric:.12g} "
                f"vs analytic {self.second_analytic:.12g}"
            )
        return out

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "p_or_density": f"t^{self.p:g}",
            "r": self.r,
            "first": self.first,
            "second_numeric": self.second_numeric,
            "second_analytic": self.second_analytic,
            "classification": self.classification,
        }

    def csv_row(self) -> tuple:
        return (
            self.n,
            f"t^{self.p:g}",
            self.r,
            self.first,
            self.second_numeric,
            self.second_analytic,
            self.classification,
        )


VARIATION_CSV_COLUMNS = (
    "n", "p_or_density", "r", "first", "second_numeric", "second_analytic", "classification",
)


def second_variation_translation(
    n: int, p: float, r: float, order: int | None = None
) -> VariationReport:
    """Numeric and closed-form P''(0) with step 1e-3 * r, plus classification."""
    _check_ball(n, p, r)
    h = SECOND_DIFF_STEP * r

    def f(phi):
        x1 = r * np.cos(phi[..., 0])
        plus = (r * r + 2.0 * h * x1 + h * h) ** (p / 2.0)
        minus = (r * r - 2.0 * h * x1 + h * h) ** (p / 2.0)
        center = (r * r) ** (p / 2.0)
        quot = (plus - 2.0 * center + minus) / (h * h)
        return quot * r ** (n - 1) * surface_element_many(n, phi)

    numeric, _ = integrate_box(f, n, order)
    return VariationReport(
        n=n,
        p=float(p),
        r=float(r),
        first=first_variation_translation(n, p, r, order),
        second_numeric=numeric,
        second_analytic=second_variation_translation_closed_form(n, p, r),
        classification=classify_translation_stability(n, p),
    )


def first_harmonic(n: int) -> AngularField:
    """The coordinate function x_1 restricted to the sphere: cos(phi_1)."""

    def value(phi):
        return np.cos(phi[..., 0])

    def gradient(phi):
        out = np.zeros(np.shape(phi), dtype=float)
        out[..., 0] = -np.sin(phi[..., 0])
        return out

    return AngularField("harmonic-deg1", {"axis": 1}, value, gradient)


def second_harmonic_zonal(n: int) -> AngularField:
    """The degree-2 zonal harmonic x_1**2 - 1/n on the sphere."""

    def value(phi):
        return np.cos(phi[..., 0]) ** 2 - 1.0 / n

    def gradient(phi):
        out = np.zeros(np.shape(phi), dtype=float)
        out[..., 0] = -np.sin(2.0 * phi[..., 0])
        return out

    return AngularField("harmonic-deg2-zonal", {"axis": 1}, value, gradient)


def transverse_harmonic(n: int) -> AngularField:
    """The coordinate function x_2 on the sphere: cos(phi_2) sin(phi_1)."""
    if n < 3:
        raise DomainError("x_2 as an angular field needs n >= 3")

    def value(phi):
        return np.cos(phi[..., 1]) * np.sin(phi[..., 0])

    def gradient(phi):
        out = np.zeros(np.shape(phi), dtype=float)
        out[..., 0] = np.cos(phi[..., 1]) * np.cos(phi[..., 0])
        out[..., 1] = -np.sin(phi[..., 1]) * np.sin(phi[..., 0])
        return out

    return AngularField("harmonic-x2", {"axis": 2}, value, gradient)


def second_variation_radial_density(
    n: int,
    G: RadialDensity,
    r: float,
    u: AngularField,
    order: int | None = None,
) -> tuple[float, float, float]:
    """Second variation (M1, M2, total) of a normal perturbation u.

    The mean of u over the sphere is projected out first so the
    perturbation preserves volume to first order; G must supply two
    derivatives at r.
    """
    if r <= 0:
        raise DomainError(f"ball radius must be positive, got {r}")
    if G.deriv is None or G.deriv2 is None:
        raise PreconditionError(f"density {G.name!r} lacks derivatives")
    omega = unit_sphere_area(n)

    mean_int, _ = integrate_box(
        lambda phi: np.asarray(u.value(phi), dtype=float)
        * surface_element_many(n, phi),
        n,
        order,
    )
    mean = mean_int / omega

    def u_sq(phi):
        vals = np.asarray(u.value(phi), dtype=float) - mean
        return vals * vals * surface_element_many(n, phi)

    int_u_sq, err_u_sq = integrate_box(u_sq, n, order)

    check, _ = integrate_box(
        lambda phi: (np.asarray(u.value(phi), dtype=float) - mean)
        * surface_element_many(n, phi),
        n,
        order,
    )
    norm = np.sqrt(max(int_u_sq, 0.0) * omega)
    if abs(check) > 1e-10 * (1.0 + norm):
        raise PreconditionError(
            f"mean of u does not project out: residual {check:.3e}"
        )

    if u.gradient is not None:
        grad_fn = u.gradient
    else:
        from .domains import _fd_gradient

        def grad_fn(phi):
            return _fd_gradient(u.value, phi)

    def grad_sq(phi):
        grad = np.asarray(grad_fn(phi), dtype=float)
        d = metric_diagonal_many(n, phi)
        return np.sum(grad * grad / d, axis=-1) * surface_element_many(n, phi)

    int_grad_sq, _ = integrate_box(grad_sq, n, order)

    # transfer unit-sphere integrals to the sphere of radius r
    boundary_u_sq = r ** (n - 1) * int_u_sq
    boundary_grad_sq = r ** (n - 3) * int_grad_sq

    m1 = float(G(r)) * (boundary_grad_sq - (n - 1) / (r * r) * boundary_u_sq)
    m2 = ((n - 1) * float(G.deriv(r)) / r + float(G.deriv2(r))) * boundary_u_sq
    return m1, m2, m1 + m2
