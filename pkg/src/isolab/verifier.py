"""Executable inequality chains for the weighted isoperimetric problem.

Each chain decomposes a proof into its displayed inequalities, evaluates
both sides of every step by quadrature, and reports the per-step slack
``rhs - lhs``.  A chain passes only when every step does.

Two chains are implemented for starshaped bodies:

* a radial-density comparison: for a weight ``a`` whose associated profile
  ``h(t) = a(t**(1/n)) * t**((n-1)/n)`` is non-increasing and convex, the
  weighted boundary integral of a body is at least that of the centered
  ball of equal volume (steps: volume identity, surface-element lower
  bound, Jensen on the profile, final comparison);

* a power-weight interpolation for exponents 0 < p < 1 in dimension
  n >= 3: substituting Z = R**((p+n-1)/(n-1)) turns the weighted
  perimeter into a tilt-corrected area, which is pushed down to the
  classical isoperimetric inequality for the auxiliary body and recombined
  through a Hoelder step with exponents q = (p+n-1)/(pn) and
  q' = (p+n-1)/((n-1)(1-p)).

The module also covers the one-dimensional trichotomy for interval unions
and the vanishing-perimeter study of the composite counterexample family,
whose pieces decay with known exponents as the neck parameter shrinks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral

import numpy as np

from .domains import IntervalUnion, StarshapedDomain, counterexample_domain
from .errors import DomainError, PreconditionError, RegimeError
from .hypersphere import covariant_gradient_sq_many, surface_element_many
from .measures import (
    CounterexamplePieces,
    InequalityReport,
    RadialDensity,
    counterexample_measures,
    inequality_report,
    power_density,
    unit_ball_volume,
    unit_sphere_area,
    volume_starshaped,
    weighted_perimeter_1d,
    weighted_perimeter_starshaped,
)
from .quadrature import BOX_DEFAULT_ORDER, box_grid, integrate_box

H_GRID_POINTS = 256
H_GRID_BELOW = 0.5
H_GRID_ABOVE = 2.0
_EXACT_TOL = 1e-14
_STEP_FLOOR = 1e-12
_ERROR_MARGIN = 10.0


@dataclass(frozen=True)
class ChainStep:
    """One verified inequality: lhs <= rhs ("le") or lhs = rhs ("eq")."""

    name: str
    lhs: float
    rhs: float
    tolerance: float
    kind: str = "le"

    def __post_init__(self):
        if self.kind not in ("le", "eq"):
            raise DomainError(f"unknown step kind {self.kind!r}")
        if not (self.tolerance >= 0):
            raise DomainError(f"tolerance must be non-negative, got {self.tolerance}")

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        if self.kind == "eq":
            return abs(self.slack) <= self.tolerance
        return self.slack >= -self.tolerance

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "tolerance": self.tolerance,
            "kind": self.kind,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class ChainReport:
    """Ordered step results for one proof chain on one body."""

    chain: str
    n: int
    label: str
    domain_id: str
    steps: tuple

    @property
    def overall(self) -> bool:
        return all(s.passed for s in self.steps)

    @property
    def params(self) -> dict:
        return {"n": self.n, "p_or_density": self.label, "domain_id": self.domain_id}

    def to_json_dict(self) -> dict:
        return {
            "chain": self.chain,
            "params": self.params,
            "steps": [s.to_json_dict() for s in self.steps],
            "overall": self.overall,
        }

    def to_markdown(self) -> str:
        lines = [
            f"## {self.chain} (n={self.n}, {self.label}, domain {self.domain_id})",
            "",
            "| step | lhs | rhs | slack | pass |",
            "| --- | --- | --- | --- | --- |",
        ]
        for s in self.steps:
            mark = "yes" if s.passed else "NO"
            lines.append(
                f"| {s.name} | {s.lhs:.12g} | {s.rhs:.12g} | {s.slack:.3e} | {mark} |"
            )
        lines.append("")
        lines.append(f"overall: {'PASS' if self.overall else 'FAIL'}")
        return "\n".join(lines)


def _le_step(name, lhs, rhs, qerr) -> ChainStep:
    tol = _ERROR_MARGIN * qerr + _STEP_FLOOR * (1.0 + abs(lhs) + abs(rhs))
    return ChainStep(name=name, lhs=lhs, rhs=rhs, tolerance=tol, kind="le")


def _eq_step(name, lhs, rhs, qerr) -> ChainStep:
    tol = _ERROR_MARGIN * qerr + _STEP_FLOOR * (1.0 + abs(lhs) + abs(rhs))
    return ChainStep(name=name, lhs=lhs, rhs=rhs, tolerance=tol, kind="eq")


def _domain_id(dom: StarshapedDomain) -> str:
    return f"{dom.family}-{dom.params_hash()}"


def _profile_grid(dom: StarshapedDomain, n: int):
    """Log-spaced radius grid spanning [min R / 2, 2 max R]."""
    probe = box_grid(n, 16)
    r = dom.radius(probe.nodes)
    lo = H_GRID_BELOW * float(r.min())
    hi = H_GRID_ABOVE * float(r.max())
    return np.geomspace(lo, hi, H_GRID_POINTS)


def check_profile_hypotheses(dom: StarshapedDomain, density: RadialDensity) -> None:
    """Verify a >= 0 and h non-increasing convex on the profile grid.

    h(t) = a(t**(1/n)) t**((n-1)/n) is evaluated as a(rho) rho**(n-1) on
    radii rho with t = rho**n; monotonicity and convexity are tested by
    divided differences in t.  Violations raise with the offending grid
    triple so the failing region is visible.
    """
    n = dom.n
    rho = _profile_grid(dom, n)
    a = np.asarray(density(rho), dtype=float)
    if not np.all(np.isfinite(a)):
        bad = rho[~np.isfinite(a)][0]
        raise PreconditionError(f"density {density.name!r} non-finite at radius {bad:.6g}")
    if np.any(a < 0):
        bad = int(np.argmax(a < 0))
        raise PreconditionError(
            f"density {density.name!r} negative at radius {rho[bad]:.6g}: {a[bad]:.6g}"
        )
    t = rho**n
    h = a * rho ** (n - 1)
    dh = np.diff(h)
    mono_tol = 1e-12 * (1.0 + np.abs(h[:-1]))
    bad = np.nonzero(dh > mono_tol)[0]
    if bad.size:
        i = int(bad[0])
        raise PreconditionError(
            "profile h not non-increasing: "
            f"h({t[i]:.6g}) = {h[i]:.6g} < h({t[i + 1]:.6g}) = {h[i + 1]:.6g} "
            f"(grid triple t = {t[max(i - 1, 0)]:.6g}, {t[i]:.6g}, {t[i + 1]:.6g})"
        )
    slopes = dh / np.diff(t)
    d2 = np.diff(slopes)
    conv_tol = 1e-10 * (1.0 + np.abs(slopes[:-1]) + np.abs(slopes[1:]))
    bad = np.nonzero(d2 < -conv_tol)[0]
    if bad.size:
        i = int(bad[0])
        raise PreconditionError(
            "profile h not convex: slope drops from "
            f"{slopes[i]:.6g} to {slopes[i + 1]:.6g} on the grid triple "
            f"t = {t[i]:.6g}, {t[i + 1]:.6g}, {t[i + 2]:.6g}"
        )


def theorem9_chain(
    dom: StarshapedDomain,
    density: RadialDensity,
    n: int | None = None,
    order: int | None = None,
) -> ChainReport:
    """Radial-density comparison chain against the centered ball.

    Requires the profile h to be non-increasing and convex (checked on a
    log-spaced grid first).  Steps: (1) the volume identity for a
    single-sheet radial graph, (2) dropping the gradient term of the area
    element, (3) Jensen applied to the profile, (4) the resulting bound by
    the equal-volume centered ball's weighted boundary integral.
    """
    if n is not None and n != dom.n:
        raise DomainError(f"dimension mismatch: dom has n={dom.n}, got n={n}")
    n = dom.n
    check_profile_hypotheses(dom, density)
    omega = unit_sphere_area(n)

    vol, vol_err = volume_starshaped(dom, order)
    per, per_err = weighted_perimeter_starshaped(dom, density, order)

    def radial_integrand(phi):
        r = dom.radius(phi)
        return np.asarray(density(r), dtype=float) * r ** (n - 1) * surface_element_many(n, phi)

    radial, radial_err = integrate_box(radial_integrand, n, order)

    mean_t = n * vol / omega
    mean_t_err = n * vol_err / omega
    rho_mean = mean_t ** (1.0 / n)
    h_mean = float(density(rho_mean)) * rho_mean ** (n - 1)
    # sensitivity of h(mean) to the quadrature error in the mean
    probe = max(mean_t_err, 1e-9 * mean_t)
    rho_probe = (mean_t + probe) ** (1.0 / n)
    h_probe = float(density(rho_probe)) * rho_probe ** (n - 1)
    h_mean_err = abs(h_probe - h_mean) * (mean_t_err / probe if probe > 0 else 0.0)

    steps = (
        _le_step("volume_lower_bound", vol, vol, 2.0 * vol_err),
        _le_step("perimeter_lower_bound", radial, per, radial_err + per_err),
        _le_step("jensen", omega * h_mean, radial, omega * h_mean_err + radial_err),
        _le_step("final_comparison", omega * h_mean, per, omega * h_mean_err + per_err),
    )
    return ChainReport(
        chain="radial-density-comparison",
        n=n,
        label=density.name,
        domain_id=_domain_id(dom),
        steps=steps,
    )


def gradient_identity_defect(dom: StarshapedDomain, p: float, order: int | None = None) -> float:
    """Max pointwise relative defect of alpha^2 |grad R|^2/R^2 = |grad Z|^2/Z^2.

    Z = R**alpha with alpha = (p+n-1)/(n-1); the identity is the chain
    rule, so the defect measures the consistency of the two gradient
    evaluations on the quadrature grid.
    """
    n = dom.n
    alpha = (p + n - 1.0) / (n - 1.0)
    zdom = dom.powered(alpha)
    grid = box_grid(n, order if order else BOX_DEFAULT_ORDER[n])
    phi = grid.nodes
    r = dom.radius(phi)
    z = zdom.radius(phi)
    gr = covariant_gradient_sq_many(n, phi, dom.radius_gradient(phi)) / (r * r)
    gz = covariant_gradient_sq_many(n, phi, zdom.radius_gradient(phi)) / (z * z)
    return float(np.max(np.abs(alpha * alpha * gr - gz) / (1.0 + np.abs(gz))))


def interpolation_chain(
    dom: StarshapedDomain,
    p: float,
    order: int | None = None,
) -> ChainReport:
    """Power-weight interpolation chain for 0 < p < 1, n >= 3.

    Rejects n = 2: the exponent bound A >= 1 - p fails there for part of
    the range (0, 1), and the argument needs it.
    """
    n = dom.n
    if n < 3:
        raise RegimeError(
            f"interpolation chain needs n >= 3: for n = {n} the bound "
            "((n-1)/(p+n-1))**2 >= 1-p fails on part of 0 < p < 1"
        )
    if not 0.0 < p < 1.0:
        raise DomainError(f"exponent must lie in (0, 1), got {p}")

    alpha = (p + n - 1.0) / (n - 1.0)
    big_a = 1.0 / (alpha * alpha)
    zdom = dom.powered(alpha)
    omega_ball = unit_ball_volume(n)

    def z_fields(phi):
        z = zdom.radius(phi)
        grad_sq = covariant_gradient_sq_many(n, phi, zdom.radius_gradient(phi))
        return z, grad_sq / (z * z), surface_element_many(n, phi)

    def tilted_a(phi):
        z, u, g = z_fields(phi)
        return z ** (n - 1) * np.sqrt(1.0 + big_a * u) * g

    def tilted_1mp(phi):
        z, u, g = z_fields(phi)
        return z ** (n - 1) * np.sqrt(1.0 + (1.0 - p) * u) * g

    def plain_zn1(phi):
        z, _, g = z_fields(phi)
        return z ** (n - 1) * g

    per_p, per_p_err = weighted_perimeter_starshaped(dom, power_density(p), order)
    i_za, i_za_err = integrate_box(tilted_a, n, order)
    i_z1mp, i_z1mp_err = integrate_box(tilted_1mp, n, order)
    i_zn1, i_zn1_err = integrate_box(plain_zn1, n, order)
    z_per, z_per_err = weighted_perimeter_starshaped(zdom, power_density(0.0), order)
    z_vol, z_vol_err = volume_starshaped(zdom, order)
    vol, vol_err = volume_starshaped(dom, order)
    i_zn = n * z_vol
    i_zn_err = n * z_vol_err

    defect = gradient_identity_defect(dom, p, order)
    defect_tol = 1e-10 if dom.grad_mode == "analytic" else 1e-6

    q = (p + n - 1.0) / (p * n)
    q_conj = (p + n - 1.0) / ((n - 1.0) * (1.0 - p))

    # products of powers: propagate relative errors with the exponents
    def power_err(value, terms):
        rel = sum(abs(e) * (err / base) for base, err, e in terms if base > 0)
        return abs(value) * rel

    concave_lhs = i_zn1**p * z_per ** (1.0 - p)
    concave_err = power_err(
        concave_lhs, [(i_zn1, i_zn1_err, p), (z_per, z_per_err, 1.0 - p)]
    )
    iso_lhs = i_zn ** ((n - 1.0) / n) * (n * omega_ball) ** (1.0 / n)
    iso_err = power_err(iso_lhs, [(i_zn, i_zn_err, (n - 1.0) / n)])
    interp_lhs = (
        i_zn1**p * i_zn ** ((1.0 - p) * (n - 1.0) / n) * (n * omega_ball) ** ((1.0 - p) / n)
    )
    interp_err = power_err(
        interp_lhs,
        [(i_zn1, i_zn1_err, p), (i_zn, i_zn_err, (1.0 - p) * (n - 1.0) / n)],
    )
    hoelder_rhs = i_zn1 ** (1.0 / q) * i_zn ** (1.0 / q_conj)
    hoelder_err = power_err(
        hoelder_rhs, [(i_zn1, i_zn1_err, 1.0 / q), (i_zn, i_zn_err, 1.0 / q_conj)]
    )
    final_lhs = n * omega_ball ** ((1.0 - p) / n) * vol ** ((p + n - 1.0) / n)
    final_err = power_err(final_lhs, [(vol, vol_err, (p + n - 1.0) / n)])

    steps = (
        _le_step("exponent_upper", big_a, 1.0, 0.0),
        _le_step("exponent_lower", 1.0 - p, big_a, 0.0),
        ChainStep("gradient_identity", defect, 0.0, defect_tol, kind="eq"),
        _eq_step("perimeter_z_form", i_za, per_p, i_za_err + per_p_err),
        _le_step("tilt_interpolation", i_z1mp, i_za, i_z1mp_err + i_za_err),
        _le_step("log_concavity", concave_lhs, i_z1mp, concave_err + i_z1mp_err),
        _le_step("isoperimetric_on_powered_domain", iso_lhs, z_per, iso_err + z_per_err),
        _le_step("interpolated_bound", interp_lhs, per_p, interp_err + per_p_err),
        _eq_step("hoelder_exponents", 1.0 / q + 1.0 / q_conj, 1.0, 0.0),
        _le_step("hoelder_inequality", n * vol, hoelder_rhs, n * vol_err + hoelder_err),
        _le_step("final_comparison", final_lhs, per_p, final_err + per_p_err),
    )
    return ChainReport(
        chain="power-interpolation",
        n=n,
        label=f"p={p:g}",
        domain_id=_domain_id(dom),
        steps=steps,
    )


@dataclass(frozen=True)
class OneDimReport:
    """Trichotomy verdict for an interval union, with exact values if possible.

    ``holds`` is the computed truth of (L/2)**p <= (1/2) sum |endpoint|**p;
    ``guaranteed`` says whether the trichotomy promises that outcome for
    this input (p >= 1: always; 0 < p < 1: no promise; p < 0: promised
    for origin-containing unions).
    """

    report: InequalityReport
    holds: bool
    regime: str
    guaranteed: bool
    exact_lhs: Fraction | None = None
    exact_rhs: Fraction | None = None

    @property
    def exact(self) -> bool:
        return self.exact_lhs is not None

    def to_json_dict(self) -> dict:
        out = {
            "report": self.report.to_json_dict(),
            "holds": self.holds,
            "regime": self.regime,
            "guaranteed": self.guaranteed,
            "exact": self.exact,
        }
        if self.exact:
            out["exact_lhs"] = str(self.exact_lhs)
            out["exact_rhs"] = str(self.exact_rhs)
        return out


def onedim_check(u: IntervalUnion, p) -> OneDimReport:
    """Endpoint-sum inequality (L/2)**p <= (1/2) sum |endpoint|**p.

    For p < 0 the origin must lie strictly inside the union.  Rational
    endpoints with integer p are decided in exact arithmetic.
    """
    if p < 0 and not u.contains_origin():
        raise PreconditionError(
            "negative exponents need the origin strictly inside the union"
        )
    per = weighted_perimeter_1d(u, p)
    length = u.total_length()
    exact_lhs = exact_rhs = None
    if isinstance(per, Fraction):
        exact_lhs = Fraction(length, 2) ** int(p)
        exact_rhs = per / 2
        holds = exact_lhs <= exact_rhs
    report = inequality_report(
        volume=float(length),
        weighted_perimeter=float(per),
        n=1,
        p=float(p),
        family="interval-union",
        params_hash=f"m{len(u.intervals)}",
    )
    if exact_lhs is None:
        holds = report.lhs <= report.rhs
    if p >= 1:
        regime, guaranteed = "always-holds", True
    elif p > 0:
        regime, guaranteed = "can-fail", False
    elif p == 0:
        regime, guaranteed = "trivial", True
    else:
        regime, guaranteed = "needs-origin", True
    return OneDimReport(
        report=report,
        holds=holds,
        regime=regime,
        guaranteed=guaranteed,
        exact_lhs=exact_lhs,
        exact_rhs=exact_rhs,
    )


@dataclass(frozen=True)
class DecayRow:
    """Measures of one composite body in the shrinking-neck family."""

    eps: float
    volume: float
    perimeter: float
    ratio: float
    pieces: CounterexamplePieces

    def to_json_dict(self) -> dict:
        return {
            "eps": self.eps,
            "volume": self.volume,
            "perimeter": self.perimeter,
            "ratio": self.ratio,
            "pieces": {
                "hemisphere": self.pieces.area_hemisphere,
                "tube_inner": self.pieces.area_tube_inner,
                "tube_outer": self.pieces.area_tube_outer,
                "cut_sphere": self.pieces.area_cut_sphere,
            },
        }


@dataclass(frozen=True)
class DecayReport:
    """Log-log decay rates of the counterexample pieces as eps shrinks."""

    n: int
    p: float
    radius: float
    rows: tuple
    fitted_slopes: dict
    reference_exponents: dict
    neck_case: int

    @property
    def perimeter_decreasing(self) -> bool:
        per = [row.perimeter for row in self.rows]
        return all(b < a for a, b in zip(per, per[1:]))

    @property
    def volume_limit(self) -> float:
        return unit_ball_volume(self.n) * self.radius**self.n

    @property
    def any_violation(self) -> bool:
        return any(row.ratio < 1.0 for row in self.rows)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "radius": self.radius,
            "neck_case": self.neck_case,
            "rows": [row.to_json_dict() for row in self.rows],
            "fitted_slopes": dict(sorted(self.fitted_slopes.items())),
            "reference_exponents": dict(sorted(self.reference_exponents.items())),
            "perimeter_decreasing": self.perimeter_decreasing,
            "volume_limit": self.volume_limit,
            "any_violation": self.any_violation,
        }


def counterexample_decay(n: int, p: float, radius: float, eps_list) -> DecayReport:
    """Measure the composite family along a decreasing eps grid.

    Rows are ordered as given; the grid must be strictly decreasing with
    at least three values so the log-log slope fits are overdetermined.
    Piece slopes are compared by the caller against the reference
    exponents; the logarithmic borderline neck case has no finite
    reference and stores ``None``.
    """
    eps = [float(e) for e in eps_list]
    if len(eps) < 3:
        raise PreconditionError(f"need at least 3 eps values, got {len(eps)}")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise PreconditionError("eps grid must be strictly decreasing")
    rows = []
    for e in eps:
        body = counterexample_domain(n, p, radius, e)
        meas = counterexample_measures(body)
        rep = inequality_report(
            volume=meas.volume,
            weighted_perimeter=meas.perimeter,
            n=n,
            p=p,
            quadrature_error=meas.volume_error + meas.perimeter_error,
            family="composite-counterexample",
            params_hash=f"R{radius:g}-eps{e:g}",
        )
        rows.append(
            DecayRow(
                eps=e,
                volume=meas.volume,
                perimeter=meas.perimeter,
                ratio=rep.ratio,
                pieces=meas.pieces,
            )
        )

    log_eps = np.log([row.eps for row in rows])

    def slope(values):
        v = np.asarray(values, dtype=float)
        if np.any(v <= 0):
            return math.nan
        return float(np.polyfit(log_eps, np.log(v), 1)[0])

    fitted = {
        "perimeter": slope([r.perimeter for r in rows]),
        "hemisphere": slope([r.pieces.area_hemisphere for r in rows]),
        "tube_inner": slope([r.pieces.area_tube_inner for r in rows]),
        "tube_outer": slope([r.pieces.area_tube_outer for r in rows]),
        "cut_sphere": slope([r.pieces.area_cut_sphere for r in rows]),
    }
    if p > -1.0:
        neck_case = 1
        outer_ref = 2.0 * (n - 2) - (n - 1) * (p + 1.0)
    elif p == -1.0:
        neck_case = 2
        outer_ref = None
    else:
        neck_case = 3
        outer_ref = 2.0 * (n - 2) + 2.0 * (p + 1.0)
    reference = {
        "hemisphere": 2.0 * (n + p - 1.0),
        "tube_inner": 2.0 * (n + p - 1.0),
        "tube_outer": outer_ref,
        "cut_sphere": -p * (n - 1.0),
    }
    return DecayReport(
        n=n,
        p=p,
        radius=radius,
        rows=tuple(rows),
        fitted_slopes=fitted,
        reference_exponents=reference,
        neck_case=neck_case,
    )


def shifted_density(density: RadialDensity, at: float) -> RadialDensity:
    """The density a(t) - a(at): subtracting its value at one radius.

    Derivatives are unchanged.  Useful for exploring comparisons where
    only the varying part of the weight matters.
    """
    offset = float(density(at))

    def value(t):
        return density(t) - offset

    return RadialDensity(
        name=f"{density.name} - {density.name}({at:g})",
        value=value,
        deriv=density.deriv,
        deriv2=density.deriv2,
    )
