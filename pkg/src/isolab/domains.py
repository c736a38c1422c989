"""Domain constructors: starshaped bodies, planar curves, interval unions,
and the glued counterexample body.

Starshaped domains are radial graphs ``phi -> R(phi) H(phi)`` over the unit
sphere, with the radius field given by a named closed-form family.  Fields
are vectorized over angle matrices of shape ``(m, n-1)`` and expose either
analytic partial derivatives or central finite differences with step
``1e-6 * (1 + |phi_i|)`` per axis.

The composite family glues a half ball of radius ``eps**2`` (on the side
``x_1 <= 0``), a thin tube of radius ``eps**2`` and length ``eps**(-n+1)``
along the ``x_1`` axis, and a large ball of radius ``R`` centered at
``(c_eps, 0, ..., 0)`` cut by the plane ``x_1 = eps**(-n+1)``, where

    c_eps = sqrt(R**2 - eps**4) + eps**(-n+1).

With this choice the sphere's cross-section at the cutting plane has radius
exactly ``eps**2``, so the tube meets the big ball flush.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import ConstructionError, DomainError, RegimeError
from .hypersphere import TWO_PI
from . import quadrature

FD_STEP_SCALE = 1e-6
CURVE_SPEED_TOL = 1e-8
CURVE_CLOSURE_TOL = 1e-6


@dataclass(frozen=True)
class AngularField:
    """A scalar field on the sphere given in angle coordinates.

    ``value`` maps an (m, n-1) angle matrix to m values; ``gradient``, when
    present, returns the (m, n-1) matrix of partials with respect to phi.
    """

    name: str
    params: dict
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None


def _fd_gradient(value: Callable, phi: np.ndarray) -> np.ndarray:
    out = np.empty_like(phi, dtype=float)
    for i in range(phi.shape[-1]):
        h = FD_STEP_SCALE * (1.0 + np.abs(phi[..., i]))
        hi = phi.copy()
        lo = phi.copy()
        hi[..., i] += h
        lo[..., i] -= h
        out[..., i] = (value(hi) - value(lo)) / (2.0 * h)
    return out


def _constant_field(params: dict, n: int) -> AngularField:
    radius = float(params["radius"])
    if radius <= 0:
        raise ConstructionError(f"radius must be positive, got {radius}")

    def value(phi):
        return np.full(np.shape(phi)[:-1], radius, dtype=float)

    def gradient(phi):
        return np.zeros(np.shape(phi), dtype=float)

    return AngularField("constant", {"radius": radius}, value, gradient)


def _perturbed_field(params: dict, n: int) -> AngularField:
    base = float(params["base_radius"])
    delta = float(params["delta"])
    harmonic = int(params.get("harmonic", 1))
    if base <= 0:
        raise ConstructionError(f"base_radius must be positive, got {base}")
    if not abs(delta) < 1:
        raise ConstructionError(f"|delta| must be < 1, got {delta}")
    if harmonic < 1:
        raise ConstructionError(f"harmonic order must be >= 1, got {harmonic}")

    def value(phi):
        return base * (1.0 + delta * np.cos(harmonic * phi[..., 0]))

    def gradient(phi):
        out = np.zeros(np.shape(phi), dtype=float)
        out[..., 0] = -base * delta * harmonic * np.sin(harmonic * phi[..., 0])
        return out

    clean = {"base_radius": base, "delta": delta, "harmonic": harmonic}
    return AngularField("perturbed", clean, value, gradient)


def _random_trig_field(params: dict, n: int) -> AngularField:
    base = float(params["base_radius"])
    amplitude = float(params["amplitude"])
    seed = int(params["seed"])
    degree = int(params.get("degree", 4))
    n_terms = int(params.get("terms", 6))
    if base <= 0:
        raise ConstructionError(f"base_radius must be positive, got {base}")
    if not 0 <= amplitude < 1:
        raise ConstructionError(f"amplitude must lie in [0, 1), got {amplitude}")
    if not 1 <= degree <= 4:
        raise ConstructionError(f"degree must lie in 1..4, got {degree}")
    if n_terms < 1:
        raise ConstructionError(f"terms must be >= 1, got {n_terms}")

    rng = np.random.default_rng(seed)
    dim = n - 1
    coeffs = rng.uniform(-1.0, 1.0, size=n_terms)
    freqs = rng.integers(0, degree + 1, size=(n_terms, dim))
    use_sin = rng.integers(0, 2, size=(n_terms, dim)).astype(bool)
    use_sin &= freqs > 0  # sin(0 * phi) would kill the whole term
    scale = amplitude / np.sum(np.abs(coeffs))

    def _factors(phi):
        # factors[j, ..., i] = trig(freq[j, i] * phi_i)
        ang = freqs[:, None, :] * phi[None, :, :]
        fac = np.where(use_sin[:, None, :], np.sin(ang), np.cos(ang))
        return fac

    def value(phi):
        phi = np.atleast_2d(np.asarray(phi, dtype=float))
        fac = _factors(phi)
        series = np.sum(coeffs[:, None] * np.prod(fac, axis=-1), axis=0)
        return base * (1.0 + scale * series)

    def gradient(phi):
        phi = np.atleast_2d(np.asarray(phi, dtype=float))
        fac = _factors(phi)
        ang = freqs[:, None, :] * phi[None, :, :]
        dfac = np.where(
            use_sin[:, None, :],
            freqs[:, None, :] * np.cos(ang),
            -freqs[:, None, :] * np.sin(ang),
        )
        out = np.zeros(phi.shape, dtype=float)
        for i in range(phi.shape[-1]):
            others = np.prod(np.delete(fac, i, axis=-1), axis=-1)
            out[..., i] = base * scale * np.sum(
                coeffs[:, None] * dfac[..., i] * others, axis=0
            )
        return out

    clean = {
        "base_radius": base,
        "amplitude": amplitude,
        "seed": seed,
        "degree": degree,
        "terms": n_terms,
    }
    return AngularField("random-trig", clean, value, gradient)


FAMILIES: dict[str, Callable[[dict, int], AngularField]] = {
    "constant": _constant_field,
    "perturbed": _perturbed_field,
    "random-trig": _random_trig_field,
}


@dataclass(frozen=True)
class StarshapedDomain:
    """A starshaped body described by a positive radius field on S^(n-1)."""

    n: int
    field: AngularField
    grad_mode: str = "analytic"

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise ConstructionError(f"need integer dimension >= 2, got {self.n!r}")
        if self.grad_mode not in ("analytic", "finite-difference"):
            raise ConstructionError(f"unknown grad_mode {self.grad_mode!r}")
        if self.grad_mode == "analytic" and self.field.gradient is None:
            raise ConstructionError(
                "analytic grad_mode requires a field with analytic gradient"
            )
        r = self.radius(quadrature.box_grid(self.n, 16).nodes)
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise ConstructionError(
                f"radius field {self.field.name!r} not strictly positive"
            )

    @property
    def family(self) -> str:
        return self.field.name

    @property
    def params(self) -> dict:
        return dict(self.field.params)

    def radius(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        return np.asarray(self.field.value(phi), dtype=float)

    def radius_gradient(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        if self.grad_mode == "analytic":
            return np.asarray(self.field.gradient(phi), dtype=float)
        return _fd_gradient(self.field.value, phi)

    def powered(self, exponent: float) -> "StarshapedDomain":
        """The domain with radius field R**exponent (same gradient mode)."""
        base = self.field
        expo = float(exponent)

        def value(phi):
            return base.value(phi) ** expo

        gradient = None
        if base.gradient is not None:
            def gradient(phi):
                v = np.asarray(base.value(phi), dtype=float)
                return expo * (v ** (expo - 1.0))[..., None] * np.asarray(
                    base.gradient(phi), dtype=float
                )

        child = AngularField(
            name=f"{base.name}^({expo:g})",
            params={**base.params, "power": expo},
            value=value,
            gradient=gradient,
        )
        return StarshapedDomain(self.n, child, self.grad_mode)

    def params_hash(self) -> str:
        payload = {"family": self.family, "n": self.n, "params": self.params}
        digest = hashlib.sha256(
            json.dumps(payload, sort_keys=True).encode()
        ).hexdigest()
        return digest[:12]


def make_starshaped(
    family: str, params: dict, n: int, grad_mode: str = "analytic"
) -> StarshapedDomain:
    """Build a registered radius-field family as a StarshapedDomain."""
    try:
        builder = FAMILIES[family]
    except KeyError:
        raise ConstructionError(
            f"unknown family {family!r}; registered: {sorted(FAMILIES)}"
        ) from None
    return StarshapedDomain(n, builder(dict(params), n), grad_mode)


@dataclass(frozen=True)
class PlanarCurve:
    """A sampled curve in the plane with unit-speed parametrization.

    Samples are (t_i, gamma_i, dgamma_i) stored as separate arrays; ``k``
    is the generalized-curvature label of an integrated trajectory and
    ``aborted`` records why an integration stopped early, if it did.
    """

    t: np.ndarray
    gamma: np.ndarray
    dgamma: np.ndarray
    closed: bool
    p_exponent: float
    k: float | None = None
    aborted: str | None = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        gamma = np.asarray(self.gamma, dtype=float)
        dgamma = np.asarray(self.dgamma, dtype=float)
        if t.ndim != 1 or gamma.shape != (t.size, 2) or dgamma.shape != (t.size, 2):
            raise ConstructionError(
                f"inconsistent sample shapes {t.shape}, {gamma.shape}, {dgamma.shape}"
            )
        if t.size < 2 or np.any(np.diff(t) <= 0):
            raise ConstructionError("sample times must be strictly increasing")
        speed = np.hypot(dgamma[:, 0], dgamma[:, 1])
        dev = float(np.max(np.abs(speed - 1.0)))
        if dev > CURVE_SPEED_TOL:
            raise ConstructionError(f"unit-speed violated by {dev:.3e}")
        if self.closed:
            gap = float(np.hypot(*(gamma[0] - gamma[-1])))
            if gap > CURVE_CLOSURE_TOL:
                raise ConstructionError(f"closed curve with endpoint gap {gap:.3e}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "dgamma", dgamma)

    @property
    def length(self) -> float:
        return float(self.t[-1] - self.t[0])


def ball_curve(radius: float, center=(0.0, 0.0), samples: int = 1024) -> PlanarCurve:
    """Unit-speed circle of given radius; ``samples`` arclength subdivisions."""
    radius = float(radius)
    if radius <= 0:
        raise DomainError(f"radius must be positive, got {radius}")
    if samples < 16:
        raise DomainError(f"need at least 16 samples, got {samples}")
    cx, cy = (float(center[0]), float(center[1]))
    t = np.linspace(0.0, TWO_PI * radius, samples + 1)
    u = t / radius
    gamma = np.stack([cx + radius * np.cos(u), cy + radius * np.sin(u)], axis=-1)
    dgamma = np.stack([-np.sin(u), np.cos(u)], axis=-1)
    return PlanarCurve(t=t, gamma=gamma, dgamma=dgamma, closed=True, p_exponent=0.0)


@dataclass(frozen=True)
class IntervalUnion:
    """A finite union of disjoint open intervals on the line."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        cleaned = []
        for pair in self.intervals:
            a, b = pair
            if isinstance(a, float) or isinstance(b, float):
                a, b = float(a), float(b)
            if not a < b:
                raise ConstructionError(f"empty or inverted interval ({a}, {b})")
            cleaned.append((a, b))
        cleaned.sort(key=lambda ab: float(ab[0]))
        for (a1, b1), (a2, b2) in zip(cleaned[:-1], cleaned[1:]):
            # closures must be disjoint too, so touching endpoints are out
            if not b1 < a2:
                raise ConstructionError(
                    f"intervals ({a1}, {b1}) and ({a2}, {b2}) have intersecting closures"
                )
        object.__setattr__(self, "intervals", tuple(cleaned))

    @property
    def endpoints(self) -> tuple:
        return tuple(x for pair in self.intervals for x in pair)

    def total_length(self):
        lengths = [b - a for a, b in self.intervals]
        total = lengths[0]
        for piece in lengths[1:]:
            total = total + piece
        return total

    def contains_origin(self) -> bool:
        return any(a < 0 < b for a, b in self.intervals)

    def is_exact(self) -> bool:
        return all(
            isinstance(x, (int, Fraction)) and not isinstance(x, bool)
            for x in self.endpoints
        )


@dataclass(frozen=True)
class CompositeCounterexample:
    """Half ball + thin tube + cut ball, glued along the x_1 axis."""

    n: int
    p: float
    R: float
    eps: float

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 3:
            raise RegimeError(f"composite body needs n >= 3, got {self.n!r}")
        if not (-self.n + 1 < self.p < 0):
            raise RegimeError(
                f"exponent p={self.p} outside (-n+1, 0) = ({-self.n + 1}, 0)"
            )
        if not 0 < self.eps < 1:
            raise RegimeError(f"eps must lie in (0, 1), got {self.eps}")
        if not self.eps**4 < self.R**2:
            raise RegimeError(
                f"need eps**4 < R**2, got eps**4={self.eps**4} vs R**2={self.R**2}"
            )

    @property
    def tube_length(self) -> float:
        return self.eps ** (-self.n + 1)

    @property
    def axis_offset(self) -> float:
        """Distance from the gluing plane to the big ball's center,
        c_eps - tube_length = sqrt(R**2 - eps**4)."""
        return math.sqrt(self.R**2 - self.eps**4)

    @property
    def c_eps(self) -> float:
        return self.axis_offset + self.tube_length

    @property
    def tube_radius(self) -> float:
        return self.eps**2

    def interface_radius(self) -> float:
        """Cross-section radius sqrt(R**2 - (c_eps - tube_length)**2) of the
        cut ball at the gluing plane; equals eps**2 identically."""
        return math.sqrt(self.R**2 - self.axis_offset**2)


def counterexample_domain(n: int, p: float, R: float, eps: float) -> CompositeCounterexample:
    """Construct the glued body, validating the parameter regime."""
    return CompositeCounterexample(n=int(n), p=float(p), R=float(R), eps=float(eps))
