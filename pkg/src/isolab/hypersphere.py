"""Hyperspherical coordinates and the metric data of radial graphs.

Angles live in the open box ``Q = (0, pi)^(n-2) x (0, 2*pi)``.  With the
conventions ``phi_0 = pi/2`` and ``phi_n = 0`` the embedding of the unit
sphere ``S^(n-1)`` in ``R^n`` is

    H_k(phi) = cos(phi_k) * prod_{l=0}^{k-1} sin(phi_l),    k = 1, ..., n.

The induced metric in these coordinates is diagonal,

    d_i(phi) = prod_{l=0}^{i-1} sin(phi_l)^2,               i = 1, ..., n-1,

so ``d_1 = 1``, and the spherical surface element is

    g(phi) = prod_{k=1}^{n-2} sin(phi_k)^(n-k-1),

with ``g identically 1`` when ``n = 2``.  Note ``g^2 = prod_i d_i``.

For a positive radial graph ``phi -> r(phi) H(phi)`` the area element of the
graph is the square root of

    r^(2n-4) * ( sum_i (dr/dphi_i)^2 * d_1 ... \hat{d_i} ... d_{n-1}
                 + r^2 * prod_i d_i ),

where the hat marks a skipped factor.  Dropping the gradient term shows the
element is never smaller than ``r^(n-1) g(phi)``.

The functions ending in ``_many`` are vectorized over a trailing angle axis
and accept arrays of shape ``(..., n-1)``; the thin wrappers taking an
``AngleVector`` validate a single point strictly inside ``Q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi


def box_ranges(n: int) -> list[tuple[float, float]]:
    """Coordinate ranges of the open angle box for S^(n-1)."""
    if not isinstance(n, int) or n < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {n!r}")
    return [(0.0, math.pi)] * (n - 2) + [(0.0, TWO_PI)]


@dataclass(frozen=True)
class AngleVector:
    """A single angle tuple strictly inside the open box Q."""

    n: int
    phi: tuple[float, ...]

    def __post_init__(self):
        ranges = box_ranges(self.n)
        phi = tuple(float(x) for x in self.phi)
        if len(phi) != self.n - 1:
            raise DomainError(
                f"expected {self.n - 1} angles for n={self.n}, got {len(phi)}"
            )
        for i, (x, (lo, hi)) in enumerate(zip(phi, ranges)):
            if not math.isfinite(x) or not lo < x < hi:
                raise DomainError(
                    f"angle {i} = {x!r} outside open range ({lo}, {hi})"
                )
        object.__setattr__(self, "phi", phi)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.phi, dtype=float)


@dataclass(frozen=True)
class MetricData:
    """Diagonal metric entries d_i and surface element g at one angle."""

    d: np.ndarray
    g: float


def _check_angle_shape(n, phi):
    phi = np.asarray(phi, dtype=float)
    if phi.shape[-1] != n - 1:
        raise DomainError(
            f"angle arrays for n={n} need last axis {n - 1}, got {phi.shape}"
        )
    return phi


def embed_many(n: int, phi) -> np.ndarray:
    """Unit-sphere embedding H(phi), vectorized; output shape (..., n)."""
    phi = _check_angle_shape(n, phi)
    s = np.sin(phi)
    c = np.cos(phi)
    cums = np.cumprod(s, axis=-1)
    out = np.empty(phi.shape[:-1] + (n,), dtype=float)
    out[..., 0] = c[..., 0]
    for k in range(1, n - 1):
        out[..., k] = c[..., k] * cums[..., k - 1]
    out[..., n - 1] = cums[..., n - 2]
    return out


def metric_diagonal_many(n: int, phi) -> np.ndarray:
    """Diagonal metric entries d_i, vectorized; output shape (..., n-1)."""
    phi = _check_angle_shape(n, phi)
    d = np.ones(phi.shape, dtype=float)
    if n > 2:
        cums = np.cumprod(np.sin(phi[..., : n - 2]), axis=-1)
        d[..., 1:] = cums * cums
    return d


def surface_element_many(n: int, phi) -> np.ndarray:
    """Spherical surface element g, vectorized; output shape (...,)."""
    phi = _check_angle_shape(n, phi)
    g = np.ones(phi.shape[:-1], dtype=float)
    for k in range(1, n - 1):
        g = g * np.sin(phi[..., k - 1]) ** (n - k - 1)
    return g


def covariant_gradient_sq_many(n: int, phi, grad) -> np.ndarray:
    """Squared covariant gradient sum_i grad_i^2 / d_i, vectorized."""
    phi = _check_angle_shape(n, phi)
    grad = np.asarray(grad, dtype=float)
    if grad.shape != phi.shape:
        raise DomainError(
            f"gradient shape {grad.shape} does not match angles {phi.shape}"
        )
    d = metric_diagonal_many(n, phi)
    return np.sum(grad * grad / d, axis=-1)


def graph_surface_element_many(n: int, phi, r, grad_r) -> np.ndarray:
    """Area element of the radial graph r(phi) H(phi), vectorized."""
    phi = _check_angle_shape(n, phi)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("graph radius must be positive")
    g = surface_element_many(n, phi)
    grad_sq = covariant_gradient_sq_many(n, phi, grad_r)
    # stable form of sqrt(r^(2n-4) (sum_i grad_i^2 prod_{j!=i} d_j + r^2 prod d))
    return r ** (n - 2) * g * np.sqrt(grad_sq + r * r)


def embed(phi: AngleVector) -> np.ndarray:
    """Unit vector H(phi) in R^n for a validated angle tuple."""
    return embed_many(phi.n, phi.as_array())


def metric(phi: AngleVector) -> MetricData:
    """Metric diagonal and surface element at a validated angle tuple."""
    a = phi.as_array()
    return MetricData(
        d=metric_diagonal_many(phi.n, a),
        g=float(surface_element_many(phi.n, a)),
    )


def graph_surface_element(phi: AngleVector, r: float, grad_r) -> float:
    """Area element of a radial graph at one validated angle tuple."""
    grad_r = np.asarray(grad_r, dtype=float)
    if grad_r.shape != (phi.n - 1,):
        raise DomainError(
            f"gradient must have shape ({phi.n - 1},), got {grad_r.shape}"
        )
    return float(graph_surface_element_many(phi.n, phi.as_array(), float(r), grad_r))


def embed_jacobian(n: int, phi) -> np.ndarray:
    """Analytic partials dH_k/dphi_i as an (n, n-1) matrix at one angle."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (n - 1,):
        raise DomainError(f"expected shape ({n - 1},), got {phi.shape}")
    s = np.sin(phi)
    c = np.cos(phi)
    jac = np.zeros((n, n - 1), dtype=float)
    for k in range(1, n + 1):
        # H_k = cos(phi_k) * prod_{l<k} sin(phi_l), phi_n = 0
        for i in range(1, n):
            if i > k:
                continue
            prod = 1.0
            for l in range(1, k):
                if l != i:
                    prod *= s[l - 1]
            if i == k:
                jac[k - 1, i - 1] = -s[k - 1] * prod
            else:
                cos_k = 1.0 if k == n else c[k - 1]
                jac[k - 1, i - 1] = cos_k * c[i - 1] * prod
    return jac
