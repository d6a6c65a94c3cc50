"""Coordinate charts for the two-focus geometry.

Charts: Cartesian (x, y, z), prolate spheroidal (alpha, beta, phi),
planar elliptic (xi, eta) and the focal-radius pair (r1, r2).  The two
centers sit on the z-axis at z = -a and z = +a; all lengths carry the
unit of the focal half-distance `a`.

All functions accept scalars or numpy arrays in the coordinate fields
and broadcast elementwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Geometry",
    "Prolate",
    "Elliptic",
    "Cartesian",
    "FocalRadii",
    "prolate_to_cartesian",
    "cartesian_to_prolate",
    "elliptic_from_prolate",
    "prolate_from_elliptic",
    "focal_radii",
    "metric_factor",
]

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Geometry:
    """Focal half-distance a > 0; the center separation is R = 2a."""

    a: float

    def __post_init__(self) -> None:
        if not np.all(np.asarray(self.a) > 0.0):
            raise ValueError("focal half-distance a must be positive")

    @property
    def R(self) -> float:
        return 2.0 * self.a

    @classmethod
    def from_separation(cls, R: float) -> "Geometry":
        return cls(R / 2.0)


@dataclass(frozen=True)
class Prolate:
    """Prolate spheroidal point: alpha >= 0, beta in [0, pi], phi in [0, 2pi)."""

    alpha: float
    beta: float
    phi: float = 0.0

    def __post_init__(self) -> None:
        al = np.asarray(self.alpha)
        be = np.asarray(self.beta)
        ph = np.asarray(self.phi)
        if np.any(al < 0.0):
            raise ValueError("alpha must be >= 0")
        if np.any(be < 0.0) or np.any(be > np.pi):
            raise ValueError("beta must lie in [0, pi]")
        if np.any(ph < 0.0) or np.any(ph >= _TWO_PI):
            raise ValueError("phi must lie in [0, 2*pi)")


@dataclass(frozen=True)
class Elliptic:
    """Planar elliptic point: xi >= 1, |eta| <= 1."""

    xi: float
    eta: float

    def __post_init__(self) -> None:
        if np.any(np.asarray(self.xi) < 1.0):
            raise ValueError("xi must be >= 1")
        if np.any(np.abs(np.asarray(self.eta)) > 1.0):
            raise ValueError("eta must lie in [-1, 1]")


@dataclass(frozen=True)
class Cartesian:
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class FocalRadii:
    """Distances to the centers at z = -a (r1) and z = +a (r2)."""

    r1: float
    r2: float


def prolate_to_cartesian(g: Geometry, p: Prolate) -> Cartesian:
    """Map (alpha, beta, phi) to (x, y, z)."""
    rho = g.a * np.sinh(p.alpha) * np.sin(p.beta)
    return Cartesian(
        x=rho * np.cos(p.phi),
        y=rho * np.sin(p.phi),
        z=g.a * np.cosh(p.alpha) * np.cos(p.beta),
    )


def cartesian_to_prolate(g: Geometry, c: Cartesian) -> Prolate:
    """Invert the prolate chart.

    On the axis (x = y = 0) phi is undefined; phi = 0 is returned.  Points
    on the focal segment come back with alpha = 0.
    """
    x, y, z = np.asarray(c.x), np.asarray(c.y), np.asarray(c.z)
    rho2 = x * x + y * y
    r1 = np.sqrt(rho2 + (z + g.a) ** 2)
    r2 = np.sqrt(rho2 + (z - g.a) ** 2)
    xi = np.clip((r1 + r2) / (2.0 * g.a), 1.0, None)
    eta = np.clip((r1 - r2) / (2.0 * g.a), -1.0, 1.0)
    phi = np.mod(np.arctan2(y, x), _TWO_PI)
    # arctan2(0, 0) = 0, so the on-axis convention phi = 0 is automatic
    return Prolate(alpha=np.arccosh(xi), beta=np.arccos(eta), phi=phi)


def elliptic_from_prolate(p: Prolate) -> Elliptic:
    """(xi, eta) = (cosh alpha, cos beta)."""
    return Elliptic(xi=np.cosh(p.alpha), eta=np.cos(p.beta))


def prolate_from_elliptic(e: Elliptic, phi: float = 0.0) -> Prolate:
    """Inverse of elliptic_from_prolate with the given azimuth."""
    return Prolate(alpha=np.arccosh(np.asarray(e.xi, dtype=float)),
                   beta=np.arccos(np.asarray(e.eta, dtype=float)),
                   phi=phi)


def focal_radii(g: Geometry, e: Elliptic) -> FocalRadii:
    """r1 = a(xi + eta), r2 = a(xi - eta)."""
    return FocalRadii(r1=g.a * (e.xi + e.eta), r2=g.a * (e.xi - e.eta))


def metric_factor(g: Geometry, p: Prolate) -> tuple[float, float]:
    """Squared scale factors (h2, hphi2) of the prolate chart.

    h2 multiplies both d(alpha)^2 and d(beta)^2; hphi2 multiplies d(phi)^2.
    h2 = a^2 (cosh^2 alpha - cos^2 beta) = a^2 (sinh^2 alpha + sin^2 beta).
    """
    a2 = g.a * g.a
    h2 = a2 * (np.cosh(p.alpha) ** 2 - np.cos(p.beta) ** 2)
    hphi2 = a2 * (np.sinh(p.alpha) * np.sin(p.beta)) ** 2
    return h2, hphi2
