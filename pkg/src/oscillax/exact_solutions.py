"""Closed-form oscillating solutions of the 1D and radial gas systems.

All evaluators are exact closed forms on the time window t in [1, 2]:

* ``lagrangian_periodic`` -- the periodic two-phase strain/velocity motion
  (strain ``a*t`` on a fraction theta of each unit cell, ``b*t`` elsewhere).
* ``eulerian_1d`` -- its Eulerian image under the flow map: ``u = y/t`` with
  density ``1/(t a)`` / ``1/(t b)`` on cells of width ``c_theta`` in ``y/t``.
* ``radial_md`` -- the d-dimensional radial analogue: density ``a/t^d`` on
  annuli ``k t < |y| < (k+theta) t``, ``b/t^d`` on the complementary annuli,
  velocity ``y/t``.
* ``rescale_eulerian`` -- the 1/n space rescaling that compresses the annuli
  to width 1/n while leaving ``u = y/t`` unchanged.

Points exactly on an interface get the tag "interface" and carry the
right-continuous one-sided values (the same convention the kinetic CDFs use).
Scalar evaluators return tagged samples; the ``*_profile`` variants are
vectorized over radius for quadrature-heavy callers and assume off-interface
points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kinetic import MeasureAtomic

__all__ = [
    "PHASE_A",
    "PHASE_B",
    "INTERFACE",
    "ExactSolutionParams",
    "FieldSample",
    "LagrangianSample",
    "lagrangian_periodic",
    "eulerian_1d",
    "radial_md",
    "pressureless_uniform",
    "rescale_eulerian",
    "young_measure_limit",
    "radial_density_profile",
    "lagrangian_strain_profile",
    "interface_radii",
]

PHASE_A = "A"
PHASE_B = "B"
INTERFACE = "interface"


@dataclass(frozen=True)
class ExactSolutionParams:
    """Phase values, phase fraction, dimension and viscosities.

    ``c_theta = theta*a + (1-theta)*b`` is both the mean strain slope and the
    Eulerian cell width.  theta = 1 is allowed and degenerates every phase
    query to phase A (the uniform solution).
    """

    a: float
    b: float
    theta: float
    d: int = 1
    mu: float = 1.0
    lam: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.a < self.b):
            raise ValueError("need 0 < a < b")
        if not (0.0 < self.theta <= 1.0):
            raise ValueError("need theta in (0, 1]")
        if self.d < 1 or self.d != int(self.d):
            raise ValueError("need integer dimension d >= 1")
        if self.mu <= 0.0 or self.lam + self.mu <= 0.0:
            raise ValueError("need mu > 0 and lam + mu > 0")

    @property
    def c_theta(self) -> float:
        return self.theta * self.a + (1.0 - self.theta) * self.b


@dataclass(frozen=True)
class FieldSample:
    """Pointwise Eulerian sample: density, velocity and phase membership."""

    density_or_strain: float
    velocity: float | np.ndarray
    phase_tag: str


@dataclass(frozen=True)
class LagrangianSample:
    """Pointwise Lagrangian sample: strain W, velocity V, motion Y."""

    W: float
    V: float
    Y: float
    phase_tag: str


def _check_time(t: float) -> None:
    if not (1.0 <= t <= 2.0):
        raise ValueError(f"the oscillating solutions are defined for t in [1, 2], got {t}")


def _phase_of_fraction(fr: float, theta: float) -> str:
    if fr == 0.0 or fr == theta:
        return INTERFACE
    return PHASE_A if fr < theta else PHASE_B


def lagrangian_periodic(params: ExactSolutionParams, t: float, x: float) -> LagrangianSample:
    """Periodic strain/velocity/motion of the two-phase Lagrangian solution."""
    _check_time(t)
    a, b, th = params.a, params.b, params.theta
    k = np.floor(x)
    fr = x - k
    c = params.c_theta
    tag = _phase_of_fraction(fr, th)
    in_a = fr < th if tag != INTERFACE else fr == 0.0  # right-continuous side
    if in_a:
        W = a * t
        Y = k * c * t + fr * a * t
        V = k * c + fr * a
    else:
        W = b * t
        Y = k * c * t + th * a * t + (fr - th) * b * t
        V = k * c + th * a + (fr - th) * b
    return LagrangianSample(W=W, V=V, Y=Y, phase_tag=tag)


def eulerian_1d(params: ExactSolutionParams, t: float, y: float) -> FieldSample:
    """1D Eulerian density/velocity: u = y/t, rho piecewise 1/(ta), 1/(tb)."""
    _check_time(t)
    a, b, th = params.a, params.b, params.theta
    c = params.c_theta
    z = y / t
    k = np.floor(z / c)
    fr = z - k * c
    if fr == 0.0 or fr == a * th:
        tag = INTERFACE
    else:
        tag = PHASE_A if fr < a * th else PHASE_B
    in_a = fr < a * th if tag != INTERFACE else fr == 0.0
    rho = 1.0 / (t * a) if in_a else 1.0 / (t * b)
    return FieldSample(density_or_strain=rho, velocity=z, phase_tag=tag)


def radial_md(params: ExactSolutionParams, t: float, y) -> FieldSample:
    """Radial d-dimensional solution: rho = a/t^d or b/t^d by annulus, u = y/t."""
    _check_time(t)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if len(y) != params.d:
        raise ValueError(f"y must be a {params.d}-vector")
    r = float(np.linalg.norm(y))
    z = r / t
    fr = z - np.floor(z)
    tag = _phase_of_fraction(fr, params.theta)
    in_a = fr < params.theta if tag != INTERFACE else fr == 0.0
    rho = (params.a if in_a else params.b) / t ** params.d
    return FieldSample(density_or_strain=rho, velocity=y / t, phase_tag=tag)


def pressureless_uniform(rho0: float, d: int, t: float, y) -> FieldSample:
    """Uniform self-similar solution rho = rho0/t^d, u = y/t (any t > 0)."""
    if rho0 <= 0:
        raise ValueError("need rho0 > 0")
    if t <= 0:
        raise ValueError("need t > 0")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return FieldSample(density_or_strain=rho0 / t ** d, velocity=y / t,
                       phase_tag=PHASE_A)


def rescale_eulerian(params: ExactSolutionParams, n: int, t: float, y) -> FieldSample:
    """n-fold space rescaling: rho_n(t, y) = rho(t, n y), u_n = y/t."""
    if n < 1 or n != int(n):
        raise ValueError("need integer n >= 1")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    inner = radial_md(params, t, n * y)
    return FieldSample(density_or_strain=inner.density_or_strain,
                       velocity=y / t, phase_tag=inner.phase_tag)


def young_measure_limit(params: ExactSolutionParams, t: float) -> MeasureAtomic:
    """Two-atom limit measure theta*delta_{a/t^d} + (1-theta)*delta_{b/t^d}."""
    _check_time(t)
    scale = t ** params.d
    if params.theta == 1.0:
        return MeasureAtomic(((params.a / scale, 1.0),))
    return MeasureAtomic(((params.a / scale, params.theta),
                          (params.b / scale, 1.0 - params.theta)))


# -- vectorized helpers for quadrature ------------------------------------------


def radial_density_profile(params: ExactSolutionParams, t: float, r, n: int = 1) -> np.ndarray:
    """Density of the (rescaled) radial solution at radii ``r`` (off-interface)."""
    z = n * np.asarray(r, dtype=float) / t
    fr = z - np.floor(z)
    scale = t ** params.d
    return np.where(fr < params.theta, params.a / scale, params.b / scale)


def lagrangian_strain_profile(params: ExactSolutionParams, t: float, x) -> np.ndarray:
    """Strain W of the periodic Lagrangian solution at points ``x``."""
    x = np.asarray(x, dtype=float)
    fr = x - np.floor(x)
    return np.where(fr < params.theta, params.a * t, params.b * t)


def interface_radii(params: ExactSolutionParams, t: float, r_max: float,
                    n: int = 1) -> np.ndarray:
    """Ascending interface radii of the (rescaled) radial solution in (0, r_max)."""
    radii = []
    k = 0
    while True:
        for g in (k, k + params.theta):
            rr = g * t / n
            if 0.0 < rr < r_max:
                radii.append(rr)
        if k * t / n >= r_max:
            break
        k += 1
    return np.array(sorted(set(radii)))
