"""Kinetic functions and atomic Young measures.

The kinetic function ``F(x, xi)`` is the CDF-in-``xi`` description of the
local statistics of an oscillating field: ``F(x, xi)`` = limiting fraction of
values below ``xi`` near ``x``.  It is stored on a shared uniform ``xi`` grid,
takes values in [0, 1], is non-decreasing in ``xi``, and equals 0/1 at the
ends of the grid (the grid must contain the support).

Conventions
-----------
* CDFs are right-continuous: empirical fields are counted with ``u <= xi``,
  so a grid node sitting exactly on an atom picks up the atom's mass.
* ``moment`` integrates by parts and splits at ``xi = 0``:
  ``f(0) - int_{xi<0} f' F - int_{xi>0} f' (F - 1)`` with trapezoidal
  quadrature; ``mean_from_F`` does the same with ``f' == 1`` directly.
* ``measure_distance`` is the Wasserstein-1 distance, i.e. the L1 distance
  of CDFs, reduced over x by the maximum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MeasureAtomic",
    "KineticField",
    "SupportError",
    "make_xi_grid",
    "empirical_kinetic_function",
    "two_state_kinetic_function",
    "moment",
    "mean_from_F",
    "measure_distance",
]


class SupportError(ValueError):
    """xi-grid does not contain the support of the field/measure."""


@dataclass(frozen=True)
class MeasureAtomic:
    """Finitely-supported probability measure: (locations, weights)."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        w = np.array([wi for _, wi in self.atoms])
        if len(w) == 0 or np.any(w <= 0):
            raise ValueError("atoms need strictly positive weights")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()}, not 1")

    @property
    def locations(self) -> np.ndarray:
        return np.array([x for x, _ in self.atoms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    def mean(self) -> float:
        return float(np.dot(self.locations, self.weights))

    def expect(self, f) -> float:
        return float(np.dot(f(self.locations), self.weights))

    def cdf(self, xi) -> np.ndarray:
        """Right-continuous distribution function on the given nodes."""
        xi = np.asarray(xi, dtype=float)
        order = np.argsort(self.locations)
        locs = self.locations[order]
        cum = np.concatenate([[0.0], np.cumsum(self.weights[order])])
        cum[-1] = 1.0  # guard against 1-ulp drift in the weight sum
        return cum[np.searchsorted(locs, xi, side="right")]


def make_xi_grid(lo: float, hi: float, n: int, align: float | None = None,
                 spacing: float | None = None) -> np.ndarray:
    """Uniform xi grid covering [lo, hi].

    With ``align`` (and optionally ``spacing``) the grid is laid out as
    ``align + k*spacing`` so chosen atom locations land exactly on nodes;
    otherwise plain ``linspace``.
    """
    if align is None:
        return np.linspace(lo, hi, n)
    if spacing is None:
        spacing = (hi - lo) / (n - 1)
    k_lo = int(np.floor((lo - align) / spacing))
    k_hi = int(np.ceil((hi - align) / spacing))
    return align + spacing * np.arange(k_lo, k_hi + 1)


@dataclass
class KineticField:
    """CDF values F(x, xi) on a shared uniform xi grid."""

    x: np.ndarray
    xi: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.xi = np.asarray(self.xi, dtype=float)
        self.F = np.asarray(self.F, dtype=float)
        if self.F.shape != (len(self.x), len(self.xi)):
            raise ValueError(f"F must have shape (n_x, n_xi) = "
                             f"({len(self.x)}, {len(self.xi)})")

    @property
    def dxi(self) -> float:
        return float(self.xi[1] - self.xi[0])

    def validate(self, atol: float = 1e-12) -> None:
        """Assert range, xi-monotonicity and saturated ends."""
        F = self.F
        if np.min(F) < -atol or np.max(F) > 1.0 + atol:
            raise ValueError(f"F out of [0,1]: min={F.min()}, max={F.max()}")
        if np.min(np.diff(F, axis=1)) < -atol:
            raise ValueError("F not non-decreasing in xi")
        if np.max(np.abs(F[:, 0])) > atol or np.max(np.abs(F[:, -1] - 1.0)) > atol:
            raise ValueError("F must be 0 at xi_lo and 1 at xi_hi "
                             "(support not contained in the xi range)")

    def copy(self) -> "KineticField":
        return KineticField(self.x, self.xi, self.F.copy())


def empirical_kinetic_function(u_field, x_grid, xi_grid, window_cells: int) -> KineticField:
    """Windowed empirical CDF of a cell field.

    ``F(x_i, xi) = #{cells j in the window around i : u_j <= xi} / window``.
    Windows are ``window_cells`` wide, clamped to lie inside the domain near
    the boundaries.  The field's range must be strictly inside the xi range.
    """
    u = np.asarray(u_field, dtype=float)
    x = np.asarray(x_grid, dtype=float)
    xi = np.asarray(xi_grid, dtype=float)
    n = len(u)
    w = int(window_cells)
    if w < 1 or w > n:
        raise ValueError(f"window of {w} cells does not fit in {n}-cell domain")
    if u.min() <= xi[0] or u.max() >= xi[-1]:
        raise SupportError(
            f"field range [{u.min()}, {u.max()}] not inside xi range "
            f"({xi[0]}, {xi[-1]})")
    ind = (u[:, None] <= xi[None, :]).astype(float)
    csum = np.vstack([np.zeros(len(xi)), np.cumsum(ind, axis=0)])
    starts = np.clip(np.arange(n) - (w - 1) // 2, 0, n - w)
    F = (csum[starts + w] - csum[starts]) / w
    return KineticField(x, xi, F)


def two_state_kinetic_function(alpha: float, beta: float, theta: float,
                               x_grid, xi_grid) -> KineticField:
    """Exact CDF of the two-atom measure theta*delta_alpha + (1-theta)*delta_beta."""
    if theta < 1.0:
        nu = MeasureAtomic(((alpha, theta), (beta, 1.0 - theta)))
    else:
        nu = MeasureAtomic(((alpha, 1.0),))
    xi = np.asarray(xi_grid, dtype=float)
    row = nu.cdf(xi)
    if row[0] != 0.0 or row[-1] != 1.0:
        raise SupportError("atoms not strictly inside the xi range")
    F = np.broadcast_to(row, (len(np.atleast_1d(x_grid)), len(xi))).copy()
    return KineticField(np.atleast_1d(x_grid), xi, F)


def _split_trapezoid(xi: np.ndarray, g: np.ndarray) -> tuple[float, float]:
    """(int_{xi<=0} g dxi, int_{xi>=0} g dxi) with a linear-interpolated node at 0."""
    if xi[0] >= 0.0:
        return 0.0, float(np.trapezoid(g, xi))
    if xi[-1] <= 0.0:
        return float(np.trapezoid(g, xi)), 0.0
    j = int(np.searchsorted(xi, 0.0))
    if xi[j] == 0.0:
        lo = np.trapezoid(g[: j + 1], xi[: j + 1])
        hi = np.trapezoid(g[j:], xi[j:])
    else:
        lam = (0.0 - xi[j - 1]) / (xi[j] - xi[j - 1])
        g0 = (1.0 - lam) * g[j - 1] + lam * g[j]
        lo = np.trapezoid(np.append(g[:j], g0), np.append(xi[:j], 0.0))
        hi = np.trapezoid(np.insert(g[j:], 0, g0), np.insert(xi[j:], 0, 0.0))
    return float(lo), float(hi)


def moment(field: KineticField, f, fprime) -> np.ndarray:
    """Weak limit of f(u) per x: f(0) - int f'F (xi<0) - int f'(F-1) (xi>0)."""
    xi = field.xi
    fp = np.asarray(fprime(xi), dtype=float)
    f0 = float(f(0.0))
    out = np.empty(len(field.x))
    for i, row in enumerate(field.F):
        lo, hi = _split_trapezoid(xi, fp * row)
        _, hi1 = _split_trapezoid(xi, fp * (row - 1.0))
        out[i] = f0 - lo - hi1
    return out


def mean_from_F(field: KineticField) -> np.ndarray:
    """Mean of the measure per x, via the CDF moment with f = identity."""
    xi = field.xi
    out = np.empty(len(field.x))
    for i, row in enumerate(field.F):
        lo, _ = _split_trapezoid(xi, row)
        _, hi = _split_trapezoid(xi, row - 1.0)
        out[i] = -lo - hi
    return out


def measure_distance(f1: KineticField, f2: KineticField,
                     reduce: str = "max") -> float:
    """Wasserstein-1 distance: L1 norm in xi of F1 - F2, reduced over x."""
    if f1.F.shape != f2.F.shape or not np.array_equal(f1.xi, f2.xi):
        raise ValueError("kinetic fields must share the same (x, xi) grids")
    per_x = np.trapezoid(np.abs(f1.F - f2.F), f1.xi, axis=1)
    if reduce == "max":
        return float(per_x.max())
    if reduce == "mean":
        return float(per_x.mean())
    if reduce == "none":
        return per_x
    raise ValueError(f"unknown reduction {reduce!r}")
