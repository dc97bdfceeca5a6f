"""Effective kinetic-parabolic systems for the propagation of oscillations.

Two closed systems for the limit objects of an oscillating viscoelastic
family, both transporting the kinetic function F(t, x, xi):

* velocity form:  F_t + (S - sigma(xi)) F_xi = 0,
                  v_t = v_xx + (sigma_bar)_x,     S = sigma_bar + v_x;
* stress form:    F_t + (S - sigma(xi)) F_xi = 0,
                  S_t = S_xx + int sigma'(xi) (S - sigma(xi)) dF.

The kinetic equation is stepped in non-conservative form with first-order
upwinding per (x, xi) node (x enters only through S(x)), which preserves the
CDF structure: values in [0, 1], monotone in xi, saturated at the ends.  The
parabolic equations reuse the viscoelastic wall closures (S = 0 at faces),
so a Dirac initial F reproduces the direct scheme step for step up to O(dt^2).

Moments against dF use summation by parts with the staircase (right
continuous) reading of F, so integrals against purely atomic F with atoms on
grid nodes are exact to roundoff; the only inputs are node values of the
integrand's antiderivative, never differences of F.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve_banded

from .kinetic import KineticField
from .stress_models import PiecewiseLaw
from .viscoelastic import (Grid1D, _elastic_force, _face_velocities,
                           diffusion_factor_dirichlet, diffusion_factor_neumann)

__all__ = [
    "CflError",
    "InvariantViolationError",
    "EffectiveState1",
    "EffectiveState2",
    "EffectiveConfig",
    "EffectiveTrajectory",
    "LawOnGrid",
    "sbp_moment",
    "step_kinetic",
    "step_velocity",
    "step_stress",
    "solve_effs1",
    "solve_effs2",
    "reconstruct_velocity",
    "heaviside_initial_F",
    "default_xi_grid",
    "mean_rows",
]


class CflError(RuntimeError):
    """Time step too large for the kinetic transport on this xi grid."""


class InvariantViolationError(RuntimeError):
    """A kinetic step broke the CDF structure of F."""


def default_xi_grid(K: float, n: int = 512, atoms=()) -> np.ndarray:
    """Uniform xi grid over [-K-1, K+1], snapped so the atoms sit on nodes.

    With two atoms the spacing is adjusted so their gap is an integer number
    of cells and the grid is anchored at the first atom; the range always
    covers [-K-1, K+1].
    """
    lo, hi = -K - 1.0, K + 1.0
    if not atoms:
        return np.linspace(lo, hi, n)
    atoms = sorted(float(a) for a in atoms)
    if atoms[0] <= lo or atoms[-1] >= hi:
        raise ValueError("atoms must lie strictly inside [-K-1, K+1]")
    d0 = (hi - lo) / (n - 1)
    if len(atoms) > 1:
        gap = atoms[-1] - atoms[0]
        d0 = gap / max(1, round(gap / d0))
    k_lo = int(np.ceil((lo - atoms[0]) / d0 - 1e-12))
    k_hi = int(np.floor((hi - atoms[0]) / d0 + 1e-12))
    return atoms[0] + d0 * np.arange(k_lo, k_hi + 1)


def heaviside_initial_F(u0: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Dirac data: F(0, x, xi) = 1 for xi >= u0(x) (right continuous)."""
    return (xi[None, :] >= np.asarray(u0)[:, None]).astype(float)


class LawOnGrid:
    """Node caches of sigma and friends on one xi grid."""

    def __init__(self, law: PiecewiseLaw, xi: np.ndarray):
        self.law = law
        self.xi = np.asarray(xi, dtype=float)
        ev = law.eval(self.xi, check=False)
        self.sigma = ev.value
        self.dsigma = ev.derivative
        ev0 = law.eval(0.0, check=False)
        self.sigma0 = ev0.value
        self.dsigma0 = ev0.derivative


def _sbp_weights(xi: np.ndarray, f_nodes: np.ndarray, f_zero: float):
    """Per-node weights w with  int f' F ~ F . w  split at xi = 0.

    Uses the staircase reading F = F_j on [xi_j, xi_{j+1}).  Returns
    (w_lo, w_hi, const) so that the moment of F equals
    f_zero - (F @ w_lo) - ((F - 1) @ w_hi) = const - F @ (w_lo + w_hi).
    """
    n = len(xi)
    df = np.diff(f_nodes)
    w_lo = np.zeros(n)
    w_hi = np.zeros(n)
    if xi[-1] <= 0.0:
        w_lo[:-1] = df
    elif xi[0] >= 0.0:
        w_hi[:-1] = df
    else:
        j0 = int(np.searchsorted(xi, 0.0, side="right") - 1)
        w_lo[:j0] = df[:j0]
        w_lo[j0] = f_zero - f_nodes[j0]
        w_hi[j0] = f_nodes[j0 + 1] - f_zero
        w_hi[j0 + 1:-1] = df[j0 + 1:]
    return w_lo, w_hi


def sbp_moment(xi: np.ndarray, F: np.ndarray, f_nodes: np.ndarray,
               f_zero: float) -> np.ndarray:
    """Moment int f dF per x-row by summation by parts (exact for on-node atoms)."""
    w_lo, w_hi = _sbp_weights(xi, f_nodes, f_zero)
    tail = float(np.sum(w_hi))
    return f_zero - F @ (w_lo + w_hi) + tail


def mean_rows(xi: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Mean of the measure per x-row, by the same SBP rule as the moments
    (exact when the atoms sit on grid nodes)."""
    return sbp_moment(xi, F, xi.astype(float), 0.0)


@dataclass
class EffectiveState1:
    time: float
    F: np.ndarray              # (n_x, n_xi)
    v: np.ndarray              # (n_x,)


@dataclass
class EffectiveState2:
    time: float
    F: np.ndarray
    S: np.ndarray


@dataclass
class EffectiveConfig:
    grid: Grid1D
    xi: np.ndarray
    law: PiecewiseLaw
    T: float
    dt: float | None = None
    snapshot_times: list | None = None
    cfl_safety: float = 0.45
    invariant_tol: float = 1e-12


@dataclass
class EffectiveTrajectory:
    grid: Grid1D
    xi: np.ndarray
    times: np.ndarray
    F: np.ndarray              # (n_snap, n_x, n_xi)
    v: np.ndarray | None       # velocity form
    S: np.ndarray              # total stress per snapshot
    sigma_bar: np.ndarray
    meta: dict = field(default_factory=dict)

    def kinetic_field(self, m: int = -1) -> KineticField:
        return KineticField(self.grid.centers, self.xi, self.F[m])

    def mean_u(self, m: int = -1) -> np.ndarray:
        return mean_rows(self.xi, self.F[m])


# -- elementary steps --------------------------------------------------------------


def _check_cfl(c: np.ndarray, dsigma: np.ndarray, dt: float, dxi: float) -> None:
    lam = dt / dxi
    cmax = float(np.max(np.abs(c)))
    if lam * cmax > 1.0 + 1e-12:
        raise CflError(f"dt*max|S - sigma|/dxi = {lam * cmax:.3f} > 1")
    comp = float(np.max(np.maximum(-dsigma, 0.0)))
    if dt * comp > 1.0 + 1e-12:
        raise CflError(f"dt*max(-sigma') = {dt * comp:.3f} > 1 "
                       "(compressive characteristics too stiff)")


def step_kinetic(F: np.ndarray, S_cells: np.ndarray, cache: LawOnGrid,
                 dt: float, validate_tol: float | None = 1e-12) -> np.ndarray:
    """Upwind step of F_t + (S(x) - sigma(xi)) F_xi = 0, clamped to 0/1 outside.

    Characteristics must point inward at both xi ends (sigma dominates S
    there); this is asserted, as is the CFL condition before stepping and the
    CDF structure afterwards.
    """
    xi = cache.xi
    dxi = xi[1] - xi[0]
    c = S_cells[:, None] - cache.sigma[None, :]          # (n_x, n_xi)
    if np.any(c[:, 0] <= 0.0) or np.any(c[:, -1] >= 0.0):
        raise InvariantViolationError(
            "characteristics point outward at the xi boundary; "
            "enlarge the xi range (support control lost)")
    _check_cfl(c, cache.dsigma, dt, dxi)
    lam = dt / dxi
    dF_back = np.empty_like(F)
    dF_back[:, 1:] = F[:, 1:] - F[:, :-1]
    dF_back[:, 0] = F[:, 0] - 0.0
    dF_fwd = np.empty_like(F)
    dF_fwd[:, :-1] = F[:, 1:] - F[:, :-1]
    dF_fwd[:, -1] = 1.0 - F[:, -1]
    F_new = F - lam * np.where(c > 0.0, c * dF_back, c * dF_fwd)
    if validate_tol is not None:
        _validate_F(F_new, validate_tol)
    return F_new


def _validate_F(F: np.ndarray, tol: float) -> None:
    if F.min() < -tol or F.max() > 1.0 + tol:
        raise InvariantViolationError(
            f"F out of [0,1] by {max(-F.min(), F.max() - 1.0):.2e}")
    if np.diff(F, axis=1).min() < -tol:
        raise InvariantViolationError("F lost monotonicity in xi")
    if np.abs(F[:, 0]).max() > tol or np.abs(F[:, -1] - 1.0).max() > tol:
        raise InvariantViolationError("F boundary values drifted from 0/1")


def step_velocity(v: np.ndarray, F: np.ndarray, cache: LawOnGrid, dt: float,
                  dx: float, chol=None) -> np.ndarray:
    """v_t = v_xx + (sigma_bar)_x: implicit diffusion, explicit moment gradient."""
    sigma_bar = sbp_moment(cache.xi, F, cache.sigma, cache.sigma0)
    if chol is None:
        chol = diffusion_factor_neumann(len(v), dt / dx ** 2)
    rhs = v + dt * _elastic_force(sigma_bar, dx)
    return cho_solve_banded((chol, False), rhs)


def step_stress(S: np.ndarray, F: np.ndarray, cache: LawOnGrid, dt: float,
                dx: float, chol=None) -> np.ndarray:
    """S_t = S_xx + int sigma'(xi)(S - sigma(xi)) dF: implicit diffusion,
    explicit reaction assembled from two moments."""
    m1 = sbp_moment(cache.xi, F, cache.dsigma, cache.dsigma0)
    m2 = sbp_moment(cache.xi, F, cache.dsigma * cache.sigma,
                    cache.dsigma0 * cache.sigma0)
    reaction = S * m1 - m2
    if chol is None:
        chol = diffusion_factor_dirichlet(len(S), dt / dx ** 2)
    return cho_solve_banded((chol, False), S + dt * reaction)


def _stress_of_state1(v: np.ndarray, sigma_bar: np.ndarray, dx: float) -> np.ndarray:
    """Cell-centered S = sigma_bar + v_x with the traction-free wall closure."""
    vf = _face_velocities(v, sigma_bar, dx)
    return sigma_bar + np.diff(vf) / dx


def _plan_steps(T: float, dt: float):
    n_steps = max(1, int(np.ceil(T / dt - 1e-12)))
    return n_steps


def _snap_steps(snapshot_times, T, dt, n_steps):
    snaps = sorted(snapshot_times or [T])
    return sorted({min(n_steps, max(0, int(round(ts / dt)))) for ts in snaps})


def _auto_dt(cache: LawOnGrid, S0: np.ndarray, dxi: float, safety: float) -> float:
    cmax = float(np.max(np.abs(S0[:, None] - cache.sigma[None, :])))
    return safety * dxi / max(cmax, 1e-12)


def solve_effs1(F0: np.ndarray, v0: np.ndarray, config: EffectiveConfig) -> EffectiveTrajectory:
    """Lie splitting of the velocity-form system: kinetic step with frozen S,
    then velocity step with the updated moment."""
    grid, xi, law = config.grid, np.asarray(config.xi), config.law
    cache = LawOnGrid(law, xi)
    F = np.array(F0, dtype=float)
    v = np.array(v0, dtype=float)
    _validate_F(F, config.invariant_tol)
    dx = grid.dx
    sigma_bar = sbp_moment(xi, F, cache.sigma, cache.sigma0)
    S = _stress_of_state1(v, sigma_bar, dx)
    dt = config.dt or _auto_dt(cache, S, xi[1] - xi[0], config.cfl_safety)
    n_steps = _plan_steps(config.T, dt)
    snap_at = set(_snap_steps(config.snapshot_times, config.T, dt, n_steps))
    chol = diffusion_factor_neumann(grid.n_cells, dt / dx ** 2)

    out, t = [], 0.0
    if 0 in snap_at:
        out.append((t, F.copy(), v.copy(), S.copy(), sigma_bar.copy()))
    for k in range(1, n_steps + 1):
        step_dt = dt if k < n_steps else config.T - (n_steps - 1) * dt
        ch = chol if abs(step_dt - dt) <= 1e-15 * dt else \
            diffusion_factor_neumann(grid.n_cells, step_dt / dx ** 2)
        F = step_kinetic(F, S, cache, step_dt, config.invariant_tol)
        v = step_velocity(v, F, cache, step_dt, dx, chol=ch)
        sigma_bar = sbp_moment(xi, F, cache.sigma, cache.sigma0)
        S = _stress_of_state1(v, sigma_bar, dx)
        t += step_dt
        if k in snap_at:
            out.append((t, F.copy(), v.copy(), S.copy(), sigma_bar.copy()))
    return EffectiveTrajectory(
        grid=grid, xi=xi, times=np.array([o[0] for o in out]),
        F=np.array([o[1] for o in out]), v=np.array([o[2] for o in out]),
        S=np.array([o[3] for o in out]),
        sigma_bar=np.array([o[4] for o in out]),
        meta={"dt": dt, "n_steps": n_steps, "form": "velocity"})


def solve_effs2(F0: np.ndarray, S0: np.ndarray, config: EffectiveConfig) -> EffectiveTrajectory:
    """Lie splitting of the stress-form system: kinetic step with frozen S,
    then parabolic stress step with moments of the updated F."""
    grid, xi, law = config.grid, np.asarray(config.xi), config.law
    cache = LawOnGrid(law, xi)
    F = np.array(F0, dtype=float)
    S = np.array(S0, dtype=float)
    _validate_F(F, config.invariant_tol)
    dx = grid.dx
    dt = config.dt or _auto_dt(cache, S, xi[1] - xi[0], config.cfl_safety)
    n_steps = _plan_steps(config.T, dt)
    snap_at = set(_snap_steps(config.snapshot_times, config.T, dt, n_steps))
    chol = diffusion_factor_dirichlet(grid.n_cells, dt / dx ** 2)

    out, t = [], 0.0
    if 0 in snap_at:
        out.append((t, F.copy(), S.copy(),
                    sbp_moment(xi, F, cache.sigma, cache.sigma0)))
    for k in range(1, n_steps + 1):
        step_dt = dt if k < n_steps else config.T - (n_steps - 1) * dt
        ch = chol if abs(step_dt - dt) <= 1e-15 * dt else \
            diffusion_factor_dirichlet(grid.n_cells, step_dt / dx ** 2)
        F = step_kinetic(F, S, cache, step_dt, config.invariant_tol)
        S = step_stress(S, F, cache, step_dt, dx, chol=ch)
        t += step_dt
        if k in snap_at:
            out.append((t, F.copy(), S.copy(),
                        sbp_moment(xi, F, cache.sigma, cache.sigma0)))
    return EffectiveTrajectory(
        grid=grid, xi=xi, times=np.array([o[0] for o in out]),
        F=np.array([o[1] for o in out]), v=None,
        S=np.array([o[2] for o in out]),
        sigma_bar=np.array([o[3] for o in out]),
        meta={"dt": dt, "n_steps": n_steps, "form": "stress"})


def reconstruct_velocity(traj: EffectiveTrajectory, v0_at_wall: float = 0.0) -> dict:
    """Velocity from a stress-form run: v_x = S - sigma_bar, gauged by
    integrating v_t = S_x at the left wall over the stored snapshots.

    Returns the velocity per snapshot and the compatibility residual
    max_m |d/dt (v(1) - v(0)) - (S_x(1) - S_x(0))| over interior snapshots
    (a splitting/storage-resolution diagnostic, not a bug indicator).
    """
    if traj.meta.get("form") != "stress":
        raise ValueError("reconstruction applies to stress-form trajectories")
    dx = traj.grid.dx
    times = traj.times
    vx = traj.S - traj.sigma_bar                       # (n_snap, n_x)
    # int_0^{x_i} v_x: midpoint cumulative over cells
    inner = np.cumsum(vx, axis=1) * dx - 0.5 * dx * vx
    # left-wall gauge: v(0, t) = v0 + int S_x(0) dt, S_x(0) = 2 S_0 / dx
    sx0 = 2.0 * traj.S[:, 0] / dx
    gauge = v0_at_wall + np.concatenate(
        [[0.0], np.cumsum(0.5 * (sx0[1:] + sx0[:-1]) * np.diff(times))])
    v = gauge[:, None] + inner
    # compatibility: d/dt int_0^1 v_x  vs  S_x(1) - S_x(0)
    total_vx = np.sum(vx, axis=1) * dx
    resid = 0.0
    if len(times) >= 3:
        dvdt = (total_vx[2:] - total_vx[:-2]) / (times[2:] - times[:-2])
        sx1 = -2.0 * traj.S[:, -1] / dx
        rhs = (sx1 - sx0)[1:-1]
        resid = float(np.max(np.abs(dvdt - rhs)))
    return {"v": v, "compatibility_residual": resid}
