"""Rankine-Hugoniot and weak-form certification of the closed-form solutions.

Two verification routes:

* Interface route: the piecewise-classical fields are classical solutions off
  the moving interfaces, so weak-solution certification reduces to the jump
  conditions there.  ``rh_residual_lagrangian`` / ``rh_residual_md`` evaluate
  those jumps from the one-sided closed forms.

* Integral route: ``weak_form_residual_md`` integrates the full space-time
  weak form (viscous flux moved onto the test function) against compactly
  supported bumps, with tensor-product Gauss-Legendre panels subdivided at the
  moving interface radii so every panel sees a smooth integrand.  Panels are
  built t-outer/radius-inner: the t axis is split where an interface radius
  crosses the support edge of the bump, then each t node gets its own radial
  subdivision.

Momentum is tested against the radial vector bumps ``phi(t, |y|) * y/|y|``
(scalar bumps times unit vectors integrate to zero against a radial solution
by symmetry, which would make the test vacuous).  All tensor contractions are
evaluated numerically at the angular nodes, so nothing assumes radial
symmetry of the test function.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

from .exact_solutions import ExactSolutionParams, interface_radii, radial_density_profile
from .stress_models import PiecewiseLaw

__all__ = [
    "BumpTestFunction",
    "QuadratureSpec",
    "ResidualReport",
    "WeakLimitTable",
    "make_test_functions",
    "rh_residual_lagrangian",
    "rh_residual_md",
    "weak_form_residual_md",
    "weak_limit_table",
    "pair_with_test",
    "integrate_density_ball",
    "closed_form_ball_mass",
]


@dataclass(frozen=True)
class BumpTestFunction:
    """Separable polynomial bump (1-s^2)^degree in t and in |y|.

    Supported on [t0 - rt, t0 + rt] x {r0 - rr < |y| < r0 + rr}; C^(degree-1)
    at the support boundary and smooth inside.  The radial support must stay
    away from the origin so the radial vector extension phi * y/|y| is C^1.
    """

    t0: float
    rt: float
    r0: float
    rr: float
    degree: int = 4

    def __post_init__(self):
        if not (1.0 < self.t0 - self.rt and self.t0 + self.rt < 2.0):
            raise ValueError("t-support must lie strictly inside (1, 2)")
        if self.r0 - self.rr <= 0.0:
            raise ValueError("radial support must stay away from the origin")
        if self.degree < 2:
            raise ValueError("need degree >= 2 for a C1 bump")

    def _bump(self, s):
        core = np.clip(1.0 - s * s, 0.0, None)
        return core ** self.degree

    def _dbump(self, s):
        core = np.clip(1.0 - s * s, 0.0, None)
        return -2.0 * self.degree * s * core ** (self.degree - 1)

    def time_part(self, t):
        return self._bump((np.asarray(t) - self.t0) / self.rt)

    def dtime_part(self, t):
        return self._dbump((np.asarray(t) - self.t0) / self.rt) / self.rt

    def radial_part(self, r):
        return self._bump((np.asarray(r) - self.r0) / self.rr)

    def dradial_part(self, r):
        return self._dbump((np.asarray(r) - self.r0) / self.rr) / self.rr

    @property
    def t_support(self):
        return (self.t0 - self.rt, self.t0 + self.rt)

    @property
    def r_support(self):
        return (self.r0 - self.rr, self.r0 + self.rr)


def make_test_functions(n: int, seed: int, d: int = 2) -> list[BumpTestFunction]:
    """Reproducible bump placement from a fixed-seed generator."""
    rng = np.random.default_rng(seed)
    tests = []
    for _ in range(n):
        rt = rng.uniform(0.08, 0.2)
        t0 = rng.uniform(1.0 + rt + 0.02, 2.0 - rt - 0.02)
        rr = rng.uniform(0.1, 0.3)
        r0 = rng.uniform(rr + 0.05, rr + 1.2)
        tests.append(BumpTestFunction(t0=t0, rt=rt, r0=r0, rr=rr))
    return tests


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss-Legendre panel order, angular resolution, panel-width caps."""

    order: int = 8
    n_angular: int = 8
    n_polar: int = 4          # d = 3 only
    max_dt: float = 0.05
    max_dr: float = 0.25


@dataclass
class ResidualReport:
    mass_residual: float
    momentum_residual: float
    per_interface: list = field(default_factory=list)
    per_test: list = field(default_factory=list)
    quadrature_meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "mass_residual": self.mass_residual,
            "momentum_residual": self.momentum_residual,
            "per_interface": [list(row) for row in self.per_interface],
            "per_test": self.per_test,
            "quadrature_meta": self.quadrature_meta,
        }


# -- interface (Rankine-Hugoniot) route ------------------------------------------


def rh_residual_lagrangian(params: ExactSolutionParams, law: PiecewiseLaw,
                           t_samples, k_range=range(0, 3)) -> ResidualReport:
    """Jumps of velocity and total stress at the steady Lagrangian interfaces.

    Interfaces sit at x = k and x = k + theta and do not move (s = 0), so the
    conditions are [V] = 0 and [sigma(W) + mu * V_x / W] = 0; the one-sided
    states are W = a*t / b*t with V_x = a / b, making the viscous part mu/t on
    both sides.  A law matched on the two phase intervals zeroes the elastic
    part as well.
    """
    a, b, th, mu = params.a, params.b, params.theta, params.mu
    c = params.c_theta
    rows = []
    for t in np.atleast_1d(t_samples):
        if not (1.0 <= t <= 2.0):
            raise ValueError("t_samples must lie in [1, 2]")
        sig_a = law.value(a * t)
        sig_b = law.value(b * t)
        visc_a = mu * a / (a * t)
        visc_b = mu * b / (b * t)
        for k in k_range:
            # x = k: left side is phase B of cell k-1, right side phase A of cell k
            v_left = (k - 1) * c + th * a + (1.0 - th) * b
            v_right = k * c
            jump_s = (sig_b + visc_b) - (sig_a + visc_a)
            rows.append((f"x={k}", float(t), abs(v_left - v_right),
                         abs(jump_s), abs(visc_b - visc_a)))
            # x = k + theta: left side phase A, right side phase B
            v_left = k * c + th * a
            v_right = k * c + th * a
            jump_s = (sig_a + visc_a) - (sig_b + visc_b)
            rows.append((f"x={k}+theta", float(t), abs(v_left - v_right),
                         abs(jump_s), abs(visc_a - visc_b)))
    mass = max(r[2] for r in rows)
    mom = max(r[3] for r in rows)
    return ResidualReport(mass_residual=mass, momentum_residual=mom,
                          per_interface=rows,
                          quadrature_meta={"route": "closed-form",
                                           "t_samples": list(np.atleast_1d(t_samples))})


def rh_residual_md(params: ExactSolutionParams, pressure, t_samples,
                   k_max: int = 5) -> ResidualReport:
    """Jump conditions on the moving spherical interfaces of the radial solution.

    On the surface at radius (k + g) t the normal velocity equals the surface
    speed (both are k + g), so the mass and convective momentum jumps vanish
    identically; the viscous stress of u = y/t is isotropic and continuous.
    What remains is the pressure jump |p(a/t^d) - p(b/t^d)|.
    """
    a, b, d = params.a, params.b, params.d
    rows = []
    for t in np.atleast_1d(t_samples):
        if not (1.0 <= t <= 2.0):
            raise ValueError("t_samples must lie in [1, 2]")
        rho_a = a / t ** d
        rho_b = b / t ** d
        dp = 0.0 if pressure is None else abs(pressure.value(rho_a) - pressure.value(rho_b))
        visc = (2.0 * params.mu + params.lam * d) / t
        for k in range(0, k_max + 1):
            for gamma, name in ((0.0, f"S_{k}"), (params.theta, f"S_{k}+theta")):
                radius = (k + gamma) * t
                if radius == 0.0:
                    continue  # the k = 0 inner "surface" is the origin
                normal_speed = radius / t          # u . n on the surface
                surface_speed = k + gamma          # d/dt of (k + gamma) t
                mass = abs((normal_speed - surface_speed) * (rho_a - rho_b))
                conv = abs(normal_speed) * mass
                mom = dp + abs(visc - visc) + conv
                rows.append((name, float(t), mass, mom))
    mass = max(r[2] for r in rows)
    mom = max(r[3] for r in rows)
    return ResidualReport(mass_residual=mass, momentum_residual=mom,
                          per_interface=rows,
                          quadrature_meta={"route": "closed-form", "k_max": k_max,
                                           "t_samples": list(np.atleast_1d(t_samples))})


# -- quadrature engine ------------------------------------------------------------


def _angular_nodes(d: int, spec: QuadratureSpec):
    """Unit vectors and weights integrating over the unit sphere S^(d-1)."""
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if d == 2:
        ang = 2.0 * np.pi * np.arange(spec.n_angular) / spec.n_angular
        nodes = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        return nodes, np.full(spec.n_angular, 2.0 * np.pi / spec.n_angular)
    if d == 3:
        mu, wmu = roots_legendre(spec.n_polar)
        ang = 2.0 * np.pi * np.arange(spec.n_angular) / spec.n_angular
        nodes, weights = [], []
        for m, wm in zip(mu, wmu):
            s = np.sqrt(1.0 - m * m)
            for aphi in ang:
                nodes.append([s * np.cos(aphi), s * np.sin(aphi), m])
                weights.append(wm * 2.0 * np.pi / spec.n_angular)
        return np.array(nodes), np.array(weights)
    raise ValueError("supported dimensions are d in {1, 2, 3}")


def _panel_nodes(breaks: np.ndarray, order: int, max_width: float):
    """GL nodes/weights on each interval of an ascending breakpoint list."""
    xs, ws = roots_legendre(order)
    nodes, weights = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi - lo < 1e-14:
            continue
        n_sub = max(1, int(np.ceil((hi - lo) / max_width)))
        edges = np.linspace(lo, hi, n_sub + 1)
        for a_, b_ in zip(edges[:-1], edges[1:]):
            h = 0.5 * (b_ - a_)
            nodes.append(0.5 * (a_ + b_) + h * xs)
            weights.append(h * ws)
    return np.concatenate(nodes), np.concatenate(weights)


def _interface_slopes(params: ExactSolutionParams, r_lo: float, r_hi: float,
                      t_lo: float, t_hi: float, n: int):
    """Slopes g with an interface radius g*t meeting [r_lo, r_hi] x [t_lo, t_hi]."""
    g_min = r_lo / t_hi
    g_max = r_hi / t_lo
    slopes = []
    k = 0
    while (k / n) <= g_max:
        for g in (k / n, (k + params.theta) / n):
            if g_min <= g <= g_max and g > 0.0:
                slopes.append(g)
        k += 1
    return slopes


def _time_breaks(test: BumpTestFunction, params: ExactSolutionParams, n: int):
    t_lo, t_hi = test.t_support
    r_lo, r_hi = test.r_support
    breaks = {t_lo, t_hi}
    for g in _interface_slopes(params, r_lo, r_hi, t_lo, t_hi, n):
        for edge in (r_lo, r_hi):
            t_star = edge / g
            if t_lo < t_star < t_hi:
                breaks.add(t_star)
    return np.array(sorted(breaks))


def _radial_breaks(test: BumpTestFunction, params: ExactSolutionParams,
                   t: float, n: int):
    r_lo, r_hi = test.r_support
    inner = interface_radii(params, t, r_hi, n=n)
    inner = inner[inner > r_lo]
    return np.concatenate([[r_lo], inner, [r_hi]])


def weak_form_residual_md(params: ExactSolutionParams, pressure,
                          tests, spec: QuadratureSpec | None = None,
                          n: int = 1, include_viscosity: bool = True) -> ResidualReport:
    """Space-time weak-form residuals of the (rescaled) radial solution.

    Mass is tested against each scalar bump phi; momentum against its radial
    vector extension phi * y/|y|, with the viscous flux contracted against the
    test-function gradient.  Residuals are reported raw and relative to
    ``int int |rho| |dphi/dt|``.
    """
    spec = spec or QuadratureSpec()
    d = params.d
    yhat, wA = _angular_nodes(d, spec)
    eye = np.eye(d)
    outer = yhat[:, :, None] * yhat[:, None, :]          # (nA, d, d)
    per_test = []
    for it, test in enumerate(tests):
        t_nodes, t_w = _panel_nodes(_time_breaks(test, params, n),
                                    spec.order, spec.max_dt)
        mass = mom = norm = 0.0
        for t, wt in zip(t_nodes, t_w):
            r_nodes, r_w = _panel_nodes(_radial_breaks(test, params, t, n),
                                        spec.order, spec.max_dr)
            rho = radial_density_profile(params, t, r_nodes, n=n)
            p = np.zeros_like(rho) if pressure is None else pressure.value(rho)
            jac = r_w * r_nodes ** (d - 1)
            bt = test.time_part(t)
            dbt = test.dtime_part(t)
            br = test.radial_part(r_nodes)
            dbr = test.dradial_part(r_nodes)

            # scalar test: rho * (dphi/dt + u . grad phi)
            u_rad = r_nodes / t
            mass_rad = rho * (dbt * br + u_rad * bt * dbr)
            mass += wt * np.dot(jac, mass_rad) * wA.sum()
            norm += wt * np.dot(jac, np.abs(rho) * np.abs(dbt * br)) * wA.sum()

            # vector test Phi_i = phi * yhat_i, contracted at the angular nodes
            u = u_rad[:, None, None] * yhat[None, :, :]              # (nR, nA, d)
            dPhi_dt = (dbt * br)[:, None, None] * yhat[None, :, :]
            grad = (bt * dbr)[:, None, None, None] * outer[None] \
                + (bt * br / r_nodes)[:, None, None, None] * (eye[None, None] - outer[None])
            divPhi = np.trace(grad, axis1=2, axis2=3)                # (nR, nA)
            T1 = rho[:, None] * np.einsum("rai,rai->ra", u, dPhi_dt)
            T2 = rho[:, None] * np.einsum("rai,raj,raij->ra", u, u, grad)
            T3 = p[:, None] * divPhi
            integrand = T1 + T2 + T3
            if include_viscosity:
                tau = ((2.0 * params.mu + params.lam * d) / t) * eye
                T4 = np.einsum("ij,raij->ra", tau, grad)
                integrand = integrand - T4
            mom += wt * np.dot(jac, integrand @ wA)
        per_test.append({"test": it, "mass": abs(mass), "momentum": abs(mom),
                         "normalizer": norm,
                         "mass_rel": abs(mass) / norm if norm > 0 else np.inf,
                         "momentum_rel": abs(mom) / norm if norm > 0 else np.inf})
    report = ResidualReport(
        mass_residual=max(r["mass"] for r in per_test),
        momentum_residual=max(r["momentum"] for r in per_test),
        per_test=per_test,
        quadrature_meta={"order": spec.order, "n_angular": spec.n_angular,
                         "max_dt": spec.max_dt, "max_dr": spec.max_dr,
                         "rescaling_n": n, "n_tests": len(tests)})
    return report


def pair_with_test(params: ExactSolutionParams, test: BumpTestFunction,
                   profile, spec: QuadratureSpec | None = None,
                   n: int = 1, subdivide: bool = True) -> float:
    """Space-time pairing <f, phi> for a radial profile f(t, r).

    ``profile(t, r_array) -> values``; set ``subdivide=False`` for smooth
    profiles with no interface structure.
    """
    spec = spec or QuadratureSpec()
    d = params.d
    _, wA = _angular_nodes(d, spec)
    t_breaks = (_time_breaks(test, params, n) if subdivide
                else np.array(test.t_support))
    t_nodes, t_w = _panel_nodes(t_breaks, spec.order, spec.max_dt)
    total = 0.0
    for t, wt in zip(t_nodes, t_w):
        r_breaks = (_radial_breaks(test, params, t, n) if subdivide
                    else np.array(test.r_support))
        r_nodes, r_w = _panel_nodes(r_breaks, spec.order, spec.max_dr)
        vals = profile(t, r_nodes)
        jac = r_w * r_nodes ** (d - 1)
        total += wt * np.dot(jac, vals * test.time_part(t)
                             * test.radial_part(r_nodes)) * wA.sum()
    return float(total)


@dataclass
class WeakLimitTable:
    """Pairings of the oscillating family against one bump, with their targets."""

    n_list: list
    rho_pairings: list
    p_pairings: list
    rho_target: float
    p_target: float
    p_of_rho_bar: float

    def rows(self):
        return [(n, r, p) for n, r, p in
                zip(self.n_list, self.rho_pairings, self.p_pairings)]

    def to_json(self) -> dict:
        return {"n_list": list(self.n_list),
                "rho_pairings": list(self.rho_pairings),
                "p_pairings": list(self.p_pairings),
                "rho_target": self.rho_target, "p_target": self.p_target,
                "p_of_rho_bar": self.p_of_rho_bar}


def weak_limit_table(params: ExactSolutionParams, pressure,
                     test: BumpTestFunction, n_list,
                     spec: QuadratureSpec | None = None) -> WeakLimitTable:
    """<rho_n, phi> and <p(rho_n), phi> along the rescaling family.

    Targets are the pairings of the phase averages
    rho_bar = theta a/t^d + (1-theta) b/t^d and
    q_bar = theta p(a/t^d) + (1-theta) p(b/t^d).
    """
    th, d = params.theta, params.d
    rho_rows, p_rows = [], []
    for n in n_list:
        rho_rows.append(pair_with_test(
            params, test, lambda t, r: radial_density_profile(params, t, r, n=n),
            spec=spec, n=n))
        p_rows.append(pair_with_test(
            params, test,
            lambda t, r: pressure.value(radial_density_profile(params, t, r, n=n)),
            spec=spec, n=n))
    rho_bar = lambda t, r: np.full_like(r, th * params.a / t ** d
                                        + (1.0 - th) * params.b / t ** d)
    q_bar = lambda t, r: np.full_like(r, th * pressure.value(params.a / t ** d)
                                      + (1.0 - th) * pressure.value(params.b / t ** d))
    p_rho_bar = lambda t, r: np.full_like(r, pressure.value(
        th * params.a / t ** d + (1.0 - th) * params.b / t ** d))
    rho_target = pair_with_test(params, test, rho_bar, spec=spec, subdivide=False)
    p_target = pair_with_test(params, test, q_bar, spec=spec, subdivide=False)
    p_of_rho_bar = pair_with_test(params, test, p_rho_bar, spec=spec, subdivide=False)
    return WeakLimitTable(list(n_list), rho_rows, p_rows, rho_target, p_target,
                          p_of_rho_bar)


def integrate_density_ball(params: ExactSolutionParams, n: int, t: float,
                           radius: float = 1.0, order: int = 8) -> float:
    """Interface-aware quadrature of rho_n over the ball of given radius."""
    d = params.d
    breaks = np.concatenate([[0.0], interface_radii(params, t, radius, n=n),
                             [radius]])
    r_nodes, r_w = _panel_nodes(np.unique(breaks), order, max_width=np.inf)
    rho = radial_density_profile(params, t, r_nodes, n=n)
    surf = {1: 2.0, 2: 2.0 * np.pi, 3: 4.0 * np.pi}[d]
    return surf * float(np.dot(r_w * r_nodes ** (d - 1), rho))


def closed_form_ball_mass(params: ExactSolutionParams, n: int, t: float,
                          radius: float = 1.0) -> float:
    """Exact integral of rho_n over the ball: annulus volumes times phase values."""
    d = params.d
    vol = {1: lambda r: 2.0 * r, 2: lambda r: np.pi * r * r,
           3: lambda r: 4.0 * np.pi * r ** 3 / 3.0}[d]
    edges = np.concatenate([[0.0], interface_radii(params, t, radius, n=n),
                            [radius]])
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        rho = radial_density_profile(params, t, np.array([mid]), n=n)[0]
        total += rho * (vol(hi) - vol(lo))
    return float(total)
