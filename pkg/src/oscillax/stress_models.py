"""Non-monotone constitutive laws built by a copy-and-bridge construction.

A law is a piecewise-cubic core on an ascending knot sequence plus two
analytic growth tails.  Two builders are provided:

* ``make_two_phase_stress(a, b, p)`` -- a stress ``sigma(u)`` that is strictly
  increasing on ``[a, 2a]``, is copied onto ``[b, 2b]`` by the scaling
  ``u -> (b/a) u`` (so that ``sigma(tau*a) == sigma(tau*b)`` exactly for
  ``tau in [1, 2]``), descends across the C1 cubic bridge on ``(2a, b)``, and
  grows like ``sign(u) |u|^(p-1)`` outside ``[a, 2b]``.

* ``make_nonmonotone_pressure(a, b, d)`` -- the same construction on the
  density intervals ``[a/2^d, a]`` and ``[b/2^d, b]`` so that
  ``p(a/t^d) == p(b/t^d)`` for ``t in [1, 2]``, with positive power tails.

Evaluation returns value, first derivative and the antiderivative normalized
to vanish at zero, all vectorized over numpy arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "EvaluationRangeError",
    "LawEval",
    "Tail",
    "PiecewiseLaw",
    "StressLaw",
    "PressureLaw",
    "CoercivityReport",
    "make_two_phase_stress",
    "make_nonmonotone_pressure",
    "linear_stress",
    "linear_pressure",
    "certify_coercivity",
    "law_from_json",
    "load_law",
]


class EvaluationRangeError(ValueError):
    """Raised when a law is evaluated outside its certified range."""


@dataclass(frozen=True)
class LawEval:
    """Triple returned by :meth:`PiecewiseLaw.eval`."""

    value: np.ndarray | float
    derivative: np.ndarray | float
    antiderivative: np.ndarray | float


@dataclass(frozen=True)
class Tail:
    """Analytic extension outside the outermost knots.

    ``signed_power``: A * sign(u) * |u|**q + B   (valid on all of R for q >= 1)
    ``power``:        A * u**q                   (valid for u > 0)
    """

    kind: str  # "signed_power" | "power"
    A: float
    q: float
    B: float = 0.0

    def value(self, u):
        if self.kind == "signed_power":
            return self.A * np.sign(u) * np.abs(u) ** self.q + self.B
        return self.A * np.power(u, self.q, where=np.asarray(u) > 0,
                                 out=np.zeros_like(np.asarray(u, dtype=float)))

    def derivative(self, u):
        if self.kind == "signed_power":
            return self.A * self.q * np.abs(u) ** (self.q - 1.0)
        u = np.asarray(u, dtype=float)
        return self.A * self.q * np.power(u, self.q - 1.0, where=u > 0,
                                          out=np.zeros_like(u))

    def antiderivative_from(self, u0, u):
        """Integral of the tail from ``u0`` to ``u`` (both inside the tail)."""
        if self.kind == "signed_power":
            prim = lambda x: self.A * np.abs(x) ** (self.q + 1.0) / (self.q + 1.0) + self.B * x
        else:
            prim = lambda x: self.A * np.power(np.maximum(x, 0.0), self.q + 1.0) / (self.q + 1.0)
        return prim(u) - prim(u0)


def _hermite_coeffs(h: float, y0: float, y1: float, m0: float, m1: float):
    """Local cubic (c0..c3 in t = u - left knot) matching values and slopes."""
    d = (y1 - y0) / h
    c2 = (3.0 * d - 2.0 * m0 - m1) / h
    c3 = (m0 + m1 - 2.0 * d) / (h * h)
    return (y0, m0, c2, c3)


class PiecewiseLaw:
    """Piecewise-cubic core with analytic growth tails.

    Immutable after construction; all evaluation methods are vectorized and
    safe for concurrent use.
    """

    def __init__(self, knots, pieces, left_tail: Tail, right_tail: Tail,
                 growth_exponent: float, certified_range, provenance=None,
                 growth_coeffs=None, kind: str = "generic"):
        knots = np.asarray(knots, dtype=float)
        if knots.ndim != 1 or len(knots) < 2 or np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be a strictly ascending 1D sequence")
        pieces = np.asarray(pieces, dtype=float)
        if pieces.shape != (len(knots) - 1, 4):
            raise ValueError("need one local cubic (4 coefficients) per interval")
        self.knots = knots
        self.pieces = pieces
        self.left_tail = left_tail
        self.right_tail = right_tail
        self.growth_exponent = float(growth_exponent)
        self.certified_range = (float(certified_range[0]), float(certified_range[1]))
        self.provenance = dict(provenance or {})
        self.kind = kind
        self._anchor_antiderivative()
        if growth_coeffs is None:
            growth_coeffs = self._compute_growth_envelope()
        self.growth_coeffs = (float(growth_coeffs[0]), float(growth_coeffs[1]))
        for arr in (self.knots, self.pieces, self._W_knots):
            arr.flags.writeable = False

    # -- construction helpers -------------------------------------------------

    def _piece_integral(self, i: int, t0: float, t1: float) -> float:
        c0, c1, c2, c3 = self.pieces[i]
        prim = lambda t: t * (c0 + t * (c1 / 2.0 + t * (c2 / 3.0 + t * c3 / 4.0)))
        return prim(t1) - prim(t0)

    def _anchor_antiderivative(self) -> None:
        """Cumulative integrals at knots, then shift so W(0) = 0."""
        W = np.zeros(len(self.knots))
        for i in range(len(self.knots) - 1):
            h = self.knots[i + 1] - self.knots[i]
            W[i + 1] = W[i] + self._piece_integral(i, 0.0, h)
        self._W_knots = W
        self._W_knots -= self._raw_antiderivative(0.0)

    def _raw_antiderivative(self, u):
        u = np.asarray(u, dtype=float)
        out = np.empty_like(u)
        left = u < self.knots[0]
        right = u > self.knots[-1]
        core = ~(left | right)
        if np.any(left):
            out[left] = self._W_knots[0] + self.left_tail.antiderivative_from(
                self.knots[0], u[left])
        if np.any(right):
            out[right] = self._W_knots[-1] + self.right_tail.antiderivative_from(
                self.knots[-1], u[right])
        if np.any(core):
            idx = np.clip(np.searchsorted(self.knots, u[core], side="right") - 1,
                          0, len(self.pieces) - 1)
            t = u[core] - self.knots[idx]
            c = self.pieces[idx]
            out[core] = self._W_knots[idx] + t * (
                c[:, 0] + t * (c[:, 1] / 2.0 + t * (c[:, 2] / 3.0 + t * c[:, 3] / 4.0)))
        return out

    def _compute_growth_envelope(self, n: int = 256):
        """(c_lo, c_hi) of W(u)/|u|^p over the certification samples."""
        lo, hi = self._envelope_radii()
        r = np.geomspace(lo, hi, n)
        if self.kind == "pressure":
            samples = r
        else:
            samples = np.concatenate([-r[::-1], r])
        ratio = self._raw_antiderivative(samples) / np.abs(samples) ** self.growth_exponent
        return float(ratio.min()), float(ratio.max())

    def _envelope_radii(self):
        outer = max(abs(self.knots[0]), abs(self.knots[-1]))
        if self.kind == "pressure":
            return self.knots[0], 100.0 * outer
        return max(outer / 2.0, 1e-6), 100.0 * outer

    # -- evaluation -----------------------------------------------------------

    def _check_range(self, u) -> None:
        lo, hi = self.certified_range
        umin = np.min(u)
        umax = np.max(u)
        if umin < lo or umax > hi:
            raise EvaluationRangeError(
                f"evaluation at {umin if umin < lo else umax} outside the "
                f"certified range [{lo}, {hi}]")

    def eval(self, u, check: bool = True) -> LawEval:
        """Value, derivative and antiderivative (normalized to W(0) = 0)."""
        scalar = np.isscalar(u) or np.ndim(u) == 0
        uu = np.atleast_1d(np.asarray(u, dtype=float))
        if check:
            self._check_range(uu)
        val = np.empty_like(uu)
        der = np.empty_like(uu)
        left = uu < self.knots[0]
        right = uu > self.knots[-1]
        core = ~(left | right)
        if np.any(left):
            val[left] = self.left_tail.value(uu[left])
            der[left] = self.left_tail.derivative(uu[left])
        if np.any(right):
            val[right] = self.right_tail.value(uu[right])
            der[right] = self.right_tail.derivative(uu[right])
        if np.any(core):
            idx = np.clip(np.searchsorted(self.knots, uu[core], side="right") - 1,
                          0, len(self.pieces) - 1)
            t = uu[core] - self.knots[idx]
            c = self.pieces[idx]
            val[core] = c[:, 0] + t * (c[:, 1] + t * (c[:, 2] + t * c[:, 3]))
            der[core] = c[:, 1] + t * (2.0 * c[:, 2] + 3.0 * t * c[:, 3])
        W = self._raw_antiderivative(uu)
        if scalar:
            return LawEval(float(val[0]), float(der[0]), float(W[0]))
        return LawEval(val, der, W)

    def value(self, u, check: bool = True):
        return self.eval(u, check=check).value

    def derivative(self, u, check: bool = True):
        return self.eval(u, check=check).derivative

    def antiderivative(self, u, check: bool = True):
        return self.eval(u, check=check).antiderivative

    def __call__(self, u):
        return self.value(u)

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        growth = {"p": self.growth_exponent,
                  "c_lo": self.growth_coeffs[0], "c_hi": self.growth_coeffs[1]}
        tails = {side: {"kind": t.kind, "A": t.A, "q": t.q, "B": t.B}
                 for side, t in (("left", self.left_tail), ("right", self.right_tail))}
        return {"kind": self.kind,
                "breakpoints": self.knots.tolist(),
                "coefficients": self.pieces.tolist(),
                "growth": growth,
                "tails": tails,
                "certified_range": list(self.certified_range),
                "provenance": self.provenance}

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)


class StressLaw(PiecewiseLaw):
    """Stress law sigma(u) with signed power-growth tails."""

    def __init__(self, *args, **kwargs):
        kwargs.setdefault("kind", "stress")
        super().__init__(*args, **kwargs)


class PressureLaw(PiecewiseLaw):
    """Pressure law p(rho), positive on its certified range.

    ``phase_params`` records the (a, b, d) the law was built to match.
    """

    def __init__(self, *args, phase_params=None, **kwargs):
        kwargs.setdefault("kind", "pressure")
        super().__init__(*args, **kwargs)
        self.phase_params = phase_params
        if phase_params is not None:
            self.provenance.setdefault("a", phase_params[0])
            self.provenance.setdefault("b", phase_params[1])
            self.provenance.setdefault("d", phase_params[2])

    def to_json(self) -> dict:
        doc = super().to_json()
        if self.phase_params is not None:
            doc["phase_params"] = list(self.phase_params)
        return doc


def law_from_json(doc: dict) -> PiecewiseLaw:
    tails = {side: Tail(kind=t["kind"], A=t["A"], q=t["q"], B=t.get("B", 0.0))
             for side, t in doc["tails"].items()}
    kind = doc.get("kind", "generic")
    cls = {"stress": StressLaw, "pressure": PressureLaw}.get(kind, PiecewiseLaw)
    kwargs = dict(
        knots=doc["breakpoints"], pieces=doc["coefficients"],
        left_tail=tails["left"], right_tail=tails["right"],
        growth_exponent=doc["growth"]["p"],
        certified_range=doc["certified_range"],
        provenance=doc.get("provenance"),
        growth_coeffs=(doc["growth"]["c_lo"], doc["growth"]["c_hi"]),
    )
    if cls is PressureLaw:
        pp = doc.get("phase_params")
        return PressureLaw(phase_params=tuple(pp) if pp else None, **kwargs)
    return cls(**kwargs)


def load_law(path) -> PiecewiseLaw:
    with open(path) as fh:
        return law_from_json(json.load(fh))


# -- builders ------------------------------------------------------------------


def make_two_phase_stress(a: float, b: float, growth_exponent: float,
                          slope: float = 1.0, stress_at_a: float | None = None,
                          range_factor: float = 1e4) -> StressLaw:
    """Stress law with sigma(tau*a) == sigma(tau*b) for tau in [1, 2].

    The law rises linearly on [a, 2a] with the given slope, is copied onto
    [b, 2b] by the scaling u -> (b/a) u, descends across a C1 cubic bridge on
    (2a, b), and continues outside [a, 2b] as C1-matched tails
    A*sign(u)*|u|**(p-1) + B with p = growth_exponent.

    ``stress_at_a`` sets sigma(a).  The default slope*a/(p-1) makes the left
    tail pass through the origin, which keeps the stored energy W nonnegative
    everywhere (so initial energies of two-state data are nonnegative).
    Choosing a value in (-slope*a, 0) instead places a root of sigma inside
    (a, 2a), giving a matched pair of stress-free states at the price of W
    dipping negative over the wells.
    """
    if a <= 0:
        raise ValueError("need a > 0")
    if 2.0 * a >= b:
        raise ValueError("need 2a < b: the matched intervals [a,2a] and [b,2b] "
                         "must be disjoint for a descending bridge to exist")
    if growth_exponent <= 2.0:
        raise ValueError("need growth_exponent > 2 so that the tail slope "
                         "grows and the coercivity trap closes")
    if slope <= 0:
        raise ValueError("need slope > 0")
    p = float(growth_exponent)
    q = p - 1.0
    s = float(slope)
    sig_a = s * a / q if stress_at_a is None else float(stress_at_a)

    knots = [a, 2.0 * a, b, 2.0 * b]
    rise = (sig_a, s, 0.0, 0.0)
    copy = (sig_a, s * a / b, 0.0, 0.0)
    bridge = _hermite_coeffs(b - 2.0 * a, sig_a + s * a, sig_a, s, s * a / b)
    pieces = [rise, bridge, copy]

    A_L = s / (q * a ** (q - 1.0))
    left = Tail("signed_power", A=A_L, q=q, B=sig_a - A_L * a ** q)
    m_R = s * a / b
    A_R = m_R / (q * (2.0 * b) ** (q - 1.0))
    right = Tail("signed_power", A=A_R, q=q,
                 B=(sig_a + s * a) - A_R * (2.0 * b) ** q)

    rng = range_factor * 2.0 * b
    return StressLaw(knots, pieces, left, right, growth_exponent=p,
                     certified_range=(-rng, rng),
                     provenance={"a": a, "b": b, "slope": s, "sigma_a": sig_a})


def make_nonmonotone_pressure(a: float, b: float, d: int,
                              base_level: float = 1.0, rise: float = 1.0,
                              range_factor: float = 1e3) -> PressureLaw:
    """Pressure law with p(a/t^d) == p(b/t^d) for t in [1, 2].

    Rises linearly from ``base_level`` to ``base_level + rise`` on
    [a/2^d, a], is copied onto [b/2^d, b] by rho -> (b/a) rho, bridges
    (a, b/2^d) with a descending C1 cubic, and extends with positive
    C1-matched power tails A*rho**q, so the law stays positive.
    """
    if a <= 0 or d < 1:
        raise ValueError("need a > 0 and d >= 1")
    scale = 2.0 ** d
    if a >= b / scale:
        raise ValueError(f"need a < b/2^d = {b / scale}: the matched density "
                         "intervals must be disjoint")
    if base_level <= 0 or rise <= 0:
        raise ValueError("need base_level > 0 and rise > 0")

    lo1, hi1 = a / scale, a
    lo2, hi2 = b / scale, b
    s = rise / (hi1 - lo1)
    p_lo, p_hi = base_level, base_level + rise

    knots = [lo1, hi1, lo2, hi2]
    rise_piece = (p_lo, s, 0.0, 0.0)
    copy_piece = (p_lo, s * a / b, 0.0, 0.0)
    bridge = _hermite_coeffs(lo2 - hi1, p_hi, p_lo, s, s * a / b)
    pieces = [rise_piece, bridge, copy_piece]

    gL = s * lo1 / p_lo
    left = Tail("power", A=p_lo / lo1 ** gL, q=gL)
    m_R = s * a / b
    gR = m_R * hi2 / p_hi
    right = Tail("power", A=p_hi / hi2 ** gR, q=gR)

    law = PressureLaw(knots, pieces, left, right, growth_exponent=gR + 1.0,
                      certified_range=(1e-8 * lo1, range_factor * b),
                      phase_params=(a, b, d))
    probe = np.linspace(lo1, hi2, 4097)
    pmin = float(np.min(law.value(probe)))
    if pmin <= 0.0:
        raise ValueError(f"bridge undershoots to {pmin}; increase base_level")
    law.provenance["min_on_core"] = pmin
    return law


def linear_stress(slope: float = 1.0) -> StressLaw:
    """Monotone law sigma(u) = slope*u, used as a falsification reference."""
    s = float(slope)
    knots = [-1.0, 1.0]
    pieces = [(-s, s, 0.0, 0.0)]
    tail_l = Tail("signed_power", A=s, q=1.0, B=0.0)
    tail_r = Tail("signed_power", A=s, q=1.0, B=0.0)
    return StressLaw(knots, pieces, tail_l, tail_r, growth_exponent=2.0,
                     certified_range=(-1e6, 1e6), provenance={"linear": s})


def linear_pressure(slope: float = 1.0) -> PressureLaw:
    """Monotone pressure p(rho) = slope*rho (violates the matching condition)."""
    s = float(slope)
    knots = [0.5, 1.0]
    pieces = [(0.5 * s, s, 0.0, 0.0)]
    return PressureLaw(knots, pieces, Tail("power", A=s, q=1.0),
                       Tail("power", A=s, q=1.0), growth_exponent=2.0,
                       certified_range=(1e-12, 1e6),
                       provenance={"linear": s})


# -- coercivity certification ---------------------------------------------------


@dataclass
class CoercivityReport:
    """Certified trap region for the strain ODE comparison argument.

    ``B(u, M) = max_{|z| <= M} |sigma'(u + z)| * M`` bounds the forcing of the
    reduced ODE; ``g_plus``/``g_minus`` are the sampled thresholds beyond
    which sigma -/+ B keeps a fixed sign, and ``K = max(|g_minus|, g_plus) + M``
    is the resulting strain bound.
    """

    M: float
    g_plus: float | None
    g_minus: float | None
    K: float | None
    u_grid: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    ok: bool = True

    def to_json(self) -> dict:
        return {"M": self.M, "g_plus": self.g_plus, "g_minus": self.g_minus,
                "K": self.K, "ok": self.ok,
                "samples": {"n": int(len(self.u_grid)),
                            "lo": float(self.u_grid[0]),
                            "hi": float(self.u_grid[-1])}}


def certify_coercivity(law: PiecewiseLaw, M: float, search_radius: float | None = None,
                       n_u: int = 2048, n_z: int = 512) -> CoercivityReport:
    """Find thresholds where sigma dominates the perturbation bound B(., M).

    Searches a symmetric grid of ``n_u`` points.  B is maximized over a
    ``n_z``-point grid in the shift z in [-M, M]; sigma' is piecewise
    quadratic so this resolves the maximum.  Returns a failed report (ok is
    False, thresholds None) when no threshold exists within the search range.
    """
    if M < 0:
        raise ValueError("need M >= 0")
    if search_radius is None:
        outer = max(abs(law.knots[0]), abs(law.knots[-1]))
        search_radius = max(20.0 * outer, 10.0 * (1.0 + M))
    u = np.linspace(-search_radius, search_radius, n_u)
    sigma = law.value(u, check=False)
    if M == 0.0:
        B = np.zeros_like(u)
    else:
        z = np.linspace(-M, M, n_z)
        der = law.derivative(u[:, None] + z[None, :], check=False)
        B = M * np.max(np.abs(der), axis=1)

    above = sigma - B > 0.0
    below = sigma + B < 0.0
    g_plus = g_minus = None
    bad_high = np.nonzero(~above)[0]
    if len(bad_high) == 0 or bad_high[-1] + 1 < len(u):
        i = 0 if len(bad_high) == 0 else bad_high[-1] + 1
        g_plus = float(u[i])
    bad_low = np.nonzero(~below)[0]
    if len(bad_low) == 0 or bad_low[0] > 0:
        i = len(u) - 1 if len(bad_low) == 0 else bad_low[0] - 1
        g_minus = float(u[i])

    ok = g_plus is not None and g_minus is not None and g_plus > 0 and g_minus < 0
    K = max(abs(g_minus), g_plus) + M if ok else None
    return CoercivityReport(M=float(M), g_plus=g_plus, g_minus=g_minus, K=K,
                            u_grid=u, sigma=sigma, B=B, ok=ok)
