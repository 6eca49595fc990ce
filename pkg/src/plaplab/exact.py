"""Closed-form reference solutions and residual verifiers.

Five solution families:

* heat mode: u(x, t) = exp((1-p) t) sin x, the one-dimensional reduction of
  the normalized p-diffusion with sine initial data;
* the self-similar source-type solution of the parabolic p-Laplace equation
  (compactly supported for p > 2, full support for subquadratic p);
* the radial eigenfunction u(x) = |x|^{(p+1)/(p-1)} of
  lam_p u^{(p-1)/(p+1)} = Delta_p u on the unit ball;
* the radial torsion profile solving -Delta_p v = c with constant boundary
  values;
* the fundamental profile |x|^{(p-n)/(p-1)}, p-harmonic off the origin for
  p > n.

Residuals plug either exact radial derivatives (analytic mode, identically
zero up to rounding) or second-order difference quotients at spacing h
(discrete mode, defect O(h^2)) into the governing equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import PlapError


class SolutionId(Enum):
    HEAT_MODE = "heat_mode"
    BARENBLATT = "barenblatt"
    RADIAL_ELLIPTIC = "radial_elliptic"
    TORSION_RADIAL = "torsion_radial"
    FUNDAMENTAL = "fundamental"


class SingularPointError(PlapError):
    """Residual requested inside the solution's singular set."""


@dataclass(frozen=True)
class ExactSolution:
    id: SolutionId
    p: float
    n: int = 1
    A: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.n > 3:
            raise ValueError("n must be 1, 2 or 3")
        sid = self.id
        if sid is SolutionId.HEAT_MODE and self.p < 1:
            raise ValueError("heat mode requires p >= 1")
        if sid is SolutionId.BARENBLATT:
            crit = 2.0 * self.n / (self.n + 1.0)
            if self.p <= crit:
                raise ValueError(f"requires p > 2n/(n+1) = {crit:.6g}, got {self.p}")
            if self.p == 2.0:
                raise ValueError("requires p != 2 (the p = 2 member is the Gaussian)")
            if self.A <= 0:
                raise ValueError("requires A > 0")
        if sid in (SolutionId.RADIAL_ELLIPTIC, SolutionId.TORSION_RADIAL) and self.p <= 1:
            raise ValueError("requires p > 1")
        if sid is SolutionId.TORSION_RADIAL and self.c <= 0:
            raise ValueError("torsion requires c > 0")
        if sid is SolutionId.FUNDAMENTAL and self.p <= self.n:
            raise ValueError(f"fundamental profile requires p > n, got p={self.p}, n={self.n}")

    # -- derived constants --------------------------------------------------

    @property
    def lambda_p(self) -> float:
        if self.id is SolutionId.BARENBLATT:
            return self.n * (self.p - 2.0) + self.p
        if self.id is SolutionId.RADIAL_ELLIPTIC:
            return (self.n + 1.0) * ((self.p + 1.0) / (self.p - 1.0)) ** (self.p - 1.0)
        raise ValueError(f"lambda_p undefined for {self.id.value}")

    @property
    def gamma_p(self) -> float:
        """Sign encodes the regime: > 0 below p = 2, < 0 above."""
        lam = self.n * (self.p - 2.0) + self.p
        return (2.0 - self.p) / self.p * lam ** (1.0 / (1.0 - self.p))

    def support_radius(self, t: float) -> float:
        """Free-boundary radius at time t (infinite in the fast-diffusion range)."""
        if self.id is not SolutionId.BARENBLATT:
            raise ValueError("support radius applies to the self-similar solution")
        if self.p < 2.0:
            return math.inf
        g = self.gamma_p
        return t ** (1.0 / self.lambda_p) * (self.A / abs(g)) ** ((self.p - 1.0) / self.p)

    # -- evaluation ----------------------------------------------------------

    def eval(self, x, t: float = 0.0) -> float:
        """Exact value at a point x (scalar in 1D or length-n vector)."""
        v = np.atleast_1d(np.asarray(x, dtype=float))
        if self.id is SolutionId.HEAT_MODE:
            if t < 0:
                raise ValueError("t must be >= 0")
            return float(math.exp((1.0 - self.p) * t) * math.sin(v[0]))
        r = float(np.linalg.norm(v))
        return float(self.eval_radial(np.array([r]), t)[0])

    def eval_radial(self, r: np.ndarray, t: float = 0.0) -> np.ndarray:
        """Vectorized value from the radius (time ignored by elliptic profiles)."""
        r = np.asarray(r, dtype=float)
        sid = self.id
        if sid is SolutionId.HEAT_MODE:
            return np.exp((1.0 - self.p) * t) * np.sin(r)
        if sid is SolutionId.BARENBLATT:
            if t <= 0:
                raise ValueError("self-similar solution needs t > 0")
            lam = self.lambda_p
            m = self.p / (self.p - 1.0)
            kappa = (self.p - 1.0) / (self.p - 2.0)
            s = r * t ** (-1.0 / lam)
            base = self.A + self.gamma_p * s ** m
            return t ** (-self.n / lam) * np.where(base > 0.0, base, 0.0) ** kappa
        if sid is SolutionId.RADIAL_ELLIPTIC:
            return r ** ((self.p + 1.0) / (self.p - 1.0))
        if sid is SolutionId.TORSION_RADIAL:
            coef = -(self.p - 1.0) / self.p * (self.c / self.n) ** (1.0 / (self.p - 1.0))
            return coef * r ** (self.p / (self.p - 1.0))
        return r ** ((self.p - self.n) / (self.p - 1.0))


def _radial_plaplacian(p: float, n: int, r: float, u1: float, u2: float) -> float:
    """Delta_p of a radial profile from u'(r), u''(r), valid where u' != 0."""
    lower = (n - 1.0) * u1 / r if n > 1 else 0.0
    return abs(u1) ** (p - 2.0) * ((p - 1.0) * u2 + lower)


def _power_derivatives(coef: float, a: float, r: float) -> tuple[float, float]:
    return coef * a * r ** (a - 1.0), coef * a * (a - 1.0) * r ** (a - 2.0)


def _barenblatt_derivatives(sol: ExactSolution, r: float, t: float):
    """(u_t, u_r, u_rr) inside the positivity set, r > 0."""
    lam, g = sol.lambda_p, sol.gamma_p
    m = sol.p / (sol.p - 1.0)
    kappa = (sol.p - 1.0) / (sol.p - 2.0)
    s = r * t ** (-1.0 / lam)
    H = sol.A + g * s ** m
    if H <= 0:
        raise SingularPointError("point outside the support")
    tn = t ** (-sol.n / lam)
    u_r = tn * t ** (-1.0 / lam) * kappa * g * m * s ** (m - 1.0) * H ** (kappa - 1.0)
    u_rr = tn * t ** (-2.0 / lam) * kappa * g * m * (
        (m - 1.0) * s ** (m - 2.0) * H ** (kappa - 1.0)
        + (kappa - 1.0) * g * m * s ** (2.0 * m - 2.0) * H ** (kappa - 2.0)
    )
    u_t = (-sol.n / lam) * tn / t * H ** kappa - tn / (lam * t) * kappa * g * m * s ** m * H ** (
        kappa - 1.0
    )
    return u_t, u_r, u_rr


def _check_clearance(sol: ExactSolution, r: float, t: Optional[float], clearance: float):
    if clearance <= 0:
        raise ValueError("clearance must be > 0")
    if sol.id is SolutionId.HEAT_MODE:
        return
    if r < clearance:
        raise SingularPointError(f"|x| = {r:.3g} inside clearance {clearance:.3g} of the origin")
    if sol.id is SolutionId.BARENBLATT:
        if t is None or t <= 0:
            raise ValueError("self-similar solution needs t > 0")
        if sol.p > 2.0 and abs(sol.support_radius(t) - r) < clearance:
            raise SingularPointError("point inside clearance of the free boundary")


def residual(
    sol: ExactSolution,
    x,
    t: Optional[float] = None,
    mode: str = "analytic",
    h: Optional[float] = None,
    clearance: float = 1e-3,
) -> float:
    """Defect of the exact solution in its governing equation at one point.

    ``analytic`` plugs exact derivatives (must vanish to rounding);
    ``discrete`` plugs central difference quotients at spacing h and is
    second-order accurate. The point must keep ``clearance`` distance from the
    solution's singular set (origin for the radial profiles, additionally the
    free boundary for the compactly supported self-similar solution).
    """
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if sol.id is SolutionId.HEAT_MODE:
        r = float(v[0])  # signed coordinate; no singular set
    else:
        r = float(np.linalg.norm(v))
    _check_clearance(sol, abs(r), t, clearance)
    if mode == "analytic":
        return _residual_analytic(sol, v, r, t)
    if mode != "discrete":
        raise ValueError("mode must be 'analytic' or 'discrete'")
    if h is None or h <= 0:
        raise ValueError("discrete mode needs a spacing h > 0")
    if sol.id is not SolutionId.HEAT_MODE and h >= clearance:
        raise ValueError("stencil spacing must stay below the clearance")
    return _residual_discrete(sol, r, t, h)


def _governing_defect(sol: ExactSolution, r, t, u, u_t, u1, u2) -> float:
    p, n = sol.p, sol.n
    sid = sol.id
    if sid is SolutionId.HEAT_MODE:
        return u_t - (p - 1.0) * u2
    dp = _radial_plaplacian(p, n, r, u1, u2)
    if sid is SolutionId.BARENBLATT:
        return u_t - dp
    if sid is SolutionId.RADIAL_ELLIPTIC:
        return sol.lambda_p * u ** ((p - 1.0) / (p + 1.0)) - dp
    if sid is SolutionId.TORSION_RADIAL:
        return -dp - sol.c
    return -dp  # fundamental profile: p-harmonic


def _residual_analytic(sol: ExactSolution, v: np.ndarray, r: float, t) -> float:
    p = sol.p
    sid = sol.id
    if sid is SolutionId.HEAT_MODE:
        x0 = float(v[0])
        tt = 0.0 if t is None else t
        u_t = (1.0 - p) * math.exp((1.0 - p) * tt) * math.sin(x0)
        u2 = -math.exp((1.0 - p) * tt) * math.sin(x0)
        return _governing_defect(sol, x0, tt, None, u_t, None, u2)
    if sid is SolutionId.BARENBLATT:
        u_t, u1, u2 = _barenblatt_derivatives(sol, r, t)
        return _governing_defect(sol, r, t, None, u_t, u1, u2)
    if sid is SolutionId.RADIAL_ELLIPTIC:
        a = (p + 1.0) / (p - 1.0)
        u1, u2 = _power_derivatives(1.0, a, r)
        return _governing_defect(sol, r, t, r ** a, None, u1, u2)
    if sid is SolutionId.TORSION_RADIAL:
        coef = -(p - 1.0) / p * (sol.c / sol.n) ** (1.0 / (p - 1.0))
        u1, u2 = _power_derivatives(coef, p / (p - 1.0), r)
        return _governing_defect(sol, r, t, None, None, u1, u2)
    a = (p - sol.n) / (p - 1.0)
    u1, u2 = _power_derivatives(1.0, a, r)
    return _governing_defect(sol, r, t, None, None, u1, u2)


def _residual_discrete(sol: ExactSolution, r: float, t, h: float) -> float:
    def val(rr, tt):
        return float(sol.eval_radial(np.array([rr]), 0.0 if tt is None else tt)[0])

    u0 = val(r, t)
    up, um = val(r + h, t), val(r - h, t)
    u1 = (up - um) / (2.0 * h)
    u2 = (up - 2.0 * u0 + um) / (h * h)
    u_t = None
    if sol.id in (SolutionId.HEAT_MODE, SolutionId.BARENBLATT):
        tt = 0.0 if t is None else t
        if sol.id is SolutionId.BARENBLATT and tt - h <= 0:
            raise ValueError("time stencil leaves t > 0; increase t or decrease h")
        if tt - h >= 0:
            u_t = (val(r, tt + h) - val(r, tt - h)) / (2.0 * h)
        else:
            u_t = (val(r, tt + h) - val(r, tt)) / h  # first-order fallback at t = 0
    return _governing_defect(sol, r, t, u0, u_t, u1, u2)


# -- closed-form sup differences ----------------------------------------------


@dataclass(frozen=True)
class DomainSampler:
    """Sample points (coordinates in heat mode, radii otherwise) and times."""

    points: tuple[float, ...]
    times: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(float(x) for x in self.points))
        object.__setattr__(self, "times", tuple(float(x) for x in self.times))
        if not self.points or not self.times:
            raise ValueError("sampler needs nonempty point and time sets")

    @staticmethod
    def uniform(x_max: float, t_max: float, nx: int = 10_000, nt: int = 100,
                x_min: float = 0.0, t_min: float = 0.0) -> "DomainSampler":
        return DomainSampler(
            tuple(np.linspace(x_min, x_max, nx)),
            tuple(np.linspace(t_min, t_max, nt)),
        )


def sup_diff_closed_form(sol1: ExactSolution, sol2: ExactSolution,
                         sampler: DomainSampler) -> float:
    """max |u_1 - u_2| over the sampled space-time product grid."""
    if sol1.id is not sol2.id:
        raise ValueError("solutions must belong to the same family")
    pts = np.asarray(sampler.points)
    best = 0.0
    for t in sampler.times:
        d = np.max(np.abs(sol1.eval_radial(pts, t) - sol2.eval_radial(pts, t)))
        best = max(best, float(d))
    return best
