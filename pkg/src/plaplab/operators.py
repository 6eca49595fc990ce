"""Diffusion-matrix algebra for the six p-Laplace-type operator families.

Every family produces matrices of the rank-one-update form

    A(xi) = s * I + c * (xi ⊗ xi) / |xi|^2,

so eigenvalues are {s + c (along xi), s (transverse)} and the symmetric PSD
square root is closed-form:

    A(xi)^{1/2} = sqrt(s) * I + (sqrt(s + c) - sqrt(s)) * (xi ⊗ xi)/|xi|^2.

The coefficient pair (s, c) per family:

    normalized          s = 1                        c = (p-2)
    variational         s = |xi|^{p-2}               c = (p-2) s
    general (p, p')     s = |xi|^{p'-2}              c = (p-2) s
    regularized (p, p') s = w^{(p'-2)/2}             c = s (p-2) |xi|^2 / w,   w = |xi|^2 + eps^2
    biased infinity     s = 0                        c = 1
    biased inf. (reg.)  s = eps1                     c = |xi|^2 / (|xi|^2 + eps1^2)

Spectral norms of square-root differences (the closeness gap between two
members evaluated at the same gradient) follow from the same structure and
never need an eigensolver; a dense fallback is kept for cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import SingularGradientError


class Family(Enum):
    NORMALIZED = "normalized"
    VARIATIONAL = "variational"
    GENERAL_PQ = "general_pq"
    REGULARIZED_PQ = "regularized_pq"
    BIASED_INFINITY = "biased_infinity"
    BIASED_INFINITY_REGULARIZED = "biased_infinity_regularized"


class PerturbationAxis(Enum):
    """Which struct field a closeness sweep perturbs.

    P and P_PRIME shift the exponent by the sweep value (perturbed = base +
    value); EPS and EPS1_EPS2 set the regularization parameter(s) to the sweep
    value directly, with the base member at zero.
    """

    P = "p"
    P_PRIME = "p_prime"
    EPS = "eps"
    EPS1_EPS2 = "eps1_eps2"


@dataclass(frozen=True)
class OperatorSpec:
    """One member of the diffusion family, plus the singular-gradient threshold.

    ``grad_floor`` is the gradient magnitude below which the time stepper
    switches to its regularized evaluation; it does not affect the algebraic
    operations in this module.
    """

    family: Family
    p: float = 2.0
    p_prime: float = 2.0
    eps: float = 0.0
    eps1: float = 0.0
    eps2: float = 0.0
    a: float = 0.0
    grad_floor: float = 0.0

    def __post_init__(self):
        f = self.family
        if self.grad_floor < 0:
            raise ValueError("grad_floor must be >= 0")
        if f in (Family.NORMALIZED, Family.REGULARIZED_PQ):
            if self.p < 1:
                raise ValueError(f"{f.value} requires p >= 1, got {self.p}")
        elif f in (Family.VARIATIONAL, Family.GENERAL_PQ):
            if self.p <= 1:
                raise ValueError(f"{f.value} requires p > 1, got {self.p}")
        if f is Family.GENERAL_PQ and self.p_prime <= 1:
            raise ValueError(f"general_pq requires p' > 1, got {self.p_prime}")
        if f is Family.REGULARIZED_PQ:
            if self.p_prime < 2:
                raise ValueError(f"regularized_pq requires p' >= 2, got {self.p_prime}")
            if self.eps < 0:
                raise ValueError("eps must be >= 0")
        if f is Family.BIASED_INFINITY_REGULARIZED and (self.eps1 < 0 or self.eps2 < 0):
            raise ValueError("eps1, eps2 must be >= 0")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def normalized(p: float, **kw) -> "OperatorSpec":
        return OperatorSpec(Family.NORMALIZED, p=p, **kw)

    @staticmethod
    def variational(p: float, **kw) -> "OperatorSpec":
        return OperatorSpec(Family.VARIATIONAL, p=p, p_prime=p, **kw)

    @staticmethod
    def general_pq(p: float, p_prime: float, **kw) -> "OperatorSpec":
        return OperatorSpec(Family.GENERAL_PQ, p=p, p_prime=p_prime, **kw)

    @staticmethod
    def regularized_pq(p: float, p_prime: float, eps: float, **kw) -> "OperatorSpec":
        return OperatorSpec(Family.REGULARIZED_PQ, p=p, p_prime=p_prime, eps=eps, **kw)

    @staticmethod
    def biased_infinity(a: float = 0.0, **kw) -> "OperatorSpec":
        return OperatorSpec(Family.BIASED_INFINITY, a=a, **kw)

    @staticmethod
    def biased_infinity_regularized(a: float, eps1: float, eps2: float, **kw) -> "OperatorSpec":
        return OperatorSpec(
            Family.BIASED_INFINITY_REGULARIZED, a=a, eps1=eps1, eps2=eps2, **kw
        )

    # -- structural properties --------------------------------------------

    @property
    def everywhere_defined(self) -> bool:
        """True when A extends continuously to xi = 0."""
        if self.family is Family.REGULARIZED_PQ:
            return self.eps > 0
        if self.family is Family.BIASED_INFINITY_REGULARIZED:
            return self.eps1 > 0
        return False

    @property
    def growth_exponent(self) -> float:
        """Exponent p'_eff with |A(xi)| ~ |xi|^{p'_eff - 2} at large and small |xi|."""
        if self.family in (Family.VARIATIONAL,):
            return self.p
        if self.family in (Family.GENERAL_PQ, Family.REGULARIZED_PQ):
            return self.p_prime
        return 2.0


def rank_one_coeffs(spec: OperatorSpec, r2: float) -> tuple[float, float]:
    """Coefficients (s, c) with A = s I + c P(xi) at squared magnitude r2 = |xi|^2.

    r2 = 0 is admitted only for everywhere-defined members (there c = 0).
    """
    if r2 < 0:
        raise ValueError("r2 must be >= 0")
    f = spec.family
    if r2 == 0.0 and not spec.everywhere_defined:
        raise SingularGradientError(f"{f.value} operator is singular at xi = 0")
    if f is Family.NORMALIZED:
        return 1.0, spec.p - 2.0
    if f is Family.VARIATIONAL:
        s = r2 ** ((spec.p - 2.0) / 2.0)
        return s, (spec.p - 2.0) * s
    if f is Family.GENERAL_PQ:
        s = r2 ** ((spec.p_prime - 2.0) / 2.0)
        return s, (spec.p - 2.0) * s
    if f is Family.REGULARIZED_PQ:
        w = r2 + spec.eps * spec.eps
        if w == 0.0:
            raise SingularGradientError("regularized_pq with eps = 0 is singular at xi = 0")
        s = w ** ((spec.p_prime - 2.0) / 2.0)
        return s, s * (spec.p - 2.0) * r2 / w
    if f is Family.BIASED_INFINITY:
        return 0.0, 1.0
    # biased infinity, regularized
    return spec.eps1, r2 / (r2 + spec.eps1 * spec.eps1)


def rank_one_coeff_arrays(spec: OperatorSpec, r2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``rank_one_coeffs``; caller guarantees r2 > 0 where singular."""
    f = spec.family
    if f is Family.NORMALIZED:
        return np.ones_like(r2), np.full_like(r2, spec.p - 2.0)
    if f is Family.VARIATIONAL:
        s = r2 ** ((spec.p - 2.0) / 2.0)
        return s, (spec.p - 2.0) * s
    if f is Family.GENERAL_PQ:
        s = r2 ** ((spec.p_prime - 2.0) / 2.0)
        return s, (spec.p - 2.0) * s
    if f is Family.REGULARIZED_PQ:
        w = r2 + spec.eps * spec.eps
        s = w ** ((spec.p_prime - 2.0) / 2.0)
        return s, s * (spec.p - 2.0) * r2 / w
    if f is Family.BIASED_INFINITY:
        return np.zeros_like(r2), np.ones_like(r2)
    w = r2 + spec.eps1 * spec.eps1
    return np.full_like(r2, spec.eps1), r2 / w


def _as_xi(xi) -> np.ndarray:
    v = np.asarray(xi, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size not in (1, 2, 3):
        raise ValueError("xi must be a vector of dimension 1, 2 or 3")
    return v


def _assemble(v: np.ndarray, s: float, c: float, r2: float) -> np.ndarray:
    n = v.size
    out = s * np.eye(n)
    if c != 0.0 and r2 > 0.0:
        out += (c / r2) * np.outer(v, v)
    return out


def diffusion_matrix(spec: OperatorSpec, xi) -> np.ndarray:
    """A(xi): symmetric PSD n x n diffusion matrix of the family member."""
    v = _as_xi(xi)
    r2 = float(v @ v)
    s, c = rank_one_coeffs(spec, r2)
    return _assemble(v, s, c, r2)


def sqrt_matrix(spec: OperatorSpec, xi) -> np.ndarray:
    """Closed-form symmetric PSD square root of ``diffusion_matrix``."""
    v = _as_xi(xi)
    r2 = float(v @ v)
    s, c = rank_one_coeffs(spec, r2)
    rs = math.sqrt(max(s, 0.0))
    rsc = math.sqrt(max(s + c, 0.0))
    return _assemble(v, rs, rsc - rs, r2)


def largest_eigenvalue(spec: OperatorSpec, r2: float) -> float:
    s, c = rank_one_coeffs(spec, r2)
    return max(s, s + c)


def c1_gap(spec_a: OperatorSpec, spec_b: OperatorSpec, xi) -> float:
    """Spectral norm of sqrt(A_a(xi)) - sqrt(A_b(xi)).

    Both square roots share the eigenbasis {xi-direction, its complement}, so
    the norm is the larger of the two eigenvalue gaps; in dimension one only
    the xi-direction exists.
    """
    v = _as_xi(xi)
    r2 = float(v @ v)
    sa, ca = rank_one_coeffs(spec_a, r2)
    sb, cb = rank_one_coeffs(spec_b, r2)
    along = abs(math.sqrt(max(sa + ca, 0.0)) - math.sqrt(max(sb + cb, 0.0)))
    if v.size == 1:
        return along
    trans = abs(math.sqrt(max(sa, 0.0)) - math.sqrt(max(sb, 0.0)))
    return max(along, trans)


def c1_gap_dense(spec_a: OperatorSpec, spec_b: OperatorSpec, xi) -> float:
    """Eigensolver fallback for ``c1_gap`` (n <= 3); used for cross-checks."""
    d = sqrt_matrix(spec_a, xi) - sqrt_matrix(spec_b, xi)
    return float(np.max(np.abs(np.linalg.eigvalsh(d))))


def perturb_spec(spec: OperatorSpec, axis: PerturbationAxis, value: float) -> OperatorSpec:
    """The family member at perturbation ``value`` along ``axis`` (see enum doc)."""
    if value <= 0:
        raise ValueError("perturbation value must be > 0")
    if axis is PerturbationAxis.P:
        new = replace(spec, p=spec.p + value)
        if spec.family is Family.VARIATIONAL:
            new = replace(new, p_prime=spec.p_prime + value)
        return new
    if axis is PerturbationAxis.P_PRIME:
        if spec.family not in (Family.GENERAL_PQ, Family.REGULARIZED_PQ):
            raise ValueError("p' perturbation needs a (p, p') family")
        return replace(spec, p_prime=spec.p_prime + value)
    if axis is PerturbationAxis.EPS:
        if spec.family is not Family.REGULARIZED_PQ:
            raise ValueError("eps perturbation needs the regularized_pq family")
        if spec.eps != 0.0:
            raise ValueError("eps sweep requires the base member at eps = 0")
        return replace(spec, eps=value)
    if spec.family is not Family.BIASED_INFINITY_REGULARIZED:
        raise ValueError("eps1/eps2 perturbation needs the regularized biased family")
    if spec.eps1 != 0.0 or spec.eps2 != 0.0:
        raise ValueError("eps1/eps2 sweep requires the base member at eps1 = eps2 = 0")
    return replace(spec, eps1=value, eps2=value)


# -- closeness certification ------------------------------------------------


@dataclass(frozen=True)
class C1Params:
    """Candidate closeness envelope gap <= c_A * eps^alpha * (1 + |xi|^beta).

    ``k`` is the test-function exponent; the admissible window for beta is
    beta > (2 - k) / (2 (k - 1)).
    """

    alpha: float
    beta: float
    c_A: float
    k: float = 4.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.c_A < 0:
            raise ValueError("c_A must be >= 0")
        if self.k <= 2:
            raise ValueError("k must be > 2")
        if self.beta <= (2.0 - self.k) / (2.0 * (self.k - 1.0)):
            raise ValueError(
                f"beta = {self.beta} violates beta > (2-k)/(2(k-1)) = "
                f"{(2.0 - self.k) / (2.0 * (self.k - 1.0)):.6g}"
            )


@dataclass(frozen=True)
class C2Params:
    gamma: float
    c_H: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if self.c_H < 0:
            raise ValueError("c_H must be >= 0")


def default_test_exponent(spec: OperatorSpec) -> float:
    """Test exponent k = max(4, 2 p'/(p'-1)), large enough for singular members."""
    pp = spec.growth_exponent
    if pp <= 1:
        raise ValueError("growth exponent must exceed 1")
    return max(4.0, 2.0 * pp / (pp - 1.0))


def _default_directions(dim: int) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        ang = np.linspace(0.0, np.pi, 8, endpoint=False)
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    pts = np.array(
        [
            [1, 0, 0], [0, 1, 0], [0, 0, 1],
            [1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1],
            [1, -1, 0], [1, 0, -1], [0, 1, -1], [1, -1, 1],
        ],
        dtype=float,
    )
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


@dataclass(frozen=True)
class C1CertifyReport:
    max_ratio: float
    worst_xi: np.ndarray
    worst_eps: float
    passed: bool


def c1_certify(
    base_spec: OperatorSpec,
    axis: PerturbationAxis,
    eps_list: Sequence[float],
    xi_mags: Sequence[float],
    candidate: C1Params,
    directions: Optional[np.ndarray] = None,
    dim: int = 2,
) -> C1CertifyReport:
    """Scan gap / (eps^alpha (1 + |xi|^beta)) over a perturbation and xi grid.

    Passes iff the maximal ratio stays below the candidate constant c_A.
    """
    mags = np.asarray(list(xi_mags), dtype=float)
    if mags.size == 0 or np.any(mags <= 0):
        raise ValueError("xi magnitudes must be a nonempty positive list")
    if not eps_list:
        raise ValueError("eps list must be nonempty")
    dirs = _default_directions(dim) if directions is None else np.asarray(directions, float)
    worst = (-1.0, None, None)
    for eps in eps_list:
        spec_eps = perturb_spec(base_spec, axis, eps)
        denom_eps = eps ** candidate.alpha
        for m in mags:
            denom = denom_eps * (1.0 + m ** candidate.beta)
            for u in dirs:
                xi = m * u
                ratio = c1_gap(spec_eps, base_spec, xi) / denom
                if ratio > worst[0]:
                    worst = (ratio, xi, eps)
    max_ratio, worst_xi, worst_eps = worst
    return C1CertifyReport(
        max_ratio=float(max_ratio),
        worst_xi=worst_xi,
        worst_eps=float(worst_eps),
        passed=bool(max_ratio <= candidate.c_A),
    )


# -- first-order terms --------------------------------------------------------


@dataclass(frozen=True)
class HamiltonianSpec:
    """First-order term H(x, t, xi) = -a sqrt(|xi|^2 + eps2^2) - f(x, t).

    ``source`` is f, a callable of the spatial coordinates followed by time
    (f(x, t) in 1D, f(x, y, t) in 2D); None means f = 0. The default spec is
    the zero Hamiltonian used by families without first-order terms.
    """

    a: float = 0.0
    eps2: float = 0.0
    source: Optional[Callable] = None
    lipschitz: Optional[float] = None

    def __post_init__(self):
        if self.eps2 < 0:
            raise ValueError("eps2 must be >= 0")
        if self.lipschitz is not None and self.lipschitz < 0:
            raise ValueError("lipschitz must be >= 0")

    @property
    def is_zero(self) -> bool:
        return self.a == 0.0 and self.source is None


def hamiltonian(h: HamiltonianSpec, x, t: float, xi) -> float:
    """Evaluate H at one space-time point and gradient."""
    v = _as_xi(xi)
    out = 0.0
    if h.a != 0.0:
        out -= h.a * math.sqrt(float(v @ v) + h.eps2 * h.eps2)
    if h.source is not None:
        coords = np.atleast_1d(np.asarray(x, dtype=float))
        out -= float(h.source(*coords, t))
    return out


def hamiltonian_for(spec: OperatorSpec, source: Optional[Callable] = None) -> HamiltonianSpec:
    """First-order term matching the family: the biased members carry
    -a sqrt(|xi|^2 + eps2^2) - f, all others have H = -f (zero by default)."""
    if spec.family is Family.BIASED_INFINITY:
        return HamiltonianSpec(a=spec.a, eps2=0.0, source=source)
    if spec.family is Family.BIASED_INFINITY_REGULARIZED:
        return HamiltonianSpec(a=spec.a, eps2=spec.eps2, source=source)
    return HamiltonianSpec(source=source)


def c2_gap(
    h_a: HamiltonianSpec,
    h_b: HamiltonianSpec,
    xi_grid: Sequence,
    xt_grid: Sequence[tuple],
) -> float:
    """max |H_a - H_b| over the gradient grid times the space-time grid."""
    if not len(xi_grid) or not len(xt_grid):
        raise ValueError("grids must be nonempty")
    gap = 0.0
    for x, t in xt_grid:
        for xi in xi_grid:
            gap = max(gap, abs(hamiltonian(h_a, x, t, xi) - hamiltonian(h_b, x, t, xi)))
    return gap
