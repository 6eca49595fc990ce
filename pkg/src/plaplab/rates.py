"""Predicted sup-norm convergence exponents for each operator family.

The master exponent is

    nu = alpha * theta / (1 + (1 - theta) * max(beta, 0)),

where theta is the equi-Hoelder exponent of the solution family and
(alpha, beta) the closeness envelope parameters. Family-specific cases reduce
to this formula with their admissible (alpha, beta) windows; cases whose
window is open report the supremum with ``attained=False`` and the empirical
comparison then only checks the one-sided bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import CaseNotApplicableError


class FamilyCase(Enum):
    NORMALIZED = "normalized"
    VARIATIONAL_SINGULAR = "variational_singular"        # p < 2, q <= 2
    VARIATIONAL_DEGENERATE = "variational_degenerate"    # p > 2, q >= 2
    GENERAL_PQ_SINGULAR = "general_pq_singular"          # p' < 2, q' <= 2
    GENERAL_PQ_DEGENERATE = "general_pq_degenerate"      # p' > 2, q' >= 2
    GENERAL_PQ_MATCHED = "general_pq_matched"            # p' = q'
    REGULARIZED = "regularized"                          # eps -> 0, p' >= 2
    BIASED_INFINITY = "biased_infinity"                  # eps1 -> 0


@dataclass(frozen=True)
class RatePrediction:
    nu_sup: float
    attained: bool
    case: FamilyCase
    detail: str = ""


def theoretical_rate(alpha: float, beta: float, theta: float) -> float:
    """nu = alpha*theta / (1 + (1-theta) max(beta, 0))."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if not (0.0 < theta <= 1.0):
        raise ValueError("theta must lie in (0, 1]")
    return alpha * theta / (1.0 + (1.0 - theta) * max(beta, 0.0))


def _check_theta(theta: float) -> None:
    if not (0.0 < theta <= 1.0):
        raise CaseNotApplicableError("theta must lie in (0, 1]")


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise CaseNotApplicableError(msg)


def family_rate(
    case: FamilyCase,
    *,
    theta: float,
    p: Optional[float] = None,
    q: Optional[float] = None,
    p_prime: Optional[float] = None,
    q_prime: Optional[float] = None,
    m: Optional[float] = None,
) -> RatePrediction:
    """Predicted exponent for one rate-theorem case.

    ``m`` is the free Young-inequality parameter of the regularization cases;
    when omitted, the supremum over its admissible interval is returned (and
    flagged as an open bound).
    """
    _check_theta(theta)

    if case is FamilyCase.NORMALIZED:
        if p is not None:
            _require(p >= 1, "normalized case needs p >= 1")
        if q is not None:
            _require(q >= 1, "normalized case needs q >= 1")
        return RatePrediction(theta, True, case, "rate |p-q|^theta")

    if case is FamilyCase.VARIATIONAL_SINGULAR:
        _require(p is not None and 1 < p < 2, "requires 1 < p < 2")
        _require(q is None or 1 < q <= 2, "requires 1 < q <= 2")
        return RatePrediction(theta, True, case, "rate |p-q|^theta (beta < 0 window)")

    if case is FamilyCase.VARIATIONAL_DEGENERATE:
        _require(p is not None and p > 2, "requires p > 2")
        _require(q is not None and q >= 2, "requires q >= 2")
        nu = 2.0 * theta / (2.0 * theta + (1.0 - theta) * q)
        return RatePrediction(nu, theta == 1.0, case, "sup over beta > q/2 - 1")

    if case is FamilyCase.GENERAL_PQ_SINGULAR:
        _require(p_prime is not None and 1 < p_prime < 2, "requires 1 < p' < 2")
        _require(q_prime is None or 1 < q_prime <= 2, "requires 1 < q' <= 2")
        return RatePrediction(theta, True, case, "rate (|p-q|+|p'-q'|)^theta")

    if case is FamilyCase.GENERAL_PQ_DEGENERATE:
        _require(p_prime is not None and p_prime > 2, "requires p' > 2")
        _require(q_prime is not None and q_prime >= 2, "requires q' >= 2")
        nu = 2.0 * theta / (2.0 * theta + (1.0 - theta) * q_prime)
        return RatePrediction(nu, theta == 1.0, case, "sup over beta > q'/2 - 1")

    if case is FamilyCase.GENERAL_PQ_MATCHED:
        _require(q_prime is not None and q_prime > 1, "requires q' > 1")
        nu = theoretical_rate(1.0, q_prime / 2.0 - 1.0, theta)
        return RatePrediction(nu, True, case, "matched p' = q', beta = q'/2 - 1")

    if case is FamilyCase.REGULARIZED:
        _require(p_prime is not None and p_prime >= 2, "requires p' >= 2")
        if p is not None:
            _require(p >= 1, "requires p >= 1")
        return _regularized_rate(p_prime, theta, m)

    if case is FamilyCase.BIASED_INFINITY:
        # eps1-exponent alpha ranges over (0, 1/2); eps2 enters at rate 1.
        if m is None:
            return RatePrediction(theta / 2.0, False, case, "sup over alpha in (0, 1/2)")
        _require(0 < m < 0.5, "alpha parameter must lie in (0, 1/2)")
        return RatePrediction(m * theta, False, case, f"alpha = {m}")

    raise CaseNotApplicableError(f"unknown case {case}")


def _regularized_rate(p_prime: float, theta: float, m: Optional[float]) -> RatePrediction:
    case = FamilyCase.REGULARIZED
    if p_prime == 2.0:
        if m is None:
            return RatePrediction(theta / 2.0, False, case, "p'=2: sup over m in (0, 1/2)")
        _require(0 < m < 0.5, "p'=2 requires m in (0, 1/2)")
        return RatePrediction(m * theta, False, case, f"p'=2, m = {m}")
    if 2.0 < p_prime < 3.0:
        return RatePrediction((p_prime - 2.0) * theta, True, case, "2<p'<3: nu=(p'-2)theta")
    if 3.0 <= p_prime <= 4.0:
        if m is None:
            return RatePrediction(theta, False, case, "3<=p'<=4: sup over m in (0, 1)")
        _require(0 < m < 1, "requires m in (0, 1)")
        beta = p_prime / 2.0 - 1.0 - m
        return RatePrediction(theoretical_rate(m, beta, theta), False, case, f"m = {m}")
    if m is None:
        nu = theta / (1.0 + (1.0 - theta) * (p_prime - 4.0))
        return RatePrediction(nu, False, case, "p'>4: sup over m in (0, 1)")
    _require(0 < m < 1, "requires m in (0, 1)")
    beta = max(p_prime - 4.0, p_prime / 2.0 - 1.0 - m)
    return RatePrediction(theoretical_rate(m, beta, theta), False, case, f"m = {m}")
