"""Exponent arithmetic on [1, inf] and Gaussian absolute moments.

Exponents are plain floats. Infinity is always ``math.inf`` (never a large
finite stand-in), and every norm routine tests for it with ``math.isinf``
before doing any power arithmetic.
"""
from __future__ import annotations

import math

from scipy.special import gammaln

INF = math.inf

# values within this distance of 1/2, 1 or 2 snap onto them so that regime
# dispatch (p == 1, p == 2, ...) is deterministic
SNAP_TOL = 1e-12
_SNAP_POINTS = (0.5, 1.0, 2.0)

DERIVED_KINDS = ("half", "two_q_over_two_minus_q", "two_p_over_p_minus_two")


class ExponentDomainError(ValueError):
    """An exponent lies outside the range required by a formula."""


def canonical(p, lower: float = 1.0) -> float:
    """Parse and canonicalise an exponent.

    Accepts numbers and the strings ``"inf"``/``"infinity"``/``"∞"``. Values
    within ``SNAP_TOL`` of 1/2, 1 or 2 are snapped, so ``2``, ``"2.0"`` and
    ``2 + 1e-14`` all become ``2.0``. ``lower`` is the smallest admissible
    value (1 for norm exponents, 1/2 for halved ones).
    """
    if isinstance(p, str):
        text = p.strip().lower()
        if text in ("inf", "+inf", "infinity", "∞"):
            return INF
        try:
            p = float(text)
        except ValueError:
            raise ExponentDomainError(f"cannot parse exponent {p!r}") from None
    value = float(p)
    if math.isnan(value):
        raise ExponentDomainError("exponent is NaN")
    if math.isinf(value):
        if value < 0:
            raise ExponentDomainError("exponent must be positive")
        return INF
    for point in _SNAP_POINTS:
        if abs(value - point) <= SNAP_TOL:
            value = point
    if value < lower:
        raise ExponentDomainError(f"exponent {value} below admissible minimum {lower}")
    return value


def conjugate(p) -> float:
    """Hölder conjugate p* with 1/p + 1/p* = 1 (1* = inf, inf* = 1)."""
    p = canonical(p)
    if math.isinf(p):
        return 1.0
    if p == 1.0:
        return INF
    if p == 2.0:
        return 2.0
    return canonical(p / (p - 1.0))


def reciprocal(p) -> float:
    """1/p with the convention 1/inf = 0; accepts quasi-norm exponents."""
    p = canonical(p, lower=0.5)
    return 0.0 if math.isinf(p) else 1.0 / p


def half(p) -> float:
    """p/2 for p in [1, inf]; the result may be a quasi-norm exponent >= 1/2."""
    p = canonical(p)
    return INF if math.isinf(p) else canonical(p / 2.0, lower=0.5)


def derived_exponent(which: str, p) -> float:
    """Exponents built from p or q that appear in the bound formulas.

    ``half``: p/2. ``two_q_over_two_minus_q``: 2q/(2-q) for q <= 2 (inf at
    q = 2). ``two_p_over_p_minus_two``: 2p/(p-2) for p >= 2 (inf at p = 2,
    2 at p = inf).
    """
    p = canonical(p)
    if which == "half":
        return half(p)
    if which == "two_q_over_two_minus_q":
        if p > 2.0:
            raise ExponentDomainError(f"2q/(2-q) needs q <= 2, got q={p}")
        if p == 2.0:
            return INF
        return canonical(2.0 * p / (2.0 - p))
    if which == "two_p_over_p_minus_two":
        if p < 2.0:
            raise ExponentDomainError(f"2p/(p-2) needs p >= 2, got p={p}")
        if p == 2.0:
            return INF
        if math.isinf(p):
            return 2.0
        return canonical(2.0 * p / (p - 2.0))
    raise ValueError(f"unknown derived exponent {which!r}; expected one of {DERIVED_KINDS}")


def gaussian_moment(q) -> float:
    """gamma_q = (E|g|^q)^(1/q) for a standard Gaussian g, q in [1, inf).

    Uses E|g|^q = 2^(q/2) Gamma((q+1)/2) / sqrt(pi), evaluated in log space.
    """
    q = canonical(q)
    if math.isinf(q):
        raise ExponentDomainError("gamma_q is undefined for q = inf")
    log_moment = 0.5 * q * math.log(2.0) + gammaln(0.5 * (q + 1.0)) - 0.5 * math.log(math.pi)
    return math.exp(log_moment / q)


def format_exponent(p: float) -> str:
    """Inverse of ``canonical`` for display and CSV output."""
    if math.isinf(p):
        return "inf"
    return repr(float(p)).rstrip("0").rstrip(".") if float(p).is_integer() else repr(float(p))
