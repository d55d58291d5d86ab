"""Deterministic bound formulas for E||A o X : l_p^n -> l_q^m||.

Everything is built from three ingredients:

* D1 = ||A o A : l_{p/2} -> l_{q/2}||^{1/2} and
  D2 = ||(A o A)^T : l_{q*/2} -> l_{p*/2}||^{1/2};
* rearranged column/row terms max_j sqrt(ln(j+1)) b_j (b_j a column norm,
  d_i a row norm, sorted non-increasingly);
* the maximal entry E max |a_ij g_ij|, either by Monte Carlo or through the
  sorted-maxima surrogate.

Formulas with explicit constants are implemented with those constants.
Formulas whose constants are only known to exist return the bare rate times
a caller-supplied ``calibration`` (default 1); only their growth is meaningful.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .exponents import INF, canonical, conjugate, derived_exponent, gaussian_moment, half
from .lpq_norm import (
    NormResult,
    as_matrix,
    hadamard_square,
    nonincreasing_rearrangement,
    op_norm,
    submatrix_sup_norm,
    vector_norm,
    worst_kind,
)
from .sampling import EntryModel, empirical_emax, emax_column_surrogate, row_col_maxima

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)

# formula labels (stable JSON / CLI names)
MAIN_GAUSSIAN = "main_gaussian"
MAIN_GAUSSIAN_LOG_FLOOR = "main_gaussian_log_floor"
GAUSS_P_LE2 = "gauss_p_le2"
BOUNDARY = "boundary_two_sided"
MAIN_BOUNDED = "main_bounded"
BOUNDED_P2Q = "bounded_p_le2_le_q"
PSI_MAIN = "psi_main"
PSI_CUTOFF = "psi_p_le2_cutoff"
PSI_COUPLED = "psi_p_le2_coupled"
LOWER_GAUSSIAN = "lower_gaussian"
CONJECTURED = "conjectured_rate"

CLASSICAL = ("bgn", "bgn_extended", "seginer", "latala", "lvhy", "ghlp", "matlak")

# third-term regimes, listed in tie-breaking order
REGIME_P2Q = "p<=2<=q"
REGIME_PQ2 = "p<=q<=2"
REGIME_2PQ = "2<=p<=q"
REGIME_QP = "q<p"


class RegimeError(ValueError):
    """A formula was evaluated outside the exponent range where it holds."""

    def __init__(self, formula: str, condition: str, p=None, q=None):
        where = "" if p is None else f" (got p={p}, q={q})"
        super().__init__(f"{formula} requires {condition}{where}")
        self.formula = formula
        self.condition = condition


def _ln_e(k: int) -> float:
    """ln(e k)."""
    return 1.0 + math.log(k)


def _pow(base: float, exponent: float) -> float:
    # 0^0 = 1 so vanishing logarithms with vanishing exponents drop out
    if exponent == 0.0:
        return 1.0
    return base**exponent


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


# ---------------------------------------------------------------------------
# building blocks


@dataclass
class DTerms:
    """D1 and D2 with the norm certificates they came from.

    Iterating yields ``(d1, d2)`` so ``d1, d2 = d_terms(...)`` works.
    ``d1``/``d2`` are the certified lower ends; ``d1_upper``/``d2_upper`` the
    upper ends (equal for exact certificates, ``inf`` for heuristics).
    """

    d1: float
    d2: float
    d1_upper: float
    d2_upper: float
    certificates: tuple = field(default=(), repr=False)

    def __iter__(self):
        yield self.d1
        yield self.d2

    @property
    def kind(self) -> str:
        return worst_kind([c.kind for c in self.certificates])

    def upper_or_value(self) -> tuple[float, float]:
        """Upper ends where certified, else the computed values."""
        d1 = self.d1_upper if math.isfinite(self.d1_upper) else self.d1
        d2 = self.d2_upper if math.isfinite(self.d2_upper) else self.d2
        return d1, d2


def _sqrt_result(res: NormResult) -> tuple[float, float]:
    return math.sqrt(res.lower), math.sqrt(res.upper) if math.isfinite(res.upper) else INF


def d_terms(A, p, q, *, sub: tuple[int, int] | None = None, **norm_opts) -> DTerms:
    """D1, D2 of ``A``; with ``sub=(m, n)`` the sup over all m x n submatrices."""
    A = as_matrix(A)
    p, q = canonical(p), canonical(q)
    S = hadamard_square(A)
    if sub is None:
        r1 = op_norm(S, half(p), half(q), **norm_opts)
        r2 = op_norm(S.T, half(conjugate(q)), half(conjugate(p)), **norm_opts)
    else:
        m, n = sub
        r1 = submatrix_sup_norm(S, m, n, half(p), half(q), **norm_opts)
        r2 = submatrix_sup_norm(S.T, n, m, half(conjugate(q)), half(conjugate(p)), **norm_opts)
    d1, d1u = _sqrt_result(r1)
    d2, d2u = _sqrt_result(r2)
    return DTerms(d1, d2, d1u, d2u, (r1, r2))


def d1_d2(A, p, q, **norm_opts) -> tuple[float, float]:
    return tuple(d_terms(A, p, q, **norm_opts))


def rearranged_log_term(A, which: str, exponent) -> tuple[np.ndarray, float]:
    """Sorted column (``b``) or row (``d``) norms and max_j sqrt(ln(j+1)) x_j.

    ``which="b"`` takes q <= 2 and column norms of order 2q/(2-q);
    ``which="d"`` takes p >= 2 and row norms of order 2p/(p-2).
    """
    A = as_matrix(A)
    if which == "b":
        t = derived_exponent("two_q_over_two_minus_q", exponent)
        norms = vector_norm(A, t, axis=0)
    elif which == "d":
        t = derived_exponent("two_p_over_p_minus_two", exponent)
        norms = vector_norm(A, t, axis=1)
    else:
        raise ValueError("which must be 'b' or 'd'")
    ranked = nonincreasing_rearrangement(norms)
    weights = np.sqrt(np.log(np.arange(2, ranked.size + 2)))
    return ranked, float(np.max(weights * ranked))


def emax_term(A, mode: str = "surrogate", *, model="gaussian", trials: int = 400, seed: int = 0) -> float:
    """E max |a_ij X_ij|: Monte Carlo, or the larger of the column/row surrogates."""
    if mode == "surrogate":
        return max(emax_column_surrogate(A, "columns"), emax_column_surrogate(A, "rows"))
    if mode == "monte_carlo":
        return empirical_emax(A, model, trials, seed)[0]
    raise ValueError("emax mode must be 'surrogate' or 'monte_carlo'")


def third_term_regimes(p, q) -> list[str]:
    """All regimes whose closed conditions hold, in tie-breaking order."""
    p, q = canonical(p), canonical(q)
    out = []
    if p <= 2.0 <= q:
        out.append(REGIME_P2Q)
    if p <= q <= 2.0:
        out.append(REGIME_PQ2)
    if 2.0 <= p <= q:
        out.append(REGIME_2PQ)
    if q < p:
        out.append(REGIME_QP)
    return out


def _third_piece(A, p, q, regime, emax_kw) -> tuple[str, float]:
    if regime == REGIME_P2Q:
        return "emax_term", emax_term(A, **emax_kw)
    if regime == REGIME_PQ2:
        return "b_term", rearranged_log_term(A, "b", q)[1]
    if regime == REGIME_2PQ:
        return "d_term", rearranged_log_term(A, "d", p)[1]
    return "none", 0.0


# ---------------------------------------------------------------------------
# reports


@dataclass
class BoundReport:
    """One evaluated formula.

    ``value`` is the headline number (an upper bound, a lower bound or a rate
    depending on ``formula``). ``certified_lower`` collects only pieces with
    explicit constants; ``lower`` may also contain rate-level pieces.
    """

    formula: str
    p: float
    q: float
    value: float
    d1: float = math.nan
    d2: float = math.nan
    lower: float | None = None
    upper: float | None = None
    certified_lower: float | None = None
    b_term: float | None = None
    d_term: float | None = None
    emax_term: float | None = None
    regime: str = ""
    certificates: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def num(v):
            if v is None:
                return None
            v = float(v)
            return None if math.isnan(v) or math.isinf(v) else v

        from .exponents import format_exponent

        return {
            "formula": self.formula,
            "p": format_exponent(self.p),
            "q": format_exponent(self.q),
            "value": num(self.value),
            "d1": num(self.d1),
            "d2": num(self.d2),
            "lower": num(self.lower),
            "upper": num(self.upper),
            "certified_lower": num(self.certified_lower),
            "b_term": num(self.b_term),
            "d_term": num(self.d_term),
            "emax_term": num(self.emax_term),
            "regime": self.regime,
            "certificates": dict(self.certificates),
        }


def _certificates(D: DTerms) -> dict:
    return {"d1": D.certificates[0].kind, "d2": D.certificates[1].kind} if D.certificates else {}


# ---------------------------------------------------------------------------
# lower bounds and conjectured rate


def lower_bound_gaussian(A, p, q, *, model="gaussian", emax: str = "surrogate", trials: int = 400, seed: int = 0, **norm_opts) -> BoundReport:
    """Lower bound pieces for E||A o X||.

    Certified: (c / (2 sqrt 2)) D1 and (c / (2 sqrt 2)) D2 with c = E|X_11|.
    Rate-level: the third term of every regime whose closed conditions hold.
    ``lower`` is the max of all pieces, ``certified_lower`` of the certified ones.
    """
    p, q = canonical(p), canonical(q)
    A = as_matrix(A)
    model = EntryModel.parse(model)
    D = d_terms(A, p, q, **norm_opts)
    c = model.mean_abs()
    certified = c / (2.0 * math.sqrt(2.0)) * max(D.d1, D.d2)
    report = BoundReport(LOWER_GAUSSIAN, p, q, certified, D.d1, D.d2, certificates=_certificates(D))
    emax_kw = {"mode": emax, "model": model, "trials": trials, "seed": seed}
    third = 0.0
    regimes = third_term_regimes(p, q)
    for regime in regimes:
        name, value = _third_piece(A, p, q, regime, emax_kw)
        if name != "none":
            setattr(report, name, value)
        third = max(third, value)
    report.regime = ",".join(regimes)
    report.certified_lower = certified
    report.lower = max(certified, third)
    report.value = report.lower
    return report


def conjectured_rate(A, p, q, *, emax: str = "surrogate", model="gaussian", trials: int = 400, seed: int = 0, **norm_opts) -> float:
    """D1 + D2 + the third term of the primary regime (no constants)."""
    p, q = canonical(p), canonical(q)
    A = as_matrix(A)
    d1, d2 = d_terms(A, p, q, **norm_opts)
    regime = third_term_regimes(p, q)[0]
    _, third = _third_piece(A, p, q, regime, {"mode": emax, "model": model, "trials": trials, "seed": seed})
    return d1 + d2 + third


# ---------------------------------------------------------------------------
# upper bounds with explicit constants


def _main_shape(D: DTerms, p, q, m, n, M, N, c1: float, c2: float, c3: float, c4: float, c5: float, log_floor: bool = False) -> float:
    """log-factor * [(c1 sqrt ln(mn) + c2 sqrt ln M + c3) D1 + (c4 sqrt ln N + c5) D2]."""
    d1, d2 = D.upper_or_value()
    if d1 == 0.0 and d2 == 0.0:
        return 0.0
    if log_floor:
        ln_n, ln_m = max(math.log(n), 1.0), max(math.log(m), 1.0)
    else:
        ln_n, ln_m = _ln_e(n), _ln_e(m)
    factor = _pow(ln_n, _inv(conjugate(p))) * _pow(ln_m, _inv(q))
    first = (c1 * math.sqrt(math.log(m * n)) + c2 * math.sqrt(math.log(M)) + c3) * d1
    second = (c4 * math.sqrt(math.log(N)) + c5) * d2
    return factor * (first + second)


def upper_main_gaussian(A, p, q, M: int | None = None, N: int | None = None, *, sub: tuple[int, int] | None = None, log_floor: bool = False, **norm_opts) -> float:
    """Gaussian upper bound with explicit constants.

    ``A`` is m x n and the bound controls E sup over m x n submatrices of an
    M x N matrix (M >= m, N >= n; defaults M = m, N = n). With ``sub=(m, n)``
    ``A`` itself is the M x N matrix and D1, D2 are the suprema over its
    m x n submatrices. ``log_floor=True`` replaces ln(en), ln(em) by
    max(ln n, 1), max(ln m, 1).
    """
    A = as_matrix(A)
    p, q = canonical(p), canonical(q)
    if sub is None:
        m, n = A.shape
        M = m if M is None else int(M)
        N = n if N is None else int(N)
        if M < m or N < n:
            raise ValueError(f"ambient sizes ({M}, {N}) must dominate the shape {A.shape}")
        D = d_terms(A, p, q, **norm_opts)
    else:
        m, n = sub
        M, N = A.shape
        D = d_terms(A, p, q, sub=sub, **norm_opts)
    return _main_shape(D, p, q, m, n, M, N, 2.4, 8.0, SQRT_2_OVER_PI, 8.0, 2.0 * SQRT_2_OVER_PI, log_floor)


def upper_main_gaussian_log_floor(A, p, q, **norm_opts) -> float:
    """Same constants, logarithms ln n, ln m floored at 1."""
    return upper_main_gaussian(A, p, q, log_floor=True, **norm_opts)


def upper_bounded_main(A, p, q, **norm_opts) -> float:
    """Upper bound for mean-zero entries bounded by 1 (M = m, N = n)."""
    A = as_matrix(A)
    p, q = canonical(p), canonical(q)
    m, n = A.shape
    D = d_terms(A, p, q, **norm_opts)
    return _main_shape(D, p, q, m, n, m, n, 2.4 * SQRT_2PI, 8.0 * SQRT_2PI, 2.0, 8.0 * SQRT_2PI, 4.0)


def upper_gauss_p_le2(A, p, q, **norm_opts) -> float:
    """gamma_q ln(en)^{1/p*} D1 + 2.2 ln(en)^{1/2 + 1/p*} D2 for 1 <= p <= 2, q < inf."""
    p, q = canonical(p), canonical(q)
    if not (p <= 2.0 and math.isfinite(q)):
        raise RegimeError(GAUSS_P_LE2, "1 <= p <= 2 and 1 <= q < inf", p, q)
    A = as_matrix(A)
    n = A.shape[1]
    d1, d2 = d_terms(A, p, q, **norm_opts).upper_or_value()
    a = _inv(conjugate(p))
    return gaussian_moment(q) * _pow(_ln_e(n), a) * d1 + 2.2 * _ln_e(n) ** (0.5 + a) * d2


def bounded_constant(q) -> float:
    """C(q) = 2 (q Gamma(q/2))^{1/q}."""
    q = canonical(q)
    if math.isinf(q):
        raise RegimeError(BOUNDED_P2Q, "q < inf")
    return 2.0 * math.exp((math.log(q) + gammaln(q / 2.0)) / q)


def upper_bdd_p2q(A, p, q, **norm_opts) -> float:
    """C(q) ln(en)^{1/p*} D1 + 10^{1/q} ln(en)^{1/q + 1/p*} D2 for 1 <= p <= 2 <= q < inf."""
    p, q = canonical(p), canonical(q)
    if not (p <= 2.0 <= q and math.isfinite(q)):
        raise RegimeError(BOUNDED_P2Q, "1 <= p <= 2 <= q < inf", p, q)
    A = as_matrix(A)
    n = A.shape[1]
    d1, d2 = d_terms(A, p, q, **norm_opts).upper_or_value()
    a = _inv(conjugate(p))
    return bounded_constant(q) * _pow(_ln_e(n), a) * d1 + 10.0 ** (1.0 / q) * _ln_e(n) ** (1.0 / q + a) * d2


def boundary_two_sided(A, p, q, **norm_opts) -> tuple[float, float]:
    """(lower_rate, upper_rate) on the boundary of the exponent square.

    q = 1 < p: (D1 + D2, gamma_1 D1 + 2 gamma_{p*} D2).
    p = 1, q <= 2: both equal max_j ||col_j||_q + b-term.
    p >= 2, q = inf: both equal max_i ||row_i||_{p*} + d-term.
    p = inf, 1 < q < inf: the q = 1 ... cases by duality through the transpose.
    """
    p, q = canonical(p), canonical(q)
    A = as_matrix(A)
    if p == 1.0 and q <= 2.0:
        cols = float(np.max(vector_norm(A, q, axis=0)))
        rate = cols + rearranged_log_term(A, "b", q)[1]
        return rate, rate
    if math.isinf(q) and p >= 2.0:
        rows = float(np.max(vector_norm(A, conjugate(p), axis=1)))
        rate = rows + rearranged_log_term(A, "d", p)[1]
        return rate, rate
    if q == 1.0 and p > 1.0:
        D = d_terms(A, p, q, **norm_opts)
        d1u, d2u = D.upper_or_value()
        return D.d1 + D.d2, gaussian_moment(1) * d1u + 2.0 * gaussian_moment(conjugate(p)) * d2u
    if math.isinf(p) and q > 1.0:
        return boundary_two_sided(A.T, conjugate(q), 1.0, **norm_opts)
    raise RegimeError(BOUNDARY, "q = 1 < p, or p = 1 with q <= 2, or p >= 2 with q = inf, or p = inf", p, q)


# ---------------------------------------------------------------------------
# psi_r rates (constants exist but are unknown: ``calibration`` scales them)


def upper_psi(A, p, q, r: float, K: float = 1.0, L: float = 1.0, variant: str = "main", *, calibration: float = 1.0, **norm_opts) -> float:
    """Growth rate of E||A o X|| for psi_r entries, times ``calibration``."""
    p, q = canonical(p), canonical(q)
    if not 0.0 < r <= 2.0:
        raise ValueError(f"r must lie in (0, 2], got {r}")
    if K < 1.0 or L <= 0.0:
        raise ValueError("psi_r rates need K >= 1 and L > 0")
    A = as_matrix(A)
    m, n = A.shape
    a = _inv(conjugate(p))
    ln_n, ln_m, ln_mn = math.log(n), math.log(m), math.log(m * n)
    if variant == "main":
        d1, d2 = d_terms(A, p, q, **norm_opts).upper_or_value()
        factor = _pow(ln_n, a) * _pow(ln_m, _inv(q)) * _pow(ln_mn, 1.0 / r - 0.5)
        return calibration * factor * (math.sqrt(ln_mn) * d1 + math.sqrt(ln_n) * d2)
    if variant == "p_le2_cutoff":
        if not (p <= 2.0 and math.isfinite(q)):
            raise RegimeError(PSI_CUTOFF, "1 <= p <= 2 and q < inf", p, q)
        d1, d2 = d_terms(A, p, q, **norm_opts).upper_or_value()
        return calibration * (q ** (1.0 / r) * _pow(ln_n, a) * d1 + _pow(ln_n, 0.5 + a) * _pow(ln_mn, 1.0 / r) * d2)
    if variant == "p_le2_coupled":
        if not p <= 2.0:
            raise RegimeError(PSI_COUPLED, "1 <= p <= 2", p, q)
        d1, d2 = d_terms(A, p, q, **norm_opts).upper_or_value()
        tail = _pow(ln_mn, 1.0 / r - 0.5)
        return calibration * (_pow(ln_n, a) * tail * d1 + _pow(ln_n, 0.5 + a) * tail * d2)
    raise ValueError("variant must be 'main', 'p_le2_cutoff' or 'p_le2_coupled'")


# ---------------------------------------------------------------------------
# classical comparison rates


def classical_rates(which: str, p=2.0, q=2.0, *, A=None, shape: tuple[int, int] | None = None, model="gaussian", trials: int = 200, seed: int = 0) -> float:
    """Earlier bounds, evaluated as rates (their constants are not tracked).

    ``bgn``/``bgn_extended`` need only ``shape``; the others need ``A``.
    Expectation terms are Monte Carlo estimates with the given seed.
    """
    p, q = canonical(p), canonical(q)
    if which in ("bgn", "bgn_extended"):
        if shape is None:
            if A is None:
                raise ValueError(f"{which} needs a shape or a matrix")
            shape = as_matrix(A).shape
        m, n = shape
        if which == "bgn":
            if p != 2.0 or q < 2.0:
                raise RegimeError("bgn", "p = 2 <= q", p, q)
            return max(n**0.5, m ** _inv(q))
        return _bgn_extended(m, n, p, q)
    if A is None:
        raise ValueError(f"{which} needs the coefficient matrix")
    A = as_matrix(A)
    model = EntryModel.parse(model)
    if which == "seginer":
        if p != 2.0 or q != 2.0:
            raise RegimeError("seginer", "p = q = 2", p, q)
        cols, _, rows, _ = row_col_maxima(A, model, 2.0, 2.0, trials, seed)
        return cols + rows
    if which == "latala":
        if p != 2.0 or q != 2.0:
            raise RegimeError("latala", "p = q = 2", p, q)
        S = hadamard_square(A)
        second, fourth = model.abs_moment(2.0), model.abs_moment(4.0)
        cols = math.sqrt(second * S.sum(axis=0).max())
        rows = math.sqrt(second * S.sum(axis=1).max())
        return cols + rows + (fourth * float((S * S).sum())) ** 0.25
    emax = empirical_emax(A, GAUSSIAN_MODEL, trials, seed)[0]
    if which == "lvhy":
        if p != 2.0 or q != 2.0:
            raise RegimeError("lvhy", "p = q = 2", p, q)
        return float(np.max(vector_norm(A, 2.0, axis=0)) + np.max(vector_norm(A, 2.0, axis=1))) + emax
    if which == "ghlp":
        if not (1.0 < p <= 2.0 <= q and math.isfinite(q)):
            raise RegimeError("ghlp", "1 < p <= 2 <= q < inf", p, q)
        m = A.shape[0]
        pstar = conjugate(p)
        factor = pstar ** (5.0 / q) * math.log(m) ** (1.0 / q)
        cols = float(np.max(vector_norm(A, q, axis=0)))
        rows = float(np.max(vector_norm(A, pstar, axis=1)))
        g_pstar = 1.0 if math.isinf(pstar) else gaussian_moment(pstar)
        return gaussian_moment(q) * cols + factor * g_pstar * rows + factor * gaussian_moment(q) * emax
    if which == "matlak":
        if not (p == 1.0 and 2.0 <= q < INF):
            raise RegimeError("matlak", "p = 1 and 2 <= q < inf", p, q)
        return math.sqrt(q) * float(np.max(vector_norm(A, q, axis=0))) + emax
    raise ValueError(f"unknown classical rate {which!r}; expected one of {CLASSICAL}")


GAUSSIAN_MODEL = EntryModel("gaussian")


def _bgn_extended(m: int, n: int, p: float, q: float) -> float:
    """Order of E||X : l_p^n -> l_q^m|| for bounded mean-zero unstructured X."""
    ip, iq = _inv(p), _inv(q)
    if p >= 2.0 and q >= 2.0:
        return max(n ** (1.0 - ip), n ** (0.5 - ip) * m**iq)
    if p >= 2.0 and q <= 2.0:
        return max(n ** (1.0 - ip) * m ** (iq - 0.5), n ** (0.5 - ip) * m**iq)
    if p <= 2.0 <= q and q >= conjugate(p):
        return max(n ** _inv(conjugate(p)), m**iq)
    # remaining ranges by duality (p, q, m, n) -> (q*, p*, n, m)
    return _bgn_extended(n, m, conjugate(q), conjugate(p))


# ---------------------------------------------------------------------------
# registry used by the command line


def evaluate(formula: str, A, p, q, *, model="gaussian", emax: str = "surrogate", trials: int = 400, seed: int = 0, r: float = 2.0, K: float = 1.0, L: float = 1.0, calibration: float = 1.0) -> BoundReport:
    """Evaluate one formula by label and wrap it in a report."""
    p, q = canonical(p), canonical(q)
    A = as_matrix(A)
    if formula == LOWER_GAUSSIAN:
        return lower_bound_gaussian(A, p, q, model=model, emax=emax, trials=trials, seed=seed)
    D = d_terms(A, p, q)
    report = BoundReport(formula, p, q, math.nan, D.d1, D.d2, certificates=_certificates(D))
    uppers = {
        MAIN_GAUSSIAN: lambda: upper_main_gaussian(A, p, q),
        MAIN_GAUSSIAN_LOG_FLOOR: lambda: upper_main_gaussian_log_floor(A, p, q),
        GAUSS_P_LE2: lambda: upper_gauss_p_le2(A, p, q),
        MAIN_BOUNDED: lambda: upper_bounded_main(A, p, q),
        BOUNDED_P2Q: lambda: upper_bdd_p2q(A, p, q),
        PSI_MAIN: lambda: upper_psi(A, p, q, r, K, L, "main", calibration=calibration),
        PSI_CUTOFF: lambda: upper_psi(A, p, q, r, K, L, "p_le2_cutoff", calibration=calibration),
        PSI_COUPLED: lambda: upper_psi(A, p, q, r, K, L, "p_le2_coupled", calibration=calibration),
    }
    if formula in uppers:
        report.value = report.upper = uppers[formula]()
        return report
    if formula == BOUNDARY:
        low, up = boundary_two_sided(A, p, q)
        report.lower, report.upper, report.value = low, up, up
        return report
    if formula == CONJECTURED:
        report.value = conjectured_rate(A, p, q, emax=emax, model=model, trials=trials, seed=seed)
        report.regime = third_term_regimes(p, q)[0]
        return report
    if formula in CLASSICAL:
        report.value = classical_rates(formula, p, q, A=A, model=model, trials=trials, seed=seed)
        return report
    raise ValueError(f"unknown formula {formula!r}; expected one of {sorted(FORMULAS)}")


FORMULAS = (
    MAIN_GAUSSIAN,
    MAIN_GAUSSIAN_LOG_FLOOR,
    GAUSS_P_LE2,
    MAIN_BOUNDED,
    BOUNDED_P2Q,
    PSI_MAIN,
    PSI_CUTOFF,
    PSI_COUPLED,
    BOUNDARY,
    LOWER_GAUSSIAN,
    CONJECTURED,
) + CLASSICAL
