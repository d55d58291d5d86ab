import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from normlab.bounds import (
    FORMULAS,
    RegimeError,
    boundary_two_sided,
    bounded_constant,
    classical_rates,
    conjectured_rate,
    d1_d2,
    d_terms,
    evaluate,
    lower_bound_gaussian,
    rearranged_log_term,
    third_term_regimes,
    upper_bdd_p2q,
    upper_bounded_main,
    upper_gauss_p_le2,
    upper_main_gaussian,
    upper_main_gaussian_log_floor,
    upper_psi,
)
from normlab.exponents import INF
from normlab.experiments import scenario_matrix
from normlab.sampling import empirical_emax

SQ = math.sqrt(2 / math.pi)


def uniform(m, n, seed):
    return np.random.default_rng(seed).random((m, n))


# --- D1, D2 and rearranged terms -------------------------------------------------


def test_d_terms_examples():
    assert d1_d2(np.eye(6), 1, 2) == pytest.approx((1.0, 1.0))
    m, n = 3, 5
    assert d1_d2(np.ones((m, n)), 1, 2) == pytest.approx((math.sqrt(m), 1.0))


@pytest.mark.parametrize("p", [1.0, 1.25, 1.5, 1.8])
def test_d_terms_block_matrix(p):
    k, N = 4, 3
    A = scenario_matrix({"kind": "block_ones", "k": k, "N": N})
    d1, d2 = d1_d2(A, p, p)
    pstar = INF if p == 1 else p / (p - 1)
    inv_star = 0.0 if math.isinf(pstar) else 1 / pstar
    assert d1 == pytest.approx(k ** (1 / p), rel=1e-9)
    assert d2 == pytest.approx(k ** (inv_star + 0.5 - inv_star), rel=1e-6)


def test_d_terms_equal_row_column_maxima_when_p_le_2_le_q():
    A = np.random.default_rng(3).standard_normal((7, 5))
    for p, q in [(1, 2), (1.5, 3), (2, 2), (1.2, INF)]:
        D = d_terms(A, p, q)
        assert D.kind == "Exact"
        pstar = INF if p == 1 else p / (p - 1)
        cols = np.max(np.linalg.norm(A, ord=q, axis=0)) if not math.isinf(q) else np.abs(A).max()
        rows = np.max(np.abs(A).max(axis=1)) if math.isinf(pstar) else np.max(np.sum(np.abs(A) ** pstar, axis=1) ** (1 / pstar))
        assert D.d1 == pytest.approx(cols, rel=1e-10)
        assert D.d2 == pytest.approx(rows, rel=1e-10)


def test_rearranged_log_term_examples():
    n = 9
    terms, value = rearranged_log_term(np.eye(n), "b", 1)
    assert np.all(terms == 1.0) and value == pytest.approx(math.sqrt(math.log(n + 1)))
    terms, value = rearranged_log_term(np.diag([2.0, 1.0]), "b", 1)
    assert list(terms) == [2.0, 1.0] and value == pytest.approx(2 * math.sqrt(math.log(2)))
    A = np.random.default_rng(1).standard_normal((4, 3))
    terms, _ = rearranged_log_term(A, "b", 1)
    assert terms == pytest.approx(np.sort(np.linalg.norm(A, axis=0))[::-1])
    terms, _ = rearranged_log_term(A, "d", INF)
    assert terms == pytest.approx(np.sort(np.linalg.norm(A, axis=1))[::-1])
    with pytest.raises(ValueError):
        rearranged_log_term(A, "b", 3)
    with pytest.raises(ValueError):
        rearranged_log_term(A, "d", 1.5)


# --- lower bounds and conjectured rate --------------------------------------------


def test_lower_bound_single_entry():
    rep = lower_bound_gaussian([[1.0]], 2, 2)
    assert rep.lower == pytest.approx(math.sqrt(math.log(2)))
    assert rep.certified_lower == pytest.approx(SQ / (2 * math.sqrt(2)))
    assert rep.certified_lower == pytest.approx(0.28209479177387814)


def test_lower_bound_zero_and_identity():
    assert lower_bound_gaussian(np.zeros((3, 3)), 1.5, 3).lower == 0.0
    n = 12
    rep = lower_bound_gaussian(np.eye(n), 1, 1)
    assert rep.b_term == pytest.approx(math.sqrt(math.log(n + 1)))
    assert rep.lower >= math.sqrt(math.log(n + 1))


def test_lower_bound_uses_model_mean_abs():
    A = uniform(4, 4, 2)
    g = lower_bound_gaussian(A, 2, 2, model="gaussian").certified_lower
    r = lower_bound_gaussian(A, 2, 2, model="rademacher").certified_lower
    assert r / g == pytest.approx(1 / SQ)


def test_third_term_regimes():
    assert third_term_regimes(1, 2) == ["p<=2<=q", "p<=q<=2"]
    assert third_term_regimes(2, 2) == ["p<=2<=q", "p<=q<=2", "2<=p<=q"]
    assert third_term_regimes(3, 1.5) == ["q<p"]
    assert third_term_regimes(3, INF) == ["2<=p<=q"]


def test_conjectured_rate_examples():
    A = uniform(5, 6, 4)
    d1, d2 = d1_d2(A, 3, 1.5)
    assert conjectured_rate(A, 3, 1.5) == pytest.approx(d1 + d2)
    assert conjectured_rate(np.zeros((2, 2)), 1, 2) == 0.0
    n = 200
    mc = conjectured_rate(np.eye(n), 1, 2, emax="monte_carlo", trials=400, seed=1)
    expected = 2 + empirical_emax(np.eye(n), "gaussian", 400, 1)[0]
    assert mc == pytest.approx(expected)
    assert abs(mc - (2 + math.sqrt(2 * math.log(n)))) < 0.6


def test_regime_continuity_near_p_equal_two():
    for seed in range(20):
        A = uniform(6, 5, 100 + seed)
        a = conjectured_rate(A, 2 - 1e-3, 2)
        b = conjectured_rate(A, 2, 2)
        assert 0.25 <= a / b <= 4.0


def test_redundancy_of_b_term_below_diagonal():
    ratios = []
    for n in (10, 100, 1000):
        A = uniform(n, n, n)
        d2 = d1_d2(A, 2, 1.5)[1]
        ratios.append(rearranged_log_term(A, "b", 1.5)[1] / d2)
    assert max(ratios) <= 2.0


# --- explicit upper bounds ------------------------------------------------------------


def test_main_gaussian_single_entry():
    for a in (1.0, -2.5):
        assert upper_main_gaussian([[a]], 2, 2, 1, 1) == pytest.approx(3 * SQ * abs(a))
    assert upper_main_gaussian(np.zeros((3, 4)), 1, 2) == 0.0


def test_main_gaussian_identity_plugin():
    L = 1 + math.log(2)
    expected = L**0.5 * L**0.5 * (
        (2.4 * math.sqrt(math.log(4)) + 8 * math.sqrt(math.log(2)) + SQ) + (8 * math.sqrt(math.log(2)) + 2 * SQ)
    )
    assert upper_main_gaussian(np.eye(2), 2, 2) == pytest.approx(expected, rel=1e-14)
    L8 = 1 + math.log(8)
    expected8 = L8 * ((2.4 * math.sqrt(math.log(64)) + 8 * math.sqrt(math.log(8)) + SQ) + 8 * math.sqrt(math.log(8)) + 2 * SQ)
    assert upper_main_gaussian(np.eye(8), 2, 2) == pytest.approx(expected8, rel=1e-14)


def test_main_gaussian_ambient_sizes():
    A = uniform(3, 3, 5)
    base = upper_main_gaussian(A, 1, 2)
    bigger = upper_main_gaussian(A, 1, 2, M=50, N=60)
    assert bigger > base
    with pytest.raises(ValueError):
        upper_main_gaussian(A, 1, 2, M=2)
    B = uniform(5, 4, 6)
    sub = upper_main_gaussian(B, 1, 2, sub=(2, 2))
    assert sub > 0


def test_log_floor_alias():
    A = uniform(1, 1, 7)
    assert upper_main_gaussian_log_floor(A, 2, 2) == pytest.approx(3 * SQ * A[0, 0])
    B = uniform(20, 20, 8)
    assert upper_main_gaussian_log_floor(B, 2, 2) < upper_main_gaussian(B, 2, 2)


def test_gauss_p_le2():
    assert upper_gauss_p_le2([[1.0]], 1, 2) == pytest.approx(3.2)
    assert upper_gauss_p_le2(np.zeros((2, 3)), 1.5, 3) == 0.0
    n = 10
    L = 1 + math.log(n)
    assert upper_gauss_p_le2(np.eye(n), 2, 2) == pytest.approx(L**0.5 + 2.2 * L)
    with pytest.raises(RegimeError):
        upper_gauss_p_le2(np.eye(2), 3, 2)
    with pytest.raises(RegimeError):
        upper_gauss_p_le2(np.eye(2), 1.5, INF)


def test_bounded_main():
    assert upper_bounded_main([[1.0]], 2, 2) == pytest.approx(6.0)
    assert upper_bounded_main(np.zeros((2, 2)), 2, 2) == 0.0
    for seed in range(20):
        A = np.random.default_rng(seed).standard_normal((5, 4))
        ratio = upper_bounded_main(A, 1, 2) / upper_main_gaussian(A, 1, 2)
        assert 1.0 <= ratio <= math.sqrt(2 * math.pi) + 1e-9


def test_bounded_p2q():
    assert bounded_constant(2) == pytest.approx(2 * math.sqrt(2))
    assert upper_bdd_p2q(np.zeros((2, 2)), 1, 2) == 0.0
    n = 7
    L = 1 + math.log(n)
    assert upper_bdd_p2q(np.eye(n), 2, 2) == pytest.approx(2 * math.sqrt(2) * L**0.5 + math.sqrt(10) * L)
    with pytest.raises(RegimeError):
        upper_bdd_p2q(np.eye(2), 2, 1.5)


def test_psi_rates():
    A = uniform(6, 5, 9)
    m, n = A.shape
    d1, d2 = d1_d2(A, 1.5, 3)
    plain = math.log(n) ** (1 / 3) * math.log(m) ** (1 / 3) * (math.sqrt(math.log(m * n)) * d1 + math.sqrt(math.log(n)) * d2)
    assert upper_psi(A, 1.5, 3, r=2.0) == pytest.approx(plain)
    assert upper_psi(A, 1.5, 3, r=2.0, calibration=3.0) == pytest.approx(3 * plain)
    assert upper_psi(np.zeros((3, 3)), 1, 2, r=1.0) == 0.0
    n = 55
    ln = math.log(n)
    expected = ln**0.5 * math.sqrt(2 * ln) * (math.sqrt(2 * ln) + math.sqrt(ln))
    assert upper_psi(np.eye(n), 1, 2, r=1.0) == pytest.approx(expected)
    cutoff = 3 ** (1 / 1.0) * ln ** (1 / 3) * 1 + ln ** (0.5 + 1 / 3) * (2 * ln) * 1
    assert upper_psi(np.eye(n), 1.5, 3, r=1.0, variant="p_le2_cutoff") == pytest.approx(cutoff)
    coupled = (ln ** (1 / 3) + ln ** (0.5 + 1 / 3)) * (2 * ln) ** 0.5
    assert upper_psi(np.eye(n), 1.5, 3, r=1.0, variant="p_le2_coupled") == pytest.approx(coupled)
    with pytest.raises(RegimeError):
        upper_psi(np.eye(3), 3, 3, r=1.0, variant="p_le2_coupled")
    with pytest.raises(RegimeError):
        upper_psi(np.eye(3), 1.5, INF, r=1.0, variant="p_le2_cutoff")


def test_boundary_two_sided():
    n = 30
    rate = 1 + math.sqrt(math.log(n + 1))
    assert boundary_two_sided(np.eye(n), 1, 2) == pytest.approx((rate, rate))
    assert boundary_two_sided(np.eye(n), 2, INF) == pytest.approx((rate, rate))
    w = np.diag([3.0, 1.0, 1.0])
    low, up = boundary_two_sided(w, 1, 1)
    assert low == up == pytest.approx(3 + 3 * math.sqrt(math.log(2)))
    A = uniform(5, 4, 10)
    low, up = boundary_two_sided(A, 3, 1)
    d1, d2 = d1_d2(A, 3, 1)
    assert low == pytest.approx(d1 + d2)
    gamma_15 = (2**0.75 * math.gamma(1.25) / math.sqrt(math.pi)) ** (1 / 1.5)
    assert up == pytest.approx(SQ * d1 + 2 * gamma_15 * d2)
    low_dual, _ = boundary_two_sided(A.T, INF, 1.5)
    assert low_dual == pytest.approx(low)
    with pytest.raises(RegimeError):
        boundary_two_sided(A, 1.5, 3)


# --- classical rates ------------------------------------------------------------------


def test_classical_examples():
    assert classical_rates("bgn", 2, 2, shape=(16, 4)) == 4.0
    n = 11
    assert classical_rates("latala", 2, 2, A=np.eye(n)) == pytest.approx(2 + (3 * n) ** 0.25)
    lvhy = classical_rates("lvhy", 2, 2, A=np.eye(200), trials=300, seed=3)
    assert lvhy == pytest.approx(2 + empirical_emax(np.eye(200), "gaussian", 300, 3)[0])
    with pytest.raises(RegimeError):
        classical_rates("ghlp", 1, 2, A=np.eye(3))
    with pytest.raises(RegimeError):
        classical_rates("matlak", 1.5, 2, A=np.eye(3))


@pytest.mark.parametrize("p,q", [(1, 1), (1, 1.5), (1.5, 1.5), (2, 1), (3, 1.5), (4, 4), (1.5, 3), (INF, 2), (INF, INF)])
def test_bgn_extended_duality(p, q):
    from normlab.exponents import conjugate

    m, n = 40, 9
    assert classical_rates("bgn_extended", p, q, shape=(m, n)) == pytest.approx(
        classical_rates("bgn_extended", conjugate(q), conjugate(p), shape=(n, m))
    )


def test_bgn_extended_matches_bgn_at_p2():
    for q in (2, 3, 8):
        assert classical_rates("bgn_extended", 2, q, shape=(30, 7)) == pytest.approx(classical_rates("bgn", 2, q, shape=(30, 7)))


# --- structural properties ------------------------------------------------------------


SCALE_FORMULAS = [
    lambda A: upper_main_gaussian(A, 1, 2),
    lambda A: upper_bounded_main(A, 2, 2),
    lambda A: upper_gauss_p_le2(A, 1.5, 3),
    lambda A: upper_bdd_p2q(A, 1.5, 3),
    lambda A: upper_psi(A, 1, INF, r=1.0),
    lambda A: lower_bound_gaussian(A, 1, 1.5).lower,
    lambda A: conjectured_rate(A, 2, 4),
    lambda A: boundary_two_sided(A, 1, 1.5)[1],
]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(-20, 20, allow_nan=False).filter(lambda c: abs(c) > 1e-3))
def test_scale_equivariance(seed, c):
    A = np.random.default_rng(seed).standard_normal((4, 5))
    for f in SCALE_FORMULAS:
        assert f(c * A) == pytest.approx(abs(c) * f(A), rel=1e-12)


def test_evaluate_registry():
    A = np.eye(8)
    for name in FORMULAS:
        try:
            rep = evaluate(name, A, 2, 2, trials=50)
        except RegimeError:
            continue
        assert rep.formula == name
        d = rep.to_dict()
        assert d["formula"] == name and d["d1"] == pytest.approx(1.0)
    assert evaluate("main_gaussian", A, 2, 2).value == pytest.approx(upper_main_gaussian(A, 2, 2))
    with pytest.raises(ValueError):
        evaluate("nope", A, 2, 2)
