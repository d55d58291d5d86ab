"""Operator norms of structured random matrices between l_p spaces.

Submodules: ``exponents`` (exponent arithmetic), ``lpq_norm`` (the norm
engine), ``sampling`` (entry models and couplings), ``bounds`` (bound
formulas), ``experiments`` (Monte Carlo drivers) and ``cli``.
"""
from .bounds import (
    BoundReport,
    RegimeError,
    boundary_two_sided,
    classical_rates,
    conjectured_rate,
    d1_d2,
    d_terms,
    lower_bound_gaussian,
    rearranged_log_term,
    upper_bdd_p2q,
    upper_bounded_main,
    upper_gauss_p_le2,
    upper_main_gaussian,
    upper_psi,
)
from .experiments import (
    McEstimate,
    ScenarioSpec,
    counterexample_growth,
    mc_norm_estimate,
    pq_grid,
    rowcol_max_rate,
    sandwich_sweep,
    scenario_matrix,
    tail_experiment,
)
from .exponents import INF, ExponentDomainError, canonical, conjugate, derived_exponent, gaussian_moment
from .lpq_norm import NormResult, brute_force_oracle, k_gauge_dual, op_norm, vector_norm
from .sampling import (
    EntryModel,
    coupled_psi_pair,
    emax_column_surrogate,
    empirical_emax,
    sample_matrix,
    structured_realization,
)

__all__ = [name for name in dir() if not name.startswith("_")]
