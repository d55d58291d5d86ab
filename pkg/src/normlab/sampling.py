"""Entry models, structured realisations X_A = A o X, and the psi_r coupling.

Every sampler draws open-interval uniforms and pushes them through an
inverse CDF, so all models (and the coupling) share one mechanism. Random
streams come from ``numpy.random.SeedSequence([seed, index])``; trial ``t``
of a Monte Carlo run always sees the same stream regardless of scheduling.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import gamma, gammaln, ndtr, ndtri

from .lpq_norm import as_matrix, nonincreasing_rearrangement, vector_norm

GAUSSIAN = "gaussian"
RADEMACHER = "rademacher"
BOUNDED_UNIFORM = "bounded_uniform"
WEIBULL = "weibull_psi_r"
MODEL_KINDS = (GAUSSIAN, RADEMACHER, BOUNDED_UNIFORM, WEIBULL)

_ALIASES = {
    "gauss": GAUSSIAN,
    "normal": GAUSSIAN,
    "gaussian": GAUSSIAN,
    "rademacher": RADEMACHER,
    "sign": RADEMACHER,
    "uniform": BOUNDED_UNIFORM,
    "bounded": BOUNDED_UNIFORM,
    "bounded_uniform": BOUNDED_UNIFORM,
    "weibull": WEIBULL,
    "weibull_psi_r": WEIBULL,
    "psi_r": WEIBULL,
}

# c = sqrt(2/pi) e^{-2}: the constant in P(|g| Y >= t) >= c e^{-4 t^r}
COUPLING_C = math.sqrt(2.0 / math.pi) * math.exp(-2.0)

_U53 = 2.0**-53


@dataclass(frozen=True)
class EntryModel:
    """Law of the entries X_ij.

    For ``weibull_psi_r`` the sampled law is P(|Z| >= t) = exp(-t^r / L) with a
    uniform random sign; ``K`` only enters the bound formulas (K = 1 is
    the exact law sampled here).
    """

    kind: str = GAUSSIAN
    r: float = 2.0
    K: float = 1.0
    L: float = 1.0

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise ValueError(f"unknown entry model {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == WEIBULL:
            if not 0.0 < self.r <= 2.0:
                raise ValueError(f"psi_r shape must lie in (0, 2], got {self.r}")
            if self.K < 1.0 or self.L <= 0.0:
                raise ValueError("psi_r model needs K >= 1 and L > 0")

    @classmethod
    def parse(cls, spec) -> "EntryModel":
        """Build from a model, a dict, a JSON object string or a shorthand name."""
        if isinstance(spec, EntryModel):
            return spec
        if isinstance(spec, dict):
            return cls(**{k: v for k, v in spec.items() if k in ("kind", "r", "K", "L")})
        text = str(spec).strip()
        if text.startswith("{"):
            return cls.parse(json.loads(text))
        return cls(kind=text)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == WEIBULL:
            out.update(r=float(self.r), K=float(self.K), L=float(self.L))
        return out

    def mean_abs(self) -> float:
        """E|X_ij|."""
        if self.kind == GAUSSIAN:
            return math.sqrt(2.0 / math.pi)
        if self.kind == RADEMACHER:
            return 1.0
        if self.kind == BOUNDED_UNIFORM:
            return 0.5
        return self.L ** (1.0 / self.r) * gamma(1.0 / self.r + 1.0)

    def abs_moment(self, rho: float) -> float:
        """E|X_ij|^rho."""
        if self.kind == GAUSSIAN:
            return math.exp(0.5 * rho * math.log(2.0) + gammaln(0.5 * (rho + 1.0)) - 0.5 * math.log(math.pi))
        if self.kind == RADEMACHER:
            return 1.0
        if self.kind == BOUNDED_UNIFORM:
            return 1.0 / (rho + 1.0)
        return self.L ** (rho / self.r) * gamma(rho / self.r + 1.0)


def rng_for(seed: int, *index: int) -> np.random.Generator:
    """Independent stream for (seed, index...); identical inputs give identical streams."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.default_rng(np.random.SeedSequence([seed, *map(int, index)]))


def open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1), on the grid (k + 1/2) 2^-53."""
    return (rng.integers(0, 2**53, size=size, dtype=np.int64) + 0.5) * _U53


def draw_entries(model: EntryModel, size, rng: np.random.Generator) -> np.ndarray:
    model = EntryModel.parse(model)
    u = open_uniform(rng, size)
    if model.kind == GAUSSIAN:
        return ndtri(u)
    if model.kind == RADEMACHER:
        return np.where(u < 0.5, -1.0, 1.0)
    if model.kind == BOUNDED_UNIFORM:
        return 2.0 * u - 1.0
    magnitude = (model.L * -np.log(u)) ** (1.0 / model.r)
    sign = np.where(open_uniform(rng, size) < 0.5, -1.0, 1.0)
    return sign * magnitude


def sample_matrix(model, m: int, n: int, seed: int, *index: int) -> np.ndarray:
    """An m x n matrix of i.i.d. entries; deterministic in (model, shape, seed, index)."""
    if m < 1 or n < 1:
        raise ValueError("matrix dimensions must be positive")
    return draw_entries(EntryModel.parse(model), (m, n), rng_for(seed, *index))


def structured_realization(A, model, seed: int, *index: int) -> np.ndarray:
    """A o X for a fresh sample X of the entry model."""
    A = as_matrix(A)
    return A * sample_matrix(model, A.shape[0], A.shape[1], seed, *index)


# ---------------------------------------------------------------------------
# coupling of a psi_r variable with |g| * Weibull


def product_weibull_shape(r: float) -> float:
    """s with 1/s = 1/r - 1/2 (inf when r = 2)."""
    if not 0.0 < r <= 2.0:
        raise ValueError(f"r must lie in (0, 2], got {r}")
    inv = 1.0 / r - 0.5
    return math.inf if inv <= 0.0 else 1.0 / inv


def weibull_factor(s: float, size, rng: np.random.Generator) -> np.ndarray:
    """Y >= 0 with P(Y >= t) = exp(-t^s); identically 1 when s = inf."""
    if math.isinf(s):
        return np.ones(size)
    return (-np.log(open_uniform(rng, size))) ** (1.0 / s)


def _log_product_survival(t: float, s: float) -> float:
    """log P(|g| Y >= t) = log sqrt(2/pi) int_0^inf exp(-(t/x)^s - x^2/2) dx."""
    if t <= 0.0:
        return 0.0
    # exponent h(x) = (t/x)^s + x^2/2 is minimised at x*^(s+2) = s t^s
    x_star = (s * t**s) ** (1.0 / (s + 2.0))
    h_star = (t / x_star) ** s + 0.5 * x_star**2

    def integrand(x):
        if x <= 0.0:
            return 0.0
        return math.exp(-((t / x) ** s + 0.5 * x * x - h_star))

    width = max(1.0, x_star)
    left, _ = integrate.quad(integrand, 0.0, x_star, limit=200, epsabs=0.0, epsrel=1e-12)
    right, _ = integrate.quad(integrand, x_star, x_star + 40.0 * width, limit=200, epsabs=0.0, epsrel=1e-12)
    return 0.5 * math.log(2.0 / math.pi) - h_star + math.log(left + right)


@lru_cache(maxsize=16)
def _product_quantile_table(s: float, points: int = 4000):
    """Tabulated (t, log survival) of |g| Y for inverse-CDF sampling."""
    # survival must reach below 2^-54 (the smallest open-uniform tail mass)
    target = math.log(2.0**-56)
    t_hi = 1.0
    while _log_product_survival(t_hi, s) > target:
        t_hi *= 1.5
    t = np.concatenate([[0.0], np.geomspace(1e-8, t_hi, points)])
    logs = np.array([_log_product_survival(v, s) for v in t])
    logs = np.minimum.accumulate(logs)
    return t, logs


def product_survival(t, r: float) -> np.ndarray:
    """P(|g| Y >= t) for the Weibull shape matched to r."""
    s = product_weibull_shape(r)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if math.isinf(s):
        return 2.0 * (1.0 - ndtr(t))
    return np.exp([_log_product_survival(float(v), s) for v in t])


def product_quantile(w, r: float) -> np.ndarray:
    """Generalised inverse CDF of |g| Y evaluated at w in (0, 1)."""
    s = product_weibull_shape(r)
    w = np.asarray(w, dtype=float)
    if math.isinf(s):
        return ndtri(0.5 * (1.0 + w))
    t, logs = _product_quantile_table(s)
    # survival 1 - w, interpolated in log space on a decreasing table
    target = np.log1p(-w)
    return np.interp(-target, -logs, t)


def psi_quantile(w, r: float, K: float, L: float) -> np.ndarray:
    """Right-continuous inverse CDF of the law with survival min(1, K exp(-t^r / L))."""
    w = np.asarray(w, dtype=float)
    return (L * (math.log(K) - np.log1p(-w))) ** (1.0 / r)


def coupling_offset(r: float, K: float, L: float) -> tuple[float, float]:
    """(scale, shift) with U <= scale * (shift + V): scale = (8L)^(1/r), shift = (ln(K/c)/4)^(1/r)."""
    return (8.0 * L) ** (1.0 / r), (math.log(K / COUPLING_C) / 4.0) ** (1.0 / r)


def coupled_psi_pair(r: float, K: float, L: float, seed: int, size: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Draw (U, V) from one shared uniform per pair.

    U has survival min(1, K e^{-t^r/L}); V has the law of |g| Y with Y
    Weibull of shape s, 1/s = 1/r - 1/2. Both are monotone functions of the
    same uniform, which makes U <= (8L)^(1/r) ((ln(K/c)/4)^(1/r) + V) hold
    draw by draw.
    """
    if not 0.0 < r <= 2.0:
        raise ValueError(f"r must lie in (0, 2], got {r}")
    if K < 1.0 or L <= 0.0:
        raise ValueError("coupling needs K >= 1 and L > 0")
    w = open_uniform(rng_for(seed), size)
    return psi_quantile(w, r, K, L), product_quantile(w, r)


def coupling_violations(U, V, r: float, K: float, L: float) -> int:
    scale, shift = coupling_offset(r, K, L)
    return int(np.count_nonzero(np.asarray(U) > scale * (shift + np.asarray(V))))


# ---------------------------------------------------------------------------
# maxima


def empirical_emax(A, model, trials: int, seed: int) -> tuple[float, float]:
    """Monte Carlo (mean, standard error) of max_ij |a_ij X_ij|."""
    if trials < 2:
        raise ValueError("need at least two trials")
    A = as_matrix(A)
    if not A.any():
        return 0.0, 0.0
    model = EntryModel.parse(model)
    # only nonzero coefficients can attain the maximum
    coeffs = np.abs(A[A != 0])
    maxima = np.empty(trials)
    for t in range(trials):
        maxima[t] = np.max(coeffs * np.abs(draw_entries(model, coeffs.size, rng_for(seed, t))))
    return float(maxima.mean()), float(maxima.std(ddof=1) / math.sqrt(trials))


def emax_column_surrogate(A, axis: str = "columns") -> float:
    """max_j sqrt(ln(j+1)) * (j-th largest column maximum of |A|); rows likewise."""
    A = np.abs(as_matrix(A))
    if axis == "columns":
        peaks = A.max(axis=0)
    elif axis == "rows":
        peaks = A.max(axis=1)
    else:
        raise ValueError("axis must be 'columns' or 'rows'")
    ranked = nonincreasing_rearrangement(peaks)
    weights = np.sqrt(np.log(np.arange(2, ranked.size + 2)))
    return float(np.max(weights * ranked))


def row_col_maxima(A, model, col_exp, row_exp, trials: int, seed: int) -> tuple[float, float, float, float]:
    """Monte Carlo E max_j ||(a_ij X_ij)_i||_col_exp and E max_i ||(a_ij X_ij)_j||_row_exp.

    Returns (column mean, column stderr, row mean, row stderr).
    """
    if trials < 2:
        raise ValueError("need at least two trials")
    A = as_matrix(A)
    model = EntryModel.parse(model)
    cols = np.empty(trials)
    rows = np.empty(trials)
    for t in range(trials):
        X = structured_realization(A, model, seed, t)
        cols[t] = np.max(vector_norm(X, col_exp, axis=0))
        rows[t] = np.max(vector_norm(X, row_exp, axis=1))
    root = math.sqrt(trials)
    return float(cols.mean()), float(cols.std(ddof=1) / root), float(rows.mean()), float(rows.std(ddof=1) / root)
