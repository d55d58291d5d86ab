"""Vector (quasi-)norms and operator norms ||B : l_r^n -> l_s^m||.

``op_norm`` dispatches on the exponent pair and on the structure of ``B``.
Closed forms and finite enumerations give ``Exact`` results. A concave
program (nonnegative ``B``, ``r >= 1``, ``s < 1``) gives a certified
``Bracket``. Everything else is a multistart local search, reported as a
``HeuristicLowerBound`` (or a ``Bracket`` when an upper bound is available).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .exponents import INF, canonical, conjugate

EXACT = "Exact"
BRACKET = "Bracket"
HEURISTIC = "HeuristicLowerBound"

# worst-first ordering used when several certificates are combined
_KIND_RANK = {EXACT: 0, BRACKET: 1, HEURISTIC: 2}

SIGN_ENUMERATION_CAP = 20
SUBSET_ENUMERATION_CAP = 10**6
ORACLE_MAX_DIM = 4
ORACLE_GRID_BUDGET = 2**18


@dataclass
class NormResult:
    """Value of an operator norm together with how it was certified.

    ``lower``/``upper`` always bracket the true norm as far as the strategy
    can tell: both equal ``value`` for ``Exact``; ``upper`` is ``inf`` for a
    bare ``HeuristicLowerBound``.
    """

    value: float
    kind: str
    witness: np.ndarray
    strategy: str
    lower: float = math.nan
    upper: float = math.nan
    iterations: int = 0

    def __post_init__(self):
        if math.isnan(self.lower):
            self.lower = self.value
        if math.isnan(self.upper):
            self.upper = self.value if self.kind == EXACT else INF

    @property
    def is_exact(self) -> bool:
        return self.kind == EXACT

    def to_dict(self) -> dict:
        upper = None if math.isinf(self.upper) else float(self.upper)
        return {
            "value": float(self.value),
            "kind": self.kind,
            "lower": float(self.lower),
            "upper": upper,
            "strategy": self.strategy,
            "witness": [float(v) for v in np.asarray(self.witness).ravel()],
        }


def worst_kind(kinds) -> str:
    return max(kinds, key=_KIND_RANK.__getitem__, default=EXACT)


# ---------------------------------------------------------------------------
# vectors


def vector_norm(x, p, axis=None) -> float | np.ndarray:
    """l_p (quasi-)norm for p in [1/2, inf], optionally along an axis.

    The largest entry is factored out before raising to the power p, so
    huge or tiny entries neither overflow nor underflow.
    """
    p = canonical(p, lower=0.5)
    a = np.abs(np.asarray(x, dtype=float))
    if a.size == 0:
        return 0.0 if axis is None else np.zeros(np.delete(a.shape, axis))
    peak = a.max(axis=axis, keepdims=True)
    if math.isinf(p):
        return np.squeeze(peak, axis=axis) if axis is not None else float(peak.item())
    safe = np.where(peak > 0, peak, 1.0)
    if p == 1.0:
        total = (a / safe).sum(axis=axis, keepdims=True)
        out = safe * total
    elif p == 2.0:
        out = safe * np.sqrt(((a / safe) ** 2).sum(axis=axis, keepdims=True))
    else:
        out = safe * ((a / safe) ** p).sum(axis=axis, keepdims=True) ** (1.0 / p)
    out = np.where(peak > 0, out, 0.0)
    if axis is None:
        return float(out.item())
    return np.squeeze(out, axis=axis)


def nonincreasing_rearrangement(x) -> np.ndarray:
    """Absolute values sorted in non-increasing order."""
    return np.sort(np.abs(np.asarray(x, dtype=float)).ravel())[::-1]


def hadamard_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return A * A


def dual_map(v, p) -> np.ndarray:
    """A unit vector x of l_p (p >= 1) with <x, v> = ||v||_{p*}.

    For ``v = 0`` returns e_1.
    """
    p = canonical(p)
    v = np.asarray(v, dtype=float)
    peak = np.abs(v).max() if v.size else 0.0
    if peak == 0.0:
        x = np.zeros_like(v)
        x[0] = 1.0
        return x
    u = v / peak
    if math.isinf(p):
        return np.where(u >= 0, 1.0, -1.0)
    if p == 1.0:
        x = np.zeros_like(u)
        j = int(np.argmax(np.abs(u)))
        x[j] = 1.0 if u[j] >= 0 else -1.0
        return x
    pstar = conjugate(p)
    w = np.sign(u) * np.abs(u) ** (pstar - 1.0)
    return w / vector_norm(w, p)


def k_gauge_dual(y, p) -> float:
    """max_k k^(-1/p) * (sum of the k largest |y_j|).

    This is the norm dual to the gauge of the polytope whose extreme points
    are the vectors |J|^(-1/p) (eps_j 1{j in J})_j.
    """
    p = canonical(p)
    ranked = nonincreasing_rearrangement(y)
    if ranked.size == 0:
        return 0.0
    k = np.arange(1, ranked.size + 1, dtype=float)
    scale = np.ones_like(k) if math.isinf(p) else k ** (-1.0 / p)
    return float(np.max(np.cumsum(ranked) * scale))


# ---------------------------------------------------------------------------
# matrices


def as_matrix(B) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[None, :]
    if B.ndim != 2 or B.shape[0] == 0 or B.shape[1] == 0:
        raise ValueError(f"expected a non-empty 2-d matrix, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise ValueError("matrix has non-finite entries")
    return B


def load_matrix_csv(path) -> np.ndarray:
    """Read a header-less comma separated matrix, one row per line."""
    return as_matrix(np.loadtxt(path, delimiter=",", ndmin=2))


def save_matrix_csv(path, B) -> None:
    np.savetxt(path, as_matrix(B), delimiter=",", fmt="%.17g")


def _basis(n: int, j: int = 0, sign: float = 1.0) -> np.ndarray:
    e = np.zeros(n)
    e[j] = sign
    return e


def _is_monomial(B: np.ndarray) -> bool:
    nz = B != 0
    return bool(nz.sum(axis=0).max() <= 1 and nz.sum(axis=1).max() <= 1)


def op_norm(
    B,
    r,
    s,
    *,
    restarts: int = 20,
    max_iter: int = 1000,
    tol: float = 1e-10,
    seed: int = 0,
    enum_cap: int = SIGN_ENUMERATION_CAP,
) -> NormResult:
    """Operator norm of ``B`` from l_r^n to l_s^m, r, s in [1/2, inf].

    Dispatch order: zero matrix; column formula (r <= 1 and r <= s);
    row formula (s = inf); at most one nonzero per row and column; largest
    singular value (r = s = 2); sign enumeration (r = inf, or s = 1 through
    the transpose) up to ``enum_cap`` signs; closed forms for nonnegative
    ``B`` (r = inf, or s = 1); concave ascent for nonnegative ``B`` with
    r >= 1 > s; multistart local search otherwise.
    """
    B = as_matrix(B)
    r = canonical(r, lower=0.5)
    s = canonical(s, lower=0.5)
    m, n = B.shape

    if not B.any():
        return NormResult(0.0, EXACT, _basis(n), "zero")

    if r <= 1.0 and r <= s:
        return _column_formula(B, s)
    if math.isinf(s):
        return _row_formula(B, r)
    if _is_monomial(B):
        return _monomial(B, r, s)
    if r == 2.0 and s == 2.0:
        return _spectral(B)
    if math.isinf(r) and s >= 1.0 and n <= enum_cap:
        return _enumerate_source_signs(B, s)
    if s == 1.0 and r >= 1.0 and m <= enum_cap:
        return _enumerate_target_signs(B, r)

    nonnegative = bool((B >= 0).all())
    if nonnegative and math.isinf(r):
        x = np.ones(n)
        return NormResult(vector_norm(B @ x, s), EXACT, x, "nonnegative_all_ones")
    if nonnegative and s == 1.0:
        colsum = B.sum(axis=0)
        return NormResult(vector_norm(colsum, conjugate(r)), EXACT, dual_map(colsum, r), "nonnegative_linear")
    if s < 1.0:
        if nonnegative and r >= 1.0:
            return _concave_ascent(B, r, s, max_iter=max_iter, tol=tol)
        return _quasi_multistart(B, r, s, restarts=restarts, max_iter=max_iter, tol=tol, seed=seed, nonnegative=nonnegative)
    return _power_iteration(B, r, s, restarts=restarts, max_iter=max_iter, tol=tol, seed=seed)


def _column_formula(B: np.ndarray, s: float) -> NormResult:
    norms = vector_norm(B, s, axis=0)
    j = int(np.argmax(norms))
    return NormResult(float(norms[j]), EXACT, _basis(B.shape[1], j), "column_formula")


def _row_formula(B: np.ndarray, r: float) -> NormResult:
    # r >= 1 here (r < 1 was caught by the column formula)
    rstar = conjugate(r)
    norms = vector_norm(B, rstar, axis=1)
    i = int(np.argmax(norms))
    return NormResult(float(norms[i]), EXACT, dual_map(B[i], r), "row_formula")


def _monomial(B: np.ndarray, r: float, s: float) -> NormResult:
    """One nonzero per row and column: a permuted diagonal, solved by Hölder."""
    rows, cols = np.nonzero(B)
    d = np.abs(B[rows, cols])
    n = B.shape[1]
    if s >= r:
        k = int(np.argmax(d))
        return NormResult(float(d[k]), EXACT, _basis(n, cols[k]), "monomial")
    # s < r: ||d||_t with 1/t = 1/s - 1/r
    inv_r = 0.0 if math.isinf(r) else 1.0 / r
    t = 1.0 / (1.0 / s - inv_r)
    value = vector_norm(d, t)
    x = np.zeros(n)
    if math.isinf(r):
        x[cols] = 1.0
    else:
        weights = (d / d.max()) ** t
        x[cols] = (weights / weights.sum()) ** (1.0 / r)
    x[cols] *= np.sign(B[rows, cols])
    return NormResult(value, EXACT, x, "monomial")


def _spectral(B: np.ndarray) -> NormResult:
    _, sv, vt = np.linalg.svd(B, full_matrices=False)
    return NormResult(float(sv[0]), EXACT, vt[0].copy(), "singular_value")


def _sign_vectors(k: int, chunk: int = 2**14):
    """Yield blocks of sign vectors (as columns) covering {+-1}^k with eps_1 = +1."""
    total = 1 << (k - 1)
    bits = np.arange(k - 1)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        tail = 1.0 - 2.0 * ((idx[None, :] >> bits[:, None]) & 1)
        yield np.vstack([np.ones((1, idx.size)), tail])


def _enumerate_source_signs(B: np.ndarray, s: float) -> NormResult:
    best, best_eps = -1.0, None
    for E in _sign_vectors(B.shape[1]):
        vals = vector_norm(B @ E, s, axis=0)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, best_eps = float(vals[k]), E[:, k].copy()
    return NormResult(best, EXACT, best_eps, "sign_enumeration")


def _enumerate_target_signs(B: np.ndarray, r: float) -> NormResult:
    # ||B : l_r -> l_1|| = ||B^T : l_inf -> l_r*||
    rstar = conjugate(r)
    best, best_v = -1.0, None
    for E in _sign_vectors(B.shape[0]):
        V = B.T @ E
        vals = vector_norm(V, rstar, axis=0)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, best_v = float(vals[k]), V[:, k].copy()
    return NormResult(best, EXACT, dual_map(best_v, r), "dual_sign_enumeration")


def subadditivity_upper(B, r, s) -> float:
    """Upper bound for s <= 1 from ||Bx||_s^s <= sum_j |x_j|^s ||col_j||_s^s."""
    r = canonical(r, lower=0.5)
    s = canonical(s, lower=0.5)
    if s > 1.0:
        raise ValueError("subadditivity bound needs s <= 1")
    w = vector_norm(B, s, axis=0) ** s
    if r <= s:
        return float(w.max() ** (1.0 / s))
    ratio = INF if math.isinf(r) else r / s
    return float(vector_norm(w, conjugate(ratio)) ** (1.0 / s))


def _restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(restart)])


def _power_iteration(B, r, s, *, restarts, max_iter, tol, seed) -> NormResult:
    """Alternating maximisation x <- J_r(B^T J_{s*}(Bx)) for r, s >= 1."""
    m, n = B.shape
    sstar = conjugate(s)
    col_norms = vector_norm(B, s, axis=0)
    starts = [_basis(n, int(np.argmax(col_norms))), dual_map(B[int(np.argmax(vector_norm(B, conjugate(r), axis=1)))], r)]
    for k in range(restarts):
        starts.append(_restart_rng(seed, k).standard_normal(n))

    best_val, best_x, total_iter = -1.0, None, 0
    for x in starts:
        x = x / vector_norm(x, r)
        val = vector_norm(B @ x, s)
        for it in range(max_iter):
            y = dual_map(B @ x, sstar)
            x_new = dual_map(B.T @ y, r)
            val_new = vector_norm(B @ x_new, s)
            total_iter += 1
            if val_new < val:
                break
            converged = val_new - val <= tol * max(val_new, 1e-300)
            x, val = x_new, val_new
            if converged:
                break
        if val > best_val:
            best_val, best_x = val, x
    return NormResult(best_val, HEURISTIC, best_x, "power_iteration", iterations=total_iter)


def _concave_gradient(B, x, s):
    y = B @ x
    f = vector_norm(y, s)
    g = B.T @ ((y / f) ** (s - 1.0))
    return f, g


def _concave_ascent(B, r, s, *, max_iter, tol) -> NormResult:
    """Maximise the concave map x -> ||Bx||_s (B >= 0, s < 1) over the l_r ball, r >= 1.

    For a 1-homogeneous concave f the linearisation gives
    f* <= max_{x in ball, x >= 0} <grad f(x), x> = ||grad f(x)||_{r*},
    so every iterate carries a certified upper bound.
    """
    m, n = B.shape
    live_rows = B.any(axis=1)
    live_cols = B.any(axis=0)
    C = B[np.ix_(live_rows, live_cols)]
    rstar = conjugate(r)
    x = np.full(C.shape[1], C.shape[1] ** (-1.0 / r))
    f, g = _concave_gradient(C, x, s)
    lower, upper = f, vector_norm(g, rstar)
    best_x = x
    it = 0
    for it in range(1, max_iter + 1):
        # fixed point of the KKT system g_j = f x_j^(r-1) on the unit sphere
        x_new = (x * g / f) ** (1.0 / r)
        f_new, g_new = _concave_gradient(C, x_new, s)
        damping = 0
        while f_new < f and damping < 30:
            x_new = np.sqrt(x * x_new)
            x_new /= vector_norm(x_new, r)
            f_new, g_new = _concave_gradient(C, x_new, s)
            damping += 1
        if f_new < f:
            break
        x, f, g = x_new, f_new, g_new
        if f > lower:
            lower, best_x = f, x
        upper = min(upper, vector_norm(g, rstar))
        if upper - lower <= tol * upper:
            break
    witness = np.zeros(n)
    witness[live_cols] = best_x
    return NormResult(lower, BRACKET, witness, "concave_ascent", lower=lower, upper=max(upper, lower), iterations=it)


def _quasi_multistart(B, r, s, *, restarts, max_iter, tol, seed, nonnegative) -> NormResult:
    """Local search for s < 1 outside the concave case, bracketed by subadditivity."""
    m, n = B.shape
    upper = subadditivity_upper(B, r, s)
    starts = [_basis(n, j) for j in range(n)] + [np.ones(n)]
    for k in range(restarts):
        rng = _restart_rng(seed, k)
        starts.append(rng.dirichlet(np.ones(n)) if nonnegative else rng.standard_normal(n))

    best_val, best_x, total_iter = -1.0, None, 0
    for x0 in starts:
        if nonnegative:
            x, val, its = _multiplicative_ascent(B, x0, r, s, max_iter, tol)
        else:
            x, val, its = _hill_climb(B, x0, r, s, steps=min(max_iter, 200), seed=seed)
        total_iter += its
        if val > best_val:
            best_val, best_x = val, x
    return NormResult(best_val, BRACKET, best_x, "quasi_multistart", lower=best_val, upper=max(upper, best_val), iterations=total_iter)


def _multiplicative_ascent(B, x0, r, s, max_iter, tol):
    x = np.abs(x0) / vector_norm(x0, r)
    val = vector_norm(B @ x, s)
    it = 0
    for it in range(1, max_iter + 1):
        y = B @ x
        support = y > 0
        if not support.any():
            break
        w = np.zeros_like(y)
        w[support] = (y[support] / val) ** (s - 1.0)
        g = B.T @ w
        x_new = (x * g / val) ** (1.0 / r)
        x_new /= vector_norm(x_new, r)
        val_new = vector_norm(B @ x_new, s)
        if val_new <= val * (1.0 + tol):
            if val_new > val:
                x, val = x_new, val_new
            break
        x, val = x_new, val_new
    return x, val, it


def _hill_climb(B, x0, r, s, *, steps: int, seed: int, batch: int = 64):
    """Random-perturbation hill climbing on the unit sphere of l_r."""
    rng = np.random.default_rng([int(seed), 7919])
    x = x0 / vector_norm(x0, r)
    val = vector_norm(B @ x, s)
    sigma = 0.5
    for _ in range(steps):
        cand = x[:, None] + sigma * rng.standard_normal((x.size, batch))
        cand /= vector_norm(cand, r, axis=0)
        vals = vector_norm(B @ cand, s, axis=0)
        k = int(np.argmax(vals))
        if vals[k] > val:
            x, val = cand[:, k], float(vals[k])
            sigma *= 1.5
        else:
            sigma *= 0.5
        if sigma < 1e-12:
            break
    return x, val, steps


# ---------------------------------------------------------------------------
# independent verification


@lru_cache(maxsize=8)
def _sphere_grid(n: int, per_angle: int) -> np.ndarray:
    """Points of the Euclidean unit sphere in R^n from a spherical-coordinate grid.

    Polar angles run over [0, pi] (per_angle + 1 values) and the azimuth over
    [0, pi) (per_angle values); antipodal points are redundant for norms.
    """
    polar = np.linspace(0.0, np.pi, per_angle + 1)
    azimuth = np.arange(per_angle) * (np.pi / per_angle)
    grids = np.meshgrid(*([polar] * (n - 2) + [azimuth]), indexing="ij")
    angles = [g.ravel() for g in grids]
    pts = np.empty((n, angles[0].size))
    sin_prod = np.ones(angles[0].size)
    for k, phi in enumerate(angles):
        pts[k] = sin_prod * np.cos(phi)
        sin_prod = sin_prod * np.sin(phi)
    pts[n - 1] = sin_prod
    pts.setflags(write=False)
    return pts


@lru_cache(maxsize=8)
def _cube_boundary_lattice(n: int, steps: int = 9) -> np.ndarray:
    """Points of {-1, ..., 1}^n (``steps`` levels) with max coordinate 1.

    Contains the signed basis vectors and the cube vertices, i.e. the
    extreme points of the l_1 and l_inf balls, which an angular grid misses.
    """
    levels = np.linspace(-1.0, 1.0, steps)
    pts = np.stack([g.ravel() for g in np.meshgrid(*([levels] * n), indexing="ij")])
    return pts[:, np.abs(pts).max(axis=0) == 1.0]


@lru_cache(maxsize=16)
def _lr_sphere_grid(n: int, per_angle: int, r: float) -> np.ndarray:
    """The angular grid plus the cube lattice, radially projected onto the l_r sphere."""
    base = np.hstack([_sphere_grid(n, per_angle), _cube_boundary_lattice(n)])
    pts = base / vector_norm(base, r, axis=0)
    pts.setflags(write=False)
    return pts


def brute_force_oracle(
    B,
    r,
    s,
    resolution: int = 256,
    *,
    refine_steps: int = 50,
    starts: int = 8,
    batch: int = 128,
    seed: int = 0,
) -> float:
    """Derivative-free lower estimate of ||B : l_r -> l_s|| for n <= 4.

    Evaluates the objective on a spherical-coordinate grid (``resolution``
    samples per angle, capped so the grid has at most ``ORACLE_GRID_BUDGET``
    points) together with a coarse cube-boundary lattice, all radially
    projected onto the l_r sphere, then runs ``refine_steps``
    rounds of random-perturbation hill climbing from the best grid points.
    Shares no code path with ``op_norm`` beyond ``vector_norm``.
    """
    B = as_matrix(B)
    r = canonical(r, lower=0.5)
    s = canonical(s, lower=0.5)
    n = B.shape[1]
    if n > ORACLE_MAX_DIM:
        raise ValueError(f"brute_force_oracle supports n <= {ORACLE_MAX_DIM}, got {n}")
    if resolution < 64:
        raise ValueError("resolution must be at least 64")
    if n == 1:
        return vector_norm(B[:, 0], s)

    # integer (n-1)-th root of the budget; the epsilon guards 2^18^(1/3) = 63.999...
    per_angle = min(resolution, int(ORACLE_GRID_BUDGET ** (1.0 / (n - 1)) + 1e-9))
    pts = _lr_sphere_grid(n, per_angle, r)
    vals = vector_norm(B @ pts, s, axis=0)
    best = float(vals.max())
    if refine_steps <= 0:
        return best

    starts = min(starts, vals.size)
    order = np.argpartition(vals, vals.size - starts)[vals.size - starts :]
    X = pts[:, order].copy()
    V = vals[order].copy()
    sigma = np.full(X.shape[1], np.pi / per_angle)
    rng = np.random.default_rng([int(seed), 104729])
    for _ in range(refine_steps):
        for k in range(X.shape[1]):
            cand = X[:, k, None] + sigma[k] * rng.standard_normal((n, batch))
            cand /= vector_norm(cand, r, axis=0)
            cv = vector_norm(B @ cand, s, axis=0)
            j = int(np.argmax(cv))
            if cv[j] > V[k]:
                X[:, k], V[k] = cand[:, j], cv[j]
                sigma[k] *= 1.5
            else:
                sigma[k] *= 0.5
    return max(best, float(V.max()))


def submatrix_sup_norm(B, m: int, n: int, p, q, *, cap: int = SUBSET_ENUMERATION_CAP, **opts) -> NormResult:
    """max of ||B restricted to (rows I, cols J)|| over |I| = m, |J| = n."""
    B = as_matrix(B)
    M, N = B.shape
    if not (1 <= m <= M and 1 <= n <= N):
        raise ValueError(f"subset sizes ({m}, {n}) must lie within the shape {B.shape}")
    count = math.comb(M, m) * math.comb(N, n)
    if count > cap:
        raise ValueError(f"{count} submatrices exceed the enumeration cap {cap}")

    best, best_cols = None, None
    kinds, upper = [], 0.0
    col_sets = list(itertools.combinations(range(N), n))
    for rows in itertools.combinations(range(M), m):
        sub_rows = B[list(rows)]
        for cols in col_sets:
            res = op_norm(sub_rows[:, list(cols)], p, q, **opts)
            kinds.append(res.kind)
            upper = max(upper, res.upper)
            if best is None or res.value > best.value:
                best, best_cols = res, cols
    witness = np.zeros(N)
    witness[list(best_cols)] = best.witness
    kind = worst_kind(kinds)
    return NormResult(
        best.value,
        kind,
        witness,
        f"subset_enumeration[{best.strategy}]",
        lower=best.value,
        upper=upper if kind != HEURISTIC else INF,
    )
