"""Monte Carlo estimates of E||A o X||, tail runs, sandwich sweeps and test matrices."""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binomtest

from .bounds import d_terms, lower_bound_gaussian, upper_main_gaussian
from .exponents import canonical, conjugate, format_exponent
from .lpq_norm import EXACT, as_matrix, op_norm, worst_kind
from .sampling import EntryModel, row_col_maxima, structured_realization

MAX_ENTRIES = 10**8
DEFAULT_GRID = ("1", "1.5", "2", "3", "inf")


class NormEngineError(RuntimeError):
    """The norm engine failed (or was not exact) on one Monte Carlo trial."""

    def __init__(self, trial: int, message: str):
        super().__init__(f"trial {trial}: {message}")
        self.trial = trial


@dataclass
class McEstimate:
    mean: float
    stderr: float
    trials: int
    samples: np.ndarray | None = None
    norm_certificate: str = EXACT

    def to_dict(self, include_samples: bool = False) -> dict:
        out = {
            "mean": self.mean,
            "stderr": self.stderr,
            "trials": self.trials,
            "norm_certificate": self.norm_certificate,
        }
        if include_samples and self.samples is not None:
            out["samples"] = [float(v) for v in self.samples]
        return out


def _summarise(values: np.ndarray) -> tuple[float, float]:
    mean = math.fsum(values) / values.size
    return mean, float(np.std(values, ddof=1) / math.sqrt(values.size))


def mc_norm_estimate(
    A,
    model,
    p,
    q,
    trials: int,
    seed: int,
    *,
    allow_heuristic: bool = False,
    transpose: bool = False,
    keep_samples: bool = True,
    workers: int = 1,
    **norm_opts,
) -> McEstimate:
    """Mean and standard error of ||A o X : l_p -> l_q|| over seeded trials.

    Trial ``t`` uses the stream (seed, t). With ``transpose=True`` each trial
    evaluates the dual norm ||(A o X)^T : l_{q*} -> l_{p*}|| instead (same
    value, different engine path). A non-exact per-trial norm raises unless
    ``allow_heuristic`` is set.
    """
    if trials < 2:
        raise ValueError("need at least two trials")
    A = as_matrix(A)
    model = EntryModel.parse(model)
    p, q = canonical(p), canonical(q)
    if not A.any():
        return McEstimate(0.0, 0.0, trials, np.zeros(trials) if keep_samples else None)
    src, dst = (conjugate(q), conjugate(p)) if transpose else (p, q)

    def one(t: int):
        X = structured_realization(A, model, seed, t)
        if transpose:
            X = X.T
        try:
            res = op_norm(X, src, dst, **norm_opts)
        except Exception as exc:  # noqa: BLE001 - re-raised with the trial index
            raise NormEngineError(t, str(exc)) from exc
        if res.kind != EXACT and not allow_heuristic:
            raise NormEngineError(t, f"norm certified only as {res.kind} ({res.strategy})")
        return res.value, res.kind

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(trials)))
    else:
        results = [one(t) for t in range(trials)]
    values = np.array([v for v, _ in results])
    mean, stderr = _summarise(values)
    return McEstimate(mean, stderr, trials, values if keep_samples else None, worst_kind(k for _, k in results))


# ---------------------------------------------------------------------------
# tails


@dataclass
class TailTable:
    level: float
    rows: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"level": self.level, "rows": self.rows}

    def write_dat(self, path) -> None:
        """gnuplot-ready (t, -ln P) pairs; thresholds with P = 0 are commented out."""
        with open(path, "w") as fh:
            fh.write("# t  -ln(P)\n")
            for row in self.rows:
                prob = row["probability"]
                if prob > 0.0:
                    fh.write(f"{row['t']:.10g} {-math.log(prob):.10g}\n")
                else:
                    fh.write(f"# {row['t']:.10g} no exceedances\n")


def tail_experiment(
    A,
    model,
    p,
    q,
    trials: int,
    thresholds,
    seed: int,
    *,
    reference: str = "mean",
    D: float | None = None,
    gamma: float | None = None,
    estimate: McEstimate | None = None,
    **norm_opts,
) -> TailTable:
    """Empirical P(norm >= t * level) for each threshold t.

    The level is gamma * D. By default D = D1 and gamma = mean / D1 from the
    run itself, so the level is the sample mean; ``reference="median"`` uses
    the sample median instead, and explicit ``D``/``gamma`` override both.
    All thresholds share one sample, so the probabilities are non-increasing.
    """
    thresholds = [float(t) for t in thresholds]
    if any(t <= 0 for t in thresholds):
        raise ValueError("thresholds must be positive")
    est = estimate or mc_norm_estimate(A, model, p, q, trials, seed, **norm_opts)
    samples = est.samples
    if D is None:
        D = d_terms(A, p, q).d1
    if gamma is None:
        centre = float(np.median(samples)) if reference == "median" else est.mean
        gamma = centre / D if D > 0 else 0.0
    level = gamma * D
    table = TailTable(level)
    for t in sorted(thresholds):
        hits = int(np.count_nonzero(samples >= t * level))
        ci = binomtest(hits, samples.size).proportion_ci(confidence_level=0.95, method="wilson")
        table.rows.append(
            {"t": t, "probability": hits / samples.size, "half_width": float(0.5 * (ci.high - ci.low)), "count": hits}
        )
    return table


# ---------------------------------------------------------------------------
# sandwich sweeps


def pq_grid(values=DEFAULT_GRID) -> list[tuple[float, float]]:
    vals = [canonical(v) for v in values]
    return [(p, q) for p in vals for q in vals]


@dataclass
class SweepResult:
    rows: list
    summary: dict

    def write_csv(self, path) -> None:
        if not self.rows:
            Path(path).write_text("")
            return
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(self.rows[0]))
            writer.writeheader()
            writer.writerows(self.rows)

    def to_dict(self) -> dict:
        return {"summary": self.summary, "rows": self.rows}


def _scenario_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1, np.uint64)[0])


def sandwich_sweep(
    scenarios,
    model,
    grid,
    trials: int,
    seed: int,
    *,
    exact_only: bool = True,
    reproducer_dir=None,
    **norm_opts,
) -> SweepResult:
    """Check certified lower <= mc_mean + 3 se and mc_mean - 3 se <= upper per cell.

    ``scenarios`` is a list of (name, matrix). Each scenario's realizations are
    drawn once per trial and reused by every (p, q) cell. A cell whose norm
    is not exact on the first realization is flagged ``heuristic`` and skipped
    when ``exact_only``. Violations are recorded (and written as reproducer
    JSON files when ``reproducer_dir`` is given), never raised.
    """
    start = time.perf_counter()
    model = EntryModel.parse(model)
    grid = [(canonical(p), canonical(q)) for p, q in grid]
    rows = []
    violations = flagged = 0
    for s_idx, (name, A) in enumerate(scenarios):
        A = as_matrix(A)
        s_seed = _scenario_seed(seed, s_idx)
        cells = []
        for p, q in grid:
            low = lower_bound_gaussian(A, p, q, model=model)
            up = upper_main_gaussian(A, p, q)
            cells.append({"p": p, "q": q, "lower": low, "upper": up, "values": [], "heuristic": False})
        if A.any():
            for t in range(trials):
                X = structured_realization(A, model, s_seed, t)
                for cell in cells:
                    if cell["heuristic"]:
                        continue
                    res = op_norm(X, cell["p"], cell["q"], **norm_opts)
                    if res.kind != EXACT and exact_only:
                        cell["heuristic"] = True
                        continue
                    cell["values"].append(res.value)
        for cell in cells:
            p, q, low, up = cell["p"], cell["q"], cell["lower"], cell["upper"]
            if cell["heuristic"]:
                flagged += 1
                mean = stderr = math.nan
            elif A.any():
                mean, stderr = _summarise(np.asarray(cell["values"]))
            else:
                mean = stderr = 0.0
            certified = low.certified_lower
            violated = bool(
                not cell["heuristic"] and (certified > mean + 3.0 * stderr or mean - 3.0 * stderr > up)
            )
            row = {
                "scenario": name,
                "p": format_exponent(p),
                "q": format_exponent(q),
                "lower": certified,
                "lower_rate": low.lower,
                "mc_mean": mean,
                "stderr": stderr,
                "upper": up,
                "mean_over_lower": mean / certified if certified > 0 else math.nan,
                "upper_over_mean": up / mean if mean > 0 else math.nan,
                "heuristic": cell["heuristic"],
                "violation": violated,
            }
            rows.append(row)
            if violated:
                violations += 1
                if reproducer_dir is not None:
                    _write_reproducer(reproducer_dir, name, A, p, q, model, s_seed, trials, row)
    summary = {
        "cells": len(rows),
        "violations": violations,
        "heuristic_cells": flagged,
        "runtime_seconds": time.perf_counter() - start,
    }
    return SweepResult(rows, summary)


def _write_reproducer(directory, name, A, p, q, model, seed, trials, row) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    payload = {
        "scenario": name,
        "matrix": A.tolist(),
        "p": format_exponent(p),
        "q": format_exponent(q),
        "model": model.to_dict(),
        "seed": seed,
        "trials": trials,
        "cell": row,
    }
    path = directory / f"violation_{name}_{format_exponent(p)}_{format_exponent(q)}.json"
    path.write_text(json.dumps(payload, indent=2))


# ---------------------------------------------------------------------------
# formula-level and rate experiments


def counterexample_growth(q, k_list) -> list[dict]:
    """Ratio of the block-matrix lower expression to the candidate upper expression.

    With p = q < 2 and ln(kN) replaced by e^k, the lower expression is
    e^{k/2} k^{(2-q)/(2q)} and the upper one k^{1/q} + k^{1/p* + 1/2 - 1/q*} + e^{k/2}.
    Since p = q the middle exponent is 1/2. Everything is evaluated in log
    space, so k = 10^6 is fine.
    """
    q = canonical(q)
    if not 1.0 <= q < 2.0:
        raise ValueError(f"the block counterexample needs p = q in [1, 2), got q={q}")
    rows = []
    for k in k_list:
        k = float(k)
        ln_k = math.log(k)
        log_lower = 0.5 * k + (2.0 - q) / (2.0 * q) * ln_k
        log_upper = float(logsumexp([ln_k / q, 0.5 * ln_k, 0.5 * k]))
        rows.append({"k": k, "log_lower": log_lower, "log_upper": log_upper, "ratio": math.exp(log_lower - log_upper)})
    return rows


def rowcol_max_rate(A, model, p, q, trials: int, seed: int) -> float:
    """Monte Carlo E max_i ||row_i(A o X)||_{p*} + E max_j ||col_j(A o X)||_q."""
    A = as_matrix(A)
    if not A.any():
        return 0.0
    cols, _, rows, _ = row_col_maxima(A, model, canonical(q), conjugate(p), trials, seed)
    return cols + rows


# ---------------------------------------------------------------------------
# scenario matrices


SCENARIO_KINDS = ("identity", "ones", "block_ones", "diag", "seeded_random", "power_product")
RANDOM_LAWS = ("uniform01", "gaussian", "abs_gaussian")


@dataclass
class ScenarioSpec:
    """Deterministic test matrix. ``params`` holds the kind-specific sizes.

    identity: n; ones: m, n; block_ones: k, N (N diagonal k x k blocks of
    ones); diag: weights; seeded_random: m, n, law, seed;
    power_product: m, n, exponent (a_ij = (i j)^-exponent, 1-based).
    """

    kind: str
    params: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, spec) -> "ScenarioSpec":
        if isinstance(spec, ScenarioSpec):
            return spec
        if isinstance(spec, str):
            spec = json.loads(spec)
        spec = dict(spec)
        kind = spec.pop("kind")
        if kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {kind!r}; expected one of {SCENARIO_KINDS}")
        return cls(kind, spec)

    def shape(self) -> tuple[int, int]:
        P = self.params
        if self.kind == "identity":
            return int(P["n"]), int(P["n"])
        if self.kind == "block_ones":
            size = int(P["k"]) * int(P["N"])
            return size, size
        if self.kind == "diag":
            return len(P["weights"]), len(P["weights"])
        return int(P["m"]), int(P["n"])

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


def scenario_matrix(spec) -> np.ndarray:
    spec = ScenarioSpec.parse(spec)
    m, n = spec.shape()
    if m < 1 or n < 1:
        raise ValueError("scenario sizes must be positive")
    if m * n > MAX_ENTRIES:
        raise ValueError(f"scenario would have {m * n} entries (limit {MAX_ENTRIES})")
    P = spec.params
    if spec.kind == "identity":
        return np.eye(n)
    if spec.kind == "ones":
        return np.ones((m, n))
    if spec.kind == "block_ones":
        k, N = int(P["k"]), int(P["N"])
        if k < 1 or N < 1:
            raise ValueError("block sizes must be positive")
        return np.kron(np.eye(N), np.ones((k, k)))
    if spec.kind == "diag":
        return np.diag(np.asarray(P["weights"], dtype=float))
    if spec.kind == "power_product":
        exponent = float(P.get("exponent", 0.5))
        i = np.arange(1, m + 1, dtype=float)[:, None]
        j = np.arange(1, n + 1, dtype=float)[None, :]
        return (i * j) ** (-exponent)
    law = P.get("law", "uniform01")
    rng = np.random.default_rng(np.random.SeedSequence([int(P.get("seed", 0))]))
    if law == "uniform01":
        return rng.random((m, n))
    if law == "gaussian":
        return rng.standard_normal((m, n))
    if law == "abs_gaussian":
        return np.abs(rng.standard_normal((m, n)))
    raise ValueError(f"unknown law {law!r}; expected one of {RANDOM_LAWS}")
