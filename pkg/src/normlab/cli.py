"""Command line front end: ``normlab <subcommand> ...`` (or ``python -m normlab``).

Exit status: 0 on success, 1 on usage / input errors, 2 when a sweep found
sandwich violations (the data is still written).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import bounds as B
from .exponents import ExponentDomainError, canonical, conjugate, format_exponent
from .experiments import (
    NormEngineError,
    ScenarioSpec,
    mc_norm_estimate,
    pq_grid,
    sandwich_sweep,
    scenario_matrix,
    tail_experiment,
)
from .lpq_norm import as_matrix, load_matrix_csv, op_norm
from .sampling import WEIBULL, EntryModel

SCHEMA_VERSION = 1
EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2


SCHEMAS = ("norm", "bounds", "estimate", "tail", "sweep_summary", "scenario")


def load_schema(name: str) -> dict:
    """The published JSON schema for one kind of emitted document."""
    if name not in SCHEMAS:
        raise ValueError(f"unknown schema {name!r}; expected one of {SCHEMAS}")
    return json.loads(resources.files("normlab").joinpath("schemas", f"{name}.schema.json").read_text())


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be a decimal integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _exponent(text: str) -> float:
    try:
        return canonical(text)
    except ExponentDomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _default_seed() -> int:
    return _seed(os.environ.get("NORMLAB_SEED", "0"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="normlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def source(p, required=True):
        group = p.add_mutually_exclusive_group(required=required)
        group.add_argument("--matrix", help="CSV file, no header, one matrix row per line")
        group.add_argument("--scenario", help="scenario JSON object or path to a JSON file")
        p.add_argument("--transpose", action="store_true", help="use the transposed matrix with dual exponents")

    def exponents(p):
        p.add_argument("--p", type=_exponent, required=True, help="source exponent, e.g. 1, 1.5, inf")
        p.add_argument("--q", type=_exponent, required=True, help="target exponent")

    def common(p, trials):
        p.add_argument("--model", default="gaussian", help='shorthand name or JSON, e.g. \'{"kind": "weibull_psi_r", "r": 1}\'')
        p.add_argument("--trials", type=int, default=trials)
        p.add_argument("--seed", type=_seed, default=None, help="default: $NORMLAB_SEED or 0")
        p.add_argument("--threads", type=int, default=1, help="worker cap for Monte Carlo trials")

    def output(p):
        p.add_argument("--output", help="write here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("norm", help="operator norm of a matrix")
    source(p)
    exponents(p)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--seed", type=_seed, default=None)
    output(p)

    p = sub.add_parser("bounds", help="evaluate bound formulas")
    source(p)
    exponents(p)
    common(p, 400)
    p.add_argument("--formula", default=B.MAIN_GAUSSIAN, help=f"one of {', '.join(B.FORMULAS)}, or 'all'")
    p.add_argument("--emax", choices=("surrogate", "monte_carlo"), default="surrogate")
    p.add_argument("--calibration", type=float, default=1.0, help="constant for the psi_r rates")
    output(p)

    p = sub.add_parser("estimate", help="Monte Carlo estimate of the expected norm")
    source(p)
    exponents(p)
    common(p, 200)
    p.add_argument("--allow-heuristic", action="store_true")
    p.add_argument("--samples", action="store_true", help="include per-trial values")
    output(p)

    p = sub.add_parser("tail", help="empirical tail probabilities")
    source(p)
    exponents(p)
    common(p, 2000)
    p.add_argument("--thresholds", default="1,1.5,2,3")
    p.add_argument("--reference", choices=("mean", "median"), default="mean")
    p.add_argument("--dat", help="also write (t, -ln P) pairs for gnuplot")
    output(p)

    p = sub.add_parser("sweep", help="sandwich verification over a (p, q) grid")
    p.add_argument("--scenario", action="append", required=True, help="repeatable; JSON object, list, or file")
    p.add_argument("--grid", default=",".join(("1", "1.5", "2", "3", "inf")))
    common(p, 200)
    p.add_argument("--output", help="CSV table path (default: stdout)")
    p.add_argument("--summary", help="JSON summary path (default: stderr)")
    p.add_argument("--reproducers", help="directory for violation reproducer JSON files")
    p.add_argument("--include-heuristic", action="store_true", help="estimate cells without exact norms too")

    p = sub.add_parser("scenario", help="materialise a scenario matrix")
    p.add_argument("--scenario", required=True)
    output(p)
    return parser


# ---------------------------------------------------------------------------


def _load_json_arg(text: str):
    path = Path(text)
    if not text.lstrip().startswith(("{", "[")) and path.exists():
        text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON: {exc}") from None


def _matrix(args) -> tuple[np.ndarray, dict]:
    if args.matrix:
        try:
            A = load_matrix_csv(args.matrix)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read matrix {args.matrix}: {exc}") from None
        src = {"matrix": str(args.matrix)}
    else:
        spec = ScenarioSpec.parse(_load_json_arg(args.scenario))
        A = scenario_matrix(spec)
        src = {"scenario": spec.to_dict()}
    if getattr(args, "transpose", False):
        A = A.T.copy()
        args.p, args.q = conjugate(args.q), conjugate(args.p)
        src["transposed"] = True
    return as_matrix(A), src


def _model(text: str) -> EntryModel:
    try:
        return EntryModel.parse(text)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad entry model: {exc}") from None


def _envelope(command: str, args, src: dict | None, payload: dict) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "command": command}
    if src is not None:
        out["source"] = src
    if hasattr(args, "p") and args.p is not None:
        out["p"], out["q"] = format_exponent(args.p), format_exponent(args.q)
    out.update(payload)
    return out


def _clean(obj):
    """Replace non-finite floats by None so the output is strict JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(args, document: dict, csv_rows: list[dict] | None = None) -> None:
    if args.format == "csv" and csv_rows is not None:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(csv_rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(csv_rows)
        text = buf.getvalue()
    else:
        text = json.dumps(_clean(document), indent=2, sort_keys=False) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_norm(args) -> int:
    A, src = _matrix(args)
    seed = _default_seed() if args.seed is None else args.seed
    res = op_norm(A, args.p, args.q, restarts=args.restarts, max_iter=args.max_iter, seed=seed)
    doc = _envelope("norm", args, src, res.to_dict())
    row = {"p": format_exponent(args.p), "q": format_exponent(args.q), "value": res.value, "kind": res.kind}
    _emit(args, doc, [row])
    return EXIT_OK


def _cmd_bounds(args) -> int:
    A, src = _matrix(args)
    model = _model(args.model)
    seed = _default_seed() if args.seed is None else args.seed
    formulas = B.FORMULAS if args.formula == "all" else (args.formula,)
    if args.formula != "all" and args.formula not in B.FORMULAS:
        raise UsageError(f"unknown formula {args.formula!r}; expected one of {', '.join(B.FORMULAS)}")
    psi = {"r": model.r, "K": model.K, "L": model.L} if model.kind == WEIBULL else {}
    reports, skipped = [], []
    for name in formulas:
        try:
            rep = B.evaluate(
                name, A, args.p, args.q, model=model, emax=args.emax, trials=args.trials, seed=seed,
                calibration=args.calibration, **psi,
            )
        except B.RegimeError as exc:
            if args.formula != "all":
                raise
            skipped.append({"formula": name, "reason": str(exc)})
            continue
        reports.append(rep.to_dict())
    doc = _envelope("bounds", args, src, {"model": model.to_dict(), "reports": reports, "skipped": skipped})
    rows = [
        {"p": r["p"], "q": r["q"], "formula": r["formula"], "value": r["value"], "certificate": _certificate(r)}
        for r in reports
    ]
    _emit(args, doc, rows)
    return EXIT_OK


def _certificate(report: dict) -> str:
    kinds = set(report["certificates"].values())
    return "Exact" if kinds <= {"Exact"} else "/".join(sorted(kinds))


def _cmd_estimate(args) -> int:
    A, src = _matrix(args)
    model = _model(args.model)
    seed = _default_seed() if args.seed is None else args.seed
    est = mc_norm_estimate(
        A, model, args.p, args.q, args.trials, seed, allow_heuristic=args.allow_heuristic, workers=args.threads
    )
    payload = {"model": model.to_dict(), "seed": seed, **est.to_dict(include_samples=args.samples)}
    row = {k: payload[k] for k in ("mean", "stderr", "trials", "norm_certificate")}
    _emit(args, _envelope("estimate", args, src, payload), [row])
    return EXIT_OK


def _cmd_tail(args) -> int:
    A, src = _matrix(args)
    model = _model(args.model)
    seed = _default_seed() if args.seed is None else args.seed
    try:
        thresholds = [float(t) for t in args.thresholds.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad thresholds {args.thresholds!r}") from None
    table = tail_experiment(A, model, args.p, args.q, args.trials, thresholds, seed, reference=args.reference)
    if args.dat:
        table.write_dat(args.dat)
    payload = {"model": model.to_dict(), "seed": seed, "trials": args.trials, "reference": args.reference, **table.to_dict()}
    _emit(args, _envelope("tail", args, src, payload), table.rows)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    model = _model(args.model)
    seed = _default_seed() if args.seed is None else args.seed
    specs = []
    for text in args.scenario:
        loaded = _load_json_arg(text)
        specs.extend(loaded if isinstance(loaded, list) else [loaded])
    scenarios = []
    for i, raw in enumerate(specs):
        spec = ScenarioSpec.parse(raw)
        name = raw.get("name", f"{spec.kind}_{i}") if isinstance(raw, dict) else f"{spec.kind}_{i}"
        scenarios.append((name, scenario_matrix(spec)))
    grid = pq_grid(g.strip() for g in args.grid.split(","))
    result = sandwich_sweep(
        scenarios, model, grid, args.trials, seed, exact_only=not args.include_heuristic, reproducer_dir=args.reproducers
    )
    if args.output:
        result.write_csv(args.output)
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(result.rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(result.rows)
        sys.stdout.write(buf.getvalue())
    summary = _clean({"schema_version": SCHEMA_VERSION, "command": "sweep", "model": model.to_dict(), "seed": seed, **result.summary})
    text = json.dumps(summary, indent=2) + "\n"
    if args.summary:
        Path(args.summary).write_text(text)
    else:
        sys.stderr.write(text)
    return EXIT_VIOLATION if result.summary["violations"] else EXIT_OK


def _cmd_scenario(args) -> int:
    spec = ScenarioSpec.parse(_load_json_arg(args.scenario))
    A = scenario_matrix(spec)
    if args.format == "csv":
        buf = io.StringIO()
        np.savetxt(buf, A, delimiter=",", fmt="%.17g")
        text = buf.getvalue()
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    doc = {"schema_version": SCHEMA_VERSION, "command": "scenario", "scenario": spec.to_dict(), "shape": list(A.shape), "matrix": A.tolist()}
    args.format = "json"
    _emit(args, doc)
    return EXIT_OK


COMMANDS = {
    "norm": _cmd_norm,
    "bounds": _cmd_bounds,
    "estimate": _cmd_estimate,
    "tail": _cmd_tail,
    "sweep": _cmd_sweep,
    "scenario": _cmd_scenario,
}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ExponentDomainError, B.RegimeError, NormEngineError, OSError, ValueError, KeyError) as exc:
        message = f"missing scenario parameter {exc}" if isinstance(exc, KeyError) else str(exc)
        print(f"normlab {args.command}: error: {message}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
