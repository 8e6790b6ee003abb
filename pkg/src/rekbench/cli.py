"""Benchmark command-line front end.

Subcommands: gen (problem bundles), solve (one run, JSON row), bench
(method x problem x trial sweep, CSV + summary), verify (bound checks,
JSON report), constants (matrix constants + rates, JSON).

Exit codes: 0 success, 1 usage error, 2 I/O or parse error, 3
non-convergence under --strict.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import rng as rngmod
from .linalg import build_norm_cache, direct_least_squares, OracleTooLargeError
from .problems import (
    LsProblem,
    MatrixMarketError,
    gen_gaussian,
    gen_parallel_beam,
    load_problem,
    make_inconsistent_problem,
    read_matrix_market,
    save_problem,
)
from .solvers import (
    SAMPLING_KINDS,
    SolverKind,
    StopConfig,
    solve,
)
from .theory import (
    ConstantsTooLargeError,
    compute_constants,
    empirical_contraction,
    rate_thm1,
    rates_all,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NOT_CONVERGED = 3


def _build_parser():
    parser = argparse.ArgumentParser(prog="rekbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a problem bundle")
    gen_sub = gen.add_subparsers(dest="generator", required=True)
    gg = gen_sub.add_parser("gaussian")
    gg.add_argument("--m", type=int, required=True)
    gg.add_argument("--n", type=int, required=True)
    gg.add_argument("--seed", type=int, required=True)
    gg.add_argument("--inconsistent", action="store_true")
    gg.add_argument("--out", required=True)
    gt = gen_sub.add_parser("tomo")
    gt.add_argument("--side", type=int, required=True)
    gt.add_argument("--angles", type=int, required=True)
    gt.add_argument("--detectors", type=int, required=True)
    gt.add_argument("--seed", type=int, required=True)
    gt.add_argument("--out", required=True)
    gm = gen_sub.add_parser("from-mtx")
    gm.add_argument("--path", required=True)
    gm.add_argument("--seed", type=int, required=True)
    gm.add_argument("--out", required=True)

    sv = sub.add_parser("solve", help="run one method on one problem")
    sv.add_argument("--method", required=True)
    sv.add_argument("--problem", required=True)
    sv.add_argument("--tol", type=float, default=1e-5)
    sv.add_argument("--seed", type=int, default=0)
    sv.add_argument("--fraction", type=float, default=None)
    sv.add_argument("--max-iters", type=int, default=None)
    sv.add_argument("--check-every", type=int, default=None)
    sv.add_argument("--history", default=None)
    sv.add_argument("--strict", action="store_true")

    bn = sub.add_parser("bench", help="method x problem x trial sweep")
    bn.add_argument("--config", default=None, help="JSON BenchSpec file")
    bn.add_argument("--methods", default=None, help="comma-separated kinds")
    bn.add_argument("--problems", default=None, help="comma-separated bundle dirs")
    bn.add_argument("--trials", type=int, default=5)
    bn.add_argument("--tol", type=float, default=1e-5)
    bn.add_argument("--fraction", type=float, default=0.01)
    bn.add_argument("--max-iters", type=int, default=None)
    bn.add_argument("--check-every", type=int, default=None)
    bn.add_argument("--seed", type=int, default=0)
    bn.add_argument("--jobs", type=int, default=1)
    bn.add_argument("--out", required=True)
    bn.add_argument("--summary-out", default=None)

    vf = sub.add_parser("verify", help="bound-verification report")
    vf.add_argument("--problem", required=True)
    vf.add_argument("--trials", type=int, default=200)
    vf.add_argument("--steps", type=int, default=20)
    vf.add_argument("--seed", type=int, default=0)
    vf.add_argument("--rate-only", action="store_true")

    ct = sub.add_parser("constants", help="matrix constants and rates")
    ct.add_argument("--matrix", default=None, help=".mtx file")
    ct.add_argument("--problem", default=None, help="problem bundle dir")
    ct.add_argument("--sample", type=int, default=None, help="approximate pairwise scan size")
    return parser


def _load(path):
    try:
        return load_problem(path)
    except (OSError, MatrixMarketError, ValueError) as exc:
        raise _IoFailure(str(exc)) from exc


class _IoFailure(Exception):
    pass


def _cmd_gen(args):
    if args.generator == "gaussian":
        A = gen_gaussian(args.m, args.n, args.seed)
        if args.inconsistent:
            problem = make_inconsistent_problem(A, args.seed)
        else:
            g = rngmod.stream(args.seed, rngmod.method_tag("gen_consistent_b"))
            b = A.matvec(g.standard_normal(args.n))
            x_star = direct_least_squares(A, b)
            problem = LsProblem(
                A=A,
                b=b,
                x_star=x_star,
                r=b - A.matvec(x_star),
                label=f"gaussian-{args.m}x{args.n}-seed{args.seed}",
                meta={"seed": args.seed, "generator": "gen_gaussian"},
            )
    elif args.generator == "tomo":
        problem = gen_parallel_beam(args.side, args.angles, args.detectors, args.seed)
    else:
        A = read_matrix_market(args.path)
        problem = make_inconsistent_problem(A, args.seed)
    save_problem(problem, args.out)
    print(json.dumps({"out": args.out, "label": problem.label, "m": problem.A.rows, "n": problem.A.cols}))
    return EXIT_OK


def _result_row(record, problem, method, trial_seed):
    m, n = problem.A.shape
    return {
        "method": method,
        "problem": problem.label,
        "m": m,
        "n": n,
        "trial_seed": trial_seed,
        "iters": record.iters,
        "wall_time_ms": record.wall_time * 1000.0,
        "rse": record.final_rse,
        "primary_residual": record.final_primary_residual,
        "dual_residual": record.final_dual_residual,
        "converged": record.converged,
    }


def _parse_kind(name):
    try:
        return SolverKind(name)
    except ValueError:
        raise _UsageFailure(f"unknown method {name!r}") from None


class _UsageFailure(Exception):
    pass


def _cmd_solve(args):
    kind = _parse_kind(args.method)
    problem = _load(args.problem)
    config = StopConfig(
        tol=args.tol,
        check_every=args.check_every,
        max_iters=args.max_iters,
        track_history=args.history is not None,
    )
    if args.fraction is not None:
        if kind in SAMPLING_KINDS:
            config.fraction = args.fraction
        else:
            print(f"warning: --fraction ignored for {kind.value}", file=sys.stderr)
    record = solve(kind, problem, config, args.seed)
    print(json.dumps(_result_row(record, problem, kind.value, args.seed)))
    if args.history is not None:
        with open(args.history, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "primary_residual", "dual_residual", "rse"])
            for row in record.history:
                writer.writerow(row)
    if args.strict and not record.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _cmd_bench(args):
    spec = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="ascii") as fh:
                spec = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise _IoFailure(str(exc)) from exc
    methods = spec.get("methods") or (args.methods.split(",") if args.methods else None)
    problems = spec.get("problems") or (args.problems.split(",") if args.problems else None)
    if not methods or not problems:
        raise _UsageFailure("bench needs --methods and --problems (or a config file)")
    kinds = [_parse_kind(name.strip()) for name in methods]
    trials = int(spec.get("trials", args.trials))
    base_seed = int(spec.get("seed", args.seed))
    config_template = dict(
        tol=float(spec.get("tol", args.tol)),
        check_every=spec.get("check_every", args.check_every),
        max_iters=spec.get("max_iters", args.max_iters),
        fraction=float(spec.get("fraction", args.fraction)),
    )
    loaded = [_load(path.strip()) for path in problems]

    cells = [
        (kind, pidx, trial)
        for kind in kinds
        for pidx in range(len(loaded))
        for trial in range(trials)
    ]

    def run_cell(cell):
        kind, pidx, trial = cell
        problem = loaded[pidx]
        seed = rngmod.cell_seed(base_seed, kind.value, pidx, trial)
        record = solve(kind, problem, StopConfig(**config_template), seed)
        return _result_row(record, problem, kind.value, seed)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(run_cell, cells))
    else:
        rows = [run_cell(cell) for cell in cells]
    rows.sort(key=lambda r: (r["method"], r["problem"], r["trial_seed"]))

    fieldnames = list(rows[0].keys())
    with open(args.out, "w", newline="", encoding="ascii") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)

    summary_path = args.summary_out or spec.get("summary_out")
    if summary_path:
        groups = {}
        for row in rows:
            groups.setdefault((row["method"], row["problem"]), []).append(row)
        with open(summary_path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "problem", "mean_iters", "mean_wall_time_ms", "mean_rse"])
            for (method, label), cell_rows in sorted(groups.items()):
                rses = [r["rse"] for r in cell_rows if r["rse"] is not None]
                writer.writerow(
                    [
                        method,
                        label,
                        statistics.mean(r["iters"] for r in cell_rows),
                        statistics.mean(r["wall_time_ms"] for r in cell_rows),
                        statistics.mean(rses) if rses else "",
                    ]
                )
    if not all(row["converged"] for row in rows):
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _constants_payload(A, sample=None):
    cache = build_norm_cache(A)
    try:
        consts = compute_constants(A, cache, sample=sample)
    except ConstantsTooLargeError as exc:
        return None, {"error": str(exc), "note": "re-run with --sample for an approximate scan"}
    rates = rates_all(consts, cache)
    payload = {
        "constants": {k: getattr(consts, k) for k in consts.__dataclass_fields__},
        "rates": {
            k: getattr(rates, k)
            for k in rates.__dataclass_fields__
            if k not in ("raw", "vacuous")
        },
        "vacuous": list(rates.vacuous),
        "frob_sq": cache.frob_sq,
    }
    return (consts, rates, cache), payload


def _cmd_constants(args):
    if bool(args.matrix) == bool(args.problem):
        raise _UsageFailure("constants needs exactly one of --matrix / --problem")
    try:
        A = read_matrix_market(args.matrix) if args.matrix else _load(args.problem).A
    except (OSError, MatrixMarketError) as exc:
        raise _IoFailure(str(exc)) from exc
    _, payload = _constants_payload(A, sample=args.sample)
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def _cmd_verify(args):
    problem = _load(args.problem)
    computed, payload = _constants_payload(problem.A)
    report = {"problem": problem.label, **payload}
    if computed is None:
        print(json.dumps(report, indent=2))
        return EXIT_IO
    consts, rates, cache = computed
    checks = {}
    if not args.rate_only:
        thm1 = rate_thm1(consts, cache)
        means, errs = empirical_contraction(
            SolverKind.GPROJ, problem, args.trials, args.steps, args.seed
        )
        ok = np.all((means <= thm1 + 3 * errs) | np.isnan(means))
        checks["thm1_gproj"] = {
            "bound": thm1,
            "mean_ratios": means.tolist(),
            "stderrs": errs.tolist(),
            "pass": bool(ok),
        }
        thm3 = rates.thm3_beta_hat
        means3, _ = empirical_contraction(SolverKind.SPROJ, problem, 1, args.steps, args.seed)
        ok3 = np.all((means3 <= thm3 + 1e-12) | np.isnan(means3))
        checks["thm3_sproj"] = {"bound": thm3, "ratios": means3.tolist(), "pass": bool(ok3)}
    report["checks"] = checks
    report["pass"] = all(c["pass"] for c in checks.values()) if checks else True
    print(json.dumps(report, indent=2))
    return EXIT_OK if report["pass"] else EXIT_NOT_CONVERGED


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    handlers = {
        "gen": _cmd_gen,
        "solve": _cmd_solve,
        "bench": _cmd_bench,
        "verify": _cmd_verify,
        "constants": _cmd_constants,
    }
    try:
        return handlers[args.command](args)
    except _UsageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (_IoFailure, OracleTooLargeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
