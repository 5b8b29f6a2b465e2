"""Command-line front end: training benchmarks and the Markov-chain lab.

Two subcommands:

``acfcd train``
    Fits one of the four solvers over a grid of regularization values,
    optionally with both selection rules, and appends one CSV row per
    (value, selection) run.  With ``--selection both`` each adaptive row
    also reports its speed-up over the uniform baseline.  Grid points run
    concurrently; the ``ACF_THREADS`` environment variable caps the worker
    count.

``acfcd markov``
    Draws a Gaussian-kernel instance, balances the per-coordinate progress
    rates, scans the rate ratio along the n curves through the balanced
    distribution, and writes the (i, t, ratio, stderr) table.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .data import LibsvmParseError, parse_libsvm
from .markov import (
    DEFAULT_T_GRID,
    ChainTerminated,
    balance_rprop,
    gamma_scan,
    generate_rbf_instance,
)
from .solvers import NumericalFailure, SolverConfig, make_state, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

TRAIN_COLUMNS = [
    "problem",
    "dataset",
    "param",
    "selection",
    "epsilon",
    "seed",
    "iterations",
    "operations",
    "seconds",
    "objective",
    "converged",
    "speedup_iterations",
    "speedup_operations",
]

MARKOV_COLUMNS = ["i", "t", "ratio", "stderr"]


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; this front end reserves 2 for data
    errors, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def _value_grid(text: str) -> list[float]:
    values = [float(tok) for tok in text.split(",") if tok.strip()]
    if not values:
        raise argparse.ArgumentTypeError("empty value list")
    if any(not v > 0 for v in values):
        raise argparse.ArgumentTypeError("values must be positive")
    return values


def _float_grid(text: str) -> list[float]:
    values = [float(tok) for tok in text.split(",") if tok.strip()]
    if not values:
        raise argparse.ArgumentTypeError("empty value list")
    return values


def _dimension(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError("need at least 2 coordinates")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="acfcd", description=__doc__.split("\n", 1)[0])
    parser.add_argument("--version", action="version", version=f"acfcd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="fit a solver and benchmark selection rules")
    tr.add_argument(
        "--problem",
        required=True,
        choices=["lasso", "svm", "logreg", "mcsvm"],
        help="which regularized problem to solve",
    )
    tr.add_argument("--data", required=True, help="dataset file (libsvm text format)")
    tr.add_argument(
        "--lambda",
        "-C",
        dest="reg_grid",
        type=_value_grid,
        required=True,
        metavar="VALUES",
        help="regularization value or comma-separated grid",
    )
    tr.add_argument("--epsilon", type=_positive_float, default=0.01,
                    help="stopping tolerance on the maximal KKT violation")
    tr.add_argument(
        "--selection",
        choices=["uniform", "acf", "both"],
        default="acf",
        help="coordinate selection rule; 'both' benchmarks acf against uniform",
    )
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--max-epochs", type=_nonnegative_int, default=1000)
    tr.add_argument("--out", help="CSV output path (default: stdout)")
    tr.add_argument(
        "--model-out",
        help="save the fitted solution as .npz (single value, single selection only)",
    )
    tr.set_defaults(func=cmd_train)

    mk = sub.add_parser("markov", help="balance a CD chain and scan rate curves")
    mk.add_argument("--n", type=_dimension, default=4, help="instance dimension (>= 2)")
    mk.add_argument("--sigma", type=_positive_float, default=3.0,
                    help="kernel bandwidth of the instance generator")
    mk.add_argument("--seed", type=int, default=0)
    mk.add_argument("--rel-tol", type=_positive_float, default=1e-4,
                    help="relative precision of every rate estimate")
    mk.add_argument(
        "--t-grid",
        type=_float_grid,
        default=list(DEFAULT_T_GRID),
        metavar="VALUES",
        help="comma-separated curve exponents (default: the standard 9 points)",
    )
    mk.add_argument("--out", help="CSV output path (default: stdout)")
    mk.add_argument("--instance-out",
                    help="also save the generated matrix as whitespace text")
    mk.set_defaults(func=cmd_markov)
    return parser


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, columns, rows) -> int:
    def emit(fileobj):
        writer = csv.writer(fileobj, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])

    if path is None:
        emit(sys.stdout)
        return EXIT_OK
    try:
        with open(path, "w", newline="") as fh:
            emit(fh)
    except OSError as exc:
        print(f"acfcd: cannot write {path}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def _worker_count(n_jobs: int) -> int:
    cap = os.environ.get("ACF_THREADS")
    if cap is not None:
        limit = int(cap)
        if limit < 1:
            raise ValueError("ACF_THREADS must be a positive integer")
    else:
        limit = os.cpu_count() or 1
    return max(1, min(n_jobs, limit))


def _save_model(path: str, problem: str, solution) -> None:
    if problem == "lasso":
        arrays = {"weights": solution}
    elif problem == "mcsvm":
        arrays = {"alpha": solution[0], "class_weights": solution[1]}
    else:
        arrays = {"alpha": solution[0], "weights": solution[1]}
    np.savez(path, **arrays)


def cmd_train(args) -> int:
    selections = ["uniform", "acf"] if args.selection == "both" else [args.selection]
    if args.model_out and (len(args.reg_grid) > 1 or len(selections) > 1):
        print(
            "acfcd: --model-out needs a single regularization value and a "
            "single selection rule",
            file=sys.stderr,
        )
        return EXIT_USAGE

    try:
        with open(args.data, "r") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"acfcd: cannot read {args.data}: {exc}", file=sys.stderr)
        return EXIT_DATA
    mode = "regression" if args.problem == "lasso" else "classification"
    try:
        dataset = parse_libsvm(text, mode=mode)
    except LibsvmParseError as exc:
        print(f"acfcd: {args.data}:{exc.lineno}: {exc}", file=sys.stderr)
        return EXIT_DATA

    def config(reg: float) -> SolverConfig:
        return SolverConfig(
            reg=reg,
            epsilon=args.epsilon,
            selection="uniform",  # placeholder, set per job below
            max_epochs=args.max_epochs,
            seed=args.seed,
        )

    try:
        make_state(dataset, args.problem, config(args.reg_grid[0]))
    except ValueError as exc:
        print(f"acfcd: {args.data}: {exc}", file=sys.stderr)
        return EXIT_DATA

    jobs = []
    for reg in args.reg_grid:
        for selection in selections:
            cfg = config(reg)
            cfg.selection = selection
            jobs.append((reg, selection, cfg))

    try:
        try:
            workers = _worker_count(len(jobs))
        except ValueError as exc:
            print(f"acfcd: {exc}", file=sys.stderr)
            return EXIT_USAGE
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda job: train(dataset, args.problem, job[2]), jobs)
            )
    except NumericalFailure as exc:
        print(f"acfcd: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    by_key = {
        (reg, sel): res for (reg, sel, _), res in zip(jobs, results)
    }
    rows = []
    for (reg, selection, _), res in zip(jobs, results):
        speedup_iters = ""
        speedup_ops = ""
        if selection == "acf" and (reg, "uniform") in by_key:
            base = by_key[(reg, "uniform")]
            speedup_iters = base.iterations / res.iterations if res.iterations else ""
            speedup_ops = base.operations / res.operations if res.operations else ""
        rows.append(
            [
                args.problem,
                args.data,
                float(reg),
                selection,
                float(args.epsilon),
                args.seed,
                res.iterations,
                res.operations,
                float(res.seconds),
                float(res.objective),
                res.converged,
                speedup_iters,
                speedup_ops,
            ]
        )

    status = _write_csv(args.out, TRAIN_COLUMNS, rows)
    if status != EXIT_OK:
        return status
    if args.model_out:
        try:
            _save_model(args.model_out, args.problem, results[0].solution)
        except OSError as exc:
            print(f"acfcd: cannot write {args.model_out}: {exc}", file=sys.stderr)
            return EXIT_DATA
    return EXIT_OK


def cmd_markov(args) -> int:
    try:
        instance = generate_rbf_instance(args.n, args.sigma, seed=args.seed)
    except RuntimeError as exc:
        print(f"acfcd: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.instance_out:
        try:
            with open(args.instance_out, "w") as fh:
                fh.write("\n".join(instance.to_text_lines()) + "\n")
        except OSError as exc:
            print(f"acfcd: cannot write {args.instance_out}: {exc}", file=sys.stderr)
            return EXIT_DATA

    balance_seed, scan_seed = np.random.SeedSequence(args.seed).spawn(2)
    try:
        balance = balance_rprop(instance, seed=balance_seed, tight_tol=args.rel_tol)
        if balance.terminated:
            print(
                "acfcd: chain terminated at the exact optimum; no rates to scan",
                file=sys.stderr,
            )
            return EXIT_NUMERIC
        points = gamma_scan(
            instance,
            balance.pi,
            t_grid=args.t_grid,
            seed=scan_seed,
            rel_tol=args.rel_tol,
        )
    except ChainTerminated as exc:
        print(f"acfcd: chain terminated at the exact optimum: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    pi_text = " ".join(f"{v:.6f}" for v in balance.pi)
    print(
        f"acfcd: balanced pi = [{pi_text}] "
        f"(residual {balance.residual:.2e}, converged={balance.converged})",
        file=sys.stderr,
    )
    rows = [[p.i, float(p.t), float(p.ratio), float(p.stderr)] for p in points]
    return _write_csv(args.out, MARKOV_COLUMNS, rows)


def _glue_dashed_values(argv: list[str]) -> list[str]:
    """Rewrite ['--t-grid', '-1,0,1'] as ['--t-grid=-1,0,1'].

    argparse only recognizes a leading dash as a value when it parses as a
    bare negative number, which comma grids don't.
    """
    out = []
    i = 0
    while i < len(argv):
        if argv[i] == "--t-grid" and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"--t-grid={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(_glue_dashed_values(list(argv)))
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
