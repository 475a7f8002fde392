"""Batch command-line interface.

Results go to stdout as JSON (or CSV for sweeps without ``--out``), logs go
to stderr. Every file written through ``--out`` or ``--svg`` gets a
``<file>.manifest.json`` sidecar. Exit codes: 0 success, 2 invalid input,
3 numerical failure, 4 sampling abort.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import warnings
from pathlib import Path

from . import __version__, bounds, io, mpc, scenario, svg, validation
from .errors import DomainError, NumericalFailure, SamplingAbort

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_SAMPLING = 4

log = logging.getLogger("scenariocert")


def _int_list(text):
    """Parse ``"a:b"`` (inclusive range) or ``"a,b,c"``."""
    try:
        if ":" in text:
            lo, hi = (int(p) for p in text.split(":"))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a:b' or a comma list, got {text!r}") from None


def _grid(start, step, end):
    if not step > 0 or end < start:
        raise DomainError("grid needs step > 0 and end >= start")
    count = int((end - start) / step + 1e-9) + 1
    return [start + i * step for i in range(count)]


def _emit(obj):
    sys.stdout.write(io.dumps_json(obj) + "\n")


def _manifest(args, digest="", seed=None):
    return io.RunManifest(command=list(args.argv), config_digest=digest, seed=seed,
                          version=__version__, started=args.started)


def _load_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None


# -- bounds -----------------------------------------------------------------

# numbered names kept as aliases for compatibility with existing scripts
BOUND_ALIASES = {"theorem1": "a-priori", "theorem2": "posteriori", "theorem3": "interval"}
BOUND_KINDS = ("a-priori", "posteriori", "interval", "testset")


def cmd_bounds(args):
    kind = BOUND_ALIASES.get(args.kind, args.kind)
    if kind == "a-priori":
        res = bounds.binomial_epsilon(args.n, args.beta, args.dim)
    elif kind == "posteriori":
        res = bounds.epsilon_posteriori(args.n, args.beta, args.q)
    elif kind == "interval":
        res = bounds.epsilon_interval(args.n, args.beta, args.q)
    else:
        res = bounds.testset_epsilon(args.n, args.beta, args.violations)
    _emit(res.to_dict())
    return EXIT_OK


# -- solve ------------------------------------------------------------------

def cmd_solve(args):
    samples = io.read_samples_csv(args.input, args.column)
    if args.kind == "robust":
        sol, res = scenario.certify_robust(samples, args.beta)
        _emit({"y_star": sol.y_star, "argmax_id": sol.argmax_id, "q_star": 0, "s_star": 1,
               "n": len(samples), "certificate": res.to_dict()})
        return EXIT_OK
    if (args.rho is None) == (args.target_q is None):
        raise DomainError("relaxed needs exactly one of --rho and --target-q")
    rho = args.rho if args.rho is not None else scenario.rho_from_target(args.target_q)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", scenario.NonAccumulationWarning)
        sol, res = scenario.certify_relaxed(samples, rho, args.beta, args.theorem)
    for w in caught:
        log.warning("%s", w.message)
    _emit({"y_star": sol.y_star, "rho": sol.rho, "q_star": sol.q_star, "s_star": sol.s_star,
           "objective": sol.objective, "n": len(samples),
           "empirical_violation": scenario.empirical_violation(samples, sol.y_star),
           "certificate": res.to_dict()})
    if args.out:
        io.write_slack_csv(args.out, samples, sol)
        _manifest(args, io.file_digest(args.input)).write_for(args.out)
    return EXIT_OK


# -- sweep ------------------------------------------------------------------

def _write_points(args, points, digest, series, xlabel, log_x=False):
    if args.out:
        io.write_tradeoff_csv(args.out, points)
        _manifest(args, digest).write_for(args.out)
        _emit({"rows": len(points), "out": str(args.out)})
    else:
        io.write_tradeoff_csv(sys.stdout, points)
    if args.svg:
        svg.write_lines(args.svg, series, title=f"sweep {args.kind}", xlabel=xlabel,
                        ylabel="violation probability" if args.kind != "perf-k" else "metric bound",
                        log_x=log_x)
        _manifest(args, digest).write_for(args.svg)


def cmd_sweep(args):
    digest = io.file_digest(args.input)
    if args.kind == "rho":
        if not args.targets:
            raise DomainError("--targets is required for sweep rho")
        samples = io.read_samples_csv(args.input, args.column)
        points = scenario.sweep_rho(samples, args.targets, args.beta, args.theorem)
        series = [("scenario bound", [p.y_value for p in points], [p.epsilon for p in points]),
                  ("empirical", [p.y_value for p in points],
                   [p.empirical_violation for p in points])]
        _write_points(args, points, digest, series, "budget y*")
    elif args.kind == "budget":
        samples = io.read_samples_csv(args.input, args.column)
        if args.grid:
            grid = [float(g) for g in args.grid.split(",") if g.strip()]
        elif None in (args.grid_start, args.grid_step, args.grid_end):
            raise DomainError("sweep budget needs --grid or --grid-start/--grid-step/--grid-end")
        else:
            grid = _grid(args.grid_start, args.grid_step, args.grid_end)
        points = scenario.sweep_budget(samples, grid, args.beta)
        series = [("test-set bound", [p.control for p in points], [p.epsilon for p in points]),
                  ("empirical", [p.control for p in points],
                   [p.empirical_violation for p in points])]
        _write_points(args, points, digest, series, "budget n_a")
    else:
        by_k = io.trace_by_budget(io.read_trace_csv(args.input))
        if args.k:
            missing = sorted(set(args.k) - set(by_k))
            if missing:
                raise DomainError(f"trace has no rows for k = {missing[:5]}")
            by_k = {k: by_k[k] for k in args.k}
        points = scenario.sweep_metric_budgets(by_k, args.beta)
        series = [("metric bound", [p.control for p in points], [p.y_value for p in points])]
        _write_points(args, points, digest, series, "iterations k")
    return EXIT_OK


# -- mpc --------------------------------------------------------------------

def _mpc_setup(args):
    data = _load_json(args.config) if args.config else {}
    config, settings, seed = mpc.load_config(data)
    if args.seed is not None:
        seed = args.seed
    return config, settings, int(seed or 0)


def cmd_mpc(args):
    config, settings, seed = _mpc_setup(args)
    digest = mpc.config_hash(config, settings)
    if args.kind == "generate":
        ds = mpc.sample_dataset(config, settings, args.samples, seed, workers=args.workers)
        io.write_dataset_csv(args.out, ds)
        _manifest(args, digest, seed).write_for(args.out)
        iters = ds.iterations
        _emit({"samples": len(ds), "candidates": ds.candidates,
               "acceptance_rate": len(ds) / ds.candidates, "config_hash": digest,
               "seed": seed, "max_iterations": float(iters.max()),
               "mean_iterations": float(iters.mean()), "out": str(args.out)})
        return EXIT_OK
    ds = io.read_dataset_csv(args.dataset, digest, seed)
    rows = mpc.record_metrics(config, settings, ds, args.k, workers=args.workers)
    io.write_trace_csv(args.out, rows)
    _manifest(args, digest, seed).write_for(args.out)
    _emit({"samples": len(ds), "budgets": len(set(args.k)), "rows": len(rows),
           "out": str(args.out)})
    return EXIT_OK


# -- validate ---------------------------------------------------------------

def cmd_validate(args):
    data = _load_json(args.spec)
    spec = validation.SyntheticSpec.from_dict(data)
    seed = spec.seed if args.seed is None else args.seed
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", scenario.NonAccumulationWarning)
        report = validation.pac_monte_carlo(spec, args.n, args.beta, args.mode, args.rho,
                                            args.repetitions, seed, args.workers)
    for w in caught:
        log.warning("%s", w.message)
    out = {**report.to_dict(), "within_band": report.within_band, "seed": seed}
    _emit(out)
    if args.out:
        Path(args.out).write_text(io.dumps_json(out) + "\n", encoding="utf-8")
        digest = hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()
        _manifest(args, digest, seed).write_for(args.out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="scenariocert",
                                     description="Scenario-based risk certificates.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="evaluate a risk bound")
    p.add_argument("kind", choices=(*BOUND_KINDS, *BOUND_ALIASES))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--q", type=int, default=0)
    p.add_argument("--violations", type=int, default=0)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("solve", help="solve and certify a scenario program")
    p.add_argument("kind", choices=("robust", "relaxed"))
    p.add_argument("--input", required=True)
    p.add_argument("--column", default=None, help="value column (default: auto)")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--rho", type=float)
    p.add_argument("--target-q", type=int)
    p.add_argument("--bound", "--theorem", dest="theorem", choices=("posteriori", "interval"),
                   default="posteriori")
    p.add_argument("--out", help="per-sample slack CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="trade-off curves")
    p.add_argument("kind", choices=("rho", "budget", "perf-k"))
    p.add_argument("--input", required=True)
    p.add_argument("--column", default=None)
    p.add_argument("--beta", type=float, default=1e-4)
    p.add_argument("--targets", type=_int_list)
    p.add_argument("--bound", "--theorem", dest="theorem", choices=("posteriori", "interval"),
                   default="posteriori")
    p.add_argument("--grid", help="comma-separated budgets")
    p.add_argument("--grid-start", type=float)
    p.add_argument("--grid-step", type=float)
    p.add_argument("--grid-end", type=float)
    p.add_argument("--k", type=_int_list)
    p.add_argument("--out")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mpc", help="MPC sampling pipeline")
    p.add_argument("kind", choices=("generate", "metrics"))
    p.add_argument("--config")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dataset")
    p.add_argument("--k", type=_int_list, default=list(range(1, 51)))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mpc)

    p = sub.add_parser("validate", help="Monte-Carlo coverage of a certificate")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--mode", choices=validation.MODES, default="robust")
    p.add_argument("--rho", type=float)
    p.add_argument("--repetitions", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = ["scenariocert", *argv]
    args.started = io.now_utc()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s: %(message)s")
    if args.command == "mpc" and args.kind == "metrics" and not args.dataset:
        parser.error("mpc metrics needs --dataset")
    try:
        return args.func(args)
    except (DomainError, OSError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    except NumericalFailure as exc:
        return _fail(f"numerical failure: {exc}", EXIT_NUMERICAL)
    except SamplingAbort as exc:
        return _fail(f"sampling aborted: {exc}", EXIT_SAMPLING)


def _fail(message, code):
    print(f"scenariocert: error: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
