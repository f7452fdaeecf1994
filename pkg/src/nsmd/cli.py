"""Command-line entry point: ``nsmd synth|solve|bench|compare|verify``.

Exit codes: 0 success, 1 a run or check failed, 2 bad configuration or input.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np

from . import aapb, baselines
from .aapb import ConfigError
from .config import OUT_DIR_ENV, ExperimentConfig, load_config
from .datagen import SynthSpec, gen_synthetic, zero_fraction
from .experiment import compare_models, run_experiment
from .io import MatrixParseError, load_matrix, save_matrix
from .matrix import InvalidInputError
from .verify import CHECKS, verify_properties

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("nsmd")


def _config_from_args(args):
    config = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        config.seeds = (args.seed,)
    if args.workers is not None:
        config.workers = args.workers
    config.strict_iters = args.strict_iters
    return config


def cmd_synth(args):
    spec = SynthSpec(m=args.m, rbar=args.rbar, p=args.p, seed=args.seed)
    M = gen_synthetic(spec)
    save_matrix(args.output, M, args.format)
    print(f"{spec.describe()}: zero fraction {zero_fraction(M):.4f} -> {args.output}")
    return EXIT_OK


def cmd_solve(args):
    if args.input:
        M = load_matrix(args.input, args.format)
        if args.threshold > 0:
            M = np.where(M <= args.threshold, 0.0, M)
    else:
        M = gen_synthetic(SynthSpec(m=args.m, rbar=args.rbar, p=args.p, seed=args.data_seed))
    max_time = float("inf") if args.strict_iters else args.max_time
    budget = dict(rank=args.rank, tol=args.tol, max_iter=args.max_iter, max_time=max_time,
                  seed=args.seed or 0)
    if args.solver in ("aapb", "apb"):
        beta = 0.0 if args.solver == "apb" else args.beta
        params = aapb.SolverParams(beta=beta, lam=args.lam, eta=args.eta, L=args.L,
                                   safeguard=args.safeguard, **budget)
        result = aapb.run(M, params)
    else:
        params = baselines.BaselineParams(lam=args.lam, mu=args.mu, **budget)
        run = baselines.symhals_run if args.solver == "symhals" else baselines.symanls_run
        result = run(M, params)
    out = args.out or os.environ.get(OUT_DIR_ENV) or "."
    os.makedirs(out, exist_ok=True)
    result.trace.to_csv(os.path.join(out, f"{args.solver}_trace.csv"))
    np.savetxt(os.path.join(out, f"{args.solver}_U.csv"), result.U, delimiter=",", fmt="%.17g")
    print(f"{args.solver}: rel_err {result.rel_err:.4e} after {result.iterations} iterations "
          f"({result.trace.reason}, {result.trace.times[-1]:.2f}s)")
    return EXIT_OK


def cmd_bench(args):
    config = _config_from_args(args)
    report = run_experiment(config, args.out)
    for row in report.rows:
        beta = "-" if row.beta is None else f"{row.beta:g}"
        print(f"{row.solver:<8} beta={beta:<5} seed={row.seed:<4} rel_err={row.rel_err:.4e} "
              f"iters={row.iters} ({row.reason})")
    for err in report.failures:
        print(f"FAILED {err}", file=sys.stderr)
    print(f"summary: {os.path.join(report.out_dir, 'summary.csv')}")
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_compare(args):
    config = _config_from_args(args)
    table = compare_models(config, args.out)
    print(table.format())
    for err in table.report.failures:
        print(f"FAILED {err}", file=sys.stderr)
    return EXIT_OK if table.report.ok else EXIT_FAIL


def cmd_verify(args):
    report = verify_properties(args.check, L=args.L, seed=args.seed or 0)
    for res in report.results:
        print(f"[{'PASS' if res.passed else 'FAIL'}] {res.name}: {res.detail}")
    failure = report.first_failure
    if failure is None:
        return EXIT_OK
    payload = json.dumps({"check": failure.name, "detail": failure.detail,
                          "counterexample": failure.counterexample})
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "counterexample.json")
        with open(path, "w") as fh:
            fh.write(payload)
        print(f"counterexample written to {path}", file=sys.stderr)
    else:
        print(payload, file=sys.stderr)
    return EXIT_FAIL


def build_parser():
    parser = argparse.ArgumentParser(prog="nsmd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic thresholded Gram matrix")
    p.add_argument("output")
    p.add_argument("--m", type=int, default=500)
    p.add_argument("--rbar", type=int, default=10)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--format", choices=("matrixmarket", "csv"))
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("solve", help="run one solver and write its trace and factor")
    p.add_argument("--input", help="matrix file (default: synthetic from --m/--rbar/--p)")
    p.add_argument("--format", choices=("matrixmarket", "csv"))
    p.add_argument("--threshold", type=float, default=0.0,
                   help="zero out entries <= THRESHOLD before solving")
    p.add_argument("--m", type=int, default=500)
    p.add_argument("--rbar", type=int, default=10)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--data-seed", type=int, default=1)
    p.add_argument("--solver", choices=("aapb", "apb", "symanls", "symhals"), default="aapb")
    p.add_argument("--rank", type=int, default=12)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=0.0)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--safeguard", action="store_true")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--max-time", type=float, default=30.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--strict-iters", action="store_true")
    p.set_defaults(func=cmd_solve)

    for name, func, help_ in (("bench", cmd_bench, "run a configured experiment grid"),
                              ("compare", cmd_compare, "compare NSMD and SNMF models")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="TOML experiment config (default: built-in)")
        p.add_argument("--out", help=f"output directory (default: config, ${OUT_DIR_ENV})")
        p.add_argument("--seed", type=int, help="replace the config's seed list")
        p.add_argument("--workers", type=int)
        p.add_argument("--strict-iters", action="store_true",
                       help="ignore time budgets; stop on iterations or tolerance only")
        p.set_defaults(func=func)

    p = sub.add_parser("verify", help="run numerical property checks")
    p.add_argument("--check", action="append", choices=sorted(CHECKS),
                   help="run only this check (repeatable)")
    p.add_argument("--L", type=float, default=1.0, help="constant for the L-smad check")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="directory for counterexample.json on failure")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, MatrixParseError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
