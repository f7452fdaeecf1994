"""Run configured experiments and write summary and trace CSVs."""
import csv
import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, field

import numpy as np

from . import aapb, baselines
from .config import NSMD_SOLVERS
from .datagen import SynthSpec

__all__ = [
    "ComparisonTable",
    "ExperimentReport",
    "ReportRow",
    "RunSpec",
    "compare_models",
    "expand_runs",
    "run_experiment",
]

log = logging.getLogger(__name__)

SUMMARY_HEADER = ("solver", "beta", "dataset", "m", "rbar", "p", "r", "rel_err",
                  "iters", "time_s", "reason", "seed")
METRIC_NOTE = {
    "relu": "||M - max(0, UU^T)||_F / ||M||_F",
    "plain": "||M - UU^T||_F / ||M||_F",
}


@dataclass(frozen=True)
class RunSpec:
    solver: str
    beta: float  # None for baselines
    seed: int

    @property
    def tag(self):
        beta = "" if self.beta is None else f"_beta{self.beta:g}"
        return f"{self.solver}{beta}_seed{self.seed}"

    def sort_key(self):
        return (self.solver, -1.0 if self.beta is None else self.beta, self.seed)


@dataclass
class ReportRow:
    solver: str
    beta: object
    dataset: str
    m: int
    rbar: object
    p: object
    r: int
    rel_err: float
    iters: int
    time_s: object
    reason: str
    seed: int

    def as_csv(self):
        out = []
        for v in astuple(self):
            if v is None:
                out.append("")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out


@dataclass
class ExperimentReport:
    rows: list
    out_dir: str
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures


def expand_runs(config):
    """One run per (solver, beta, seed).

    ``apb`` is AAPB with ``beta = 0``; when it is selected, a zero in the
    beta grid would repeat it under the ``aapb`` name and is skipped.
    """
    runs = []
    for solver in config.solvers:
        for seed in config.seeds:
            if solver == "apb":
                runs.append(RunSpec("apb", 0.0, seed))
            elif solver == "aapb":
                for beta in dict.fromkeys(config.beta_grid):
                    if beta == 0 and "apb" in config.solvers:
                        continue
                    runs.append(RunSpec("aapb", beta, seed))
            else:
                runs.append(RunSpec(solver, None, seed))
    if "apb" in config.solvers and "aapb" in config.solvers and 0.0 in config.beta_grid:
        warnings.warn("beta=0 for aapb duplicates apb; running it once as apb", stacklevel=2)
    return sorted(runs, key=RunSpec.sort_key)


def solve_one(M, config, run):
    if run.solver in NSMD_SOLVERS:
        return aapb.run(M, config.solver_params(run.beta, run.seed))
    params = config.baseline_params(run.seed)
    if run.solver == "symhals":
        return baselines.symhals_run(M, params)
    return baselines.symanls_run(M, params)


def _execute(M, config, run, out_dir):
    result = solve_one(M, config, run)
    result.trace.to_csv(os.path.join(out_dir, "traces", run.tag + ".csv"))
    np.savetxt(os.path.join(out_dir, "factors", run.tag + ".csv"), result.U,
               delimiter=",", fmt="%.17g")
    ds = config.dataset
    synth = isinstance(ds, SynthSpec)
    return ReportRow(
        solver=run.solver, beta=run.beta, dataset=ds.describe(), m=M.shape[0],
        rbar=ds.rbar if synth else None, p=ds.p if synth else None, r=config.rank,
        rel_err=result.rel_err, iters=result.iterations,
        time_s=None if config.strict_iters else result.trace.times[-1],
        reason=result.trace.reason, seed=run.seed)


def _safe_execute(M, config, run, out_dir):
    try:
        return _execute(M, config, run, out_dir), None
    except Exception as exc:  # reported per run, the rest still execute
        return None, f"{run.tag}: {type(exc).__name__}: {exc}"


def write_summary(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for row in rows:
            writer.writerow(row.as_csv())


def run_experiment(config, out_dir=None):
    """Execute every run of ``config``.

    Writes ``summary.csv`` plus ``traces/<tag>.csv`` and ``factors/<tag>.csv``
    per run under the output directory. Runs that raise are collected in
    ``report.failures`` rather than aborting the experiment. Under
    ``config.strict_iters`` time budgets are disabled and the summary's
    ``time_s`` column is left empty so reruns compare byte for byte.
    """
    out_dir = config.output_dir(out_dir)
    os.makedirs(os.path.join(out_dir, "traces"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "factors"), exist_ok=True)
    M = config.load_matrix()
    runs = expand_runs(config)
    log.info("running %d configurations into %s", len(runs), out_dir)

    if config.workers > 1 and len(runs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_safe_execute, M, config, run, out_dir) for run in runs]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [_safe_execute(M, config, run, out_dir) for run in runs]

    rows = [row for row, _ in outcomes if row is not None]
    failures = [err for _, err in outcomes if err is not None]
    for err in failures:
        log.error("run failed: %s", err)
    rows.sort(key=lambda r: (r.solver, -1.0 if r.beta is None else r.beta, r.seed))
    write_summary(os.path.join(out_dir, "summary.csv"), rows)
    return ExperimentReport(rows=rows, out_dir=out_dir, failures=failures)


@dataclass
class ComparisonTable:
    """Mean final relative error per (solver, beta), each under its own metric."""

    entries: list  # (solver, beta, metric, mean_rel_err, n_runs)
    dataset: str
    report: ExperimentReport

    def error_of(self, solver, beta=None):
        for s, b, _, err, _ in self.entries:
            if s == solver and (beta is None or b == beta):
                return err
        raise KeyError((solver, beta))

    def format(self):
        lines = [f"dataset: {self.dataset}",
                 f"{'solver':<10} {'beta':>6} {'rel_err':>12} {'runs':>5}  metric"]
        for solver, beta, metric, err, n in self.entries:
            b = "-" if beta is None else f"{beta:g}"
            mark = "*" if metric == "relu" else "**"
            lines.append(f"{solver:<10} {b:>6} {err:>12.4e} {n:>5}  {mark}")
        metrics = {e[2] for e in self.entries}
        if "relu" in metrics:
            lines.append(f"*  NSMD models: {METRIC_NOTE['relu']}")
        if "plain" in metrics:
            lines.append(f"** SNMF models (no ReLU): {METRIC_NOTE['plain']}")
        return "\n".join(lines)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("solver", "beta", "metric", "rel_err", "runs"))
            for solver, beta, metric, err, n in self.entries:
                writer.writerow((solver, "" if beta is None else beta, metric, repr(err), n))


def compare_models(config, out_dir=None):
    """Run every selected solver under one shared budget and tabulate.

    NSMD rows report the ReLU relative error, SNMF rows the plain one; the
    formatted table footnotes which is which. Also writes
    ``comparison.csv`` next to the summary.
    """
    report = run_experiment(config, out_dir)
    groups = {}
    for row in report.rows:
        groups.setdefault((row.solver, row.beta), []).append(row.rel_err)
    entries = []
    for (solver, beta), errs in groups.items():
        metric = "relu" if solver in NSMD_SOLVERS else "plain"
        entries.append((solver, beta, metric, float(np.mean(errs)), len(errs)))
    entries.sort(key=lambda e: (e[2] != "plain", e[0], -1.0 if e[1] is None else e[1]))
    table = ComparisonTable(entries=entries, dataset=config.dataset.describe(), report=report)
    table.to_csv(os.path.join(report.out_dir, "comparison.csv"))
    return table
