"""Experiment configuration.

A config is a TOML file. Every key is optional; omitted keys take the
defaults below, which reproduce the synthetic beta-sweep setup::

    solvers = ["apb", "aapb"]      # any of apb, aapb, symanls, symhals
    rank = 12
    beta_grid = [0.0, 1.0]         # extrapolation amplitudes for aapb
    seeds = [0]                    # solver initialisation seeds
    workers = 1
    out = "results"                # else --out, else $NSMD_OUT_DIR

    [dataset]
    kind = "synthetic"             # or "file"
    m = 500
    rbar = 10
    p = 0.0
    seed = 1
    # path = "M.mtx"               # kind = "file"
    # format = "matrixmarket"      # or "csv"; inferred from the suffix
    # threshold = 0.0              # entries <= threshold are zeroed on load

    [budget]
    tol = 1e-4
    max_iter = 1000
    max_time = 30.0

    [aapb]                         # SolverParams fields except rank/beta/budget
    lam = 0.0
    eta = 1.0
    L = 1.0
    safeguard = false

    [baseline]                     # BaselineParams fields except rank/budget
    mu = 1.0
    lam = 0.0
"""
import os
import sys
import warnings
from dataclasses import dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from .aapb import ConfigError, SolverParams
from .baselines import BaselineParams
from .datagen import SynthSpec, gen_synthetic
from .io import load_matrix

__all__ = [
    "ExperimentConfig",
    "FileDataset",
    "NSMD_SOLVERS",
    "OUT_DIR_ENV",
    "SNMF_SOLVERS",
    "load_config",
]

NSMD_SOLVERS = ("apb", "aapb")
SNMF_SOLVERS = ("symanls", "symhals")
OUT_DIR_ENV = "NSMD_OUT_DIR"
DEFAULT_OUT = "nsmd-results"

_AAPB_KEYS = {f.name for f in fields(SolverParams)} - {
    "rank", "beta", "tol", "max_iter", "max_time", "seed"}
_BASELINE_KEYS = {f.name for f in fields(BaselineParams)} - {
    "rank", "tol", "max_iter", "max_time", "seed"}
_TOP_KEYS = {"solvers", "rank", "beta_grid", "seeds", "workers", "out",
             "dataset", "budget", "aapb", "baseline"}


@dataclass(frozen=True)
class FileDataset:
    path: str
    format: str = None
    threshold: float = 0.0

    def describe(self):
        return f"file({os.path.basename(self.path)})"


@dataclass
class ExperimentConfig:
    dataset: object = field(default_factory=lambda: SynthSpec(500, 10, 0.0, 1))
    solvers: tuple = ("apb", "aapb")
    rank: int = 12
    beta_grid: tuple = (0.0, 1.0)
    seeds: tuple = (0,)
    tol: float = 1e-4
    max_iter: int = 1000
    max_time: float = 30.0
    aapb: dict = field(default_factory=dict)
    baseline: dict = field(default_factory=dict)
    workers: int = 1
    out: str = None
    strict_iters: bool = False

    @classmethod
    def from_dict(cls, raw):
        """Build and validate a config; all problems are reported together."""
        errors = []
        unknown = set(raw) - _TOP_KEYS
        if unknown:
            errors.append(f"unknown top-level keys: {sorted(unknown)}")

        ds = dict(raw.get("dataset", {}))
        kind = ds.pop("kind", "synthetic")
        dataset = None
        try:
            if kind == "synthetic":
                dataset = SynthSpec(m=int(ds.pop("m", 500)), rbar=int(ds.pop("rbar", 10)),
                                    p=float(ds.pop("p", 0.0)), seed=int(ds.pop("seed", 1)))
            elif kind == "file":
                if "path" not in ds:
                    raise ValueError("dataset.path is required for kind = 'file'")
                dataset = FileDataset(path=str(ds.pop("path")), format=ds.pop("format", None),
                                      threshold=float(ds.pop("threshold", 0.0)))
            else:
                raise ValueError(f"dataset.kind must be 'synthetic' or 'file', got {kind!r}")
            if ds:
                raise ValueError(f"unknown dataset keys: {sorted(ds)}")
        except (TypeError, ValueError) as exc:
            errors.append(str(exc))

        budget = dict(raw.get("budget", {}))
        tol = budget.pop("tol", 1e-4)
        max_iter = budget.pop("max_iter", 1000)
        max_time = budget.pop("max_time", 30.0)
        if budget:
            errors.append(f"unknown budget keys: {sorted(budget)}")
        if not (isinstance(tol, (int, float)) and tol > 0):
            errors.append(f"budget.tol must be positive, got {tol!r}")
        if not (isinstance(max_iter, int) and max_iter > 0):
            errors.append(f"budget.max_iter must be a positive integer, got {max_iter!r}")
        if not (isinstance(max_time, (int, float)) and max_time > 0):
            errors.append(f"budget.max_time must be positive, got {max_time!r}")

        solvers = list(raw.get("solvers", ["apb", "aapb"]))
        if not solvers:
            errors.append("at least one solver is required")
        bad = [s for s in solvers if s not in NSMD_SOLVERS + SNMF_SOLVERS]
        if bad:
            errors.append(f"unknown solvers {bad}; choose from {NSMD_SOLVERS + SNMF_SOLVERS}")
        deduped = tuple(dict.fromkeys(solvers))
        if len(deduped) != len(solvers):
            warnings.warn(f"duplicate solvers in config ignored: {solvers}", stacklevel=2)

        beta_grid = tuple(float(b) for b in raw.get("beta_grid", [0.0, 1.0]))
        if "aapb" in deduped and not beta_grid:
            errors.append("beta_grid must not be empty when aapb is selected")
        if any(not 0 <= b <= 1 for b in beta_grid):
            errors.append(f"beta_grid values must lie in [0, 1], got {list(beta_grid)}")
        seeds = tuple(int(s) for s in raw.get("seeds", [0]))
        if not seeds:
            errors.append("seeds must not be empty")

        rank = raw.get("rank", 12)
        if not (isinstance(rank, int) and rank > 0):
            errors.append(f"rank must be a positive integer, got {rank!r}")
        elif isinstance(dataset, SynthSpec) and rank > dataset.m:
            errors.append(f"rank {rank} exceeds dataset dimension {dataset.m}")

        aapb = dict(raw.get("aapb", {}))
        baseline = dict(raw.get("baseline", {}))
        for name, section, allowed in (("aapb", aapb, _AAPB_KEYS),
                                       ("baseline", baseline, _BASELINE_KEYS)):
            extra = set(section) - allowed
            if extra:
                errors.append(f"unknown {name} keys: {sorted(extra)}")
        if not errors:
            # construct once so parameter errors surface before any run
            try:
                SolverParams(rank=rank, tol=tol, max_iter=max_iter, max_time=max_time, **aapb)
                BaselineParams(rank=rank, tol=tol, max_iter=max_iter, max_time=max_time,
                               **baseline)
            except (ConfigError, TypeError) as exc:
                errors.append(str(exc))

        workers = raw.get("workers", 1)
        if not (isinstance(workers, int) and workers >= 1):
            errors.append(f"workers must be a positive integer, got {workers!r}")

        if errors:
            raise ConfigError("invalid config:\n  " + "\n  ".join(errors))
        return cls(dataset=dataset, solvers=deduped, rank=rank, beta_grid=beta_grid,
                   seeds=seeds, tol=float(tol), max_iter=max_iter, max_time=float(max_time),
                   aapb=aapb, baseline=baseline, workers=workers, out=raw.get("out"))

    def load_matrix(self):
        if isinstance(self.dataset, SynthSpec):
            return gen_synthetic(self.dataset)
        M = load_matrix(self.dataset.path, self.dataset.format)
        if self.dataset.threshold > 0:
            M = np.where(M <= self.dataset.threshold, 0.0, M)
        return M

    def output_dir(self, override=None):
        return override or self.out or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT

    def solver_params(self, beta, seed):
        max_time = float("inf") if self.strict_iters else self.max_time
        return SolverParams(rank=self.rank, beta=beta, tol=self.tol, max_iter=self.max_iter,
                            max_time=max_time, seed=seed, **self.aapb)

    def baseline_params(self, seed):
        max_time = float("inf") if self.strict_iters else self.max_time
        return BaselineParams(rank=self.rank, tol=self.tol, max_iter=self.max_iter,
                              max_time=max_time, seed=seed, **self.baseline)


def load_config(path):
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return ExperimentConfig.from_dict(raw)
