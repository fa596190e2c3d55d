"""Monte Carlo bias/MSE studies of the maximum-likelihood estimators.

A study is a grid of cells (sample size n, shape alpha).  Every replicate
gets its own seed stream derived from ``(master_seed, cell index, replicate
index)`` so results do not depend on execution order or worker count.
"""

import csv
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import DistParams, sample
from .errors import DomainError
from .mle import fit
from .regression import RegressionDataset, RegressionParams, reg_fit, simulate_responses

PAPER_ALPHAS = (0.5, 1.5, 2.5, 3.0)
PAPER_SIZES = (10, 50, 150, 400)
FLAG_FRACTION = 0.10


@dataclass
class StudyConfig:
    model: str = "dist"
    sample_sizes: list = field(default_factory=lambda: list(PAPER_SIZES))
    alphas: list = field(default_factory=lambda: list(PAPER_ALPHAS))
    beta: float = 2.0
    eta: list = field(default_factory=lambda: [0.2, 1.5])
    replications: int = 1000
    master_seed: int = 20240101
    fixed_design: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.model not in ("dist", "regression"):
            raise DomainError("model must be 'dist' or 'regression'")
        if int(self.replications) < 1:
            raise DomainError("replications must be >= 1")
        if not self.sample_sizes or min(self.sample_sizes) < 5:
            raise DomainError("all sample sizes must be >= 5")
        if not self.alphas or min(self.alphas) <= 0:
            raise DomainError("alphas must be positive")
        if self.beta <= 0:
            raise DomainError("beta must be positive")
        self.sample_sizes = [int(n) for n in self.sample_sizes]
        self.alphas = [float(a) for a in self.alphas]
        self.eta = [float(e) for e in self.eta]

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise DomainError(f"unknown config fields: {sorted(unknown)}")
        return cls(**raw)

    def cells(self):
        return list(itertools.product(self.sample_sizes, self.alphas))

    def param_names(self):
        if self.model == "dist":
            return ["alpha", "beta"]
        return [f"eta{j}" for j in range(len(self.eta))] + ["alpha"]

    def truth(self, alpha):
        if self.model == "dist":
            return np.array([alpha, self.beta])
        return np.array([*self.eta, alpha])


@dataclass
class CellResult:
    n: int
    alpha: float
    params: list
    truth: list
    bias: list
    mse: list
    bias_se: list
    converged: int
    dropped: int
    flagged: bool


@dataclass
class StudyResult:
    config: StudyConfig
    cells: list

    def cell(self, n, alpha):
        for c in self.cells:
            if c.n == n and math.isclose(c.alpha, alpha):
                return c
        raise KeyError((n, alpha))

    def to_dict(self):
        return {
            "schema_version": "1",
            "config": asdict(self.config),
            "cells": [asdict(c) for c in self.cells],
        }

    def write_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def write_csv(self, path):
        cols = ["n", "alpha", "parameter", "truth", "bias", "mse", "bias_se", "converged", "dropped", "flagged"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for c in self.cells:
                for j, name in enumerate(c.params):
                    w.writerow([c.n, c.alpha, name, c.truth[j], c.bias[j], c.mse[j], c.bias_se[j],
                                c.converged, c.dropped, int(c.flagged)])

    def format_table(self):
        """Text table in the bias(MSE) layout, one row per alpha and sample size."""
        names = self.config.param_names()
        lines = [f"{'alpha':>6} {'n':>5}  " + "  ".join(f"{nm:>20}" for nm in names)]
        for c in self.cells:
            vals = "  ".join(f"{b:>+10.4f}({m:.4f})".rjust(20) for b, m in zip(c.bias, c.mse))
            tag = "  *" if c.flagged else ""
            lines.append(f"{c.alpha:>6.2f} {c.n:>5d}  {vals}{tag}")
        return "\n".join(lines)


def replicate_seed(master_seed, cell_index, rep):
    return np.random.SeedSequence(master_seed, spawn_key=(cell_index, rep))


def _fixed_covariate(config, cell_index, n):
    rng = np.random.default_rng(np.random.SeedSequence(config.master_seed, spawn_key=(cell_index, 2**31)))
    return rng.random(n)


def _replicate(task):
    """Estimates for one replicate, or None if the fit failed."""
    model, n, alpha, beta, eta, seed, x_fixed = task
    rng = np.random.default_rng(seed)
    try:
        if model == "dist":
            res = fit(sample(n, DistParams(alpha, beta), rng))
            est = [res.params.alpha, res.params.beta]
        else:
            x = x_fixed if x_fixed is not None else rng.random(n)
            X = np.column_stack([np.ones(n), x])
            y = simulate_responses(RegressionParams(alpha, eta), X, rng)
            res = reg_fit(RegressionDataset(y, X))
            est = [*res.params.eta, res.params.alpha]
    except (DomainError, FloatingPointError, np.linalg.LinAlgError):
        return None
    if not res.converged or not np.all(np.isfinite(est)):
        return None
    return est


def _summarize(estimates, truth, n, alpha, names, replications):
    good = np.array([e for e in estimates if e is not None], dtype=float).reshape(-1, truth.size)
    m = good.shape[0]
    dropped = replications - m
    if m:
        err = good - truth
        bias = err.mean(axis=0)
        mse = (err**2).mean(axis=0)
        se = good.std(axis=0, ddof=1) / math.sqrt(m) if m > 1 else np.full(truth.size, np.nan)
    else:
        bias = mse = se = np.full(truth.size, np.nan)
    return CellResult(
        n=n,
        alpha=alpha,
        params=list(names),
        truth=truth.tolist(),
        bias=bias.tolist(),
        mse=mse.tolist(),
        bias_se=se.tolist(),
        converged=m,
        dropped=dropped,
        flagged=dropped > FLAG_FRACTION * replications,
    )


def run_study(config, progress=None):
    B = int(config.replications)
    names = config.param_names()
    cells = []
    pool = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for ci, (n, alpha) in enumerate(config.cells()):
            x_fixed = None
            if config.model == "regression" and config.fixed_design:
                x_fixed = _fixed_covariate(config, ci, n)
            tasks = [
                (config.model, n, alpha, config.beta, config.eta, replicate_seed(config.master_seed, ci, b), x_fixed)
                for b in range(B)
            ]
            if pool is None:
                est = [_replicate(t) for t in tasks]
            else:
                est = list(pool.map(_replicate, tasks, chunksize=max(1, B // (4 * config.workers))))
            cells.append(_summarize(est, config.truth(alpha), n, alpha, names, B))
            if progress:
                progress(cells[-1])
    finally:
        if pool is not None:
            pool.shutdown()
    return StudyResult(config=config, cells=cells)


def run_dist_study(config, progress=None):
    if config.model != "dist":
        raise DomainError("run_dist_study needs model='dist'")
    return run_study(config, progress)


def run_reg_study(config, progress=None):
    if config.model != "regression":
        raise DomainError("run_reg_study needs model='regression'")
    return run_study(config, progress)
