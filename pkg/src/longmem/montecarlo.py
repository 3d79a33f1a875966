"""Seeded Monte Carlo harness for estimator and test studies.

Every trial draws its generator seed from ``splitmix64(master, cell, trial)``,
so results do not depend on how trials are scheduled across workers.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .estimators import EstimationError, EstimatorConfig, estimate
from .hypothesis import test_efficiency
from .simulate import SourceSpec, gen_arfima

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
FAIL_FLAG_RATE = 0.01


def _splitmix_step(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def trial_seed(master_seed: int, cell: int, trial: int) -> int:
    """Mix the three integers through chained splitmix64 rounds."""
    h = _splitmix_step(int(master_seed) & MASK64)
    h = _splitmix_step(h ^ (int(cell) & MASK64))
    return _splitmix_step(h ^ (int(trial) & MASK64))


@dataclass(frozen=True)
class Cell:
    """One scenario: Gaussian-copula coupled source, fractional integration, one estimator."""

    d: tuple
    T: int = 1024
    tau: float = 0.0
    marginal: str = "gaussian"
    df: float = 3.0
    method: str = "ASE"
    bandwidth_exponent: float | None = None
    bandwidth: int | None = None

    def source(self) -> SourceSpec:
        return SourceSpec(l=len(self.d), marginal=self.marginal, df=self.df, copula_corr=self.tau)

    def config(self, base: EstimatorConfig) -> EstimatorConfig:
        kw = base.to_dict()
        if self.bandwidth_exponent is not None:
            kw["bandwidth_exponent"] = self.bandwidth_exponent
        if self.bandwidth is not None:
            kw["bandwidth"] = self.bandwidth
        kw["search_box"] = tuple(kw["search_box"])
        return EstimatorConfig(**kw)


@dataclass
class ExperimentPlan:
    """Scenario grid, trial count and master seed.

    JSON layout::

        {"master_seed": 1, "trials": 500, "output_path": "study.csv",
         "estimator": {"wavelet": "haar", ...},
         "cells": [{"tau": 0.2, "d": [0.1, 0.3], "marginal": "student_t",
                    "df": 3, "T": 1024, "method": "ASE",
                    "bandwidth_exponent": 0.8}]}
    """

    cells: list
    trials: int = 500
    master_seed: int = 0
    output_path: str | None = None
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)

    def __post_init__(self):
        self.cells = [c if isinstance(c, Cell) else Cell(**{**c, "d": tuple(np.atleast_1d(c["d"]).tolist())})
                      for c in self.cells]
        if isinstance(self.estimator, dict):
            est = dict(self.estimator)
            if "search_box" in est:
                est["search_box"] = tuple(est["search_box"])
            self.estimator = EstimatorConfig(**est)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.cells:
            raise ValueError("plan has no cells")
        lo, hi = self.estimator.search_box
        for i, c in enumerate(self.cells):
            if c.method.upper() not in ("ASE", "GSE", "TSE"):
                raise ValueError(f"cell {i}: unknown method {c.method!r}")
            if not all(lo <= v <= hi for v in c.d):
                raise ValueError(f"cell {i}: d0={c.d} outside the search box {self.estimator.search_box}")
            c.source()  # validates marginal and tau

    @classmethod
    def from_json(cls, path) -> "ExperimentPlan":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        doc.pop("schema_version", None)
        return cls(**doc)

    def to_dict(self) -> dict:
        return {
            "master_seed": self.master_seed, "trials": self.trials, "output_path": self.output_path,
            "estimator": self.estimator.to_dict(), "cells": [asdict(c) for c in self.cells],
        }


def _run_trial(job):
    cell, cfg, seed = job
    try:
        X = gen_arfima(np.asarray(cell.d), cell.T, seed=seed, source=cell.source())
        return estimate(X, cfg, cell.method.upper()).d_hat, None
    except (EstimationError, ValueError, np.linalg.LinAlgError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _map(fn, jobs, threads: int | None):
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * threads))))


def default_threads() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return os.cpu_count() or 1


@dataclass
class CellSummary:
    cell: Cell
    mean: np.ndarray
    sd: np.ndarray
    trials: int
    failures: int
    estimates: np.ndarray  # successful trials x l
    seeds: list
    errors: dict

    @property
    def flagged(self) -> bool:
        return self.failures > FAIL_FLAG_RATE * self.trials


@dataclass
class StudyResult:
    plan: ExperimentPlan
    cells: list

    def summary_rows(self):
        header = ["cell", "component", "tau", "d0", "marginal", "df", "T", "method",
                  "trials", "failures", "flagged", "mean", "sd"]
        rows = []
        for i, s in enumerate(self.cells):
            c = s.cell
            for k in range(len(c.d)):
                rows.append([i, k + 1, c.tau, c.d[k], c.marginal, c.df, c.T, c.method.upper(),
                             s.trials, s.failures, int(s.flagged), s.mean[k], s.sd[k]])
        return header, rows

    def trial_rows(self):
        header = ["cell", "trial", "seed", "ok", "component", "d_hat"]
        rows = []
        for i, s in enumerate(self.cells):
            it = iter(s.estimates)
            for t, seed in enumerate(s.seeds):
                if t in s.errors:
                    rows.append([i, t, seed, 0, 0, float("nan")])
                    continue
                est = next(it)
                for k, v in enumerate(est):
                    rows.append([i, t, seed, 1, k + 1, v])
        return header, rows

    def format_table(self) -> str:
        """Human-readable ``mean +/- sd`` layout, one line per cell."""
        lines = []
        for s in self.cells:
            c = s.cell
            parts = ", ".join(f"{m:.4f} ± {sd:.4f}" for m, sd in zip(s.mean, s.sd))
            flag = "  [FLAGGED]" if s.flagged else ""
            lines.append(f"tau={c.tau:g} d0={list(c.d)} {c.marginal}(df={c.df:g}) T={c.T} "
                         f"{c.method.upper()}: ({parts}){flag}")
        return "\n".join(lines)


def _summarise(cell, seeds, results) -> CellSummary:
    ok = [r for r, _ in results if r is not None]
    errors = {t: e for t, (_, e) in enumerate(results) if e is not None}
    l = len(cell.d)
    est = np.vstack(ok) if ok else np.empty((0, l))
    mean = est.mean(axis=0) if len(est) else np.full(l, np.nan)
    sd = est.std(axis=0, ddof=1) if len(est) > 1 else np.full(l, np.nan)
    s = CellSummary(cell, mean, sd, len(seeds), len(errors), est, seeds, errors)
    if s.flagged:
        logger.warning("cell %s: %d of %d trials failed", cell, s.failures, s.trials)
    return s


def run_table1(plan: ExperimentPlan, threads: int | None = None) -> StudyResult:
    """Generate, estimate and aggregate every cell of ``plan``."""
    out = []
    for ci, cell in enumerate(plan.cells):
        cfg = cell.config(plan.estimator)
        seeds = [trial_seed(plan.master_seed, ci, t) for t in range(plan.trials)]
        results = _map(_run_trial, [(cell, cfg, s) for s in seeds], threads)
        out.append(_summarise(cell, seeds, results))
    return StudyResult(plan, out)


# -- calibration studies -------------------------------------------------------


def _test_trial(job):
    d, T, cfg, level, seed = job
    try:
        X = gen_arfima(d, T, seed=seed)
        return test_efficiency(X, cfg, level).rejected, None
    except (EstimationError, ValueError, np.linalg.LinAlgError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def run_calibration(kind: str, trials: int = 200, T: int = 4096, d: float = 0.2, level: float = 0.05,
                    T_values=(256, 1024, 4096), master_seed: int = 0,
                    config: EstimatorConfig | None = None, threads: int | None = None) -> dict:
    """Size, power or consistency study for the ASE-based procedures.

    ``size`` uses Gaussian white noise, ``power`` ARFIMA(0, d, 0); both report
    the efficiency-test rejection rate. ``consistency`` reports the median
    absolute error of the ASE estimate for every ``T`` in ``T_values``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cfg = config or EstimatorConfig()
    if kind in ("size", "power"):
        dd = 0.0 if kind == "size" else d
        seeds = [trial_seed(master_seed, 0, t) for t in range(trials)]
        res = _map(_test_trial, [(dd, T, cfg, level, s) for s in seeds], threads)
        ok = [r for r, _ in res if r is not None]
        fails = trials - len(ok)
        return {"kind": kind, "d": dd, "T": T, "level": level, "trials": trials, "failures": fails,
                "flagged": fails > FAIL_FLAG_RATE * trials,
                "rejection_rate": float(np.mean(ok)) if ok else float("nan")}
    if kind == "consistency":
        rows = []
        for ci, TT in enumerate(T_values):
            cell = Cell(d=(d,), T=int(TT))
            seeds = [trial_seed(master_seed, ci, t) for t in range(trials)]
            res = _map(_run_trial, [(cell, cfg, s) for s in seeds], threads)
            ok = np.array([r[0] for r, _ in res if r is not None])
            fails = trials - len(ok)
            rows.append({"T": int(TT), "median_abs_error": float(np.median(np.abs(ok - d))) if len(ok) else float("nan"),
                         "failures": fails, "flagged": fails > FAIL_FLAG_RATE * trials})
        return {"kind": kind, "d": d, "trials": trials, "sweep": rows}
    raise ValueError(f"unknown calibration kind {kind!r}; choose size, power or consistency")
