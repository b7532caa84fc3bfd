"""Rayleigh-fading Monte Carlo sweeps and their CSV output.

Every sweep draws one channel sample and solves each x value on it, so
orderings between points and between curves are exact properties of that
sample rather than statistical statements.

Sampling
--------
``numpy.random.SeedSequence(seed).spawn(5)`` yields one child sequence per
gain, in the order h1, g1, f, h2, g2. Each child seeds a PCG64 generator
that draws ``n`` unit-mean exponentials with ``standard_exponential``. The
sample therefore depends only on ``(seed, n)``.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import Infeasible
from .model import ChannelSample, SystemParams
from .numerics import AlphaSearchConfig
from .solvers_average import solve_p3, solve_p4
from .solvers_outage import solve_p5, solve_p6
from .solvers_peak import solve_p1_sample, solve_p2_sample

__all__ = [
    "PROBLEMS",
    "AXES",
    "FadingSpec",
    "SweepSpec",
    "Row",
    "ExperimentResult",
    "sample_blocks",
    "solve_point",
    "run_sweep",
    "format_csv",
    "write_csv",
    "read_csv",
    "CSV_HEADER",
]

PROBLEMS = ("P1", "P2", "P3", "P4", "P5", "P6")
AXES = ("p_pk", "p_av", "eps_out")
_VALID_AXES = {"P1": ("p_pk",), "P2": ("p_pk",), "P3": ("p_av",), "P4": ("p_av",),
               "P5": ("p_pk", "eps_out"), "P6": ("p_av", "eps_out")}
CSV_HEADER = "x,capacity_bits,outage,alpha_star,lambda,mu,wall_time_ms"


@dataclass(frozen=True)
class FadingSpec:
    """Unit-mean Rayleigh fading on all five links."""

    n_realizations: int = 10000
    seed: int = 0
    distribution: str = "rayleigh"

    def __post_init__(self):
        if self.distribution != "rayleigh":
            raise ValueError(f"unsupported fading distribution {self.distribution!r}")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class SweepSpec:
    problem: str
    x_axis: str
    x_values: Tuple[float, ...]
    params: SystemParams = field(default_factory=SystemParams)
    alpha_points: int = 1001

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.x_axis not in _VALID_AXES[self.problem]:
            raise ValueError(f"{self.problem} cannot be swept over {self.x_axis!r}; "
                             f"valid: {', '.join(_VALID_AXES[self.problem])}")
        xs = tuple(float(x) for x in self.x_values)
        if not xs:
            raise ValueError("x_values must not be empty")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("x_values must be strictly increasing")
        object.__setattr__(self, "x_values", xs)
        for x in xs:  # every point must make a valid parameter set
            self.params_at(x)
        AlphaSearchConfig(self.alpha_points)

    def params_at(self, x: float) -> SystemParams:
        return self.params.with_(**{self.x_axis: x})


@dataclass(frozen=True)
class Row:
    x: float
    capacity_bits: float
    outage: float
    alpha_star: float
    lam: Optional[float] = None
    mu: Optional[float] = None
    wall_time_ms: Optional[float] = None


@dataclass(frozen=True)
class ExperimentResult:
    sweep: SweepSpec
    rows: List[Row]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)


def sample_blocks(fading: FadingSpec) -> ChannelSample:
    children = np.random.SeedSequence(fading.seed).spawn(5)
    draws = [np.random.Generator(np.random.PCG64(c)).standard_exponential(fading.n_realizations)
             for c in children]
    return ChannelSample(*draws)


def solve_point(problem: str, sample: ChannelSample, sp: SystemParams,
                alpha_cfg: AlphaSearchConfig = AlphaSearchConfig()) -> Row:
    """Solve one problem instance; x is left as nan for the caller to fill."""
    nan = math.nan
    if problem in ("P1", "P2"):
        prof = (solve_p1_sample if problem == "P1" else solve_p2_sample)(sample, sp)
        return Row(nan, prof.capacity(sample, sp), prof.outage_probability,
                   float(np.mean(prof.alpha)))
    try:
        if problem == "P3":
            res = solve_p3(sample, sp, alpha_cfg)
        elif problem == "P4":
            res = solve_p4(sample, sp, alpha_cfg)
        elif problem == "P5":
            res = solve_p5(sample, sp, alpha_cfg)
        else:
            res = solve_p6(sample, sp, alpha_cfg)
    except Infeasible:
        return Row(nan, nan, nan, nan)
    lam = res.dual.lam if res.dual is not None else None
    mu = res.dual.mu if problem == "P6" else None
    return Row(nan, res.capacity, res.outage, res.alpha, lam, mu)


def run_sweep(sweep: SweepSpec, fading: FadingSpec, threads: int = 1, timing: bool = False,
              sample: Optional[ChannelSample] = None) -> ExperimentResult:
    """Solve every x value of ``sweep`` on one shared sample.

    Points run on up to ``threads`` worker threads; results are collected
    in input order, so the output does not depend on the thread count.
    Wall times are recorded only with ``timing=True``.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    sample = sample_blocks(fading) if sample is None else sample
    alpha_cfg = AlphaSearchConfig(sweep.alpha_points)

    def one(x):
        t0 = time.perf_counter()
        row = solve_point(sweep.problem, sample, sweep.params_at(x), alpha_cfg)
        ms = (time.perf_counter() - t0) * 1e3 if timing else None
        return Row(x, row.capacity_bits, row.outage, row.alpha_star, row.lam, row.mu, ms)

    if threads == 1:
        rows = [one(x) for x in sweep.x_values]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, sweep.x_values))
    return ExperimentResult(sweep, rows)


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def format_csv(result: ExperimentResult) -> str:
    lines = [CSV_HEADER]
    for r in result.rows:
        lines.append(",".join(_fmt(v) for v in (r.x, r.capacity_bits, r.outage, r.alpha_star,
                                                 r.lam, r.mu, r.wall_time_ms)))
    return "\n".join(lines) + "\n"


def write_csv(result: ExperimentResult, path) -> None:
    """Write the CSV atomically: a temporary file in the target directory, then a rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".rop-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(format_csv(result))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path) -> List[dict]:
    """Parse a sweep CSV back into dicts of floats (empty fields become None)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (float(v) if v != "" else None) for k, v in r.items()} for r in rows]

