"""Solver-versus-oracle checks shared by the ``verify`` command and the test suite.

Each check returns a small report object; :func:`run` turns one into
printable lines and an overall pass flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .experiments import FadingSpec, sample_blocks
from .model import ChannelSample, EnergyModel, SystemParams, secondary_rate
from .oracle import (GridSpec, grid_argmax_f_minus_chi, oracle_average, oracle_per_block,
                     pareto_beats_full_power, rate_cell_bound)
from .solvers_average import solve_p3a, solve_p4a
from .solvers_outage import candidates, p6b_block
from .solvers_peak import _alpha_pk_array, curve_residual, solve_p1_sample, solve_p2_sample

__all__ = ["PeakReport", "AverageReport", "ParetoReport", "P6bReport", "check_peak",
           "check_average", "check_full_power_pareto", "check_p6b", "random_blocks", "run"]


def random_blocks(rng: np.random.Generator, n: int) -> ChannelSample:
    return ChannelSample(*(rng.standard_exponential(n) for _ in range(5)))


@dataclass(frozen=True)
class PeakReport:
    n: int
    below_oracle: int  # blocks whose closed-form rate is below oracle minus one cell bound
    mean_gap: float
    max_gap: float
    max_root_residual: float  # practical model only, else nan


def check_peak(sample: ChannelSample, sp: SystemParams, em: EnergyModel,
               grid: GridSpec = GridSpec()) -> PeakReport:
    solver = solve_p1_sample if em is EnergyModel.IDEAL else solve_p2_sample
    prof = solver(sample, sp)
    rates = np.atleast_1d(secondary_rate(sample, prof, sp))
    gaps = np.empty(len(sample))
    below = 0
    for i in range(len(sample)):
        ch = sample[i]
        o = oracle_per_block(ch, sp, em, grid)
        if rates[i] < o.rate - rate_cell_bound(ch, sp, grid):
            below += 1
        gaps[i] = abs(rates[i] - o.rate)
    resid = math.nan
    if em is EnergyModel.PRACTICAL:
        a = _alpha_pk_array(sample, sp)
        ok = ~np.isnan(a) & (a < 1)
        r = curve_residual(a[ok], sample[ok], sp, sp.p_pk) if ok.any() else np.zeros(0)
        resid = float(np.max(np.abs(r))) if r.size else 0.0
    return PeakReport(len(sample), below, float(np.mean(gaps)), float(np.max(gaps)), resid)


@dataclass(frozen=True)
class AverageReport:
    instances: int
    max_capacity_gap: float
    max_cs_residual: float  # |price * (mean power - budget)| relative to the budget
    max_budget_excess: float  # mean power / budget - 1


def check_average(rng: np.random.Generator, instances: int, em: EnergyModel,
                  base: SystemParams = SystemParams()) -> AverageReport:
    solver = solve_p3a if em is EnergyModel.IDEAL else solve_p4a
    gap = cs = excess = 0.0
    for _ in range(instances):
        s = random_blocks(rng, 4)
        sp = base.with_(p_av=float(rng.uniform(0.5, 20.0)))
        alpha = float(rng.uniform(0.05, 0.95))
        prof, dual = solver(s, sp, alpha)
        _, cap_oracle = oracle_average(s, sp, alpha, em)
        gap = max(gap, abs(prof.capacity(s, sp) - cap_oracle))
        cs = max(cs, abs(dual.lam * (prof.mean_power - sp.p_av)) / sp.p_av)
        excess = max(excess, prof.mean_power / sp.p_av - 1.0)
    return AverageReport(instances, gap, cs, excess)


@dataclass(frozen=True)
class ParetoReport:
    checks: int
    beaten: int


def check_full_power_pareto(rng: np.random.Generator, instances: int, alphas,
                            base: SystemParams = SystemParams(), blocks: int = 10,
                            p_points: int = 2001) -> ParetoReport:
    beaten = checks = 0
    for _ in range(instances):
        s = random_blocks(rng, blocks)
        sp = base.with_(p_pk=float(rng.uniform(0.5, 20.0)))
        for alpha in alphas:
            b, _, _ = pareto_beats_full_power(s, sp, float(alpha), p_points)
            beaten += int(b)
            checks += 1
    return ParetoReport(checks, beaten)


@dataclass(frozen=True)
class P6bReport:
    triples: int
    located: int  # within one grid cell of the grid argmax
    value_only: int  # elsewhere, but its value (right limit at p') beats every grid point
    failures: int
    worst_shortfall: float


def check_p6b(rng: np.random.Generator, triples: int, base: SystemParams = SystemParams(),
              points: int = 10000) -> P6bReport:
    located = value_only = failures = 0
    worst = 0.0
    while located + value_only + failures < triples:
        ch = random_blocks(rng, 1)[0]
        alpha = float(rng.uniform(0.05, 0.95))
        lam = float(rng.uniform(0.0, 5.0))
        mu = float(10 ** rng.uniform(-2.5, 0.5))
        sp = base
        lo = candidates(ch, sp, alpha, mu).p_dprime
        hi = 100.0 * sp.p_av
        if not lo < hi:
            continue
        p = p6b_block(ch, sp, alpha, lam, mu, p_cap=hi)
        p_grid, v_grid, cell, objective = grid_argmax_f_minus_chi(ch, sp, alpha, lam, mu, lo, hi,
                                                                  points)
        if abs(p - p_grid) <= cell * (1 + 1e-9):
            located += 1
            continue
        # p' itself is booked as outage, so the outage-free branch is judged
        # by its right limit
        shortfall = v_grid - max(objective(p), objective(p * (1 + 1e-12)))
        if shortfall <= 1e-9:
            value_only += 1
        else:
            failures += 1
            worst = max(worst, shortfall)
    return P6bReport(triples, located, value_only, failures, worst)


def run(problem: str, n: int, seed: int, sp: SystemParams) -> Tuple[bool, List[str]]:
    """Run the oracle check matching ``problem``; returns ``(passed, lines)``."""
    problem = problem.upper()
    rng = np.random.default_rng(seed)
    if problem in ("P1", "P2"):
        em = EnergyModel.IDEAL if problem == "P1" else EnergyModel.PRACTICAL
        r = check_peak(sample_blocks(FadingSpec(n, seed)), sp, em)
        lines = [f"{problem}: {r.n} blocks, below oracle - cell bound: {r.below_oracle}",
                 f"max closed-form vs oracle rate gap: {r.max_gap:.3e} bits "
                 f"(mean {r.mean_gap:.3e})"]
        ok = r.below_oracle == 0
        if em is EnergyModel.PRACTICAL:
            lines.append(f"max curve-intersection residual: {r.max_root_residual:.3e}")
            ok &= r.max_root_residual <= 1e-8
        return ok, lines
    if problem in ("P3", "P4"):
        em = EnergyModel.IDEAL if problem == "P3" else EnergyModel.PRACTICAL
        r = check_average(rng, max(1, n // 50), em, sp)
        ok = r.max_capacity_gap <= 1e-2 and r.max_cs_residual <= 1e-3 and r.max_budget_excess <= 1e-3
        return ok, [f"{problem}: {r.instances} four-block instances",
                    f"max capacity gap to oracle: {r.max_capacity_gap:.3e} bits",
                    f"max complementary-slackness residual / P_av: {r.max_cs_residual:.3e}",
                    f"max budget excess: {r.max_budget_excess:.3e}"]
    if problem == "P5":
        r = check_full_power_pareto(rng, max(1, n // 50), np.linspace(0.0, 0.9, 11), sp)
        return r.beaten == 0, [f"P5: {r.checks} (instance, alpha) checks, "
                               f"full power beaten in {r.beaten}"]
    r = check_p6b(rng, n, sp)
    return r.failures == 0, [f"P6: {r.triples} (block, lam, mu) triples",
                             f"within one cell of grid argmax: {r.located}",
                             f"elsewhere but no worse than any grid point: {r.value_only}",
                             f"worse than the grid optimum: {r.failures} "
                             f"(worst shortfall {r.worst_shortfall:.3e})"]
