"""Brute-force reference solutions for small instances.

Everything here evaluates the link formulas of :mod:`rop.model` on explicit
grids and keeps the best point that passes every constraint check. Nothing
is imported from the solver modules, so agreement between the two is a
genuine cross-check. These routines are slow and meant for tests and the
``verify`` command.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numba
import numpy as np

from .model import (BlockDecision, ChannelState, EnergyModel, Profile, SystemParams, as_sample,
                    harvest_satisfied, primary_rate, secondary_rate)
from .numerics import DualState

__all__ = [
    "GridSpec",
    "BlockOptimum",
    "oracle_per_block",
    "rate_cell_bound",
    "block_floor",
    "oracle_average",
    "oracle_outage_dual",
    "pareto_beats_full_power",
    "grid_argmax_f_minus_chi",
]


@dataclass(frozen=True)
class GridSpec:
    p_points: int = 2001
    alpha_points: int = 1001
    p_max: Optional[float] = None  # defaults to P_pk for the peak problems

    def __post_init__(self):
        if self.p_points < 2 or self.alpha_points < 2:
            raise ValueError("grids need at least two points per axis")


@dataclass(frozen=True)
class BlockOptimum:
    p: float
    alpha: float
    rate: float
    active: bool


@numba.njit(cache=True)
def _scan_peak_grid(ps, alphas, h1, g1, f, g2, c, s2_pr, s2_sr, eta, practical, eps_st, eps_b, u):
    # Walk power rows from the top; within a row walk alpha down and stop at
    # the first feasible point, which has the largest p * alpha in that row.
    # Rows whose largest product cannot reach the best found are skipped.
    best_x, best_i, best_j = 0.0, -1, -1
    for i in range(ps.size - 1, -1, -1):
        p = ps[i]
        if p * alphas[alphas.size - 1] < best_x:
            break
        for j in range(alphas.size - 1, 0, -1):
            x = p * alphas[j]
            if x < best_x:
                break
            if h1 * p < c * (g2 * f * x + s2_pr):
                continue
            harvested = eta * f * (p - x)
            if practical:
                if harvested < eps_b + u * np.log2(1.0 + g1 * f * x / s2_sr):
                    continue
            elif harvested < eps_st:
                continue
            if x > 0 and (x > best_x or best_i < 0 or x == best_x):
                best_x, best_i, best_j = x, i, j
            break
    return best_i, best_j


def oracle_per_block(ch: ChannelState, sp: SystemParams, em: EnergyModel,
                     grid: GridSpec = GridSpec()) -> BlockOptimum:
    """Best feasible (p, alpha) on the grid for one block under the peak limit.

    Constraints: primary rate at least gamma, the circuit requirement of
    ``em`` and ``p <= p_max``. The reader SNR grows with ``p * alpha``, so
    the best grid point is the feasible one with the largest product; ties
    go to the smallest p. Returns an inactive zero-rate result when only
    alpha = 0 (or nothing) is feasible.
    """
    p_max = sp.p_pk if grid.p_max is None else grid.p_max
    ps = np.linspace(0.0, p_max, grid.p_points)
    alphas = np.linspace(0.0, 1.0, grid.alpha_points)
    i, j = _scan_peak_grid(ps, alphas, ch.h1, ch.g1, ch.f, ch.g2, 2.0 ** sp.gamma - 1.0,
                           sp.sigma_pr_sq, sp.sigma_sr_sq, sp.eta_st,
                           em is EnergyModel.PRACTICAL, sp.eps_st, sp.eps_b, sp.u)
    if i < 0 or ch.g1 == 0:
        return BlockOptimum(0.0, 0.0, 0.0, False)
    d = BlockDecision(float(ps[i]), float(alphas[j]), True)
    return BlockOptimum(d.p, d.alpha, float(secondary_rate(ch, d, sp)), True)


def rate_cell_bound(ch: ChannelState, sp: SystemParams, grid: GridSpec = GridSpec()) -> float:
    """Largest change of the secondary rate across one cell of the peak grid."""
    p_max = sp.p_pk if grid.p_max is None else grid.p_max
    dp = p_max / (grid.p_points - 1)
    da = 1.0 / (grid.alpha_points - 1)
    k = ch.g1 * ch.f / sp.sigma_sr_sq
    return k * (dp + p_max * da) / math.log(2.0)


def _on_ok(ch, p, alpha, sp, em):
    d = BlockDecision(p, alpha, True)
    return bool(primary_rate(ch, d, sp) >= sp.gamma) and bool(harvest_satisfied(ch, d, sp, em))


def block_floor(ch: ChannelState, sp: SystemParams, alpha_bar: float, em: EnergyModel,
                p_max: float, points: int = 100001) -> float:
    """Least power in ``[0, p_max]`` at which the block can carry the tag, found by scanning.

    The constraint checks come straight from the model; the first passing
    scan point is refined by bisecting between it and its predecessor.
    ``inf`` if no scan point passes.
    """
    ps = np.linspace(0.0, p_max, points)
    d = Profile(p=ps, alpha=np.full(points, alpha_bar), secondary_active=np.ones(points, bool))
    ok = (np.asarray(primary_rate(ch, d, sp)) >= sp.gamma) & np.asarray(
        harvest_satisfied(ch, d, sp, em))
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        return math.inf
    j = int(idx[0])
    if j == 0:
        return 0.0
    lo, hi = float(ps[j - 1]), float(ps[j])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _on_ok(ch, mid, alpha_bar, sp, em):
            hi = mid
        else:
            lo = mid
    return hi


def _best_split(gains, floors, total, points=41, rounds=40):
    """Maximise sum log2(1 + g_i p_i) over p_i >= floor_i, sum p_i <= total by zooming grids.

    The last block takes whatever budget the others leave. Returns
    ``(value, powers)`` or ``None`` when the floors do not fit.
    """
    k = len(gains)
    if k == 0:
        return 0.0, np.zeros(0)
    spare = total - float(np.sum(floors))
    if spare < 0:
        return None
    if k == 1:
        p = np.array([floors[0] + spare])
        return float(np.log2(1.0 + gains[0] * p[0])), p
    lo = np.zeros(k - 1)
    hi = np.full(k - 1, spare)
    best_val, best_extra = -math.inf, None
    for _ in range(rounds):
        axes = [np.linspace(lo[i], hi[i], points) for i in range(k - 1)]
        mesh = np.meshgrid(*axes, indexing="ij")
        extra = np.stack([m.ravel() for m in mesh])
        last = spare - extra.sum(axis=0)
        valid = last >= 0
        val = np.sum(np.log2(1.0 + gains[:-1, None] * (floors[:-1, None] + extra)), axis=0)
        val = val + np.log2(1.0 + gains[-1] * (floors[-1] + np.maximum(last, 0.0)))
        val = np.where(valid, val, -np.inf)
        i = int(np.argmax(val))
        if val[i] > best_val:
            best_val, best_extra = float(val[i]), extra[:, i].copy()
        width = (hi - lo) / (points - 1)
        if np.all(width <= 1e-12 * max(1.0, spare)):
            break
        lo = np.maximum(0.0, best_extra - 2 * width)
        hi = np.minimum(spare, best_extra + 2 * width)
    last = spare - float(np.sum(best_extra))
    p = np.concatenate((floors[:-1] + best_extra, [floors[-1] + max(last, 0.0)]))
    return best_val, p


def oracle_average(blocks: Sequence[ChannelState], sp: SystemParams, alpha_bar: float,
                   em: EnergyModel = EnergyModel.IDEAL,
                   floors: Optional[Sequence[float]] = None) -> Tuple[Profile, float]:
    """Best power profile for up to four equiprobable blocks at a fixed alpha.

    Each block is either silent or transmits at least its floor; every
    on/off pattern is tried and the budget split among the on-blocks by a
    zooming grid search. Floors default to :func:`block_floor`.
    """
    s = as_sample(blocks)
    n = len(s)
    if n > 4:
        raise ValueError("oracle_average handles at most four blocks")
    total = n * sp.p_av
    if floors is None:
        floors = [block_floor(s[i], sp, alpha_bar, em, total) for i in range(n)]
    floors = np.asarray(floors, dtype=float)
    gains = s.g1 * alpha_bar * s.f / sp.sigma_sr_sq
    best_val, best_p = 0.0, np.zeros(n)
    for pattern in itertools.product((False, True), repeat=n):
        on = np.array(pattern, dtype=bool)
        if not on.any() or not np.all(np.isfinite(floors[on])):
            continue
        res = _best_split(gains[on], floors[on], total)
        if res is None:
            continue
        val, p_on = res
        if val > best_val:
            best_val = val
            best_p = np.zeros(n)
            best_p[on] = p_on
    on = best_p > 0
    prof = Profile(p=best_p, alpha=np.where(on, alpha_bar, 0.0), secondary_active=on)
    for i in np.flatnonzero(on):
        if not _on_ok(s[int(i)], float(best_p[i]), alpha_bar, sp, em):
            raise AssertionError("oracle produced a block violating its constraints")
    if prof.mean_power > sp.p_av * (1 + 1e-12):
        raise AssertionError("oracle produced a profile over budget")
    return prof, prof.capacity(s, sp)


def _block_table(ch, sp, alpha_bar, p_grid):
    """Secondary rate and outage flag of one block at every grid power (tag on iff powered)."""
    powered = sp.eta_st * (1.0 - alpha_bar) * ch.f * p_grid >= sp.eps_st
    d = Profile(p=p_grid, alpha=np.full(p_grid.size, alpha_bar), secondary_active=powered)
    rate = np.asarray(secondary_rate(ch, d, sp), dtype=float)
    outage = np.asarray(primary_rate(ch, d, sp), dtype=float) <= sp.gamma
    return rate, outage


def oracle_outage_dual(blocks: Sequence[ChannelState], sp: SystemParams, alpha_bar: float,
                       lam_grid: Sequence[float], mu_grid: Sequence[float],
                       p_points: int = 20001, p_max: Optional[float] = None
                       ) -> Tuple[float, DualState, float]:
    """Best feasible primal found by scanning a grid of outage and power prices.

    At each price pair every block independently picks the grid power
    maximising its rate minus ``mu p`` minus ``lam`` times its outage flag;
    silence (p = 0) is worth zero and is not an outage. The resulting
    profile is kept if it meets both budgets. Returns ``(capacity, dual,
    dual_value)`` where ``dual_value`` is the smallest dual function value
    seen on the grid (an upper bound on the optimum).
    """
    s = as_sample(blocks)
    n = len(s)
    if n > 3:
        raise ValueError("oracle_outage_dual handles at most three blocks")
    p_max = 100.0 * sp.p_av if p_max is None else p_max
    p_grid = np.linspace(0.0, p_max, p_points)
    tables = []
    for i in range(n):
        rate, outage = _block_table(s[i], sp, alpha_bar, p_grid)
        outage[0] = False
        tables.append((rate, outage))
    best_cap, best_dual, best_q = -math.inf, DualState(), math.inf
    for lam in lam_grid:
        for mu in mu_grid:
            ps, outs, rates, q = [], [], [], 0.0
            for rate, outage in tables:
                val = rate - mu * p_grid - lam * outage
                j = int(np.argmax(val))
                q += float(val[j])
                ps.append(p_grid[j])
                outs.append(bool(outage[j]))
                rates.append(float(rate[j]))
            q = q / n + lam * sp.eps_out + mu * sp.p_av
            best_q = min(best_q, q)
            if np.mean(ps) <= sp.p_av and np.mean(outs) <= sp.eps_out + 1e-12:
                cap = float(np.mean(rates))
                if cap > best_cap:
                    best_cap, best_dual = cap, DualState(lam=float(lam), mu=float(mu))
    return best_cap, best_dual, best_q


def pareto_beats_full_power(blocks: Sequence[ChannelState], sp: SystemParams, alpha_bar: float,
                            p_points: int = 2001, tol: float = 1e-12) -> Tuple[bool, float, int]:
    """Whether any grid power profile beats full power in (capacity, outage).

    Each block may use any power on an even grid over ``[0, P_pk]``; the tag
    reflects whenever its circuit is powered. Because capacity is a sum over
    blocks and outage a count, the best capacity for every outage count is
    an exact knapsack over per-block (best rate without outage, best rate
    in outage) pairs. Returns ``(beaten, full_power_capacity,
    full_power_outages)``.
    """
    s = as_sample(blocks)
    n = len(s)
    p_grid = np.linspace(0.0, sp.p_pk, p_points)
    best = np.full((n, 2), -math.inf)
    ref_cap, ref_out = 0.0, 0
    for i in range(n):
        rate, outage = _block_table(s[i], sp, alpha_bar, p_grid)
        for flag in (0, 1):
            sel = outage == bool(flag)
            if sel.any():
                best[i, flag] = float(np.max(rate[sel]))
        ref_cap += float(rate[-1])
        ref_out += int(outage[-1])
    # dp[k] = best capacity sum with exactly k outages
    dp = np.full(n + 1, -math.inf)
    dp[0] = 0.0
    for i in range(n):
        new = np.full(n + 1, -math.inf)
        new = np.maximum(new, dp + best[i, 0])
        new[1:] = np.maximum(new[1:], dp[:-1] + best[i, 1])
        dp = new
    beaten = False
    for k in range(ref_out + 1):
        if dp[k] > ref_cap + tol or (k < ref_out and dp[k] >= ref_cap - tol):
            beaten = True
    return beaten, ref_cap / n, ref_out


def grid_argmax_f_minus_chi(ch: ChannelState, sp: SystemParams, alpha_bar: float, lam: float,
                            mu: float, lo: float, hi: float, points: int = 10000):
    """Grid maximiser of ``log2(1 + a p) - mu p - lam chi(p)`` on ``[lo, hi]``.

    The outage flag comes from comparing the primary rate with the target.
    Returns ``(p_best, value_best, cell_width, objective)`` where
    ``objective`` evaluates the same expression at any power.
    """
    a = ch.g1 * alpha_bar * ch.f / sp.sigma_sr_sq

    def objective(p):
        p = np.asarray(p, dtype=float)
        d = Profile(p=np.atleast_1d(p), alpha=alpha_bar, secondary_active=True)
        out = np.asarray(primary_rate(ch, d, sp), dtype=float) <= sp.gamma
        val = np.log2(1.0 + a * np.atleast_1d(p)) - mu * np.atleast_1d(p) - lam * out
        return val if p.ndim else float(val[0])

    grid = np.linspace(lo, hi, points)
    vals = objective(grid)
    j = int(np.argmax(vals))
    return float(grid[j]), float(vals[j]), (hi - lo) / (points - 1), objective
