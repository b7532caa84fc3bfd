"""Root finding and dual search shared by all solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import NonConvergence, NoSignChange

__all__ = [
    "BisectionConfig",
    "DualState",
    "AlphaSearchConfig",
    "bisect",
    "bisect_decreasing",
    "solve_lambda_average_power",
    "subgradient_2d",
    "inverse_sqrt_steps",
    "alpha_grid",
    "alpha_grid_search",
    "box_waterfill",
]


@dataclass(frozen=True)
class BisectionConfig:
    abs_tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class DualState:
    """Lagrange multipliers and how they were reached.

    ``lam`` prices the outage constraint (or, for the average-power
    problems, the power budget); ``mu`` prices the power budget when both
    constraints are present. ``bracket`` is the final multiplier bracket of a
    bisection search and ``residuals`` the complementary-slackness residuals
    of a subgradient search, when those apply.
    """

    lam: float = 0.0
    mu: float = 0.0
    iterations: int = 0
    converged: bool = True
    bracket: Optional[Tuple[float, float]] = None
    residuals: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if not (self.lam >= 0 and self.mu >= 0):
            raise ValueError(f"multipliers must be >= 0, got lam={self.lam}, mu={self.mu}")


@dataclass(frozen=True)
class AlphaSearchConfig:
    grid_points: int = 1001
    alpha_max: float = 1.0 - 1e-9

    def __post_init__(self):
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")
        if not 0 < self.alpha_max <= 1:
            raise ValueError("alpha_max must be in (0, 1]")


def bisect(fn: Callable[[float], float], lo: float, hi: float,
           cfg: BisectionConfig = BisectionConfig()) -> float:
    """Root of a scalar function whose values at ``lo`` and ``hi`` differ in sign."""
    flo, fhi = fn(lo), fn(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise NoSignChange(f"f({lo})={flo} and f({hi})={fhi} have the same sign")
    lo_pos = flo > 0
    for _ in range(cfg.max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= cfg.abs_tol or mid in (lo, hi):
            return mid
        fm = fn(mid)
        if fm == 0:
            return mid
        if (fm > 0) == lo_pos:
            lo = mid
        else:
            hi = mid
    if hi - lo <= cfg.abs_tol:
        return 0.5 * (lo + hi)
    raise NonConvergence(f"bisection did not reach width {cfg.abs_tol} in {cfg.max_iter} steps",
                         state=(lo, hi))


def bisect_decreasing(fn, lo, hi, abs_tol: float = 0.0, max_iter: int = 200):
    """Elementwise bisection for ``fn`` nonincreasing with fn(lo) >= 0 >= fn(hi).

    Runs until every bracket is narrower than ``abs_tol`` or stops shrinking
    in floating point. Returns the final ``(lo, hi)`` arrays.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        live = (hi - lo > abs_tol) & (mid > lo) & (mid < hi)
        if not live.any():
            break
        up = fn(mid) >= 0
        lo = np.where(live & up, mid, lo)
        hi = np.where(live & ~up, mid, hi)
    return lo, hi


def solve_lambda_average_power(per_block_policy: Callable[[float], np.ndarray], blocks,
                               p_av: float, cfg: BisectionConfig = BisectionConfig(),
                               rtol: float = 1e-12) -> DualState:
    """Price of power making the mean allocated power meet ``p_av``.

    ``per_block_policy(lam)`` returns the per-block powers at price ``lam``;
    they must be nonincreasing in ``lam``. The search doubles an upper
    bracket from 1 and then bisects until the bracket is ``rtol``-narrow.

    When the mean power jumps across ``p_av`` (a block switching on or off
    at the critical price) equality cannot be met: the returned state then
    has ``converged=False`` and ``lam`` on the feasible side of the jump,
    with ``bracket`` holding both sides for primal recovery by the caller.
    ``blocks`` is only used to check the policy output length.
    """
    n = len(blocks)

    def mean_power(lam):
        p = np.asarray(per_block_policy(lam), dtype=float)
        if p.size != n:
            raise ValueError(f"policy returned {p.size} powers for {n} blocks")
        return float(np.mean(p)) if n else 0.0

    with np.errstate(divide="ignore", invalid="ignore"):
        g0 = mean_power(0.0)
    if g0 <= p_av:
        return DualState(lam=0.0, iterations=0, converged=True, bracket=(0.0, 0.0))

    lo, hi = 0.0, 1.0
    g_hi = mean_power(hi)
    it = 0
    while g_hi > p_av:
        it += 1
        if it > cfg.max_iter:
            raise NonConvergence("could not bracket the power price", state=(lo, hi))
        lo, hi = hi, 2.0 * hi
        g_hi = mean_power(hi)

    tol = 1e-3 * p_av
    while hi - lo > rtol * hi:
        it += 1
        if it > cfg.max_iter + 200:
            break
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        g = mean_power(mid)
        if g > p_av:
            lo = mid
        else:
            hi, g_hi = mid, g
            if p_av - g <= rtol * p_av:
                break
    return DualState(lam=hi, iterations=it, converged=abs(g_hi - p_av) <= tol, bracket=(lo, hi))


def inverse_sqrt_steps(a: float = 1.0) -> Callable[[int], float]:
    return lambda k: a / math.sqrt(k)


def _cs(mult, gap):
    return 0.0 if mult == 0 else abs(mult * gap)


def subgradient_2d(objective: Callable[[float, float], Tuple[float, float]], init: DualState,
                   steps: int, step_schedule: Optional[Callable[[int], float]] = None, *,
                   tol: float = 1e-3, feas_tol: Tuple[float, float] = (0.0, 0.0),
                   scale: Tuple[float, float] = (1.0, 1.0)) -> DualState:
    """Projected subgradient descent on the dual of a two-constraint problem.

    ``objective(lam, mu)`` returns the constraint gaps ``(E[chi] - eps,
    E[p] - P_av)`` of the per-block best response at those prices; these are
    the negated subgradients of the dual function. Iteration stops once both
    complementary-slackness residuals are below ``tol`` and both gaps are
    below their ``feas_tol`` entries.

    Raises
    ------
    NonConvergence
        After ``steps`` iterations; ``exc.state`` holds the last iterate with
        its residuals.
    """
    step_schedule = step_schedule or inverse_sqrt_steps(1.0)
    lam, mu = init.lam, init.mu
    res = (math.inf, math.inf)
    for k in range(1, steps + 1):
        g_out, g_pow = objective(lam, mu)
        res = (_cs(lam, g_out), _cs(mu, g_pow))
        if (max(res) <= tol and g_out <= feas_tol[0] and g_pow <= feas_tol[1]):
            return DualState(lam=lam, mu=mu, iterations=init.iterations + k - 1,
                             converged=True, residuals=res)
        s = step_schedule(k)
        lam = max(0.0, lam + s * scale[0] * g_out)
        mu = max(0.0, mu + s * scale[1] * g_pow)
    state = DualState(lam=lam, mu=mu, iterations=init.iterations + steps,
                      converged=False, residuals=res)
    raise NonConvergence(f"subgradient search stopped after {steps} steps with "
                         f"residuals {res[0]:.3g}, {res[1]:.3g}", state=state)


def alpha_grid(cfg: AlphaSearchConfig = AlphaSearchConfig()) -> np.ndarray:
    return np.linspace(0.0, cfg.alpha_max, cfg.grid_points)


def alpha_grid_search(evaluate: Callable[[float], float],
                      cfg: AlphaSearchConfig = AlphaSearchConfig()) -> Tuple[float, float]:
    """Best grid point of ``evaluate`` over [0, alpha_max]; ties go to the smaller alpha.

    Infeasible points should evaluate to ``-inf``; if every point does, the
    first grid point is returned with value ``-inf``.
    """
    grid = alpha_grid(cfg)
    vals = np.array([evaluate(float(a)) for a in grid], dtype=float)
    vals[np.isnan(vals)] = -np.inf
    i = int(np.argmax(vals))
    return float(grid[i]), float(vals[i])


def box_waterfill(offset, lo, hi, total: float):
    """Solve sum_n clip(W - offset_n, lo_n, hi_n) = total for the water level W.

    Exact: the left side is piecewise linear in W, so it is evaluated at
    every breakpoint and the crossing segment solved directly. ``hi`` may
    hold ``inf``. Returns ``(p, W)``; ``W`` is ``inf`` when even the upper
    limits leave budget over, and ``None`` is returned when the lower limits
    alone exceed ``total`` by more than a relative 1e-12 (plus 1e-300, so a
    zero budget tolerates denormal limits).
    """
    offset = np.asarray(offset, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if offset.size == 0:
        return np.zeros(0), math.inf
    base = float(np.sum(lo))
    if base > total * (1 + 1e-12) + 1e-300:
        return None
    if np.all(np.isfinite(hi)) and float(np.sum(hi)) <= total:
        return hi.copy(), math.inf

    starts = np.sort(offset + lo)
    ends_all = offset + hi
    ends = np.sort(ends_all[np.isfinite(ends_all)])
    cs_s = np.concatenate(([0.0], np.cumsum(starts)))
    cs_e = np.concatenate(([0.0], np.cumsum(ends)))

    def fill(w):
        ks = np.searchsorted(starts, w, side="right")
        ke = np.searchsorted(ends, w, side="right")
        return base + (ks * w - cs_s[ks]) - (ke * w - cs_e[ke]), ks - ke

    bps = np.concatenate((starts, ends))
    bps.sort()
    vals, _ = fill(bps)
    i = int(np.searchsorted(vals, total, side="left"))
    if i == 0:
        w = float(bps[0])
    else:
        w0 = float(bps[i - 1])
        v0, slope = fill(w0)
        w = w0 + (total - float(v0)) / float(slope) if slope > 0 else w0
        if i < bps.size:
            w = min(w, float(bps[i]))
    p = np.clip(w - offset, lo, hi)
    return p, w
