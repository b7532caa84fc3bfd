"""Fixed reflection coefficient with a primary outage budget instead of a hard rate target.

Under a peak power limit every block transmits at full power and only the
tag's on/off state varies with the channel. Under an average power budget
each block picks between staying silent, transmitting without primary
outage (power at least ``max(p', p'')``) and transmitting in outage (power
in ``[p'', p']``); an outage price and a power price decide between them.

Outage booking
--------------
:func:`chi` follows the closed form ``chi(p) = 1 iff p <= p'``. The
average-power solver instead treats ``p = p'`` as meeting the rate target
(the rate then equals the target exactly), which is what makes a zero
outage budget coincide with the hard rate constraint. Silent blocks carry
no primary traffic and are not booked as outages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import Infeasible, NonConvergence
from .model import (ChannelState, Profile, SystemParams, as_sample, circuit_floor, rate_factor,
                    rate_floor, rate_margin)
from .numerics import (AlphaSearchConfig, BisectionConfig, DualState, alpha_grid,
                       inverse_sqrt_steps, solve_lambda_average_power, subgradient_2d)
from .solvers_average import (LOCAL_SEARCH_MAX_BLOCKS, AlphaSearchResult, ChoiceSet,
                              improve_choices, secondary_gain)

__all__ = [
    "OutageCandidates",
    "candidates",
    "chi",
    "solve_p5a",
    "solve_p5",
    "p6b_block",
    "solve_p6a",
    "solve_p6",
    "allowed_outages",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class OutageCandidates:
    p_tilde: float  # unconstrained water level for the power price
    p_prime: float  # least power without primary outage; inf if outage is certain
    p_dprime: float  # least power running the tag circuit


def candidates(ch: ChannelState, sp: SystemParams, alpha_bar: float, mu: float) -> OutageCandidates:
    a = float(secondary_gain(ch, alpha_bar, sp))
    if a > 0:
        p_tilde = 1.0 / (mu * LN2) - 1.0 / a if mu > 0 else math.inf
    else:
        p_tilde = -math.inf
    return OutageCandidates(p_tilde, float(rate_floor(ch, alpha_bar, sp)),
                            float(circuit_floor(ch, alpha_bar, sp)))


def chi(ch, p, alpha_bar, sp: SystemParams):
    """Primary outage indicator at power ``p`` with the tag reflecting ``alpha_bar``.

    1 where the primary rate does not exceed the target: always when the
    rate margin is not positive, otherwise for ``p <= p'``.
    """
    margin = np.asarray(rate_margin(ch, alpha_bar, sp), dtype=float)
    pp = np.asarray(rate_floor(ch, alpha_bar, sp), dtype=float)
    out = ((margin <= 0) | (np.asarray(p, dtype=float) <= pp)).astype(int)
    return out.item() if out.ndim == 0 else out


def allowed_outages(eps: float, n: int) -> int:
    """Number of blocks that may be in outage in a sample of ``n``."""
    return min(n, int(math.floor(eps * n + 1e-9)))


# ---------------------------------------------------------------------------
# Peak power


def _p5_state(s, sp: SystemParams, alpha_bar: float):
    pdd = np.asarray(circuit_floor(s, alpha_bar, sp), dtype=float)
    active = (pdd <= sp.p_pk) & (s.f > 0) & (s.g1 > 0)
    a_eff = np.where(active, alpha_bar, 0.0)
    out = chi(s, sp.p_pk, a_eff, sp).astype(bool)
    snr = s.g1 * a_eff * s.f * sp.p_pk / sp.sigma_sr_sq
    return active, a_eff, out, snr


def solve_p5a(blocks, sp: SystemParams, alpha_bar: float) -> Tuple[Profile, float, float]:
    """Full power in every block; returns ``(profile, outage, capacity)``.

    Blocks whose circuit cannot run at full power switch the tag off and
    cause no interference.
    """
    if not 0 <= alpha_bar < 1:
        raise ValueError("alpha_bar must lie in [0, 1)")
    s = as_sample(blocks)
    active, a_eff, out, snr = _p5_state(s, sp, alpha_bar)
    prof = Profile(p=np.full(len(s), sp.p_pk), alpha=a_eff, secondary_active=active, outage=out)
    cap = float(np.mean(np.log2(1.0 + snr))) if len(s) else 0.0
    return prof, prof.outage_probability, cap


def solve_p5(blocks, sp: SystemParams,
             alpha_cfg: AlphaSearchConfig = AlphaSearchConfig()) -> AlphaSearchResult:
    """Best grid alpha whose full-power outage stays within ``sp.eps_out``.

    Raises
    ------
    Infeasible
        If no grid point meets the outage budget.
    """
    s = as_sample(blocks)
    budget = allowed_outages(sp.eps_out, len(s))
    best = None
    for alpha in alpha_grid(alpha_cfg):
        active, a_eff, out, snr = _p5_state(s, sp, float(alpha))
        if int(np.count_nonzero(out)) > budget:
            continue
        cap = float(np.mean(np.log2(1.0 + snr))) if len(s) else 0.0
        if best is None or cap > best[1]:
            best = (float(alpha), cap, active, a_eff, out)
    if best is None:
        raise Infeasible(f"no reflection coefficient meets an outage budget of {sp.eps_out}")
    alpha, cap, active, a_eff, out = best
    prof = Profile(p=np.full(len(s), sp.p_pk), alpha=a_eff, secondary_active=active, outage=out)
    return AlphaSearchResult(alpha, cap, prof.outage_probability, prof, None)


# ---------------------------------------------------------------------------
# Average power


def _value(a, p, mu):
    return np.log2(1.0 + a * p) - mu * p


def p6b_block(ch: ChannelState, sp: SystemParams, alpha_bar: float, lam: float, mu: float,
              p_cap: float = math.inf) -> float:
    """Power maximising ``F(p) - lam chi(p)`` over ``[p'', p_cap]``.

    ``F(p) = log2(1 + g1 alpha f p / sigma_sr^2) - mu p``. When outage is
    certain the outage price is a constant and the water level, raised to
    the circuit floor, is optimal. Otherwise the best outage power (water
    level clipped to ``[p'', p']``) competes with the best outage-free power
    (water level raised to ``max(p', p'')``); a tie goes to the latter.

    Raises
    ------
    Infeasible
        If the circuit floor exceeds ``p_cap``.
    """
    if not mu > 0:
        raise ValueError("mu must be > 0")
    c = candidates(ch, sp, alpha_bar, mu)
    a = float(secondary_gain(ch, alpha_bar, sp))
    pdd, pp, pt = c.p_dprime, c.p_prime, c.p_tilde
    if pdd > p_cap:
        raise Infeasible("circuit floor above the power cap")
    if not math.isfinite(pp):
        return float(min(max(pt, pdd), p_cap))
    options = []
    m = max(pp, pdd)
    if m <= p_cap:
        p_a = min(max(pt, m), p_cap)
        options.append((float(_value(a, p_a, mu)), p_a))
    if pdd < pp:
        p_b = min(max(pt, pdd), pp, p_cap)
        options.append((float(_value(a, p_b, mu)) - lam, p_b))
    best_v, best_p = options[0]
    for v, p in options[1:]:
        if v > best_v:
            best_v, best_p = v, p
    return float(best_p)


class _OutageBlocks:
    """Per-block constants of the average-power outage problem at one alpha."""

    def __init__(self, s, sp: SystemParams, alpha_bar: float):
        self.n = len(s)
        self.a = np.asarray(secondary_gain(s, alpha_bar, sp), dtype=float)
        self.pdd = np.asarray(circuit_floor(s, alpha_bar, sp), dtype=float)
        pp = np.asarray(rate_floor(s, alpha_bar, sp), dtype=float)
        always = np.asarray(rate_margin(s, alpha_bar, sp), dtype=float) <= 0
        if rate_factor(sp.gamma) == 0.0:
            always = np.zeros(self.n, dtype=bool)
        self.always = always
        self.pp = np.where(always, np.inf, pp)
        usable = (self.a > 0) & np.isfinite(self.pdd)
        # outage-free option: [max(p', p''), inf); outage option: [p'', p']
        self.m_a = np.maximum(self.pp, self.pdd)
        self.has_a = usable & ~always & np.isfinite(self.m_a)
        self.has_b = usable & (always | (self.pdd < self.pp))
        self.usable = usable

    def options(self, mu: float, cap: float = math.inf):
        """Best power and value of each option at power price ``mu``."""
        with np.errstate(divide="ignore", invalid="ignore"):
            pt = (1.0 / (mu * LN2) if mu > 0 else math.inf) - 1.0 / self.a
            p_a = np.minimum(np.maximum(pt, self.m_a), cap)
            p_b = np.minimum(np.clip(pt, self.pdd, self.pp), cap)
            v_a = np.where(self.has_a & (self.m_a <= cap), _value(self.a, p_a, mu), -np.inf)
            v_b = np.where(self.has_b & (self.pdd <= cap), _value(self.a, p_b, mu), -np.inf)
        return p_a, v_a, p_b, v_b

    def respond(self, lam: float, mu: float, cap: float = math.inf):
        """Per-block best response: ``(p, in_outage_option, on)``."""
        p_a, v_a, p_b, v_b = self.options(mu, cap)
        take_b = v_b - lam > np.maximum(0.0, v_a)
        take_a = ~take_b & (v_a > 0)
        p = np.where(take_b, p_b, np.where(take_a, p_a, 0.0))
        return p, take_b, take_b | take_a

    def profiled_lambda(self, mu: float, k: int) -> float:
        """Smallest outage price letting at most ``k`` blocks pick the outage option."""
        if k >= self.n:
            return 0.0
        _, v_a, _, v_b = self.options(mu)
        with np.errstate(invalid="ignore"):
            delta = np.where(np.isfinite(v_b), v_b - np.maximum(0.0, v_a), -np.inf)
        kth = float(np.partition(-delta, k)[k])
        return max(0.0, -kth)

    def outage_flags(self, p, take_b):
        return take_b & (self.always | (p < self.pp))

    def capacity(self, p):
        return float(np.mean(np.log2(1.0 + self.a * p))) if self.n else 0.0


def _profile(blk: _OutageBlocks, alpha_bar, p, take_b, on):
    return Profile(p=p, alpha=np.where(on, alpha_bar, 0.0), secondary_active=on,
                   outage=blk.outage_flags(p, take_b))


def _residuals(lam, mu, outage, mean_p, sp):
    return (0.0 if lam == 0 else abs(lam * (outage - sp.eps_out)),
            0.0 if mu == 0 else abs(mu * (mean_p - sp.p_av)))


def _solve_profiled(blk: _OutageBlocks, sp: SystemParams, alpha_bar: float, cfg: BisectionConfig):
    k = allowed_outages(sp.eps_out, blk.n)

    def respond(mu):
        if mu == 0:
            return np.where(blk.usable, np.inf, 0.0), np.zeros(blk.n, bool), blk.usable
        return blk.respond(blk.profiled_lambda(mu, k), mu)

    search = solve_lambda_average_power(lambda mu: respond(mu)[0], range(blk.n), sp.p_av, cfg)
    if search.lam == 0.0:
        p, take_b, on = respond(0.0)
        return p, take_b, on, DualState(lam=0.0, mu=0.0, iterations=search.iterations,
                                        bracket=search.bracket, residuals=(0.0, 0.0))

    n = blk.n
    cs = ChoiceSet(a=blk.a, lo=np.stack((np.zeros(n), blk.m_a, blk.pdd)),
                   hi=np.stack((np.zeros(n), np.full(n, np.inf), blk.pp)),
                   allowed=np.stack((np.ones(n, bool), blk.has_a, blk.has_b)), max_outage=k)
    best = None
    for mu in search.bracket[::-1]:
        if mu <= 0:
            continue
        lam = blk.profiled_lambda(mu, k)
        _, take_b, on = blk.respond(lam, mu)
        choice = np.where(take_b, 2, np.where(on, 1, 0))
        res = cs.fill(choice, sp.p_av)
        if n <= LOCAL_SEARCH_MAX_BLOCKS:
            res = improve_choices(cs, choice, sp.p_av)
            if res is not None:
                choice, p, mu_ref = res
                res = (p, mu_ref)
        if res is None:
            continue
        p, mu_ref = res
        cap = blk.capacity(p)
        if best is None or cap > best[0]:
            best = (cap, p, choice == 2, choice > 0, lam, mu_ref)
    _, p, take_b, on, lam, mu_ref = best
    outage = float(np.mean(blk.outage_flags(p, take_b)))
    mean_p = float(np.mean(p))
    dual = DualState(lam=lam, mu=mu_ref, iterations=search.iterations,
                     converged=abs(mean_p - sp.p_av) <= 1e-3 * sp.p_av, bracket=search.bracket,
                     residuals=_residuals(lam, mu_ref, outage, mean_p, sp))
    return p, take_b, on, dual


def _solve_subgradient(blk: _OutageBlocks, sp: SystemParams, alpha_bar: float, steps: int,
                       step_schedule, init: DualState):
    cap = 100.0 * sp.p_av if math.isfinite(sp.p_av) else math.inf

    def gaps(lam, mu):
        p, take_b, _ = blk.respond(lam, mu, cap)
        out = float(np.mean(blk.outage_flags(p, take_b)))
        gap_p = float(np.mean(p)) - sp.p_av if math.isfinite(sp.p_av) else -1.0
        return out - sp.eps_out, gap_p

    scale = (1.0, 1.0 / sp.p_av if math.isfinite(sp.p_av) else 1.0)
    tol = 1e-3 * max(1.0, sp.p_av if math.isfinite(sp.p_av) else 1.0)
    dual = subgradient_2d(gaps, init, steps, step_schedule, tol=tol,
                          feas_tol=(1e-9, 1e-3 * sp.p_av), scale=scale)
    p, take_b, on = blk.respond(dual.lam, dual.mu, cap)
    if np.any(on & (p >= cap)):
        raise NonConvergence("a block sits at the power cap; the budget does not bind", state=dual)
    return p, take_b, on, dual


def solve_p6a(blocks, sp: SystemParams, alpha_bar: float, cfg: BisectionConfig = BisectionConfig(),
              method: str = "profiled", steps: int = 5000, step_schedule=None,
              init: Optional[DualState] = None) -> Tuple[Profile, DualState, float, float]:
    """Optimal powers at a fixed alpha under outage and average power budgets.

    Returns ``(profile, dual, outage, capacity)``.

    ``method="profiled"`` (default) minimises the dual exactly over the
    outage price for each power price (the outage price is then an order
    statistic of the per-block gains from accepting outage), bisects the
    power price on the budget, and fills the budget exactly with the
    resulting choices held fixed. ``method="subgradient"`` runs projected
    subgradient steps on both prices and returns the best response at the
    final prices, with powers capped at ``100 * P_av``.
    """
    if not 0 <= alpha_bar < 1:
        raise ValueError("alpha_bar must lie in [0, 1)")
    s = as_sample(blocks)
    blk = _OutageBlocks(s, sp, alpha_bar)
    if method == "profiled":
        p, take_b, on, dual = _solve_profiled(blk, sp, alpha_bar, cfg)
    elif method == "subgradient":
        p, take_b, on, dual = _solve_subgradient(blk, sp, alpha_bar, steps,
                                                 step_schedule or inverse_sqrt_steps(1.0),
                                                 init or DualState(lam=0.0, mu=1.0))
    else:
        raise ValueError(f"unknown method {method!r}")
    prof = _profile(blk, alpha_bar, p, take_b, on)
    return prof, dual, prof.outage_probability, blk.capacity(p)


def solve_p6(blocks, sp: SystemParams, alpha_cfg: AlphaSearchConfig = AlphaSearchConfig(),
             cfg: BisectionConfig = BisectionConfig()) -> AlphaSearchResult:
    """Best grid alpha for the average-power outage problem."""
    s = as_sample(blocks)
    best = None
    for alpha in alpha_grid(alpha_cfg):
        prof, dual, outage, cap = solve_p6a(s, sp, float(alpha), cfg)
        if best is None or cap > best.capacity:
            best = AlphaSearchResult(float(alpha), cap, outage, prof, dual)
    return best
