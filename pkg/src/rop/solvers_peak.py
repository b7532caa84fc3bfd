"""Per-block closed forms under a peak power limit with a per-block reflection coefficient.

Both problems separate over fading blocks because every constraint is
instantaneous. The PT always transmits at full power; the reflection
coefficient is pushed up until either the primary rate target or the tag's
energy requirement binds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChannel, Infeasible
from .model import (BlockDecision, ChannelSample, ChannelState, Profile, SystemParams,
                    as_sample, rate_factor)
from .numerics import bisect_decreasing

__all__ = [
    "PeakSolution",
    "alpha_l",
    "alpha_m",
    "alpha_pk",
    "curve_residual",
    "solve_p1",
    "solve_p2",
    "solve_p1_sample",
    "solve_p2_sample",
]

# Relative slack used when re-checking a constraint that binds by construction.
BINDING_TOL = 1e-9


@dataclass(frozen=True)
class PeakSolution:
    decision: BlockDecision
    alpha_l: float = math.nan
    alpha_m: float = math.nan
    alpha_pk: float = math.nan


def _rate_bound(ch, sp: SystemParams, p):
    """Largest alpha keeping the primary rate target at power ``p`` (unclamped).

    +inf without a rate target or when the tag does not interfere with the PR
    and the target is met; -inf when it is missed even without reflection.
    """
    c = rate_factor(sp.gamma)
    h1, g2, f = (np.asarray(x, dtype=float) for x in (ch.h1, ch.g2, ch.f))
    if c == 0.0:
        return np.full(np.broadcast(h1, g2, f).shape, np.inf)
    gf = g2 * f
    safe = np.where(gf > 0, gf, 1.0)
    with np.errstate(over="ignore", divide="ignore"):  # tiny targets give an infinite bound
        quotient = h1 / (c * safe) - sp.sigma_pr_sq / (safe * p)
    direct = np.where(h1 * p >= c * sp.sigma_pr_sq, np.inf, -np.inf)
    return np.where(gf > 0, quotient, direct)


def _circuit_bound(ch, sp: SystemParams, p):
    f = np.asarray(ch.f, dtype=float)
    safe = np.where(f > 0, f, 1.0)
    return np.where(f > 0, 1.0 - sp.eps_st / (sp.eta_st * safe * p), -np.inf)


def _alpha_l_array(ch, sp: SystemParams):
    inner = np.minimum(np.minimum(_rate_bound(ch, sp, sp.p_pk), _circuit_bound(ch, sp, sp.p_pk)), 1.0)
    return np.maximum(0.0, inner)


def alpha_l(ch: ChannelState, sp: SystemParams) -> float:
    """Largest reflection coefficient feasible at full power (ideal circuit model)."""
    if ch.f == 0:
        raise DegenerateChannel("f = 0: the tag receives no power")
    return float(_alpha_l_array(ch, sp))


def alpha_m(ch: ChannelState, sp: SystemParams) -> float:
    """Largest reflection coefficient keeping the primary rate target at full power.

    Unclamped; may be negative (target missed) or infinite (no target or no
    tag-to-PR path).
    """
    if ch.f == 0:
        raise DegenerateChannel("f = 0: the tag receives no power")
    return float(_rate_bound(ch, sp, sp.p_pk))


def curve_residual(alpha, ch, sp: SystemParams, p):
    """Harvested minus consumed power under the practical circuit model."""
    alpha = np.asarray(alpha, dtype=float)
    return (sp.eta_st * (1.0 - alpha) * ch.f * p - sp.eps_b
            - sp.u * np.log2(1.0 + ch.g1 * alpha * ch.f * p / sp.sigma_sr_sq))


def _alpha_pk_array(ch, sp: SystemParams, p=None):
    """Intersection of the harvested and consumed power curves in alpha.

    NaN where the static power alone cannot be harvested.
    """
    p = sp.p_pk if p is None else p
    shape = np.broadcast(np.asarray(ch.f), np.asarray(ch.g1), np.asarray(p)).shape
    r0 = np.broadcast_to(curve_residual(0.0, ch, sp, p), shape)
    r1 = np.broadcast_to(curve_residual(1.0, ch, sp, p), shape)
    lo = np.zeros(shape)
    hi = np.ones(shape)
    lo, hi = bisect_decreasing(lambda a: curve_residual(a, ch, sp, p), lo, hi)
    # lo always keeps a nonnegative residual, i.e. it is feasible.
    out = np.where(r1 >= 0, 1.0, lo)
    return np.where(r0 < 0, np.nan, out)


def alpha_pk(ch: ChannelState, sp: SystemParams, p: float = None) -> float:
    """Largest alpha meeting the practical circuit requirement at power ``p`` (default P_pk).

    Raises
    ------
    Infeasible
        If even alpha = 0 leaves less than the static circuit power.
    """
    val = float(_alpha_pk_array(ch, sp, p))
    if math.isnan(val):
        raise Infeasible("static circuit power exceeds the harvested power at alpha = 0")
    return val


def _outage_without_tag(sample, sp):
    # An inactive tag reflects nothing; the PR then only misses its target if
    # the direct link is too weak.
    return sample.h1 * sp.p_pk < rate_factor(sp.gamma) * sp.sigma_pr_sq


def solve_p1_sample(blocks, sp: SystemParams) -> Profile:
    """Optimal full-power allocation with the ideal circuit model for every block."""
    s = as_sample(blocks)
    a = _alpha_l_array(s, sp)
    harvest_ok = (sp.eta_st * (1.0 - a) * s.f * sp.p_pk
                  >= sp.eps_st - BINDING_TOL * max(1.0, sp.eps_st))
    active = (a > 0) & harvest_ok & (s.f > 0) & (s.g1 > 0)
    alpha = np.where(active, a, 0.0)
    return Profile(p=np.full(len(s), sp.p_pk), alpha=alpha, secondary_active=active,
                   outage=~active & _outage_without_tag(s, sp))


def solve_p2_sample(blocks, sp: SystemParams) -> Profile:
    """Optimal full-power allocation with the practical circuit model for every block."""
    s = as_sample(blocks)
    apk = _alpha_pk_array(s, sp)
    am = _rate_bound(s, sp, sp.p_pk)
    a = np.clip(np.fmin(am, apk), 0.0, 1.0)
    active = (a > 0) & ~np.isnan(apk) & (s.f > 0) & (s.g1 > 0)
    alpha = np.where(active, a, 0.0)
    return Profile(p=np.full(len(s), sp.p_pk), alpha=alpha, secondary_active=active,
                   outage=~active & _outage_without_tag(s, sp))


def solve_p1(ch: ChannelState, sp: SystemParams) -> PeakSolution:
    prof = solve_p1_sample(ChannelSample.from_states([ch]), sp)
    return PeakSolution(decision=prof[0], alpha_l=float(_alpha_l_array(ch, sp)),
                        alpha_m=float(_rate_bound(ch, sp, sp.p_pk)))


def solve_p2(ch: ChannelState, sp: SystemParams) -> PeakSolution:
    prof = solve_p2_sample(ChannelSample.from_states([ch]), sp)
    return PeakSolution(decision=prof[0], alpha_m=float(_rate_bound(ch, sp, sp.p_pk)),
                        alpha_pk=float(_alpha_pk_array(ch, sp)))
