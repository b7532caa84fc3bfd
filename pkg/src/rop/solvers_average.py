"""Fixed reflection coefficient under an average power budget (ideal and practical circuit).

For a fixed alpha every block turns into a power floor: the primary rate
target and the tag's circuit requirement each impose a least power, and a
block whose rate target is unreachable at any power is silenced. The budget
is then shared by water-filling above the floors, with the water level set
by bisection on the power price.

Silenced blocks (p = 0) carry no primary transmission, so neither the rate
target nor the outage count applies to them. The power price may switch a
block off when its best on-power earns less than it costs; this is the only
way the zero branch of the water-filling rule is compatible with a hard
floor. Because switching is discrete, the mean power can jump across the
budget; the final profile is then recovered by fixing the on/off pattern on
either side of the jump and filling the remaining budget exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .model import (ChannelSample, ChannelState, EnergyModel, Profile, SystemParams, as_sample,
                    circuit_floor, rate_floor)
from .numerics import (AlphaSearchConfig, BisectionConfig, DualState, alpha_grid,
                       bisect_decreasing, box_waterfill, solve_lambda_average_power)

__all__ = [
    "FloorSpec",
    "AlphaSearchResult",
    "p_m",
    "p_c",
    "p_l",
    "waterfill_block",
    "solve_p3a",
    "solve_p4a",
    "solve_p3",
    "solve_p4",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class FloorSpec:
    """Least power a block needs to carry the secondary link; ``inf`` if it cannot."""

    p_floor: float

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.p_floor)


@dataclass(frozen=True)
class AlphaSearchResult:
    alpha: float
    capacity: float
    outage: float
    profile: Optional[Profile]
    dual: Optional[DualState]


def secondary_gain(ch, alpha, sp: SystemParams):
    """Reader SNR per unit PT power at reflection coefficient ``alpha``."""
    return ch.g1 * alpha * ch.f / sp.sigma_sr_sq


def p_m(ch: ChannelState, sp: SystemParams, alpha_bar: float) -> FloorSpec:
    """Power floor with the ideal circuit model."""
    return FloorSpec(float(np.maximum(rate_floor(ch, alpha_bar, sp),
                                      circuit_floor(ch, alpha_bar, sp))))


def _p_c_array(ch, sp: SystemParams, alpha_bar: float):
    f = np.asarray(ch.f, dtype=float)
    k = sp.eta_st * (1.0 - alpha_bar) * f
    a = np.asarray(secondary_gain(ch, alpha_bar, sp), dtype=float)
    k, a = np.broadcast_arrays(k, a)

    def excess(p):
        return k * p - sp.eps_b - sp.u * np.log2(1.0 + a * p)

    out = np.full(k.shape, np.inf)
    ok = k > 0
    linear = ok & ((sp.u == 0) | (a == 0))
    out[linear] = sp.eps_b / k[linear]
    curved = ok & ~linear
    if np.any(curved):
        kc, ac = k[curved], a[curved]
        # excess is convex; its minimiser bounds the last crossing from below
        p_min = np.maximum(0.0, sp.u / (kc * LN2) - 1.0 / ac)

        def ex(p):
            return kc * p - sp.eps_b - sp.u * np.log2(1.0 + ac * p)

        zero = ex(p_min) >= 0  # only possible when eps_b = 0 and p_min = 0
        hi = np.maximum(np.maximum(2.0 * p_min, sp.eps_b / kc), 1.0)
        for _ in range(2000):
            short = ex(hi) < 0
            if not short.any():
                break
            hi = np.where(short, 2.0 * hi, hi)
        lo, hi = bisect_decreasing(lambda p: -ex(p), p_min, hi)
        out[curved] = np.where(zero, 0.0, hi)
    return out if out.ndim else float(out)


def p_c(ch: ChannelState, sp: SystemParams, alpha_bar: float) -> float:
    """Least power at which the practical circuit requirement holds for a fixed alpha.

    The harvested power grows linearly in p and the consumed power only
    logarithmically, so beyond the last crossing of the two curves the
    requirement holds for good.
    """
    return float(_p_c_array(ch, sp, alpha_bar))


def p_l(ch: ChannelState, sp: SystemParams, alpha_bar: float) -> FloorSpec:
    """Power floor with the practical circuit model."""
    return FloorSpec(float(np.maximum(rate_floor(ch, alpha_bar, sp),
                                      _p_c_array(ch, sp, alpha_bar))))


def _floors(s: ChannelSample, sp: SystemParams, alpha_bar: float, em: EnergyModel):
    rf = np.asarray(rate_floor(s, alpha_bar, sp), dtype=float)
    if em is EnergyModel.IDEAL:
        cf = np.asarray(circuit_floor(s, alpha_bar, sp), dtype=float)
    else:
        cf = np.asarray(_p_c_array(s, sp, alpha_bar), dtype=float)
    return np.maximum(rf, cf)


def _waterfill_array(a, floor, lam):
    """Three-branch water-filling rule with the gain ``a`` in SNR per unit power."""
    a = np.asarray(a, dtype=float)
    floor = np.asarray(floor, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        top = a / LN2
        knee = a / (LN2 * (1.0 + a * floor))
        level = (1.0 / (lam * LN2) if lam > 0 else np.inf) - 1.0 / a
        p = np.where(lam >= top, 0.0, np.where(lam > knee, floor, level))
    return np.where(np.isfinite(floor) & (a > 0), p, 0.0)


def waterfill_block(ch: ChannelState, sp: SystemParams, alpha_bar: float, lam: float,
                    floor: FloorSpec) -> float:
    """Optimal power of one block at power price ``lam`` given its floor.

    Zero once the price exceeds the marginal rate at zero power, the floor
    while the price sits between the marginal rates at zero and at the
    floor, and the water level ``1/(lam ln2) - sigma_sr^2/(g1 alpha f)``
    otherwise. Blocks with an infinite floor get zero.
    """
    a = secondary_gain(ch, alpha_bar, sp)
    return float(_waterfill_array(a, floor.p_floor, lam))


def _switch_off(a, p, lam):
    """Zero out blocks whose Lagrangian value at ``p`` is not positive."""
    if lam == 0:
        return p
    with np.errstate(invalid="ignore"):
        gain = np.log2(1.0 + a * p) - lam * p
    return np.where(gain > 0, p, 0.0)


def refine_pattern(a, on, lo, hi, p_av: float):
    """Fill the budget exactly with the on/off pattern held fixed.

    Returns ``(p, price)`` or ``None`` when the on-blocks' lower limits do
    not fit in the budget.
    """
    n = a.size
    p = np.zeros(n)
    if not np.any(on):
        return p, 0.0
    res = box_waterfill(1.0 / a[on], lo[on], hi[on], n * p_av)
    if res is None:
        return None
    p_on, level = res
    p[on] = p_on
    price = 0.0 if not math.isfinite(level) or level <= 0 else 1.0 / (level * LN2)
    return p, price


def _capacity(a, p):
    return float(np.mean(np.log2(1.0 + a * p))) if a.size else 0.0


# Samples up to this size get a local search over on/off choices after the
# dual solution; beyond it a single block moves the capacity by O(1/n).
LOCAL_SEARCH_MAX_BLOCKS = 64


@dataclass
class ChoiceSet:
    """Per-block power intervals for the options "on" (1) and "on in outage" (2).

    Option 0 is silence. ``max_outage`` caps how many blocks may take
    option 2.
    """

    a: np.ndarray
    lo: np.ndarray  # shape (3, n); row 0 unused
    hi: np.ndarray
    allowed: np.ndarray  # shape (3, n) bool
    max_outage: int = 0

    def fill(self, choice, p_av: float):
        """Exact budget fill for a choice vector; ``None`` if infeasible."""
        if int(np.count_nonzero(choice == 2)) > self.max_outage:
            return None
        if not np.all(self.allowed[choice, np.arange(choice.size)]):
            return None
        idx = np.arange(choice.size)
        lo = np.where(choice > 0, self.lo[choice, idx], 0.0)
        hi = np.where(choice > 0, self.hi[choice, idx], np.inf)
        return refine_pattern(self.a, choice > 0, lo, hi, p_av)


def improve_choices(cs: ChoiceSet, choice, p_av: float, max_rounds: int = 100):
    """Hill-climb on the choice vector by single changes and pairwise swaps.

    A swap silences one block while giving another block a new option.
    Returns ``(choice, p, price)`` of the best vector found.
    """
    choice = np.asarray(choice).copy()
    res = cs.fill(choice, p_av)
    if res is None:
        return None
    p, price = res
    best = _capacity(cs.a, p)
    n = choice.size
    for _ in range(max_rounds):
        moves = []
        for i in range(n):
            for opt in (0, 1, 2):
                if opt != choice[i] and cs.allowed[opt, i]:
                    moves.append(((i, opt),))
        for i in range(n):
            if choice[i] == 0:
                continue
            for j in range(n):
                if j != i and choice[j] == 0:
                    for opt in (1, 2):
                        if cs.allowed[opt, j]:
                            moves.append(((i, 0), (j, opt)))
        gain = None
        for move in moves:
            trial = choice.copy()
            for i, opt in move:
                trial[i] = opt
            r = cs.fill(trial, p_av)
            if r is None:
                continue
            cap = _capacity(cs.a, r[0])
            if cap > best + 1e-12 and (gain is None or cap > gain[0]):
                gain = (cap, trial, r)
        if gain is None:
            break
        best, choice, (p, price) = gain
    return choice, p, price


def _solve_fixed_alpha(s: ChannelSample, sp: SystemParams, alpha_bar: float, em: EnergyModel,
                       cfg: BisectionConfig):
    a = np.asarray(secondary_gain(s, alpha_bar, sp), dtype=float)
    floor = _floors(s, sp, alpha_bar, em)
    usable = np.isfinite(floor) & (a > 0)

    def policy(lam):
        p = _switch_off(a, _waterfill_array(a, floor, lam), lam)
        return np.where(usable, p, 0.0)

    dual = solve_lambda_average_power(policy, s, sp.p_av, cfg)
    if dual.lam == 0.0:
        p = policy(0.0)
        return p, usable & (p > 0), dual

    n = a.size
    cs = ChoiceSet(a=a, lo=np.stack((np.zeros(n), floor, floor)),
                   hi=np.full((3, n), np.inf),
                   allowed=np.stack((np.ones(n, bool), usable, np.zeros(n, bool))))
    best = None
    for lam in dual.bracket[::-1]:
        if lam <= 0:
            continue
        choice = (policy(lam) > 0).astype(int)
        res = cs.fill(choice, sp.p_av)
        if n <= LOCAL_SEARCH_MAX_BLOCKS:
            res = improve_choices(cs, choice, sp.p_av)
            if res is not None:
                choice, p, price = res
                res = (p, price)
        if res is None:
            continue
        p, price = res
        cap = _capacity(a, p)
        if best is None or cap > best[0]:
            best = (cap, p, choice > 0, price)
    _, p, on, price = best
    err = abs(float(np.mean(p)) - sp.p_av)
    return p, on, DualState(lam=price, iterations=dual.iterations,
                            converged=err <= 1e-3 * sp.p_av, bracket=dual.bracket)


def _solve_a(blocks, sp, alpha_bar, em, cfg) -> Tuple[Profile, DualState]:
    if not 0 <= alpha_bar < 1:
        raise ValueError("alpha_bar must lie in [0, 1)")
    s = as_sample(blocks)
    p, on, dual = _solve_fixed_alpha(s, sp, alpha_bar, em, cfg)
    prof = Profile(p=p, alpha=np.where(on, alpha_bar, 0.0), secondary_active=on,
                   outage=np.zeros(len(s), dtype=bool))
    return prof, dual


def solve_p3a(blocks, sp: SystemParams, alpha_bar: float,
              cfg: BisectionConfig = BisectionConfig()) -> Tuple[Profile, DualState]:
    """Optimal power profile at a fixed alpha, ideal circuit model.

    Returns the profile and the power price. Silenced blocks have
    ``secondary_active=False`` and zero power.
    """
    return _solve_a(blocks, sp, alpha_bar, EnergyModel.IDEAL, cfg)


def solve_p4a(blocks, sp: SystemParams, alpha_bar: float,
              cfg: BisectionConfig = BisectionConfig()) -> Tuple[Profile, DualState]:
    """As :func:`solve_p3a` with the practical circuit model's floor."""
    return _solve_a(blocks, sp, alpha_bar, EnergyModel.PRACTICAL, cfg)


def _search(blocks, sp, em, alpha_cfg, cfg) -> AlphaSearchResult:
    s = as_sample(blocks)
    best = None
    for alpha in alpha_grid(alpha_cfg):
        prof, dual = _solve_a(s, sp, float(alpha), em, cfg)
        cap = prof.capacity(s, sp)
        if best is None or cap > best.capacity:
            best = AlphaSearchResult(float(alpha), cap, prof.outage_probability, prof, dual)
    return best


def solve_p3(blocks, sp: SystemParams, alpha_cfg: AlphaSearchConfig = AlphaSearchConfig(),
             cfg: BisectionConfig = BisectionConfig()) -> AlphaSearchResult:
    """Best fixed alpha on the grid for the ideal circuit model."""
    return _search(blocks, sp, EnergyModel.IDEAL, alpha_cfg, cfg)


def solve_p4(blocks, sp: SystemParams, alpha_cfg: AlphaSearchConfig = AlphaSearchConfig(),
             cfg: BisectionConfig = BisectionConfig()) -> AlphaSearchResult:
    """Best fixed alpha on the grid for the practical circuit model."""
    return _search(blocks, sp, EnergyModel.PRACTICAL, alpha_cfg, cfg)
