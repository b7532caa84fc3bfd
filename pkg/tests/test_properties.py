"""Randomised invariants of the link formulas and solvers."""

import math

import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st

from rop.model import (BlockDecision, ChannelSample, ChannelState, EnergyModel, SystemParams,
                       harvest_satisfied, primary_rate, secondary_rate, sinr_pr)
from rop.numerics import bisect, box_waterfill
from rop.solvers_average import FloorSpec, p_c, p_m, solve_p3a, solve_p4a, waterfill_block
from rop.solvers_outage import candidates, chi, p6b_block
from rop.solvers_peak import alpha_pk, solve_p1, solve_p2

gain = st.floats(1e-3, 20.0)
frac = st.floats(0.01, 0.99)
power = st.floats(0.05, 50.0)


@st.composite
def channels(draw):
    return ChannelState(draw(gain), draw(gain), draw(gain), draw(gain), draw(gain))


@st.composite
def params(draw):
    return SystemParams(eps_st=draw(st.floats(0.0, 2.0)), eps_b=draw(st.floats(0.0, 2.0)),
                        u=draw(st.floats(0.0, 2.0)), gamma=draw(st.floats(0.0, 3.0)),
                        p_pk=draw(power), p_av=draw(power))


@given(channels(), power, frac, frac)
def test_interference_grows_with_reflection(ch, p, a1, a2):
    lo, hi = sorted((a1, a2))
    sp = SystemParams()
    assert sinr_pr(ch, BlockDecision(p, hi), sp) <= sinr_pr(ch, BlockDecision(p, lo), sp)


@given(channels(), frac, power, power)
def test_secondary_rate_grows_with_power(ch, a, p1, p2):
    lo, hi = sorted((p1, p2))
    sp = SystemParams()
    assert secondary_rate(ch, BlockDecision(lo, a), sp) <= secondary_rate(ch, BlockDecision(hi, a), sp)


@given(channels(), params())
def test_peak_solutions_are_feasible(ch, sp):
    for solve, em in ((solve_p1, EnergyModel.IDEAL), (solve_p2, EnergyModel.PRACTICAL)):
        d = solve(ch, sp).decision
        assert 0 <= d.alpha <= 1 and d.p == sp.p_pk
        if d.secondary_active:
            assert primary_rate(ch, d, sp) >= sp.gamma - 1e-9
            slack = BlockDecision(d.p, max(0.0, d.alpha - 1e-9), True)
            assert harvest_satisfied(ch, slack, sp, em)


@given(channels(), params())
def test_practical_never_beats_ideal_at_same_static_power(ch, sp):
    sp_ideal = sp.with_(eps_st=sp.eps_b)
    assert solve_p2(ch, sp).decision.alpha <= solve_p1(ch, sp_ideal).decision.alpha + 1e-12


@given(channels(), st.floats(0.0, 2.0), st.floats(0.0, 2.0), power, st.floats(1.0 + 1e-6, 10.0))
def test_reflected_power_grows_with_transmit_power(ch, eps_b, u, p1, ratio):
    sp = SystemParams(eps_b=eps_b, u=u)
    p2 = p1 * ratio
    try:
        a1 = alpha_pk(ch, sp, p1)
    except Exception:
        assume(False)
    a2 = alpha_pk(ch, sp, p2)
    assert a1 * p1 < a2 * p2 + 1e-12


@given(channels(), frac, power, power)
def test_outage_indicator_nonincreasing(ch, a, p1, p2):
    lo, hi = sorted((p1, p2))
    sp = SystemParams()
    assert chi(ch, hi, a, sp) <= chi(ch, lo, a, sp)


@given(channels(), frac, st.floats(1e-3, 5.0), st.floats(1e-3, 5.0), st.floats(0.0, 10.0))
def test_waterfill_nonincreasing_in_price(ch, a, l1, l2, floor):
    lo, hi = sorted((l1, l2))
    sp = SystemParams()
    f = FloorSpec(floor)
    assert waterfill_block(ch, sp, a, hi, f) <= waterfill_block(ch, sp, a, lo, f)


@given(channels(), frac, st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_circuit_floor_holds_beyond(ch, a, eps_b, u):
    sp = SystemParams(eps_b=eps_b, u=u)
    p = p_c(ch, sp, a)
    for q in (p, 1.5 * p + 1e-9, 10 * p + 1.0):
        d = BlockDecision(q, a, True)
        assert (sp.eta_st * (1 - a) * ch.f * q
                >= sp.eps_b + sp.u * math.log2(1 + ch.g1 * a * ch.f * q) - 1e-9 * max(1.0, q))
        assert harvest_satisfied(ch, BlockDecision(q * (1 + 1e-9) + 1e-12, a, True), sp,
                                 EnergyModel.PRACTICAL) or q == 0


@given(st.lists(st.tuples(st.floats(0, 5), st.floats(0, 2), st.floats(0, 3)), min_size=1,
                max_size=8), st.floats(0.0, 30.0))
def test_box_waterfill_fills_exactly(rows, total):
    off = np.array([r[0] for r in rows])
    lo = np.array([r[1] for r in rows])
    hi = lo + np.array([r[2] for r in rows])
    res = box_waterfill(off, lo, hi, total)
    if lo.sum() > total * (1 + 1e-12) + 1e-300:
        assert res is None
        return
    p, w = res
    assert np.all(p >= lo - 1e-12) and np.all(p <= hi + 1e-12)
    if math.isfinite(w):
        assert abs(p.sum() - total) <= 1e-9 * max(1.0, total) + lo.sum() * 1e-12
    else:
        assert np.allclose(p, hi)


@given(st.floats(-50, 50), st.floats(0.1, 10))
def test_bisect_finds_linear_root(root, slope):
    x = bisect(lambda t: slope * (t - root), -100.0, 100.0)
    assert abs(x - root) <= 1e-9


@given(st.lists(channels(), min_size=1, max_size=6), frac, power,
       st.sampled_from([EnergyModel.IDEAL, EnergyModel.PRACTICAL]))
def test_average_power_solution_is_feasible(chs, a, p_av, em):
    sp = SystemParams(p_av=p_av)
    solver = solve_p3a if em is EnergyModel.IDEAL else solve_p4a
    prof, dual = solver(chs, sp, a)
    assert prof.mean_power <= p_av * (1 + 1e-9)
    assert abs(dual.lam * (prof.mean_power - p_av)) <= 1e-6 * p_av
    for ch, d in zip(chs, prof):
        if d.p > 0:
            assert primary_rate(ch, d, sp) >= sp.gamma - 1e-9
            bumped = BlockDecision(d.p * (1 + 1e-9), d.alpha, True)
            assert harvest_satisfied(ch, bumped, sp, em)


@given(st.lists(channels(), min_size=1, max_size=5), frac, power, st.floats(1.0, 4.0))
def test_more_budget_never_hurts(chs, a, p_av, factor):
    sp = SystemParams(p_av=p_av)
    c1 = solve_p3a(chs, sp, a)[0].capacity(chs, sp)
    c2 = solve_p3a(chs, sp.with_(p_av=p_av * factor), a)[0].capacity(chs, sp)
    assert c2 >= c1 - 1e-9


@given(channels(), frac, st.floats(0.0, 5.0), st.floats(0.003, 3.0), st.floats(0.0, 1.0))
def test_p6b_beats_other_powers(ch, a, lam, mu, t):
    sp = SystemParams()
    c = candidates(ch, sp, a, mu)
    cap = 100 * sp.p_av
    assume(c.p_dprime < cap)
    g = ch.g1 * a * ch.f / sp.sigma_sr_sq

    def value(p):
        # right limit at p' (the outage-free side of the threshold)
        out = chi(ch, p * (1 + 1e-12), a, sp)
        return math.log2(1 + g * p) - mu * p - lam * out

    p_star = p6b_block(ch, sp, a, lam, mu, p_cap=cap)
    q = c.p_dprime + t * (cap - c.p_dprime)
    assert value(p_star) >= value(q) - 1e-9
