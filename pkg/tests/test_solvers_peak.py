import math

import numpy as np
import pytest

from rop.errors import DegenerateChannel, Infeasible
from rop.model import ChannelSample, ChannelState, SystemParams
from rop.solvers_peak import (alpha_l, alpha_m, alpha_pk, curve_residual, solve_p1, solve_p1_sample,
                              solve_p2, solve_p2_sample)

UNIT = ChannelState(1.0, 1.0, 1.0, 0.0, 1.0)


def test_alpha_l_rate_and_circuit():
    assert alpha_l(UNIT, SystemParams(p_pk=10, eps_st=0.1)) == pytest.approx(0.9)


def test_alpha_l_clamped_to_one():
    assert alpha_l(ChannelState(100, 1, 1, 0, 1), SystemParams(p_pk=10, eps_st=0.0)) == 1.0


def test_alpha_l_floor_at_zero():
    assert alpha_l(UNIT, SystemParams(gamma=2, p_pk=1, eps_st=2)) == 0.0


def test_alpha_l_needs_tag_power():
    with pytest.raises(DegenerateChannel):
        alpha_l(ChannelState(1, 1, 0, 0, 1), SystemParams())


def test_p1_full_power():
    sol = solve_p1(UNIT, SystemParams(p_pk=10, eps_st=0.1))
    assert sol.decision.p == 10 and sol.decision.alpha == pytest.approx(0.9)
    assert sol.decision.secondary_active


def test_p1_unpowerable_circuit():
    sol = solve_p1(UNIT, SystemParams(p_pk=1, eps_st=2))
    assert not sol.decision.secondary_active and sol.decision.alpha == 0.0


def test_p1_without_rate_target():
    sp = SystemParams(gamma=0.0, p_pk=4.0, eps_st=1.0)
    assert solve_p1(UNIT, sp).decision.alpha == pytest.approx(1 - 1 / 4)


def test_alpha_m():
    sp = SystemParams(p_pk=10)
    assert alpha_m(UNIT, sp) == pytest.approx(0.9)
    assert alpha_m(ChannelState(2, 1, 1, 0, 1), SystemParams(p_pk=1e12)) == pytest.approx(2.0)
    assert alpha_m(ChannelState(0, 1, 1, 0, 1), sp) < 0


def test_alpha_pk_no_dynamic_cost():
    sp = SystemParams(p_pk=1, eps_b=0.0, u=1.0)
    assert alpha_pk(ChannelState(1, 0, 1, 0, 1), sp) == 1.0


def test_alpha_pk_equality_at_zero():
    sp = SystemParams(p_pk=1, eps_b=1.0, u=1.0)
    assert alpha_pk(UNIT, sp) == pytest.approx(0.0, abs=1e-12)


def test_alpha_pk_root_sign_check():
    sp = SystemParams(p_pk=4, eps_b=1.0, u=1.0)
    a = alpha_pk(UNIT, sp)
    assert 0 < a < 1
    assert curve_residual(a, UNIT, sp, 4.0) >= 0
    assert curve_residual(a + 1e-12, UNIT, sp, 4.0) < 0
    assert abs(4 * (1 - a) - 1 - math.log2(1 + 4 * a)) <= 1e-12


def test_alpha_pk_infeasible():
    with pytest.raises(Infeasible):
        alpha_pk(UNIT, SystemParams(p_pk=1, eps_b=2.0))


def test_p2_energy_limited():
    # alpha_M = 0.9 at P_pk = 10; a large static power makes alpha_pk the smaller one
    sp = SystemParams(p_pk=10, eps_b=4.0, u=1.0)
    sol = solve_p2(UNIT, sp)
    assert sol.alpha_m == pytest.approx(0.9)
    assert sol.alpha_pk < 0.9
    assert sol.decision.alpha == pytest.approx(sol.alpha_pk)


def test_p2_interference_limited():
    sp = SystemParams(p_pk=10, eps_b=0.1, u=0.0)
    sol = solve_p2(ChannelState(0.3, 1, 1, 0, 1), sp)
    assert sol.alpha_m == pytest.approx(0.2)
    assert sol.decision.alpha == pytest.approx(0.2)


def test_p2_inactive_block():
    sol = solve_p2(UNIT, SystemParams(p_pk=1, eps_b=2.0))
    assert sol.decision.p == 1 and sol.decision.alpha == 0.0
    assert not sol.decision.secondary_active


def test_sample_matches_single(rng):
    s = ChannelSample(*(rng.standard_exponential(50) for _ in range(5)))
    sp = SystemParams()
    for solve_many, solve_one in ((solve_p1_sample, solve_p1), (solve_p2_sample, solve_p2)):
        prof = solve_many(s, sp)
        for i in range(len(s)):
            d = solve_one(s[i], sp).decision
            assert prof.alpha[i] == d.alpha and prof.secondary_active[i] == d.secondary_active
    assert np.all(solve_p2_sample(s, sp).alpha <= solve_p1_sample(s, sp.with_(eps_st=sp.eps_b)).alpha
                  + 1e-12)
