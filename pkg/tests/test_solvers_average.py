import math

import numpy as np
import pytest

from rop.model import ChannelSample, ChannelState, EnergyModel, SystemParams
from rop.numerics import AlphaSearchConfig
from rop.oracle import oracle_average
from rop.solvers_average import (FloorSpec, p_c, p_l, p_m, solve_p3, solve_p3a, solve_p4,
                                 solve_p4a, waterfill_block)
from rop.solvers_peak import alpha_l

LN2 = math.log(2.0)
UNIT = ChannelState(1.0, 1.0, 1.0, 0.0, 1.0)


def test_p_m_rate_term():
    assert p_m(UNIT, SystemParams(eps_st=0.25), 0.5).p_floor == pytest.approx(2.0)


def test_p_m_infeasible_rate():
    assert not p_m(ChannelState(0.4, 1, 1, 0, 1), SystemParams(), 0.5).feasible


def test_p_m_without_circuit_power():
    assert p_m(UNIT, SystemParams(eps_st=0.0), 0.5).p_floor == pytest.approx(1 / (1 - 0.5))


@pytest.mark.parametrize("lam, expected", [(0.75, 0.0), (0.5, 2.0),
                                           (0.2, 1 / (0.2 * LN2) - 2)])
def test_waterfill_branches(lam, expected):
    p = waterfill_block(UNIT, SystemParams(), 0.5, lam, FloorSpec(2.0))
    assert p == pytest.approx(expected)


def test_waterfill_infinite_floor():
    assert waterfill_block(UNIT, SystemParams(), 0.5, 0.01, FloorSpec(math.inf)) == 0.0


def test_p_c_linear():
    assert p_c(UNIT, SystemParams(eps_b=1.0, u=0.0), 0.5) == pytest.approx(2.0)
    assert p_c(UNIT, SystemParams(eps_b=0.0, u=0.0), 0.5) == 0.0


def test_p_c_root():
    sp = SystemParams(eps_b=1.0, u=1.0)
    p = p_c(UNIT, sp, 0.5)

    def excess(q):
        return 0.5 * q - 1 - math.log2(1 + 0.5 * q)

    assert excess(p) >= 0 and excess(p * (1 - 1e-9)) < 0
    assert p == pytest.approx(6.0)


def test_all_blocks_infeasible():
    s = [ChannelState(0.1, 1, 1, 0, 1), ChannelState(0.2, 1, 1, 0, 1)]
    prof, dual = solve_p3a(s, SystemParams(), 0.5)
    assert np.all(prof.p == 0) and dual.lam == 0.0 and prof.capacity(s, SystemParams()) == 0.0


def test_budget_binds_for_single_block():
    sp = SystemParams(p_av=5.0)
    prof, dual = solve_p3a([UNIT], sp, 0.3)
    assert prof.p[0] == pytest.approx(5.0)
    assert dual.lam > 0


def test_models_coincide_without_dynamic_cost(rng):
    s = ChannelSample(*(rng.standard_exponential(40) for _ in range(5)))
    sp = SystemParams(u=0.0, eps_b=0.1, eps_st=0.1, p_av=3.0)
    assert p_l(UNIT, sp, 0.4) == p_m(UNIT, sp, 0.4)
    a, _ = solve_p3a(s, sp, 0.4)
    b, _ = solve_p4a(s, sp, 0.4)
    assert np.allclose(a.p, b.p)


DESK = [ChannelState(1.3, 0.9, 1.2, 0.0, 0.8), ChannelState(0.6, 1.7, 0.5, 0.0, 1.1),
        ChannelState(2.2, 0.3, 1.6, 0.0, 0.4), ChannelState(0.9, 1.1, 0.9, 0.0, 0.2)]


@pytest.mark.parametrize("em, solver", [(EnergyModel.IDEAL, solve_p3a),
                                        (EnergyModel.PRACTICAL, solve_p4a)])
@pytest.mark.parametrize("p_av", [0.8, 3.0, 12.0])
def test_desk_instance_matches_oracle(em, solver, p_av):
    sp = SystemParams(p_av=p_av)
    prof, dual = solver(DESK, sp, 0.45)
    _, cap = oracle_average(DESK, sp, 0.45, em)
    assert abs(prof.capacity(DESK, sp) - cap) <= 1e-2
    assert prof.mean_power <= p_av * (1 + 1e-3)
    assert abs(dual.lam * (prof.mean_power - p_av)) <= 1e-3 * p_av


def test_search_all_infeasible():
    s = [ChannelState(0.1, 1, 1, 0, 1)]
    res = solve_p3(s, SystemParams(), AlphaSearchConfig(21))
    assert res.capacity == 0.0 and res.alpha == 0.0


def test_single_block_matches_peak_solution():
    sp = SystemParams(p_pk=6.0, p_av=6.0)
    ch = ChannelState(1.4, 0.8, 1.1, 0.0, 0.9)
    cfg = AlphaSearchConfig(1001)
    res = solve_p3(ch, sp, cfg)
    assert abs(res.alpha - alpha_l(ch, sp)) <= 1.0 / (cfg.grid_points - 1)
    assert solve_p4(ch, sp, AlphaSearchConfig(101)).capacity <= res.capacity + 1e-12
