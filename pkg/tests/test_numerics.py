import math

import numpy as np
import pytest

from rop.errors import NonConvergence, NoSignChange
from rop.numerics import (AlphaSearchConfig, DualState, alpha_grid_search, bisect,
                          box_waterfill, solve_lambda_average_power, subgradient_2d)

LN2 = math.log(2.0)


def test_bisect_linear():
    assert bisect(lambda x: x - 0.5, 0.0, 1.0) == pytest.approx(0.5, abs=1e-10)


def test_bisect_sqrt2():
    assert bisect(lambda x: x * x - 2, 0.0, 2.0) == pytest.approx(math.sqrt(2), abs=1e-10)


def test_bisect_no_sign_change():
    with pytest.raises(NoSignChange):
        bisect(lambda x: x + 1, 0.0, 1.0)


def test_lambda_zero_when_budget_slack():
    dual = solve_lambda_average_power(lambda lam: np.full(3, 1.5), [0, 1, 2], 2.0)
    assert dual.lam == 0.0


def test_lambda_inverse_policy():
    dual = solve_lambda_average_power(lambda lam: np.array([1 / lam if lam else math.inf]),
                                      [0], 2.0)
    assert dual.lam == pytest.approx(0.5, rel=1e-9)


def test_lambda_two_block_waterfill_vs_sweep():
    offsets = np.array([1.0, 2.5])
    p_av = 1.2

    def policy(lam):
        level = 1 / (lam * LN2) if lam > 0 else math.inf
        return np.maximum(0.0, level - offsets)

    dual = solve_lambda_average_power(policy, [0, 1], p_av)
    lams = np.arange(1e-6, 2.0, 1e-6)
    level = 1 / (lams * LN2)
    mean = np.maximum(0, level[:, None] - offsets).mean(axis=1)
    ref = lams[np.argmin(np.abs(mean - p_av))]
    assert dual.lam == pytest.approx(ref, abs=1e-6)


def test_subgradient_vacuous_outage():
    # outage gap always negative, power gap zero at mu = 1
    dual = subgradient_2d(lambda lam, mu: (-1.0, 1.0 - mu), DualState(0.0, 0.5), 2000)
    assert dual.lam == 0.0


def test_subgradient_infinite_budget():
    dual = subgradient_2d(lambda lam, mu: (0.0, -math.inf), DualState(0.0, 1.0), 10)
    assert dual.mu == 0.0


def test_subgradient_reports_nonconvergence():
    with pytest.raises(NonConvergence) as exc:
        subgradient_2d(lambda lam, mu: (1.0, 1.0), DualState(), 5)
    assert exc.value.state.iterations == 5


def test_alpha_search_monotone():
    cfg = AlphaSearchConfig()
    alpha, val = alpha_grid_search(lambda a: a, cfg)
    assert alpha == cfg.alpha_max and val == cfg.alpha_max


def test_alpha_search_quadratic():
    alpha, _ = alpha_grid_search(lambda a: -(a - 0.3) ** 2, AlphaSearchConfig(1001))
    assert abs(alpha - 0.3) <= 1e-3


def test_alpha_search_constant_tie():
    assert alpha_grid_search(lambda a: 1.0)[0] == 0.0


def test_box_waterfill_exact():
    p, w = box_waterfill([1.0, 2.0, 3.0], [0.0, 0.0, 0.0], [np.inf] * 3, 3.0)
    # level 3: powers 2, 1, 0
    assert w == pytest.approx(3.0)
    assert np.allclose(p, [2.0, 1.0, 0.0])


def test_box_waterfill_limits():
    assert box_waterfill([0.0, 0.0], [2.0, 2.0], [np.inf, np.inf], 3.0) is None
    p, w = box_waterfill([0.0, 0.0], [0.0, 0.0], [1.0, 1.0], 5.0)
    assert w == math.inf and np.allclose(p, [1.0, 1.0])
