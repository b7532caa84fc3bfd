import math

import numpy as np
import pytest

from rop.experiments import (CSV_HEADER, FadingSpec, SweepSpec, format_csv, read_csv, run_sweep,
                             sample_blocks, write_csv)
from rop.model import SystemParams


def test_sample_is_deterministic():
    a = sample_blocks(FadingSpec(1000, 42))
    b = sample_blocks(FadingSpec(1000, 42))
    for k in ("h1", "g1", "f", "h2", "g2"):
        assert np.array_equal(getattr(a, k), getattr(b, k))
    assert not np.array_equal(a.h1, sample_blocks(FadingSpec(1000, 43)).h1)


def test_sample_moments():
    n = 40000
    s = sample_blocks(FadingSpec(n, 7))
    for k in ("h1", "g1", "f", "h2", "g2"):
        x = getattr(s, k)
        assert abs(x.mean() - 1.0) <= 3 / math.sqrt(n)
        # the fourth moment of a unit exponential is 24, so var(x^2) = 20
        assert abs((x * x).mean() - 2.0) <= 4 * math.sqrt(20 / n)


def test_gains_are_independent_streams():
    s = sample_blocks(FadingSpec(20000, 1))
    assert abs(np.corrcoef(s.h1, s.g2)[0, 1]) < 0.05


def test_sweep_validation():
    with pytest.raises(ValueError):
        SweepSpec("P1", "p_pk", [])
    with pytest.raises(ValueError):
        SweepSpec("P1", "p_pk", [2.0, 1.0])
    with pytest.raises(ValueError):
        SweepSpec("P3", "p_pk", [1.0])
    with pytest.raises(ValueError):
        SweepSpec("P5", "eps_out", [0.5, 1.5])


def test_fig4_orderings_on_small_sample():
    fading = FadingSpec(2000, 9)
    xs = [1.0, 2.0, 5.0, 10.0, 20.0]
    caps = {}
    for prob in ("P1", "P2"):
        for gamma in (1.0, 2.0):
            res = run_sweep(SweepSpec(prob, "p_pk", xs, SystemParams(gamma=gamma)), fading)
            caps[prob, gamma] = res.column("capacity_bits")
            assert np.all(np.diff(caps[prob, gamma]) >= 0)
    for gamma in (1.0, 2.0):
        assert np.all(caps["P2", gamma] <= caps["P1", gamma])
    for prob in ("P1", "P2"):
        assert np.all(caps[prob, 2.0] <= caps[prob, 1.0])


def test_infeasible_row_recorded():
    res = run_sweep(SweepSpec("P5", "eps_out", [0.0, 0.5], alpha_points=21), FadingSpec(500, 4))
    first, second = res.rows
    assert math.isnan(first.capacity_bits) and math.isnan(first.alpha_star)
    assert second.capacity_bits > 0


def test_thread_count_does_not_change_csv():
    sweep = SweepSpec("P4", "p_av", [1.0, 3.0, 9.0], alpha_points=11)
    fading = FadingSpec(300, 5)
    assert (format_csv(run_sweep(sweep, fading, threads=1))
            == format_csv(run_sweep(sweep, fading, threads=3)))


def test_csv_round_trip(tmp_path):
    res = run_sweep(SweepSpec("P6", "p_av", [1.0, 2.0], SystemParams(eps_out=0.2),
                              alpha_points=11), FadingSpec(200, 3), timing=True)
    path = tmp_path / "out" / "p6.csv"
    write_csv(res, path)
    text = path.read_bytes().decode("utf-8")
    assert text.splitlines()[0] == CSV_HEADER and "\r" not in text
    rows = read_csv(path)
    assert [r["x"] for r in rows] == [1.0, 2.0]
    assert rows[0]["capacity_bits"] == res.rows[0].capacity_bits
    assert rows[0]["mu"] == res.rows[0].mu and rows[0]["wall_time_ms"] > 0
    assert list(path.parent.iterdir()) == [path]


def test_untimed_and_unused_fields_blank():
    res = run_sweep(SweepSpec("P1", "p_pk", [3.0]), FadingSpec(100, 1))
    line = format_csv(res).splitlines()[1]
    assert line.endswith(",,,")
