"""
参数扫描模块测试
"""
import math

import numpy as np
import pytest

import sweep_runner
from errors import ConfigError, DegenerateState, NotHurwitz, RangeError
from ring_cavity import PhysicalParams
from steering_measures import EPSILON_ZERO, Regime
from sweep_runner import (SweepRecord, SweepSpec, evaluate_point, figure_preset, first_crossing,
                          format_number, run_sweep, write_csv, write_plot_script)


def small_spec(steps: int = 9) -> SweepSpec:
    base = figure_preset("fig2a").base
    return SweepSpec(base=base, swept="r", start=0.0, stop=3.2, steps=steps)


def test_zero_power_sweep_is_decoupled():
    spec = SweepSpec(swept="power", start=0.0, stop=0.05, steps=2)
    records = run_sweep(spec)
    assert len(records) == 2
    first = records[0]
    assert first.value == 0.0
    assert first.flag is None
    assert first.g_ab == first.g_ba == 0.0
    assert first.e_n == 0.0
    assert first.nu == pytest.approx(5.5, rel=1e-9)
    assert first.regime is Regime.NO_WAY


def test_records_follow_grid_order():
    spec = small_spec()
    records = run_sweep(spec)
    assert [r.value for r in records] == list(spec.grid())
    assert all(r.flag is None for r in records)


def test_parallel_sweep_matches_sequential():
    spec = small_spec()
    sequential = run_sweep(spec, workers=1)
    parallel = run_sweep(spec, workers=4)
    assert parallel == sequential
    assert write_csv(parallel) == write_csv(sequential)


def test_sweep_is_deterministic():
    spec = small_spec(5)
    assert write_csv(run_sweep(spec)) == write_csv(run_sweep(spec))


def test_run_sweep_rejects_bad_input():
    with pytest.raises(ConfigError):
        run_sweep(small_spec(), workers=0)
    with pytest.raises(RangeError):
        run_sweep(SweepSpec(swept="r", start=1.0, stop=1.0, steps=3))
    with pytest.raises(RangeError):
        run_sweep(SweepSpec(swept="l2", start=-1e-6, stop=1e-4, steps=3))


def test_failed_points_are_flagged(monkeypatch):
    original = sweep_runner.steady_covariance

    def failing(params):
        if params.r > 2.0:
            raise NotHurwitz("漂移矩阵不稳定")
        if params.r == 0.0:
            raise DegenerateState("协方差退化")
        return original(params)

    monkeypatch.setattr(sweep_runner, "steady_covariance", failing)
    records = run_sweep(SweepSpec(base=figure_preset("fig2a").base, swept="r",
                                  start=0.0, stop=3.0, steps=4))
    assert [r.regime for r in records[:1] + records[3:]] == [Regime.DEGENERATE, Regime.UNSTABLE]
    assert records[1].flag is None and records[2].flag is None
    assert all(math.isnan(getattr(records[3], c)) for c in ("g_ab", "g_ba", "e_n", "nu"))
    assert records[3].flag == "漂移矩阵不稳定"

    csv = write_csv(records)
    rows = csv.splitlines()
    assert rows[1] == "0.000000000000e0,nan,nan,nan,nan,Degenerate"
    assert rows[4] == "3.000000000000e0,nan,nan,nan,nan,Unstable"


def test_write_csv_vacuum_row_is_exact():
    record = SweepRecord(value=0.0, g_ab=0.0, g_ba=0.0, e_n=0.0, nu=0.5, regime=Regime.NO_WAY)
    assert write_csv([record]) == (
        "swept,g_ab,g_ba,e_n,nu,regime\n"
        "0.000000000000e0,0.000000000000e0,0.000000000000e0,0.000000000000e0,"
        "5.000000000000e-1,NoWay\n"
    )


def test_write_csv_selected_columns():
    record = SweepRecord(value=1.5, g_ab=0.25, g_ba=0.0, e_n=1.0, nu=0.3,
                         regime=Regime.ONE_WAY_A_TO_B)
    assert write_csv([record], ("regime", "g_ab")) == (
        "swept,regime,g_ab\n1.500000000000e0,OneWayAtoB,2.500000000000e-1\n"
    )
    with pytest.raises(ValueError):
        write_csv([])


@pytest.mark.parametrize("x, expected", [
    (0.5, "5.000000000000e-1"),
    (-0.0, "0.000000000000e0"),
    (1234.5, "1.234500000000e3"),
    (-2.5e-7, "-2.500000000000e-7"),
    (1e-300, "1.000000000000e-300"),
    (float("nan"), "nan"),
])
def test_format_number(x, expected):
    assert format_number(x) == expected


def test_figure_presets():
    fig2a = figure_preset("fig2a")
    fig2b = figure_preset("fig2b")
    assert (fig2a.swept, fig2a.start, fig2a.stop, fig2a.steps) == ("r", 0.0, 3.5, 141)
    assert fig2a.base.angle_weight == "full"
    assert (fig2a.base.l1, fig2a.base.l2) == (112e-6, 85e-6)
    assert (fig2b.base.l1, fig2b.base.l2) == (85e-6, 112e-6)
    assert (fig2b.base.theta1, fig2b.base.theta2) == (fig2a.base.theta2, fig2a.base.theta1)

    fig3a = figure_preset("fig3a")
    assert (fig3a.swept, fig3a.start, fig3a.stop, fig3a.steps) == ("nth", 0.0, 5.0, 101)
    assert fig3a.base.r == 1.5
    assert figure_preset("fig3b").base.l1 == 85e-6

    with pytest.raises(ConfigError):
        figure_preset("fig4")


def test_fig2a_preset_point_is_one_way():
    result = evaluate_point(figure_preset("fig2a").base.model_copy(update={"r": 2.25}))
    assert result.g_ab <= EPSILON_ZERO
    assert result.g_ba > EPSILON_ZERO
    assert result.regime is Regime.ONE_WAY_B_TO_A

    # 同一点在默认 cos²(θ/2) 权重下是双向导引
    assert evaluate_point(PhysicalParams(r=2.25)).regime is Regime.TWO_WAY


def test_fig3a_preset_point_is_one_way():
    spec = figure_preset("fig3a")
    result = evaluate_point(spec.point_params(2.0))
    assert result.g_ab <= EPSILON_ZERO < result.g_ba
    assert result.regime is Regime.ONE_WAY_B_TO_A
    assert evaluate_point(spec.point_params(0.0)).regime is Regime.TWO_WAY


def test_point_params_ties_occupancies():
    spec = SweepSpec(base=PhysicalParams(nth1=1.0, nth2=2.0), swept="nth", start=0.0, stop=5.0, steps=3)
    point = spec.point_params(2.5)
    assert (point.nth1, point.nth2) == (2.5, 2.5)
    assert spec.base.nth1 == 1.0


def test_first_crossing():
    x = [0.0, 1.0, 2.0, 3.0]
    assert first_crossing(x, [0.0, 0.0, 0.5, 1.0]) == pytest.approx(1.0, abs=1e-6)
    assert first_crossing(x, [1.0, 0.5, 0.0, 0.0]) == pytest.approx(2.0, abs=1e-6)
    assert first_crossing(x, [0.0, 0.0, 0.0, 0.0]) is None
    assert first_crossing(x, [1.0, 2.0, 3.0, 4.0]) is None
    assert first_crossing(x, [0.0, 0.0, 1.0, 1.0], threshold=0.25) == pytest.approx(1.25)
    with pytest.raises(ValueError):
        first_crossing(x, [0.0, 1.0])


def test_plot_script():
    script = write_plot_script("fig2a.csv", "fig2a", "r", ("g_ab", "regime", "e_n"))
    assert 'set datafile separator ","' in script
    assert 'set xlabel "r"' in script
    assert "'fig2a.csv' using 1:2 with lines title 'g_ab'" in script
    assert "'fig2a.csv' using 1:4 with lines title 'e_n'" in script
    assert "using 1:3" not in script
    assert script.endswith("\n")


def test_grid_includes_endpoints():
    grid = SweepSpec(swept="r", start=0.0, stop=3.5, steps=141).grid()
    assert grid[0] == 0.0 and grid[-1] == 3.5
    np.testing.assert_allclose(np.diff(grid), 0.025)
