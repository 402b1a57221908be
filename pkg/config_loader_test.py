"""
配置解析测试
"""
import math

import pytest

from config_loader import parse_config, parse_number
from errors import ParseError, RangeError, UnknownKey
from ring_cavity import PhysicalParams, thermal_occupancy
from sweep_runner import OUTPUT_COLUMNS


def test_empty_config_gives_defaults():
    spec = parse_config("")
    assert spec.base == PhysicalParams()
    assert (spec.swept, spec.start, spec.stop, spec.steps) == ("r", 0.0, 3.5, 141)
    assert spec.outputs == OUTPUT_COLUMNS


def test_nth_sweep_ties_both_modes():
    spec = parse_config("sweep = nth\nstop = 5\n")
    assert (spec.swept, spec.start, spec.stop, spec.steps) == ("nth", 0.0, 5.0, 101)
    point = spec.point_params(2.0)
    assert point.nth1 == point.nth2 == 2.0


def test_negative_length_is_range_error():
    with pytest.raises(RangeError):
        parse_config("l1 = -1e-6")


def test_units_and_comments():
    text = """
    # 实验参数
    kappa = 215e3        # Hz
    gamma = 140
    mass = 150e-12
    l2 = 90e-6
    theta1 = pi/6
    theta2 = 2*pi/3
    power = 0.02
    """
    p = parse_config(text).base
    assert p.kappa == pytest.approx(2 * math.pi * 215e3)
    assert p.gamma1 == p.gamma2 == pytest.approx(2 * math.pi * 140)
    assert p.m1 == p.m2 == 150e-12
    assert p.l2 == 90e-6
    assert p.theta1 == pytest.approx(math.pi / 6)
    assert p.theta2 == pytest.approx(2 * math.pi / 3)
    assert p.power == 0.02


@pytest.mark.parametrize("text, expected", [
    ("pi", math.pi),
    ("-pi/4", -math.pi / 4),
    ("1.5*pi", 1.5 * math.pi),
    ("2 * pi / 3", 2 * math.pi / 3),
    ("1e-6", 1e-6),
])
def test_parse_number(text, expected):
    assert parse_number(text) == pytest.approx(expected)


@pytest.mark.parametrize("text", ["abc", "pi/0", "2*pix", "inf"])
def test_parse_number_rejects(text):
    with pytest.raises(ParseError):
        parse_number(text)


def test_malformed_line_reports_line_number():
    with pytest.raises(ParseError) as info:
        parse_config("r = 1.0\nthis is not a pair\n")
    assert info.value.line == 2


def test_unknown_key():
    with pytest.raises(UnknownKey) as info:
        parse_config("# header\ncolour = blue\n")
    assert info.value.key == "colour"
    assert info.value.line == 2


def test_bad_number_reports_line():
    with pytest.raises(ParseError) as info:
        parse_config("\n\nr = one\n")
    assert info.value.line == 3


def test_temperature_sets_occupancy():
    p = parse_config("temperature = 0.4e-3").base
    expected = thermal_occupancy(2 * math.pi * 947e3, 0.4e-3)
    assert p.nth1 == p.nth2 == pytest.approx(expected)
    p = parse_config("temperature2 = 1e-3\nomega_m = 1e6").base
    assert p.nth1 == 5.0
    assert p.nth2 == pytest.approx(thermal_occupancy(2 * math.pi * 1e6, 1e-3))


def test_non_positive_temperature():
    with pytest.raises(RangeError):
        parse_config("temperature = 0")


def test_overrides_apply_after_file():
    spec = parse_config("r = 1.0\nnth = 3\n", overrides=["r=2.0", "sweep = nth"])
    assert spec.base.r == 2.0
    assert spec.base.nth1 == 3.0
    assert spec.swept == "nth"
    with pytest.raises(ParseError):
        parse_config("", overrides=["r"])


@pytest.mark.parametrize("text", [
    "start = 2\nstop = 1",
    "steps = 1",
    "sweep = omega_m",
    "outputs = g_ab, bogus",
    "sweep = l1\nstart = -1e-6\nstop = 1e-4",
    "sweep = theta1\nstop = 4",
    "angle_weight = quarter",
])
def test_range_errors(text):
    with pytest.raises(RangeError):
        parse_config(text)


def test_steps_must_be_integer():
    with pytest.raises(ParseError):
        parse_config("steps = 2.5")


def test_outputs_and_angle_weight():
    spec = parse_config("outputs = e_n, g_ab\nangle_weight = full\nsweep = power\nsteps = 3")
    assert spec.outputs == ("e_n", "g_ab")
    assert spec.base.angle_weight == "full"
    assert spec.swept == "power"
    assert spec.steps == 3


def test_parse_without_check_keeps_invalid_values():
    spec = parse_config("m1 = 0\nsteps = 1", check=False)
    assert spec.base.m1 == 0.0
    assert spec.steps == 1
