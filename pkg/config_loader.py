"""
配置文件解析模块
逐行解析 key = value 格式的配置，生成 SweepSpec

单位约定: 频率以 Hz 给出（内部乘以 2π），长度 m，质量 kg，功率 W，角度 rad；
角度可写成 pi 的倍数，例如 pi/6、2*pi/3
"""
import logging
import math
import re
from typing import Dict, Iterable, List, Optional, Tuple

from errors import InvalidParams, ParseError, RangeError, UnknownKey
from ring_cavity import ANGLE_WEIGHTS, PhysicalParams, thermal_occupancy
from sweep_runner import DEFAULT_RANGES, OUTPUT_COLUMNS, SWEEP_AXES, SweepSpec

logger = logging.getLogger(__name__)

# 以 Hz 给出、内部转换为角频率的键
HZ_KEYS = {
    "omega_m": ("omega_m",),
    "gamma1": ("gamma1",),
    "gamma2": ("gamma2",),
    "gamma": ("gamma1", "gamma2"),
    "kappa": ("kappa",),
    "omega_c": ("omega_c",),
    "omega_L": ("omega_L",),
    "delta": ("delta",),
}

PLAIN_KEYS = {
    "power": ("power",),
    "m1": ("m1",),
    "m2": ("m2",),
    "mass": ("m1", "m2"),
    "l1": ("l1",),
    "l2": ("l2",),
    "theta1": ("theta1",),
    "theta2": ("theta2",),
    "r": ("r",),
    "nth1": ("nth1",),
    "nth2": ("nth2",),
    "nth": ("nth1", "nth2"),
}

TEMPERATURE_KEYS = {
    "temperature": ("nth1", "nth2"),
    "temperature1": ("nth1",),
    "temperature2": ("nth2",),
}

SWEEP_KEYS = ("sweep", "start", "stop", "steps", "outputs")

_PI_EXPR = re.compile(
    r"^(?:(?P<coef>[^*/]+?)\s*\*\s*)?(?P<sign>[+-]?)\s*pi(?:\s*/\s*(?P<den>[^*/]+))?$"
)


def parse_number(text: str, line: Optional[int] = None) -> float:
    """
    解析数值，支持 pi 表达式

    Args:
        text: 数值文本
        line: 行号（用于错误信息）

    Returns:
        浮点数
    """
    text = text.strip()
    match = _PI_EXPR.match(text)
    try:
        if match:
            value = math.pi
            if match.group("sign") == "-":
                value = -value
            if match.group("coef"):
                value *= float(match.group("coef"))
            if match.group("den"):
                value /= float(match.group("den"))
        else:
            value = float(text)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"无法解析数值 '{text}'", line) from None
    if not math.isfinite(value):
        raise ParseError(f"数值必须有限，收到 '{text}'", line)
    return value


def _split_line(raw: str, line: Optional[int]) -> Optional[Tuple[str, str]]:
    content = raw.split("#", 1)[0].strip()
    if not content:
        return None
    if "=" not in content:
        raise ParseError(f"缺少 '=': '{raw.strip()}'", line)
    key, value = (part.strip() for part in content.split("=", 1))
    if not key or not value:
        raise ParseError(f"键或值为空: '{raw.strip()}'", line)
    return key, value


def _iter_entries(text: str, overrides: Optional[Iterable[str]]):
    for number, raw in enumerate(text.splitlines(), start=1):
        entry = _split_line(raw, number)
        if entry:
            yield entry[0], entry[1], number
    for item in overrides or ():
        entry = _split_line(item, None)
        if entry is None:
            raise ParseError(f"--set 参数为空: '{item}'")
        yield entry[0], entry[1], None


def parse_config(text: str, overrides: Optional[Iterable[str]] = None,
                 check: bool = True) -> SweepSpec:
    """
    解析配置文本

    Args:
        text: 配置文件内容
        overrides: 形如 "key=value" 的覆盖项，在文件之后生效
        check: 是否检查扫描范围与端点参数（validate 子命令只解析不检查）

    Returns:
        SweepSpec；未给出的键取实验参数组与默认扫描范围
    """
    fields: Dict[str, object] = {}
    temperatures: Dict[str, float] = {}
    sweep: Dict[str, object] = {}

    for key, value, line in _iter_entries(text, overrides):
        if key in HZ_KEYS:
            for name in HZ_KEYS[key]:
                fields[name] = 2 * math.pi * parse_number(value, line)
        elif key in PLAIN_KEYS:
            for name in PLAIN_KEYS[key]:
                fields[name] = parse_number(value, line)
                temperatures.pop(name, None)
        elif key in TEMPERATURE_KEYS:
            kelvin = parse_number(value, line)
            for name in TEMPERATURE_KEYS[key]:
                temperatures[name] = kelvin
        elif key == "angle_weight":
            if value not in ANGLE_WEIGHTS:
                raise RangeError(f"angle_weight 只能是 {ANGLE_WEIGHTS}，收到 '{value}'")
            fields["angle_weight"] = value
        elif key == "sweep":
            if value not in SWEEP_AXES:
                raise RangeError(f"不支持的扫描量 '{value}'，可选 {SWEEP_AXES}")
            sweep["swept"] = value
        elif key in ("start", "stop"):
            sweep[key] = parse_number(value, line)
        elif key == "steps":
            try:
                sweep["steps"] = int(value)
            except ValueError:
                raise ParseError(f"steps 必须是整数，收到 '{value}'", line) from None
        elif key == "outputs":
            columns: List[str] = [c.strip() for c in value.split(",") if c.strip()]
            unknown = [c for c in columns if c not in OUTPUT_COLUMNS]
            if unknown or not columns:
                raise RangeError(f"未知的输出列 {unknown}，可选 {OUTPUT_COLUMNS}")
            sweep["outputs"] = tuple(columns)
        else:
            raise UnknownKey(key, line)

    base = PhysicalParams(**fields)
    if temperatures:
        # 温度在所有频率确定之后换算为热声子数
        try:
            base = base.model_copy(update={
                name: thermal_occupancy(base.omega_m, kelvin)
                for name, kelvin in temperatures.items()
            })
        except InvalidParams as e:
            raise RangeError(str(e)) from None

    swept = sweep.get("swept", "r")
    start, stop, steps = DEFAULT_RANGES[swept]
    spec = SweepSpec(
        base=base,
        swept=swept,
        start=sweep.get("start", start),
        stop=sweep.get("stop", stop),
        steps=sweep.get("steps", steps),
        outputs=sweep.get("outputs", OUTPUT_COLUMNS),
    )
    if check:
        spec.ensure_valid()
    logger.debug("配置解析完成: 扫描 %s ∈ [%g, %g]，%d 点", spec.swept, spec.start, spec.stop, spec.steps)
    return spec
