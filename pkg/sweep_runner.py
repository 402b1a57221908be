"""
参数扫描模块
一维参数扫描、图数据集预设、CSV 与 gnuplot 脚本输出
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from errors import ConfigError, DegenerateState, NotHurwitz, RangeError
from ring_cavity import (PhysicalParams, mechanical_covariance, steady_covariance, swap_modes,
                         validate_params)
from steering_measures import EPSILON_ZERO, Regime, SteeringReport, report

logger = logging.getLogger(__name__)

SWEEP_AXES = ("r", "nth", "power", "l1", "l2", "theta1", "theta2")
OUTPUT_COLUMNS = ("g_ab", "g_ba", "e_n", "nu", "regime")
NUMERIC_COLUMNS = ("g_ab", "g_ba", "e_n", "nu")

# 各扫描轴的默认范围 (start, stop, steps)
DEFAULT_RANGES: Dict[str, Tuple[float, float, int]] = {
    "r": (0.0, 3.5, 141),
    "nth": (0.0, 5.0, 101),
    "power": (0.0, 0.1, 101),
    "l1": (50e-6, 150e-6, 101),
    "l2": (50e-6, 150e-6, 101),
    "theta1": (0.0, math.pi / 2, 91),
    "theta2": (0.0, math.pi / 2, 91),
}

FIGURE_IDS = ("fig2a", "fig2b", "fig3a", "fig3b")


class SweepSpec(BaseModel):
    """一维参数扫描的描述"""
    model_config = ConfigDict(frozen=True)

    base: PhysicalParams = PhysicalParams()
    swept: str = "r"
    start: float = 0.0
    stop: float = 3.5
    steps: int = 141
    outputs: Tuple[str, ...] = OUTPUT_COLUMNS

    def grid(self) -> np.ndarray:
        """扫描网格（含两端点）"""
        return np.linspace(self.start, self.stop, self.steps)

    def point_params(self, value: float) -> PhysicalParams:
        """
        网格点对应的参数；nth 扫描同时设置 nth1 与 nth2

        Args:
            value: 扫描量取值

        Returns:
            该点的物理参数
        """
        if self.swept == "nth":
            update = {"nth1": float(value), "nth2": float(value)}
        else:
            update = {self.swept: float(value)}
        return self.base.model_copy(update=update)

    def ensure_valid(self) -> None:
        """检查扫描描述，不合法时抛出 RangeError"""
        if self.swept not in SWEEP_AXES:
            raise RangeError(f"不支持的扫描量 '{self.swept}'，可选 {SWEEP_AXES}")
        if not self.start < self.stop:
            raise RangeError(f"需要 start < stop，当前 start={self.start} stop={self.stop}")
        if self.steps < 2:
            raise RangeError(f"steps 至少为 2，当前 {self.steps}")
        unknown = [c for c in self.outputs if c not in OUTPUT_COLUMNS]
        if unknown or not self.outputs:
            raise RangeError(f"未知的输出列 {unknown}，可选 {OUTPUT_COLUMNS}")
        for value in (self.start, self.stop):
            errors = validate_params(self.point_params(value)).errors
            if errors:
                raise RangeError(f"{self.swept}={value:g} 处参数不合法: " + "; ".join(errors))


class SweepRecord(BaseModel):
    """扫描中一个网格点的结果；失败的点 flag 非空且度量为 NaN"""
    model_config = ConfigDict(frozen=True)

    value: float
    g_ab: float
    g_ba: float
    e_n: float
    nu: float
    regime: Regime
    flag: Optional[str] = None


def evaluate_point(params: PhysicalParams) -> SteeringReport:
    """
    单点计算: 稳态协方差 → 机械协方差 → 导引度量

    Args:
        params: 物理参数

    Returns:
        SteeringReport
    """
    return report(mechanical_covariance(steady_covariance(params)))


def _flagged(value: float, regime: Regime, reason: str) -> SweepRecord:
    nan = float("nan")
    return SweepRecord(value=value, g_ab=nan, g_ba=nan, e_n=nan, nu=nan, regime=regime, flag=reason)


def _evaluate_record(spec: SweepSpec, value: float) -> SweepRecord:
    value = float(value)
    params = spec.point_params(value)
    try:
        result = evaluate_point(params)
    except NotHurwitz as e:
        logger.error("%s=%g 处不稳定: %s", spec.swept, value, e)
        return _flagged(value, Regime.UNSTABLE, str(e))
    except DegenerateState as e:
        logger.error("%s=%g 处协方差退化: %s", spec.swept, value, e)
        return _flagged(value, Regime.DEGENERATE, str(e))
    logger.debug("%s=%g -> %s", spec.swept, value, result.regime.value)
    return SweepRecord(value=value, **result.model_dump())


def run_sweep(spec: SweepSpec, workers: int = 1) -> List[SweepRecord]:
    """
    执行一维扫描

    Args:
        spec: 扫描描述
        workers: 并行线程数，1 表示顺序计算

    Returns:
        按网格顺序排列的 steps 条记录
    """
    spec.ensure_valid()
    for warning in validate_params(spec.point_params(spec.start)).warnings:
        logger.warning(warning)
    if workers < 1:
        raise ConfigError(f"workers 至少为 1，当前 {workers}")

    grid = spec.grid()
    if workers == 1:
        records = [_evaluate_record(spec, value) for value in grid]
    else:
        # map 保持网格顺序，与完成顺序无关
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda value: _evaluate_record(spec, value), grid))

    flagged = sum(1 for record in records if record.flag)
    if flagged:
        logger.warning("%d/%d 个网格点计算失败", flagged, len(records))
    return records


def figure_preset(figure_id: str) -> SweepSpec:
    """
    图 2、图 3 数据集的扫描预设

    fig2a: l₁=112 μm, l₂=85 μm, θ₁=π/6, θ₂=π/3, n_th=5，扫描 r ∈ [0, 3.5]
    fig2b: 交换两振子（长度、角度等）
    fig3a/fig3b: 对应配置下 r=1.5，扫描 n_th ∈ [0, 5]

    Args:
        figure_id: fig2a / fig2b / fig3a / fig3b

    Returns:
        SweepSpec
    """
    if figure_id not in FIGURE_IDS:
        raise ConfigError(f"未知的图编号 '{figure_id}'，可选 {FIGURE_IDS}")

    base = PhysicalParams(l1=112e-6, l2=85e-6, theta1=math.pi / 6, theta2=math.pi / 3,
                          nth1=5.0, nth2=5.0, angle_weight="full")
    if figure_id.endswith("b"):
        base = swap_modes(base)

    if figure_id.startswith("fig2"):
        return SweepSpec(base=base, swept="r", start=0.0, stop=3.5, steps=141)
    return SweepSpec(base=base.model_copy(update={"r": 1.5}),
                     swept="nth", start=0.0, stop=5.0, steps=101)


def format_number(x: float) -> str:
    """
    12 位小数的科学计数法，指数不补零，例如 5.000000000000e-1

    Args:
        x: 数值

    Returns:
        字符串；NaN 输出 nan
    """
    if math.isnan(x):
        return "nan"
    mantissa, exponent = f"{x + 0.0:.12e}".split("e")
    return f"{mantissa}e{int(exponent)}"


def _cell(record: SweepRecord, column: str) -> str:
    if column == "regime":
        return record.regime.value
    return format_number(getattr(record, column))


def write_csv(records: Sequence[SweepRecord], outputs: Sequence[str] = OUTPUT_COLUMNS) -> str:
    """
    生成 CSV 文本

    Args:
        records: 扫描记录，非空
        outputs: 输出列顺序

    Returns:
        以换行符分隔的 CSV 文本
    """
    if not records:
        raise ValueError("记录为空")
    lines = [",".join(("swept",) + tuple(outputs))]
    for record in records:
        cells = [format_number(record.value)] + [_cell(record, c) for c in outputs]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_plot_script(csv_name: str, title: str, swept: str = "r",
                      outputs: Sequence[str] = OUTPUT_COLUMNS) -> str:
    """
    生成读取 CSV 的 gnuplot 脚本

    Args:
        csv_name: CSV 文件名
        title: 图标题
        swept: 横轴名称
        outputs: CSV 中的输出列顺序

    Returns:
        gnuplot 脚本文本
    """
    columns = [(i + 2, c) for i, c in enumerate(outputs) if c in NUMERIC_COLUMNS]
    lines = [
        'set datafile separator ","',
        f'set title "{title}"',
        f'set xlabel "{swept}"',
        "set key top right",
        "set grid",
    ]
    plots = [f"'{csv_name}' using 1:{index} with lines title '{name}'" for index, name in columns]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def first_crossing(values, measure, threshold: float = EPSILON_ZERO) -> Optional[float]:
    """
    测量值第一次穿过阈值的位置（相邻网格点间线性插值）

    Args:
        values: 扫描网格
        measure: 对应的测量值
        threshold: 阈值，默认 ε₀

    Returns:
        穿越位置；没有穿越时返回 None
    """
    x = np.asarray(values, dtype=float)
    y = np.asarray(measure, dtype=float)
    if x.shape != y.shape:
        raise ValueError("网格与测量值长度不一致")
    above = y > threshold
    for i in range(1, len(x)):
        if above[i] != above[i - 1]:
            x0, x1, y0, y1 = x[i - 1], x[i], y[i - 1], y[i]
            return float(x0 + (threshold - y0) * (x1 - x0) / (y1 - y0))
    return None
