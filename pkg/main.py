"""
环形腔机械振子导引仿真程序主入口

子命令:
  point     计算单个参数点
  sweep     按配置文件执行一维扫描并输出 CSV
  figure    生成 fig2a/fig2b/fig3a/fig3b 数据集
  validate  检查配置中的物理参数
"""
import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from config_loader import parse_config
from errors import ConfigError, NumericalError
from ring_cavity import validate_params
from sweep_runner import (FIGURE_IDS, SweepSpec, evaluate_point, figure_preset, format_number,
                          run_sweep, write_csv, write_plot_script)


def _status(message: str):
    """状态信息写到 stderr，stdout 只输出数据"""
    print(message, file=sys.stderr)


def _default_workers() -> int:
    raw = os.getenv("RING_STEERING_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        _status(f"⚠ RING_STEERING_WORKERS={raw!r} 不是整数，使用 1")
        return 1


def _load_spec(config: Optional[str], overrides: Optional[List[str]],
               check: bool = True) -> SweepSpec:
    text = ""
    if config:
        try:
            text = Path(config).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            raise ConfigError(f"无法读取配置文件 {config}: {e}") from None
    return parse_config(text, overrides, check=check)


def _write_text(path: str, text: str):
    try:
        Path(path).write_bytes(text.encode("utf-8"))
    except OSError as e:
        raise ConfigError(f"无法写入 {path}: {e}") from None


def _run_and_write(spec: SweepSpec, out: str, workers: int, title: str,
                   plot_script: Optional[str] = None):
    _status(f"[*] 扫描 {spec.swept} ∈ [{spec.start:g}, {spec.stop:g}]，共 {spec.steps} 点")
    records = run_sweep(spec, workers=workers)
    _write_text(out, write_csv(records, spec.outputs))
    flagged = sum(1 for record in records if record.flag)
    if flagged:
        _status(f"⚠ {flagged} 个网格点计算失败，已在 CSV 中标记")
    _status(f"✓ 已写入 {out}")
    if plot_script:
        _write_text(plot_script, write_plot_script(Path(out).name, title, spec.swept, spec.outputs))
        _status(f"✓ 绘图脚本已写入 {plot_script}")


def cmd_point(args) -> int:
    """计算单个参数点，输出 key=value"""
    spec = _load_spec(args.config, args.set)
    for warning in validate_params(spec.base).warnings:
        _status(f"⚠ {warning}")
    result = evaluate_point(spec.base)
    print(f"g_ab={format_number(result.g_ab)}")
    print(f"g_ba={format_number(result.g_ba)}")
    print(f"e_n={format_number(result.e_n)}")
    print(f"nu={format_number(result.nu)}")
    print(f"regime={result.regime.value}")
    return 0


def cmd_sweep(args) -> int:
    """按配置执行扫描"""
    spec = _load_spec(args.config, args.set)
    _run_and_write(spec, args.out, args.workers, f"sweep {spec.swept}", args.plot_script)
    return 0


def cmd_figure(args) -> int:
    """生成图数据集"""
    spec = figure_preset(args.figure_id)
    _run_and_write(spec, args.out, args.workers, args.figure_id, args.plot_script)
    return 0


def cmd_validate(args) -> int:
    """检查物理参数，存在错误时返回 1"""
    spec = _load_spec(args.config, args.set, check=False)
    result = validate_params(spec.base)
    for error in result.errors:
        print(f"error: {error}")
    for warning in result.warnings:
        print(f"warning: {warning}")
    if result.errors:
        _status(f"✗ {len(result.errors)} 个错误")
        return 1
    _status(f"✓ 参数合法（{len(result.warnings)} 个警告）")
    return 0


class _ArgumentParser(argparse.ArgumentParser):
    """命令行用法错误按配置错误处理（退出码 1）"""

    def error(self, message):
        self.print_usage(sys.stderr)
        _status(f"✗ 参数错误: {message}")
        sys.exit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="ring-steering",
        description="环形腔中两个机械振子的稳态高斯导引与纠缠仿真",
    )
    parser.add_argument("--verbose", action="store_true", help="输出调试日志")
    sub = parser.add_subparsers(dest="command", required=True)

    point = sub.add_parser("point", help="计算单个参数点")
    point.add_argument("--config", help="配置文件")
    point.add_argument("--set", action="append", metavar="KEY=VALUE", help="覆盖配置项，可重复")
    point.set_defaults(handler=cmd_point)

    sweep = sub.add_parser("sweep", help="执行一维参数扫描")
    sweep.add_argument("--config", required=True, help="配置文件")
    sweep.add_argument("--set", action="append", metavar="KEY=VALUE", help="覆盖配置项，可重复")
    sweep.add_argument("--out", required=True, help="输出 CSV 文件")
    sweep.add_argument("--plot-script", help="同时输出 gnuplot 脚本")
    sweep.add_argument("--workers", type=int, default=_default_workers(), help="并行线程数")
    sweep.set_defaults(handler=cmd_sweep)

    figure = sub.add_parser("figure", help="生成图数据集")
    figure.add_argument("figure_id", choices=FIGURE_IDS)
    figure.add_argument("--out", required=True, help="输出 CSV 文件")
    figure.add_argument("--plot-script", help="同时输出 gnuplot 脚本")
    figure.add_argument("--workers", type=int, default=_default_workers(), help="并行线程数")
    figure.set_defaults(handler=cmd_figure)

    validate = sub.add_parser("validate", help="检查配置中的物理参数")
    validate.add_argument("--config", required=True, help="配置文件")
    validate.add_argument("--set", action="append", metavar="KEY=VALUE", help="覆盖配置项，可重复")
    validate.set_defaults(handler=cmd_validate)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """主程序入口，返回退出码: 0 成功，1 配置错误，2 数值计算失败"""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )

    try:
        return args.handler(args)
    except ConfigError as e:
        _status(f"✗ 配置错误: {e}")
        return 1
    except NumericalError as e:
        _status(f"✗ 数值计算失败: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
