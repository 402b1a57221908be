"""
异常定义模块
配置类错误与数值类错误分开，命令行据此决定退出码
"""
from typing import Optional


class SimulationError(Exception):
    """所有仿真错误的基类"""


class ConfigError(SimulationError):
    """配置或参数错误（命令行退出码 1）"""


class ParseError(ConfigError):
    """配置文件行格式错误"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"第 {line} 行: {message}"
        super().__init__(message)


class UnknownKey(ConfigError):
    """配置文件中出现未知的键"""

    def __init__(self, key: str, line: Optional[int] = None):
        self.key = key
        self.line = line
        where = f"第 {line} 行: " if line is not None else ""
        super().__init__(f"{where}未知的配置项 '{key}'")


class RangeError(ConfigError):
    """取值超出允许范围"""


class InvalidParams(ConfigError):
    """物理参数不合法"""


class NumericalError(SimulationError):
    """数值计算失败（命令行退出码 2）"""


class SingularMatrix(NumericalError):
    """LU 分解遇到过小的主元"""


class NotHurwitz(NumericalError):
    """漂移矩阵不稳定，稳态不存在"""


class NonFinite(NumericalError):
    """积分结果出现 NaN 或无穷大"""


class DegenerateState(NumericalError):
    """协方差矩阵退化（行列式非正）"""
