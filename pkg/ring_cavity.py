"""
环形腔光力学模型模块
由物理参数构造漂移矩阵 A、扩散矩阵 D，求解稳态协方差矩阵 V
并取出两个机械振子的 4x4 协方差矩阵 V_m

正交分量顺序: (δq₁, δp₁, δq₂, δp₂, δx, δy)
协方差约定: 真空态每个正交分量方差为 1/2
"""
import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import constants

from errors import InvalidParams, NotHurwitz
from linalg import is_hurwitz, solve_lyapunov
from steering_measures import TwoModeCovariance

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# 正交分量下标
Q1, P1, Q2, P2, X, Y = range(6)

ANGLE_WEIGHTS = ("half", "full")

RWA_RATIO_WARN = 3.0
QUALITY_WARN = 100.0


class PhysicalParams(BaseModel):
    """
    环形腔实验参数（SI 单位，频率均为角频率 rad/s）

    默认值为实验参数组: m = 145 ng, ω_m = 2π·947 kHz, γ = 2π·140 Hz,
    κ = 2π·215 kHz, ω_c = 2π·5.26e14 Hz, ω_L = 2π·2.82e14 Hz, 功率 50 mW
    """
    model_config = ConfigDict(frozen=True)

    omega_m: float = TWO_PI * 947e3
    gamma1: float = TWO_PI * 140.0
    gamma2: float = TWO_PI * 140.0
    kappa: float = TWO_PI * 215e3
    omega_c: float = TWO_PI * 5.26e14
    omega_L: float = TWO_PI * 2.82e14
    power: float = 50e-3
    m1: float = 145e-12
    m2: float = 145e-12
    l1: float = 112e-6
    l2: float = 85e-6
    theta1: float = math.pi / 6
    theta2: float = math.pi / 3
    r: float = 1.5
    nth1: float = 5.0
    nth2: float = 5.0
    # None 表示红边带 Δ = -ω_m
    delta: Optional[float] = None
    # "half": cos²(θ/2)；"full": cos²θ
    angle_weight: str = "half"

    @property
    def detuning(self) -> float:
        """有效失谐 Δ"""
        return -self.omega_m if self.delta is None else self.delta


class DerivedCouplings(BaseModel):
    """有效光力耦合及其角度加权值"""
    model_config = ConfigDict(frozen=True)

    G1: float
    G2: float
    Geff1: float
    Geff2: float


class ValidationReport(BaseModel):
    """参数检查结果"""
    model_config = ConfigDict(frozen=True)

    errors: List[str] = []
    warnings: List[str] = []

    @property
    def ok(self) -> bool:
        return not self.errors


def angle_weight(theta: float, convention: str = "half") -> float:
    """
    入射角权重

    Args:
        theta: 入射角 (rad)
        convention: "half" 取 cos²(θ/2)，"full" 取 cos²θ

    Returns:
        权重，取值 [0, 1]
    """
    if convention == "half":
        return math.cos(theta / 2) ** 2
    if convention == "full":
        return math.cos(theta) ** 2
    raise InvalidParams(f"未知的角度约定 '{convention}'，可选 {ANGLE_WEIGHTS}")


def effective_coupling(params: PhysicalParams, j: int) -> float:
    """
    有效光力耦合 G_j = sqrt(ω_c² κ ℘ / (l_j² m_j ω_m ω_L (κ²/4 + Δ²)))

    Args:
        params: 物理参数
        j: 振子编号 1 或 2

    Returns:
        G_j (rad/s)；功率为 0 时返回 0
    """
    if j not in (1, 2):
        raise ValueError(f"振子编号只能是 1 或 2，收到 {j}")
    length = params.l1 if j == 1 else params.l2
    mass = params.m1 if j == 1 else params.m2

    positives = {
        "omega_c": params.omega_c,
        "kappa": params.kappa,
        "omega_m": params.omega_m,
        "omega_L": params.omega_L,
        f"l{j}": length,
        f"m{j}": mass,
    }
    for name, value in positives.items():
        if not value > 0:
            raise InvalidParams(f"{name} 必须为正，收到 {value}")
    if params.power < 0:
        raise InvalidParams(f"power 不能为负，收到 {params.power}")
    if params.power == 0:
        return 0.0

    delta = params.detuning
    numerator = params.omega_c ** 2 * params.kappa * params.power
    denominator = (length ** 2 * mass * params.omega_m * params.omega_L
                   * (params.kappa ** 2 / 4 + delta ** 2))
    return math.sqrt(numerator / denominator)


def derived_couplings(params: PhysicalParams) -> DerivedCouplings:
    """计算两个振子的耦合 G_j 与角度加权后的 Geff_j"""
    g1 = effective_coupling(params, 1)
    g2 = effective_coupling(params, 2)
    return DerivedCouplings(
        G1=g1,
        G2=g2,
        Geff1=g1 * angle_weight(params.theta1, params.angle_weight),
        Geff2=g2 * angle_weight(params.theta2, params.angle_weight),
    )


def thermal_occupancy(omega_m: float, temperature: float) -> float:
    """
    平均热声子数 n_th = 1 / (exp(ħω_m / k_B T) - 1)

    Args:
        omega_m: 机械角频率 (rad/s)
        temperature: 温度 (K)

    Returns:
        平均热声子数
    """
    if not temperature > 0:
        raise InvalidParams(f"温度必须为正，收到 {temperature}")
    if not omega_m > 0:
        raise InvalidParams(f"omega_m 必须为正，收到 {omega_m}")
    x = constants.hbar * omega_m / (constants.k * temperature)
    if x > 700:
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def squeeze_moments(r: float) -> Tuple[float, float]:
    """
    压缩光噪声矩 N = sinh²r, M = sinh r cosh r

    Args:
        r: 压缩参数，r >= 0

    Returns:
        (N, M)
    """
    if r < 0:
        raise InvalidParams(f"压缩参数 r 不能为负，收到 {r}")
    s = math.sinh(r)
    return s * s, s * math.cosh(r)


def _assemble_drift(gamma1: float, gamma2: float, kappa: float,
                    geff1: float, geff2: float) -> np.ndarray:
    a = np.diag([-gamma1 / 2, -gamma1 / 2, -gamma2 / 2, -gamma2 / 2, -kappa / 2, -kappa / 2])
    a[Q1, X] = a[P1, Y] = geff1
    a[X, Q1] = a[Y, P1] = -geff1
    a[Q2, X] = a[P2, Y] = -geff2
    a[X, Q2] = a[Y, P2] = geff2
    return a


def _assemble_diffusion(gamma1: float, gamma2: float, kappa: float,
                        nth1: float, nth2: float, r: float) -> np.ndarray:
    n, m = squeeze_moments(r)
    # e^{2r} = 1 + 2N + 2M，e^{-2r} 取倒数以避免大 r 下的相消
    amplified = 1.0 + 2.0 * n + 2.0 * m
    return np.diag([
        gamma1 / 2 * (2 * nth1 + 1),
        gamma1 / 2 * (2 * nth1 + 1),
        gamma2 / 2 * (2 * nth2 + 1),
        gamma2 / 2 * (2 * nth2 + 1),
        kappa / 2 * amplified,
        kappa / 2 / amplified,
    ])


def drift_matrix(params: PhysicalParams) -> np.ndarray:
    """
    红边带旋转波近似下的 6x6 漂移矩阵 (rad/s)

    Args:
        params: 物理参数

    Returns:
        漂移矩阵 A
    """
    require_valid(params)
    c = derived_couplings(params)
    return _assemble_drift(params.gamma1, params.gamma2, params.kappa, c.Geff1, c.Geff2)


def diffusion_matrix(params: PhysicalParams) -> np.ndarray:
    """
    6x6 扩散矩阵 (rad/s)

    Args:
        params: 物理参数

    Returns:
        D = (γ₁/2)(2n₁+1)I₂ ⊕ (γ₂/2)(2n₂+1)I₂ ⊕ diag(κe^{2r}/2, κe^{-2r}/2)
    """
    require_valid(params)
    return _assemble_diffusion(params.gamma1, params.gamma2, params.kappa,
                               params.nth1, params.nth2, params.r)


def normalized_system(params: PhysicalParams) -> Tuple[np.ndarray, np.ndarray]:
    """
    以 ω_m 为单位的 (A, D)，矩阵元为 O(1) 量级

    Returns:
        (A / ω_m, D / ω_m)
    """
    return drift_matrix(params) / params.omega_m, diffusion_matrix(params) / params.omega_m


def steady_covariance(params: PhysicalParams) -> np.ndarray:
    """
    求解 Lyapunov 方程得到 6x6 稳态协方差矩阵

    Args:
        params: 物理参数

    Returns:
        对称协方差矩阵 V（无量纲）
    """
    require_valid(params)
    a, d = normalized_system(params)
    logger.debug("求解稳态: r=%g nth=(%g, %g) power=%g", params.r, params.nth1, params.nth2, params.power)
    if not is_hurwitz(a):
        raise NotHurwitz(f"漂移矩阵不稳定 (r={params.r:g}, power={params.power:g})")
    return solve_lyapunov(a, d, check_stability=False)


def mechanical_covariance(v: np.ndarray) -> TwoModeCovariance:
    """
    对光学模求迹，取前 4x4 主子矩阵

    Args:
        v: 6x6 协方差矩阵

    Returns:
        两个机械振子的协方差
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (6, 6):
        raise ValueError(f"需要 6x6 协方差矩阵，收到 {v.shape}")
    return TwoModeCovariance.from_matrix(v[:4, :4])


def validate_params(params: PhysicalParams) -> ValidationReport:
    """
    检查参数合法性与模型适用范围，不抛出异常

    Args:
        params: 物理参数

    Returns:
        ValidationReport，errors 为不合法项，warnings 为近似可能失效的提示
    """
    errors: List[str] = []
    warnings: List[str] = []

    for name in ("omega_m", "gamma1", "gamma2", "kappa", "omega_c", "omega_L",
                 "m1", "m2", "l1", "l2"):
        value = getattr(params, name)
        if not (math.isfinite(value) and value > 0):
            errors.append(f"{name} 必须为正的有限值，当前 {value}")
    for name in ("power", "r", "nth1", "nth2"):
        value = getattr(params, name)
        if not (math.isfinite(value) and value >= 0):
            errors.append(f"{name} 必须为非负的有限值，当前 {value}")
    for name in ("theta1", "theta2"):
        value = getattr(params, name)
        if not 0 <= value < math.pi:
            errors.append(f"{name} 必须在 [0, π) 内，当前 {value}")
    if params.angle_weight not in ANGLE_WEIGHTS:
        errors.append(f"未知的角度约定 '{params.angle_weight}'，可选 {ANGLE_WEIGHTS}")
    if params.delta is not None and not math.isfinite(params.delta):
        errors.append(f"delta 必须为有限值，当前 {params.delta}")

    if params.omega_m > 0 and params.kappa > 0 and params.omega_m / params.kappa < RWA_RATIO_WARN:
        warnings.append(
            f"ω_m/κ = {params.omega_m / params.kappa:.2f} < {RWA_RATIO_WARN:g}，旋转波近似可能失效"
        )
    for j, gamma in ((1, params.gamma1), (2, params.gamma2)):
        if params.omega_m > 0 and gamma > 0 and params.omega_m / gamma < QUALITY_WARN:
            warnings.append(
                f"Q{j} = {params.omega_m / gamma:.1f} < {QUALITY_WARN:g}，马尔可夫噪声近似可能失效"
            )
    if params.delta is not None and params.delta != -params.omega_m:
        warnings.append("delta ≠ -omega_m，漂移矩阵仍按红边带结构构造")
    if params.angle_weight == "half":
        warnings.append(
            "angle_weight = half（cos²(θ/2)）；图数据集 fig2a/fig2b/fig3a/fig3b 使用 full（cos²θ）"
        )

    return ValidationReport(errors=errors, warnings=warnings)


def require_valid(params: PhysicalParams) -> None:
    """参数不合法时抛出 InvalidParams"""
    report = validate_params(params)
    if report.errors:
        raise InvalidParams("; ".join(report.errors))


def swap_modes(params: PhysicalParams) -> PhysicalParams:
    """交换两个振子的 (γ, m, l, θ, n_th)"""
    return params.model_copy(update={
        "gamma1": params.gamma2, "gamma2": params.gamma1,
        "m1": params.m2, "m2": params.m1,
        "l1": params.l2, "l2": params.l1,
        "theta1": params.theta2, "theta2": params.theta1,
        "nth1": params.nth2, "nth2": params.nth1,
    })
