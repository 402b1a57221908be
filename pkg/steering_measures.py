"""
高斯量子导引度量模块
由两个机械振子的 4x4 协方差矩阵计算双向导引、对数负性、
部分转置最小辛本征值以及导引类型
"""
import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationInfo, field_validator

from errors import DegenerateState
from linalg import determinant, lu_solve

# 判定导引/纠缠是否为零的数值阈值
EPSILON_ZERO = 1e-9
DISCRIMINANT_TOL = 1e-12
PHYSICAL_TOL = 1e-9
SYMMETRY_TOL = 1e-9
ROUNDING_TOL = 1e-12


class Direction(str, Enum):
    """导引方向"""
    A_TO_B = "AtoB"
    B_TO_A = "BtoA"


class Regime(str, Enum):
    """导引类型；Unstable / Degenerate 只出现在扫描中失败的点"""
    NO_WAY = "NoWay"
    ONE_WAY_A_TO_B = "OneWayAtoB"
    ONE_WAY_B_TO_A = "OneWayBtoA"
    TWO_WAY = "TwoWay"
    UNSTABLE = "Unstable"
    DEGENERATE = "Degenerate"


def _rotation(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


class TwoModeCovariance(BaseModel):
    """
    两模协方差矩阵 V_m = [[V_A, V_{A/B}], [V_{A/B}^T, V_B]]
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    va: np.ndarray
    vb: np.ndarray
    vab: np.ndarray

    @field_validator("va", "vb", "vab", mode="before")
    @classmethod
    def _as_block(cls, value, info: ValidationInfo):
        block = np.array(value, dtype=float)
        if block.shape != (2, 2):
            raise ValueError(f"{info.field_name} 必须是 2x2 矩阵，收到 {block.shape}")
        if not np.all(np.isfinite(block)):
            raise ValueError(f"{info.field_name} 含有 NaN 或无穷大")
        if info.field_name != "vab":
            scale = max(1.0, float(np.max(np.abs(block))))
            if abs(block[0, 1] - block[1, 0]) > SYMMETRY_TOL * scale:
                raise ValueError(f"{info.field_name} 不对称")
        block.setflags(write=False)
        return block

    @classmethod
    def from_matrix(cls, m) -> "TwoModeCovariance":
        """由 4x4 矩阵切分出三个子块"""
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"需要 4x4 矩阵，收到 {m.shape}")
        return cls(va=m[:2, :2], vb=m[2:, 2:], vab=m[:2, 2:])

    def matrix(self) -> np.ndarray:
        """组装 4x4 矩阵"""
        return np.block([[self.va, self.vab], [self.vab.T, self.vb]])

    def swapped(self) -> "TwoModeCovariance":
        """交换 A、B 两个模"""
        return TwoModeCovariance(va=self.vb, vb=self.va, vab=self.vab.T)

    def rotated(self, phi_a: float, phi_b: float) -> "TwoModeCovariance":
        """
        对两个模分别做局域相位旋转

        Args:
            phi_a: 模 A 的旋转角
            phi_b: 模 B 的旋转角
        """
        ra, rb = _rotation(phi_a), _rotation(phi_b)
        return TwoModeCovariance(
            va=ra @ self.va @ ra.T,
            vb=rb @ self.vb @ rb.T,
            vab=ra @ self.vab @ rb.T,
        )

    @property
    def det_a(self) -> float:
        return determinant(self.va)

    @property
    def det_b(self) -> float:
        return determinant(self.vb)

    @property
    def det_ab(self) -> float:
        return determinant(self.vab)

    @property
    def det_m(self) -> float:
        return determinant(self.matrix())


class SteeringReport(BaseModel):
    """单个参数点的导引与纠缠结果"""
    model_config = ConfigDict(frozen=True)

    g_ab: float
    g_ba: float
    e_n: float
    nu: float
    regime: Regime


def steering(vm: TwoModeCovariance, direction: Direction) -> float:
    """
    高斯导引 G = max(0, ½ ln(det V_X / (4 det V_m)))

    Args:
        vm: 两模协方差
        direction: A_TO_B 时 X = A，B_TO_A 时 X = B

    Returns:
        导引量，非负

    Raises:
        DegenerateState: det V_m ≤ 0，或导引方局域块 det V_X ≤ 0（对数无定义）
    """
    det_m = vm.det_m
    if det_m <= 0:
        raise DegenerateState(f"det V_m = {det_m:.3e} 非正")
    det_x = vm.det_a if Direction(direction) is Direction.A_TO_B else vm.det_b
    if det_x <= 0:
        raise DegenerateState(f"局域块行列式 {det_x:.3e} 非正")
    return max(0.0, 0.5 * math.log(det_x / (4.0 * det_m)))


def _smaller_symplectic(sigma: float, det_m: float) -> float:
    discriminant = sigma * sigma - 4.0 * det_m
    if discriminant < 0:
        if discriminant < -DISCRIMINANT_TOL * sigma * sigma:
            raise DegenerateState(f"判别式 {discriminant:.3e} 为负")
        discriminant = 0.0
    # ν² = (σ - √disc)/2 写成无相消形式
    return math.sqrt(2.0 * det_m / (sigma + math.sqrt(discriminant)))


def min_symplectic_pt(vm: TwoModeCovariance) -> float:
    """
    部分转置后的最小辛本征值 ν

    Args:
        vm: 两模协方差

    Returns:
        ν，σ = det V_A + det V_B - 2 det V_{A/B}
    """
    det_m = vm.det_m
    if det_m <= 0:
        raise DegenerateState(f"det V_m = {det_m:.3e} 非正")
    sigma = vm.det_a + vm.det_b - 2.0 * vm.det_ab
    if sigma <= 0:
        raise DegenerateState(f"σ = {sigma:.3e} 非正")
    return _smaller_symplectic(sigma, det_m)


def _negativity(nu: float) -> float:
    return max(0.0, -math.log(2.0 * nu))


def log_negativity(vm: TwoModeCovariance) -> float:
    """对数负性 E_N = max(0, -ln 2ν)"""
    return _negativity(min_symplectic_pt(vm))


def is_physical(vm: TwoModeCovariance) -> bool:
    """
    检查是否为合法的量子协方差矩阵（不确定关系）

    由不变量 σ̃ = det V_A + det V_B + 2 det V_{A/B} 与 Δ = det V_m 判定:
    两个辛本征值都不小于 1/2 等价于 σ̃ ≥ 1/2 且 (ν₋² - 1/4)(ν₊² - 1/4) = Δ - σ̃/4 + 1/16 ≥ 0

    Args:
        vm: 两模协方差

    Returns:
        两个辛本征值均不小于 1/2 - 1e-9 且局域块正定时为 True
    """
    if vm.va[0, 0] <= 0 or vm.vb[0, 0] <= 0 or vm.det_a <= 0 or vm.det_b <= 0:
        return False
    det_m = vm.det_m
    if det_m <= 0:
        return False
    sigma = vm.det_a + vm.det_b + 2.0 * vm.det_ab
    if sigma < 0.5 - 2.0 * PHYSICAL_TOL:
        return False
    # ν₊² - 1/4
    gap = (sigma + math.sqrt(max(sigma * sigma - 4.0 * det_m, 0.0))) / 2 - 0.25
    product = det_m - sigma / 4 + 1.0 / 16
    slack = PHYSICAL_TOL * max(gap, 0.0) + ROUNDING_TOL * (det_m + sigma / 4 + 1.0 / 16)
    return product >= -slack


def classify(g_ab: float, g_ba: float) -> Regime:
    """
    按两个方向的导引量判定导引类型

    Args:
        g_ab: A→B 导引
        g_ba: B→A 导引

    Returns:
        Regime
    """
    ab = g_ab > EPSILON_ZERO
    ba = g_ba > EPSILON_ZERO
    if ab and ba:
        return Regime.TWO_WAY
    if ab:
        return Regime.ONE_WAY_A_TO_B
    if ba:
        return Regime.ONE_WAY_B_TO_A
    return Regime.NO_WAY


def report(vm: TwoModeCovariance) -> SteeringReport:
    """计算全部度量"""
    g_ab = steering(vm, Direction.A_TO_B)
    g_ba = steering(vm, Direction.B_TO_A)
    nu = min_symplectic_pt(vm)
    return SteeringReport(
        g_ab=g_ab,
        g_ba=g_ba,
        e_n=_negativity(nu),
        nu=nu,
        regime=classify(g_ab, g_ba),
    )


def steering_condition_violated(vm: TwoModeCovariance, direction: Direction) -> bool:
    """
    判断 V_m + (i/2)(0 ⊕ Ω) ≥ 0 是否被破坏（被导引一侧取 Ω）

    条件等价于被导引模的 Schur 补 M 满足 det M ≥ 1/4。

    Args:
        vm: 两模协方差
        direction: 导引方向

    Returns:
        条件被破坏（态可导引）时为 True
    """
    if Direction(direction) is Direction.A_TO_B:
        steering_block, steered_block, coupling = vm.va, vm.vb, vm.vab
    else:
        steering_block, steered_block, coupling = vm.vb, vm.va, vm.vab.T
    # M = V_steered - C^T V_steering^{-1} C
    solved = np.column_stack([lu_solve(steering_block, coupling[:, k]) for k in range(2)])
    schur = steered_block - coupling.T @ solved
    return determinant(schur) < 0.25


def symplectic_spectrum(v) -> np.ndarray:
    """
    任意 2k x 2k 正定协方差矩阵的辛本征值（升序）

    取 V^{1/2} Ω V^{1/2} 的厄米形式求本征值，重根附近仍然稳定。

    Args:
        v: 协方差矩阵

    Returns:
        长度为 k 的数组
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] % 2:
        raise ValueError(f"需要偶数维方阵，收到 {v.shape}")
    n = v.shape[0]
    w, u = np.linalg.eigh((v + v.T) / 2)
    if w[0] <= 0:
        raise DegenerateState(f"协方差矩阵非正定，最小本征值 {w[0]:.3e}")
    root = (u * np.sqrt(w)) @ u.T
    omega = np.kron(np.eye(n // 2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    values = np.linalg.eigvalsh(1j * (root @ omega @ root))
    return values[n // 2:]
