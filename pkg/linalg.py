"""
小型稠密矩阵线性代数模块
LU 求解、行列式、特征多项式、Hurwitz 稳定性判据、Lyapunov 方程求解，
以及作为独立校验手段的 RK4 积分器

矩阵规模不超过 36x36（6x6 漂移矩阵的 Kronecker 展开），
分解和回代在 numpy.longdouble 下进行；numpy.linalg 不支持扩展精度。
"""
import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np

from errors import NonFinite, NotHurwitz, SingularMatrix

logger = logging.getLogger(__name__)

MAX_DIM = 36
MAX_POLY_DIM = 6
PIVOT_FLOOR = 1e-14
HURWITZ_TOL = 1e-12
LYAPUNOV_RTOL = 1e-10
SYMMETRY_TOL = 1e-12
LYAPUNOV_REFINEMENT = 2

# x86 上为 80 位扩展精度；不支持的平台上等同 float64
WORK_DTYPE = np.longdouble


def as_matrix(a, dtype=float, square: bool = True) -> np.ndarray:
    """
    检查并转换输入矩阵

    Args:
        a: 类数组输入
        dtype: 目标数据类型
        square: 是否要求方阵

    Returns:
        二维 numpy 数组
    """
    m = np.asarray(a, dtype=dtype)
    if m.ndim != 2:
        raise ValueError(f"需要二维矩阵，收到 {m.ndim} 维数组")
    rows, cols = m.shape
    if not (1 <= rows <= MAX_DIM and 1 <= cols <= MAX_DIM):
        raise ValueError(f"矩阵尺寸 {rows}x{cols} 超出 1..{MAX_DIM}")
    if square and rows != cols:
        raise ValueError(f"需要方阵，收到 {rows}x{cols}")
    if not np.all(np.isfinite(m)):
        raise ValueError("矩阵含有 NaN 或无穷大")
    return m


def lu_factor(a, raise_on_singular: bool = True) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    部分选主元 LU 分解

    Args:
        a: n x n 方阵
        raise_on_singular: 主元过小时是否抛出 SingularMatrix

    Returns:
        (紧凑存储的 LU 因子, 行置换, 置换符号)；
        不抛异常且遇到整列为零时符号为 0
    """
    lu = as_matrix(a, dtype=WORK_DTYPE).copy()
    n = lu.shape[0]
    piv = np.arange(n)
    sign = 1
    floor = PIVOT_FLOOR * float(np.max(np.abs(lu)))

    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        pivot = lu[p, k]
        if pivot == 0 or abs(pivot) < floor:
            if raise_on_singular:
                raise SingularMatrix(
                    f"第 {k} 步主元 {float(pivot):.3e} 低于阈值 {floor:.3e}"
                )
            if pivot == 0:
                return lu, piv, 0
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            piv[[k, p]] = piv[[p, k]]
            sign = -sign
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])

    return lu, piv, sign


def _substitute(lu: np.ndarray, piv: np.ndarray, b: np.ndarray) -> np.ndarray:
    """前代 + 回代"""
    y = b[piv].copy()
    n = len(y)
    for i in range(1, n):
        y[i] -= lu[i, :i] @ y[:i]
    for i in range(n - 1, -1, -1):
        y[i] = (y[i] - lu[i, i + 1:] @ y[i + 1:]) / lu[i, i]
    return y


def lu_solve(a, b, residual: Optional[Callable[[np.ndarray], np.ndarray]] = None,
             refine: int = 1) -> np.ndarray:
    """
    求解线性方程组 Ax = b

    Args:
        a: n x n 系数矩阵
        b: 长度为 n 的右端向量
        residual: 可选，给定 x 返回 b - Ax 的高精度实现；缺省时在工作精度下计算
        refine: 迭代修正次数

    Returns:
        解向量 x (float64)
    """
    m = as_matrix(a, dtype=WORK_DTYPE)
    rhs = np.asarray(b, dtype=WORK_DTYPE)
    if rhs.shape != (m.shape[0],):
        raise ValueError(f"右端向量长度 {rhs.shape} 与矩阵 {m.shape} 不匹配")

    lu, piv, _ = lu_factor(m)
    x = _substitute(lu, piv, rhs)
    for _ in range(refine):
        r = rhs - m @ x if residual is None else np.asarray(residual(x), dtype=WORK_DTYPE)
        x = x + _substitute(lu, piv, r)
    return x.astype(float)


def determinant(m) -> float:
    """
    通过 LU 分解计算行列式

    Args:
        m: n x n 方阵

    Returns:
        行列式；奇异矩阵返回 0
    """
    lu, _, sign = lu_factor(m, raise_on_singular=False)
    if sign == 0:
        return 0.0
    return float(sign * np.prod(np.diag(lu)))


def _faddeev_leverrier(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    coeffs = np.zeros(n + 1, dtype=WORK_DTYPE)
    coeffs[n] = 1
    identity = np.eye(n, dtype=WORK_DTYPE)
    mk = np.zeros((n, n), dtype=WORK_DTYPE)
    for k in range(1, n + 1):
        mk = m @ mk + coeffs[n - k + 1] * identity
        coeffs[n - k] = -np.trace(m @ mk) / k
    return coeffs


def char_poly(m) -> np.ndarray:
    """
    特征多项式 det(λI - M) 的系数（Faddeev-LeVerrier 递推）

    Args:
        m: n x n 方阵，n <= 6

    Returns:
        升幂系数 c_0..c_n，c_n = 1
    """
    work = as_matrix(m, dtype=WORK_DTYPE)
    if work.shape[0] > MAX_POLY_DIM:
        raise ValueError(f"特征多项式只支持 n <= {MAX_POLY_DIM}")
    return _faddeev_leverrier(work).astype(float)


def _balance(coeffs: np.ndarray) -> np.ndarray:
    """把根按 |c_0|^(1/n) 缩放，使常数项为 ±1"""
    n = len(coeffs) - 1
    c0 = abs(coeffs[0])
    if n == 0 or c0 == 0:
        return coeffs
    scale = np.power(c0, WORK_DTYPE(1) / n)
    return coeffs * np.power(scale, np.arange(n + 1) - n, dtype=WORK_DTYPE)


def routh_first_column(coeffs, floor: float = 0.0) -> np.ndarray:
    """
    Routh 表的第一列

    Args:
        coeffs: 升幂多项式系数 c_0..c_n
        floor: 某行首元素绝对值不超过该值时停止构表

    Returns:
        第一列元素（长度 n+1 表示构表完整）
    """
    a = np.asarray(coeffs, dtype=WORK_DTYPE)[::-1]
    n = len(a) - 1
    width = n // 2 + 1
    upper = np.zeros(width, dtype=WORK_DTYPE)
    lower = np.zeros(width, dtype=WORK_DTYPE)
    upper[:len(a[0::2])] = a[0::2]
    lower[:len(a[1::2])] = a[1::2]

    column = [upper[0]]
    if n == 0:
        return np.array(column)
    column.append(lower[0])
    for _ in range(n - 1):
        if abs(lower[0]) <= floor:
            break
        row = np.zeros(width, dtype=WORK_DTYPE)
        row[:-1] = (lower[0] * upper[1:] - upper[0] * lower[1:]) / lower[0]
        column.append(row[0])
        upper, lower = lower, row
    return np.array(column)


def is_hurwitz(m) -> bool:
    """
    Routh-Hurwitz 判据：所有特征值实部严格为负

    Args:
        m: n x n 方阵，n <= 6

    Returns:
        是否 Hurwitz 稳定；首元素接近零的行按临界处理，返回 False
    """
    work = as_matrix(m, dtype=WORK_DTYPE)
    n = work.shape[0]
    if n > MAX_POLY_DIM:
        raise ValueError(f"稳定性判据只支持 n <= {MAX_POLY_DIM}")

    coeffs = _balance(_faddeev_leverrier(work))
    floor = HURWITZ_TOL * float(np.max(np.abs(coeffs)))
    column = routh_first_column(coeffs, floor)
    return len(column) == n + 1 and bool(np.all(column > floor))


def lyapunov_residual(a, v, d) -> float:
    """相对残差 ||AV + VA^T + D||_F / (1 + ||D||_F)"""
    a, v, d = (np.asarray(x, dtype=float) for x in (a, v, d))
    residual = a @ v + v @ a.T + d
    return float(np.linalg.norm(residual) / (1.0 + np.linalg.norm(d)))


_SPLITTER = 134217729.0  # 2^27 + 1


def _split(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    t = _SPLITTER * x
    hi = t - (t - x)
    return hi, x - hi


def _two_product(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """float64 下的无误差乘积 a*b = p + e（Dekker）"""
    p = a * b
    a_hi, a_lo = _split(a)
    b_hi, b_lo = _split(b)
    e = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, e


def _accurate_residual(a: np.ndarray, v: np.ndarray, d: np.ndarray) -> np.ndarray:
    """
    AV + VA^T + D，每个元素正确舍入到 float64

    v 可以是扩展精度，拆成两个 float64 之和后逐项精确相乘，再用 fsum 求和。
    """
    v_hi = v.astype(float)
    v_lo = (v - v_hi).astype(float)
    pieces = []
    for part in (v_hi, v_lo):
        # 下标 (i, k, j): A[i,k] V[k,j] 与 V[i,k] A[j,k]
        pieces.extend(_two_product(a[:, :, None], part[None, :, :]))
        pieces.extend(_two_product(part[:, :, None], a.T[None, :, :]))
    terms = np.concatenate(pieces, axis=1)
    n = a.shape[0]
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = math.fsum(np.append(terms[i, :, j], d[i, j]))
    return out


def _kron_generator(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    work = a.astype(WORK_DTYPE)
    eye = np.eye(n, dtype=WORK_DTYPE)
    # 行优先展开: vec(AV) = (A⊗I)vec(V), vec(VA^T) = (I⊗A)vec(V)
    return np.kron(work, eye) + np.kron(eye, work)


def solve_lyapunov(a, d, check_stability: bool = True) -> np.ndarray:
    """
    求解 Lyapunov 方程 A V + V A^T = -D

    Args:
        a: n x n 漂移矩阵，n <= 6
        d: n x n 对称半正定扩散矩阵
        check_stability: 求解前是否验证 Hurwitz 稳定性

    Returns:
        对称解 V
    """
    a = as_matrix(a)
    d = as_matrix(d)
    if a.shape != d.shape:
        raise ValueError(f"A {a.shape} 与 D {d.shape} 尺寸不一致")
    n = a.shape[0]
    if n > MAX_POLY_DIM:
        raise ValueError(f"Lyapunov 求解只支持 n <= {MAX_POLY_DIM}")
    if np.max(np.abs(d - d.T)) > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(d)))):
        raise ValueError("扩散矩阵 D 不对称")
    if check_stability and not is_hurwitz(a):
        raise NotHurwitz("漂移矩阵存在非负实部特征值，稳态不存在")

    # 残差逐元素精确求和后做迭代修正
    vec_v = lu_solve(
        _kron_generator(a),
        -d.astype(WORK_DTYPE).reshape(-1),
        residual=lambda x: -_accurate_residual(a, x.reshape(n, n), d).reshape(-1),
        refine=LYAPUNOV_REFINEMENT,
    )
    v = vec_v.reshape(n, n)
    v = (v + v.T) / 2

    residual = lyapunov_residual(a, v, d)
    if residual > LYAPUNOV_RTOL:
        logger.warning("Lyapunov 残差 %.3e 超过 %.0e", residual, LYAPUNOV_RTOL)
    else:
        logger.debug("Lyapunov 残差 %.3e", residual)
    return v


def _affine_power(phi: np.ndarray, psi: np.ndarray, steps: int) -> Tuple[np.ndarray, np.ndarray]:
    """把仿射映射 v -> phi v + psi 复合 steps 次（二进制幂）"""
    result_phi = np.eye(phi.shape[0], dtype=phi.dtype)
    result_psi = np.zeros_like(psi)
    while steps:
        if steps & 1:
            result_phi, result_psi = phi @ result_phi, phi @ result_psi + psi
        steps >>= 1
        if steps:
            phi, psi = phi @ phi, phi @ psi + psi
    return result_phi, result_psi


def integrate_lyapunov_ode(a, d, t_final: float, dt: Optional[float] = None) -> np.ndarray:
    """
    用定步长四阶 Runge-Kutta 积分 dV/dt = AV + VA^T + D，V(0) = 0

    方程是线性的，单步 RK4 是仿射映射 v -> Φv + ψ，
    N 步通过对该映射做二进制幂得到，与逐步迭代是同一个 RK4 序列。

    Args:
        a: n x n 漂移矩阵
        d: n x n 扩散矩阵
        t_final: 积分终止时间
        dt: 步长，默认 0.01 / max|A|

    Returns:
        V(t_final)
    """
    a = as_matrix(a)
    d = as_matrix(d)
    if a.shape != d.shape:
        raise ValueError(f"A {a.shape} 与 D {d.shape} 尺寸不一致")
    n = a.shape[0]
    if n > MAX_POLY_DIM:
        raise ValueError(f"ODE 校验只支持 n <= {MAX_POLY_DIM}")
    if t_final <= 0:
        raise ValueError("t_final 必须为正")
    if dt is None:
        scale = float(np.max(np.abs(a)))
        dt = 0.01 / scale if scale > 0 else t_final
    if dt <= 0:
        raise ValueError("dt 必须为正")

    steps = max(1, math.ceil(t_final / dt - 1e-9))
    h = WORK_DTYPE(t_final) / steps
    eye = np.eye(n * n, dtype=WORK_DTYPE)
    gen = h * _kron_generator(a)
    gen2 = gen @ gen
    gen3 = gen2 @ gen
    phi = eye + gen + gen2 / 2 + gen3 / 6 + (gen3 @ gen) / 24
    psi = h * ((eye + gen / 2 + gen2 / 6 + gen3 / 24) @ d.astype(WORK_DTYPE).reshape(-1))

    logger.debug("RK4 积分 %d 步, h=%.3e", steps, float(h))
    with np.errstate(over="ignore", invalid="ignore"):
        _, vec_v = _affine_power(phi, psi, steps)
        v = vec_v.astype(float).reshape(n, n)
    if not np.all(np.isfinite(v)):
        raise NonFinite(f"RK4 积分在 t={t_final:g} 处发散")
    return v
