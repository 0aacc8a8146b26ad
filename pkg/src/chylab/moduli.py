"""
模空间 M₀,ₙ 模块

σ 坐标卡（规范 σ₁=0, σ₂=1, σₙ=∞）与正坐标 y 卡中的点、交比、二面体坐标 u_ij、
u 方程残差、Koba–Nielsen 势及其梯度、坐标卡中的典范形式系数

所有涉及 σₙ = ∞ 的因子统一用齐次 2×2 子式处理：第 i 列取 (1, σ_i)，
第 n 列取 (0, 1)，于是 (ab) = σ_b - σ_a，(a n) = 1，(n a) = -1
"""

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np
import sympy
from structlog import get_logger

from chylab.combinatorics import Diagonal, check_polygon, crosses, diagonals
from chylab.core.exceptions import InvalidInputError, PoleError
from chylab.kinematics import MandelstamPoint, x_from_s

logger = get_logger()


@dataclass(frozen=True)
class ModuliPoint:
    """规范固定后的标记点构型 σ₃, …, σ_{n-1}

    Attributes:
        n (int): 标记点个数
        sigma (np.ndarray): 长度 n-3 的复数组
    """

    n: int
    sigma: np.ndarray

    @classmethod
    def of(cls, n: int, values: Iterable[complex], check: bool = True) -> "ModuliPoint":
        """构造并（可选）校验

        Raises:
            InvalidInputError: 个数不是 n-3，或标记点重合、落在 0/1
        """
        check_polygon(n)
        sigma = np.asarray(list(values), dtype=complex)
        if sigma.shape != (n - 3,):
            raise InvalidInputError(f"expected {n - 3} punctures, got {sigma.shape}")
        point = cls(n, sigma)
        if check:
            point.validate()
        return point

    def validate(self, tol: float = 1e-14) -> "ModuliPoint":
        finite = self.finite_positions()
        for a, b in combinations(range(len(finite)), 2):
            if abs(finite[a] - finite[b]) <= tol:
                raise InvalidInputError(f"coincident punctures {a + 1} and {b + 1}")
        return self

    def finite_positions(self) -> np.ndarray:
        """σ₁, …, σ_{n-1}（长度 n-1，首两项为 0 和 1）"""
        return np.concatenate(([0.0 + 0j, 1.0 + 0j], self.sigma))

    def minor(self, a: int, b: int) -> complex:
        """齐次子式 (ab)"""
        n = self.n
        if a == b:
            return 0j
        if b == n:
            return 1.0 + 0j
        if a == n:
            return -1.0 + 0j
        pos = self.finite_positions()
        return complex(pos[b - 1] - pos[a - 1])

    def minor_matrix(self) -> np.ndarray:
        """n×n 子式矩阵 M[a-1, b-1] = (ab)"""
        n = self.n
        pos = self.finite_positions()
        m = np.zeros((n, n), dtype=complex)
        m[: n - 1, : n - 1] = pos[None, :] - pos[:, None]
        m[: n - 1, n - 1] = 1.0
        m[n - 1, : n - 1] = -1.0
        return m


@dataclass(frozen=True)
class PositivePoint:
    """正坐标 y₁, …, y_{n-3} > 0

    Attributes:
        n (int): 标记点个数
        y (np.ndarray): 正实数组
    """

    n: int
    y: np.ndarray

    @classmethod
    def of(cls, n: int, values: Iterable[float]) -> "PositivePoint":
        """构造并校验正性

        Raises:
            InvalidInputError: 个数不对或存在非正分量
        """
        check_polygon(n)
        y = np.asarray(list(values), dtype=float)
        if y.shape != (n - 3,):
            raise InvalidInputError(f"expected {n - 3} positive coordinates, got {y.shape}")
        if np.any(y <= 0):
            raise InvalidInputError("positive coordinates must be > 0")
        return cls(n, y)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, spread: float = 2.0) -> "PositivePoint":
        """对数均匀分布的随机正点，y ∈ (e^{-spread}, e^{spread})"""
        return cls.of(n, np.exp(rng.uniform(-spread, spread, size=n - 3)))


@dataclass(frozen=True)
class DihedralVector:
    """二面体坐标 u_ij

    Attributes:
        n (int): 标记点个数
        u (Mapping[Diagonal, complex | float]): 对角线 -> u_ij
    """

    n: int
    u: Mapping[Diagonal, complex]

    def get(self, a: int, b: int) -> complex:
        return self.u[Diagonal(min(a, b), max(a, b))]

    def values(self) -> np.ndarray:
        return np.array([self.u[d] for d in diagonals(self.n)])


def _check_distinct(*indices: int) -> None:
    if len(set(indices)) != len(indices):
        raise InvalidInputError(f"cross-ratio indices must be distinct, got {indices}")


def cross_ratio_from_minors(minors: np.ndarray, i: int, j: int, k: int, l: int) -> complex:
    """由子式矩阵计算 [ij|kl] = (ik)(jl)/((il)(jk))"""
    _check_distinct(i, j, k, l)
    num = minors[i - 1, k - 1] * minors[j - 1, l - 1]
    den = minors[i - 1, l - 1] * minors[j - 1, k - 1]
    if den == 0:
        raise PoleError(f"cross ratio [{i}{j}|{k}{l}] has a vanishing denominator")
    return complex(num / den)


def cross_ratio(p: ModuliPoint, i: int, j: int, k: int, l: int) -> complex:
    """交比 [ij|kl] = (ik)(jl)/((il)(jk))

    Raises:
        InvalidInputError: 指标不互异
    """
    return cross_ratio_from_minors(p.minor_matrix(), i, j, k, l)


def _cyc(a: int, n: int) -> int:
    return (a - 1) % n + 1


def u_from_minors(minors: np.ndarray, n: int) -> DihedralVector:
    """由任意坐标架下的子式矩阵计算 u_ij = [i,i+1|j+1,j]"""
    values = {
        d: cross_ratio_from_minors(minors, d.i, _cyc(d.i + 1, n), _cyc(d.j + 1, n), d.j)
        for d in diagonals(n)
    }
    return DihedralVector(n, values)


def u_from_sigma(p: ModuliPoint) -> DihedralVector:
    """二面体坐标 u_ij = [i,i+1|j+1,j]（指标模 n）"""
    return u_from_minors(p.minor_matrix(), p.n)


def finite_frame(p: ModuliPoint, pole: complex) -> np.ndarray:
    """经 Möbius 变换 z = 1/(σ - pole) 把全部 n 个标记点移到有限位置

    σₙ = ∞ 映到 0；pole 必须不与任何标记点重合
    """
    pos = p.finite_positions()
    if np.any(np.abs(pos - pole) < 1e-12):
        raise PoleError("Möbius pole coincides with a puncture")
    return np.concatenate((1.0 / (pos - pole), [0.0 + 0j]))


def minors_from_positions(z: np.ndarray) -> np.ndarray:
    """全部有限标记点的子式矩阵 (ab) = z_b - z_a"""
    z = np.asarray(z, dtype=complex)
    return z[None, :] - z[:, None]


def sigma_from_y(p: PositivePoint) -> ModuliPoint:
    """σ_k = 1 + y₁ + y₁y₂ + … + y₁⋯y_{k-2}（k = 3..n-1）"""
    partial = np.cumprod(p.y)
    sigma = 1.0 + np.cumsum(partial)
    return ModuliPoint.of(p.n, sigma.astype(complex), check=False)


def y_from_sigma(p: ModuliPoint) -> np.ndarray:
    """σ 卡到 y 卡的逆变换：y₁ = σ₃ - 1，y_k = (σ_{k+2}-σ_{k+1})/(σ_{k+1}-σ_k)"""
    pos = p.finite_positions()
    gaps = np.diff(pos)[1:]
    return np.concatenate(([gaps[0]], gaps[1:] / gaps[:-1]))


def u_from_y(p: PositivePoint) -> DihedralVector:
    """u_from_sigma ∘ sigma_from_y"""
    return u_from_sigma(sigma_from_y(p))


def u_equation_residuals(u: DihedralVector) -> dict[Diagonal, complex]:
    """R_ij = u_ij + ∏_{(kl) 与 (ij) 交叉} u_kl - 1"""
    residuals: dict[Diagonal, complex] = {}
    diags = diagonals(u.n)
    for d in diags:
        product = 1.0
        for e in diags:
            if crosses(d, e):
                product = product * u.u[e]
        residuals[d] = u.u[d] + product - 1.0
    return residuals


def _check_intervals(parts: Sequence[Sequence[int]], n: int) -> list[list[int]]:
    blocks = [list(part) for part in parts]
    flat = [a for block in blocks for a in block]
    if any(not block for block in blocks) or sorted(flat) != list(range(1, n + 1)):
        raise InvalidInputError("A, B, C, D must partition 1..n into non-empty blocks")
    # 依次拼接后必须是 1..n 的一个循环平移
    start = flat[0]
    if flat != [_cyc(start + k, n) for k in range(n)]:
        raise InvalidInputError("A, B, C, D must be consecutive cyclic intervals")
    return blocks


def generalized_residual(
    u: DihedralVector,
    a: Sequence[int],
    b: Sequence[int],
    c: Sequence[int],
    d: Sequence[int],
) -> complex:
    """R_{A,B,C,D} = u_{A,C} + u_{B,D} - 1，其中 u_{A,C} = ∏_{a∈A, c∈C} u_ac

    Raises:
        InvalidInputError: A, B, C, D 不是依次相接的循环区间
    """
    blocks = _check_intervals((a, b, c, d), u.n)
    u_ac = np.prod([u.get(x, y) for x in blocks[0] for y in blocks[2]])
    u_bd = np.prod([u.get(x, y) for x in blocks[1] for y in blocks[3]])
    return complex(u_ac + u_bd - 1.0)


def _as_float_matrix(m: MandelstamPoint) -> np.ndarray:
    return np.asarray(m.as_array(), dtype=complex)


def log_potential(p: ModuliPoint, m: MandelstamPoint, route: str = "minors") -> complex:
    """Koba–Nielsen 势的对数（逐因子主值分支求和）

    route="minors"：Σ_{i<j<n} s_ij log(σ_j - σ_i)，σₙ 因子按规范略去
    route="dihedral"：Σ_ij X_{i+1,j+1} log u_ij；两条路径的实部严格相等

    Raises:
        InvalidInputError: route 未知
    """
    if route == "minors":
        s = _as_float_matrix(m)
        pos = p.finite_positions()
        total = 0j
        for i in range(p.n - 1):
            for j in range(i + 1, p.n - 1):
                if s[i, j] != 0:
                    total += s[i, j] * np.log(pos[j] - pos[i])
        return complex(total)
    if route == "dihedral":
        planar = x_from_s(m.as_float())
        u = u_from_sigma(p)
        return complex(
            sum(
                planar.value(d.i + 1, d.j + 1) * np.log(complex(u.u[d]))
                for d in diagonals(p.n)
            )
        )
    raise InvalidInputError(f"unknown route {route!r}", field="route")


def gradient_log_potential(p: ModuliPoint, m: MandelstamPoint) -> np.ndarray:
    """∂ log φ / ∂σ_k = Σ_{j<n, j≠k} s_kj/(σ_k - σ_j)，k = 3..n-1"""
    s = _as_float_matrix(m)
    pos = p.finite_positions()
    n = p.n
    grad = np.zeros(n - 3, dtype=complex)
    for k in range(2, n - 1):
        diff = pos[k] - pos[: n - 1]
        mask = np.arange(n - 1) != k
        if np.any(diff[mask] == 0):
            raise PoleError(f"puncture {k + 1} coincides with another puncture")
        grad[k - 2] = np.sum(s[k, : n - 1][mask] / diff[mask])
    return grad


def canonical_form_coefficient(p: ModuliPoint) -> complex:
    """σ 卡中 Ω₀,ₙ 的系数 1/(σ₂₃σ₃₄⋯σ_{n-2,n-1})

    Raises:
        PoleError: 相邻标记点重合
    """
    pos = p.finite_positions()
    gaps = np.diff(pos)[1:]
    if np.any(gaps == 0):
        raise PoleError("adjacent punctures coincide")
    return complex(1.0 / np.prod(gaps))


def canonical_form_coefficient_y(p: PositivePoint) -> float:
    """y 卡中 Ω₀,ₙ 的系数 1/(y₁⋯y_{n-3})"""
    return float(1.0 / np.prod(p.y))


def sigma_jacobian(p: PositivePoint) -> np.ndarray:
    """∂σ_k/∂y_m（行 k = 3..n-1，列 m = 1..n-3），下三角矩阵"""
    d = p.n - 3
    partial = np.cumprod(p.y)
    jac = np.zeros((d, d))
    for row in range(d):
        # σ_{row+3} = 1 + Σ_{r=1}^{row+1} y₁⋯y_r
        for col in range(row + 1):
            jac[row, col] = np.sum(partial[col : row + 1]) / p.y[col]
    return jac


def polynomial_monomials(a: int, b: int) -> list[tuple[int, ...]]:
    """p_ab(y) = 1 + y_a + y_a y_{a+1} + … + y_a⋯y_{b-2} 的单项式指数（下标从 1 起）

    返回的每个元组列出出现的 y 下标
    """
    return [tuple(range(a, r + 1)) for r in range(a - 1, b - 1)]


def polynomial_keys(n: int) -> list[tuple[int, int]]:
    """y 卡中出现的全部非平凡多项式 p_ab（1 ≤ a, a+2 ≤ b ≤ n-1），共 binom(n-2,2) 个"""
    return [(a, b) for a in range(1, n - 1) for b in range(a + 2, n)]


def minor_in_y(a: int, b: int, n: int) -> tuple[np.ndarray, tuple[int, int] | None, int]:
    """把子式 (ab) 写成 y 卡单项式乘多项式

    对 a < b < n：(ab) = y₁⋯y_{a-1} · p_ab；(a n) = 1

    Returns:
        (y 指数向量, 多项式键或 None, 符号)
    """
    sign = 1
    if a > b:
        a, b = b, a
        sign = -1
    y_exp = np.zeros(n - 3, dtype=int)
    if b == n:
        return y_exp, None, sign
    y_exp[: a - 1] = 1
    key = (a, b) if b - a >= 2 else None
    return y_exp, key, sign


def u_monomial_exponents(n: int) -> dict[Diagonal, tuple[np.ndarray, dict[tuple[int, int], int]]]:
    """u_ij(y) = ∏ y^τ ∏ p_ab^{e_ab} 的整数指数

    Returns:
        dict: 对角线 -> (y 指数向量, {多项式键: 指数})
    """
    check_polygon(n)
    result: dict[Diagonal, tuple[np.ndarray, dict[tuple[int, int], int]]] = {}
    for d in diagonals(n):
        i, j = d.i, d.j
        i1, j1 = _cyc(i + 1, n), _cyc(j + 1, n)
        factors = [((i, j1), 1), ((i1, j), 1), ((i, j), -1), ((i1, j1), -1)]
        y_exp = np.zeros(n - 3, dtype=int)
        poly: dict[tuple[int, int], int] = {}
        for (a, b), power in factors:
            exp, key, _ = minor_in_y(a, b, n)
            y_exp = y_exp + power * exp
            if key is not None:
                poly[key] = poly.get(key, 0) + power
        result[d] = (y_exp, {k: v for k, v in poly.items() if v != 0})
    return result


def u_to_yp_matrix(n: int) -> sympy.Matrix:
    """二面体坐标基 {u_ij} 到 {y_i, p_ab} 基的整数指数变换矩阵（方阵）

    第 r 行为第 r 条对角线 u 的指数，列依次为 y₁..y_{n-3} 与 polynomial_keys(n)
    """
    keys = polynomial_keys(n)
    rows = []
    for d, (y_exp, poly) in u_monomial_exponents(n).items():
        rows.append([int(v) for v in y_exp] + [poly.get(k, 0) for k in keys])
    return sympy.Matrix(rows)


def u_from_y_monomials(p: PositivePoint) -> DihedralVector:
    """用单项式指数直接计算 u(y)（与 u_from_y 互相校验）"""
    exps = u_monomial_exponents(p.n)
    values: dict[Diagonal, complex] = {}
    for d, (y_exp, poly) in exps.items():
        val = float(np.prod(p.y**y_exp))
        for (a, b), power in poly.items():
            pval = sum(
                float(np.prod(p.y[[k - 1 for k in mono]])) if mono else 1.0
                for mono in polynomial_monomials(a, b)
            )
            val *= pval**power
        values[d] = val
    return DihedralVector(p.n, values)

