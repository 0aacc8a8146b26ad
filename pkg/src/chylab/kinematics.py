"""
运动学空间模块

Kₙ 中的 Mandelstam 坐标 s_ij 与平面坐标 X_ij、两者互换、仿射子空间 H(c)、
可复现的随机运动学生成

标量支持两种模式：精确有理数（fractions.Fraction，组合振幅使用）与
双精度浮点（求解器使用），转换必须显式进行
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Any, Iterable, Mapping

import numpy as np
from structlog import get_logger

from chylab.combinatorics import (
    Diagonal,
    check_polygon,
    diagonals,
    enumerate_triangulations,
    rotate_diagonal,
)
from chylab.core.exceptions import GenerationError, InvalidInputError

logger = get_logger()

Scalar = Any  # Fraction | int | float | complex


def _is_diagonal(a: int, b: int, n: int) -> bool:
    i, j = min(a, b), max(a, b)
    return j - i not in (0, 1, n - 1)


@dataclass(frozen=True)
class MandelstamPoint:
    """Kₙ 中的点：对角为零、行和为零的对称矩阵 s

    Attributes:
        n (int): 粒子数
        s (np.ndarray): n×n 矩阵，精确模式下为 Fraction 的 object 数组
    """

    n: int
    s: np.ndarray

    def __post_init__(self) -> None:
        if self.s.shape != (self.n, self.n):
            raise InvalidInputError(f"s must be {self.n}x{self.n}, got {self.s.shape}")

    @classmethod
    def from_matrix(cls, matrix: Iterable[Iterable[Scalar]], exact: bool = True) -> "MandelstamPoint":
        """由嵌套列表构造；exact 时把整数与有理数转为 Fraction"""
        rows = [list(r) for r in matrix]
        n = len(rows)
        if exact and all(isinstance(x, (int, Fraction)) for r in rows for x in r):
            s = np.array([[Fraction(x) for x in r] for r in rows], dtype=object)
        else:
            s = np.array(rows, dtype=complex if _any_complex(rows) else float)
        return cls(n, s)

    @property
    def is_exact(self) -> bool:
        return self.s.dtype == object

    def get(self, i: int, j: int) -> Scalar:
        """1 起标号的 s_ij"""
        return self.s[i - 1, j - 1]

    def as_float(self) -> "MandelstamPoint":
        """转换为浮点模式"""
        if not self.is_exact:
            return self
        return MandelstamPoint(self.n, np.array(self.s, dtype=float))

    def as_array(self) -> np.ndarray:
        """浮点（或复数）numpy 数组"""
        if self.is_exact:
            return np.array(self.s, dtype=float)
        return self.s

    def validation_errors(self, tol: float = 1e-10) -> list[str]:
        """返回违反 Kₙ 不变量的描述列表（空列表表示合法）"""
        problems: list[str] = []
        if self.is_exact:
            diag_ok = all(self.s[i, i] == 0 for i in range(self.n))
            sym_ok = all(self.s[i, j] == self.s[j, i] for i in range(self.n) for j in range(self.n))
            rows_ok = all(sum(self.s[i, :]) == 0 for i in range(self.n))
        else:
            scale = max(1.0, float(np.max(np.abs(self.s))))
            diag_ok = bool(np.all(np.abs(np.diag(self.s)) <= tol * scale))
            sym_ok = bool(np.allclose(self.s, self.s.T, atol=tol * scale))
            rows_ok = bool(np.all(np.abs(self.s.sum(axis=1)) <= tol * scale))
        if not diag_ok:
            problems.append("nonzero diagonal")
        if not sym_ok:
            problems.append("not symmetric")
        if not rows_ok:
            problems.append("nonzero row sums")
        return problems

    def validate(self, tol: float = 1e-10) -> "MandelstamPoint":
        """校验不变量

        Raises:
            InvalidInputError: s 不在 Kₙ 中
        """
        problems = self.validation_errors(tol)
        if problems:
            raise InvalidInputError(f"invalid Mandelstam point: {', '.join(problems)}")
        return self

    def scaled(self, factor: Scalar) -> "MandelstamPoint":
        return MandelstamPoint(self.n, self.s * factor)


def _any_complex(rows: list[list[Any]]) -> bool:
    return any(isinstance(x, complex) for r in rows for x in r)


@dataclass(frozen=True)
class PlanarPoint:
    """平面坐标 X_ij（以对角线为指标，是 Kₙ* 的一组基）

    Attributes:
        n (int): 粒子数
        X (Mapping[Diagonal, Scalar]): 对角线 -> 取值
    """

    n: int
    X: Mapping[Diagonal, Scalar]

    @classmethod
    def from_pairs(cls, n: int, values: Mapping[Any, Scalar]) -> "PlanarPoint":
        """由 {(i,j) 或 "i,j": value} 构造，缺失的对角线报错

        Raises:
            InvalidInputError: 键不是对角线或缺失
        """
        parsed: dict[Diagonal, Scalar] = {}
        for key, value in values.items():
            if isinstance(key, Diagonal):
                d = key
            elif isinstance(key, str):
                a, b = (int(part) for part in key.split(","))
                d = Diagonal.of(a, b, n)
            else:
                d = Diagonal.of(key[0], key[1], n)
            parsed[d] = value
        missing = [d for d in diagonals(n) if d not in parsed]
        if missing:
            raise InvalidInputError(f"missing planar variables {missing}")
        return cls(n, parsed)

    @classmethod
    def constant(cls, n: int, value: Scalar) -> "PlanarPoint":
        return cls(n, {d: value for d in diagonals(n)})

    def value(self, a: int, b: int) -> Scalar:
        """循环指标约定下的 X_ab；非对角线（相等或相邻）返回 0"""
        a = (a - 1) % self.n + 1
        b = (b - 1) % self.n + 1
        if not _is_diagonal(a, b, self.n):
            return 0
        return self.X[Diagonal(min(a, b), max(a, b))]

    def items(self) -> list[tuple[Diagonal, Scalar]]:
        return sorted(self.X.items())


@dataclass(frozen=True)
class SubspaceSpec:
    """仿射子空间 H(c) 的常数 c_ij（1 ≤ i < j-1 < j ≤ n-1）

    Attributes:
        n (int): 粒子数
        c (Mapping[tuple[int, int], Scalar]): (i, j) -> c_ij
    """

    n: int
    c: Mapping[tuple[int, int], Scalar]

    @staticmethod
    def index_pairs(n: int) -> list[tuple[int, int]]:
        """H(c) 的指标集，共 binom(n-2, 2) 个"""
        return [(i, j) for i in range(1, n) for j in range(i + 2, n)]

    @classmethod
    def constant(cls, n: int, value: Scalar) -> "SubspaceSpec":
        return cls(n, {pair: value for pair in cls.index_pairs(n)})

    def __post_init__(self) -> None:
        if set(self.c) != set(self.index_pairs(self.n)):
            raise InvalidInputError(
                f"H(c) for n={self.n} needs exactly the pairs {self.index_pairs(self.n)}"
            )

    @property
    def is_positive(self) -> bool:
        return all(v > 0 for v in self.c.values())


def x_from_s(m: MandelstamPoint) -> PlanarPoint:
    """X_ij = Σ_{i ≤ a < b ≤ j-1} s_ab"""
    values: dict[Diagonal, Scalar] = {}
    for d in diagonals(m.n):
        total: Scalar = 0
        for a in range(d.i, d.j):
            for b in range(a + 1, d.j):
                total = total + m.get(a, b)
        values[d] = total
    return PlanarPoint(m.n, values)


def s_from_x(p: PlanarPoint) -> MandelstamPoint:
    """s_ij = X_{i,j+1} + X_{i+1,j} - X_ij - X_{i+1,j+1}（循环指标）"""
    n = p.n
    exact = all(isinstance(v, (int, Fraction)) for v in p.X.values())
    dtype: type = object
    if not exact:
        dtype = complex if any(isinstance(v, complex) for v in p.X.values()) else float
    s = np.zeros((n, n), dtype=dtype)
    if exact:
        s[:, :] = Fraction(0)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            value = p.value(i, j + 1) + p.value(i + 1, j) - p.value(i, j) - p.value(i + 1, j + 1)
            if exact:
                value = Fraction(value)
            s[i - 1, j - 1] = value
            s[j - 1, i - 1] = value
    return MandelstamPoint(n, s)


def _normalize_range(value_range: int | tuple[int, int]) -> tuple[int, int]:
    if isinstance(value_range, int):
        return -abs(value_range), abs(value_range)
    lo, hi = value_range
    if lo > hi:
        raise InvalidInputError(f"empty range {value_range}", field="range")
    return int(lo), int(hi)


def _draw_planar(
    n: int, rng: np.random.Generator, lo: int, hi: int, max_retries: int
) -> PlanarPoint:
    values: dict[Diagonal, Scalar] = {}
    for d in diagonals(n):
        for _ in range(max_retries):
            x = int(rng.integers(lo, hi + 1))
            if x != 0:
                values[d] = Fraction(x)
                break
        else:
            raise GenerationError(
                f"could not draw a nonzero X_{d.i}{d.j} in [{lo}, {hi}]",
                extra={"n": n, "range": [lo, hi]},
            )
    return PlanarPoint(n, values)


def random_planar(
    n: int,
    seed: int | np.random.Generator,
    value_range: int | tuple[int, int] = 10,
    *,
    generic: bool = False,
    max_retries: int = 100,
    max_draws: int = 1000,
) -> PlanarPoint:
    """在给定整数区间内均匀抽取非零整数 X_ij

    Args:
        n: 粒子数
        seed: 随机种子或已有的 numpy Generator
        value_range: 区间 [lo, hi]，整数 R 表示 [-R, R]
        generic: 为 True 时整点重抽，直到所有通道 s_A 非零（见 is_generic）
        max_retries: 每个坐标的最大重抽次数
        max_draws: generic 时整点的最大抽取次数

    Returns:
        PlanarPoint: 精确（Fraction）平面坐标

    Raises:
        GenerationError: 区间只含 0，或 max_draws 次内抽不到一般位置的点
    """
    check_polygon(n)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    lo, hi = _normalize_range(value_range)
    for draw in range(max_draws):
        point = _draw_planar(n, rng, lo, hi, max_retries)
        if not generic or is_generic(s_from_x(point)):
            if draw:
                logger.debug("Non-generic draws rejected", n=n, rejected=draw)
            return point
    raise GenerationError(
        f"no generic kinematics in {max_draws} draws from [{lo}, {hi}]",
        extra={"n": n, "range": [lo, hi]},
    )


def random_point(
    n: int,
    seed: int | np.random.Generator,
    value_range: int | tuple[int, int] = 10,
) -> MandelstamPoint:
    """可复现的一般位置随机整数运动学

    抽取非零整数 X_ij 再经 s_from_x 得到 s，动量守恒自动成立；
    任一 s_ij 或多粒子通道 s_A 为零的点整点重抽

    Raises:
        GenerationError: 区间过小
    """
    point = s_from_x(random_planar(n, seed, value_range, generic=True))
    logger.debug("Random kinematics drawn", n=n)
    return point


def random_positive_planar(
    n: int, seed: int | np.random.Generator, denominator: int = 1, high: int = 10
) -> PlanarPoint:
    """正有理平面坐标 X_ij = k / denominator，k ∈ [1, high]"""
    check_polygon(n)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return PlanarPoint(
        n,
        {
            d: Fraction(int(rng.integers(1, high + 1)), int(rng.integers(1, denominator + 1)))
            for d in diagonals(n)
        },
    )


def c_from_s(m: MandelstamPoint) -> SubspaceSpec:
    """c_ij = -s_ij，1 ≤ i < j-1 < j ≤ n-1"""
    return SubspaceSpec(m.n, {(i, j): -m.get(i, j) for (i, j) in SubspaceSpec.index_pairs(m.n)})


def subspace_affine_map(spec: SubspaceSpec) -> dict[Diagonal, tuple[list[Scalar], Scalar]]:
    """H(c) 上 X_ij 关于扇形坐标 t = (X₁₃, …, X_{1,n-1}) 的仿射表达式

    由 X_{i+1,j+1} = c_ij + X_{i,j+1} + X_{i+1,j} - X_ij 递推

    Returns:
        dict: 对角线 -> (系数向量 L_ij, 常数 K_ij)，X_ij = L_ij·t + K_ij
    """
    n = spec.n
    dim = n - 3
    zero: tuple[list[Scalar], Scalar] = ([0] * dim, 0)
    table: dict[tuple[int, int], tuple[list[Scalar], Scalar]] = {}

    def get(a: int, b: int) -> tuple[list[Scalar], Scalar]:
        if not _is_diagonal(a, b, n):
            return zero
        return table[(min(a, b), max(a, b))]

    for k in range(3, n):
        vec: list[Scalar] = [0] * dim
        vec[k - 3] = 1
        table[(1, k)] = (vec, 0)
    for a in range(2, n - 1):
        for b in range(a + 2, n + 1):
            up, diag_, left = get(a - 1, b), get(a - 1, b - 1), get(a, b - 1)
            coeff = [u + lf - dg for u, lf, dg in zip(up[0], left[0], diag_[0])]
            const = spec.c[(a - 1, b - 1)] + up[1] + left[1] - diag_[1]
            table[(a, b)] = (coeff, const)
    return {d: table[(d.i, d.j)] for d in diagonals(n)}


def planar_from_subspace(spec: SubspaceSpec, fan_values: Iterable[Scalar]) -> PlanarPoint:
    """由 H(c) 与扇形坐标取值还原全部 X_ij

    Raises:
        InvalidInputError: 扇形坐标个数不是 n-3
    """
    t = list(fan_values)
    if len(t) != spec.n - 3:
        raise InvalidInputError(f"expected {spec.n - 3} fan coordinates, got {len(t)}")
    affine = subspace_affine_map(spec)
    return PlanarPoint(
        spec.n,
        {d: sum((ci * ti for ci, ti in zip(coeff, t)), const) for d, (coeff, const) in affine.items()},
    )


def on_subspace(p: PlanarPoint, spec: SubspaceSpec, tol: float = 0.0) -> bool:
    """p 是否位于 H(c) 上（精确输入时 tol 取 0）"""
    c = c_from_s(s_from_x(p)).c
    return all(abs(c[key] - spec.c[key]) <= tol for key in spec.c)


def rotate(m: MandelstamPoint, shift: int) -> MandelstamPoint:
    """循环重标号 i -> i + shift：s'_{i+k, j+k} = s_ij"""
    n = m.n
    perm = [(i + shift) % n for i in range(n)]
    s = np.empty_like(m.s)
    for i in range(n):
        for j in range(n):
            s[perm[i], perm[j]] = m.s[i, j]
    return MandelstamPoint(n, s)


def planar_rotate(p: PlanarPoint, shift: int) -> PlanarPoint:
    """循环重标号 X'(d + shift) = X(d)"""
    return PlanarPoint(p.n, {rotate_diagonal(d, shift, p.n): v for d, v in p.X.items()})


def is_generic_planar(p: PlanarPoint) -> bool:
    """每个三角剖分的 ∏X 非零"""
    return all(
        all(p.X[d] != 0 for d in t.diagonals) for t in enumerate_triangulations(p.n)
    )


def channel(m: MandelstamPoint, subset: Iterable[int]) -> Scalar:
    """s_A = Σ_{a<b ∈ A} s_ab"""
    labels = sorted(set(subset))
    total: Scalar = 0
    for k, a in enumerate(labels):
        for b in labels[k + 1 :]:
            total = total + m.get(a, b)
    return total


def vanishing_channels(m: MandelstamPoint, tol: float = 0.0) -> list[tuple[int, ...]]:
    """取零的通道 A ⊂ {1..n-1}，2 ≤ |A| ≤ n-2

    s_A = s_{Ā}，含 n 的通道由补集代表，两粒子通道 s_ij 也在其中。
    精确输入且 tol = 0 时逐项精确比较；否则阈值为 tol·max(1, max|s|)
    """
    n = m.n
    threshold = 0.0
    if tol > 0:
        threshold = tol * max(1.0, float(np.max(np.abs(m.as_array()))))
    zero = []
    for size in range(2, n - 1):
        for subset in combinations(range(1, n), size):
            if abs(channel(m, subset)) <= threshold:
                zero.append(subset)
    return zero


def is_generic(m: MandelstamPoint, tol: float = 0.0) -> bool:
    """所有 s_ij 与多粒子通道 s_A 都不为零"""
    return not vanishing_channels(m, tol)
