"""
标量振幅模块

三种方式计算双伴随 φ³ 振幅：对三角剖分的精确 Feynman 求和、对散射方程解的
CHY 求和，以及一般双形式振幅 A(Ω|Ω′)；另含 Parke–Taylor 因子与偏振幅
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from structlog import get_logger

from chylab.combinatorics import (
    Triangulation,
    check_permutation,
    compatible_trees,
    enumerate_triangulations,
)
from chylab.core.exceptions import (
    ConvergenceError,
    IncompleteSolutionError,
    InvalidInputError,
    PoleError,
)
from chylab.kinematics import PlanarPoint, Scalar, random_planar, s_from_x, x_from_s
from chylab.moduli import ModuliPoint, canonical_form_coefficient, finite_frame
from chylab.solver import (
    SolutionSet,
    SolverConfig,
    reduced_determinant,
    reduced_determinant_finite,
    solve_all,
)

logger = get_logger()


@dataclass(frozen=True)
class ChartForm:
    """σ 坐标卡中的顶形式 h(σ) dσ₃∧⋯∧dσ_{n-1}

    Attributes:
        n (int): 标记点个数
        coefficient (Callable[[ModuliPoint], complex]): 系数 h(σ)
        name (str): 便于日志与报告的名字
    """

    n: int
    coefficient: Callable[[ModuliPoint], complex]
    name: str = "form"

    def __call__(self, p: ModuliPoint) -> complex:
        return self.coefficient(p)

    @classmethod
    def canonical(cls, n: int) -> "ChartForm":
        """正区域的典范形式 Ω₀,ₙ"""
        return cls(n, canonical_form_coefficient, "canonical")

    @classmethod
    def parke_taylor(cls, alpha: Sequence[int]) -> "ChartForm":
        """以 PT(α) 为系数的形式"""
        alpha = check_permutation(alpha)
        return cls(len(alpha), lambda p: pt_factor(p, alpha).value, f"PT{list(alpha)}")

    def scaled(self, factor: complex) -> "ChartForm":
        return ChartForm(self.n, lambda p: factor * self.coefficient(p), f"{factor}*{self.name}")

    def __add__(self, other: "ChartForm") -> "ChartForm":
        if other.n != self.n:
            raise InvalidInputError("forms live on different moduli spaces")
        return ChartForm(
            self.n, lambda p: self.coefficient(p) + other.coefficient(p), f"{self.name}+{other.name}"
        )


@dataclass(frozen=True)
class PTValue:
    """单独求值的 PT 因子：有限部分与略去的 ∞ 因子个数"""

    value: complex
    omitted: int


def _tree_term(p: PlanarPoint, t: Triangulation) -> Scalar:
    product: Scalar = Fraction(1) if _exact(p) else 1.0
    for d in t.diagonals:
        x = p.X[d]
        if x == 0:
            raise PoleError(f"pole on the facet X_{d.i}{d.j} = 0", extra={"diagonal": d.key()})
        product = product / x
    return product


def _exact(p: PlanarPoint) -> bool:
    return all(isinstance(x, (int, Fraction)) for x in p.X.values())


def _sum_trees(p: PlanarPoint, trees: Sequence[Triangulation]) -> Scalar:
    total: Scalar = Fraction(0) if _exact(p) else 0.0
    for t in trees:
        total = total + _tree_term(p, t)
    return total


def feynman_phi3(p: PlanarPoint) -> Scalar:
    """Σ_T ∏_{(ij)∈T} 1/X_ij；整数或有理输入时精确求和

    Raises:
        PoleError: 某个三角剖分含 X_ij = 0
    """
    return _sum_trees(p, enumerate_triangulations(p.n))


def partial_feynman(p: PlanarPoint, alpha: Sequence[int]) -> Scalar:
    """只对与 alpha 兼容的三角剖分求和

    Raises:
        InvalidInputError: alpha 不是 1..n 的排列
        PoleError: 某个兼容三角剖分含 X_ij = 0
    """
    alpha = check_permutation(alpha, p.n)
    return _sum_trees(p, compatible_trees(alpha))


def pt_factor(p: ModuliPoint, alpha: Sequence[int]) -> PTValue:
    """PT(α) = 1/((α₁α₂)(α₂α₃)⋯(αₙα₁))，子式取齐次约定

    含 σₙ = ∞ 的两个因子按 (a n) = 1、(n a) = -1 计入，omitted 记为 2；
    振幅层面两个 PT 因子与 det′Φ 中的 ∞ 因子正好相消

    Raises:
        InvalidInputError: alpha 不是排列
        PoleError: 相邻标记点重合
    """
    alpha = check_permutation(alpha, p.n)
    n = p.n
    denominator = 1.0 + 0j
    omitted = 0
    for k in range(n):
        a, b = alpha[k], alpha[(k + 1) % n]
        if n in (a, b):
            omitted += 1
        denominator *= p.minor(a, b)
    if denominator == 0:
        raise PoleError(f"PT{list(alpha)} has a pole at this point")
    return PTValue(1.0 / denominator, omitted)


def _require_complete(sols: SolutionSet) -> None:
    if not sols.complete:
        raise IncompleteSolutionError(
            "refusing to sum over an incomplete solution set",
            found=len(sols.solutions),
            expected=sols.expected,
        )


def general_amplitude(
    sols: SolutionSet, omega: ChartForm, omega_prime: ChartForm
) -> complex:
    """A(Ω|Ω′) = Σ_解 h(σ) r(σ) / det Φ_chart

    Args:
        sols: 完整解集
        omega: 第一个形式（σ 卡系数）
        omega_prime: 第二个形式（σ 卡系数）

    Raises:
        IncompleteSolutionError: 解集不完整
        PoleError: 某个形式在解处有极点
        InvalidInputError: 形式与运动学的 n 不一致
    """
    _require_complete(sols)
    m = sols.kinematics
    if omega.n != m.n or omega_prime.n != m.n:
        raise InvalidInputError("forms and kinematics disagree on n")
    total = 0j
    for p in sols.solutions:
        h, r = omega(p), omega_prime(p)
        if not (np.isfinite(h) and np.isfinite(r)):
            raise PoleError(f"form has a pole at solution {p.sigma.tolist()}")
        total += h * r / reduced_determinant(p, m)
    return complex(total)


def chy_partial(sols: SolutionSet, alpha: Sequence[int], beta: Sequence[int]) -> complex:
    """Σ_解 PT(α)PT(β)/det′Φ

    Raises:
        IncompleteSolutionError: 解集不完整
    """
    n = sols.n
    return general_amplitude(
        sols,
        ChartForm.parke_taylor(check_permutation(alpha, n)),
        ChartForm.parke_taylor(check_permutation(beta, n)),
    )


def chy_scalar(sols: SolutionSet) -> complex:
    """Σ_解 PT(1⋯n)²/det′Φ

    Raises:
        IncompleteSolutionError: 解集不完整
    """
    identity = list(range(1, sols.n + 1))
    return chy_partial(sols, identity, identity)


def pt_cyclic_sum(sols: SolutionSet, alpha: Sequence[int]) -> complex:
    """U(1) 解耦型求和 Σ_k A(α | 2,…,k,1,k+1,…,n)，应为零"""
    n = sols.n
    rest = list(range(2, n + 1))
    total = 0j
    for k in range(1, n):
        beta = rest[:k] + [1] + rest[k:]
        total += chy_partial(sols, alpha, beta)
    return total


def chy_sign(
    n: int,
    trials: int = 5,
    seed: int = 0,
    cfg: SolverConfig | None = None,
    *,
    rtol: float = 1e-8,
) -> int:
    """经验确定 CHY 与 Feynman 求和之间的全局符号

    Raises:
        ConvergenceError: 比值不是 ±1，或不同试验给出不同符号
    """
    rng = np.random.default_rng(seed)
    signs: set[int] = set()
    for trial in range(trials):
        planar = random_planar(n, rng, generic=True)
        feynman = float(feynman_phi3(planar))
        sols = solve_all(s_from_x(planar), cfg)
        ratio = chy_scalar(sols) / feynman
        if abs(abs(ratio) - 1.0) > rtol or abs(ratio.imag) > rtol:
            raise ConvergenceError(
                f"CHY/Feynman ratio {ratio} is not ±1", extra={"n": n, "trial": trial}
            )
        signs.add(1 if ratio.real > 0 else -1)
    if len(signs) != 1:
        raise ConvergenceError("CHY sign differs between kinematic points", extra={"n": n})
    sign = signs.pop()
    logger.info("CHY sign determined", n=n, sign=sign, trials=trials)
    return sign


def signed_deviation(chy: complex, feynman: Scalar, scale: float) -> tuple[int, float]:
    """(符号, 相对偏差)：符号取使 |chy - 符号·feynman| 最小者

    feynman 为零（没有兼容的三角剖分）时符号记为 0，偏差为 |chy|/scale
    """
    value = float(feynman)
    scale = max(scale, 1e-300)
    if value == 0:
        return 0, abs(chy) / scale
    plus, minus = abs(chy - value), abs(chy + value)
    return (1, plus / scale) if plus <= minus else (-1, minus / scale)


def compare(sols: SolutionSet) -> tuple[complex, Scalar, float]:
    """(CHY 值, Feynman 值, |CHY ∓ Feynman| 的最小相对偏差)"""
    chy = chy_scalar(sols)
    feynman = feynman_phi3(x_from_s(sols.kinematics))
    _, deviation = signed_deviation(chy, feynman, abs(float(feynman)))
    return chy, feynman, deviation


def chy_scalar_finite(
    sols: SolutionSet,
    pole: complex = -0.5 + 0.75j,
    rows: Sequence[int] = (1, 2, 3),
    cols: Sequence[int] = (1, 2, 3),
) -> complex:
    """在有限坐标架 z = 1/(σ - pole) 中以任意删除选择计算 CHY 求和

    与 chy_scalar 一致即验证了 det′Φ 与删除选择、Möbius 坐标架无关

    Raises:
        IncompleteSolutionError: 解集不完整
        PoleError: pole 与某个标记点重合
    """
    _require_complete(sols)
    s = np.asarray(sols.kinematics.as_array(), dtype=complex)
    total = 0j
    for p in sols.solutions:
        z = finite_frame(p, pole)
        pt = 1.0 / np.prod(np.roll(z, -1) - z)
        total += pt**2 / reduced_determinant_finite(z, s, rows, cols)
    return complex(total)
