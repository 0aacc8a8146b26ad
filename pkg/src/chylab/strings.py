"""
弦积分模块

Beta 函数四点振幅、低维自适应求积的弦积分 I(τ, c)、收敛判据与 α′ → 0 的
场论极限外推

每个坐标轴用 y = (v/(1-v))^{1/α′} 压缩到 (0, 1)，此时 (α′)^d ∏ dy/y = ∏ dv/(v(1-v))，
被积函数在对数空间求值：log f = Σ τ_i w_i - α′ Σ c_j log p_j(y) - Σ log(v_i(1-v_i))，
其中 w = log(v/(1-v))，端点奇性的指数与 α′ 无关
"""

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import gammaln, gammasgn, logit, logsumexp
from structlog import get_logger

from chylab.core.config import get_settings
from chylab.core.exceptions import (
    DivergentIntegralError,
    InvalidInputError,
    PoleError,
    UnsupportedError,
)
from chylab.kinematics import PlanarPoint
from chylab.tropical import Potential, m0n_potential, positivity_check

logger = get_logger()

DEFAULT_SCHEDULE: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025, 0.0125)
MAX_DIMENSION = 3


@dataclass(frozen=True)
class StringyIntegrand:
    """I(τ, c) = (α′)^d ∫_{y>0} ∏ y^{α′τ} ∏ p_j^{-α′c_j} ∏ dy/y

    Attributes:
        potential (Potential): y 卡数据 (τ, p_j, c_j)，多项式系数全为 1
        alpha_prime (float): α′ > 0
        source (PlanarPoint | None): 来自 M₀,ₙ 时的平面坐标，用于正性判定
    """

    potential: Potential
    alpha_prime: float
    source: PlanarPoint | None = None

    def __post_init__(self) -> None:
        if not self.alpha_prime > 0:
            raise InvalidInputError("alpha_prime must be positive", field="alpha")

    @property
    def dim(self) -> int:
        return self.potential.dim

    def with_alpha(self, alpha_prime: float) -> "StringyIntegrand":
        return StringyIntegrand(self.potential, alpha_prime, self.source)

    def converges(self) -> bool:
        """收敛当且仅当热带势处处为正"""
        if self.source is not None:
            return positivity_check(self.source)
        return positivity_check(self.potential)

    def log_value(self, v: Sequence[float]) -> float:
        """压缩坐标 v ∈ (0,1)^d 处的对数被积函数"""
        pot = self.potential
        v_arr = np.asarray(v, dtype=float)
        w = logit(v_arr)
        log_y = w / self.alpha_prime
        total = float(np.dot([float(t) for t in pot.tau], w))
        total -= float(np.sum(np.log(v_arr) + np.log1p(-v_arr)))
        for poly, cj in zip(pot.polynomials, pot.c):
            exponents = np.asarray(poly, dtype=float) @ log_y
            total -= self.alpha_prime * float(cj) * float(logsumexp(exponents))
        return total

    def __call__(self, *v: float) -> float:
        if any(x <= 0.0 or x >= 1.0 for x in v):
            return 0.0
        return float(np.exp(self.log_value(v)))


@dataclass
class StringyResult:
    """求积结果"""

    value: float
    error: float
    low_accuracy: bool
    alpha_prime: float


@dataclass
class FieldTheoryLimit:
    """α′ → 0 外推结果

    Attributes:
        value (float): 外推值
        schedule (list[float]): α′ 网格
        values (list[float]): 网格上的积分值
        tableau (list[float]): 逐阶外推得到的 0 点估计
        monotone (bool): 逐阶估计的变化量是否单调减小
    """

    value: float
    schedule: list[float]
    values: list[float]
    tableau: list[float] = field(default_factory=list)
    monotone: bool = True


def beta_function(s: float, t: float) -> float:
    """B(s, t) = Γ(s)Γ(t)/Γ(s+t)，经 log-Gamma 计算

    Raises:
        PoleError: s 或 t 为非正整数
    """
    for value in (s, t):
        if value <= 0 and float(value).is_integer():
            raise PoleError(f"Beta function has a pole at argument {value}")
    total = s + t
    if total <= 0 and float(total).is_integer():
        return 0.0
    sign = gammasgn(s) * gammasgn(t) * gammasgn(total)
    return float(sign * np.exp(gammaln(s) + gammaln(t) - gammaln(total)))


def four_point_integrand(s: float, t: float, alpha_prime: float) -> StringyIntegrand:
    """I₄ 的数据：τ = s，p = 1 + y，c = s + t"""
    return StringyIntegrand(Potential((s,), (((0,), (1,)),), (s + t,)), alpha_prime)


def m0n_integrand(x: PlanarPoint, alpha_prime: float) -> StringyIntegrand:
    """M₀,ₙ 弦积分 ∫ ∏ u_ij^{α′X_ij} Ω₀,ₙ 在 y 卡中的数据"""
    return StringyIntegrand(m0n_potential(x), alpha_prime, x)


def stringy_integral(
    f: StringyIntegrand, *, epsrel: float | None = None, limit: int = 200
) -> StringyResult:
    """自适应 Gauss–Kronrod 求积（d ≤ 3）

    Args:
        f: 被积数据
        epsrel: 相对误差目标，默认取配置 quad_epsrel
        limit: 每个轴的最大子区间数

    Returns:
        StringyResult: 误差估计超过阈值时 low_accuracy 为 True

    Raises:
        DivergentIntegralError: 热带势不处处为正
        UnsupportedError: d > 3
    """
    if f.dim > MAX_DIMENSION:
        raise UnsupportedError(f"quadrature is limited to d <= {MAX_DIMENSION}, got d={f.dim}")
    if not f.converges():
        raise DivergentIntegralError(
            "stringy integral diverges: tropical potential is not positive",
            extra={"d": f.dim},
        )
    epsrel = epsrel if epsrel is not None else get_settings().quad_epsrel
    # p_j 在 v = 1/2 附近随 α′ → 0 变陡，把它作为断点
    if f.dim == 1:
        value, error = integrate.quad(f, 0.0, 1.0, epsrel=epsrel, epsabs=0.0, limit=limit, points=[0.5])
    else:
        opts = {"epsrel": epsrel, "epsabs": 0.0, "limit": limit, "points": [0.5]}
        value, error = integrate.nquad(f, [(0.0, 1.0)] * f.dim, opts=[opts] * f.dim)
    threshold = max(1e-6 * abs(value), 1e-12)
    low = bool(error > threshold)
    if low:
        logger.warning(
            "Quadrature error above threshold", d=f.dim, alpha_prime=f.alpha_prime, error=error
        )
    return StringyResult(float(value), float(error), low, f.alpha_prime)


def string_4pt(s: float, t: float, alpha_prime: float, **kwargs: float) -> StringyResult:
    """α′ ∫₀¹ du/(u(1-u)) u^{α′s}(1-u)^{α′t} 的数值求积

    Raises:
        DivergentIntegralError: s 或 t 非正
    """
    if s <= 0 or t <= 0:
        raise DivergentIntegralError("four-point string integral needs s > 0 and t > 0")
    return stringy_integral(four_point_integrand(s, t, alpha_prime), **kwargs)  # type: ignore[arg-type]


def string_4pt_closed(s: float, t: float, alpha_prime: float) -> float:
    """闭式 α′B(α′s, α′t)"""
    return alpha_prime * beta_function(alpha_prime * s, alpha_prime * t)


def stringy_series(
    f: StringyIntegrand, schedule: Sequence[float] = DEFAULT_SCHEDULE, **kwargs: float
) -> list[StringyResult]:
    """沿 α′ 网格依次求积"""
    return [stringy_integral(f.with_alpha(a), **kwargs) for a in schedule]  # type: ignore[arg-type]


def _neville_at_zero(xs: Sequence[float], ys: Sequence[float]) -> list[float]:
    """逐阶多项式外推到 0：返回使用前 1, 2, …, k 个点的估计"""
    table = list(ys)
    estimates = [table[0]]
    k = len(xs)
    # 第 level 轮后 table[i] 是点 i..i+level 的插值多项式在 0 处的值
    for level in range(1, k):
        for i in range(k - level):
            x_lo, x_hi = xs[i], xs[i + level]
            table[i] = (x_hi * table[i] - x_lo * table[i + 1]) / (x_hi - x_lo)
        estimates.append(table[0])
    return estimates


def ft_limit(
    family: StringyIntegrand | Callable[[float], float],
    schedule: Sequence[float] = DEFAULT_SCHEDULE,
    **kwargs: float,
) -> FieldTheoryLimit:
    """在 α′ 网格上求值并做 Richardson（Neville）外推到 α′ = 0

    Args:
        family: 弦积分数据（α′ 取网格值），或任意 α′ -> 值 的函数
        schedule: 递减的 α′ 网格

    Raises:
        InvalidInputError: 网格少于两点或不严格递减
    """
    schedule = [float(a) for a in schedule]
    if len(schedule) < 2 or any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise InvalidInputError("schedule must hold at least two decreasing alpha values")
    if isinstance(family, StringyIntegrand):
        values = [r.value for r in stringy_series(family, schedule, **kwargs)]
    else:
        values = [float(family(a)) for a in schedule]
    estimates = _neville_at_zero(schedule, values)
    changes = [abs(b - a) for a, b in zip(estimates, estimates[1:])]
    monotone = all(later <= earlier for earlier, later in zip(changes, changes[1:]))
    if not monotone:
        logger.warning("Non-monotone extrapolation", schedule=schedule, estimates=estimates)
    return FieldTheoryLimit(estimates[-1], schedule, values, estimates, monotone)
