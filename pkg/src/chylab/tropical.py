"""
热带几何模块

M₀,ₙ 的正热带扇、分段线性热带势、收敛（正性）判据与 Laplace 变换振幅

势函数统一写成 y 卡数据 φ = ∏ y^τ ∏ p_j^{-c_j}，其热带化为
trop φ(Y) = Σ τ_i Y_i - Σ c_j trop(p_j)(Y)，其中 trop(p)(Y) = min_m ⟨m, Y⟩
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import atan2, pi
from typing import Iterable, Sequence

import numpy as np
import sympy
from structlog import get_logger

from chylab.combinatorics import Diagonal, Subdivision, diagonals, enumerate_triangulations
from chylab.core.exceptions import DivergentIntegralError, InvalidInputError, UnsupportedError
from chylab.kinematics import MandelstamPoint, PlanarPoint, Scalar, x_from_s
from chylab.moduli import polynomial_keys, polynomial_monomials, u_monomial_exponents, u_to_yp_matrix

logger = get_logger()

Exponent = tuple[int, ...]


@dataclass(frozen=True)
class Potential:
    """y 卡中的势数据 φ = ∏ y_i^{τ_i} ∏ p_j(y)^{-c_j}

    Attributes:
        tau (tuple[Scalar, ...]): 单项式指数 τ
        polynomials (tuple[tuple[Exponent, ...], ...]): 每个 p_j 的单项式指数（系数取 1）
        c (tuple[Scalar, ...]): 每个 p_j 的指数 c_j
    """

    tau: tuple[Scalar, ...]
    polynomials: tuple[tuple[Exponent, ...], ...]
    c: tuple[Scalar, ...]

    def __post_init__(self) -> None:
        d = len(self.tau)
        if len(self.c) != len(self.polynomials):
            raise InvalidInputError("need one exponent c_j per polynomial")
        for poly in self.polynomials:
            if not poly or any(len(mono) != d for mono in poly):
                raise InvalidInputError(f"polynomial monomials must have {d} exponents")

    @property
    def dim(self) -> int:
        return len(self.tau)


@dataclass(frozen=True)
class TropicalFan:
    """trop_{≥0} M₀,ₙ：极大锥与三角剖分一一对应

    Attributes:
        n (int): 粒子数
        cones (tuple[tuple[Subdivision, tuple[Diagonal, ...]], ...]): (三角剖分, 射线标签)
        rays (dict[Diagonal, tuple[int, ...]]): 射线在 Y 坐标中的整数生成元
    """

    n: int
    cones: tuple[tuple[Subdivision, tuple[Diagonal, ...]], ...]
    rays: dict[Diagonal, tuple[int, ...]]

    @property
    def dim(self) -> int:
        return self.n - 3

    def u_space_ray(self, d: Diagonal) -> tuple[int, ...]:
        """射线在 U 坐标中的生成元：对偶于 X_d 的单位向量"""
        return tuple(int(e == d) for e in diagonals(self.n))

    def codimension_one_counts(self) -> dict[frozenset[Diagonal], int]:
        """每个余维 1 锥属于多少个极大锥"""
        counts: dict[frozenset[Diagonal], int] = {}
        for _, rays in self.cones:
            for drop in rays:
                face = frozenset(r for r in rays if r != drop)
                counts[face] = counts.get(face, 0) + 1
        return counts

    def is_unimodular(self) -> bool:
        """每个极大锥的射线生成元组成整数格的一组基"""
        for _, rays in self.cones:
            matrix = sympy.Matrix([list(self.rays[d]) for d in rays])
            if abs(matrix.det()) != 1:
                return False
        return True


def trop_polynomial(exponents: Iterable[Sequence[int]], y: Sequence[Scalar]) -> Scalar:
    """trop(p)(Y) = min_m ⟨m, Y⟩（系数忽略）

    Raises:
        InvalidInputError: 多项式为空或维数不符
    """
    monomials = [tuple(m) for m in exponents]
    if not monomials:
        raise InvalidInputError("empty polynomial has no tropicalization")
    if any(len(m) != len(y) for m in monomials):
        raise InvalidInputError("exponent and point dimensions differ")
    return min(sum((e * v for e, v in zip(m, y)), 0) for m in monomials)


def _dense(monomial: tuple[int, ...], d: int) -> Exponent:
    exp = [0] * d
    for k in monomial:
        exp[k - 1] += 1
    return tuple(exp)


def m0n_potential(x: PlanarPoint) -> Potential:
    """φ = ∏ u_ij^{X_ij} 写成 y 卡数据"""
    n = x.n
    d = n - 3
    keys = polynomial_keys(n)
    exps = u_monomial_exponents(n)
    tau: list[Scalar] = [0] * d
    c: dict[tuple[int, int], Scalar] = {k: 0 for k in keys}
    for diag, (y_exp, poly) in exps.items():
        value = x.X[diag]
        for k in range(d):
            tau[k] = tau[k] + int(y_exp[k]) * value
        for key, power in poly.items():
            c[key] = c[key] - power * value
    polys = tuple(tuple(_dense(m, d) for m in polynomial_monomials(a, b)) for a, b in keys)
    return Potential(tuple(tau), polys, tuple(c[k] for k in keys))


def _as_potential(data: Potential | PlanarPoint | MandelstamPoint) -> Potential:
    if isinstance(data, Potential):
        return data
    if isinstance(data, MandelstamPoint):
        return m0n_potential(x_from_s(data))
    return m0n_potential(data)


def trop_potential(
    data: Potential | PlanarPoint | MandelstamPoint, y: Sequence[Scalar], alpha_prime: Scalar = 1
) -> Scalar:
    """trop φ(Y) = α′(Σ τ_i Y_i - Σ c_j trop(p_j)(Y))

    Args:
        data: 一般势数据，或 M₀,ₙ 运动学（平面坐标或 Mandelstam）
        y: Y 坐标
        alpha_prime: 整体因子 α′

    Raises:
        InvalidInputError: 维数不符
    """
    pot = _as_potential(data)
    if len(y) != pot.dim:
        raise InvalidInputError(f"expected a point with {pot.dim} coordinates")
    value = sum((t * v for t, v in zip(pot.tau, y)), 0)
    for poly, cj in zip(pot.polynomials, pot.c):
        value = value - cj * trop_polynomial(poly, y)
    return alpha_prime * value


@lru_cache(maxsize=None)
def _ray_generators(n: int) -> tuple[tuple[Diagonal, tuple[int, ...]], ...]:
    # U = M·(Y, P) 在 u 与 (y, p) 之间整数可逆；U = e_d 时读出 Y
    matrix = u_to_yp_matrix(n)
    inverse = matrix.inv()
    d = n - 3
    keys = polynomial_keys(n)
    rays = []
    for idx, diag in enumerate(diagonals(n)):
        column = inverse[:, idx]
        y = tuple(int(column[k]) for k in range(d))
        p_values = [int(column[d + k]) for k in range(len(keys))]
        for (a, b), expected in zip(keys, p_values):
            actual = trop_polynomial([_dense(m, d) for m in polynomial_monomials(a, b)], y)
            if actual != expected:
                raise InvalidInputError(f"ray for {diag} is not on the positive tropical fan")
        rays.append((diag, y))
    return tuple(rays)


def ray_generators(n: int) -> dict[Diagonal, tuple[int, ...]]:
    """每条对角线的射线 r_ij（Y 坐标），满足 trop(u_kl)(r_ij) = δ"""
    return dict(_ray_generators(n))


def trop_fan(n: int) -> TropicalFan:
    """M₀,ₙ 的正热带扇

    Raises:
        InvalidInputError: n < 4
    """
    cones = tuple((t, t.ordered()) for t in enumerate_triangulations(n))
    fan = TropicalFan(n, cones, ray_generators(n))
    logger.debug("Tropical fan built", n=n, cones=len(cones))
    return fan


def ray_values(data: PlanarPoint | MandelstamPoint) -> dict[Diagonal, Scalar]:
    """热带势在每条射线上的值；对 M₀,ₙ 势恰为 X_ij"""
    x = x_from_s(data) if isinstance(data, MandelstamPoint) else data
    pot = m0n_potential(x)
    return {d: trop_potential(pot, ray) for d, ray in ray_generators(x.n).items()}


def _candidate_rays_2d(pot: Potential) -> list[tuple[float, float]]:
    directions: set[tuple[float, float]] = set()
    for poly in pot.polynomials:
        for a in range(len(poly)):
            for b in range(a + 1, len(poly)):
                dx, dy = poly[a][0] - poly[b][0], poly[a][1] - poly[b][1]
                if dx == 0 and dy == 0:
                    continue
                norm = float(np.hypot(dx, dy))
                for sign in (1, -1):
                    v = (-sign * dy / norm, sign * dx / norm)
                    # 只保留两项同时取到最小值的方向（即确为扇的射线）
                    values = [m[0] * v[0] + m[1] * v[1] for m in poly]
                    if abs(min(values) - values[a]) < 1e-12:
                        directions.add((round(v[0], 15), round(v[1], 15)))
    return sorted(directions, key=lambda v: atan2(v[1], v[0]))


def positivity_check(data: Potential | PlanarPoint | MandelstamPoint) -> bool:
    """trop φ 在 Rᵈ∖{0} 上是否处处为正（等价于弦积分收敛）

    M₀,ₙ 势直接在全部射线上求值；一般势只支持 d ≤ 2，
    d = 2 时按各 Newton 多边形的法扇射线逐个检查

    Raises:
        UnsupportedError: 一般势且 d > 2
    """
    if not isinstance(data, Potential):
        values = ray_values(data)
        return all(complex(v).real > 0 and complex(v).imag == 0 for v in values.values())
    pot = data
    if pot.dim == 1:
        return all(float(trop_potential(pot, (v,))) > 0 for v in (1, -1))
    if pot.dim != 2:
        raise UnsupportedError(
            f"positivity for general potentials is only implemented for d <= 2, got d={pot.dim}"
        )
    rays = _candidate_rays_2d(pot)
    if len(rays) < 3:
        return False
    angles = [atan2(v[1], v[0]) for v in rays]
    gaps = [angles[k + 1] - angles[k] for k in range(len(angles) - 1)]
    gaps.append(angles[0] + 2 * pi - angles[-1])
    if max(gaps) >= pi - 1e-12:
        return False
    return all(float(trop_potential(pot, v)) > 0 for v in rays)


def laplace_amplitude(data: PlanarPoint | MandelstamPoint) -> Scalar:
    """Σ_C ∫_C e^{-trop φ}：单模单纯锥的贡献为 ∏_{r∈C} 1/trop φ(r)

    Raises:
        DivergentIntegralError: 某个 X_ij ≤ 0
    """
    x = x_from_s(data) if isinstance(data, MandelstamPoint) else data
    values = ray_values(x)
    bad = [d.key() for d, v in values.items() if not (complex(v).imag == 0 and complex(v).real > 0)]
    if bad:
        raise DivergentIntegralError(
            "tropical potential is not positive", extra={"diagonals": bad}
        )
    exact = all(isinstance(v, (int, Fraction)) for v in values.values())
    total: Scalar = Fraction(0) if exact else 0.0
    for _, rays in trop_fan(x.n).cones:
        term: Scalar = Fraction(1) if exact else 1.0
        for d in rays:
            term = term / values[d]
        total = total + term
    return total
