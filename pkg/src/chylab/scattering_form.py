"""
散射形式模块

组合散射形式 Ψₙ = Σ_D sign(D) ⋀ dlog X_ij（只保存项与符号）、它在 H(c) 上的
拉回系数、散射映射 Φ(c): M₀,ₙ → H(c)，以及结合多面体像的采样检查
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy
from structlog import get_logger

from chylab.combinatorics import (
    Diagonal,
    Subdivision,
    Triangulation,
    diagonals,
    orientation_signs,
    permutation_parity,
    rotate_diagonal,
)
from chylab.core.exceptions import InvalidInputError, OrientationError
from chylab.kinematics import (
    MandelstamPoint,
    PlanarPoint,
    Scalar,
    SubspaceSpec,
    on_subspace,
    subspace_affine_map,
)
from chylab.moduli import ModuliPoint, PositivePoint, sigma_from_y

logger = get_logger()


@dataclass(frozen=True)
class FormTerm:
    """Ψₙ 的一项：sign · dlog X_{d₁} ∧ ⋯ ∧ dlog X_{d_{n-3}}

    Attributes:
        triangulation (Triangulation): 三角剖分 D
        sign (int): ±1
        ordering (tuple[Diagonal, ...]): 楔积中对角线的顺序（字典序）
    """

    triangulation: Triangulation
    sign: int
    ordering: tuple[Diagonal, ...]


def scattering_form_terms(n: int) -> list[FormTerm]:
    """每个三角剖分一项，符号由翻转图上的定向传播给出

    Raises:
        InvalidInputError: n < 4
        OrientationError: 符号传播矛盾
    """
    signs = orientation_signs(n)
    terms = [FormTerm(t, so.sign, so.ordering) for t, so in signs.items()]
    terms.sort(key=lambda term: term.triangulation.sort_key())
    return terms


def _substitution_determinants(n: int, spec: SubspaceSpec) -> dict[Triangulation, int]:
    affine = subspace_affine_map(spec)
    result: dict[Triangulation, int] = {}
    for term in scattering_form_terms(n):
        rows = [affine[d][0] for d in term.ordering]
        det = int(sympy.Matrix(rows).det())
        result[term.triangulation] = term.sign * det
    return result


def pullback_signs(spec: SubspaceSpec) -> dict[Triangulation, int]:
    """每项 sign(D) · det(∂X_D/∂t)；拉回与 D 无关时全部相同且为 ±1"""
    return _substitution_determinants(spec.n, spec)


def pullback_coefficient(spec: SubspaceSpec, point: PlanarPoint) -> Scalar:
    """Ψₙ 拉回到 H(c) 后 dX₁₃∧⋯∧dX_{1,n-1} 的系数（精确有理数）

    每项 ⋀ dX_d 在扇形坐标下化为 det(L_D) dⁿ⁻³t，于是系数为
    Σ_D sign(D) det(L_D) ∏_{d∈D} 1/X_d

    Args:
        spec: 子空间常数 c
        point: H(c) 上的点

    Raises:
        InvalidInputError: point 不在 H(c) 上，或 n 不一致
    """
    if point.n != spec.n:
        raise InvalidInputError("point and subspace disagree on n")
    if not on_subspace(point, spec):
        raise InvalidInputError("point is not on H(c)", field="X")
    dets = _substitution_determinants(spec.n, spec)
    exact = all(isinstance(x, (int, Fraction)) for x in point.X.values())
    total: Scalar = Fraction(0) if exact else 0.0
    for t, weight in dets.items():
        term: Scalar = Fraction(weight) if exact else float(weight)
        for d in t.diagonals:
            term = term / point.X[d]
        total = total + term
    return total


def _scattering_map(s: np.ndarray, p: ModuliPoint) -> PlanarPoint:
    n = p.n
    pos = p.finite_positions()

    def sig(i: int, j: int) -> complex:
        return pos[j - 1] - pos[i - 1]

    def ratio(i: int, j: int) -> complex:
        return s[i - 1, j - 1] / sig(i, j)

    values: dict[Diagonal, Scalar] = {}
    for d in diagonals(n):
        a, b = d.i, d.j
        total = 0j
        for i in range(1, a):
            for j in range(a + 1, min(b, n)):
                total += sig(a, j) * ratio(i, j)
        for i in range(a, b):
            for j in range(b, n):
                total += sig(i, b - 1) * ratio(i, j)
        for i in range(1, a):
            for j in range(b, n):
                total += sig(a, b - 1) * ratio(i, j)
        values[d] = complex(-total)
    return PlanarPoint(n, values)


def scattering_map(m: MandelstamPoint, p: ModuliPoint) -> PlanarPoint:
    """σₙ = ∞ 规范下的散射映射 X_ab(σ)

    X_ab = -Σ_{i<a<j<b} σ_aj s_ij/σ_ij - Σ_{a≤i<b≤j<n} σ_{i,b-1} s_ij/σ_ij
           - Σ_{i<a, b≤j<n} σ_{a,b-1} s_ij/σ_ij，其中 σ_ij = σ_j - σ_i

    只在散射方程的解处与 H(c) 的关系一致；函数本身对任意 σ 求值

    Raises:
        InvalidInputError: n 不一致
    """
    if m.n != p.n:
        raise InvalidInputError("kinematics and point disagree on n")
    return _scattering_map(np.asarray(m.as_array(), dtype=complex), p)


def _s_from_spec(spec: SubspaceSpec) -> np.ndarray:
    # 映射只用到 1 ≤ i < j-1 < j ≤ n-1 的 s_ij = -c_ij
    s = np.zeros((spec.n, spec.n), dtype=complex)
    for (i, j), value in spec.c.items():
        s[i - 1, j - 1] = s[j - 1, i - 1] = -float(value)
    return s


def scattering_map_from_spec(spec: SubspaceSpec, p: ModuliPoint) -> PlanarPoint:
    """以 H(c) 的常数给出的散射映射"""
    if spec.n != p.n:
        raise InvalidInputError("subspace and point disagree on n")
    return _scattering_map(_s_from_spec(spec), p)


@dataclass
class AssociahedronReport:
    """正区域像的采样报告"""

    n: int
    samples: int
    all_positive: bool
    min_value: float
    boundary_ok: bool
    failures: list[list[float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.all_positive and self.boundary_ok


def associahedron_check(
    spec: SubspaceSpec, samples: int = 100, seed: int = 0, *, boundary_y: float = 1e-9
) -> AssociahedronReport:
    """随机正点 y 的像是否全部落在 X_ij > 0 内，且 y_i → 0 时有 X → 0

    Raises:
        InvalidInputError: c 不全为正
    """
    if not spec.is_positive:
        raise InvalidInputError("associahedron check requires c > 0", field="c")
    n = spec.n
    rng = np.random.default_rng(seed)
    min_value = np.inf
    failures: list[list[float]] = []
    for _ in range(samples):
        y = PositivePoint.random(n, rng)
        image = scattering_map_from_spec(spec, sigma_from_y(y))
        vals = np.array([complex(v).real for v in image.X.values()])
        min_value = min(min_value, float(vals.min()))
        if np.any(vals <= 0):
            failures.append(y.y.tolist())

    scale = max(float(v) for v in spec.c.values())
    boundary_ok = True
    for k in range(n - 3):
        y = np.ones(n - 3)
        y[k] = boundary_y
        image = scattering_map_from_spec(spec, sigma_from_y(PositivePoint.of(n, y)))
        smallest = min(abs(complex(v)) for v in image.X.values())
        if smallest > 1e-6 * scale:
            boundary_ok = False
            logger.warning("Boundary not reached", n=n, coordinate=k + 1, smallest=smallest)
    report = AssociahedronReport(n, samples, not failures, float(min_value), boundary_ok, failures)
    logger.debug("Associahedron check", n=n, samples=samples, passed=report.passed)
    return report


def injectivity_spot_check(
    spec: SubspaceSpec, samples: int = 100, seed: int = 0, *, tol: float = 1e-9
) -> bool:
    """抽样检查没有两个相距较远的正点映到同一个 X"""
    n = spec.n
    rng = np.random.default_rng(seed)
    ys, xs = [], []
    for _ in range(samples):
        y = PositivePoint.random(n, rng)
        image = scattering_map_from_spec(spec, sigma_from_y(y))
        ys.append(np.log(y.y))
        xs.append(np.array([complex(v).real for _, v in image.items()]))
    for a in range(samples):
        for b in range(a + 1, samples):
            if np.max(np.abs(xs[a] - xs[b])) < tol and np.max(np.abs(ys[a] - ys[b])) > 1e-3:
                logger.warning("Scattering map collision", n=n, first=a, second=b)
                return False
    return True


def term_signs_cyclic_check(n: int, shift: int = 1) -> int:
    """循环重标号只把项置换，并整体乘以一个符号；返回该符号

    Raises:
        OrientationError: 不同项给出不同的相对符号
    """
    terms = {term.triangulation: term for term in scattering_form_terms(n)}
    ratios: set[int] = set()
    for t, term in terms.items():
        moved = [rotate_diagonal(d, shift, n) for d in term.ordering]
        image = terms[Subdivision(n, frozenset(moved))]
        carried = term.sign * permutation_parity(moved)
        ratios.add(carried * image.sign)
    if len(ratios) != 1:
        raise OrientationError("relabeling does not act by a global sign", extra={"n": n})
    return ratios.pop()


def relations_residual(p: PlanarPoint, spec: SubspaceSpec) -> float:
    """X 与 H(c) 关系的最大偏差（浮点）"""
    affine = subspace_affine_map(spec)
    t: Sequence[Scalar] = [p.X[Diagonal(1, k)] for k in range(3, spec.n)]
    worst = 0.0
    for d, (coeff, const) in affine.items():
        predicted = sum((complex(ci) * complex(ti) for ci, ti in zip(coeff, t)), complex(const))
        worst = max(worst, abs(predicted - complex(p.X[d])))
    return worst
