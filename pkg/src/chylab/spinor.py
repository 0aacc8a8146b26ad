"""
四维旋量运动学模块

旋量对 (λ, λ̃)、括号 ⟨ij⟩ 与 [ij]、由旋量得到的 Mandelstam、r(z) 映射、
散射方程解的扇区分类与 Euler 数计数、Veronese 映射、Parke–Taylor MHV 振幅及其恒等式
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import linalg
from structlog import get_logger

from chylab.combinatorics import check_permutation, check_polygon, eulerian_row
from chylab.core.config import get_settings
from chylab.core.exceptions import (
    ClassificationError,
    GenerationError,
    InvalidInputError,
    PoleError,
)
from chylab.kinematics import MandelstamPoint
from chylab.moduli import ModuliPoint
from chylab.solver import SolverConfig, solve_all

logger = get_logger()


@dataclass(frozen=True)
class SpinorPoint:
    """无质量四维运动学 p_i = λ_i λ̃_iᵀ

    Attributes:
        n (int): 粒子数
        lam (np.ndarray): 2×n 复数组 λ
        lam_tilde (np.ndarray): 2×n 复数组 λ̃，行空间与 λ 的行空间正交
    """

    n: int
    lam: np.ndarray
    lam_tilde: np.ndarray

    def __post_init__(self) -> None:
        if self.lam.shape != (2, self.n) or self.lam_tilde.shape != (2, self.n):
            raise InvalidInputError(f"spinors must be 2x{self.n} arrays")

    def momentum(self, i: int) -> np.ndarray:
        """p_i = λ_i λ̃_iᵀ（1 起标号）"""
        return np.outer(self.lam[:, i - 1], self.lam_tilde[:, i - 1])

    def conservation_residual(self) -> float:
        """‖Σ_i λ_i λ̃_iᵀ‖"""
        return float(np.max(np.abs(self.lam @ self.lam_tilde.T)))

    def rescaled(self, t: Sequence[complex]) -> "SpinorPoint":
        """小群变换 λ_i -> t_i λ_i，λ̃_i -> λ̃_i / t_i"""
        scale = np.asarray(t, dtype=complex)
        return SpinorPoint(self.n, self.lam * scale, self.lam_tilde / scale)


@dataclass(frozen=True)
class Sector:
    """扇区：τ(z) 的次数 d，τ̃(z) 的次数 d̃ = n-2-d"""

    n: int
    d: int

    def __post_init__(self) -> None:
        if not 1 <= self.d <= self.n - 3:
            raise InvalidInputError(f"sector degree must lie in 1..{self.n - 3}, got {self.d}")

    @property
    def d_tilde(self) -> int:
        return self.n - 2 - self.d


def _brackets(v: np.ndarray) -> np.ndarray:
    return np.outer(v[0], v[1]) - np.outer(v[1], v[0])


def random_spinors(
    n: int, seed: int | np.random.Generator, *, max_retries: int = 20, tol: float = 1e-8
) -> SpinorPoint:
    """λ 随机，λ̃ 的行取自 λ 行空间的正交补

    Raises:
        GenerationError: 多次重抽仍有括号为零
    """
    check_polygon(n)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    off = ~np.eye(n, dtype=bool)
    for attempt in range(max_retries):
        lam = rng.normal(size=(2, n)) + 1j * rng.normal(size=(2, n))
        complement = linalg.null_space(lam)
        coef = rng.normal(size=(2, n - 2)) + 1j * rng.normal(size=(2, n - 2))
        lam_tilde = coef @ complement.T
        angle, square = _brackets(lam), _brackets(lam_tilde)
        if np.min(np.abs(angle[off])) > tol and np.min(np.abs(square[off])) > tol:
            return SpinorPoint(n, lam, lam_tilde)
        logger.info("Degenerate spinor draw, resampling", n=n, attempt=attempt)
    raise GenerationError("could not draw generic spinors", extra={"n": n})


def brackets(p: SpinorPoint) -> tuple[np.ndarray, np.ndarray]:
    """(⟨ij⟩, [ij]) 两张反对称表，⟨ij⟩ = det(λ_i, λ_j)"""
    return _brackets(p.lam), _brackets(p.lam_tilde)


def s_from_spinors(p: SpinorPoint) -> MandelstamPoint:
    """s_ij = ⟨ij⟩[ij]"""
    angle, square = brackets(p)
    return MandelstamPoint(p.n, angle * square)


def gram_rank(m: MandelstamPoint, rtol: float = 1e-9) -> int:
    """s 矩阵（Gram 矩阵 2p_i·p_j）的数值秩；四维运动学至多为 4"""
    s = np.asarray(m.as_array(), dtype=complex)
    values = linalg.svdvals(s)
    if values[0] == 0:
        return 0
    return int(np.sum(values > rtol * values[0]))


def r_polynomial(p: SpinorPoint, sol: ModuliPoint) -> np.ndarray:
    """r(z) = Σ_{i<n} p_i ∏_{j<n, j≠i} (z - σ_j)

    σₙ = ∞ 规范下 pₙ 的项消失，次数为 n-2（首项系数为 -pₙ）

    Returns:
        np.ndarray: 形状 (n-1, 2, 2) 的升幂系数，coeffs[k] 为 z^k 的 2×2 系数
    """
    n = p.n
    if sol.n != n:
        raise InvalidInputError("spinors and solution disagree on n")
    pos = sol.finite_positions()
    coeffs = np.zeros((n - 1, 2, 2), dtype=complex)
    for i in range(n - 1):
        factor = P.polyfromroots(np.delete(pos, i))
        coeffs[: len(factor)] += factor[:, None, None] * p.momentum(i + 1)[None, :, :]
    return coeffs


def evaluate_r(coeffs: np.ndarray, z: complex) -> np.ndarray:
    """r(z) 的 2×2 值"""
    powers = z ** np.arange(coeffs.shape[0])
    return np.tensordot(powers, coeffs, axes=1)


def det_r_residual(p: SpinorPoint, sol: ModuliPoint, samples: int | None = None) -> float:
    """在 3(n-2) 个采样点上的 max|det r(z)| / max|r(z)|²"""
    coeffs = r_polynomial(p, sol)
    count = samples or 3 * (p.n - 2)
    radius = 1.0 + float(np.max(np.abs(sol.finite_positions())))
    worst = 0.0
    for k in range(count):
        z = radius * np.exp(2j * np.pi * (k + 0.37) / count)
        value = evaluate_r(coeffs, z)
        scale = max(float(np.max(np.abs(value))) ** 2, 1e-300)
        worst = max(worst, abs(np.linalg.det(value)) / scale)
    return worst


def sector_of_solution(
    p: SpinorPoint, sol: ModuliPoint, *, rank_tol: float | None = None
) -> Sector:
    """r(z) = τ(z) τ̃(z)ᵀ 中 τ 的最小次数 d

    在 z_k = R·ω_k 采样 r 的列方向 c(z_k)，解线性方程组
    τ₁(z_k) c₂(z_k) - τ₂(z_k) c₁(z_k) = 0，取首个有非平凡零空间的 d

    Raises:
        ClassificationError: 1..n-3 中没有次数满足秩判据
    """
    n = p.n
    tol = rank_tol if rank_tol is not None else get_settings().rank_tol
    coeffs = r_polynomial(p, sol)
    radius = 1.0 + float(np.max(np.abs(sol.finite_positions())))
    count = 4 * (n - 1)
    omegas = np.exp(2j * np.pi * (np.arange(count) + 0.29) / count)
    columns = []
    for w in omegas:
        value = evaluate_r(coeffs, radius * w)
        col = value[:, int(np.argmax(np.linalg.norm(value, axis=0)))]
        columns.append(col / np.linalg.norm(col))
    c = np.array(columns)
    for d in range(1, n - 2):
        basis = omegas[:, None] ** np.arange(d + 1)[None, :]
        system = np.hstack((c[:, 1:2] * basis, -c[:, 0:1] * basis))
        values = linalg.svdvals(system)
        if values[-1] < tol * values[0]:
            return Sector(n, d)
    raise ClassificationError(
        "no sector degree fits this solution", extra={"n": n, "sigma": sol.sigma.tolist()}
    )


@dataclass
class CensusReport:
    """扇区计数报告

    Attributes:
        n (int): 粒子数
        expected (list[int]): Euler 数 [E_{n-3,1}, …]
        counts (list[list[int]]): 每次试验各扇区的解数
        failures (int): 分类失败的解数
    """

    n: int
    expected: list[int]
    counts: list[list[int]] = field(default_factory=list)
    failures: int = 0
    total: int = 0

    @property
    def matches(self) -> bool:
        return bool(self.counts) and all(c == self.expected for c in self.counts)

    @property
    def failure_rate(self) -> float:
        return self.failures / self.total if self.total else 0.0


def sector_census(
    n: int, trials: int = 10, seed: int = 0, cfg: SolverConfig | None = None
) -> CensusReport:
    """对随机四维运动学的全部解做扇区分类并计数

    Raises:
        InvalidInputError: n 不在 4..7
    """
    if not 4 <= n <= 7:
        raise InvalidInputError(f"sector census supports 4 <= n <= 7, got {n}", field="n")
    rng = np.random.default_rng(seed)
    report = CensusReport(n, eulerian_row(n - 3))
    for trial in range(trials):
        point = random_spinors(n, rng)
        sols = solve_all(s_from_spinors(point), cfg)
        counts = [0] * (n - 3)
        for sol in sols.solutions:
            report.total += 1
            try:
                counts[sector_of_solution(point, sol).d - 1] += 1
            except ClassificationError:
                report.failures += 1
        report.counts.append(counts)
        logger.debug("Census trial", n=n, trial=trial, counts=counts)
    if report.failure_rate > 0.05:
        logger.warning("Non-generic kinematics in census", n=n, failure_rate=report.failure_rate)
    return report


def _parke_taylor(table: np.ndarray, n: int, ordering: Sequence[int], a: int, b: int) -> complex:
    alpha = check_permutation(ordering, n)
    if a == b:
        raise InvalidInputError("negative-helicity legs must differ")
    denominator = 1.0 + 0j
    for k in range(n):
        denominator *= table[alpha[k] - 1, alpha[(k + 1) % n] - 1]
    if denominator == 0:
        raise PoleError("vanishing bracket in the Parke-Taylor denominator")
    return complex(table[a - 1, b - 1] ** 4 / denominator)


def mhv_partial(p: SpinorPoint, ordering: Sequence[int], a: int, b: int) -> complex:
    """Parke–Taylor：⟨ab⟩⁴ / (⟨α₁α₂⟩⟨α₂α₃⟩⋯⟨αₙα₁⟩)

    Raises:
        InvalidInputError: a = b 或 ordering 不是排列
        PoleError: 分母中的括号为零
    """
    return _parke_taylor(_brackets(p.lam), p.n, ordering, a, b)


def anti_mhv_partial(p: SpinorPoint, ordering: Sequence[int], a: int, b: int) -> complex:
    """共轭形式：[ab]⁴ / ([α₁α₂][α₂α₃]⋯[αₙα₁])，a、b 为正螺旋度腿

    Raises:
        InvalidInputError: a = b 或 ordering 不是排列
        PoleError: 分母中的括号为零
    """
    return _parke_taylor(_brackets(p.lam_tilde), p.n, ordering, a, b)


def four_point_duality(p: SpinorPoint, a: int = 1, b: int = 2) -> float:
    """n = 4 时 ⟨ab⟩⁴/(⟨12⟩⟨23⟩⟨34⟩⟨41⟩) 与 [kl]⁴/([12][23][34][41]) 的相对偏差

    {k, l} 为 {a, b} 在 {1, 2, 3, 4} 中的补集；四点 MHV 与 anti-MHV 是同一个振幅
    """
    if p.n != 4:
        raise InvalidInputError("the four-point duality needs n = 4")
    k, l = sorted({1, 2, 3, 4} - {a, b})
    ordering = (1, 2, 3, 4)
    angle = mhv_partial(p, ordering, a, b)
    square = anti_mhv_partial(p, ordering, k, l)
    return abs(angle - square) / max(abs(angle), abs(square))


def u1_decoupling(p: SpinorPoint, a: int = 1, b: int = 2) -> float:
    """|Σ_k A(2,…,k,1,k+1,…,n)| 除以各项最大模"""
    rest = list(range(2, p.n + 1))
    terms = [mhv_partial(p, rest[:k] + [1] + rest[k:], a, b) for k in range(1, p.n)]
    return abs(sum(terms)) / max(abs(t) for t in terms)


def kk_identity_5pt(p: SpinorPoint, a: int = 1, b: int = 2) -> float:
    """A(1,2,5,3,4) - A(1,2,4,3,5) - A(1,4,2,3,5) - A(1,4,3,2,5) 的相对偏差"""
    if p.n != 5:
        raise InvalidInputError("the five-point identity needs n = 5")
    lhs = mhv_partial(p, (1, 2, 5, 3, 4), a, b)
    rhs = [mhv_partial(p, order, a, b) for order in ((1, 2, 4, 3, 5), (1, 4, 2, 3, 5), (1, 4, 3, 2, 5))]
    return abs(lhs - sum(rhs)) / max(abs(lhs), *(abs(r) for r in rhs))


def veronese(v: np.ndarray, k: int) -> np.ndarray:
    """2×n 到 k×n：第 r 行为 a^{k-1-r} b^r"""
    v = np.asarray(v)
    if v.ndim != 2 or v.shape[0] != 2 or k < 1:
        raise InvalidInputError("veronese expects a 2xn array and k >= 1")
    a, b = v[0], v[1]
    return np.array([a ** (k - 1 - r) * b**r for r in range(k)])


def veronese_orthogonality(sigma: Sequence[complex], t: Sequence[complex], d: int) -> float:
    """‖C C̃ᵀ‖，C = t·veronese((1,σ), d+1)，C̃ = t̃·veronese((1,σ), d̃+1)

    t̃_i = 1/(t_i ∏_{j≠i}(σ_j - σ_i))，d̃ = n-2-d

    Raises:
        InvalidInputError: d 不在 1..n-3
    """
    sig = np.asarray(sigma, dtype=complex)
    tt = np.asarray(t, dtype=complex)
    n = len(sig)
    if not 1 <= d <= n - 3:
        raise InvalidInputError(f"degree must lie in 1..{n - 3}")
    products = np.array([np.prod(np.delete(sig, i) - sig[i]) for i in range(n)])
    t_tilde = 1.0 / (tt * products)
    points = np.vstack((np.ones(n), sig))
    c = veronese(points, d + 1) * tt
    c_tilde = veronese(points, n - 1 - d) * t_tilde
    return float(np.max(np.abs(c @ c_tilde.T)))
