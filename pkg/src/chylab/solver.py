"""
散射方程求解模块

规范 σ₁=0, σ₂=1, σₙ=∞ 下的散射方程 Q_k = Σ_{j≠k} s_kj/(σ_k-σ_j) = 0（k = 3..n-1）、
Hessian 与约化行列式，以及基于软极限的同伦延拓求出全部 (n-3)! 个解

延拓路径：第 n-1 个粒子为软粒子，s(ε) = (1-ε)·γ·s₀ + ε·s，其中 s₀ 是软粒子
行列为零的 (n-1) 点随机运动学，γ 为随机复数。ε → 0 时的起点由 (n-1) 点
问题的解（递归求得）与软粒子方程的 n-3 个根（伴随矩阵特征值）给出
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import factorial
from typing import Iterable, Sequence

import numpy as np
from pydantic import BaseModel, Field
from structlog import get_logger

from chylab.combinatorics import check_polygon
from chylab.core.config import get_settings
from chylab.core.exceptions import (
    ChylabException,
    GenericityError,
    InvalidInputError,
    PoleError,
)
from chylab.kinematics import MandelstamPoint, random_point, rotate, vanishing_channels
from chylab.moduli import ModuliPoint, gradient_log_potential

logger = get_logger()

# 通道 s_A 相对 max|s| 低于此值视为零
GENERICITY_TOL = 1e-12


class SolverConfig(BaseModel):
    """求解器配置（默认值取自 Settings，即 CHYLAB_* 环境变量）"""

    newton_tol: float = Field(default=1e-12, gt=0, description="最终残差阈值")
    dedup_tol: float = Field(default=1e-8, gt=0, description="解去重距离（max 范数）")
    max_newton_iters: int = Field(default=50, ge=1, description="牛顿最大迭代次数")
    continuation_steps: int = Field(default=40, ge=2, description="ε 几何网格的步数")
    max_restarts: int = Field(default=10, ge=0, description="更换 γ 重试的次数上限")
    eps_start: float = Field(default=1e-3, gt=0, lt=1, description="延拓起点 ε")
    threads: int = Field(default=1, ge=1, description="并行跟踪路径的线程数")
    seed: int = Field(default=0, description="γ 与辅助运动学的随机种子")

    @classmethod
    def from_settings(cls, **overrides: object) -> "SolverConfig":
        """以全局配置为默认值构造"""
        settings = get_settings()
        values: dict[str, object] = {
            "newton_tol": settings.newton_tol,
            "dedup_tol": settings.dedup_tol,
            "max_newton_iters": settings.max_newton_iters,
            "continuation_steps": settings.continuation_steps,
            "max_restarts": settings.max_restarts,
            "threads": settings.threads,
        }
        values.update(overrides)
        return cls(**values)


@dataclass
class SolutionSet:
    """散射方程的解集

    Attributes:
        kinematics (MandelstamPoint): 运动学
        solutions (list[ModuliPoint]): 去重后的解（确定性排序）
        residual_norms (list[float]): 每个解的归一化残差 max|Q|/max|s|
        expected (int): 应有的解个数 (n-3)!
        restarts (int): 实际使用的重试次数
    """

    kinematics: MandelstamPoint
    solutions: list[ModuliPoint]
    residual_norms: list[float]
    expected: int
    restarts: int = 0
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return len(self.solutions) == self.expected

    @property
    def n(self) -> int:
        return self.kinematics.n


def _s_matrix(m: MandelstamPoint) -> np.ndarray:
    return np.asarray(m.as_array(), dtype=complex)


def _positions(sigma: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0 + 0j, 1.0 + 0j], sigma))


def _differences(pos: np.ndarray) -> np.ndarray:
    diff = pos[:, None] - pos[None, :]
    np.fill_diagonal(diff, 1.0)
    if np.any(diff == 0):
        raise PoleError("coincident punctures")
    return diff


def _q(sigma: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Q₃..Q_{n-1}；s 为 n×n 复矩阵"""
    n = s.shape[0]
    pos = _positions(sigma)
    terms = s[: n - 1, : n - 1] / _differences(pos)
    np.fill_diagonal(terms, 0.0)
    return terms.sum(axis=1)[2:]


def _phi(sigma: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Φ_ab = ∂_{σ_a} Q_b，a, b = 3..n-1"""
    n = s.shape[0]
    pos = _positions(sigma)
    weights = s[: n - 1, : n - 1] / _differences(pos) ** 2
    np.fill_diagonal(weights, 0.0)
    block = weights[2:, 2:].copy()
    np.fill_diagonal(block, -weights.sum(axis=1)[2:])
    return block


def scattering_residuals(p: ModuliPoint, m: MandelstamPoint) -> np.ndarray:
    """规范坐标卡中的散射方程 (Q₃, …, Q_{n-1})

    σₙ = ∞ 的项按约定为 0；Q₁, Q₂, Qₙ 与其余方程线性相关，不返回

    Raises:
        PoleError: 标记点重合
    """
    _check_sizes(p, m)
    return _q(p.sigma, _s_matrix(m))


def hessian(p: ModuliPoint, m: MandelstamPoint) -> np.ndarray:
    """删去 {1, 2, n} 行列后的 (n-3)×(n-3) 矩阵 Φ_ab = ∂_{σ_a} Q_b

    Raises:
        PoleError: 标记点重合
    """
    _check_sizes(p, m)
    return _phi(p.sigma, _s_matrix(m))


def reduced_determinant(p: ModuliPoint, m: MandelstamPoint) -> complex:
    """约化行列式 det′Φ

    删去规范 {1, 2, n} 的行列；齐次子式下 ((12)(2n)(n1))² = 1，
    ∞ 因子成对相消，结果就是 det Φ_chart
    """
    return complex(np.linalg.det(hessian(p, m)))


def full_hessian(z: np.ndarray, s: np.ndarray) -> np.ndarray:
    """全部标记点有限时的 n×n 矩阵 Φ"""
    z = np.asarray(z, dtype=complex)
    s = np.asarray(s, dtype=complex)
    diff = _differences(z)
    weights = s / diff**2
    np.fill_diagonal(weights, 0.0)
    phi = weights.copy()
    np.fill_diagonal(phi, -weights.sum(axis=1))
    return phi


def reduced_determinant_finite(
    z: np.ndarray, s: np.ndarray, rows: Sequence[int], cols: Sequence[int]
) -> complex:
    """有限坐标架中任意删除选择下的约化行列式

    det′Φ = (-1)^{a+b+c+p+q+r} det Φ^{abc}_{pqr} / (z_ab z_bc z_ca z_pq z_qr z_rp)

    Args:
        z: n 个有限标记点
        s: n×n Mandelstam 矩阵
        rows: 删去的三行 (a, b, c)，1 起标号
        cols: 删去的三列 (p, q, r)，1 起标号

    Raises:
        InvalidInputError: 删除选择不是三个互异指标
    """
    if len(set(rows)) != 3 or len(set(cols)) != 3:
        raise InvalidInputError("rows and cols must each name three distinct punctures")
    z = np.asarray(z, dtype=complex)
    phi = full_hessian(z, s)
    keep_r = [k for k in range(len(z)) if k + 1 not in rows]
    keep_c = [k for k in range(len(z)) if k + 1 not in cols]
    minor = np.linalg.det(phi[np.ix_(keep_r, keep_c)])
    a, b, c = (r - 1 for r in rows)
    p, q, r = (x - 1 for x in cols)
    vandermonde = (z[a] - z[b]) * (z[b] - z[c]) * (z[c] - z[a])
    vandermonde *= (z[p] - z[q]) * (z[q] - z[r]) * (z[r] - z[p])
    sign = (-1) ** (sum(rows) + sum(cols))
    return complex(sign * minor / vandermonde)


def _check_sizes(p: ModuliPoint, m: MandelstamPoint) -> None:
    if p.n != m.n:
        raise InvalidInputError(f"point has n={p.n} but kinematics has n={m.n}")


def _scale(s: np.ndarray) -> float:
    return float(max(np.max(np.abs(s)), 1e-300))


def _newton(
    sigma: np.ndarray, s: np.ndarray, tol: float, max_iter: int
) -> tuple[np.ndarray, float, bool]:
    """牛顿迭代，返回 (σ, 归一化残差, 是否收敛)"""
    scale = _scale(s)
    x = sigma.copy()
    try:
        residual = float(np.max(np.abs(_q(x, s)))) / scale
        for _ in range(max_iter):
            if residual < tol:
                return x, residual, True
            step = np.linalg.solve(_phi(x, s), -_q(x, s))
            x = x + step
            if not np.all(np.isfinite(x)):
                return x, np.inf, False
            residual = float(np.max(np.abs(_q(x, s)))) / scale
        return x, residual, residual < tol
    except (np.linalg.LinAlgError, PoleError):
        return x, np.inf, False


def _soft_roots(hard: np.ndarray, s: np.ndarray) -> np.ndarray:
    """软粒子 k = n-1 的方程 Σ_{j≤n-2} s_kj/(σ_k-σ_j) = 0 去分母后的 n-3 个根"""
    n = s.shape[0]
    k = n - 2
    others = _positions(hard)  # σ₁..σ_{n-2}
    poly = np.zeros(n - 2, dtype=complex)
    for j in range(n - 2):
        rest = np.delete(others, j)
        poly = poly + s[k, j] * np.poly(rest)
    return np.roots(poly)


def _embed_auxiliary(aux: MandelstamPoint, n: int) -> np.ndarray:
    """(n-1) 点运动学放到粒子 {1..n-2, n} 上，软粒子 n-1 的行列为零"""
    idx = list(range(n - 2)) + [n - 1]
    s0 = np.zeros((n, n), dtype=complex)
    s0[np.ix_(idx, idx)] = _s_matrix(aux)
    return s0


class _PathTracker:
    """沿 s(ε) = (1-ε)γs₀ + εs 跟踪单条路径"""

    def __init__(
        self, s0: np.ndarray, s: np.ndarray, gamma: complex, cfg: SolverConfig
    ) -> None:
        self.s0 = s0
        self.s = s
        self.gamma = gamma
        self.cfg = cfg
        self.direction = s - gamma * s0

    def at(self, eps: float) -> np.ndarray:
        return (1.0 - eps) * self.gamma * self.s0 + eps * self.s

    def _correct(self, x: np.ndarray, s_eps: np.ndarray) -> tuple[np.ndarray, bool]:
        scale = _scale(s_eps)
        start = x.copy()
        try:
            for _ in range(8):
                q = _q(x, s_eps)
                if float(np.max(np.abs(q))) / scale < 1e-10:
                    break
                x = x + np.linalg.solve(_phi(x, s_eps), -q)
            else:
                if float(np.max(np.abs(_q(x, s_eps)))) / scale >= 1e-10:
                    return x, False
        except (np.linalg.LinAlgError, PoleError):
            return x, False
        if not np.all(np.isfinite(x)):
            return x, False
        # 校正量过大视为跳到了别的路径
        drift = float(np.max(np.abs(x - start)))
        return x, drift <= 0.25 * max(1.0, float(np.max(np.abs(start))))

    def track(self, start: np.ndarray) -> np.ndarray | None:
        cfg = self.cfg
        eps = cfg.eps_start
        x, ok = self._correct(start, self.at(eps))
        if not ok:
            return None
        grid = np.geomspace(cfg.eps_start, 1.0, cfg.continuation_steps + 1)[1:]
        for target in grid:
            h = target - eps
            while eps < target - 1e-15:
                h = min(h, target - eps)
                try:
                    jac = _phi(x, self.at(eps))
                    velocity = np.linalg.solve(jac, -_q(x, self.direction))
                except (np.linalg.LinAlgError, PoleError):
                    return None
                trial, ok = self._correct(x + h * velocity, self.at(eps + h))
                if ok:
                    x, eps = trial, eps + h
                    h *= 2.0
                else:
                    h *= 0.5
                    if h < 1e-12:
                        return None
        return x


def _sort_key(sigma: np.ndarray) -> tuple[float, ...]:
    return tuple(v for z in sigma for v in (round(z.real, 9), round(z.imag, 9)))


def _merge(
    found: list[np.ndarray], candidates: Iterable[np.ndarray], tol: float
) -> list[np.ndarray]:
    for cand in candidates:
        if all(float(np.max(np.abs(cand - f))) > tol for f in found):
            found.append(cand)
    return found


def solve_all(
    m: MandelstamPoint, cfg: SolverConfig | None = None, *, _depth: int = 0
) -> SolutionSet:
    """求散射方程的全部 (n-3)! 个解

    n = 4 用闭式解 σ = s₁₃/(s₁₃+s₂₃)；n ≥ 5 用软极限同伦延拓并递归求 (n-1) 点起点。
    每轮换一个随机 γ 与辅助运动学，已找到的解跨轮累积，直到个数齐全或用尽重试

    Args:
        m: 运动学（精确或浮点）
        cfg: 求解器配置，默认取全局 Settings

    Returns:
        SolutionSet: 去重、排序后的解集；路径丢失导致个数不足时 complete 为 False 并记录警告

    Raises:
        InvalidInputError: n < 4 或运动学不合法
        GenericityError: 某个通道 s_A 为零，或重试用尽后仍有路径坍缩到同一解
    """
    cfg = cfg or SolverConfig.from_settings()
    check_polygon(m.n)
    m.validate(tol=1e-9)
    n = m.n
    s = _s_matrix(m)
    expected = factorial(n - 3)
    zero = vanishing_channels(m, tol=GENERICITY_TOL)
    if zero:
        raise GenericityError(
            f"non-generic kinematics: {len(zero)} vanishing channels",
            extra={"n": n, "channels": [list(a) for a in zero]},
        )

    if n == 4:
        denom = s[0, 2] + s[1, 2]
        if denom == 0:
            raise PoleError("degenerate four-point kinematics: s13 + s23 = 0")
        sigma, residual, _ = _newton(
            np.array([s[0, 2] / denom]), s, cfg.newton_tol, cfg.max_newton_iters
        )
        return SolutionSet(m, [ModuliPoint.of(4, sigma)], [residual], expected)

    rng = np.random.default_rng([cfg.seed, n, _depth])
    found: list[np.ndarray] = []
    restarts = 0
    collapsed = 0
    for attempt in range(cfg.max_restarts + 1):
        restarts = attempt
        gamma = complex(np.exp(2j * np.pi * rng.uniform()))
        aux = random_point(n - 1, rng, 10)
        try:
            inner = solve_all(aux, cfg, _depth=_depth + 1)
        except ChylabException as e:
            logger.info("Auxiliary solve failed, retrying", n=n, attempt=attempt, error=e.code)
            continue
        if not inner.complete:
            logger.info("Auxiliary solve incomplete, retrying", n=n, attempt=attempt)
            continue
        s0 = _embed_auxiliary(aux, n)
        starts = []
        for sol in inner.solutions:
            hard = sol.sigma  # σ₃..σ_{n-2}
            for root in _soft_roots(hard, s):
                starts.append(np.concatenate((hard, [root])))
        tracker = _PathTracker(s0, s, gamma, cfg)
        if cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                ends = list(pool.map(tracker.track, starts))
        else:
            ends = [tracker.track(start) for start in starts]
        lost = sum(1 for e in ends if e is None)
        polished = []
        for end in ends:
            if end is None:
                continue
            x, residual, ok = _newton(end, s, cfg.newton_tol, cfg.max_newton_iters)
            if ok:
                polished.append(x)
        distinct = _merge([], polished, cfg.dedup_tol)
        if len(distinct) < len(polished):
            collapsed += len(polished) - len(distinct)
            logger.info(
                "Paths collapsed onto one solution",
                n=n,
                collapsed=len(polished) - len(distinct),
                attempt=attempt,
            )
        found = _merge(found, distinct, cfg.dedup_tol)
        if lost:
            logger.info("Paths lost during continuation", n=n, lost=lost, attempt=attempt)
        if len(found) >= expected:
            break

    if len(found) > expected:
        logger.warning("More solutions than expected", n=n, found=len(found), expected=expected)
    found.sort(key=_sort_key)
    points = [ModuliPoint.of(n, x, check=False) for x in found]
    norms = [float(np.max(np.abs(_q(x, s)))) / _scale(s) for x in found]
    result = SolutionSet(m, points, norms, expected, restarts)
    if not result.complete:
        if collapsed:
            raise GenericityError(
                f"solution paths collapse: {len(found)} of {expected} distinct solutions",
                extra={"n": n, "found": len(found), "expected": expected, "collapsed": collapsed},
            )
        logger.warning(
            "Incomplete solution set", n=n, found=len(found), expected=expected, restarts=restarts
        )
    else:
        logger.debug("Solutions tracked", n=n, count=len(found), restarts=restarts)
    return result


def mobius_to_gauge(points: Sequence[complex | None], n: int) -> ModuliPoint:
    """把 n 个点（None 表示 ∞）用 Möbius 变换送到 σ₁=0, σ₂=1, σₙ=∞ 规范

    使用齐次坐标：有限点 (z, 1)，∞ 为 (1, 0)；
    f(z) = [z z₁][z₂ zₙ] / ([z zₙ][z₂ z₁])
    """
    homog = [(1.0 + 0j, 0j) if z is None else (complex(z), 1.0 + 0j) for z in points]

    def bracket(p: tuple[complex, complex], q: tuple[complex, complex]) -> complex:
        return p[0] * q[1] - p[1] * q[0]

    z1, z2, zn = homog[0], homog[1], homog[n - 1]
    values = [
        bracket(homog[k], z1) * bracket(z2, zn) / (bracket(homog[k], zn) * bracket(z2, z1))
        for k in range(2, n - 1)
    ]
    return ModuliPoint.of(n, values, check=False)


def relabel_solution(p: ModuliPoint, shift: int) -> ModuliPoint:
    """把 m 的解搬到 rotate(m, shift) 的解：新标号 L 的位置为旧标号 L - shift 的位置"""
    n = p.n
    old: list[complex | None] = [complex(z) for z in p.finite_positions()] + [None]
    new = [old[(label - shift) % n] for label in range(n)]
    return mobius_to_gauge(new, n)


def cyclic_check(sols: SolutionSet, shift: int = 1, cfg: SolverConfig | None = None) -> float:
    """循环重标号下解集不变性：返回两组解之间的最大匹配距离"""
    rotated = solve_all(rotate(sols.kinematics, shift), cfg)
    moved = [relabel_solution(p, shift).sigma for p in sols.solutions]
    worst = 0.0
    for target in rotated.solutions:
        worst = max(worst, min(float(np.max(np.abs(target.sigma - x))) for x in moved))
    return worst


def residual_norm(p: ModuliPoint, m: MandelstamPoint) -> float:
    """归一化残差 max|Q|/max|s|"""
    return float(np.max(np.abs(scattering_residuals(p, m)))) / _scale(_s_matrix(m))


def gradient_matches_residuals(p: ModuliPoint, m: MandelstamPoint) -> float:
    """散射方程与 Koba–Nielsen 势梯度的最大差"""
    return float(np.max(np.abs(scattering_residuals(p, m) - gradient_log_potential(p, m))))
