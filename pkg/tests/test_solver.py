"""
散射方程求解器测试

测试范围：
- 规范坐标卡中的散射方程与 Hessian
- n=4 闭式解
- 软极限延拓给出 (n-3)! 个解
- 确定性、并行与循环重标号不变性
- 非一般位置运动学、辅助求解失败重试与路径坍缩
- 有限坐标架中的约化行列式
- 求解器配置
"""

from math import factorial

import numpy as np
import pytest

from chylab.core.exceptions import GenericityError, InvalidInputError
from chylab.kinematics import MandelstamPoint, PlanarPoint, random_point, s_from_x
from chylab.moduli import ModuliPoint, finite_frame
from chylab.solver import (
    SolverConfig,
    cyclic_check,
    gradient_matches_residuals,
    hessian,
    mobius_to_gauge,
    reduced_determinant,
    reduced_determinant_finite,
    relabel_solution,
    residual_norm,
    scattering_residuals,
    solve_all,
)

FOUR_POINT = [[0, 2, -5, 3], [2, 0, 3, -5], [-5, 3, 0, 2], [3, -5, 2, 0]]

# s13 = 0
DEGENERATE_FOUR = [[0, 7, 0, -7], [7, 0, -7, 0], [0, -7, 0, 7], [-7, 0, 7, 0]]


class TestEquations:
    """测试方程与 Hessian"""

    def test_four_point_residual(self):
        """测试 n=4 的方程 s₁₃/σ + s₂₃/(σ-1) = 0"""
        m = MandelstamPoint.from_matrix(FOUR_POINT)
        q = scattering_residuals(ModuliPoint.of(4, [2.0]), m)
        assert q[0] == pytest.approx(-5 / 2 + 3 / 1)

    def test_matches_potential_gradient(self, rng):
        """测试散射方程就是 Koba–Nielsen 势的梯度"""
        m = random_point(6, rng)
        p = ModuliPoint.of(6, rng.normal(size=3) + 1j * rng.normal(size=3))
        assert gradient_matches_residuals(p, m) < 1e-10

    def test_hessian_symmetric(self, rng):
        """测试 Hessian 对称"""
        m = random_point(7, rng)
        p = ModuliPoint.of(7, rng.normal(size=4) + 1j * rng.normal(size=4))
        h = hessian(p, m)
        assert h.shape == (4, 4)
        assert np.allclose(h, h.T)

    def test_hessian_finite_differences(self, rng):
        """测试 Hessian 与数值差分一致"""
        m = random_point(6, rng)
        base = rng.normal(size=3) + 1j * rng.normal(size=3)
        exact = hessian(ModuliPoint.of(6, base), m)
        h = 1e-6
        for a in range(3):
            step = np.zeros(3, dtype=complex)
            step[a] = h
            plus = scattering_residuals(ModuliPoint.of(6, base + step), m)
            minus = scattering_residuals(ModuliPoint.of(6, base - step), m)
            assert np.allclose((plus - minus) / (2 * h), exact[a], rtol=1e-5, atol=1e-6)

    def test_size_mismatch(self, rng):
        """测试点与运动学的 n 不一致"""
        with pytest.raises(InvalidInputError):
            scattering_residuals(ModuliPoint.of(5, [2.0, 3.0]), random_point(6, rng))


class TestFourPoint:
    """测试 n=4 闭式解"""

    def test_closed_form(self):
        """测试 σ = (s+t)/s"""
        sols = solve_all(MandelstamPoint.from_matrix(FOUR_POINT))
        assert sols.complete
        assert sols.solutions[0].sigma[0] == pytest.approx(2.5)
        assert sols.residual_norms[0] < 1e-14

    def test_invalid_kinematics(self):
        """测试不在 Kₙ 中的运动学报错"""
        bad = [row.copy() for row in FOUR_POINT]
        bad[0][1] = bad[1][0] = 7
        with pytest.raises(InvalidInputError):
            solve_all(MandelstamPoint.from_matrix(bad))

    def test_triangle_rejected(self):
        """测试 n < 4 报错"""
        m = MandelstamPoint.from_matrix([[0, 0, 0], [0, 0, 0], [0, 0, 0]])
        with pytest.raises(InvalidInputError):
            solve_all(m)


class TestSolveAll:
    """测试同伦延拓求解"""

    @pytest.mark.parametrize("n", [5, 6])
    def test_solution_count(self, n, solver_cfg):
        """测试解的个数为 (n-3)! 且残差很小"""
        for seed in range(3):
            sols = solve_all(random_point(n, seed), solver_cfg)
            assert sols.complete
            assert len(sols.solutions) == factorial(n - 3)
            assert max(sols.residual_norms) < 1e-12
            for p in sols.solutions:
                assert residual_norm(p, sols.kinematics) < 1e-12

    @pytest.mark.slow
    def test_seven_points(self, solver_cfg):
        """测试 n=7 给出 24 个解"""
        sols = solve_all(random_point(7, 3), solver_cfg)
        assert len(sols.solutions) == 24
        assert max(sols.residual_norms) < 1e-12

    def test_solutions_distinct(self, solver_cfg):
        """测试解两两不同"""
        sols = solve_all(random_point(6, 1), solver_cfg)
        points = [p.sigma for p in sols.solutions]
        for a in range(len(points)):
            for b in range(a + 1, len(points)):
                assert np.max(np.abs(points[a] - points[b])) > 1e-6

    def test_deterministic(self, solver_cfg):
        """测试相同输入与种子给出相同的有序解"""
        m = random_point(6, 4)
        first = solve_all(m, solver_cfg)
        second = solve_all(m, solver_cfg)
        for a, b in zip(first.solutions, second.solutions):
            assert np.allclose(a.sigma, b.sigma, atol=1e-10)

    def test_threads_agree(self):
        """测试多线程跟踪给出同一解集"""
        m = random_point(6, 5)
        serial = solve_all(m, SolverConfig(seed=3, threads=1))
        parallel = solve_all(m, SolverConfig(seed=3, threads=2))
        assert len(parallel.solutions) == len(serial.solutions)
        for a, b in zip(serial.solutions, parallel.solutions):
            assert np.allclose(a.sigma, b.sigma, atol=1e-9)

    def test_cyclic_invariance(self, solver_cfg):
        """测试解集在循环重标号下不变"""
        sols = solve_all(random_point(5, 8), solver_cfg)
        assert cyclic_check(sols, 1, solver_cfg) < 1e-8
        assert cyclic_check(sols, 2, solver_cfg) < 1e-8


class TestGauge:
    """测试 Möbius 规范"""

    def test_identity(self):
        """测试已在规范中的点保持不变"""
        p = mobius_to_gauge([0, 1, 2.5, -3.0, None], 5)
        assert np.allclose(p.sigma, [2.5, -3.0])

    def test_affine_map(self):
        """测试仿射变换被消去"""
        p = mobius_to_gauge([3.0, 5.0, 8.0, None], 4)
        assert p.sigma[0] == pytest.approx(2.5)

    def test_relabel_full_turn(self):
        """测试平移 n 次回到原点"""
        p = ModuliPoint.of(6, [2.0 + 1j, -1.0, 3.0])
        assert np.allclose(relabel_solution(p, 6).sigma, p.sigma)


class TestReducedDeterminant:
    """测试约化行列式"""

    def test_independent_of_deletion(self, solver_cfg):
        """测试有限坐标架中不同删除选择给出同一 det′Φ"""
        sols = solve_all(random_point(6, 2), solver_cfg)
        s = sols.kinematics.as_array()
        for p in sols.solutions:
            z = finite_frame(p, -0.5 + 0.75j)
            ref = reduced_determinant_finite(z, s, (1, 2, 3), (1, 2, 3))
            for rows, cols in (((2, 4, 6), (2, 4, 6)), ((1, 3, 5), (2, 4, 6)), ((4, 5, 6), (1, 2, 3))):
                value = reduced_determinant_finite(z, s, rows, cols)
                assert value == pytest.approx(ref, rel=1e-8)

    def test_bad_deletion(self):
        """测试删除选择必须是三个互异指标"""
        z = np.array([1.0, 2.0, 3.0, 4.0, 0.0])
        s = np.zeros((5, 5))
        with pytest.raises(InvalidInputError):
            reduced_determinant_finite(z, s, (1, 1, 2), (1, 2, 3))

    def test_gauge_determinant_nonzero(self, solver_cfg):
        """测试解处的 det′Φ 非零"""
        sols = solve_all(random_point(5, 6), solver_cfg)
        for p in sols.solutions:
            assert abs(reduced_determinant(p, sols.kinematics)) > 1e-12


class TestConfig:
    """测试求解器配置"""

    def test_from_settings(self, monkeypatch):
        """测试默认值来自 CHYLAB_* 环境变量"""
        monkeypatch.setenv("CHYLAB_MAX_RESTARTS", "3")
        monkeypatch.setenv("CHYLAB_THREADS", "2")
        cfg = SolverConfig.from_settings(seed=9)
        assert cfg.max_restarts == 3
        assert cfg.threads == 2
        assert cfg.seed == 9

    def test_validation(self):
        """测试非法配置"""
        with pytest.raises(ValueError):
            SolverConfig(eps_start=2.0)


class TestGenericity:
    """测试非一般位置运动学与延拓失败的处理"""

    def test_rejects_vanishing_two_particle(self):
        """测试 s25 = 0 的五点运动学被拒绝"""
        m = s_from_x(
            PlanarPoint.from_pairs(5, {"1,3": 1, "1,4": 2, "2,4": 3, "2,5": 4, "3,5": 5})
        )
        with pytest.raises(GenericityError) as exc_info:
            solve_all(m, SolverConfig(seed=7))
        assert exc_info.value.code == "non_generic"
        assert [1, 3, 4] in exc_info.value.extra["channels"]

    def test_rejects_vanishing_multiparticle(self):
        """测试所有 s_ij 非零但 s134 = 0 时被拒绝"""
        m = MandelstamPoint.from_matrix(
            [
                [0, 1, 1, 2, -2, -2],
                [1, 0, 3, 2, 1, -7],
                [1, 3, 0, -3, -2, 1],
                [2, 2, -3, 0, -3, 2],
                [-2, 1, -2, -3, 0, 6],
                [-2, -7, 1, 2, 6, 0],
            ]
        )
        with pytest.raises(GenericityError):
            solve_all(m, SolverConfig(seed=7))

    def test_rejects_degenerate_four_point(self):
        """测试 s13 = 0 的四点运动学被拒绝，而不是报坐标重合"""
        with pytest.raises(GenericityError):
            solve_all(MandelstamPoint.from_matrix(DEGENERATE_FOUR))

    def test_auxiliary_failure_retried(self, monkeypatch):
        """测试辅助运动学求解失败时换一组重试"""
        calls = []

        def first_degenerate(n, rng, value_range=10):
            calls.append(n)
            if len(calls) == 1:
                return MandelstamPoint.from_matrix(DEGENERATE_FOUR)
            return random_point(n, rng, value_range)

        monkeypatch.setattr("chylab.solver.random_point", first_degenerate)
        sols = solve_all(random_point(5, 123), SolverConfig(seed=23))
        assert sols.complete
        assert len(sols.solutions) == 2
        assert sols.restarts >= 1

    def test_collapsed_paths_raise(self, monkeypatch):
        """测试所有路径坍缩到同一解时报 GenericityError"""
        m = random_point(5, 123)
        target = solve_all(m, SolverConfig(seed=7)).solutions[0].sigma.copy()
        monkeypatch.setattr("chylab.solver._PathTracker.track", lambda self, start: target.copy())
        with pytest.raises(GenericityError) as exc_info:
            solve_all(m, SolverConfig(seed=7, max_restarts=1))
        assert exc_info.value.extra["found"] == 1
        assert exc_info.value.extra["expected"] == 2

    @pytest.mark.parametrize("seed", range(25))
    def test_complete_for_every_seed(self, seed):
        """测试一般位置的目标对任意求解器种子都给出完整解集"""
        sols = solve_all(random_point(5, 123), SolverConfig(seed=seed))
        assert sols.complete
        assert len(sols.solutions) == 2
        assert max(sols.residual_norms) < 1e-12
