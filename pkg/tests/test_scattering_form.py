"""
散射形式测试

测试范围：
- Ψₙ 的项与符号
- 拉回到 H(c) 后的系数等于 φ³ 振幅（相差全局符号）
- 散射映射：显式值、与散射方程解的一致性
- 正区域的像落在结合多面体内
"""

from fractions import Fraction

import numpy as np
import pytest

from chylab.amplitudes import feynman_phi3
from chylab.combinatorics import Diagonal
from chylab.core.exceptions import InvalidInputError
from chylab.kinematics import (
    PlanarPoint,
    SubspaceSpec,
    planar_from_subspace,
    random_planar,
    s_from_x,
)
from chylab.moduli import PositivePoint, sigma_from_y
from chylab.scattering_form import (
    associahedron_check,
    injectivity_spot_check,
    pullback_coefficient,
    pullback_signs,
    relations_residual,
    scattering_form_terms,
    scattering_map,
    scattering_map_from_spec,
    term_signs_cyclic_check,
)
from chylab.solver import solve_all


def varied_spec(n: int) -> SubspaceSpec:
    return SubspaceSpec(n, {p: Fraction(k + 1, 3) for k, p in enumerate(SubspaceSpec.index_pairs(n))})


class TestTerms:
    """测试形式的项"""

    @pytest.mark.parametrize("n, count", [(4, 2), (5, 5), (6, 14)])
    def test_one_term_per_triangulation(self, n, count):
        """测试每个三角剖分一项，符号为 ±1"""
        terms = scattering_form_terms(n)
        assert len(terms) == count
        assert all(term.sign in (1, -1) for term in terms)
        assert all(len(term.ordering) == n - 3 for term in terms)

    @pytest.mark.parametrize("n", [4, 5, 6, 7])
    def test_cyclic_relabeling(self, n):
        """测试循环重标号整体乘以一个符号"""
        assert term_signs_cyclic_check(n) in (1, -1)


class TestPullback:
    """测试拉回"""

    @pytest.mark.parametrize("n", [4, 5, 6, 7])
    def test_equals_feynman(self, n):
        """测试拉回系数等于 ±Feynman 求和（精确有理数）"""
        spec = varied_spec(n)
        found = set()
        for k in range(4):
            point = planar_from_subspace(spec, [Fraction(3 * j + k + 2, 2) for j in range(n - 3)])
            if any(v == 0 for v in point.X.values()):
                continue
            coefficient = pullback_coefficient(spec, point)
            feynman = feynman_phi3(point)
            assert coefficient in (feynman, -feynman)
            found.add(coefficient == feynman)
        assert len(found) == 1

    @pytest.mark.parametrize("n", [5, 6])
    def test_signs_uniform(self, n):
        """测试每项的拉回符号都相同"""
        assert len(set(pullback_signs(varied_spec(n)).values())) == 1
        assert set(pullback_signs(varied_spec(n)).values()) <= {1, -1}

    def test_point_off_subspace(self):
        """测试不在 H(c) 上的点被拒绝"""
        spec = SubspaceSpec.constant(5, Fraction(1))
        point = planar_from_subspace(spec, [Fraction(2), Fraction(3)])
        moved = dict(point.X)
        moved[Diagonal(2, 4)] += 1
        with pytest.raises(InvalidInputError):
            pullback_coefficient(spec, PlanarPoint(5, moved))

    def test_size_mismatch(self):
        """测试 n 不一致"""
        point = planar_from_subspace(SubspaceSpec.constant(6, 1), [1, 2, 3])
        with pytest.raises(InvalidInputError):
            pullback_coefficient(SubspaceSpec.constant(5, 1), point)


class TestScatteringMap:
    """测试散射映射"""

    def test_pentagon_values(self):
        """测试 n=5、c=1、y=(1,1) 处 X₁₃ = 5/6，X₁₄ = 7/6"""
        image = scattering_map_from_spec(
            SubspaceSpec.constant(5, 1), sigma_from_y(PositivePoint.of(5, [1.0, 1.0]))
        )
        assert complex(image.X[Diagonal(1, 3)]).real == pytest.approx(5 / 6)
        assert complex(image.X[Diagonal(1, 4)]).real == pytest.approx(7 / 6)

    def test_image_on_subspace(self, rng):
        """测试像满足 H(c) 的关系"""
        spec = varied_spec(6)
        for _ in range(5):
            image = scattering_map_from_spec(spec, sigma_from_y(PositivePoint.random(6, rng)))
            assert relations_residual(image, spec) < 1e-10

    @pytest.mark.parametrize("n", [5, 6])
    def test_solutions_map_to_kinematics(self, n, solver_cfg):
        """测试散射方程的每个解都映到给定的 X"""
        planar = random_planar(n, n + 1, generic=True)
        m = s_from_x(planar)
        for sol in solve_all(m, solver_cfg).solutions:
            image = scattering_map(m, sol)
            for d, value in planar.X.items():
                assert abs(image.X[d] - float(value)) < 1e-8

    @pytest.mark.parametrize("n", [5, 6])
    def test_associahedron(self, n):
        """测试正点的像全部落在 X > 0 且边界可达"""
        report = associahedron_check(varied_spec(n), samples=50, seed=1)
        assert report.passed
        assert report.min_value > 0
        assert report.failures == []

    def test_associahedron_needs_positive_c(self):
        """测试 c 非正时报错"""
        with pytest.raises(InvalidInputError):
            associahedron_check(SubspaceSpec.constant(5, -1))

    def test_injective_on_samples(self):
        """测试抽样中没有碰撞"""
        assert injectivity_spot_check(varied_spec(5), samples=40, seed=2)

    def test_size_mismatch(self, rng):
        """测试 n 不一致"""
        with pytest.raises(InvalidInputError):
            scattering_map_from_spec(varied_spec(5), sigma_from_y(PositivePoint.random(6, rng)))


def test_boundary_image_is_small():
    """测试 y₁ → 0 时某个 X 趋于零"""
    spec = SubspaceSpec.constant(5, 1)
    y = np.array([1e-10, 1.0])
    image = scattering_map_from_spec(spec, sigma_from_y(PositivePoint.of(5, y)))
    assert min(abs(complex(v)) for v in image.X.values()) < 1e-8
