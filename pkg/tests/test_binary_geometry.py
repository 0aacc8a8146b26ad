"""
二元几何测试

测试范围：
- u 方程组的构造与校验
- 残差与 M₀,ₙ 的一致性
- 牛顿取样见证解
- 层的限制、乘积几何与同构
- 热带预簇
- 内置示例
"""

import numpy as np
import pytest

from chylab.binary_geometry import (
    BUILTIN_NAMES,
    UEquationSystem,
    builtin,
    containing_face,
    forced_by_zero,
    in_prevariety,
    incompatible_pairs,
    isomorphic,
    product_system,
    random_facet_fixing,
    residuals,
    restrict_to_stratum,
    same_system,
    sample_solution,
    tropical_prevariety,
)
from chylab.combinatorics import (
    Diagonal,
    SimplicialComplex,
    is_flag,
    is_pseudomanifold,
    is_pure,
)
from chylab.core.exceptions import ConvergenceError, InvalidInputError
from chylab.moduli import PositivePoint, u_from_y


class TestBuild:
    """测试方程组构造"""

    def test_square(self):
        """测试正方形方程组"""
        sys_ = builtin("square")
        assert sys_.vertices == (1, 2, 3, 4)
        assert incompatible_pairs(sys_) == {frozenset({1, 3}), frozenset({2, 4})}

    def test_exponents_must_match_incompatibility(self):
        """测试指数必须恰好落在不相容对上"""
        c = SimplicialComplex.from_facets([(1, 2), (2, 3), (3, 4), (4, 1)])
        with pytest.raises(InvalidInputError):
            UEquationSystem.build(c, {(1, 3): 1})

    def test_exponents_positive(self):
        """测试指数必须为正"""
        c = SimplicialComplex.from_facets([(1, 2), (2, 3), (3, 4), (4, 1)])
        exps = {(1, 3): 0, (3, 1): 1, (2, 4): 1, (4, 2): 1}
        with pytest.raises(InvalidInputError):
            UEquationSystem.build(c, exps)

    def test_non_flag_rejected(self):
        """测试非旗复形默认被拒绝"""
        hollow = SimplicialComplex.from_facets([(1, 2), (1, 3), (2, 3)])
        with pytest.raises(InvalidInputError):
            UEquationSystem.build(hollow, {})

    def test_unknown_builtin(self):
        """测试未知名称"""
        with pytest.raises(InvalidInputError):
            builtin("dodecagon")

    @pytest.mark.parametrize("name", BUILTIN_NAMES)
    def test_builtins_are_flag_pseudomanifolds(self, name):
        """测试内置复形是纯的旗伪流形"""
        c = builtin(name).complex
        assert is_flag(c)
        assert is_pure(c)
        assert is_pseudomanifold(c)

    def test_pell3_shape(self):
        """测试 Pell 复形有 8 个顶点、12 个面"""
        sys_ = builtin("pell3")
        assert len(sys_.vertices) == 8
        assert len(sys_.complex.facets) == 12

    def test_to_json(self):
        """测试 JSON 形式"""
        data = builtin("square").to_json()
        assert data["exponents"] == {"1,3": 1, "2,4": 1, "3,1": 1, "4,2": 1}


class TestResiduals:
    """测试残差"""

    def test_square_linear(self):
        """测试正方形残差"""
        r = residuals(builtin("square"), [0.5, 0.25, 0.5, 0.75])
        assert np.allclose(r, 0)

    def test_wrong_length(self):
        """测试坐标个数错误"""
        with pytest.raises(InvalidInputError):
            residuals(builtin("square"), [0.5, 0.5])

    @pytest.mark.parametrize("n", [5, 6, 7])
    def test_m0n_solutions(self, n, rng):
        """测试正点的 u 值解 M₀,ₙ 方程组"""
        sys_ = builtin(f"M0n({n})")
        u = u_from_y(PositivePoint.random(n, rng))
        assert np.max(np.abs(residuals(sys_, u.values()))) < 1e-12

    def test_forced_by_zero(self):
        """测试 u_13 = 0 迫使交叉对角线取 1"""
        sys_ = builtin("M0n(5)")
        assert forced_by_zero(sys_, Diagonal(1, 3)) == [Diagonal(2, 4), Diagonal(2, 5)]
        with pytest.raises(InvalidInputError):
            forced_by_zero(sys_, Diagonal(1, 2))


class TestSampling:
    """测试见证解取样"""

    def test_square_fixed(self):
        """测试固定 (u₁,u₂) = (1/2,1/3)"""
        u = sample_solution(builtin("square"), {1: 0.5, 2: 1 / 3})
        assert np.allclose(u, [0.5, 1 / 3, 0.5, 2 / 3])

    def test_wrong_number_fixed(self):
        """测试固定坐标个数必须为 dim+1"""
        with pytest.raises(InvalidInputError):
            sample_solution(builtin("square"), {1: 0.5})
        with pytest.raises(InvalidInputError):
            sample_solution(builtin("square"), {1: 0.5, 9: 0.2})

    @pytest.mark.parametrize("name", ["hexagon", "octagon", "pell3"])
    def test_witnesses(self, name, rng):
        """测试内置方程组的见证解"""
        sys_ = builtin(name)
        for _ in range(3):
            u = sample_solution(sys_, random_facet_fixing(sys_, rng), rng)
            assert np.max(np.abs(residuals(sys_, u))) < 1e-10

    def test_non_flag_has_no_witness(self):
        """测试三角形边界只有零解，固定非零值时取样失败"""
        sys_ = builtin("triangle")
        with pytest.raises(ConvergenceError):
            sample_solution(sys_, {1: 0.3, 2: 0.4}, max_restarts=2, max_iter=10)

    def test_facet_fixing(self, rng):
        """测试随机极大面固定值落在区间内"""
        sys_ = builtin("hexagon")
        fixed = random_facet_fixing(sys_, rng)
        assert len(fixed) == sys_.complex.dim + 1
        assert frozenset(fixed) in sys_.complex.facets
        assert all(0.2 < v < 0.8 for v in fixed.values())


class TestStrata:
    """测试层、乘积与同构"""

    def test_stratum_is_product(self):
        """测试 M₀,₆ 在 u₁₄ = 0 的层同构于两个 M₀,₄ 的乘积"""
        restricted = restrict_to_stratum(builtin("M0n(6)"), [Diagonal(1, 4)])
        square = builtin("M0n(4)")
        assert isomorphic(restricted, product_system(square, square))

    def test_stratum_of_pentagon_vertex(self):
        """测试 M₀,₅ 在 u₁₃ = 0 的层是 M₀,₄"""
        restricted = restrict_to_stratum(builtin("M0n(5)"), [Diagonal(1, 3)])
        assert isomorphic(restricted, builtin("M0n(4)"))
        assert len(restricted.vertices) == 2

    def test_non_face_rejected(self):
        """测试非面报错"""
        with pytest.raises(InvalidInputError):
            restrict_to_stratum(builtin("M0n(5)"), [Diagonal(1, 3), Diagonal(2, 4)])

    def test_isomorphism_distinguishes(self):
        """测试六边形与 M₀,₅ 不同构（指数不同）"""
        assert not isomorphic(builtin("hexagon"), builtin("M0n(5)"))
        assert isomorphic(builtin("M0n(5)"), builtin("M0n(5)"))

    def test_product_dimensions(self):
        """测试乘积的维数相加"""
        prod = product_system(builtin("square"), builtin("M0n(5)"))
        assert prod.complex.dim == builtin("square").complex.dim + builtin("M0n(5)").complex.dim + 1
        assert same_system(prod, prod)


class TestTropical:
    """测试热带预簇"""

    def test_cone_count(self):
        """测试每个面给出一个锥"""
        assert len(tropical_prevariety(builtin("square"))) == 9

    def test_membership(self):
        """测试锥内的点满足热带方程"""
        sys_ = builtin("square")
        assert in_prevariety(sys_, [1.0, 2.0, 0.0, 0.0])
        assert not in_prevariety(sys_, [1.0, 0.0, 1.0, 0.0])
        assert containing_face(sys_, [1.0, 2.0, 0.0, 0.0]) == frozenset({1, 2})
        assert containing_face(sys_, [1.0, 0.0, 1.0, 0.0]) is None

    def test_cones_lie_in_prevariety(self, rng):
        """测试每个锥的随机正组合都在预簇中"""
        sys_ = builtin("hexagon")
        for cone in tropical_prevariety(sys_):
            weights = rng.uniform(0.1, 2.0, size=len(cone.rays))
            vector = weights @ cone.rays if len(cone.rays) else np.zeros(len(sys_.vertices))
            assert cone.contains(vector)
            assert in_prevariety(sys_, vector)
