"""
多边形组合学测试

测试范围：
- 对角线与交叉判定
- 三角剖分、剖分的枚举与 Catalan 计数
- 翻转与翻转图
- Δ₀,ₙ 的定向符号传播
- 平面树双射与兼容树
- Euler 数
- 单纯复形：链接、纯、flag、伪流形
"""

from math import factorial

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chylab.combinatorics import (
    Diagonal,
    SimplicialComplex,
    Subdivision,
    associahedron_complex,
    catalan,
    check_permutation,
    compatible_trees,
    crosses,
    diagonals,
    enumerate_subdivisions,
    enumerate_triangulations,
    eulerian,
    eulerian_row,
    fan_triangulation,
    flip,
    flip_graph,
    is_flag,
    is_pseudomanifold,
    is_pure,
    link,
    orientation_signs,
    permutation_parity,
    rotate_diagonal,
    subdivision_to_tree,
    triangulation_to_tree,
)
from chylab.core.exceptions import InvalidInputError


class TestDiagonals:
    """测试对角线"""

    @pytest.mark.parametrize("n", [4, 5, 6, 7, 8, 9])
    def test_count(self, n):
        """测试对角线个数为 n(n-3)/2"""
        assert len(diagonals(n)) == n * (n - 3) // 2

    def test_pentagon_lexicographic(self):
        """测试五边形对角线按字典序排列"""
        assert diagonals(5) == [
            Diagonal(1, 3),
            Diagonal(1, 4),
            Diagonal(2, 4),
            Diagonal(2, 5),
            Diagonal(3, 5),
        ]

    def test_of_rejects_edges(self):
        """测试相邻顶点不构成对角线"""
        with pytest.raises(InvalidInputError):
            Diagonal.of(1, 2, 5)
        with pytest.raises(InvalidInputError):
            Diagonal.of(1, 5, 5)
        with pytest.raises(InvalidInputError):
            Diagonal.of(0, 3, 5)

    def test_of_normalizes_order(self):
        """测试端点顺序被规范化"""
        assert Diagonal.of(4, 1, 6) == Diagonal(1, 4)

    def test_small_polygon_rejected(self):
        """测试 n < 4 报错"""
        with pytest.raises(InvalidInputError):
            diagonals(3)

    def test_crossing(self):
        """测试交叉判定"""
        assert crosses(Diagonal(1, 3), Diagonal(2, 4))
        assert not crosses(Diagonal(1, 3), Diagonal(1, 4))
        assert not crosses(Diagonal(1, 3), Diagonal(3, 5))

    def test_rotate_and_reflect(self):
        """测试二面体作用"""
        assert rotate_diagonal(Diagonal(1, 3), 1, 5) == Diagonal(2, 4)
        assert rotate_diagonal(Diagonal(3, 5), 1, 5) == Diagonal(1, 4)
        assert rotate_diagonal(Diagonal(1, 3), 0, 5, reflect=True) == Diagonal(3, 5)


class TestTriangulations:
    """测试三角剖分枚举"""

    @pytest.mark.parametrize("n", [4, 5, 6, 7, 8, 9, 10])
    def test_catalan_count(self, n):
        """测试三角剖分个数为 Catalan(n-2)"""
        assert len(enumerate_triangulations(n)) == catalan(n - 2)

    def test_square(self):
        """测试正方形的两个三角剖分"""
        found = [t.to_pairs() for t in enumerate_triangulations(4)]
        assert found == [[[1, 3]], [[2, 4]]]

    def test_deterministic_order(self):
        """测试枚举顺序确定"""
        assert enumerate_triangulations(6) == enumerate_triangulations(6)
        first = enumerate_triangulations(6)[0]
        assert first == fan_triangulation(6)

    def test_every_triangulation_is_noncrossing(self):
        """测试每个三角剖分恰有 n-3 条两两不交叉的对角线"""
        for t in enumerate_triangulations(7):
            assert t.is_triangulation
            Subdivision.of(7, t.diagonals)

    def test_subdivision_rejects_crossing(self):
        """测试交叉的对角线不能组成剖分"""
        with pytest.raises(InvalidInputError):
            Subdivision.of(5, [(1, 3), (2, 4)])

    @pytest.mark.parametrize("n,count", [(4, 3), (5, 11), (6, 45)])
    def test_subdivision_count(self, n, count):
        """测试剖分（含空剖分）个数为小 Schröder 数"""
        assert len(enumerate_subdivisions(n)) == count


class TestFlips:
    """测试翻转"""

    def test_flip_square(self):
        """测试正方形的翻转"""
        t = Subdivision.of(4, [(1, 3)])
        assert flip(t, Diagonal(1, 3)).to_pairs() == [[2, 4]]

    def test_flip_involution(self):
        """测试翻转两次回到原剖分"""
        for t in enumerate_triangulations(6):
            for d in t.ordered():
                flipped = flip(t, d)
                (new,) = flipped.diagonals - t.diagonals
                assert flip(flipped, new) == t

    def test_flip_missing_diagonal(self):
        """测试翻转不在剖分中的对角线报错"""
        with pytest.raises(InvalidInputError):
            flip(Subdivision.of(5, [(1, 3), (1, 4)]), Diagonal(2, 4))

    @pytest.mark.parametrize("n", [5, 6, 7])
    def test_flip_graph_regular_and_connected(self, n):
        """测试翻转图为 (n-3)-正则且连通"""
        graph = flip_graph(n)
        assert graph.number_of_nodes() == catalan(n - 2)
        assert nx.is_connected(graph)
        assert all(deg == n - 3 for _, deg in graph.degree())

    def test_pentagon_flip_graph_is_cycle(self):
        """测试五边形的翻转图为五边形"""
        graph = flip_graph(5)
        assert graph.number_of_edges() == 5


class TestOrientation:
    """测试定向符号传播"""

    @pytest.mark.parametrize("n", [4, 5, 6, 7, 8])
    def test_consistent(self, n):
        """测试传播无矛盾且覆盖全部三角剖分"""
        signs = orientation_signs(n)
        assert len(signs) == catalan(n - 2)
        assert all(s.sign in (1, -1) for s in signs.values())

    def test_root_is_positive(self):
        """测试扇形三角剖分符号为 +1"""
        assert orientation_signs(6)[fan_triangulation(6)].sign == 1

    def test_square_signs_opposite(self):
        """测试 n=4 两项符号相反"""
        signs = orientation_signs(4)
        values = sorted(s.sign for s in signs.values())
        assert values == [-1, 1]

    def test_flip_rule(self):
        """测试相邻三角剖分满足翻转符号规则"""
        signs = orientation_signs(6)
        for t in enumerate_triangulations(6):
            order = list(t.ordered())
            for pos, d in enumerate(order):
                flipped = flip(t, d)
                (new,) = flipped.diagonals - t.diagonals
                moved = order.copy()
                moved[pos] = new
                assert signs[flipped].sign == -signs[t].sign * permutation_parity(moved)

    def test_permutation_parity(self):
        """测试置换符号"""
        assert permutation_parity([1, 2, 3]) == 1
        assert permutation_parity([2, 1, 3]) == -1
        assert permutation_parity([3, 1, 2]) == 1


class TestPlanarTrees:
    """测试剖分到平面树的双射"""

    def test_triangulation_gives_cubic_tree(self):
        """测试三角剖分对应三价树"""
        for t in enumerate_triangulations(6):
            tree = triangulation_to_tree(t)
            assert tree.is_cubic
            assert len(tree.degrees) == 4

    def test_empty_subdivision_is_star(self):
        """测试空剖分对应 n 度星形树"""
        tree = subdivision_to_tree(Subdivision(6, frozenset()))
        assert tree.degrees == (6,)

    def test_bijection(self):
        """测试不同剖分给出不同树"""
        trees = {subdivision_to_tree(s).splits for s in enumerate_subdivisions(6)}
        assert len(trees) == len(enumerate_subdivisions(6))

    def test_split_of_diagonal(self):
        """测试对角线 (i,j) 把叶子分为 {i..j-1}"""
        tree = subdivision_to_tree(Subdivision.of(6, [(2, 5)]))
        assert tree.splits == (frozenset({2, 3, 4}),)
        assert tree.degrees == (4, 4)

    def test_non_triangulation_rejected(self):
        """测试非三角剖分不能转三价树"""
        with pytest.raises(InvalidInputError):
            triangulation_to_tree(Subdivision.of(6, [(1, 3)]))


class TestCompatibleTrees:
    """测试兼容树"""

    def test_identity_gives_all(self):
        """测试与自身兼容的树就是全部三角剖分"""
        assert len(compatible_trees([1, 2, 3, 4, 5])) == 5

    def test_s_channel_only(self):
        """测试 2134 只剩 s 道"""
        trees = compatible_trees([2, 1, 3, 4])
        assert [t.to_pairs() for t in trees] == [[[1, 3]]]

    def test_not_permutation(self):
        """测试非排列报错"""
        with pytest.raises(InvalidInputError):
            check_permutation([1, 1, 2, 3])
        with pytest.raises(InvalidInputError):
            check_permutation([1, 2, 3], 4)


class TestEulerian:
    """测试 Euler 数"""

    def test_single_values(self):
        """测试单个 Euler 数与范围外取零"""
        assert eulerian(3, 2) == 4
        assert eulerian(4, 2) == 11
        assert eulerian(4, 0) == 0
        assert eulerian(4, 5) == 0

    def test_rejects_empty(self):
        """测试 m < 1"""
        with pytest.raises(InvalidInputError):
            eulerian(0, 1)

    def test_rows(self):
        """测试前几行"""
        assert eulerian_row(1) == [1]
        assert eulerian_row(2) == [1, 1]
        assert eulerian_row(3) == [1, 4, 1]
        assert eulerian_row(4) == [1, 11, 11, 1]

    @given(st.integers(min_value=1, max_value=9))
    def test_row_sums_to_factorial(self, m):
        """测试每行和为 m!"""
        assert sum(eulerian_row(m)) == factorial(m)

    @given(st.integers(min_value=1, max_value=9))
    def test_row_symmetric(self, m):
        """测试每行对称"""
        row = eulerian_row(m)
        assert row == row[::-1]


class TestSimplicialComplex:
    """测试单纯复形"""

    @pytest.mark.parametrize("n", [4, 5, 6, 7])
    def test_associahedron_properties(self, n):
        """测试 Δ₀,ₙ 是纯的 flag 伪流形"""
        c = associahedron_complex(n)
        assert c.dim == n - 4
        assert is_pure(c)
        assert is_flag(c)
        assert is_pseudomanifold(c)

    def test_faces_of_pentagon_complex(self):
        """测试五边形复形的面：空面、5 个顶点、5 条棱"""
        faces = associahedron_complex(5).faces()
        assert len(faces) == 11

    def test_link_of_diagonal_is_product(self):
        """测试对角线的链接等于两侧多边形复形的联"""
        c = associahedron_complex(6)
        lk = link(c, [Diagonal(1, 4)])
        # (1,4) 切出两个四边形，各有 2 条对角线，联是 4-圈
        assert len(lk.vertices) == 4
        assert len(lk.facets) == 4
        assert is_pseudomanifold(lk)

    def test_link_of_non_face(self):
        """测试非面的链接报错"""
        with pytest.raises(InvalidInputError):
            link(associahedron_complex(5), [Diagonal(1, 3), Diagonal(2, 4)])

    def test_non_flag(self):
        """测试空心三角形不是 flag 复形"""
        hollow = SimplicialComplex.from_facets([[1, 2], [2, 3], [1, 3]])
        assert not is_flag(hollow)
        assert is_pseudomanifold(hollow)

    def test_not_pure(self):
        """测试不纯的复形"""
        c = SimplicialComplex.from_facets([[1, 2, 3], [3, 4]])
        assert not is_pure(c)
        assert not is_pseudomanifold(c)

    def test_from_facets_drops_non_maximal(self):
        """测试非极大面被去掉"""
        c = SimplicialComplex.from_facets([[1, 2], [1, 2, 3], [3]])
        assert c.facets == (frozenset({1, 2, 3}),)

    def test_to_json(self):
        """测试 JSON 形式"""
        data = associahedron_complex(4).to_json()
        assert data["vertices"] == [[1, 3], [2, 4]]
        assert len(data["facets"]) == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=4, max_value=9), st.integers(min_value=0, max_value=20))
def test_rotation_preserves_triangulations(n, shift):
    """测试循环平移把三角剖分映到三角剖分"""
    triangulations = set(enumerate_triangulations(n))
    for t in list(triangulations)[:10]:
        image = Subdivision(n, frozenset(rotate_diagonal(d, shift, n) for d in t.diagonals))
        assert image in triangulations
