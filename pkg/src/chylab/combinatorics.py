"""
多边形组合学模块

n 边形的对角线、交叉、剖分与三角剖分、翻转、定向符号、平面树，
以及一般旗复形的链接、纯性与伪流形检查

顶点标号为 1..n，对角线 (i, j) 总是以 i < j 的规范形式存储
"""

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from math import comb, factorial
from typing import Hashable, Iterable, NamedTuple, Sequence

import networkx as nx
from structlog import get_logger

from chylab.core.exceptions import InvalidInputError, OrientationError

logger = get_logger()


@dataclass(frozen=True, order=True)
class Diagonal:
    """n 边形的对角线

    Attributes:
        i (int): 较小端点
        j (int): 较大端点
    """

    i: int
    j: int

    @classmethod
    def of(cls, a: int, b: int, n: int) -> "Diagonal":
        """按规范形式构造对角线并校验

        Args:
            a: 一个端点（1..n）
            b: 另一个端点（1..n）
            n: 多边形边数

        Returns:
            Diagonal: 规范形式 i < j 的对角线

        Raises:
            InvalidInputError: 端点越界、相等或相邻
        """
        i, j = min(a, b), max(a, b)
        if i < 1 or j > n:
            raise InvalidInputError(f"endpoints ({a},{b}) out of range 1..{n}")
        if j - i in (0, 1, n - 1):
            raise InvalidInputError(f"({a},{b}) is not a diagonal of the {n}-gon")
        return cls(i, j)

    def key(self) -> str:
        """JSON 键 "i,j" """
        return f"{self.i},{self.j}"

    def __repr__(self) -> str:
        return f"({self.i},{self.j})"


def check_polygon(n: int) -> None:
    if n < 4:
        raise InvalidInputError(f"polygon needs n >= 4, got {n}", field="n")


@lru_cache(maxsize=None)
def _diagonals(n: int) -> tuple[Diagonal, ...]:
    return tuple(
        Diagonal(i, j)
        for i in range(1, n + 1)
        for j in range(i + 2, n + 1)
        if not (i == 1 and j == n)
    )


def diagonals(n: int) -> list[Diagonal]:
    """按字典序列出 n 边形的全部对角线

    Args:
        n: 多边形边数（n >= 4）

    Returns:
        list[Diagonal]: 共 n(n-3)/2 条

    Raises:
        InvalidInputError: n < 4
    """
    check_polygon(n)
    return list(_diagonals(n))


def crosses(d1: Diagonal, d2: Diagonal) -> bool:
    """两条对角线是否交叉（端点循环交错）"""
    i, j = d1.i, d1.j
    k, l = d2.i, d2.j
    return (i < k < j < l) or (k < i < l < j)


def rotate_diagonal(d: Diagonal, shift: int, n: int, reflect: bool = False) -> Diagonal:
    """对角线在二面体群作用下的像

    顶点映射为 a -> a + shift（模 n），reflect 时先做 a -> n + 1 - a

    Args:
        d: 对角线
        shift: 循环平移量
        n: 多边形边数
        reflect: 是否先做反射

    Returns:
        Diagonal: 像对角线（规范形式）
    """

    def move(a: int) -> int:
        if reflect:
            a = n + 1 - a
        return (a - 1 + shift) % n + 1

    return Diagonal.of(move(d.i), move(d.j), n)


def catalan(m: int) -> int:
    """第 m 个 Catalan 数"""
    return comb(2 * m, m) // (m + 1)


@dataclass(frozen=True)
class Subdivision:
    """n 边形的剖分（两两不交叉的对角线集合）

    三角剖分是恰有 n-3 条对角线的剖分

    Attributes:
        n (int): 多边形边数
        diagonals (frozenset[Diagonal]): 对角线集合
    """

    n: int
    diagonals: frozenset[Diagonal] = field(default_factory=frozenset)

    @classmethod
    def of(cls, n: int, pairs: Iterable[Sequence[int] | Diagonal]) -> "Subdivision":
        """从端点对构造并校验不交叉条件

        Raises:
            InvalidInputError: 对角线非法或两两交叉
        """
        diags = frozenset(
            p if isinstance(p, Diagonal) else Diagonal.of(p[0], p[1], n) for p in pairs
        )
        for a, b in combinations(diags, 2):
            if crosses(a, b):
                raise InvalidInputError(f"diagonals {a} and {b} cross")
        return cls(n, diags)

    @property
    def is_triangulation(self) -> bool:
        return len(self.diagonals) == self.n - 3

    def ordered(self) -> tuple[Diagonal, ...]:
        """按字典序排列的对角线"""
        return tuple(sorted(self.diagonals))

    def sort_key(self) -> tuple[tuple[int, int], ...]:
        return tuple((d.i, d.j) for d in self.ordered())

    def to_pairs(self) -> list[list[int]]:
        """JSON 形式 [[i, j], ...]"""
        return [[d.i, d.j] for d in self.ordered()]

    def __repr__(self) -> str:
        return f"Subdivision({self.n}, {list(self.ordered())})"


# 三角剖分与剖分使用同一类型，约定对角线数为 n-3
Triangulation = Subdivision


def _triangulate(vertices: tuple[int, ...]) -> list[frozenset[Diagonal]]:
    """凸多边形 vertices（按循环序）的全部三角剖分"""
    if len(vertices) <= 3:
        return [frozenset()]
    first, last = vertices[0], vertices[-1]
    result: list[frozenset[Diagonal]] = []
    # 以边 (first, last) 所在三角形的第三个顶点分类
    for pos in range(1, len(vertices) - 1):
        apex = vertices[pos]
        own: set[Diagonal] = set()
        if pos > 1:
            own.add(Diagonal(min(first, apex), max(first, apex)))
        if pos < len(vertices) - 2:
            own.add(Diagonal(min(apex, last), max(apex, last)))
        for left in _triangulate(vertices[: pos + 1]):
            for right in _triangulate(vertices[pos:]):
                result.append(frozenset(own) | left | right)
    return result


@lru_cache(maxsize=None)
def _triangulations(n: int) -> tuple[Subdivision, ...]:
    found = [Subdivision(n, diags) for diags in _triangulate(tuple(range(1, n + 1)))]
    return tuple(sorted(found, key=Subdivision.sort_key))


def enumerate_triangulations(n: int) -> list[Triangulation]:
    """枚举 n 边形的全部三角剖分

    结果按排序后的对角线列表取字典序，个数为 Catalan(n-2)

    Raises:
        InvalidInputError: n < 4
    """
    check_polygon(n)
    return list(_triangulations(n))


@lru_cache(maxsize=None)
def _subdivisions(n: int) -> tuple[Subdivision, ...]:
    diags = _diagonals(n)
    found: list[Subdivision] = []

    def extend(start: int, chosen: list[Diagonal]) -> None:
        found.append(Subdivision(n, frozenset(chosen)))
        for idx in range(start, len(diags)):
            d = diags[idx]
            if all(not crosses(d, c) for c in chosen):
                chosen.append(d)
                extend(idx + 1, chosen)
                chosen.pop()

    extend(0, [])
    return tuple(sorted(found, key=Subdivision.sort_key))


def enumerate_subdivisions(n: int) -> list[Subdivision]:
    """枚举 n 边形的全部剖分（含空剖分），即 Δ₀,ₙ 的全部面

    结果按排序后的对角线列表取字典序（空剖分在最前）

    Raises:
        InvalidInputError: n < 4
    """
    check_polygon(n)
    return list(_subdivisions(n))


def flip(t: Triangulation, d: Diagonal) -> Triangulation:
    """翻转三角剖分中的一条对角线

    Args:
        t: 三角剖分
        d: t 中的对角线

    Returns:
        Triangulation: 包含 t 去掉 d 后的唯一另一个三角剖分

    Raises:
        InvalidInputError: d 不在 t 中或 t 不是三角剖分
    """
    if not t.is_triangulation:
        raise InvalidInputError("flip requires a triangulation")
    if d not in t.diagonals:
        raise InvalidInputError(f"cannot flip {d}: not in {t}")
    rest = t.diagonals - {d}
    candidates = [
        e
        for e in _diagonals(t.n)
        if e != d and e not in rest and all(not crosses(e, r) for r in rest)
    ]
    # 去掉一条对角线后留下唯一的四边形，恰有两条对角线
    assert len(candidates) == 1, candidates
    return Subdivision(t.n, rest | {candidates[0]})


def flipped_diagonal(t: Triangulation, d: Diagonal) -> Diagonal:
    """flip(t, d) 中新出现的对角线"""
    (new,) = flip(t, d).diagonals - t.diagonals
    return new


@lru_cache(maxsize=None)
def _flip_graph(n: int) -> nx.Graph:
    graph = nx.Graph()
    for t in _triangulations(n):
        graph.add_node(t)
    for t in _triangulations(n):
        for d in t.ordered():
            graph.add_edge(t, flip(t, d), diagonal=d)
    return graph


def flip_graph(n: int) -> nx.Graph:
    """三角剖分的翻转图（结合多面体的 1-骨架）

    边属性 diagonal 记录两端三角剖分共有四边形中的一条对角线

    Raises:
        InvalidInputError: n < 4
    """
    check_polygon(n)
    return _flip_graph(n).copy()


def permutation_parity(seq: Sequence[Hashable]) -> int:
    """将 seq 排成升序所需置换的符号（+1 偶，-1 奇）"""
    items = list(seq)
    inversions = sum(
        1 for a in range(len(items)) for b in range(a + 1, len(items)) if items[a] > items[b]  # type: ignore[operator]
    )
    return -1 if inversions % 2 else 1


class SignedOrdering(NamedTuple):
    """三角剖分的定向：对角线的固定顺序与该顺序下的符号"""

    sign: int
    ordering: tuple[Diagonal, ...]


def fan_triangulation(n: int) -> Triangulation:
    """扇形三角剖分 {(1,3),(1,4),…,(1,n-1)}"""
    check_polygon(n)
    return Subdivision(n, frozenset(Diagonal(1, j) for j in range(3, n)))


def orientation_signs(
    n: int, root: Triangulation | None = None
) -> dict[Triangulation, SignedOrdering]:
    """在翻转图上广度优先传播 Δ₀,ₙ 的定向符号

    每个三角剖分的对角线按字典序排列；根（默认为扇形三角剖分）符号为 +1。
    沿翻转 D -> D' 时把 D 的有序列表中被翻转的对角线原位替换为新对角线，
    得到 D' 的一个顺序 M，在该顺序下符号取反；再换算到字典序：
    sign(D') = -sign(D) · parity(M)

    Args:
        n: 多边形边数
        root: 传播起点及其 +1 约定（可选）

    Returns:
        dict: 三角剖分 -> SignedOrdering

    Raises:
        OrientationError: 某条翻转边上符号矛盾
    """
    check_polygon(n)
    start = root if root is not None else fan_triangulation(n)
    signs: dict[Triangulation, int] = {start: 1}
    queue: deque[Triangulation] = deque([start])
    checked_edges = 0
    while queue:
        t = queue.popleft()
        order = t.ordered()
        for pos, d in enumerate(order):
            new = flipped_diagonal(t, d)
            moved = list(order)
            moved[pos] = new
            neighbour = Subdivision(n, frozenset(moved))
            expected = -signs[t] * permutation_parity(moved)
            if neighbour in signs:
                checked_edges += 1
                if signs[neighbour] != expected:
                    raise OrientationError(
                        f"sign conflict at {neighbour} via flip of {d} from {t}",
                        extra={"n": n},
                    )
            else:
                signs[neighbour] = expected
                queue.append(neighbour)
    logger.debug("Orientation propagated", n=n, triangulations=len(signs), edges=checked_edges)
    return {t: SignedOrdering(s, t.ordered()) for t, s in signs.items()}


def subdivision_pieces(s: Subdivision) -> list[tuple[int, ...]]:
    """剖分切出的子多边形（每个按循环序给出顶点）"""
    pieces: list[tuple[int, ...]] = [tuple(range(1, s.n + 1))]
    for d in s.ordered():
        for idx, piece in enumerate(pieces):
            if d.i in piece and d.j in piece:
                a, b = piece.index(d.i), piece.index(d.j)
                inner = piece[a : b + 1]
                outer = piece[b:] + piece[: a + 1]
                pieces[idx : idx + 1] = [inner, outer]
                break
    return sorted(pieces)


@dataclass(frozen=True)
class PlanarTree:
    """平面 n 叶树

    叶子 a 对应多边形的边 (a, a+1)；对角线 (i, j) 对应的内边把叶子分成
    {i, …, j-1} 与其补集。内部顶点对应剖分的子多边形，度数等于子多边形边数

    Attributes:
        n (int): 叶子数
        edges (tuple[Diagonal, ...]): 内边（按字典序）
        splits (tuple[frozenset[int], ...]): 每条内边不含叶子 n 的一侧
        degrees (tuple[int, ...]): 内部顶点的度数
    """

    n: int
    edges: tuple[Diagonal, ...]
    splits: tuple[frozenset[int], ...]
    degrees: tuple[int, ...]

    @property
    def is_cubic(self) -> bool:
        return all(deg == 3 for deg in self.degrees)


def subdivision_to_tree(s: Subdivision) -> PlanarTree:
    """剖分到平面树的双射"""
    edges = s.ordered()
    splits = tuple(frozenset(range(d.i, d.j)) for d in edges)
    degrees = tuple(len(piece) for piece in subdivision_pieces(s))
    return PlanarTree(s.n, edges, splits, degrees)


def triangulation_to_tree(t: Triangulation) -> PlanarTree:
    """三角剖分到三价平面树

    Raises:
        InvalidInputError: t 不是三角剖分
    """
    if not t.is_triangulation:
        raise InvalidInputError("triangulation_to_tree requires a triangulation")
    return subdivision_to_tree(t)


def check_permutation(alpha: Sequence[int], n: int | None = None) -> tuple[int, ...]:
    """校验 alpha 是 1..n 的排列

    Raises:
        InvalidInputError: 不是排列
    """
    alpha = tuple(int(a) for a in alpha)
    size = len(alpha) if n is None else n
    if sorted(alpha) != list(range(1, size + 1)):
        raise InvalidInputError(f"{list(alpha)} is not a permutation of 1..{size}")
    return alpha


def is_cyclic_interval(subset: frozenset[int] | set[int], alpha: Sequence[int]) -> bool:
    """subset 在循环序 alpha 中是否连续"""
    k = len(subset)
    n = len(alpha)
    if k == 0 or k == n:
        return True
    return any(
        all(alpha[(start + off) % n] in subset for off in range(k)) for start in range(n)
    )


def compatible_trees(alpha: Sequence[int]) -> list[Triangulation]:
    """同时与 1..n 和 alpha 两种循环序兼容的三价平面树（以三角剖分表示）

    Raises:
        InvalidInputError: alpha 不是排列或 n < 4
    """
    alpha = check_permutation(alpha)
    n = len(alpha)
    check_polygon(n)
    return [
        t
        for t in _triangulations(n)
        if all(is_cyclic_interval(frozenset(range(d.i, d.j)), alpha) for d in t.diagonals)
    ]


def eulerian(m: int, k: int) -> int:
    """Euler 数 E_{m,k}：1..m 的排列中恰有 k-1 个上升的个数（k = 1..m）

    Raises:
        InvalidInputError: m < 1
    """
    if m < 1:
        raise InvalidInputError(f"eulerian needs m >= 1, got {m}")
    if k < 1 or k > m:
        return 0
    ascents = k - 1
    return sum(
        (-1) ** i * comb(m + 1, i) * (ascents + 1 - i) ** m for i in range(ascents + 2)
    )


def eulerian_row(m: int) -> list[int]:
    """[E_{m,1}, …, E_{m,m}]，其和为 m!"""
    row = [eulerian(m, k) for k in range(1, m + 1)]
    assert sum(row) == factorial(m)
    return row


@dataclass(frozen=True)
class SimplicialComplex:
    """以极大面（facet）存储的单纯复形

    所有面为 facet 的子集（向下封闭隐式成立）

    Attributes:
        vertices (tuple): 顶点标签
        facets (tuple[frozenset, ...]): 极大面
    """

    vertices: tuple[Hashable, ...]
    facets: tuple[frozenset, ...]

    @classmethod
    def from_facets(
        cls, facets: Iterable[Iterable[Hashable]], vertices: Iterable[Hashable] | None = None
    ) -> "SimplicialComplex":
        """由面列表构造，自动去掉非极大面"""
        sets = {frozenset(f) for f in facets}
        maximal = [f for f in sets if not any(f < g for g in sets)]
        if vertices is None:
            labels: set[Hashable] = set().union(*maximal) if maximal else set()
            verts = tuple(sorted(labels, key=_label_key))
        else:
            verts = tuple(vertices)
        if not maximal:
            maximal = [frozenset()]
        ordered = tuple(sorted(maximal, key=lambda f: sorted(map(_label_key, f))))
        return cls(verts, ordered)

    def contains(self, face: Iterable[Hashable]) -> bool:
        """face 是否为复形中的面"""
        f = frozenset(face)
        return any(f <= g for g in self.facets)

    def compatible(self, a: Hashable, b: Hashable) -> bool:
        """两个顶点是否相容（张成一条棱）"""
        return a != b and self.contains((a, b))

    @property
    def dim(self) -> int:
        return max(len(f) for f in self.facets) - 1

    def faces(self) -> list[frozenset]:
        """全部面（含空面），按大小排列"""
        found: set[frozenset] = set()
        for f in self.facets:
            items = list(f)
            for k in range(len(items) + 1):
                found.update(frozenset(c) for c in combinations(items, k))
        return sorted(found, key=lambda f: (len(f), sorted(map(_label_key, f))))

    def to_json(self) -> dict:
        return {
            "vertices": [_label_json(v) for v in self.vertices],
            "facets": [sorted((_label_json(v) for v in f), key=str) for f in self.facets],
        }


def _label_key(v: Hashable) -> tuple:
    if isinstance(v, Diagonal):
        return (0, v.i, v.j)
    if isinstance(v, int):
        return (1, v)
    return (2, str(v))


def _label_json(v: Hashable) -> object:
    if isinstance(v, Diagonal):
        return [v.i, v.j]
    return v


def associahedron_complex(n: int) -> SimplicialComplex:
    """Δ₀,ₙ：顶点为对角线、极大面为三角剖分的单纯复形"""
    check_polygon(n)
    return SimplicialComplex.from_facets(
        (t.diagonals for t in _triangulations(n)), vertices=_diagonals(n)
    )


def link(c: SimplicialComplex, f: Iterable[Hashable]) -> SimplicialComplex:
    """面 f 的链接 lk(F) = {G : F∩G=∅, F∪G ∈ c}

    Raises:
        InvalidInputError: f 不是 c 的面
    """
    face = frozenset(f)
    if not c.contains(face):
        raise InvalidInputError(f"{sorted(face, key=_label_key)} is not a face")
    pieces = [g - face for g in c.facets if face <= g]
    vertices = sorted(set().union(*pieces), key=_label_key)
    return SimplicialComplex.from_facets(pieces, vertices=vertices)


def is_pure(c: SimplicialComplex) -> bool:
    """所有极大面维数相同"""
    return len({len(f) for f in c.facets}) == 1


def is_flag(c: SimplicialComplex) -> bool:
    """两两相容的顶点集都是面（只需检查相容图的极大团）"""
    graph = nx.Graph()
    graph.add_nodes_from(c.vertices)
    for f in c.facets:
        graph.add_edges_from(combinations(f, 2))
    return all(c.contains(clique) for clique in nx.find_cliques(graph))


def is_pseudomanifold(c: SimplicialComplex) -> bool:
    """纯且每个余维 1 面恰好包含在两个极大面中"""
    if not is_pure(c):
        return False
    top = len(c.facets[0])
    if top == 0:
        return False
    counts: dict[frozenset, int] = {}
    for g in c.facets:
        for v in g:
            ridge = g - {v}
            counts[ridge] = counts.get(ridge, 0) + 1
    return all(count == 2 for count in counts.values())
