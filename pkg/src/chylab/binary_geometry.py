"""
二元几何模块

旗复形上的一般 u 方程组 R_i = u_i + ∏_{j≁i} u_j^{a_ij} - 1：残差、沿链接限制到层、
牛顿法取样见证解、热带预簇的锥，以及内置示例（正方形、六边形、八边形、Pell、M₀,ₙ）
"""

import re
from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Mapping

import networkx as nx
import numpy as np
from structlog import get_logger

from chylab.combinatorics import (
    SimplicialComplex,
    associahedron_complex,
    crosses,
    diagonals,
    is_flag,
    link,
)
from chylab.core.exceptions import ConvergenceError, InvalidInputError

logger = get_logger()


@dataclass(frozen=True)
class UEquationSystem:
    """u 方程组

    Attributes:
        complex (SimplicialComplex): 旗单纯复形 Δ
        exponents (Mapping[tuple, int]): 有序不相容对 (i, j) -> a_ij ≥ 1
    """

    complex: SimplicialComplex
    exponents: Mapping[tuple[Hashable, Hashable], int]

    @classmethod
    def build(
        cls,
        complex_: SimplicialComplex,
        exponents: Mapping[tuple[Hashable, Hashable], int],
        *,
        require_flag: bool = True,
    ) -> "UEquationSystem":
        """构造并校验

        Raises:
            InvalidInputError: 指数与不相容关系不一致，或复形不是旗复形
        """
        vertices = complex_.vertices
        expected = {
            (i, j)
            for i in vertices
            for j in vertices
            if i != j and not complex_.compatible(i, j)
        }
        if set(exponents) != expected:
            extra = sorted(map(str, set(exponents) - expected))
            missing = sorted(map(str, expected - set(exponents)))
            raise InvalidInputError(
                "exponents must be given exactly on incompatible pairs",
                extra={"unexpected": extra, "missing": missing},
            )
        if any(a < 1 for a in exponents.values()):
            raise InvalidInputError("exponents must be positive integers")
        if require_flag and not is_flag(complex_):
            raise InvalidInputError("the simplicial complex is not flag")
        return cls(complex_, dict(exponents))

    @property
    def vertices(self) -> tuple[Hashable, ...]:
        return self.complex.vertices

    def incompatible(self, i: Hashable) -> list[tuple[Hashable, int]]:
        """顶点 i 的不相容顶点及其指数（按顶点顺序）"""
        return [(j, self.exponents[(i, j)]) for j in self.vertices if (i, j) in self.exponents]

    def incompatibility_graph(self) -> nx.DiGraph:
        """带指数权的有向不相容图（旗复形由它唯一确定）"""
        graph = nx.DiGraph()
        graph.add_nodes_from(self.vertices)
        for (i, j), a in self.exponents.items():
            graph.add_edge(i, j, a=a)
        return graph

    def to_json(self) -> dict[str, Any]:
        payload = self.complex.to_json()
        payload["exponents"] = {
            f"{_label_str(i)},{_label_str(j)}": a for (i, j), a in sorted(
                self.exponents.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1]))
            )
        }
        return payload


def _label_str(v: Hashable) -> str:
    if hasattr(v, "i") and hasattr(v, "j"):
        return f"({v.i}{v.j})"  # type: ignore[attr-defined]
    return str(v)


def residuals(sys: UEquationSystem, u: Iterable[complex]) -> np.ndarray:
    """逐个顶点的 R_i

    Raises:
        InvalidInputError: u 的长度不等于顶点数
    """
    values = np.asarray(list(u))
    if values.shape != (len(sys.vertices),):
        raise InvalidInputError(
            f"expected {len(sys.vertices)} coordinates, got {values.shape}"
        )
    index = {v: k for k, v in enumerate(sys.vertices)}
    out = np.empty(len(values), dtype=np.result_type(values.dtype, float))
    for k, i in enumerate(sys.vertices):
        product = 1.0
        for j, a in sys.incompatible(i):
            product = product * values[index[j]] ** a
        out[k] = values[k] + product - 1.0
    return out


def _jacobian(sys: UEquationSystem, values: np.ndarray) -> np.ndarray:
    index = {v: k for k, v in enumerate(sys.vertices)}
    size = len(values)
    jac = np.zeros((size, size), dtype=values.dtype)
    for k, i in enumerate(sys.vertices):
        jac[k, k] = 1.0
        terms = sys.incompatible(i)
        for j, a in terms:
            deriv = a * values[index[j]] ** (a - 1)
            for other, b in terms:
                if other != j:
                    deriv = deriv * values[index[other]] ** b
            jac[k, index[j]] += deriv
    return jac


def restrict_to_stratum(sys: UEquationSystem, face: Iterable[Hashable]) -> UEquationSystem:
    """限制到面 F 对应的层：F 上 u = 0，链接外 u = 1，剩下链接上的 u 方程组

    Raises:
        InvalidInputError: face 不是复形的面
    """
    f = frozenset(face)
    lk = link(sys.complex, f)
    keep = set(lk.vertices)
    ordered = tuple(v for v in sys.vertices if v in keep)
    restricted = SimplicialComplex.from_facets(lk.facets, vertices=ordered)
    exps = {(i, j): a for (i, j), a in sys.exponents.items() if i in keep and j in keep}
    return UEquationSystem(restricted, exps)


def same_system(a: UEquationSystem, b: UEquationSystem) -> bool:
    """两个方程组在相同标签下是否一致（与顶点顺序无关）"""
    return (
        set(a.vertices) == set(b.vertices)
        and set(a.complex.facets) == set(b.complex.facets)
        and dict(a.exponents) == dict(b.exponents)
    )


def isomorphic(a: UEquationSystem, b: UEquationSystem) -> bool:
    """旗复形上的两个方程组是否同构（带权不相容图同构）"""
    return nx.is_isomorphic(
        a.incompatibility_graph(),
        b.incompatibility_graph(),
        edge_match=lambda x, y: x["a"] == y["a"],
    )


def product_system(a: UEquationSystem, b: UEquationSystem) -> UEquationSystem:
    """乘积几何：复形取联接，方程组各自保留；顶点标签为 (0, v) 与 (1, w)"""
    verts = tuple((0, v) for v in a.vertices) + tuple((1, w) for w in b.vertices)
    facets = [
        frozenset((0, v) for v in f) | frozenset((1, w) for w in g)
        for f in a.complex.facets
        for g in b.complex.facets
    ]
    exps: dict[tuple[Hashable, Hashable], int] = {}
    exps.update({((0, i), (0, j)): e for (i, j), e in a.exponents.items()})
    exps.update({((1, i), (1, j)): e for (i, j), e in b.exponents.items()})
    return UEquationSystem(SimplicialComplex.from_facets(facets, vertices=verts), exps)


def forced_by_zero(sys: UEquationSystem, vertex: Hashable) -> list[Hashable]:
    """u_vertex = 0 时被迫等于 1 的顶点（即与 vertex 不相容的顶点）"""
    if vertex not in sys.vertices:
        raise InvalidInputError(f"unknown vertex {vertex!r}")
    return [j for j, _ in sys.incompatible(vertex)]


def sample_solution(
    sys: UEquationSystem,
    fixed: Mapping[Hashable, complex],
    seed: int | np.random.Generator = 0,
    *,
    tol: float = 1e-10,
    max_iter: int = 100,
    max_restarts: int = 20,
) -> np.ndarray:
    """固定 dim Δ + 1 个坐标后用牛顿法求其余坐标，给出数值见证解

    起点为全 0.5，失败后至多 max_restarts 次在 (0,1) 中随机重启；
    后一半重启使用复起点，以便在没有实解时找到复见证

    Args:
        sys: u 方程组
        fixed: 部分赋值 {顶点: 取值}
        seed: 随机种子
        tol: 成功判据 max|R| < tol
        max_iter: 每次重启的最大迭代数
        max_restarts: 随机重启次数

    Returns:
        np.ndarray: 按顶点顺序的完整解

    Raises:
        InvalidInputError: 固定坐标个数不是 dim Δ + 1 或含未知顶点
        ConvergenceError: 所有重启均未收敛（不构成反证）
    """
    if len(fixed) != sys.complex.dim + 1:
        raise InvalidInputError(
            f"need exactly dim+1 = {sys.complex.dim + 1} fixed coordinates, got {len(fixed)}"
        )
    unknown = [v for v in fixed if v not in sys.vertices]
    if unknown:
        raise InvalidInputError(f"unknown vertices {unknown}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    free = [k for k, v in enumerate(sys.vertices) if v not in fixed]
    base = np.zeros(len(sys.vertices), dtype=complex)
    for k, v in enumerate(sys.vertices):
        if v in fixed:
            base[k] = fixed[v]

    best = np.inf
    for attempt in range(max_restarts + 1):
        x = base.copy()
        if attempt == 0:
            x[free] = 0.5
        elif attempt <= max_restarts // 2:
            x[free] = rng.uniform(0.0, 1.0, size=len(free))
        else:
            x[free] = rng.uniform(0.0, 1.0, size=len(free)) + 1j * rng.uniform(
                -0.5, 0.5, size=len(free)
            )
        for _ in range(max_iter):
            r = residuals(sys, x)
            norm = float(np.max(np.abs(r)))
            if norm < tol:
                logger.debug("Witness found", attempt=attempt, residual=norm)
                return _clean(x)
            jac = _jacobian(sys, x)[:, free]
            step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
            x[free] = x[free] + step
            if not np.all(np.isfinite(x)):
                break
        final = residuals(sys, x)
        if np.all(np.isfinite(final)):
            norm = float(np.max(np.abs(final)))
            best = min(best, norm)
            if norm < tol:
                return _clean(x)
    logger.warning("No witness found", fixed=len(fixed), best_residual=best)
    raise ConvergenceError("Newton sampling found no witness", residual=best)


def _clean(x: np.ndarray) -> np.ndarray:
    if np.max(np.abs(x.imag)) < 1e-13:
        return x.real.copy()
    return x


def random_facet_fixing(
    sys: UEquationSystem, rng: np.random.Generator, low: float = 0.2, high: float = 0.8
) -> dict[Hashable, float]:
    """在一个随机极大面的坐标上取 (low, high) 中的随机值，作为取样的固定坐标"""
    facets = [f for f in sys.complex.facets if len(f) == sys.complex.dim + 1]
    facet = facets[int(rng.integers(len(facets)))]
    ordered = [v for v in sys.vertices if v in facet]
    return {v: float(rng.uniform(low, high)) for v in ordered}


@dataclass(frozen=True)
class Cone:
    """热带预簇中的锥 C(F) = span_{≥0}(e_i : i ∈ F)

    Attributes:
        face (frozenset): 面 F
        rays (np.ndarray): 生成射线（按顶点坐标的单位向量，每行一条）
    """

    face: frozenset
    rays: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.face)

    def contains(self, vector: np.ndarray, tol: float = 1e-12) -> bool:
        """vector 是否属于该锥：分量非负且支撑包含于 F 的坐标"""
        vector = np.asarray(vector, dtype=float)
        allowed = self.rays.sum(axis=0) > 0 if len(self.rays) else np.zeros(len(vector), bool)
        return bool(np.all(vector >= -tol) and np.all(np.abs(vector[~allowed]) <= tol))


def tropical_prevariety(sys: UEquationSystem) -> list[Cone]:
    """正热带预簇：每个面 F 给出锥 C(F)"""
    size = len(sys.vertices)
    index = {v: k for k, v in enumerate(sys.vertices)}
    cones = []
    for face in sys.complex.faces():
        rays = np.zeros((len(face), size))
        for row, v in enumerate(sorted(face, key=lambda v: index[v])):
            rays[row, index[v]] = 1.0
        cones.append(Cone(face, rays))
    return cones


def tropical_residuals(sys: UEquationSystem, vector: Iterable[float]) -> np.ndarray:
    """trop(R_i)(U) = min(U_i, Σ_j a_ij U_j)；预簇由其全为 0 定义"""
    values = np.asarray(list(vector), dtype=float)
    index = {v: k for k, v in enumerate(sys.vertices)}
    out = np.empty(len(values))
    for k, i in enumerate(sys.vertices):
        other = sum(a * values[index[j]] for j, a in sys.incompatible(i))
        out[k] = min(values[k], other)
    return out


def in_prevariety(sys: UEquationSystem, vector: Iterable[float], tol: float = 1e-12) -> bool:
    """vector 是否满足全部热带 u 方程"""
    return bool(np.all(np.abs(tropical_residuals(sys, vector)) <= tol))


def containing_face(
    sys: UEquationSystem, vector: Iterable[float], tol: float = 1e-12
) -> frozenset | None:
    """vector 所在的最小锥对应的面；不在任何锥中时返回 None"""
    values = np.asarray(list(vector), dtype=float)
    if np.any(values < -tol):
        return None
    support = frozenset(v for k, v in enumerate(sys.vertices) if values[k] > tol)
    return support if sys.complex.contains(support) else None


# ---- 内置示例 ----


def _cyclic_system(
    size: int,
    u_pattern: list[tuple[str, int, int]],
    v_pattern: list[tuple[str, int, int]],
) -> UEquationSystem:
    """u_i, v_i（i 模 size）交替排列在 2·size 边形上的方程组"""
    order = [f"{kind}{i}" for i in range(1, size + 1) for kind in ("u", "v")]
    facets = [(order[k], order[(k + 1) % len(order)]) for k in range(len(order))]
    exps: dict[tuple[Hashable, Hashable], int] = {}
    for i in range(1, size + 1):
        for kind, pattern in (("u", u_pattern), ("v", v_pattern)):
            for other, shift, a in pattern:
                j = (i - 1 + shift) % size + 1
                exps[(f"{kind}{i}", f"{other}{j}")] = a
    return UEquationSystem.build(SimplicialComplex.from_facets(facets, vertices=order), exps)


def square_system() -> UEquationSystem:
    """四边形（4-圈）上的 u₁ + u₃ = 1，u₂ + u₄ = 1"""
    facets = [(1, 2), (2, 3), (3, 4), (4, 1)]
    exps = {(1, 3): 1, (3, 1): 1, (2, 4): 1, (4, 2): 1}
    return UEquationSystem.build(SimplicialComplex.from_facets(facets, vertices=(1, 2, 3, 4)), exps)


def hexagon_system() -> UEquationSystem:
    """u_i + u_{i+1} v_{i+1} u_{i+2} = 1，v_i + v_{i+1} u_{i+2}² v_{i+2} = 1（模 3）"""
    return _cyclic_system(
        3,
        [("u", 1, 1), ("v", 1, 1), ("u", 2, 1)],
        [("v", 1, 1), ("u", 2, 2), ("v", 2, 1)],
    )


def octagon_system() -> UEquationSystem:
    """u_i + u_{i+1} v_{i+1} u_{i+2}² v_{i+2} u_{i+3} = 1，
    v_i + v_{i+1} u_{i+2}³ v_{i+2}² u_{i+3}³ v_{i+3} = 1（模 4）"""
    return _cyclic_system(
        4,
        [("u", 1, 1), ("v", 1, 1), ("u", 2, 2), ("v", 2, 1), ("u", 3, 1)],
        [("v", 1, 1), ("u", 2, 3), ("v", 2, 2), ("u", 3, 3), ("v", 3, 1)],
    )


_PELL3_FACETS = [
    "123", "124", "135", "147", "157", "236",
    "246", "358", "368", "468", "478", "578",
]
_PELL3_INCOMPATIBLE = {
    1: (6, 8),
    2: (5, 7, 8),
    3: (4, 7),
    4: (3, 5),
    5: (2, 4, 6),
    6: (1, 5, 7),
    7: (2, 3, 6),
    8: (1, 2),
}


def pell3_system() -> UEquationSystem:
    """8 个顶点、12 个三角形面的 Pell 型方程组（是否为二元几何尚属未知）"""
    facets = [tuple(int(c) for c in f) for f in _PELL3_FACETS]
    exps = {(i, j): 1 for i, others in _PELL3_INCOMPATIBLE.items() for j in others}
    return UEquationSystem.build(
        SimplicialComplex.from_facets(facets, vertices=range(1, 9)), exps
    )


def m0n_system(n: int) -> UEquationSystem:
    """M₀,ₙ 的 u 方程组：顶点为对角线，交叉对指数为 1"""
    complex_ = associahedron_complex(n)
    diags = diagonals(n)
    exps = {(d, e): 1 for d in diags for e in diags if crosses(d, e)}
    return UEquationSystem.build(complex_, exps)


def triangle_example() -> UEquationSystem:
    """三角形边界复形 {12, 13, 23}：非旗复形，方程组只有解 (0, 0, 0)"""
    complex_ = SimplicialComplex.from_facets([(1, 2), (1, 3), (2, 3)], vertices=(1, 2, 3))
    return UEquationSystem.build(complex_, {}, require_flag=False)


_M0N_PATTERN = re.compile(r"^M0n\((\d+)\)$")


def builtin(name: str) -> UEquationSystem:
    """按名称取内置方程组：square, hexagon, octagon, pell3, triangle, M0n(n)

    Raises:
        InvalidInputError: 未知名称
    """
    factories = {
        "square": square_system,
        "hexagon": hexagon_system,
        "octagon": octagon_system,
        "pell3": pell3_system,
        "triangle": triangle_example,
    }
    if name in factories:
        return factories[name]()
    match = _M0N_PATTERN.match(name)
    if match:
        return m0n_system(int(match.group(1)))
    raise InvalidInputError(f"unknown builtin system {name!r}", field="name")


BUILTIN_NAMES = ("square", "hexagon", "octagon", "pell3")


def incompatible_pairs(sys: UEquationSystem) -> set[frozenset]:
    """无序不相容对"""
    return {frozenset(pair) for pair in sys.exponents}

